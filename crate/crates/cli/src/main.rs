//! `spinphoton`: figure data for the quantum-dot spin-photon interface.

mod commands;
mod config;
mod error;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use config::{Command, Format, InitialState, Method, RunConfig};
use error::CliError;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "spinphoton", version, about = "Spin-photon interface of a charged quantum dot in a birefringent cavity")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Semiclassical pump excitation: trion population traces.
    Excite(Opts),
    /// Emission and entanglement figures of merit for one parameter set.
    Emit(Opts),
    /// Master-equation or quantum-trajectory time evolution.
    Dynamics(Opts),
    /// Linear transmission spectrum.
    Transmission(Opts),
    /// Parameter maps over detuning and mode splitting.
    Sweep(Opts),
}

/// Every flag overrides the config key of the same name (underscores for dashes).
#[derive(Args, Default)]
struct Opts {
    /// Flat JSON config, or an earlier output file whose embedded config is reused.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Thread cap; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Sweep only: write one binary grid per quantity to `<prefix>_<quantity>.bin`.
    #[arg(long)]
    binary: Option<PathBuf>,

    #[arg(long, allow_hyphen_values = true)]
    omega_c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    omega_0: Option<f64>,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eps_plus_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eps_plus_im: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eps_minus_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eps_minus_im: Option<f64>,
    #[arg(long)]
    photon_cutoff: Option<usize>,
    #[arg(long, value_enum)]
    initial: Option<InitialState>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    pulse_duration: Option<f64>,
    #[arg(long)]
    kick_tolerance: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[arg(long)]
    n_traj: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Closed-form excitation amplitudes (resonant trion only).
    #[arg(long)]
    analytic: bool,
    #[arg(long, allow_hyphen_values = true)]
    omega_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    omega_max: Option<f64>,
    #[arg(long)]
    omega_points: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    det_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    det_max: Option<f64>,
    #[arg(long)]
    det_count: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    delta_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta_max: Option<f64>,
    #[arg(long)]
    delta_count: Option<usize>,
    /// Comma-separated subset of N_tr_max, Fc, concurrence, tau.
    #[arg(long, alias = "quantity")]
    quantities: Option<String>,
    #[arg(long)]
    amplitude_points: Option<usize>,
    #[arg(long)]
    phase_points: Option<usize>,
    #[arg(long)]
    optimizer_seeds: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    opt_tol: Option<f64>,
    /// Fixed relative pump phase, or `free`.
    #[arg(long, allow_hyphen_values = true)]
    phase: Option<String>,
    #[arg(long)]
    n_photons: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl Opts {
    /// Flag values as a flat JSON object.
    fn overrides(&self) -> Result<Map<String, Value>, CliError> {
        let mut m = Map::new();
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        put("omega_c", self.omega_c.map(|v| json!(v)));
        put("delta", self.delta.map(|v| json!(v)));
        put("omega_0", self.omega_0.map(|v| json!(v)));
        put("g", self.g.map(|v| json!(v)));
        put("kappa", self.kappa.map(|v| json!(v)));
        put("eps_plus_re", self.eps_plus_re.map(|v| json!(v)));
        put("eps_plus_im", self.eps_plus_im.map(|v| json!(v)));
        put("eps_minus_re", self.eps_minus_re.map(|v| json!(v)));
        put("eps_minus_im", self.eps_minus_im.map(|v| json!(v)));
        put("photon_cutoff", self.photon_cutoff.map(|v| json!(v)));
        put("initial", self.initial.map(|v| json!(v)));
        put("t_end", self.t_end.map(|v| json!(v)));
        put("dt", self.dt.map(|v| json!(v)));
        put("pulse_duration", self.pulse_duration.map(|v| json!(v)));
        put("kick_tolerance", self.kick_tolerance.map(|v| json!(v)));
        put("method", self.method.map(|v| json!(v)));
        put("n_traj", self.n_traj.map(|v| json!(v)));
        put("seed", self.seed.map(|v| json!(v)));
        put("analytic", self.analytic.then_some(json!(true)));
        put("omega_min", self.omega_min.map(|v| json!(v)));
        put("omega_max", self.omega_max.map(|v| json!(v)));
        put("omega_points", self.omega_points.map(|v| json!(v)));
        put("det_min", self.det_min.map(|v| json!(v)));
        put("det_max", self.det_max.map(|v| json!(v)));
        put("det_count", self.det_count.map(|v| json!(v)));
        put("delta_min", self.delta_min.map(|v| json!(v)));
        put("delta_max", self.delta_max.map(|v| json!(v)));
        put("delta_count", self.delta_count.map(|v| json!(v)));
        put("quantities", self.quantities.clone().map(Value::String));
        put("amplitude_points", self.amplitude_points.map(|v| json!(v)));
        put("phase_points", self.phase_points.map(|v| json!(v)));
        put("optimizer_seeds", self.optimizer_seeds.map(|v| json!(v)));
        put("max_iter", self.max_iter.map(|v| json!(v)));
        put("opt_tol", self.opt_tol.map(|v| json!(v)));
        put("n_photons", self.n_photons.map(|v| json!(v)));
        put("format", self.format.map(|v| json!(v)));
        if let Some(p) = &self.phase {
            let v = if p.eq_ignore_ascii_case("free") {
                Value::Null
            } else {
                json!(p.parse::<f64>().map_err(|_| CliError::Config(format!("phase must be a number or `free`, got {p:?}")))?)
            };
            m.insert("phase".into(), v);
        }
        Ok(m)
    }

    /// Defaults < config file < flags.
    fn resolve(&self, command: Command) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::defaults(command);
        if let Some(path) = &self.config {
            cfg = cfg.with_overrides(&config::load_config_file(path)?)?;
        }
        cfg.with_overrides(&self.overrides()?)
    }
}

fn render(cfg: &RunConfig, out: &commands::Output) -> String {
    match cfg.format {
        Format::Csv => {
            let mut s = format!("# spinphoton {VERSION}\n# config {}\n", cfg.canonical());
            for note in &out.notes {
                s.push_str(&format!("# {note}\n"));
            }
            s.push_str(&out.csv);
            s
        }
        Format::Json => {
            let config: Value = serde_json::from_str(&cfg.canonical()).expect("canonical config is JSON");
            let doc = json!({
                "meta": { "tool": "spinphoton", "version": VERSION, "config": config, "notes": out.notes },
                "data": out.json,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("output serializes");
            s.push('\n');
            s
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (command, opts) = match &cli.command {
        Sub::Excite(o) => (Command::Excite, o),
        Sub::Emit(o) => (Command::Emit, o),
        Sub::Dynamics(o) => (Command::Dynamics, o),
        Sub::Transmission(o) => (Command::Transmission, o),
        Sub::Sweep(o) => (Command::Sweep, o),
    };
    if opts.workers == Some(0) {
        return Err(CliError::Config("--workers must be >= 1".into()));
    }
    let cfg = opts.resolve(command)?;
    let out = match command {
        Command::Excite => commands::excite(&cfg)?,
        Command::Emit => commands::emit(&cfg)?,
        Command::Dynamics => commands::dynamics(&cfg, opts.workers)?,
        Command::Transmission => commands::transmission(&cfg)?,
        Command::Sweep => commands::sweep(&cfg, opts.workers)?,
    };
    let text = render(&cfg, &out);
    let io_err = |p: &std::path::Path, e: std::io::Error| CliError::Config(format!("cannot write {}: {e}", p.display()));
    match &opts.output {
        Some(path) => std::fs::write(path, text).map_err(|e| io_err(path, e))?,
        None => match std::io::stdout().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(io_err(std::path::Path::new("stdout"), e)),
            _ => {}
        },
    }
    if let Some(prefix) = &opts.binary {
        for (suffix, bytes) in &out.side_files {
            let mut name = prefix.clone().into_os_string();
            name.push(format!("_{suffix}"));
            let path = PathBuf::from(name);
            std::fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
