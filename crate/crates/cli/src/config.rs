//! Run configuration: defaults, flat JSON config files and flag overrides.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use spinphoton::excitation::{OptimizerConfig, PhaseMode, DEFAULT_T_END};
use spinphoton::sweep::{Axis, Quantity, SweepSpec};
use spinphoton::SystemParams;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Excite,
    Emit,
    Dynamics,
    Transmission,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum InitialState {
    ElectronUp,
    ElectronDown,
    ElectronX,
    TrionUp,
    TrionDown,
    TrionX,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lindblad,
    Trajectories,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// Everything that determines the content of an output file. Frequencies
/// and times are in units of `kappa` and `1/kappa` when `kappa = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub omega_c: f64,
    pub delta: f64,
    pub omega_0: f64,
    pub g: f64,
    pub kappa: f64,
    pub eps_plus_re: f64,
    pub eps_plus_im: f64,
    pub eps_minus_re: f64,
    pub eps_minus_im: f64,
    pub photon_cutoff: usize,
    pub initial: InitialState,
    pub t_end: f64,
    /// Output sampling interval (and largest integrator step for dynamics).
    pub dt: f64,
    /// Square-pulse length; 0 selects the instantaneous kick.
    pub pulse_duration: f64,
    /// Largest norm lost to Fock truncation in the kick before failing.
    pub kick_tolerance: f64,
    pub method: Method,
    pub n_traj: usize,
    pub seed: u64,
    /// Closed-form excitation amplitudes instead of integration.
    pub analytic: bool,
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub omega_points: usize,
    pub det_min: f64,
    pub det_max: f64,
    pub det_count: usize,
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_count: usize,
    /// Comma-separated subset of `N_tr_max,Fc,concurrence,tau`.
    pub quantities: String,
    pub amplitude_points: usize,
    pub phase_points: usize,
    pub optimizer_seeds: usize,
    pub max_iter: usize,
    pub opt_tol: f64,
    /// Fixed relative pump phase; `null` optimizes over it.
    pub phase: Option<f64>,
    /// Largest cluster size in the fidelity table.
    pub n_photons: usize,
    pub format: Format,
}

impl RunConfig {
    /// Documented defaults. All commands share the reference parameters
    /// (`g = 0.15`, `Delta = 1`, resonant trion, `E_+ = pi/g`) except that
    /// `dynamics` starts from an unpumped spin-up trion at cutoff 1 and
    /// `emit` from an in-plane trion.
    pub fn defaults(command: Command) -> Self {
        let opt = OptimizerConfig::default();
        let reference = SystemParams::reference_run();
        let spec = SweepSpec::default();
        let mut cfg = Self {
            command,
            omega_c: reference.omega_c,
            delta: reference.delta,
            omega_0: reference.omega_0,
            g: reference.g,
            kappa: reference.kappa,
            eps_plus_re: reference.eps_plus.re,
            eps_plus_im: reference.eps_plus.im,
            eps_minus_re: reference.eps_minus.re,
            eps_minus_im: reference.eps_minus.im,
            photon_cutoff: reference.photon_cutoff,
            initial: InitialState::ElectronUp,
            t_end: DEFAULT_T_END,
            dt: 0.05,
            pulse_duration: 0.0,
            kick_tolerance: 1e-6,
            method: Method::Lindblad,
            n_traj: 300,
            seed: 0,
            analytic: false,
            omega_min: None,
            omega_max: None,
            omega_points: 2001,
            det_min: spec.detuning.min,
            det_max: spec.detuning.max,
            det_count: spec.detuning.count,
            delta_min: spec.splitting.min,
            delta_max: spec.splitting.max,
            delta_count: spec.splitting.count,
            quantities: "N_tr_max,Fc,tau".into(),
            amplitude_points: opt.amplitude_points,
            phase_points: opt.phase_points,
            optimizer_seeds: opt.seeds,
            max_iter: opt.max_iter,
            opt_tol: opt.tol,
            phase: None,
            n_photons: 8,
            format: Format::Csv,
        };
        match command {
            Command::Dynamics => {
                cfg.initial = InitialState::TrionUp;
                cfg.eps_plus_re = 0.0;
                cfg.photon_cutoff = 1;
            }
            Command::Emit => cfg.initial = InitialState::TrionX,
            _ => {}
        }
        cfg
    }

    /// Defaults overlaid with the keys of a flat JSON object. `command` in
    /// the object is ignored; unknown keys are rejected.
    pub fn with_overrides(self, file: &Map<String, Value>) -> Result<Self, CliError> {
        let command = self.command;
        let Value::Object(mut base) = serde_json::to_value(&self).expect("config serializes") else {
            unreachable!("config is a JSON object")
        };
        for (k, v) in file {
            if !base.contains_key(k) {
                return Err(CliError::Config(format!("unknown config key {k:?}")));
            }
            if k != "command" {
                base.insert(k.clone(), v.clone());
            }
        }
        let mut cfg: Self =
            serde_json::from_value(Value::Object(base)).map_err(|e| CliError::Config(format!("config file: {e}")))?;
        cfg.command = command;
        Ok(cfg)
    }

    /// Single-line canonical JSON (fields in declaration order, shortest
    /// round-trip numbers).
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn system_params(&self) -> SystemParams {
        SystemParams {
            omega_c: self.omega_c,
            delta: self.delta,
            omega_0: self.omega_0,
            g: self.g,
            kappa: self.kappa,
            eps_plus: Complex64::new(self.eps_plus_re, self.eps_plus_im),
            eps_minus: Complex64::new(self.eps_minus_re, self.eps_minus_im),
            photon_cutoff: self.photon_cutoff,
        }
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec, CliError> {
        Ok(SweepSpec {
            detuning: Axis::new(self.det_min, self.det_max, self.det_count)?,
            splitting: Axis::new(self.delta_min, self.delta_max, self.delta_count)?,
            g: self.g,
            kappa: self.kappa,
        })
    }

    pub fn quantity_list(&self) -> Result<Vec<Quantity>, CliError> {
        self.quantities
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<Quantity>().map_err(CliError::from))
            .collect()
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            amplitude_points: self.amplitude_points,
            phase_points: self.phase_points,
            max_iter: self.max_iter,
            tol: self.opt_tol,
            seeds: self.optimizer_seeds,
            phase: self.phase.map_or(PhaseMode::Free, PhaseMode::Fixed),
            ..OptimizerConfig::default()
        }
    }
}

/// Reads a flat JSON config, a JSON output envelope, or the `# config` line
/// of a CSV output.
pub fn load_config_file(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<Map<String, Value>, CliError> {
    let trimmed = text.trim_start();
    let value: Value = if trimmed.starts_with('{') {
        let v: Value = serde_json::from_str(trimmed).map_err(|e| CliError::Config(format!("config JSON: {e}")))?;
        match v.pointer("/meta/config") {
            Some(inner) => inner.clone(),
            None => v,
        }
    } else {
        let line = text
            .lines()
            .find_map(|l| l.strip_prefix("# config "))
            .ok_or_else(|| CliError::Config("no JSON object or `# config` line found".into()))?;
        serde_json::from_str(line).map_err(|e| CliError::Config(format!("config line: {e}")))?
    };
    match value {
        Value::Object(map) => {
            if let Some((k, _)) = map.iter().find(|(_, v)| v.is_object() || v.is_array()) {
                return Err(CliError::Config(format!("config must be flat; key {k:?} is nested")));
            }
            Ok(map)
        }
        _ => Err(CliError::Config("config must be a JSON object".into())),
    }
}
