use std::fmt::Write as _;

use num_complex::Complex64;
use serde_json::{json, Value};
use spinphoton::dynamics::{average_trajectories_with, evolve_lindblad_with, time_grid, Drive, DynamicsOptions};
use spinphoton::emission::{decay_rate, photon_state_angles, pure_state_concurrence, spin_photon_state};
use spinphoton::excitation::{
    analytic_sweet_spot_amplitude, excitation_options, excitation_trace, field_photon_numbers, QDAmplitudes,
};
use spinphoton::format::number;
use spinphoton::model::{apply_coherent_kick_with_tolerance, CompositeBasis, MatterLevel, PureState};
use spinphoton::multiphoton::{build_cluster_state, cluster_fidelity, electron_x, three_tangle, MAX_PHOTONS};
use spinphoton::ode::OdeOptions;
use spinphoton::sweep::run_map;
use spinphoton::transmission::{default_grid, linspace, unpolarized_transmission};

use crate::config::{InitialState, Method, RunConfig};
use crate::error::CliError;

type C = Complex64;

/// Result of a command before rendering: CSV body, JSON payload and extra
/// metadata lines.
pub struct Output {
    pub notes: Vec<String>,
    pub csv: String,
    pub json: Value,
    /// Side files written next to the main output (name suffix, bytes).
    pub side_files: Vec<(String, Vec<u8>)>,
}

impl Output {
    fn new(csv: String, json: Value) -> Self {
        Self { notes: Vec::new(), csv, json, side_files: Vec::new() }
    }
}

fn half() -> C {
    C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
}

fn one() -> C {
    C::new(1.0, 0.0)
}

/// Electron amplitudes `(up, down)` for an electron initial state.
fn electron_amplitudes(initial: InitialState) -> Result<QDAmplitudes, CliError> {
    let z = C::new(0.0, 0.0);
    match initial {
        InitialState::ElectronUp => Ok(QDAmplitudes::electron(one(), z)),
        InitialState::ElectronDown => Ok(QDAmplitudes::electron(z, one())),
        InitialState::ElectronX => Ok(QDAmplitudes::electron_x()),
        _ => Err(CliError::Config("excitation starts from an electron state (electron_up, electron_down, electron_x)".into())),
    }
}

/// Trion amplitudes `(up, down)` for emission; electron states map onto the
/// trion they are pi-pulsed into.
fn trion_amplitudes(initial: InitialState) -> (C, C) {
    let z = C::new(0.0, 0.0);
    match initial {
        InitialState::ElectronUp | InitialState::TrionUp => (one(), z),
        InitialState::ElectronDown | InitialState::TrionDown => (z, one()),
        InitialState::ElectronX | InitialState::TrionX => (half(), half()),
    }
}

fn matter_state(basis: CompositeBasis, initial: InitialState) -> Result<PureState, CliError> {
    let levels: Vec<(MatterLevel, C)> = match initial {
        InitialState::ElectronUp => vec![(MatterLevel::ElectronUp, one())],
        InitialState::ElectronDown => vec![(MatterLevel::ElectronDown, one())],
        InitialState::ElectronX => vec![(MatterLevel::ElectronUp, half()), (MatterLevel::ElectronDown, half())],
        InitialState::TrionUp => vec![(MatterLevel::TrionUp, one())],
        InitialState::TrionDown => vec![(MatterLevel::TrionDown, one())],
        InitialState::TrionX => vec![(MatterLevel::TrionUp, half()), (MatterLevel::TrionDown, half())],
    };
    Ok(PureState::matter_superposition(basis, &levels)?)
}

pub fn excite(cfg: &RunConfig) -> Result<Output, CliError> {
    let params = cfg.system_params();
    let initial = electron_amplitudes(cfg.initial)?;
    let times = time_grid(cfg.t_end, cfg.dt)?;
    let trion: Vec<(C, C)> = if cfg.analytic {
        times.iter().map(|&t| analytic_sweet_spot_amplitude(&params, &initial, t)).collect::<Result<_, _>>()?
    } else {
        excitation_trace(&params, &initial, &times, excitation_options())?
            .into_iter()
            .map(|a| (a.psi_t_up, a.psi_t_dn))
            .collect()
    };
    let fields = times.iter().map(|&t| field_photon_numbers(&params, t)).collect::<Result<Vec<_>, _>>()?;
    let mut csv = String::from("t,N_tr,N_tr_up,N_tr_down,n_plus,n_minus\n");
    let mut cols: [Vec<f64>; 5] = Default::default();
    for ((t, (u, d)), (np, nm)) in times.iter().zip(&trion).zip(&fields) {
        let row = [u.norm_sqr() + d.norm_sqr(), u.norm_sqr(), d.norm_sqr(), *np, *nm];
        let _ = writeln!(csv, "{},{}", number(*t), row.map(number).join(","));
        for (c, v) in cols.iter_mut().zip(row) {
            c.push(v);
        }
    }
    let final_n = *cols[0].last().expect("non-empty grid");
    let mut out = Output::new(
        csv,
        json!({
            "t": times, "N_tr": cols[0], "N_tr_up": cols[1], "N_tr_down": cols[2],
            "n_plus": cols[3], "n_minus": cols[4], "final_N_tr": final_n,
        }),
    );
    out.notes.push("pump delta pulse at t = 0 (instantaneous cavity kick)".into());
    out.notes.push(format!("amplitudes {}", if cfg.analytic { "closed form" } else { "integrated" }));
    out.notes.push(format!("final N_tr {}", number(final_n)));
    Ok(out)
}

pub fn emit(cfg: &RunConfig) -> Result<Output, CliError> {
    let params = cfg.system_params();
    if cfg.n_photons == 0 || cfg.n_photons > MAX_PHOTONS {
        return Err(CliError::Config(format!("n_photons must be in 1..={MAX_PHOTONS}")));
    }
    let gamma = decay_rate(&params)?;
    let qubit = photon_state_angles(&params)?;
    let (tu, td) = trion_amplitudes(cfg.initial);
    let concurrence = pure_state_concurrence(&spin_photon_state(tu, td, &qubit)?.amplitudes);
    let tau = three_tangle(&build_cluster_state(2, &qubit, electron_x())?)?;
    let mut names = vec!["gamma", "alpha", "beta", "theta", "Fc", "concurrence", "tau"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    let mut values = vec![gamma, qubit.alpha, qubit.beta, qubit.theta, qubit.fc, concurrence, tau];
    for n in 1..=cfg.n_photons {
        names.push(format!("fidelity_{n}"));
        values.push(cluster_fidelity(n, &qubit)?.explicit);
    }
    let csv = format!(
        "{}\n{}\n",
        names.join(","),
        values.iter().map(|&v| number(v)).collect::<Vec<_>>().join(",")
    );
    let record: serde_json::Map<String, Value> = names.iter().cloned().zip(values.iter().map(|&v| json!(v))).collect();
    Ok(Output::new(csv, Value::Object(record)))
}

pub fn dynamics(cfg: &RunConfig, workers: Option<usize>) -> Result<Output, CliError> {
    let params = cfg.system_params();
    let basis = CompositeBasis::new(cfg.photon_cutoff)?;
    let times = time_grid(cfg.t_end, cfg.dt)?;
    let mut psi0 = matter_state(basis, cfg.initial)?;
    let mut notes = Vec::new();
    let drive = if cfg.pulse_duration > 0.0 {
        notes.push(format!("pump square pulse of length {}", cfg.pulse_duration));
        Some(Drive::square_pulse(&params, cfg.pulse_duration)?)
    } else {
        let kick = apply_coherent_kick_with_tolerance(&psi0, params.eps_plus, params.eps_minus, cfg.kick_tolerance)?;
        notes.push(format!("pump delta pulse at t = 0, truncation deficit {}", number(kick.deficit)));
        psi0 = kick.state;
        None
    };
    let opts = DynamicsOptions { ode: OdeOptions::default().with_h_max(cfg.dt), drive, workers };
    let series = match cfg.method {
        Method::Lindblad => evolve_lindblad_with(&psi0.to_density(), &params, &times, &opts)?.series,
        Method::Trajectories => {
            notes.push(format!("{} trajectories, seed {}", cfg.n_traj, cfg.seed));
            average_trajectories_with(&psi0, &params, &times, cfg.n_traj, cfg.seed, &opts)?
        }
    };
    let json = serde_json::to_value(&series).expect("series serializes");
    let mut out = Output::new(series.to_csv(), json);
    out.notes = notes;
    Ok(out)
}

pub fn transmission(cfg: &RunConfig) -> Result<Output, CliError> {
    let params = cfg.system_params();
    let grid = match (cfg.omega_min, cfg.omega_max) {
        (Some(a), Some(b)) => {
            if !(b > a) || cfg.omega_points < 2 {
                return Err(CliError::Config("need omega_max > omega_min and omega_points >= 2".into()));
            }
            linspace(a, b, cfg.omega_points)
        }
        (None, None) => {
            let d = default_grid(&params);
            linspace(d[0], d[d.len() - 1], cfg.omega_points)
        }
        _ => return Err(CliError::Config("set both omega_min and omega_max, or neither".into())),
    };
    let spec = unpolarized_transmission(&params, &grid)?;
    let m = &spec.matrices;
    let json = json!({
        "omega": spec.omega,
        "T": spec.total,
        "abs_tpp2": m.iter().map(|x| x.t_pp.norm_sqr()).collect::<Vec<_>>(),
        "abs_tmm2": m.iter().map(|x| x.t_mm.norm_sqr()).collect::<Vec<_>>(),
        "abs_tpm2": m.iter().map(|x| x.t_pm.norm_sqr()).collect::<Vec<_>>(),
        "abs_tmp2": m.iter().map(|x| x.t_mp.norm_sqr()).collect::<Vec<_>>(),
    });
    let mut out = Output::new(spec.to_csv(), json);
    let singular = m.iter().filter(|x| x.near_singular).count();
    if singular > 0 {
        out.notes.push(format!("{singular} grid points are near a singular response"));
    }
    Ok(out)
}

pub fn sweep(cfg: &RunConfig, workers: Option<usize>) -> Result<Output, CliError> {
    let spec = cfg.sweep_spec()?;
    let quantities = cfg.quantity_list()?;
    let grid = run_map(&spec, &quantities, &cfg.optimizer(), workers)?;
    for w in &grid.warnings {
        eprintln!("warning: cell {}: {}", w.index, w.message);
    }
    let json = serde_json::to_value(&grid).expect("grid serializes");
    let mut out = Output::new(grid.to_csv(), json);
    out.notes.push(format!("{} cell warnings", grid.warnings.len()));
    for (q, _) in &grid.maps {
        out.side_files.push((format!("{q}.bin"), grid.to_binary(*q)?));
    }
    Ok(out)
}
