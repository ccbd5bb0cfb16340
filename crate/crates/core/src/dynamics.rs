//! Master-equation integration and Monte-Carlo wave-function trajectories.

use std::fmt::Write as _;

use nalgebra::Matrix4;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emission::concurrence_of_block;
use crate::error::{Error, Result};
use crate::format::number;
use crate::model::{
    square_pulse_hamiltonian, CompositeBasis, DensityOperator, MatterLevel, ModelOperators, Operator, Polarization,
    PureState,
};
use crate::ode::{Dopri5, OdeOptions};
use crate::params::SystemParams;

type C = Complex64;

pub const N_PLUS: &str = "n_plus";
pub const N_MINUS: &str = "n_minus";
pub const N_TR: &str = "N_tr";
pub const CONCURRENCE: &str = "concurrence";
pub const TRACE: &str = "trace";

/// Columns written by [`TimeSeries::to_csv`], in order.
pub const CSV_CHANNELS: [&str; 4] = [N_PLUS, N_MINUS, N_TR, CONCURRENCE];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub name: String,
    pub values: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
}

/// Observables sampled on a strictly increasing time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub channels: Vec<Channel>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("time grid must be strictly increasing".into()));
        }
        Ok(Self { times, channels: Vec::new() })
    }

    pub fn push(&mut self, name: &str, values: Vec<f64>, stderr: Option<Vec<f64>>) -> Result<()> {
        let n = self.times.len();
        if values.len() != n || stderr.as_ref().is_some_and(|s| s.len() != n) {
            return Err(Error::InvalidInput(format!("channel {name} length differs from the time grid")));
        }
        self.channels.retain(|c| c.name != name);
        self.channels.push(Channel { name: name.to_string(), values, stderr });
        Ok(())
    }

    pub fn channel(&self, name: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.name == name)
    }

    pub fn values(&self, name: &str) -> Option<&[f64]> {
        self.channel(name).map(|c| c.values.as_slice())
    }

    pub fn stderr(&self, name: &str) -> Option<&[f64]> {
        self.channel(name).and_then(|c| c.stderr.as_deref())
    }

    /// `t,n_plus,n_minus,N_tr,concurrence` followed by `stderr_<name>` for
    /// every standard channel carrying error bars. Missing channels are
    /// written as `NaN`.
    pub fn to_csv(&self) -> String {
        let with_err: Vec<&str> = CSV_CHANNELS.iter().copied().filter(|c| self.stderr(c).is_some()).collect();
        let mut s = String::from("t");
        for c in CSV_CHANNELS {
            let _ = write!(s, ",{c}");
        }
        for c in &with_err {
            let _ = write!(s, ",stderr_{c}");
        }
        s.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            s.push_str(&number(*t));
            for c in CSV_CHANNELS {
                let v = self.values(c).map_or(f64::NAN, |v| v[i]);
                let _ = write!(s, ",{}", number(v));
            }
            for c in &with_err {
                let _ = write!(s, ",{}", number(self.stderr(c).unwrap()[i]));
            }
            s.push('\n');
        }
        s
    }
}

/// Uniform grid `0, dt, ..., t_end` with spacing at most `dt_max`.
pub fn time_grid(t_end: f64, dt_max: f64) -> Result<Vec<f64>> {
    if !(t_end > 0.0) || !(dt_max > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidInput(format!("need t_end > 0 and dt_max > 0, got {t_end}, {dt_max}")));
    }
    let n = (t_end / dt_max).ceil().max(1.0) as usize;
    Ok((0..=n).map(|k| t_end * k as f64 / n as f64).collect())
}

/// Finite pump pulse switched on during `[0, duration)`.
#[derive(Debug, Clone)]
pub struct Drive {
    pub hamiltonian: Operator,
    pub duration: f64,
}

impl Drive {
    /// Square pulse carrying the pump amplitudes of `params`.
    pub fn square_pulse(params: &SystemParams, duration: f64) -> Result<Self> {
        let basis = CompositeBasis::new(params.photon_cutoff)?;
        Ok(Self {
            hamiltonian: square_pulse_hamiltonian(basis, params.eps_plus, params.eps_minus, duration)?,
            duration,
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct DynamicsOptions {
    pub ode: OdeOptions,
    pub drive: Option<Drive>,
    /// Thread cap for trajectory ensembles; `None` uses the global pool.
    pub workers: Option<usize>,
}

/// Indices of `|e up,+>`, `|e up,->`, `|e down,+>`, `|e down,->` (one photon).
fn eph_indices(basis: CompositeBasis) -> [usize; 4] {
    [
        basis.index(MatterLevel::ElectronUp, 1, 0),
        basis.index(MatterLevel::ElectronUp, 0, 1),
        basis.index(MatterLevel::ElectronDown, 1, 0),
        basis.index(MatterLevel::ElectronDown, 0, 1),
    ]
}

/// Electron-spin times one-photon polarization block of `rho` (unnormalized).
pub fn eph_block(rho: &DensityOperator) -> Matrix4<C> {
    let idx = eph_indices(rho.basis());
    Matrix4::from_fn(|r, c| rho.get(idx[r], idx[c]))
}

/// Wootters concurrence of the normalized electron / single-photon block.
pub fn eph_concurrence_from_rho(rho: &DensityOperator, params: &SystemParams) -> Result<f64> {
    if rho.basis().cutoff() != params.photon_cutoff {
        return Err(Error::InvalidInput("density matrix cutoff differs from params".into()));
    }
    concurrence_of_block(&eph_block(rho))
}

fn concurrence_or_nan(block: &Matrix4<C>) -> f64 {
    concurrence_of_block(block).unwrap_or(f64::NAN)
}

/// Final state and observables of a master-equation run.
#[derive(Debug, Clone)]
pub struct LindbladResult {
    pub series: TimeSeries,
    pub final_state: DensityOperator,
}

/// Integrates `d rho/dt = -i(H_nh rho - rho H_nh^dag) + sum_k C_k rho C_k^dag`
/// from `t = 0`, sampling on a uniform grid of spacing `dt_max` (also the
/// largest integrator step).
pub fn evolve_lindblad(rho0: &DensityOperator, params: &SystemParams, t_end: f64, dt_max: f64) -> Result<LindbladResult> {
    let times = time_grid(t_end, dt_max)?;
    let opts = DynamicsOptions { ode: OdeOptions::default().with_h_max(dt_max), ..Default::default() };
    evolve_lindblad_with(rho0, params, &times, &opts)
}

pub fn evolve_lindblad_with(
    rho0: &DensityOperator,
    params: &SystemParams,
    times: &[f64],
    opts: &DynamicsOptions,
) -> Result<LindbladResult> {
    params.validate()?;
    rho0.validate()?;
    let ops = ModelOperators::new(params)?;
    if rho0.basis() != ops.basis {
        return Err(Error::InvalidInput("initial state cutoff differs from params".into()));
    }
    check_grid(times)?;
    let n = ops.basis.dim();
    let driven = opts.drive.as_ref().map(|d| (ops.nonhermitian.add(&d.hamiltonian), d.duration));
    let drive_end = driven.as_ref().map_or(0.0, |d| d.1);

    let mut a = vec![C::new(0.0, 0.0); n * n];
    let mut b = vec![C::new(0.0, 0.0); n * n];
    let mut bt = vec![C::new(0.0, 0.0); n * n];
    let mut cb = vec![C::new(0.0, 0.0); n * n];
    let jumps = &ops.jumps;
    let mut rhs = |h: &Operator, rho: &[C], d: &mut [C]| {
        h.apply_dense(rho, &mut a);
        for r in 0..n {
            for c in 0..n {
                // -i A + i A^dag
                let x = a[r * n + c];
                let y = a[c * n + r].conj();
                d[r * n + c] = C::new(x.im - y.im, y.re - x.re);
            }
        }
        for cop in jumps {
            cop.apply_dense(rho, &mut b);
            for r in 0..n {
                for c in 0..n {
                    bt[r * n + c] = b[c * n + r].conj();
                }
            }
            cop.apply_dense(&bt, &mut cb);
            for (di, x) in d.iter_mut().zip(&cb) {
                *di += x;
            }
        }
    };

    let mut ode = Dopri5::new(times[0], rho0.data().to_vec(), opts.ode);
    let mut samples = Vec::with_capacity(times.len());
    for &target in times {
        while ode.t() < target {
            if let Some((hd, end)) = driven.as_ref().filter(|_| ode.t() < drive_end) {
                let mut f = |_t: f64, y: &[C], dy: &mut [C]| rhs(hd, y, dy);
                ode.step(&mut f, target.min(*end))?;
                if ode.t() >= *end {
                    let (t, y) = (ode.t(), ode.y().to_vec());
                    ode.reset(t, &y);
                }
            } else {
                let mut f = |_t: f64, y: &[C], dy: &mut [C]| rhs(&ops.nonhermitian, y, dy);
                ode.step(&mut f, target)?;
            }
        }
        samples.push(DensityOperator::from_row_major(ops.basis, ode.y().to_vec())?);
    }

    let mut series = TimeSeries::new(times.to_vec())?;
    let expect = |op: &Operator| samples.iter().map(|r| r.expect(op).re).collect::<Vec<_>>();
    series.push(N_PLUS, expect(&ops.n_plus), None)?;
    series.push(N_MINUS, expect(&ops.n_minus), None)?;
    series.push(N_TR, expect(&ops.n_trion), None)?;
    series.push(CONCURRENCE, samples.iter().map(|r| concurrence_or_nan(&eph_block(r))).collect(), None)?;
    series.push(TRACE, samples.iter().map(|r| r.trace().re).collect(), None)?;

    let last = samples.pop().expect("non-empty grid");
    let m = last.to_matrix();
    let herm = (&m + m.adjoint()) * C::new(0.5, 0.0);
    let final_state = DensityOperator::from_row_major(ops.basis, herm.transpose().iter().copied().collect())?;
    Ok(LindbladResult { series, final_state })
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() || times[0] != 0.0 {
        return Err(Error::InvalidInput("time grid must start at 0".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) || !times.iter().all(|t| t.is_finite()) {
        return Err(Error::InvalidInput("time grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// `i`-th output of the SplitMix64 generator started at `seed` (0-based).
pub fn splitmix(seed: u64, i: u64) -> u64 {
    let mut z = seed.wrapping_add(i.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub channel: Polarization,
}

/// Observables of one trajectory at one grid time (normalized state).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub n_plus: f64,
    pub n_minus: f64,
    pub n_trion: f64,
    /// Normalized electron / single-photon block `|psi><psi|`.
    pub eph: Matrix4<C>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub jumps: Vec<JumpEvent>,
    pub final_state: PureState,
    pub times: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
}

impl TrajectoryRecord {
    pub fn to_series(&self) -> Result<TimeSeries> {
        average_records(std::slice::from_ref(self), &self.times)
    }
}

fn norm_sqr(y: &[C]) -> f64 {
    y.iter().map(|a| a.norm_sqr()).sum()
}

fn snapshot(ops: &ModelOperators, idx: &[usize; 4], y: &[C]) -> Snapshot {
    let nrm = norm_sqr(y);
    let ex = |op: &Operator| op.expectation(y, y).re / nrm;
    Snapshot {
        n_plus: ex(&ops.n_plus),
        n_minus: ex(&ops.n_minus),
        n_trion: ex(&ops.n_trion),
        eph: Matrix4::from_fn(|r, c| y[idx[r]] * y[idx[c]].conj() / nrm),
    }
}

/// One Monte-Carlo wave-function trajectory on a uniform grid of spacing `dt_max`.
pub fn run_trajectory(psi0: &PureState, params: &SystemParams, t_end: f64, dt_max: f64, seed: u64) -> Result<TrajectoryRecord> {
    let times = time_grid(t_end, dt_max)?;
    let ops = ModelOperators::new(params)?;
    let opts = DynamicsOptions { ode: OdeOptions::default().with_h_max(dt_max), ..Default::default() };
    trajectory(psi0, &ops, &times, seed, &opts)
}

/// Evolves with `H_nh` between jumps; a jump fires when the squared norm falls
/// below a uniform threshold drawn in `(0, 1]`, its time located by bisection.
pub fn trajectory(
    psi0: &PureState,
    ops: &ModelOperators,
    times: &[f64],
    seed: u64,
    opts: &DynamicsOptions,
) -> Result<TrajectoryRecord> {
    check_grid(times)?;
    if psi0.basis() != ops.basis {
        return Err(Error::InvalidInput("initial state cutoff differs from params".into()));
    }
    if (psi0.norm_sqr() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput("trajectory initial state must be normalized".into()));
    }
    let n = ops.basis.dim();
    let idx = eph_indices(ops.basis);
    let driven = opts.drive.as_ref().map(|d| (ops.nonhermitian.add(&d.hamiltonian), d.duration));
    let drive_end = driven.as_ref().map_or(0.0, |d| d.1);
    let minus_i = C::new(0.0, -1.0);
    let make_rhs = |h: &Operator| {
        let h = h.clone();
        move |_t: f64, y: &[C], dy: &mut [C]| {
            h.apply(y, dy);
            dy.iter_mut().for_each(|d| *d *= minus_i);
        }
    };
    let mut f_free = make_rhs(&ops.nonhermitian);
    let mut f_drive = driven.as_ref().map(|(h, _)| make_rhs(h));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut threshold = 1.0 - rng.random::<f64>();
    let mut ode = Dopri5::new(0.0, psi0.amplitudes().to_vec(), opts.ode);
    let mut jumps = Vec::new();
    let mut snapshots = Vec::with_capacity(times.len());
    let mut scratch = vec![C::new(0.0, 0.0); n];

    for &target in times {
        while ode.t() < target {
            let (t_prev, y_prev) = (ode.t(), ode.y().to_vec());
            let in_drive = f_drive.is_some() && t_prev < drive_end;
            let limit = if in_drive { target.min(drive_end) } else { target };
            macro_rules! with_rhs {
                (|$f:ident| $body:expr) => {
                    if in_drive {
                        let $f = f_drive.as_mut().unwrap();
                        $body
                    } else {
                        let $f = &mut f_free;
                        $body
                    }
                };
            }
            with_rhs!(|f| ode.step(f, limit))?;
            if in_drive && ode.t() >= drive_end {
                let (t, y) = (ode.t(), ode.y().to_vec());
                ode.reset(t, &y);
            }
            if norm_sqr(ode.y()) >= threshold {
                continue;
            }
            let t_now = ode.t();
            ode.reset(t_prev, &y_prev);
            let (mut lo, mut hi) = (0.0, t_now - t_prev);
            let tol = 1e-10 * t_now.max(1.0);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                let y = with_rhs!(|f| ode.probe(f, mid));
                if norm_sqr(&y) < threshold {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let y = with_rhs!(|f| ode.probe(f, hi));
            let t_jump = t_prev + hi;
            let weights: Vec<f64> = ops
                .jumps
                .iter()
                .map(|c| {
                    c.apply(&y, &mut scratch);
                    norm_sqr(&scratch)
                })
                .collect();
            let total = weights[0] + weights[1];
            if total <= 0.0 {
                return Err(Error::InvalidInput("norm decayed without any photon to emit".into()));
            }
            let k = if rng.random::<f64>() * total < weights[0] { 0 } else { 1 };
            ops.jumps[k].apply(&y, &mut scratch);
            let s = norm_sqr(&scratch).sqrt();
            scratch.iter_mut().for_each(|a| *a /= s);
            jumps.push(JumpEvent {
                time: t_jump,
                channel: if k == 0 { Polarization::Plus } else { Polarization::Minus },
            });
            ode.reset(t_jump, &scratch);
            threshold = 1.0 - rng.random::<f64>();
        }
        snapshots.push(snapshot(ops, &idx, ode.y()));
    }
    let mut final_state = PureState::from_amplitudes(ops.basis, ode.y().to_vec())?;
    final_state.normalize()?;
    Ok(TrajectoryRecord { seed, jumps, final_state, times: times.to_vec(), snapshots })
}

/// Mean and standard error over trajectories, accumulated in index order.
pub fn average_records(records: &[TrajectoryRecord], times: &[f64]) -> Result<TimeSeries> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no trajectories to average".into()));
    }
    let m = times.len();
    let mut acc = vec![[Welford::default(); 3]; m];
    let mut blocks = vec![Matrix4::<C>::zeros(); m];
    for rec in records {
        for (j, s) in rec.snapshots.iter().enumerate() {
            acc[j][0].push(s.n_plus);
            acc[j][1].push(s.n_minus);
            acc[j][2].push(s.n_trion);
            blocks[j] += s.eph;
        }
    }
    let mut series = TimeSeries::new(times.to_vec())?;
    for (k, name) in [N_PLUS, N_MINUS, N_TR].into_iter().enumerate() {
        let mean = acc.iter().map(|a| a[k].mean).collect();
        let err = acc.iter().map(|a| a[k].stderr()).collect();
        series.push(name, mean, Some(err))?;
    }
    let ntraj = records.len() as f64;
    series.push(CONCURRENCE, blocks.iter().map(|b| concurrence_or_nan(&(b / C::new(ntraj, 0.0)))).collect(), None)?;
    Ok(series)
}

#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

/// Runs `n_traj` trajectories with seeds `splitmix(seed, i)` and averages them.
pub fn average_trajectories(
    psi0: &PureState,
    params: &SystemParams,
    t_end: f64,
    dt_max: f64,
    n_traj: usize,
    seed: u64,
) -> Result<TimeSeries> {
    let times = time_grid(t_end, dt_max)?;
    let opts = DynamicsOptions { ode: OdeOptions::default().with_h_max(dt_max), ..Default::default() };
    average_trajectories_with(psi0, params, &times, n_traj, seed, &opts)
}

pub fn average_trajectories_with(
    psi0: &PureState,
    params: &SystemParams,
    times: &[f64],
    n_traj: usize,
    seed: u64,
    opts: &DynamicsOptions,
) -> Result<TimeSeries> {
    let records = run_ensemble(psi0, params, times, n_traj, seed, opts)?;
    average_records(&records, times)
}

/// All trajectory records of an ensemble, ordered by trajectory index.
pub fn run_ensemble(
    psi0: &PureState,
    params: &SystemParams,
    times: &[f64],
    n_traj: usize,
    seed: u64,
    opts: &DynamicsOptions,
) -> Result<Vec<TrajectoryRecord>> {
    if n_traj == 0 {
        return Err(Error::InvalidInput("n_traj must be >= 1".into()));
    }
    let ops = ModelOperators::new(params)?;
    let job = || {
        (0..n_traj as u64)
            .into_par_iter()
            .map(|i| trajectory(psi0, &ops, times, splitmix(seed, i), opts))
            .collect::<Result<Vec<_>>>()
    };
    match opts.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(job),
        None => job(),
    }
}

/// Least-squares fit of `y = A exp(-rate t)` through `ln y`. Returns
/// `(rate, amplitude, max relative residual)`.
pub fn fit_exponential(times: &[f64], values: &[f64]) -> Result<(f64, f64, f64)> {
    if times.len() != values.len() || times.len() < 2 || values.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidInput("exponential fit needs >= 2 positive samples".into()));
    }
    let n = times.len() as f64;
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let mt = times.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = times.iter().zip(&ly).map(|(t, y)| (t - mt) * (y - my)).sum();
    let sxx: f64 = times.iter().map(|t| (t - mt).powi(2)).sum();
    let slope = sxy / sxx;
    let amp = (my - slope * mt).exp();
    let resid = times
        .iter()
        .zip(values)
        .map(|(t, v)| ((amp * (slope * t).exp() - v) / v).abs())
        .fold(0.0, f64::max);
    Ok((-slope, amp, resid))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn start(level: MatterLevel, np: usize, nm: usize, cutoff: usize) -> PureState {
        PureState::basis_state(CompositeBasis::new(cutoff).unwrap(), level, np, nm)
    }

    #[test]
    fn empty_cavity_photon_decays_at_two_kappa() {
        let p = SystemParams { g: 0.0, delta: 0.0, ..Default::default() };
        let rho = start(MatterLevel::ElectronUp, 1, 0, 2).to_density();
        let res = evolve_lindblad(&rho, &p, 3.0, 0.1).unwrap();
        for (t, n) in res.series.times.iter().zip(res.series.values(N_PLUS).unwrap()) {
            assert!((n - (-2.0 * t).exp()).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn single_photon_beats_between_circular_modes() {
        let p = SystemParams { g: 0.0, delta: 1.0, ..Default::default() }.with_cutoff(1);
        let rho = start(MatterLevel::ElectronDown, 1, 0, 1).to_density();
        let res = evolve_lindblad(&rho, &p, 4.0, 0.05).unwrap();
        for (t, n) in res.series.times.iter().zip(res.series.values(N_PLUS).unwrap()) {
            assert!((n - t.cos().powi(2) * (-2.0 * t).exp()).abs() < 1e-7, "t={t}");
        }
        for tr in res.series.values(TRACE).unwrap() {
            assert!((tr - 1.0).abs() < 1e-8);
        }
        res.final_state.validate().unwrap();
    }

    #[test]
    fn trion_decay_law() {
        // Delta = kappa at the sweet spot: gamma = g^2 kappa / (Delta^2 + kappa^2)
        let p = SystemParams { g: 0.15, delta: 1.0, ..Default::default() };
        let gamma = 0.15f64.powi(2) / 2.0;
        let rho = start(MatterLevel::TrionUp, 0, 0, 2).to_density();
        let res = evolve_lindblad(&rho, &p, 1.0 / gamma, 1.0).unwrap();
        for (t, n) in res.series.times.iter().zip(res.series.values(N_TR).unwrap()) {
            let want = (-2.0 * gamma * t).exp();
            assert!(((n - want) / want).abs() < 0.01, "t={t}: {n} vs {want}");
        }
    }

    #[test]
    fn lindblad_stays_physical() {
        let p = SystemParams { g: 0.4, delta: 0.7, omega_0: 0.3, ..Default::default() }
            .with_pump(C::new(0.5, 0.2), C::new(0.0, 0.3));
        let b = CompositeBasis::new(2).unwrap();
        let psi = crate::model::apply_coherent_kick_with_tolerance(&PureState::electron_x(b), p.eps_plus, p.eps_minus, 1e-2)
            .unwrap()
            .state;
        let res = evolve_lindblad(&psi.to_density(), &p, 5.0, 0.5).unwrap();
        for tr in res.series.values(TRACE).unwrap() {
            assert!((tr - 1.0).abs() < 1e-8);
        }
        assert!(res.final_state.min_eigenvalue() > -1e-8);
    }

    #[test]
    fn pure_trion_gives_zero_concurrence() {
        let p = SystemParams { g: 0.15, delta: 1.0, ..Default::default() }.with_cutoff(1);
        let rho = start(MatterLevel::TrionUp, 0, 0, 1).to_density();
        let res = evolve_lindblad(&rho, &p, 10.0, 1.0).unwrap();
        for c in &res.series.values(CONCURRENCE).unwrap()[1..] {
            assert!(c.abs() < 1e-8);
        }
    }

    #[test]
    fn sweet_spot_concurrence_is_one() {
        for delta in [0.5, 1.0, 3.0] {
            let p = SystemParams { g: 0.15, delta, ..Default::default() }.with_cutoff(1);
            let b = CompositeBasis::new(1).unwrap();
            let h = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            let psi = PureState::matter_superposition(b, &[(MatterLevel::TrionUp, h), (MatterLevel::TrionDown, h)]).unwrap();
            let res = evolve_lindblad(&psi.to_density(), &p, 40.0, 1.0).unwrap();
            for c in &res.series.values(CONCURRENCE).unwrap()[1..] {
                assert!((c - 1.0).abs() < 0.02, "delta={delta}: {c}");
            }
        }
    }

    #[test]
    fn detuned_concurrence_matches_overlap_factor() {
        let p = SystemParams { g: 0.15, delta: 1.0, omega_0: 1.0, ..Default::default() }.with_cutoff(1);
        let b = CompositeBasis::new(1).unwrap();
        let h = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let psi = PureState::matter_superposition(b, &[(MatterLevel::TrionUp, h), (MatterLevel::TrionDown, h)]).unwrap();
        let res = evolve_lindblad(&psi.to_density(), &p, 40.0, 1.0).unwrap();
        let want = 5f64.sqrt() / 3.0;
        for (t, c) in res.series.times.iter().zip(res.series.values(CONCURRENCE).unwrap()) {
            if *t >= 5.0 {
                assert!((c - want).abs() < 0.01, "t={t}: {c}");
            }
        }
    }

    #[test]
    fn undefined_concurrence_for_empty_block() {
        let p = SystemParams::default();
        let rho = start(MatterLevel::ElectronUp, 0, 0, 2).to_density();
        assert!(matches!(eph_concurrence_from_rho(&rho, &p), Err(Error::UndefinedConcurrence(_))));
    }

    #[test]
    fn vacuum_trajectory_has_no_jumps() {
        let p = SystemParams { g: 0.0, ..Default::default() };
        let psi = PureState::electron_x(CompositeBasis::new(2).unwrap());
        let rec = run_trajectory(&psi, &p, 10.0, 1.0, 3).unwrap();
        assert!(rec.jumps.is_empty());
        let overlap = rec.final_state.inner(&psi).norm();
        assert!((overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn photon_jump_time_statistics() {
        let p = SystemParams { g: 0.0, delta: 0.0, ..Default::default() }.with_cutoff(1);
        let psi = start(MatterLevel::ElectronUp, 1, 0, 1);
        let ops = ModelOperators::new(&p).unwrap();
        let times = [0.0, 20.0];
        let opts = DynamicsOptions::default();
        let mut sum = 0.0;
        let n = 2000;
        for i in 0..n {
            let rec = trajectory(&psi, &ops, &times, splitmix(11, i), &opts).unwrap();
            assert_eq!(rec.jumps.len(), 1);
            assert_eq!(rec.jumps[0].channel, Polarization::Plus);
            sum += rec.jumps[0].time;
        }
        let mean = sum / n as f64;
        assert!((mean - 0.5).abs() < 0.025, "{mean}");
    }

    #[test]
    fn jump_time_hits_threshold() {
        // Norm^2 = exp(-2t) for one photon with g = 0, so t_jump = -ln(r)/2.
        let p = SystemParams { g: 0.0, delta: 0.0, ..Default::default() }.with_cutoff(1);
        let psi = start(MatterLevel::ElectronUp, 1, 0, 1);
        let ops = ModelOperators::new(&p).unwrap();
        let seed = 99;
        let rec = trajectory(&psi, &ops, &[0.0, 30.0], seed, &DynamicsOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = 1.0 - rng.random::<f64>();
        let want = -r.ln() / 2.0;
        assert!((rec.jumps[0].time - want).abs() < 1e-8 * want.max(1.0));
    }

    #[test]
    fn seeds_reproduce_bitwise() {
        let p = SystemParams { g: 0.3, delta: 1.0, ..Default::default() }.with_pump(C::new(0.8, 0.0), C::new(0.0, 0.0));
        let b = CompositeBasis::new(2).unwrap();
        let psi = crate::model::apply_coherent_kick_with_tolerance(&PureState::electron_x(b), p.eps_plus, p.eps_minus, 0.1)
            .unwrap()
            .state;
        let a = run_trajectory(&psi, &p, 5.0, 0.5, 42).unwrap();
        let c = run_trajectory(&psi, &p, 5.0, 0.5, 42).unwrap();
        assert_eq!(a, c);
        for w in a.jumps.windows(2) {
            assert!(w[1].time > w[0].time);
        }
        assert!(a.jumps.iter().all(|j| j.time > 0.0 && j.time <= 5.0));
    }

    #[test]
    fn worker_count_does_not_change_averages() {
        let p = SystemParams { g: 0.3, delta: 1.0, ..Default::default() }.with_cutoff(1);
        let psi = start(MatterLevel::TrionUp, 0, 0, 1);
        let times = time_grid(4.0, 0.5).unwrap();
        let one = DynamicsOptions { workers: Some(1), ..Default::default() };
        let three = DynamicsOptions { workers: Some(3), ..Default::default() };
        let a = average_trajectories_with(&psi, &p, &times, 40, 5, &one).unwrap();
        let b = average_trajectories_with(&psi, &p, &times, 40, 5, &three).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn single_trajectory_average_is_the_record() {
        let p = SystemParams { g: 0.3, delta: 1.0, ..Default::default() }.with_cutoff(1);
        let psi = start(MatterLevel::TrionUp, 0, 0, 1);
        let s = average_trajectories(&psi, &p, 3.0, 0.5, 1, 8).unwrap();
        let rec = run_trajectory(&psi, &p, 3.0, 0.5, splitmix(8, 0)).unwrap();
        let direct: Vec<f64> = rec.snapshots.iter().map(|x| x.n_trion).collect();
        assert_eq!(s.values(N_TR).unwrap(), direct.as_slice());
        assert!(s.stderr(N_TR).unwrap().iter().all(|&e| e == 0.0));
    }

    #[test]
    fn splitmix_reference_values() {
        // First outputs of SplitMix64 seeded with 0.
        assert_eq!(splitmix(0, 0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix(0, 1), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn exponential_fit_recovers_rate() {
        let t: Vec<f64> = (0..20).map(|k| k as f64 * 0.5).collect();
        let y: Vec<f64> = t.iter().map(|t| 0.7 * (-0.3 * t).exp()).collect();
        let (rate, amp, res) = fit_exponential(&t, &y).unwrap();
        assert!((rate - 0.3).abs() < 1e-12 && (amp - 0.7).abs() < 1e-12 && res < 1e-12);
    }

    #[test]
    fn csv_layout() {
        let mut s = TimeSeries::new(vec![0.0, 0.5]).unwrap();
        s.push(N_PLUS, vec![1.0, 0.25], Some(vec![0.0, 0.1])).unwrap();
        let csv = s.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,n_plus,n_minus,N_tr,concurrence,stderr_n_plus");
        assert_eq!(lines.next().unwrap(), "0,1,NaN,NaN,NaN,0");
        assert_eq!(lines.next().unwrap(), "0.5,0.25,NaN,NaN,NaN,0.1");
        assert!(TimeSeries::new(vec![0.0, 0.0]).is_err());
    }
}
