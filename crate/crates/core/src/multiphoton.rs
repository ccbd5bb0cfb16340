//! Cluster-like multiphoton states grown by repeated emission and electron
//! spin rotations, their entanglement and their fidelity to ideal clusters.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emission::{pure_state_concurrence, PhotonQubit};
use crate::error::{Error, Result};
use crate::optimize::{nelder_mead, NelderMeadOptions};

type C = Complex64;

pub const MAX_PHOTONS: usize = 8;

const ZERO: C = C::new(0.0, 0.0);

/// Electron qubit (most significant) followed by photons from newest to
/// oldest; bit 0 is spin up / sigma+, bit 1 is spin down / sigma-.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiphotonState {
    pub n_photons: usize,
    pub amplitudes: Vec<C>,
}

impl MultiphotonState {
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &Self) -> C {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }
}

/// pi/2 electron rotation `[[1, -1], [1, 1]] / sqrt 2` on `(up, down)`.
pub const SPIN_ROTATION: [[f64; 2]; 2] = [[FRAC_1_SQRT_2, -FRAC_1_SQRT_2], [FRAC_1_SQRT_2, FRAC_1_SQRT_2]];

fn emit(state: &[C], photons: usize, up: [C; 2], dn: [C; 2]) -> Vec<C> {
    let half = 1usize << photons;
    let mut out = vec![ZERO; 4 * half];
    for (e, pol) in [up, dn].iter().enumerate() {
        for r in 0..half {
            let a = state[e * half + r];
            out[e * 2 * half + r] = a * pol[0];
            out[e * 2 * half + half + r] = a * pol[1];
        }
    }
    out
}

fn rotate_electron(state: &mut [C]) {
    let half = state.len() / 2;
    for r in 0..half {
        let (u, d) = (state[r], state[half + r]);
        state[r] = u * SPIN_ROTATION[0][0] + d * SPIN_ROTATION[0][1];
        state[half + r] = u * SPIN_ROTATION[1][0] + d * SPIN_ROTATION[1][1];
    }
}

fn grow(n: usize, up: [C; 2], dn: [C; 2], electron: [C; 2]) -> Result<MultiphotonState> {
    if n == 0 || n > MAX_PHOTONS {
        return Err(Error::InvalidInput(format!("photon count must be in 1..={MAX_PHOTONS}, got {n}")));
    }
    let norm = electron[0].norm_sqr() + electron[1].norm_sqr();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("electron state must be normalized, norm^2 = {norm}")));
    }
    let mut state = emit(&electron, 0, up, dn);
    for m in 1..n {
        rotate_electron(&mut state);
        state = emit(&state, m, up, dn);
    }
    Ok(MultiphotonState { n_photons: n, amplitudes: state })
}

/// `n` emissions separated by pi/2 electron rotations, with the emitted
/// photon in `|+~>` (spin up) or `|-~>` (spin down).
pub fn build_cluster_state(n: usize, qubit: &PhotonQubit, electron: [C; 2]) -> Result<MultiphotonState> {
    grow(n, qubit.tilde(true), qubit.tilde(false), electron)
}

/// The same protocol with the orthogonal pair `|≈±>` of [`closest_orthogonal_basis`].
pub fn ideal_cluster_state(n: usize, qubit: &PhotonQubit, electron: [C; 2]) -> Result<MultiphotonState> {
    let (p, m) = closest_orthogonal_basis(qubit);
    grow(n, p, m, electron)
}

pub fn electron_x() -> [C; 2] {
    [C::new(FRAC_1_SQRT_2, 0.0), C::new(FRAC_1_SQRT_2, 0.0)]
}

/// Three-tangle `4 |d1 - 2 d2 + 4 d3|` of a pure three-qubit state.
pub fn three_tangle(state: &MultiphotonState) -> Result<f64> {
    if state.n_photons != 2 || state.amplitudes.len() != 8 {
        return Err(Error::InvalidInput("three-tangle needs an electron and two photons".into()));
    }
    let a = |i: usize, j: usize, k: usize| state.amplitudes[4 * i + 2 * j + k];
    let d1 = a(0, 0, 0).powi(2) * a(1, 1, 1).powi(2)
        + a(0, 0, 1).powi(2) * a(1, 1, 0).powi(2)
        + a(0, 1, 0).powi(2) * a(1, 0, 1).powi(2)
        + a(1, 0, 0).powi(2) * a(0, 1, 1).powi(2);
    let d2 = a(0, 0, 0) * a(1, 1, 1) * a(0, 1, 1) * a(1, 0, 0)
        + a(0, 0, 0) * a(1, 1, 1) * a(1, 0, 1) * a(0, 1, 0)
        + a(0, 0, 0) * a(1, 1, 1) * a(1, 1, 0) * a(0, 0, 1)
        + a(0, 1, 1) * a(1, 0, 0) * a(1, 0, 1) * a(0, 1, 0)
        + a(0, 1, 1) * a(1, 0, 0) * a(1, 1, 0) * a(0, 0, 1)
        + a(1, 0, 1) * a(0, 1, 0) * a(1, 1, 0) * a(0, 0, 1);
    let d3 = a(0, 0, 0) * a(1, 1, 0) * a(1, 0, 1) * a(0, 1, 1) + a(1, 1, 1) * a(0, 0, 1) * a(0, 1, 0) * a(1, 0, 0);
    Ok(4.0 * (d1 - 2.0 * d2 + 4.0 * d3).norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesVector {
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
}

impl StokesVector {
    /// Stokes vector of `a|+> + b|->`.
    pub fn of_state(s: [C; 2]) -> Self {
        let x = s[0].conj() * s[1];
        Self { xi1: 2.0 * x.im, xi2: s[0].norm_sqr() - s[1].norm_sqr(), xi3: 2.0 * x.re }
    }

    pub fn norm(&self) -> f64 {
        (self.xi1 * self.xi1 + self.xi2 * self.xi2 + self.xi3 * self.xi3).sqrt()
    }
}

/// Stokes vector of `|+~>` (`plus = true`) or `|-~>` in closed form.
pub fn stokes_parameters(qubit: &PhotonQubit, plus: bool) -> StokesVector {
    let s = if plus { 1.0 } else { -1.0 };
    let (a, b) = (qubit.alpha, qubit.beta);
    StokesVector { xi1: -s * b.cos() * (2.0 * a).sin(), xi2: s * (2.0 * a).cos(), xi3: b.sin() * (2.0 * a).sin() }
}

/// Rotation about axis 3 that brings both Stokes vectors into the (2, 3)
/// plane: `atan2(-xi_{1,+}, xi_{2,+})`. Finite at `alpha = ±pi/4`, where
/// `tan 2 alpha` diverges and the angle is `±pi/2`. Equal to `theta`.
pub fn stokes_rotation_angle(qubit: &PhotonQubit) -> f64 {
    let s = stokes_parameters(qubit, true);
    (-s.xi1).atan2(s.xi2)
}

/// `|≈±> = cos(theta/2)|±> - i sin(theta/2)|∓>` as amplitudes on `(|+>, |->)`.
pub fn closest_orthogonal_basis(qubit: &PhotonQubit) -> ([C; 2], [C; 2]) {
    let (s, c) = (0.5 * qubit.theta).sin_cos();
    let cross = C::new(0.0, -s);
    ([C::new(c, 0.0), cross], [cross, C::new(c, 0.0)])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterFidelity {
    /// `((1 + F_c)/2)^n`.
    pub closed_form: f64,
    /// `|<Psi_n | Psi_n^(0)>|^2` from the explicit state vectors.
    pub explicit: f64,
}

pub fn cluster_fidelity(n: usize, qubit: &PhotonQubit) -> Result<ClusterFidelity> {
    let real = build_cluster_state(n, qubit, electron_x())?;
    let ideal = ideal_cluster_state(n, qubit, electron_x())?;
    Ok(ClusterFidelity {
        closed_form: ((1.0 + qubit.fc) / 2.0).powi(n as i32),
        explicit: real.inner(&ideal).norm_sqr(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizableEntanglement {
    pub value: f64,
    /// Polar and azimuthal angles of the optimal electron measurement axis.
    pub polar: f64,
    pub azimuth: f64,
}

/// Average two-photon concurrence after measuring the electron along the
/// Bloch direction `(polar, azimuth)`.
pub fn average_photon_concurrence(state: &MultiphotonState, polar: f64, azimuth: f64) -> f64 {
    let (s, c) = (0.5 * polar).sin_cos();
    let up = [C::new(c, 0.0), C::from_polar(s, azimuth)];
    let dn = [C::from_polar(-s, -azimuth), C::new(c, 0.0)];
    [up, dn]
        .iter()
        .map(|m| {
            let proj: [C; 4] = std::array::from_fn(|r| m[0].conj() * state.amplitudes[r] + m[1].conj() * state.amplitudes[4 + r]);
            let p: f64 = proj.iter().map(|x| x.norm_sqr()).sum();
            if p < 1e-300 {
                0.0
            } else {
                // p * C(proj / sqrt p) = C(proj) since the concurrence is quadratic.
                pure_state_concurrence(&proj)
            }
        })
        .sum()
}

/// Localizable entanglement between the two photons of a three-qubit state,
/// maximized over projective electron measurements: a 180 x 180 grid over
/// the Bloch sphere followed by a simplex polish.
pub fn localizable_entanglement_two_photons(state: &MultiphotonState) -> Result<LocalizableEntanglement> {
    localizable_entanglement_grid(state, 180)
}

pub fn localizable_entanglement_grid(state: &MultiphotonState, points: usize) -> Result<LocalizableEntanglement> {
    if state.n_photons != 2 || state.amplitudes.len() != 8 {
        return Err(Error::InvalidInput("localizable entanglement needs an electron and two photons".into()));
    }
    if points < 2 {
        return Err(Error::InvalidInput("grid needs at least two points per angle".into()));
    }
    let cells: Vec<(usize, f64)> = (0..points * points)
        .into_par_iter()
        .map(|n| {
            let (i, j) = (n / points, n % points);
            let polar = PI * i as f64 / (points - 1) as f64;
            let azimuth = 2.0 * PI * j as f64 / points as f64;
            (n, average_photon_concurrence(state, polar, azimuth))
        })
        .collect();
    let &(n, _) = cells
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .expect("non-empty grid");
    let x0 = [PI * (n / points) as f64 / (points - 1) as f64, 2.0 * PI * (n % points) as f64 / points as f64];
    let step = PI / points as f64;
    let m = nelder_mead(
        |x| -average_photon_concurrence(state, x[0], x[1]),
        &x0,
        &[step, step],
        NelderMeadOptions { max_iter: 400, tol: 1e-12 },
    );
    Ok(LocalizableEntanglement { value: -m.value, polar: m.x[0], azimuth: m.x[1] })
}
