//! Trion recombination in the fast-cavity limit: photon amplitudes, decay rate,
//! emitted-photon polarization geometry and spin-photon entanglement.

use nalgebra::{Matrix2, Matrix4, SMatrix, SVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;

type C = Complex64;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Adiabatic one-photon amplitudes left behind by a decaying trion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmissionAmplitudes {
    /// Electron up with a sigma+ photon.
    pub up_plus: C,
    /// Electron up with a sigma- photon.
    pub up_minus: C,
    /// Electron down with a sigma+ photon.
    pub down_plus: C,
    /// Electron down with a sigma- photon.
    pub down_minus: C,
}

pub fn emission_amplitudes(params: &SystemParams, psi_t_up: C, psi_t_dn: C) -> Result<EmissionAmplitudes> {
    params.require_fast_cavity()?;
    let z = c(params.detuning(), params.kappa);
    let den = z * z - params.delta * params.delta;
    if den.norm() < 1e-12 {
        return Err(Error::SingularParams("(omega_0 - omega_c + i kappa)^2 - Delta^2 vanishes".into()));
    }
    let g = params.g;
    Ok(EmissionAmplitudes {
        up_plus: g * z * psi_t_up / den,
        up_minus: g * params.delta * psi_t_up / den,
        down_minus: g * z * psi_t_dn / den,
        down_plus: g * params.delta * psi_t_dn / den,
    })
}

/// `(<c_+^dag c_+>, <c_-^dag c_->)`.
pub fn photon_numbers(a: &EmissionAmplitudes) -> (f64, f64) {
    (
        a.up_plus.norm_sqr() + a.down_plus.norm_sqr(),
        a.up_minus.norm_sqr() + a.down_minus.norm_sqr(),
    )
}

/// Trion amplitude decay rate `gamma`; the population decays as `exp(-2 gamma t)`.
pub fn decay_rate(params: &SystemParams) -> Result<f64> {
    params.require_fast_cavity()?;
    let (g, k) = (params.g, params.kappa);
    Ok(0.5
        * [params.omega_h(), params.omega_v()]
            .iter()
            .map(|w| g * g * k / ((params.omega_0 - w).powi(2) + k * k))
            .sum::<f64>())
}

/// Polarization geometry of the emitted photon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonQubit {
    pub alpha: f64,
    pub beta: f64,
    /// Angle of the closest orthogonal basis, in `(-pi, pi]`.
    pub theta: f64,
    /// Overlap factor `sqrt(1 - sin^2 2alpha sin^2 beta)`.
    pub fc: f64,
}

impl PhotonQubit {
    pub fn from_angles(alpha: f64, beta: f64, theta: f64) -> Self {
        let s = (2.0 * alpha).sin() * beta.sin();
        Self { alpha, beta, theta, fc: (1.0 - s * s).max(0.0).sqrt() }
    }

    /// `|+~>` (`plus = true`) or `|-~>` as amplitudes on `(|+>, |->)`:
    /// `cos a |+-> - i sin a e^{i b} |-+>`.
    pub fn tilde(&self, plus: bool) -> [C; 2] {
        let main = c(self.alpha.cos(), 0.0);
        let cross = c(0.0, -self.alpha.sin()) * C::from_polar(1.0, self.beta);
        if plus {
            [main, cross]
        } else {
            [cross, main]
        }
    }

    /// `<+~|-~> = sin 2a sin b` (real).
    pub fn overlap(&self) -> f64 {
        (2.0 * self.alpha).sin() * self.beta.sin()
    }
}

pub fn photon_state_angles(params: &SystemParams) -> Result<PhotonQubit> {
    params.validate()?;
    let (d, k, delta) = (params.detuning(), params.kappa, params.delta);
    let alpha = (delta / (d * d + k * k).sqrt()).atan();
    let beta = (d / k).atan();
    let theta = (2.0 * k * delta).atan2(d * d + k * k - delta * delta);
    Ok(PhotonQubit::from_angles(alpha, beta, theta))
}

/// Trion pseudospin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrionSpin {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
}

impl TrionSpin {
    pub fn from_amplitudes(psi_up: C, psi_dn: C) -> Self {
        let x = psi_up.conj() * psi_dn;
        Self { jx: x.re, jy: x.im, jz: 0.5 * (psi_up.norm_sqr() - psi_dn.norm_sqr()) }
    }

    /// From a trion density matrix in the `(up, down)` basis.
    pub fn from_density(rho: &Matrix2<C>) -> Self {
        let x = rho[(1, 0)];
        Self { jx: x.re, jy: x.im, jz: 0.5 * (rho[(0, 0)].re - rho[(1, 1)].re) }
    }

    pub fn in_plane(&self) -> f64 {
        self.jx.hypot(self.jy)
    }
}

/// Pure electron-photon state on `|up,+>, |up,->, |down,+>, |down,->`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinPhotonState {
    pub amplitudes: [C; 4],
    /// `<+~|-~>`.
    pub overlap: f64,
}

impl SpinPhotonState {
    pub fn density(&self) -> Matrix4<C> {
        let v = SVector::<C, 4>::from(self.amplitudes);
        v * v.adjoint()
    }
}

/// `psi_up |up,+~> + psi_dn |down,-~>`.
pub fn spin_photon_state(psi_t_up: C, psi_t_dn: C, qubit: &PhotonQubit) -> Result<SpinPhotonState> {
    let n = psi_t_up.norm_sqr() + psi_t_dn.norm_sqr();
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput(format!("trion amplitudes must be normalized, norm^2 = {n}")));
    }
    let p = qubit.tilde(true);
    let m = qubit.tilde(false);
    Ok(SpinPhotonState {
        amplitudes: [psi_t_up * p[0], psi_t_up * p[1], psi_t_dn * m[0], psi_t_dn * m[1]],
        overlap: qubit.overlap(),
    })
}

/// `2 sqrt(J_x^2 + J_y^2) F_c`.
pub fn concurrence_analytic(spin: &TrionSpin, qubit: &PhotonQubit) -> f64 {
    2.0 * spin.in_plane() * qubit.fc
}

/// `2 |ad - bc|` for `a|00> + b|01> + c|10> + d|11>`.
pub fn pure_state_concurrence(a: &[C; 4]) -> f64 {
    2.0 * (a[0] * a[3] - a[1] * a[2]).norm()
}

fn wootters_core(rho: &Matrix4<C>) -> f64 {
    // With rho = W W^dag (W = eigenvectors scaled by sqrt eigenvalues), the
    // Wootters lambdas are the singular values of W^T (sigma_y x sigma_y) W.
    // Working with singular values avoids taking a square root of the
    // near-zero spectrum of rho rho~, which would amplify rounding noise.
    let eig = SymmetricEigen::new(*rho);
    let cutoff = 1e-14 * eig.eigenvalues.max().max(0.0);
    let w = Matrix4::from_fn(|r, col| {
        let p = eig.eigenvalues[col];
        if p > cutoff { eig.eigenvectors[(r, col)] * p.sqrt() } else { c(0.0, 0.0) }
    });
    let sign = [-1.0, 1.0, 1.0, -1.0];
    let flip = Matrix4::from_fn(|r, col| if r + col == 3 { c(sign[r], 0.0) } else { c(0.0, 0.0) });
    let tau = w.transpose() * flip * w;
    let mut lam: Vec<f64> = tau.singular_values().iter().copied().collect();
    lam.sort_by(|a, b| b.total_cmp(a));
    (lam[0] - lam[1] - lam[2] - lam[3]).max(0.0)
}

/// Wootters concurrence of a two-qubit density matrix, refusing inputs that
/// are not Hermitian, unit-trace and positive to 1e-10.
pub fn wootters_concurrence(rho: &Matrix4<C>) -> Result<f64> {
    let herm = (rho - rho.adjoint()).iter().map(|x| x.norm()).fold(0.0, f64::max);
    if herm > 1e-10 {
        return Err(Error::NotDensity(format!("Hermiticity violation {herm:.3e}")));
    }
    let tr = rho.trace();
    if (tr - c(1.0, 0.0)).norm() > 1e-10 {
        return Err(Error::NotDensity(format!("trace {tr}")));
    }
    let hermitized = (rho + rho.adjoint()) * c(0.5, 0.0);
    let min = SymmetricEigen::new(hermitized).eigenvalues.min();
    if min < -1e-10 {
        return Err(Error::NotDensity(format!("eigenvalue {min:.3e}")));
    }
    Ok(wootters_core(&hermitized))
}

/// Concurrence of an unnormalized block (e.g. the electron / one-photon
/// sector of a larger density matrix): hermitized and normalized first;
/// small negative eigenvalues from integration noise are clipped.
pub fn concurrence_of_block(block: &Matrix4<C>) -> Result<f64> {
    let tr = block.trace().re;
    if !(tr >= 1e-12) {
        return Err(Error::UndefinedConcurrence(tr));
    }
    let h = (block + block.adjoint()) * c(0.5 / tr, 0.0);
    Ok(wootters_core(&h))
}

fn check_trion_density(rho: &Matrix2<C>) -> Result<()> {
    let herm = (rho - rho.adjoint()).iter().map(|x| x.norm()).fold(0.0, f64::max);
    let tr = rho.trace();
    let min = SymmetricEigen::new((rho + rho.adjoint()) * c(0.5, 0.0)).eigenvalues.min();
    if herm > 1e-12 || (tr - c(1.0, 0.0)).norm() > 1e-10 || min < -1e-10 {
        return Err(Error::NotDensity(format!(
            "trion matrix: Hermiticity {herm:.1e}, trace {tr}, min eigenvalue {min:.1e}"
        )));
    }
    Ok(())
}

/// `G = Delta / (omega_0 - omega_c - i kappa)`.
pub fn mixing_coefficient(params: &SystemParams) -> C {
    params.delta / c(params.detuning(), -params.kappa)
}

/// Steady electron-photon density matrix (basis `|up,+>, |up,->, |down,+>,
/// |down,->`) produced by a trion with density matrix `trion` (basis
/// `up, down`), in closed form.
pub fn steady_eph_density(params: &SystemParams, trion: &Matrix2<C>) -> Result<Matrix4<C>> {
    params.require_fast_cavity()?;
    check_trion_density(trion)?;
    let gc = mixing_coefficient(params).conj();
    // Kraus-like map |T up> -> |up,+> + G^*|up,->, |T down> -> G^*|down,+> + |down,->.
    let mut k = SMatrix::<C, 4, 2>::zeros();
    k[(0, 0)] = c(1.0, 0.0);
    k[(1, 0)] = gc;
    k[(2, 1)] = gc;
    k[(3, 1)] = c(1.0, 0.0);
    let d = params.detuning();
    let p = (d * d + params.kappa.powi(2)) / (d * d + params.delta.powi(2) + params.kappa.powi(2));
    Ok(k * trion * k.adjoint() * c(p, 0.0))
}

/// Recombination source `rho_rec` feeding the electron-photon block,
/// obtained by solving the trion / electron-photon coherences in steady
/// state with the trion populations held fixed.
pub fn recombination_source(params: &SystemParams, trion: &Matrix2<C>) -> Result<Matrix4<C>> {
    params.require_fast_cavity()?;
    check_trion_density(trion)?;
    let (delta, kappa, g) = (params.delta, params.kappa, params.g);
    let mut hx = Matrix4::<C>::from_diagonal_element(c(0.0, -kappa));
    for (a, b) in [(0, 1), (2, 3)] {
        hx[(a, b)] = c(delta, 0.0);
        hx[(b, a)] = c(delta, 0.0);
    }
    let mut v = SMatrix::<C, 2, 4>::zeros();
    v[(0, 0)] = c(g, 0.0);
    v[(1, 3)] = c(g, 0.0);
    // 0 = -i d rho_TX + i rho_TX H_X^dag + i rho_TT V   (frame of omega_c)
    let lhs = hx.adjoint() - Matrix4::from_diagonal_element(c(params.detuning(), 0.0));
    let inv = lhs
        .try_inverse()
        .ok_or_else(|| Error::SingularParams("trion / photon coherence equations are singular".into()))?;
    let rho_tx = -(trion * v) * inv;
    let i = c(0.0, 1.0);
    Ok(-(v.adjoint() * rho_tx) * i + rho_tx.adjoint() * v * i)
}

/// Independent route to [`steady_eph_density`]: steady state of
/// `d rho/dt = -2 kappa rho - i [H_Delta, rho] + rho_rec`, normalized.
pub fn steady_eph_density_from_rates(params: &SystemParams, trion: &Matrix2<C>) -> Result<Matrix4<C>> {
    let rec = recombination_source(params, trion)?;
    let mut hd = Matrix4::<C>::zeros();
    for (a, b) in [(0, 1), (2, 3)] {
        hd[(a, b)] = c(params.delta, 0.0);
        hd[(b, a)] = c(params.delta, 0.0);
    }
    // Row-major vectorization: (A rho)_{rc} = sum_k A_rk rho_kc, (rho A)_{rc} = sum_k rho_rk A_kc.
    let mut l = SMatrix::<C, 16, 16>::zeros();
    let i = c(0.0, 1.0);
    for r in 0..4 {
        for col in 0..4 {
            let row = r * 4 + col;
            l[(row, row)] += c(-2.0 * params.kappa, 0.0);
            for k in 0..4 {
                l[(row, k * 4 + col)] += -i * hd[(r, k)];
                l[(row, r * 4 + k)] += i * hd[(k, col)];
            }
        }
    }
    let src = SVector::<C, 16>::from_fn(|idx, _| -rec[(idx / 4, idx % 4)]);
    let sol = l
        .lu()
        .solve(&src)
        .ok_or_else(|| Error::SingularParams("electron-photon steady state is singular".into()))?;
    let rho = Matrix4::from_fn(|r, col| sol[r * 4 + col]);
    let tr = rho.trace();
    Ok(rho / tr)
}
