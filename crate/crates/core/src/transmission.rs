//! Continuous-wave transmission of the birefringent cavity with the dot in
//! linear response (input-output theory).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::number;
use crate::params::SystemParams;

type C = Complex64;

const I: C = C::new(0.0, 1.0);

/// Electron spin the probe sees; spin down swaps the roles of sigma+ and sigma-.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElectronSpin {
    Up,
    Down,
}

/// `(t0, t1)`: empty-cavity and dot-coupled single-mode transmissions.
/// At `omega = omega_0` the dot term diverges and `t1 = 0` (for `g != 0`).
pub fn bare_transmissions(params: &SystemParams, omega: f64) -> Result<(C, C)> {
    params.validate()?;
    let k = params.kappa;
    let z = C::new(omega - params.omega_c, k);
    let t0 = I * k / z;
    let t1 = if params.g == 0.0 {
        t0
    } else if omega == params.omega_0 {
        C::new(0.0, 0.0)
    } else {
        I * k / (z - params.g * params.g / (omega - params.omega_0))
    };
    Ok((t0, t1))
}

/// `t_ab = c_b^out / c_a^in` at one probe frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionMatrix {
    pub omega: f64,
    pub t_pp: C,
    pub t_mm: C,
    /// sigma+ in, sigma- out.
    pub t_pm: C,
    /// sigma- in, sigma+ out.
    pub t_mp: C,
    /// `|1 + Delta^2 t0 t1 / kappa^2| < 1e-12`.
    pub near_singular: bool,
}

impl TransmissionMatrix {
    /// Unpolarized intensity transmission `(|t_pp|^2 + |t_pm|^2 + |t_mp|^2 + |t_mm|^2)/2`.
    pub fn unpolarized(&self) -> f64 {
        0.5 * (self.t_pp.norm_sqr() + self.t_pm.norm_sqr() + self.t_mp.norm_sqr() + self.t_mm.norm_sqr())
    }
}

/// Transmission matrix for a spin-up electron.
pub fn transmission_matrix(params: &SystemParams, omega: f64) -> Result<TransmissionMatrix> {
    transmission_matrix_for_spin(params, omega, ElectronSpin::Up)
}

pub fn transmission_matrix_for_spin(params: &SystemParams, omega: f64, spin: ElectronSpin) -> Result<TransmissionMatrix> {
    let (t0, t1) = bare_transmissions(params, omega)?;
    let r = params.delta / params.kappa;
    let den = 1.0 + r * r * t0 * t1;
    let coupled = t1 / den;
    let free = t0 / den;
    let cross = -I * r * t0 * t1 / den;
    let (t_pp, t_mm) = match spin {
        ElectronSpin::Up => (coupled, free),
        ElectronSpin::Down => (free, coupled),
    };
    Ok(TransmissionMatrix { omega, t_pp, t_mm, t_pm: cross, t_mp: cross, near_singular: den.norm() < 1e-12 })
}

/// `2001` points spanning `omega_c ± max(5 kappa, |Delta| + 5 kappa)`.
pub fn default_grid(params: &SystemParams) -> Vec<f64> {
    let half = (5.0 * params.kappa).max(params.delta.abs() + 5.0 * params.kappa);
    linspace(params.omega_c - half, params.omega_c + half, 2001)
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionSpectrum {
    pub omega: Vec<f64>,
    pub total: Vec<f64>,
    pub matrices: Vec<TransmissionMatrix>,
}

impl TransmissionSpectrum {
    /// Columns `omega,T,abs_tpp2,abs_tmm2,abs_tpm2,abs_tmp2`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("omega,T,abs_tpp2,abs_tmm2,abs_tpm2,abs_tmp2\n");
        for (t, m) in self.total.iter().zip(&self.matrices) {
            let row = [m.omega, *t, m.t_pp.norm_sqr(), m.t_mm.norm_sqr(), m.t_pm.norm_sqr(), m.t_mp.norm_sqr()];
            s.push_str(&row.map(number).join(","));
            s.push('\n');
        }
        s
    }
}

pub fn unpolarized_transmission(params: &SystemParams, omega_grid: &[f64]) -> Result<TransmissionSpectrum> {
    if omega_grid.is_empty() {
        return Err(Error::InvalidInput("frequency grid is empty".into()));
    }
    let matrices = omega_grid.iter().map(|&w| transmission_matrix(params, w)).collect::<Result<Vec<_>>>()?;
    Ok(TransmissionSpectrum {
        omega: omega_grid.to_vec(),
        total: matrices.iter().map(TransmissionMatrix::unpolarized).collect(),
        matrices,
    })
}

/// Indices of strict interior local maxima.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1)).filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1]).collect()
}

/// Shape of the narrow dot feature on a fine grid around `omega_0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FanoFeature {
    pub omega_peak: f64,
    pub t_peak: f64,
    pub omega_dip: f64,
    pub t_dip: f64,
    /// Frequency nearest `omega_0` where the spectrum crosses the empty-dot
    /// (`g = 0`) background, or `None` if it never does within the window.
    pub omega_crossing: Option<f64>,
}

pub fn fano_feature(params: &SystemParams, half_width: f64, points: usize) -> Result<FanoFeature> {
    if points < 3 || !(half_width > 0.0) {
        return Err(Error::InvalidInput("need a positive window and at least three points".into()));
    }
    let grid = linspace(params.omega_0 - half_width, params.omega_0 + half_width, points);
    let bare = SystemParams { g: 0.0, ..*params };
    let excess = |w: f64| -> Result<f64> {
        Ok(transmission_matrix(params, w)?.unpolarized() - transmission_matrix(&bare, w)?.unpolarized())
    };
    let total: Vec<f64> = grid.iter().map(|&w| transmission_matrix(params, w).map(|m| m.unpolarized())).collect::<Result<_>>()?;
    let (ip, _) = total.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    let (id, _) = total.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    let diffs: Vec<f64> = grid.iter().map(|&w| excess(w)).collect::<Result<_>>()?;
    let mut crossing: Option<f64> = None;
    for i in 0..points - 1 {
        if diffs[i] == 0.0 || diffs[i].signum() != diffs[i + 1].signum() {
            let (mut a, mut b) = (grid[i], grid[i + 1]);
            let mut fa = diffs[i];
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                let fm = excess(m)?;
                if fa == 0.0 || fa.signum() != fm.signum() {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            let root = 0.5 * (a + b);
            if crossing.is_none_or(|c| (root - params.omega_0).abs() < (c - params.omega_0).abs()) {
                crossing = Some(root);
            }
        }
    }
    Ok(FanoFeature { omega_peak: grid[ip], t_peak: total[ip], omega_dip: grid[id], t_dip: total[id], omega_crossing: crossing })
}
