//! Instantaneous delta-pulse pump.
//!
//! A pulse `E_+- delta(t)` displaces each circular mode. The phase is chosen so
//! that right after the pulse `<c_+-> = i E_+-`, which gives
//! `<c_H(0)> = i (E_+ + E_-)/sqrt 2` and `<c_V(0)> = (E_+ - E_-)/sqrt 2`.

use num_complex::Complex64;

use super::basis::CompositeBasis;
use super::hamiltonian::{annihilation, Polarization};
use super::operator::Operator;
use super::state::PureState;
use crate::error::{Error, Result};

type C = Complex64;

/// Largest tolerated norm loss from Fock truncation of the displaced state.
pub const DEFAULT_KICK_TOLERANCE: f64 = 1e-6;

/// Pulse duration used for the finite square pulse unless overridden.
pub const DEFAULT_SQUARE_PULSE: f64 = 0.003;

/// Rows `0..=cutoff` of the exact (untruncated) displacement `D(alpha)`,
/// columns `0..=cutoff`, stored row-major.
///
/// Built column by column from `D|n+1> = (a^dag - alpha^*) D|n> / sqrt(n+1)`,
/// starting at the coherent state `D|0>`. Entries are exact restrictions of the
/// infinite matrix, so the norm lost by truncation can be read off directly.
pub fn displacement_block(alpha: C, cutoff: usize) -> Vec<C> {
    let l = cutoff + 1;
    let mut d = vec![C::new(0.0, 0.0); l * l];
    let mut col = vec![C::new(0.0, 0.0); l];
    col[0] = C::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for m in 1..l {
        col[m] = col[m - 1] * alpha / (m as f64).sqrt();
    }
    for n in 0..l {
        for m in 0..l {
            d[m * l + n] = col[m];
        }
        if n + 1 < l {
            let mut next = vec![C::new(0.0, 0.0); l];
            for m in 0..l {
                let raise = if m > 0 { col[m - 1] * (m as f64).sqrt() } else { C::new(0.0, 0.0) };
                next[m] = (raise - alpha.conj() * col[m]) / ((n + 1) as f64).sqrt();
            }
            col = next;
        }
    }
    d
}

/// Outcome of a kick: the renormalized state and the truncation loss.
#[derive(Debug, Clone)]
pub struct KickResult {
    pub state: PureState,
    /// `1 - ||P D psi||^2` before renormalization.
    pub deficit: f64,
}

/// Applies the delta-pulse displacement with the default truncation tolerance.
pub fn apply_coherent_kick(state: &PureState, eps_plus: C, eps_minus: C) -> Result<PureState> {
    apply_coherent_kick_with_tolerance(state, eps_plus, eps_minus, DEFAULT_KICK_TOLERANCE).map(|k| k.state)
}

/// As [`apply_coherent_kick`], but with an explicit tolerance on the norm
/// deficit caused by Fock truncation. Within tolerance the state is
/// renormalized.
pub fn apply_coherent_kick_with_tolerance(
    state: &PureState,
    eps_plus: C,
    eps_minus: C,
    tolerance: f64,
) -> Result<KickResult> {
    if !eps_plus.is_finite() || !eps_minus.is_finite() {
        return Err(Error::InvalidParams("non-finite pump amplitude".into()));
    }
    let basis = state.basis();
    let norm0 = state.norm_sqr();
    if (norm0 - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput(format!("kick needs a normalized state, norm^2 = {norm0}")));
    }
    if eps_plus == C::new(0.0, 0.0) && eps_minus == C::new(0.0, 0.0) {
        return Ok(KickResult { state: state.clone(), deficit: 0.0 });
    }
    let i = C::new(0.0, 1.0);
    let l = basis.levels();
    let dp = displacement_block(i * eps_plus, basis.cutoff());
    let dm = displacement_block(i * eps_minus, basis.cutoff());
    let src = state.amplitudes();
    let mut out = vec![C::new(0.0, 0.0); basis.dim()];
    let mut tmp = vec![C::new(0.0, 0.0); l * l];
    for level in 0..4 {
        let block = &src[level * l * l..(level + 1) * l * l];
        // act on n_minus (fast index)
        for p in 0..l {
            for m in 0..l {
                tmp[p * l + m] = (0..l).map(|n| dm[m * l + n] * block[p * l + n]).sum();
            }
        }
        let dst = &mut out[level * l * l..(level + 1) * l * l];
        for p in 0..l {
            for m in 0..l {
                dst[p * l + m] = (0..l).map(|n| dp[p * l + n] * tmp[n * l + m]).sum();
            }
        }
    }
    let kept: f64 = out.iter().map(|a| a.norm_sqr()).sum();
    let deficit = (1.0 - kept).max(0.0);
    if deficit > tolerance {
        return Err(Error::TruncationOverflow { deficit, tolerance });
    }
    let mut kicked = PureState::from_amplitudes(basis, out)?;
    kicked.normalize()?;
    Ok(KickResult { state: kicked, deficit })
}

/// Kick applied to a density matrix, `rho -> D rho D^dag` (renormalized).
pub fn kick_density(
    rho: &super::state::DensityOperator,
    eps_plus: C,
    eps_minus: C,
    tolerance: f64,
) -> Result<super::state::DensityOperator> {
    let basis = rho.basis();
    let n = basis.dim();
    let l = basis.levels();
    let i = C::new(0.0, 1.0);
    let dp = displacement_block(i * eps_plus, basis.cutoff());
    let dm = displacement_block(i * eps_minus, basis.cutoff());
    let mut dmat = vec![C::new(0.0, 0.0); n * n];
    for j in 0..n {
        let s = basis.state(j);
        for p in 0..l {
            for m in 0..l {
                dmat[basis.index(s.level, p, m) * n + j] = dp[p * l + s.n_plus] * dm[m * l + s.n_minus];
            }
        }
    }
    let data = rho.data();
    let mut tmp = vec![C::new(0.0, 0.0); n * n];
    for r in 0..n {
        for k in 0..n {
            let a = dmat[r * n + k];
            if a == C::new(0.0, 0.0) {
                continue;
            }
            for c in 0..n {
                tmp[r * n + c] += a * data[k * n + c];
            }
        }
    }
    let mut out = vec![C::new(0.0, 0.0); n * n];
    for r in 0..n {
        for c in 0..n {
            out[r * n + c] = (0..n).map(|k| tmp[r * n + k] * dmat[c * n + k].conj()).sum();
        }
    }
    let tr: C = (0..n).map(|i| out[i * n + i]).sum();
    let deficit = 1.0 - tr.re;
    if deficit > tolerance {
        return Err(Error::TruncationOverflow { deficit, tolerance });
    }
    out.iter_mut().for_each(|x| *x /= tr.re);
    super::state::DensityOperator::from_row_major(basis, out)
}

/// Pump term switched on during a square pulse of length `duration` carrying
/// the same total area as the delta pulse. Its sign matches the kick phase
/// convention, so that the pulse tends to [`apply_coherent_kick`] as
/// `duration -> 0`.
pub fn square_pulse_hamiltonian(basis: CompositeBasis, eps_plus: C, eps_minus: C, duration: f64) -> Result<Operator> {
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::InvalidParams(format!("pulse duration must be > 0, got {duration}")));
    }
    let mut h = Operator::zeros(basis.dim());
    for (pol, eps) in [(Polarization::Plus, eps_plus), (Polarization::Minus, eps_minus)] {
        let a = annihilation(basis, pol);
        // -(E^* c + E c^dag)/T drives <c> to +iE
        let term = a.scale(-eps.conj() / duration).add(&a.adjoint().scale(-eps / duration));
        h = h.add(&term);
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::basis::MatterLevel;
    use crate::model::hamiltonian::photon_number;
    use crate::oracles;

    fn vacuum(cutoff: usize) -> PureState {
        PureState::basis_state(CompositeBasis::new(cutoff).unwrap(), MatterLevel::ElectronUp, 0, 0)
    }

    #[test]
    fn zero_pump_is_identity() {
        let s = PureState::electron_x(CompositeBasis::new(3).unwrap());
        let k = apply_coherent_kick(&s, C::new(0.0, 0.0), C::new(0.0, 0.0)).unwrap();
        assert_eq!(k, s);
    }

    #[test]
    fn coherent_mean_and_phase() {
        let s = vacuum(14);
        let b = s.basis();
        let k = apply_coherent_kick(&s, C::new(1.0, 0.0), C::new(0.0, 0.0)).unwrap();
        let np = k.expect(&photon_number(b, Polarization::Plus)).re;
        let nm = k.expect(&photon_number(b, Polarization::Minus)).re;
        assert!((np - 1.0).abs() < 1e-6, "{np}");
        assert!(nm.abs() < 1e-15);
        let c = k.expect(&annihilation(b, Polarization::Plus));
        assert!((c - C::new(0.0, 1.0)).norm() < 1e-6, "{c}");
    }

    #[test]
    fn linear_mode_fields_for_h_polarized_pump() {
        let s = vacuum(14);
        let b = s.basis();
        let e = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let k = apply_coherent_kick(&s, e, e).unwrap();
        let cp = k.expect(&annihilation(b, Polarization::Plus));
        let cm = k.expect(&annihilation(b, Polarization::Minus));
        let ch = (cp + cm) / 2f64.sqrt();
        let cv = (cp - cm) / C::new(0.0, 2f64.sqrt());
        assert!((ch.norm() - 1.0).abs() < 1e-6);
        assert!(cv.norm() < 1e-12);
    }

    #[test]
    fn overflow_detected() {
        let s = vacuum(2);
        let err = apply_coherent_kick(&s, C::new(2.0, 0.0), C::new(0.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::TruncationOverflow { .. }));
        let relaxed = apply_coherent_kick_with_tolerance(&s, C::new(2.0, 0.0), C::new(0.0, 0.0), 1.0).unwrap();
        assert!((relaxed.state.norm() - 1.0).abs() < 1e-12);
        assert!(relaxed.deficit > 0.5);
    }

    #[test]
    fn block_matches_matrix_exponential() {
        let alpha = C::new(0.4, -0.9);
        let cutoff = 10;
        let block = displacement_block(alpha, cutoff);
        let exact = oracles::displacement_by_expm(alpha, 60);
        for m in 0..=cutoff {
            for n in 0..=cutoff {
                assert!((block[m * (cutoff + 1) + n] - exact[(m, n)]).norm() < 1e-12, "({m},{n})");
            }
        }
    }

    #[test]
    fn kicked_superposition_matches_expm_per_mode() {
        let b = CompositeBasis::new(12).unwrap();
        let s = PureState::electron_x(b);
        let (ep, em) = (C::new(0.5, 0.2), C::new(-0.3, 0.4));
        let k = apply_coherent_kick(&s, ep, em).unwrap();
        let i = C::new(0.0, 1.0);
        let dp = oracles::displacement_by_expm(i * ep, 60);
        let dm = oracles::displacement_by_expm(i * em, 60);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for level in [MatterLevel::ElectronUp, MatterLevel::ElectronDown] {
            for p in 0..=12 {
                for m in 0..=12 {
                    let want = dp[(p, 0)] * dm[(m, 0)] * h;
                    assert!((k.amp(level, p, m) - want).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn density_kick_matches_state_kick() {
        let b = CompositeBasis::new(6).unwrap();
        let s = PureState::electron_x(b);
        let (ep, em) = (C::new(0.4, 0.0), C::new(0.0, -0.3));
        let ks = apply_coherent_kick(&s, ep, em).unwrap().to_density();
        let kr = kick_density(&s.to_density(), ep, em, 1e-6).unwrap();
        let err = ks.data().iter().zip(kr.data()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn square_pulse_is_hermitian() {
        let b = CompositeBasis::new(2).unwrap();
        let h = square_pulse_hamiltonian(b, C::new(1.0, 0.5), C::new(0.0, 0.2), 0.003).unwrap();
        assert!(h.is_hermitian(1e-9));
        assert!(square_pulse_hamiltonian(b, C::new(1.0, 0.0), C::new(0.0, 0.0), 0.0).is_err());
    }
}
