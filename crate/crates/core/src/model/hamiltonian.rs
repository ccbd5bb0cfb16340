use num_complex::Complex64;

use super::basis::{CompositeBasis, MatterLevel};
use super::operator::Operator;
use crate::error::Result;
use crate::params::SystemParams;

type C = Complex64;

fn re(x: f64) -> C {
    C::new(x, 0.0)
}

/// Which circular photon register an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Polarization {
    Plus,
    Minus,
}

/// Annihilation operator of the sigma+ or sigma- cavity mode.
pub fn annihilation(basis: CompositeBasis, pol: Polarization) -> Operator {
    let entries = basis.iter().filter_map(|(i, s)| {
        let (np, nm) = match pol {
            Polarization::Plus if s.n_plus > 0 => (s.n_plus - 1, s.n_minus),
            Polarization::Minus if s.n_minus > 0 => (s.n_plus, s.n_minus - 1),
            _ => return None,
        };
        let n = match pol {
            Polarization::Plus => s.n_plus,
            Polarization::Minus => s.n_minus,
        };
        Some((basis.index(s.level, np, nm), i, re((n as f64).sqrt())))
    });
    Operator::from_triplets(basis.dim(), entries)
}

pub fn photon_number(basis: CompositeBasis, pol: Polarization) -> Operator {
    Operator::from_triplets(
        basis.dim(),
        basis.iter().map(|(i, s)| {
            let n = match pol {
                Polarization::Plus => s.n_plus,
                Polarization::Minus => s.n_minus,
            };
            (i, i, re(n as f64))
        }),
    )
}

/// Projector onto a dot level (any photon content).
pub fn level_projector(basis: CompositeBasis, level: MatterLevel) -> Operator {
    Operator::from_triplets(
        basis.dim(),
        basis.iter().filter(|(_, s)| s.level == level).map(|(i, _)| (i, i, re(1.0))),
    )
}

/// Trion population `N_tr`.
pub fn trion_number(basis: CompositeBasis) -> Operator {
    level_projector(basis, MatterLevel::TrionUp).add(&level_projector(basis, MatterLevel::TrionDown))
}

/// Total excitation number: photons plus trions.
pub fn excitation_number(basis: CompositeBasis) -> Operator {
    photon_number(basis, Polarization::Plus)
        .add(&photon_number(basis, Polarization::Minus))
        .add(&trion_number(basis))
}

/// Cavity, trion and light-matter terms, written on the circular Fock basis.
///
/// The linear-mode splitting `Delta (c_H^+ c_H - c_V^+ c_V)` becomes the
/// polarization-mixing term `Delta (c_+^+ c_- + c_-^+ c_+)`. The pump is not
/// included; see [`super::kick`].
pub fn build_hamiltonian(params: &SystemParams) -> Result<Operator> {
    params.validate()?;
    let basis = CompositeBasis::new(params.photon_cutoff)?;
    let cut = basis.cutoff();
    let mut entries = Vec::new();
    for (i, s) in basis.iter() {
        let mut diag = params.omega_c * (s.n_plus + s.n_minus) as f64;
        if s.level.is_trion() {
            diag += params.omega_0;
        }
        entries.push((i, i, re(diag)));

        // c_+^dag c_- and its conjugate
        if s.n_minus > 0 && s.n_plus < cut {
            let amp = params.delta * ((s.n_minus * (s.n_plus + 1)) as f64).sqrt();
            let j = basis.index(s.level, s.n_plus + 1, s.n_minus - 1);
            entries.push((j, i, re(amp)));
            entries.push((i, j, re(amp)));
        }

        // g |t><e| c_sigma + h.c.
        let target = match s.level {
            MatterLevel::ElectronUp if s.n_plus > 0 => {
                Some((MatterLevel::TrionUp, s.n_plus - 1, s.n_minus, s.n_plus))
            }
            MatterLevel::ElectronDown if s.n_minus > 0 => {
                Some((MatterLevel::TrionDown, s.n_plus, s.n_minus - 1, s.n_minus))
            }
            _ => None,
        };
        if let Some((level, np, nm, n)) = target {
            let j = basis.index(level, np, nm);
            let amp = params.g * (n as f64).sqrt();
            entries.push((j, i, re(amp)));
            entries.push((i, j, re(amp)));
        }
    }
    Ok(Operator::from_triplets(basis.dim(), entries))
}

/// `H - i kappa (c_+^dag c_+ + c_-^dag c_-)`.
pub fn build_nonhermitian(params: &SystemParams) -> Result<Operator> {
    let h = build_hamiltonian(params)?;
    let basis = CompositeBasis::new(params.photon_cutoff)?;
    let n_tot = photon_number(basis, Polarization::Plus).add(&photon_number(basis, Polarization::Minus));
    Ok(h.add(&n_tot.scale(C::new(0.0, -params.kappa))))
}

/// Photon-escape jump operators `C_+- = sqrt(2 kappa) c_+-`.
pub fn jump_operators(params: &SystemParams) -> Result<[Operator; 2]> {
    params.validate()?;
    let basis = CompositeBasis::new(params.photon_cutoff)?;
    let s = re((2.0 * params.kappa).sqrt());
    Ok([
        annihilation(basis, Polarization::Plus).scale(s),
        annihilation(basis, Polarization::Minus).scale(s),
    ])
}

/// All operators needed by the time-evolution routines, built once.
#[derive(Debug, Clone)]
pub struct ModelOperators {
    pub basis: CompositeBasis,
    pub hamiltonian: Operator,
    pub nonhermitian: Operator,
    pub jumps: [Operator; 2],
    pub n_plus: Operator,
    pub n_minus: Operator,
    pub n_trion: Operator,
}

impl ModelOperators {
    pub fn new(params: &SystemParams) -> Result<Self> {
        let basis = CompositeBasis::new(params.photon_cutoff)?;
        Ok(Self {
            basis,
            hamiltonian: build_hamiltonian(params)?,
            nonhermitian: build_nonhermitian(params)?,
            jumps: jump_operators(params)?,
            n_plus: photon_number(basis, Polarization::Plus),
            n_minus: photon_number(basis, Polarization::Minus),
            n_trion: trion_number(basis),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::state::PureState;
    use proptest::prelude::*;

    fn params(delta: f64, g: f64, cutoff: usize) -> SystemParams {
        SystemParams { omega_c: 0.3, delta, omega_0: -0.2, g, photon_cutoff: cutoff, ..Default::default() }
    }

    #[test]
    fn coupling_matrix_element_is_g() {
        let p = params(1.0, 0.15, 2);
        let h = build_hamiltonian(&p).unwrap();
        let b = CompositeBasis::new(2).unwrap();
        let t = b.index(MatterLevel::TrionUp, 0, 0);
        let e = b.index(MatterLevel::ElectronUp, 1, 0);
        assert!((h.get(t, e) - re(0.15)).norm() < 1e-15);
        // sigma+ photons do not couple to the down branch
        let e_dn = b.index(MatterLevel::ElectronDown, 1, 0);
        let t_dn = b.index(MatterLevel::TrionDown, 0, 0);
        assert_eq!(h.get(t_dn, e_dn), re(0.0));
    }

    #[test]
    fn zero_splitting_conserves_each_circular_number() {
        let p = params(0.0, 0.2, 3);
        let h = build_hamiltonian(&p).unwrap();
        let b = CompositeBasis::new(3).unwrap();
        // With the dot attached the conserved quantities are n_+ + N(t up) and n_- + N(t down).
        let plus = photon_number(b, Polarization::Plus).add(&level_projector(b, MatterLevel::TrionUp));
        let minus = photon_number(b, Polarization::Minus).add(&level_projector(b, MatterLevel::TrionDown));
        assert!(h.commutator(&plus).max_abs() < 1e-12);
        assert!(h.commutator(&minus).max_abs() < 1e-12);
        // Empty cavity modes alone: photon numbers commute outright when g = 0.
        let h0 = build_hamiltonian(&params(0.0, 0.0, 3)).unwrap();
        assert!(h0.commutator(&photon_number(b, Polarization::Plus)).max_abs() < 1e-12);
        assert!(h0.commutator(&photon_number(b, Polarization::Minus)).max_abs() < 1e-12);
    }

    #[test]
    fn single_photon_block_splits_by_delta() {
        let p = SystemParams { omega_c: 0.0, delta: 1.0, g: 0.0, ..Default::default() };
        let h = build_hamiltonian(&p).unwrap();
        let b = CompositeBasis::new(p.photon_cutoff).unwrap();
        let i = b.index(MatterLevel::ElectronUp, 1, 0);
        let j = b.index(MatterLevel::ElectronUp, 0, 1);
        let block = nalgebra::Matrix2::new(h.get(i, i), h.get(i, j), h.get(j, i), h.get(j, j));
        let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(block).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn nonhermitian_imaginary_part_counts_photons() {
        let p = params(0.7, 0.1, 2);
        let h = build_hamiltonian(&p).unwrap();
        let hnh = build_nonhermitian(&p).unwrap();
        let diff = hnh.sub(&h);
        let b = CompositeBasis::new(2).unwrap();
        for level in MatterLevel::ALL {
            let vac = PureState::basis_state(b, level, 0, 0);
            assert_eq!(diff.expectation(vac.amplitudes(), vac.amplitudes()), re(0.0));
        }
        let one = PureState::basis_state(b, MatterLevel::ElectronUp, 1, 0);
        assert!((hnh.expectation(one.amplitudes(), one.amplitudes()).im + 1.0).abs() < 1e-15);
        let two = PureState::basis_state(b, MatterLevel::ElectronUp, 1, 1);
        assert!((hnh.expectation(two.amplitudes(), two.amplitudes()).im + 2.0).abs() < 1e-15);
    }

    #[test]
    fn jump_actions() {
        let p = params(0.5, 0.1, 2);
        let [cp, cm] = jump_operators(&p).unwrap();
        let b = CompositeBasis::new(2).unwrap();
        let one = PureState::basis_state(b, MatterLevel::ElectronUp, 1, 0);
        let out = cp.apply_vec(one.amplitudes());
        let vac = b.index(MatterLevel::ElectronUp, 0, 0);
        assert!((out[vac] - re(2f64.sqrt())).norm() < 1e-15);
        assert_eq!(out.iter().filter(|a| a.norm() > 0.0).count(), 1);
        let vacuum = PureState::basis_state(b, MatterLevel::TrionDown, 0, 0);
        assert!(cp.apply_vec(vacuum.amplitudes()).iter().all(|a| a.norm() == 0.0));
        let both = PureState::basis_state(b, MatterLevel::ElectronUp, 1, 1);
        let rate = cp.adjoint().matmul(&cp).add(&cm.adjoint().matmul(&cm));
        let v = rate.apply_vec(both.amplitudes());
        let k = b.index(MatterLevel::ElectronUp, 1, 1);
        assert!((v[k] - re(4.0)).norm() < 1e-14);
    }

    #[test]
    fn branches_only_mix_through_photon_indices() {
        let p = params(1.3, 0.2, 2);
        let h = build_hamiltonian(&p).unwrap();
        let b = CompositeBasis::new(2).unwrap();
        for (r, c, v) in h.triplets() {
            let (sr, sc) = (b.state(r), b.state(c));
            if sr.level.is_up_branch() != sc.level.is_up_branch() {
                panic!("branch mixing element {v} between {sr:?} and {sc:?}");
            }
            if sr.level == sc.level && r != c {
                // only the Delta term connects equal dot levels
                assert_eq!(sr.n_plus + sr.n_minus, sc.n_plus + sc.n_minus);
                let hop = (sr.n_plus.max(sc.n_plus) * sr.n_minus.max(sc.n_minus)) as f64;
                assert!((v.re - p.delta * hop.sqrt()).abs() < 1e-14);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn hamiltonian_hermitian(oc in -5.0f64..5.0, d in -4.0f64..4.0, o0 in -5.0f64..5.0, g in 0.0f64..2.0, cut in 1usize..4) {
            let p = SystemParams { omega_c: oc, delta: d, omega_0: o0, g, photon_cutoff: cut, ..Default::default() };
            let h = build_hamiltonian(&p).unwrap();
            prop_assert!(h.is_hermitian(1e-12));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn dissipator_identity_and_conservation(d in -4.0f64..4.0, o0 in -5.0f64..5.0, g in 0.0f64..2.0, kappa in 0.1f64..3.0, cut in 1usize..4) {
            let p = SystemParams { delta: d, omega_0: o0, g, kappa, photon_cutoff: cut, ..Default::default() };
            let hnh = build_nonhermitian(&p).unwrap();
            let [cp, cm] = jump_operators(&p).unwrap();
            let lhs = hnh.sub(&hnh.adjoint()).scale(C::new(0.0, 1.0));
            let rhs = cp.adjoint().matmul(&cp).add(&cm.adjoint().matmul(&cm));
            prop_assert!(lhs.sub(&rhs).max_abs() < 1e-12);
            let h = build_hamiltonian(&p).unwrap();
            let n = excitation_number(CompositeBasis::new(cut).unwrap());
            prop_assert!(h.commutator(&n).max_abs() < 1e-12);
        }
    }
}
