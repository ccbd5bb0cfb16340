use nalgebra::Matrix2;
use spinphoton::dynamics::{evolve_lindblad, fit_exponential, N_TR};
use spinphoton::emission::{
    concurrence_analytic, decay_rate, photon_state_angles, spin_photon_state, steady_eph_density, wootters_concurrence,
    TrionSpin,
};
use spinphoton::excitation::{integrate_excitation, pi_pulse_amplitudes, OptimizerConfig, QDAmplitudes};
use spinphoton::model::{CompositeBasis, MatterLevel, PureState};
use spinphoton::multiphoton::{build_cluster_state, cluster_fidelity, electron_x, three_tangle};
use spinphoton::sweep::{extract_closed_contour, run_map, Axis, Quantity, SweepSpec};
use spinphoton::SystemParams;

#[test]
fn pi_pulse_to_entangled_photon() {
    for delta in [0.5, 1.0, 2.5] {
        let base = SystemParams::new(0.1, delta, 0.0);
        let (ep, em) = pi_pulse_amplitudes(&base).unwrap();
        let params = base.with_pump(ep, em);
        let qd = integrate_excitation(&params, &QDAmplitudes::electron_x(), 20.0).unwrap();
        assert!(qd.trion_population() > 0.999, "delta={delta}: {}", qd.trion_population());

        let n = qd.trion_population().sqrt();
        let (tu, td) = (qd.psi_t_up / n, qd.psi_t_dn / n);
        let qubit = photon_state_angles(&params).unwrap();
        let state = spin_photon_state(tu, td, &qubit).unwrap();
        let wootters = wootters_concurrence(&state.density()).unwrap();
        let spin = TrionSpin::from_amplitudes(tu, td);
        assert!((wootters - concurrence_analytic(&spin, &qubit)).abs() < 1e-8);
        assert!((wootters - 1.0).abs() < 1e-6);

        let rho_t = Matrix2::new(tu * tu.conj(), tu * td.conj(), td * tu.conj(), td * td.conj());
        let mixed = steady_eph_density(&params, &rho_t).unwrap();
        let c = spinphoton::emission::concurrence_of_block(&mixed).unwrap();
        assert!((c - wootters).abs() < 1e-8);
    }
}

#[test]
fn cluster_growth_off_the_sweet_spot() {
    let params = SystemParams::new(0.1, 1.0, 1.0);
    let qubit = photon_state_angles(&params).unwrap();
    let fc = qubit.fc;
    let psi = build_cluster_state(2, &qubit, electron_x()).unwrap();
    assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
    assert!((three_tangle(&psi).unwrap() - fc.powi(4)).abs() < 1e-10);
    for n in 1..=4 {
        let f = cluster_fidelity(n, &qubit).unwrap();
        assert!((f.explicit - ((1.0 + fc) / 2.0).powi(n as i32)).abs() < 1e-10);
    }
}

#[test]
fn master_equation_decay_follows_the_rate_law() {
    let params = SystemParams::new(0.1, 1.0, 0.5).with_cutoff(1);
    let basis = CompositeBasis::new(1).unwrap();
    let rho0 = PureState::basis_state(basis, MatterLevel::TrionUp, 0, 0).to_density();
    let run = evolve_lindblad(&rho0, &params, 60.0, 0.5).unwrap();
    let t = &run.series.times;
    let n = run.series.values(N_TR).unwrap();
    let start = t.iter().position(|&x| x >= 10.0).unwrap();
    let (rate, _, _) = fit_exponential(&t[start..], &n[start..]).unwrap();
    let gamma = decay_rate(&params).unwrap();
    assert!((rate / (2.0 * gamma) - 1.0).abs() < 0.02, "rate {rate} vs {}", 2.0 * gamma);
    assert!((run.final_state.trace().re - 1.0).abs() < 1e-8);
}

#[test]
fn transmission_matches_linear_response_on_random_parameters() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let params = SystemParams {
            omega_c: rng.random_range(-1.0..1.0),
            ..SystemParams::new(rng.random_range(0.0..0.25), rng.random_range(-4.0..4.0), 0.0)
        };
        let params = SystemParams { omega_0: params.omega_c + rng.random_range(-3.0..3.0), ..params };
        for w in spinphoton::transmission::default_grid(&params).into_iter().step_by(7) {
            let m = spinphoton::transmission::transmission_matrix(&params, w).unwrap();
            let o = spinphoton::oracles::transmission_by_linear_solve(&params, w);
            let got = [[m.t_pp, m.t_pm], [m.t_mp, m.t_mm]];
            for a in 0..2 {
                for b in 0..2 {
                    assert!((got[a][b] - o[a][b]).norm() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn coarse_population_map_contour() {
    let axis = Axis::new(-3.0, 3.0, 7).unwrap();
    let spec = SweepSpec { detuning: axis, splitting: axis, ..SweepSpec::default() };
    let cfg = OptimizerConfig { amplitude_points: 9, phase_points: 4, ..OptimizerConfig::default() };
    let grid = run_map(&spec, &[Quantity::NTrMax], &cfg, None).unwrap();
    for j in 0..7 {
        assert!(grid.value(Quantity::NTrMax, 3, j).unwrap() > 0.995);
        assert!(grid.value(Quantity::NTrMax, j, j).unwrap() > 0.995);
        assert!(grid.value(Quantity::NTrMax, 6 - j, j).unwrap() > 0.995);
    }
    let lines = extract_closed_contour(&grid, Quantity::NTrMax, 0.9).unwrap();
    assert!(lines.iter().all(|l| l.closed));
    assert!(lines.iter().any(|l| l.contains(0.0, 0.0)));
}
