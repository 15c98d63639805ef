mod common;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use proptest::prelude::*;

use common::{ca, reference_potential};
use ionlink::coupling::{angular_factor, coupling_rate, dipole_energy, gate_time, magic_angle, point_charge_rate, swap_time};
use ionlink::dynamics::{evolve_fock, ExchangeModel, FockState};
use ionlink::equilibrium::{solve_equilibrium, total_energy, default_seeds, IonConfiguration};
use ionlink::modes::{hessian, mode_frequencies};
use ionlink::potential::{calibrate_symmetric, AxialPotential, IonSpecies};

fn cfg() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

/// Random normalized state with components inside `n1 + n2 <= max_total`.
fn state_strategy(max_total: usize) -> impl Strategy<Value = FockState> {
    prop::collection::vec((0..=max_total, 0..=max_total, -1.0f64..1.0, -1.0f64..1.0), 1..6).prop_filter_map(
        "zero or overflowing state",
        move |raw| {
            let mut comps: Vec<(usize, usize, Complex64)> = raw
                .into_iter()
                .filter(|(a, b, _, _)| a + b <= max_total)
                .map(|(a, b, re, im)| (a, b, Complex64::new(re, im)))
                .collect();
            comps.sort_by_key(|c| (c.0, c.1));
            comps.dedup_by_key(|c| (c.0, c.1));
            let norm = comps.iter().map(|c| c.2.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-3 {
                return None;
            }
            for c in comps.iter_mut() {
                c.2 /= norm;
            }
            FockState::from_components(max_total + 2, &comps).ok()
        },
    )
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn potential_is_even_when_linear_term_vanishes(
        a2 in -1e-12f64..1e-12, a4 in 1e-6f64..1e-3, z in -1e-4f64..1e-4, u in -3.0f64..3.0, t1 in -1e-18f64..1e-18,
    ) {
        // alpha1 chosen so the effective linear coefficient is zero at u
        let p = AxialPotential::new(-u * t1, a2, a4, t1, 1e-15).unwrap();
        let (l, r) = (p.eval(u, z), p.eval(u, -z));
        prop_assert!((l - r).abs() <= 1e-12 * l.abs().max(r.abs()).max(1e-40));
    }

    #[test]
    fn wells_are_true_minima(r in 20e-6f64..100e-6, f in 2e5f64..2e6, u in -4.0f64..4.0) {
        let s = ca();
        let p = calibrate_symmetric(r, f, &s).unwrap().with_tuning(common::TUNE1, 0.0);
        if let Ok(w) = p.find_wells(u, &s) {
            for z in [w.left_min, w.right_min] {
                prop_assert!(p.derivative(u, z).abs() < 1e-24);
                prop_assert!(p.curvature(u, z) > 0.0);
            }
            prop_assert!(w.left_min < w.barrier_z && w.barrier_z < w.right_min);
            prop_assert!(w.barrier_height >= 0.0);
            prop_assert!((w.separation_r - (w.right_min - w.left_min)).abs() == 0.0);
        }
    }

    #[test]
    fn calibration_round_trip(r in 10e-6f64..200e-6, f in 1e5f64..5e6) {
        let s = ca();
        let w = calibrate_symmetric(r, f, &s).unwrap().find_wells(0.0, &s).unwrap();
        prop_assert!((w.separation_r / r - 1.0).abs() < 1e-12);
        prop_assert!((w.freq_left / f - 1.0).abs() < 1e-12);
        prop_assert!((w.freq_right / f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coupling_symmetric_under_well_exchange(
        f1 in 1e5f64..2e6, f2 in 1e5f64..2e6, r in 10e-6f64..200e-6, light in proptest::bool::ANY,
    ) {
        let s1 = ca();
        let s2 = if light { IonSpecies::be9() } else { ca() };
        let a = coupling_rate(&s1, &s2, f1, f2, r).unwrap();
        let b = coupling_rate(&s2, &s1, f2, f1, r).unwrap();
        prop_assert!((a / b - 1.0).abs() < 1e-14);
        // r^-3 law
        let half = coupling_rate(&s1, &s2, f1, f2, r / 2.0).unwrap();
        prop_assert!((half / a - 8.0).abs() < 1e-12);
    }

    #[test]
    fn point_charge_scales_with_ion_number(n in 1usize..8, f in 1e5f64..2e6, r in 10e-6f64..200e-6) {
        let one = coupling_rate(&ca(), &ca(), f, f, r).unwrap();
        let many = point_charge_rate(&ca(), f, r, n, n).unwrap();
        prop_assert!((many / one - n as f64).abs() < 1e-12 * n as f64);
    }

    #[test]
    fn timing_relations(omega in 1.0f64..1e7) {
        let ts = swap_time(omega).unwrap();
        prop_assert!((ts * omega / PI - 1.0).abs() < 1e-15);
        prop_assert!((gate_time(omega).unwrap() / ts - 4.0).abs() < 1e-15);
    }

    #[test]
    fn angular_factor_changes_sign_at_magic_angle(theta in 0.0f64..(PI / 2.0)) {
        let m = magic_angle();
        let f = angular_factor(theta);
        if theta < m - 1e-9 {
            prop_assert!(f > 0.0);
        } else if theta > m + 1e-9 {
            prop_assert!(f < 0.0);
        }
    }

    #[test]
    fn longitudinal_dipoles_match_pair_form(q1 in 1e-30f64..1e-27, q2 in 1e-30f64..1e-27, r in 1e-6f64..1e-3) {
        // dipoles along the separation axis give -2 d1 d2 / (4 pi eps0 r^3)
        let e = dipole_energy(&[0.0, 0.0, q1], &[0.0, 0.0, q2], &[0.0, 0.0, r]).unwrap();
        let k = ionlink::constants::coulomb_constant();
        let expect = -2.0 * k * q1 * q2 / r.powi(3);
        prop_assert!((e / expect - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fock_evolution_is_unitary_and_conserves_manifolds(
        state in state_strategy(6), periods in 0.0f64..100.0,
    ) {
        let omega = TAU * 2.25e3;
        let t = periods * PI / omega;
        let out = evolve_fock(&state, omega, t).unwrap();
        prop_assert!((out.norm_squared() - 1.0).abs() < 1e-9);
        for (a, b) in state.manifold_populations().iter().zip(out.manifold_populations()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn fock_evolution_composes(state in state_strategy(5), t1 in 0.0f64..1e-3, t2 in 0.0f64..1e-3) {
        let omega = TAU * 2.25e3;
        let two_step = evolve_fock(&evolve_fock(&state, omega, t1).unwrap(), omega, t2).unwrap();
        let one_step = evolve_fock(&state, omega, t1 + t2).unwrap();
        prop_assert!(one_step.fidelity(&two_step) >= 1.0 - 1e-9);
    }

    #[test]
    fn fock_evolution_returns_after_two_swaps(state in state_strategy(6), f in 100.0f64..1e5) {
        // two swaps multiply manifold n by (-1)^n, so take one parity only
        let even: Vec<_> = state.components().filter(|c| (c.0 + c.1) % 2 == 0 && c.2.norm_sqr() > 0.0).collect();
        let norm = even.iter().map(|c| c.2.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let even: Vec<_> = even.into_iter().map(|(a, b, c)| (a, b, c / norm)).collect();
        let state = FockState::from_components(state.cutoff(), &even).unwrap();
        let omega = TAU * f;
        let out = evolve_fock(&state, omega, 2.0 * swap_time(omega).unwrap()).unwrap();
        prop_assert!(out.fidelity(&state) >= 1.0 - 1e-9);
    }

    #[test]
    fn fock_evolution_returns_after_gate_time(state in state_strategy(6), f in 100.0f64..1e5) {
        let omega = TAU * f;
        let out = evolve_fock(&state, omega, gate_time(omega).unwrap()).unwrap();
        prop_assert!(out.fidelity(&state) >= 1.0 - 1e-9);
    }

    #[test]
    fn undriven_trace_stays_between_initial_values(
        n1 in 0.0f64..20.0, n2 in 0.0f64..20.0, f in 100.0f64..1e4, tau_damp in 1e-5f64..1e-1, tau in 0.0f64..1e-2,
    ) {
        let m = ExchangeModel::new(n1, n2, TAU * f, tau_damp, 0.0).unwrap();
        let v = m.eval(tau);
        prop_assert!(v >= n1.min(n2) - 1e-12 && v <= n1.max(n2) + 1e-12);
    }

    #[test]
    fn trace_oscillation_envelope(
        n1 in 0.0f64..20.0, n2 in 0.0f64..20.0, f in 100.0f64..1e4, tau_damp in 1e-5f64..1e-1,
        gamma in 0.0f64..5e3, tau in 0.0f64..1e-2,
    ) {
        // distance from the heated mean never exceeds the decayed half-difference
        let m = ExchangeModel::new(n1, n2, TAU * f, tau_damp, gamma).unwrap();
        let center = 0.5 * (n1 + n2) + gamma * tau;
        let bound = 0.5 * (n1 - n2).abs() * (-tau / tau_damp).exp();
        prop_assert!((m.eval(tau) - center).abs() <= bound + 1e-12 * (1.0 + center.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn frequencies_move_apart_with_control_voltage(u in 0.05f64..3.0) {
        // with tune1 > 0 the left well deepens and stiffens, the right one softens
        let p = reference_potential();
        let s = ca();
        let w0 = p.find_wells(0.0, &s).unwrap();
        let w = p.find_wells(u, &s).unwrap();
        let wm = p.find_wells(-u, &s).unwrap();
        prop_assert!(w.freq_left > w0.freq_left && w.freq_right < w0.freq_right);
        prop_assert!(wm.freq_left < w0.freq_left && wm.freq_right > w0.freq_right);
        let w2 = p.find_wells(u * 1.1, &s).unwrap();
        prop_assert!(w2.freq_left > w.freq_left && w2.freq_right < w.freq_right);
    }

    #[test]
    fn equilibria_are_stable_minima(nl in 0usize..=3, nr in 0usize..=3, u in -2.0f64..2.0) {
        prop_assume!(nl + nr >= 1);
        let p = reference_potential();
        let config = IonConfiguration::new(ca(), nl, nr).unwrap();
        let eq = solve_equilibrium(&p, u, &config, None).unwrap();
        prop_assert!(eq.converged && !eq.escaped);
        prop_assert!(eq.positions.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(eq.n_left_found, nl);
        let seeds = default_seeds(&p, u, &config);
        prop_assert!(eq.total_energy <= total_energy(&p, u, &seeds, &ca()).unwrap());
        let h = hessian(&p, u, &eq.positions, &ca()).unwrap();
        let eig = nalgebra::SymmetricEigen::new(h.clone());
        prop_assert!(eig.eigenvalues.iter().all(|&l| l > 0.0));
        // Coulomb rows sum to zero: the row sums are the trap curvatures
        for i in 0..h.nrows() {
            let row: f64 = h.row(i).iter().sum();
            let trap = p.curvature(u, eq.positions[i]);
            prop_assert!((row - trap).abs() <= 1e-9 * h[(i, i)].abs());
        }
    }

    #[test]
    fn mode_spectrum_invariants(nl in 1usize..=3, nr in 0usize..=3, u in -1.0f64..1.0) {
        let p = reference_potential();
        let config = IonConfiguration::new(ca(), nl, nr).unwrap();
        let s = mode_frequencies(&p, u, &config).unwrap();
        prop_assert!(s.frequencies.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(s.frequencies.iter().all(|&f| f > 0.0));
        let v = &s.eigenvectors;
        let gram = v.transpose() * v;
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                prop_assert!((gram[(i, j)] - target).abs() < 1e-9);
            }
        }
        // eigenvalue sum equals the trace of the mass-weighted Hessian
        let h = hessian(&p, u, &s.positions, &ca()).unwrap();
        let m = ca().mass;
        let trace = h.trace() / m;
        let sum: f64 = s.frequencies.iter().map(|f| (TAU * f).powi(2)).sum();
        prop_assert!((sum / trace - 1.0).abs() < 1e-9);
    }

    #[test]
    fn symmetric_strings_are_antisymmetric(n in 1usize..=3) {
        let p = reference_potential();
        let config = IonConfiguration::new(ca(), n, n).unwrap();
        let eq = solve_equilibrium(&p, 0.0, &config, None).unwrap();
        let z = &eq.positions;
        for i in 0..z.len() {
            prop_assert!((z[i] + z[z.len() - 1 - i]).abs() < 1e-12);
        }
    }
}
