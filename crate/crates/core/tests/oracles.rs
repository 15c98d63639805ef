//! Library results against independent computations: plain arithmetic with
//! literal constants, brute-force searches, finite differences and a dense
//! matrix exponential.

mod common;

use std::f64::consts::{PI, TAU};

use approx::assert_relative_eq;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{ca, reference_potential};
use ionlink::coupling::{coupling_rate, point_charge_rate};
use ionlink::dynamics::{evolve_fock, mean_phonons, FockState};
use ionlink::equilibrium::{energy_gradient, solve_equilibrium, total_energy, IonConfiguration};
use ionlink::modes::{hessian, mode_frequencies};
use ionlink::potential::{calibrate_symmetric, AxialPotential};

// literal constants, typed in separately from the library table
const E: f64 = 1.602176634e-19;
const EPS0: f64 = 8.8541878128e-12;
const AMU: f64 = 1.66053906660e-27;
const ME: f64 = 9.1093837015e-31;
const M_CA: f64 = 39.962590863 * AMU - ME;

fn k_coulomb() -> f64 {
    1.0 / (4.0 * PI * EPS0)
}

#[test]
fn coupling_rate_matches_hand_arithmetic() {
    let w = TAU * 537e3;
    let r = 54e-6;
    let oracle = E * E / (2.0 * PI * EPS0 * M_CA * w * r * r * r);
    let lib = coupling_rate(&ca(), &ca(), 537e3, 537e3, r).unwrap();
    assert_relative_eq!(lib, oracle, max_relative = 1e-12);
    let khz = oracle / TAU / 1e3;
    assert!((2.07..2.09).contains(&khz), "{khz}");
    // 3+3 point-charge value
    let pc = point_charge_rate(&ca(), 537e3, r, 3, 3).unwrap() / TAU;
    assert_relative_eq!(pc, 3.0 * oracle / TAU, max_relative = 1e-12);
    assert!((6.1e3..6.3e3).contains(&pc));
}

#[test]
fn calibration_coefficients() {
    let w = TAU * 537e3;
    let p = calibrate_symmetric(54e-6, 537e3, &ca()).unwrap();
    assert_relative_eq!(p.alpha2, -M_CA * w * w / 4.0, max_relative = 1e-12);
    assert_relative_eq!(p.alpha4, M_CA * w * w / (2.0 * 54e-6 * 54e-6), max_relative = 1e-12);
    assert!((-1.90e-13..-1.88e-13).contains(&p.alpha2));
    assert!((1.29e-4..1.31e-4).contains(&p.alpha4));
}

#[test]
fn plug_in_energies() {
    let p = reference_potential();
    let w = TAU * 537e3;
    let (a2, a4) = (-M_CA * w * w / 4.0, M_CA * w * w / (2.0 * 54e-6f64.powi(2)));
    let z: f64 = 27e-6;
    let u = a2 * z * z + a4 * z.powi(4);
    assert_relative_eq!(p.eval(0.0, z), u, max_relative = 1e-12);
    // the bare minimum of a symmetric quartic: -a2^2 / (4 a4)
    assert_relative_eq!(u, -a2 * a2 / (4.0 * a4), max_relative = 1e-12);
    let two = total_energy(&p, 0.0, &[-z, z], &ca()).unwrap();
    assert_relative_eq!(two, 2.0 * u + k_coulomb() * E * E / (2.0 * z), max_relative = 1e-12);
}

#[test]
fn gradient_and_hessian_by_finite_differences() {
    let p = reference_potential();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let n = rng.gen_range(1..=5);
        let mut z: Vec<f64> = (0..n).map(|_| rng.gen_range(-45e-6..45e-6)).collect();
        z.sort_by(f64::total_cmp);
        if z.windows(2).any(|w| w[1] - w[0] < 2e-6) {
            continue;
        }
        let u = rng.gen_range(-2.0..2.0);
        let g = energy_gradient(&p, u, &z, &ca()).unwrap();
        let h = hessian(&p, u, &z, &ca()).unwrap();
        let step = 1e-10;
        for i in 0..n {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[i] += step;
            zm[i] -= step;
            let fd = (total_energy(&p, u, &zp, &ca()).unwrap() - total_energy(&p, u, &zm, &ca()).unwrap()) / (2.0 * step);
            let scale = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
            assert!((g[i] - fd).abs() <= 1e-6 * scale, "grad {i}: {} vs {fd}", g[i]);

            let hstep = 1e-9;
            zp = z.clone();
            zm = z.clone();
            zp[i] += hstep;
            zm[i] -= hstep;
            let gp = energy_gradient(&p, u, &zp, &ca()).unwrap();
            let gm = energy_gradient(&p, u, &zm, &ca()).unwrap();
            let hscale = h.iter().map(|v| v.abs()).fold(0.0, f64::max);
            for j in 0..n {
                let fd = (gp[j] - gm[j]) / (2.0 * hstep);
                assert!((h[(j, i)] - fd).abs() <= 1e-5 * hscale, "H[{j},{i}] {} vs {fd}", h[(j, i)]);
            }
        }
    }
}

/// Exhaustive grid over (z1, z2) with z1 < z2, refined around the best cell.
fn grid_minimum(f: impl Fn(f64, f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let (mut a_lo, mut a_hi, mut b_lo, mut b_hi) = (lo, hi, lo, hi);
    let mut best = (0.0, 0.0, f64::INFINITY);
    for _ in 0..12 {
        let n = 80;
        for i in 0..=n {
            let a = a_lo + (a_hi - a_lo) * i as f64 / n as f64;
            for j in 0..=n {
                let b = b_lo + (b_hi - b_lo) * j as f64 / n as f64;
                if b <= a {
                    continue;
                }
                let e = f(a, b);
                if e < best.2 {
                    best = (a, b, e);
                }
            }
        }
        let (wa, wb) = ((a_hi - a_lo) / 8.0, (b_hi - b_lo) / 8.0);
        (a_lo, a_hi, b_lo, b_hi) = (best.0 - wa, best.0 + wa, best.1 - wb, best.1 + wb);
    }
    (best.0, best.1)
}

#[test]
fn two_ions_in_harmonic_well_against_grid_search() {
    let f = 537e3;
    let w = TAU * f;
    let p = AxialPotential::harmonic(f, &ca()).unwrap();
    let closed = (E * E / (2.0 * PI * EPS0 * M_CA * w * w)).cbrt();
    assert!((8.4e-6..8.6e-6).contains(&closed), "{closed}");
    let (a, b) = grid_minimum(|a, b| total_energy(&p, 0.0, &[a, b], &ca()).unwrap(), -20e-6, 20e-6);
    assert_relative_eq!(b - a, closed, max_relative = 1e-4);

    let cfg = IonConfiguration::new(ca(), 2, 0).unwrap();
    let eq = solve_equilibrium(&p, 0.0, &cfg, None).unwrap().into_valid().unwrap();
    assert_relative_eq!(eq.positions[1] - eq.positions[0], closed, max_relative = 1e-9);
}

/// Crude independent local minimizer: coordinate-wise shrinking pattern search.
fn pattern_search(f: &dyn Fn(&[f64]) -> f64, mut x: Vec<f64>, mut step: f64) -> (Vec<f64>, f64) {
    let mut fx = f(&x);
    while step > 1e-13 {
        let mut improved = false;
        for i in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] += dir * step;
                let fy = f(&y);
                if fy < fx {
                    (x, fx) = (y, fy);
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}

#[test]
fn no_lower_configuration_from_random_restarts() {
    let p = reference_potential();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 1..=3usize {
        // best over every split of n ions between the wells
        let solver_best = (0..=n)
            .filter_map(|nl| {
                let cfg = IonConfiguration::new(ca(), nl, n - nl).ok()?;
                let eq = solve_equilibrium(&p, 0.0, &cfg, None).ok()?;
                eq.is_valid().then_some(eq.total_energy)
            })
            .fold(f64::INFINITY, f64::min);
        let energy = |z: &[f64]| -> f64 {
            let mut s = z.to_vec();
            s.sort_by(f64::total_cmp);
            total_energy(&p, 0.0, &s, &ca()).unwrap_or(f64::INFINITY)
        };
        for _ in 0..30 {
            let start: Vec<f64> = (0..n).map(|_| rng.gen_range(-60e-6..60e-6)).collect();
            let (_, e) = pattern_search(&energy, start, 4e-6);
            assert!(e >= solver_best - 1e-30, "n={n}: random search {e} below solver {solver_best}");
        }
    }
}

#[test]
fn stretch_mode_ratio_from_brute_force_hessian() {
    let p = AxialPotential::harmonic(537e3, &ca()).unwrap();
    let cfg = IonConfiguration::new(ca(), 2, 0).unwrap();
    let eq = solve_equilibrium(&p, 0.0, &cfg, None).unwrap().into_valid().unwrap();
    // second differences of the energy, then the closed-form 2x2 eigenvalues
    let z = &eq.positions;
    let h = 2e-9;
    let e = |a: f64, b: f64| total_energy(&p, 0.0, &[z[0] + a, z[1] + b], &ca()).unwrap();
    let h00 = (e(h, 0.0) - 2.0 * e(0.0, 0.0) + e(-h, 0.0)) / (h * h);
    let h11 = (e(0.0, h) - 2.0 * e(0.0, 0.0) + e(0.0, -h)) / (h * h);
    let h01 = (e(h, h) - e(h, -h) - e(-h, h) + e(-h, -h)) / (4.0 * h * h);
    let tr = h00 + h11;
    let disc = ((h00 - h11).powi(2) + 4.0 * h01 * h01).sqrt();
    let ratio_fd = ((tr + disc) / (tr - disc)).sqrt();
    assert_relative_eq!(ratio_fd, 3f64.sqrt(), max_relative = 1e-4);

    let s = mode_frequencies(&p, 0.0, &cfg).unwrap();
    assert_relative_eq!(s.frequencies[1] / s.frequencies[0], 3f64.sqrt(), max_relative = 1e-6);
    assert_relative_eq!(s.frequencies[0], 537e3, max_relative = 1e-9);
}

/// Dense `exp(i theta (a1^dag a2 + a2^dag a1))` on all states with n1 + n2 <= cutoff.
fn matrix_exponential_evolution(state: &FockState, theta: f64) -> Vec<((usize, usize), Complex64)> {
    let cutoff = state.cutoff();
    let basis: Vec<(usize, usize)> =
        (0..=cutoff).flat_map(|n| (0..=n).map(move |a| (a, n - a))).collect();
    let index = |a: usize, b: usize| basis.iter().position(|&s| s == (a, b));
    let d = basis.len();
    let mut g = DMatrix::<f64>::zeros(d, d);
    for (j, &(a, b)) in basis.iter().enumerate() {
        // a1^dag a2 |a, b> = sqrt((a+1) b) |a+1, b-1>
        if b > 0 {
            if let Some(i) = index(a + 1, b - 1) {
                let v = (((a + 1) * b) as f64).sqrt();
                g[(i, j)] += v;
                g[(j, i)] += v;
            }
        }
    }
    let eig = SymmetricEigen::new(g);
    let v = eig.eigenvectors;
    let psi: Vec<Complex64> = basis.iter().map(|&(a, b)| state.amplitude(a, b)).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); d];
    for k in 0..d {
        let proj: Complex64 = (0..d).map(|j| psi[j] * v[(j, k)]).sum();
        let phase = Complex64::from_polar(1.0, theta * eig.eigenvalues[k]);
        for i in 0..d {
            out[i] += v[(i, k)] * phase * proj;
        }
    }
    basis.into_iter().zip(out).collect()
}

#[test]
fn fock_evolution_against_matrix_exponential() {
    let omega = TAU * 2.25e3;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        // random superposition within a few manifolds
        let cutoff = 10;
        let mut comps: Vec<(usize, usize, Complex64)> = (0..4)
            .map(|_| {
                let a = rng.gen_range(0..=3);
                let b = rng.gen_range(0..=3);
                (a, b, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            })
            .collect();
        let mut unique = std::collections::BTreeMap::new();
        for &(a, b, c) in &comps {
            *unique.entry((a, b)).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        let norm = unique.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in comps.iter_mut() {
            c.2 /= norm;
        }
        let Ok(state) = FockState::from_components(cutoff, &comps) else { continue };
        let t = rng.gen_range(0.0..2e-3);
        let lib = evolve_fock(&state, omega, t).unwrap();
        for ((a, b), amp) in matrix_exponential_evolution(&state, 0.5 * omega * t) {
            assert!((lib.amplitude(a, b) - amp).norm() < 1e-10, "({a},{b}) {} vs {amp}", lib.amplitude(a, b));
        }
    }
}

#[test]
fn single_excitation_populations() {
    let omega = TAU * 2.25e3;
    for k in 0..50 {
        let t = 1e-5 * k as f64;
        let s = evolve_fock(&FockState::fock(0, 1), omega, t).unwrap();
        let (n1, n2) = mean_phonons(&s);
        assert_relative_eq!(n1, (0.5 * omega * t).sin().powi(2), epsilon = 1e-12);
        assert_relative_eq!(n2, (0.5 * omega * t).cos().powi(2), epsilon = 1e-12);
    }
}
