//! Equilibrium positions of N ions in the axial potential: minima of the
//! trap energy plus the pairwise Coulomb repulsion.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::constants::coulomb_constant;
use crate::error::{Error, Result};
use crate::modes::hessian;
use crate::potential::{AxialPotential, IonSpecies};

/// Hard cap on minimizer iterations.
pub const MAX_ITERATIONS: usize = 10_000;
/// Converged when the last step moved no ion by more than this (m)...
pub const POSITION_TOLERANCE: f64 = 1e-13;
/// ...and the gradient norm is below this (N).
pub const GRADIENT_TOLERANCE: f64 = 1e-24;
/// Spacing of default seeds within one well, m.
pub const SEED_SPACING: f64 = 5e-6;

/// Species and number of ions held in each well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonConfiguration {
    pub species: IonSpecies,
    pub n_left: usize,
    pub n_right: usize,
}

impl IonConfiguration {
    pub fn new(species: IonSpecies, n_left: usize, n_right: usize) -> Result<Self> {
        if n_left + n_right == 0 {
            return Err(Error::InvalidParameter("configuration holds no ions".into()));
        }
        Ok(Self { species, n_left, n_right })
    }

    pub fn len(&self) -> usize {
        self.n_left + self.n_right
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Label of the form `"2+1"`.
    pub fn label(&self) -> String {
        format!("{}+{}", self.n_left, self.n_right)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    /// Ascending, m.
    pub positions: Vec<f64>,
    /// J
    pub total_energy: f64,
    /// Euclidean norm of the energy gradient, N.
    pub grad_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Set when the ion count per well differs from the requested configuration.
    pub escaped: bool,
    /// Number of ions found left of the barrier top (all ions for a single well).
    pub n_left_found: usize,
}

impl EquilibriumResult {
    /// Converged and every ion in the requested well.
    pub fn is_valid(&self) -> bool {
        self.converged && !self.escaped
    }

    pub fn into_valid(self) -> Result<Self> {
        if !self.converged {
            return Err(Error::NotConverged { iterations: self.iterations, grad_norm: self.grad_norm });
        }
        if self.escaped {
            return Err(Error::BasinEscape(format!(
                "{} ion(s) left of the barrier, positions {:?}",
                self.n_left_found, self.positions
            )));
        }
        Ok(self)
    }
}

pub(crate) fn check_distinct(positions: &[f64]) -> Result<()> {
    for (i, &a) in positions.iter().enumerate() {
        if !a.is_finite() {
            return Err(Error::InvalidParameter(format!("position {i} is not finite")));
        }
        for (j, &b) in positions.iter().enumerate().skip(i + 1) {
            if a == b {
                return Err(Error::SingularConfiguration { i, j, z: a });
            }
        }
    }
    Ok(())
}

/// Trap energy plus Coulomb repulsion of all pairs, J.
pub fn total_energy(p: &AxialPotential, u_ax: f64, positions: &[f64], species: &IonSpecies) -> Result<f64> {
    check_distinct(positions)?;
    let kq2 = coulomb_constant() * species.charge * species.charge;
    let mut e: f64 = positions.iter().map(|&z| p.eval(u_ax, z)).sum();
    for (i, &a) in positions.iter().enumerate() {
        for &b in &positions[i + 1..] {
            e += kq2 / (a - b).abs();
        }
    }
    Ok(e)
}

/// Analytic gradient of [`total_energy`], N.
pub fn energy_gradient(p: &AxialPotential, u_ax: f64, positions: &[f64], species: &IonSpecies) -> Result<Vec<f64>> {
    check_distinct(positions)?;
    let kq2 = coulomb_constant() * species.charge * species.charge;
    let n = positions.len();
    let mut g: Vec<f64> = positions.iter().map(|&z| p.derivative(u_ax, z)).collect();
    for i in 0..n {
        for j in i + 1..n {
            let d = positions[i] - positions[j];
            let f = d.signum() * kq2 / (d * d);
            g[i] -= f;
            g[j] += f;
        }
    }
    Ok(g)
}

/// Default starting positions: ions spaced [`SEED_SPACING`] apart, centered on
/// the bare minimum of their well. A single-well potential gets all ions
/// around its one minimum.
pub fn default_seeds(p: &AxialPotential, u_ax: f64, config: &IonConfiguration) -> Vec<f64> {
    let cluster = |center: f64, n: usize| -> Vec<f64> {
        (0..n).map(|i| center + SEED_SPACING * (i as f64 - (n as f64 - 1.0) / 2.0)).collect()
    };
    let roots = p.stationary_points(u_ax);
    if roots.len() == 3 {
        let mut seeds = cluster(roots[0], config.n_left);
        seeds.extend(cluster(roots[2], config.n_right));
        seeds
    } else {
        let center = roots.first().copied().unwrap_or(0.0);
        cluster(center, config.len())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest step fraction in (0, 1] that keeps neighbors at least half their
/// current gap apart.
fn order_preserving_limit(z: &[f64], dir: &[f64]) -> f64 {
    let mut t: f64 = 1.0;
    for i in 0..z.len().saturating_sub(1) {
        let closing = dir[i] - dir[i + 1];
        if closing > 0.0 {
            t = t.min(0.5 * (z[i + 1] - z[i]) / closing);
        }
    }
    t
}

/// Minimize the total energy starting from `seeds` (or [`default_seeds`]).
///
/// Newton steps while the Hessian is positive definite, otherwise steepest
/// descent; both with backtracking that never lets two ions pass. An
/// unconverged run is returned with `converged = false`.
pub fn solve_equilibrium(
    p: &AxialPotential,
    u_ax: f64,
    config: &IonConfiguration,
    seeds: Option<&[f64]>,
) -> Result<EquilibriumResult> {
    let species = &config.species;
    let mut z = match seeds {
        Some(s) => {
            if s.len() != config.len() {
                return Err(Error::InvalidParameter(format!(
                    "{} seed positions for {} ions",
                    s.len(),
                    config.len()
                )));
            }
            if s.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidParameter("seed positions must be strictly increasing".into()));
            }
            s.to_vec()
        }
        None => default_seeds(p, u_ax, config),
    };
    check_distinct(&z)?;

    let mut energy = total_energy(p, u_ax, &z, species)?;
    let mut grad = energy_gradient(p, u_ax, &z, species)?;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let h = hessian(p, u_ax, &z, species)?;
        let g = DVector::from_column_slice(&grad);
        let (dir, newton): (Vec<f64>, bool) = match h.clone().cholesky() {
            Some(ch) => ((-ch.solve(&g)).iter().copied().collect(), true),
            None => {
                // steepest descent, first trial step 1/10 of the smallest gap (or 1 um)
                let gn = norm(&grad).max(f64::MIN_POSITIVE);
                let min_gap = z.windows(2).map(|w| w[1] - w[0]).fold(1e-6, f64::min);
                let len = 0.1 * min_gap;
                (grad.iter().map(|gi| -gi / gn * len).collect(), false)
            }
        };

        let g_dot_d: f64 = grad.iter().zip(&dir).map(|(a, b)| a * b).sum();
        let mut t = order_preserving_limit(&z, &dir);
        let grad_norm = norm(&grad);
        let mut accepted = None;
        while t > 1e-14 {
            let trial: Vec<f64> = z.iter().zip(&dir).map(|(zi, di)| zi + t * di).collect();
            if trial.windows(2).all(|w| w[0] < w[1]) {
                let e_new = total_energy(p, u_ax, &trial, species)?;
                let g_new = energy_gradient(p, u_ax, &trial, species)?;
                let armijo = e_new <= energy + 1e-4 * t * g_dot_d;
                // energy differences fall below rounding near the minimum; there
                // a Newton step is judged by the gradient instead
                if armijo || (newton && norm(&g_new) < grad_norm) {
                    accepted = Some((trial, e_new, g_new, t));
                    break;
                }
            }
            t *= 0.5;
        }

        let Some((trial, e_new, g_new, t_used)) = accepted else {
            converged = grad_norm < GRADIENT_TOLERANCE && is_positive_definite(&h);
            break;
        };
        let max_move = dir.iter().map(|d| (d * t_used).abs()).fold(0.0, f64::max);
        z = trial;
        energy = e_new;
        grad = g_new;
        if max_move < POSITION_TOLERANCE && norm(&grad) < GRADIENT_TOLERANCE {
            let h = hessian(p, u_ax, &z, species)?;
            converged = is_positive_definite(&h);
            break;
        }
    }

    let (n_left_found, escaped) = match p.find_wells(u_ax, species) {
        Ok(w) => {
            let left = z.iter().filter(|&&zi| zi < w.barrier_z).count();
            (left, left != config.n_left)
        }
        // both wells requested but only one exists
        Err(_) => (z.len(), config.n_left > 0 && config.n_right > 0),
    };

    Ok(EquilibriumResult {
        grad_norm: norm(&grad),
        positions: z,
        total_energy: energy,
        converged,
        iterations,
        escaped,
        n_left_found,
    })
}

pub(crate) fn is_positive_definite(h: &DMatrix<f64>) -> bool {
    h.clone().cholesky().is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::calibrate_symmetric;
    use approx::assert_relative_eq;
    use std::f64::consts::{PI, TAU};

    fn ca() -> IonSpecies {
        IonSpecies::ca40()
    }

    fn reference() -> AxialPotential {
        calibrate_symmetric(54e-6, 537e3, &ca()).unwrap()
    }

    #[test]
    fn single_ion_at_origin_has_zero_energy() {
        assert_eq!(total_energy(&reference(), 0.0, &[0.0], &ca()).unwrap(), 0.0);
    }

    #[test]
    fn mirror_pair_energy() {
        let p = reference();
        let z = 20e-6;
        let q = ca().charge;
        let expected = 2.0 * p.eval(0.0, z) + q * q / (4.0 * PI * crate::constants::VACUUM_PERMITTIVITY * 2.0 * z);
        assert_relative_eq!(total_energy(&p, 0.0, &[-z, z], &ca()).unwrap(), expected, max_relative = 1e-14);
    }

    #[test]
    fn reference_pair_energy_plug_in() {
        // two ions at the bare minima: 2 * (-a2^2 / (4 a4)) + k q^2 / 54 um
        let p = reference();
        let k = 8.987_551_792_3e9;
        let q = 1.602_176_634e-19;
        let expected = -2.0 * p.alpha2 * p.alpha2 / (4.0 * p.alpha4) + k * q * q / 54e-6;
        assert_relative_eq!(total_energy(&p, 0.0, &[-27e-6, 27e-6], &ca()).unwrap(), expected, max_relative = 1e-9);
    }

    #[test]
    fn coincident_positions_are_singular() {
        let err = total_energy(&reference(), 0.0, &[1e-6, 1e-6], &ca()).unwrap_err();
        assert!(matches!(err, Error::SingularConfiguration { i: 0, j: 1, .. }));
        assert!(energy_gradient(&reference(), 0.0, &[0.0, 2e-6, 0.0], &ca()).is_err());
    }

    #[test]
    fn gradient_vanishes_at_bare_minimum() {
        let g = energy_gradient(&reference(), 0.0, &[27e-6], &ca()).unwrap();
        assert!(g[0].abs() < 1e-24, "{g:?}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = reference().with_tuning(1.25e-19, 2e-15);
        let z = [-31e-6, -22e-6, 18e-6, 29e-6, 40e-6];
        let g = energy_gradient(&p, 0.3, &z, &ca()).unwrap();
        let h = 1e-10;
        for i in 0..z.len() {
            let mut zp = z;
            let mut zm = z;
            zp[i] += h;
            zm[i] -= h;
            let fd = (total_energy(&p, 0.3, &zp, &ca()).unwrap() - total_energy(&p, 0.3, &zm, &ca()).unwrap()) / (2.0 * h);
            assert_relative_eq!(g[i], fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn mirror_gradient_is_antisymmetric() {
        let g = energy_gradient(&reference(), 0.0, &[-24e-6, 24e-6], &ca()).unwrap();
        assert_relative_eq!(g[0], -g[1], max_relative = 1e-14);
    }

    #[test]
    fn one_ion_in_harmonic_well_sits_at_center() {
        let p = AxialPotential::harmonic(537e3, &ca()).unwrap();
        let cfg = IonConfiguration::new(ca(), 1, 0).unwrap();
        let r = solve_equilibrium(&p, 0.0, &cfg, Some(&[3e-6])).unwrap();
        assert!(r.converged);
        assert!(r.positions[0].abs() < 1e-13);
    }

    #[test]
    fn two_ions_in_harmonic_well() {
        let p = AxialPotential::harmonic(537e3, &ca()).unwrap();
        let cfg = IonConfiguration::new(ca(), 2, 0).unwrap();
        let r = solve_equilibrium(&p, 0.0, &cfg, None).unwrap();
        assert!(r.converged);
        let m = ca().mass;
        let w = TAU * 537e3;
        let q = ca().charge;
        let d = (q * q / (2.0 * PI * crate::constants::VACUUM_PERMITTIVITY * m * w * w)).cbrt();
        assert_relative_eq!(r.positions[1] - r.positions[0], d, max_relative = 1e-10);
        assert!((d - 8.5e-6).abs() < 0.1e-6);
    }

    #[test]
    fn three_ions_middle_at_center() {
        let p = AxialPotential::harmonic(537e3, &ca()).unwrap();
        let cfg = IonConfiguration::new(ca(), 3, 0).unwrap();
        let r = solve_equilibrium(&p, 0.0, &cfg, Some(&[-4e-6, 1e-6, 9e-6])).unwrap();
        assert!(r.converged);
        assert!(r.positions[1].abs() < 1e-13);
    }

    #[test]
    fn symmetric_configurations_are_antisymmetric() {
        for n in 1..=3 {
            let cfg = IonConfiguration::new(ca(), n, n).unwrap();
            let r = solve_equilibrium(&reference(), 0.0, &cfg, None).unwrap();
            assert!(r.is_valid());
            let z = &r.positions;
            for i in 0..z.len() {
                assert!((z[i] + z[z.len() - 1 - i]).abs() < 1e-12, "{z:?}");
            }
        }
    }

    #[test]
    fn converged_result_is_a_true_minimum() {
        let p = reference().with_tuning(1.25e-19, 0.0);
        let cfg = IonConfiguration::new(ca(), 3, 2).unwrap();
        let seeds = default_seeds(&p, 4.9, &cfg);
        let r = solve_equilibrium(&p, 4.9, &cfg, None).unwrap();
        assert!(r.is_valid());
        assert!(r.grad_norm < GRADIENT_TOLERANCE);
        assert!(r.total_energy <= total_energy(&p, 4.9, &seeds, &ca()).unwrap());
        let h = hessian(&p, 4.9, &r.positions, &ca()).unwrap();
        assert!(h.symmetric_eigenvalues().iter().all(|&l| l > 0.0));
    }

    #[test]
    fn seeds_must_be_sorted() {
        let cfg = IonConfiguration::new(ca(), 1, 1).unwrap();
        assert!(solve_equilibrium(&reference(), 0.0, &cfg, Some(&[1e-6, -1e-6])).is_err());
        assert!(solve_equilibrium(&reference(), 0.0, &cfg, Some(&[1e-6])).is_err());
        assert!(IonConfiguration::new(ca(), 0, 0).is_err());
    }

    #[test]
    fn escape_is_flagged() {
        // three ions seeded in the left well, but two requested on the right
        let cfg = IonConfiguration::new(ca(), 1, 2).unwrap();
        let r = solve_equilibrium(&reference(), 0.0, &cfg, Some(&[-33e-6, -27e-6, -21e-6])).unwrap();
        assert!(r.converged);
        assert!(r.escaped);
        assert!(matches!(r.into_valid(), Err(Error::BasinEscape(_))));
    }
}
