//! Closed-form dipole-dipole coupling between two trapped particles or strings.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::constants::{coulomb_constant, VACUUM_PERMITTIVITY};
use crate::error::{Error, Result};
use crate::potential::IonSpecies;

pub type Vec3 = [f64; 3];

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Exchange rate with the derived swap and gate times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingResult {
    /// rad/s
    pub omega_c: f64,
    /// s
    pub t_swap: f64,
    /// s
    pub t_gate: f64,
}

impl CouplingResult {
    pub fn new(omega_c: f64) -> Result<Self> {
        Ok(Self { omega_c, t_swap: swap_time(omega_c)?, t_gate: gate_time(omega_c)? })
    }
}

/// Interaction energy of two point dipoles (C m) separated by `r_vec` (m), J.
pub fn dipole_energy(d1: &Vec3, d2: &Vec3, r_vec: &Vec3) -> Result<f64> {
    let r = dot(r_vec, r_vec).sqrt();
    if !(r > 0.0) {
        return Err(Error::InvalidParameter("dipoles must be separated".into()));
    }
    let e: Vec3 = [r_vec[0] / r, r_vec[1] / r, r_vec[2] / r];
    Ok(coulomb_constant() * (dot(d1, d2) - 3.0 * dot(d1, &e) * dot(d2, &e)) / (r * r * r))
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// Resonant exchange rate of two longitudinally aligned oscillators with
/// frequencies `f1`, `f2` (Hz) at distance `r` (m), rad/s.
///
/// `q1 q2 / (2 pi eps0 sqrt(m1 m2 w1 w2) r^3)`
pub fn coupling_rate(s1: &IonSpecies, s2: &IonSpecies, f1: f64, f2: f64, r: f64) -> Result<f64> {
    check_positive("f1", f1)?;
    check_positive("f2", f2)?;
    check_positive("r", r)?;
    let (w1, w2) = (TAU * f1, TAU * f2);
    Ok((s1.charge * s2.charge).abs()
        / (2.0 * PI * VACUUM_PERMITTIVITY * (s1.mass * s2.mass * w1 * w2).sqrt() * r.powi(3)))
}

/// Time for a complete exchange, `pi / omega_c`.
pub fn swap_time(omega_c: f64) -> Result<f64> {
    check_positive("omega_c", omega_c)?;
    Ok(PI / omega_c)
}

/// Duration of a bichromatic gate through the coupled modes, `4 pi / omega_c`.
pub fn gate_time(omega_c: f64) -> Result<f64> {
    check_positive("omega_c", omega_c)?;
    Ok(4.0 * PI / omega_c)
}

/// Coupling of parallel dipoles at angle `theta` to their separation,
/// relative to the longitudinal case: `(1 - 3 cos^2 theta) / -2`.
pub fn angular_factor(theta: f64) -> f64 {
    let c = theta.cos();
    (1.0 - 3.0 * c * c) / -2.0
}

/// The angle at which parallel dipoles decouple, `acos(sqrt(1/3))`.
pub fn magic_angle() -> f64 {
    (1.0f64 / 3.0).sqrt().acos()
}

/// Point-charge string model: each string of `n` ions acts as one particle of
/// charge `n q` and mass `n m`, giving `sqrt(n1 n2)` times the single-ion rate.
pub fn point_charge_rate(s: &IonSpecies, f: f64, r: f64, n1: usize, n2: usize) -> Result<f64> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidParameter("each string needs at least one ion".into()));
    }
    let string = |n: usize| IonSpecies::new(n as f64 * s.charge, n as f64 * s.mass, format!("{}x{}", n, s.label));
    coupling_rate(&string(n1)?, &string(n2)?, f, f, r)
}
