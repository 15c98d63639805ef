//! Axial double-well potential `U(z) = a1 z + a2 z^2 + a4 z^4` and the
//! linear action of the control voltage on `a1` and `a2`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::constants::{ATOMIC_MASS_UNIT, CA40_ATOMIC_MASS_U, ELECTRON_MASS, ELEMENTARY_CHARGE};
use crate::error::{Error, Result};

/// Charge and mass of one trapped particle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonSpecies {
    /// C
    pub charge: f64,
    /// kg
    pub mass: f64,
    pub label: String,
}

impl IonSpecies {
    pub fn new(charge: f64, mass: f64, label: impl Into<String>) -> Result<Self> {
        if !(charge.is_finite() && charge != 0.0) {
            return Err(Error::InvalidParameter(format!("ion charge must be non-zero, got {charge}")));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidParameter(format!("ion mass must be positive, got {mass}")));
        }
        Ok(Self { charge, mass, label: label.into() })
    }

    fn singly_charged(atomic_mass_u: f64, label: &str) -> Self {
        Self {
            charge: ELEMENTARY_CHARGE,
            mass: atomic_mass_u * ATOMIC_MASS_UNIT - ELECTRON_MASS,
            label: label.to_owned(),
        }
    }

    /// Singly charged 40Ca.
    pub fn ca40() -> Self {
        Self::singly_charged(CA40_ATOMIC_MASS_U, "Ca40")
    }

    /// Singly charged 9Be, a light antenna candidate.
    pub fn be9() -> Self {
        Self::singly_charged(9.012_183_065, "Be9")
    }

    /// Singly charged 24Mg.
    pub fn mg24() -> Self {
        Self::singly_charged(23.985_041_697, "Mg24")
    }

    /// Look up a built-in species by label (case-insensitive).
    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "ca40" | "40ca" | "ca40+" | "40ca+" => Ok(Self::ca40()),
            "be9" | "9be" | "be9+" | "9be+" => Ok(Self::be9()),
            "mg24" | "24mg" | "mg24+" | "24mg+" => Ok(Self::mg24()),
            _ => Err(Error::InvalidParameter(format!("unknown species '{name}'"))),
        }
    }
}

/// Quartic axial potential with linear control-voltage response.
///
/// Energies in J, positions in m. At control voltage `u` the effective
/// coefficients are `a1 = alpha1 + u*tune1` and `a2 = alpha2 + u*tune2`.
/// The cubic term is zero by choice of origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxialPotential {
    /// J/m
    pub alpha1: f64,
    /// J/m^2
    pub alpha2: f64,
    /// J/m^4
    pub alpha4: f64,
    /// J/m per volt
    pub tune1: f64,
    /// J/m^2 per volt
    pub tune2: f64,
}

/// Minima, local frequencies and barrier of a double well at one control voltage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellGeometry {
    pub left_min: f64,
    pub right_min: f64,
    /// Position of the barrier top (local maximum between the minima).
    pub barrier_z: f64,
    pub separation_r: f64,
    /// Hz
    pub freq_left: f64,
    /// Hz
    pub freq_right: f64,
    /// Barrier height above the lower minimum, J.
    pub barrier_height: f64,
}

impl AxialPotential {
    pub fn new(alpha1: f64, alpha2: f64, alpha4: f64, tune1: f64, tune2: f64) -> Result<Self> {
        for (name, v) in [("alpha1", alpha1), ("alpha2", alpha2), ("alpha4", alpha4), ("tune1", tune1), ("tune2", tune2)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite")));
            }
        }
        if alpha4 <= 0.0 {
            return Err(Error::InvalidParameter(format!("alpha4 must be positive for confinement, got {alpha4}")));
        }
        Ok(Self { alpha1, alpha2, alpha4, tune1, tune2 })
    }

    /// Purely harmonic single well of frequency `freq` for `species`
    /// (alpha4 = 0). Used as a reference potential for closed-form checks.
    pub fn harmonic(freq: f64, species: &IonSpecies) -> Result<Self> {
        if !(freq > 0.0 && freq.is_finite()) {
            return Err(Error::InvalidParameter(format!("frequency must be positive, got {freq}")));
        }
        let omega = TAU * freq;
        Ok(Self { alpha1: 0.0, alpha2: 0.5 * species.mass * omega * omega, alpha4: 0.0, tune1: 0.0, tune2: 0.0 })
    }

    pub fn with_tuning(mut self, tune1: f64, tune2: f64) -> Self {
        self.tune1 = tune1;
        self.tune2 = tune2;
        self
    }

    /// Effective linear coefficient at control voltage `u_ax`.
    pub fn a1(&self, u_ax: f64) -> f64 {
        self.alpha1 + u_ax * self.tune1
    }

    /// Effective quadratic coefficient at control voltage `u_ax`.
    pub fn a2(&self, u_ax: f64) -> f64 {
        self.alpha2 + u_ax * self.tune2
    }

    pub fn eval(&self, u_ax: f64, z: f64) -> f64 {
        let z2 = z * z;
        self.a1(u_ax) * z + self.a2(u_ax) * z2 + self.alpha4 * z2 * z2
    }

    /// dU/dz, N.
    pub fn derivative(&self, u_ax: f64, z: f64) -> f64 {
        self.a1(u_ax) + 2.0 * self.a2(u_ax) * z + 4.0 * self.alpha4 * z * z * z
    }

    /// d^2U/dz^2, J/m^2.
    pub fn curvature(&self, u_ax: f64, z: f64) -> f64 {
        2.0 * self.a2(u_ax) + 12.0 * self.alpha4 * z * z
    }

    /// Real roots of dU/dz, ascending.
    pub fn stationary_points(&self, u_ax: f64) -> Vec<f64> {
        let a1 = self.a1(u_ax);
        let a2 = self.a2(u_ax);
        if self.alpha4 == 0.0 {
            return if a2 != 0.0 { vec![-a1 / (2.0 * a2)] } else { vec![] };
        }
        // depressed cubic z^3 + p z + q = 0
        let p = a2 / (2.0 * self.alpha4);
        let q = a1 / (4.0 * self.alpha4);
        let mut roots = depressed_cubic_roots(p, q);
        for z in roots.iter_mut() {
            // one Newton correction removes the rounding of the trigonometric form
            let c = self.curvature(u_ax, *z);
            if c != 0.0 {
                let dz = self.derivative(u_ax, *z) / c;
                if dz.abs() < 1e-6 * (z.abs() + p.abs().sqrt()) {
                    *z -= dz;
                }
            }
        }
        roots.sort_by(|a, b| a.total_cmp(b));
        roots
    }

    /// True when the potential has two distinct minima at `u_ax`.
    pub fn is_double_well(&self, u_ax: f64) -> bool {
        self.stationary_points(u_ax).len() == 3
    }

    /// Both minima, their local frequencies and the barrier height.
    pub fn find_wells(&self, u_ax: f64, species: &IonSpecies) -> Result<WellGeometry> {
        let roots = self.stationary_points(u_ax);
        if roots.len() != 3 {
            return Err(Error::NotDoubleWell { u_ax });
        }
        let (left, top, right) = (roots[0], roots[1], roots[2]);
        let k_left = self.curvature(u_ax, left);
        let k_right = self.curvature(u_ax, right);
        if k_left <= 0.0 || k_right <= 0.0 {
            return Err(Error::NotDoubleWell { u_ax });
        }
        let lower = self.eval(u_ax, left).min(self.eval(u_ax, right));
        Ok(WellGeometry {
            left_min: left,
            right_min: right,
            barrier_z: top,
            separation_r: right - left,
            freq_left: (k_left / species.mass).sqrt() / TAU,
            freq_right: (k_right / species.mass).sqrt() / TAU,
            barrier_height: (self.eval(u_ax, top) - lower).max(0.0),
        })
    }
}

/// Symmetric potential whose bare minima sit at `+-separation_r/2` with local
/// frequency `freq0` (Hz) for `species`. Tuning coefficients are zero.
pub fn calibrate_symmetric(separation_r: f64, freq0: f64, species: &IonSpecies) -> Result<AxialPotential> {
    if !(separation_r > 0.0 && separation_r.is_finite()) {
        return Err(Error::InvalidParameter(format!("separation must be positive, got {separation_r}")));
    }
    if !(freq0 > 0.0 && freq0.is_finite()) {
        return Err(Error::InvalidParameter(format!("frequency must be positive, got {freq0}")));
    }
    let k = species.mass * (TAU * freq0).powi(2);
    AxialPotential::new(0.0, -k / 4.0, k / (2.0 * separation_r * separation_r), 0.0, 0.0)
}

/// Real roots of `z^3 + p z + q`. Returns three roots when the discriminant
/// is positive, otherwise the single real root.
fn depressed_cubic_roots(p: f64, q: f64) -> Vec<f64> {
    let disc = -(4.0 * p * p * p + 27.0 * q * q);
    if p < 0.0 && disc > 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q) / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3).map(|k| m * (theta - TAU * k as f64 / 3.0).cos()).collect()
    } else if p == 0.0 && q == 0.0 {
        vec![0.0]
    } else {
        // Cardano, one real root
        let half_q = q / 2.0;
        let s = (half_q * half_q + p * p * p / 27.0).max(0.0).sqrt();
        let root = (-half_q + s).cbrt() + (-half_q - s).cbrt();
        vec![root]
    }
}
