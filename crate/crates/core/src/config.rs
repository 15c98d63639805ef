//! Trap files.
//!
//! TOML with `[species]`, `[trap]`, `[scan]` and `[fit]` sections. Every
//! quantity is SI and carries its unit in the key name:
//!
//! ```toml
//! [species]
//! name = "Ca40"            # or charge_c + mass_kg
//!
//! [trap]
//! separation_m = 54e-6     # calibrate from (r, f) ...
//! freq0_hz = 537e3
//! # alpha1_j_per_m = 0.0   # ... or give the coefficients directly
//! # alpha2_j_per_m2 = -1.9e-13
//! # alpha4_j_per_m4 = 1.3e-4
//! tune1_j_per_m_per_v = 1.25e-19
//! tune2_j_per_m2_per_v = 0.0
//!
//! [scan]
//! steps = 101
//!
//! [fit]
//! freeze = ["tune2"]
//! restarts = 5
//! seed = 24301
//! ```
//!
//! `electrode_voltages_v` and the `printed_*` keys in `[trap]` are recorded
//! for reference and never enter a computation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{calibrate_symmetric, AxialPotential, IonSpecies};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesSection {
    pub name: Option<String>,
    pub charge_c: Option<f64>,
    pub mass_kg: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    pub separation_m: Option<f64>,
    pub freq0_hz: Option<f64>,
    pub alpha1_j_per_m: Option<f64>,
    pub alpha2_j_per_m2: Option<f64>,
    pub alpha4_j_per_m4: Option<f64>,
    pub tune1_j_per_m_per_v: Option<f64>,
    pub tune2_j_per_m2_per_v: Option<f64>,
    /// Reference only.
    pub electrode_voltages_v: Option<Vec<f64>>,
    /// Tuning magnitudes as printed, in their original (non-energy) units.
    /// Reference only.
    pub printed_tune1_per_m: Option<f64>,
    pub printed_tune2_per_m2: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    /// Default `n_left,n_right`, e.g. `"1,1"`.
    pub ions: Option<String>,
    pub steps: Option<usize>,
    pub u_min_v: Option<f64>,
    pub u_max_v: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    #[serde(default)]
    pub freeze: Vec<String>,
    pub restarts: Option<usize>,
    pub seed: Option<u64>,
    pub approx_separation_m: Option<f64>,
    pub approx_freq_hz: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapFile {
    #[serde(default)]
    pub species: SpeciesSection,
    #[serde(default)]
    pub trap: TrapSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub fit: FitSection,
}

impl TrapFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("trap file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Io(e.to_string()))
    }

    /// Ca40 when nothing is given.
    pub fn species(&self) -> Result<IonSpecies> {
        let s = &self.species;
        match (&s.name, s.charge_c, s.mass_kg) {
            (None, None, None) => Ok(IonSpecies::ca40()),
            (Some(name), None, None) => IonSpecies::by_name(name),
            (name, Some(q), Some(m)) => IonSpecies::new(q, m, name.clone().unwrap_or_else(|| "custom".into())),
            _ => Err(Error::InvalidParameter(
                "[species] needs either name, or both charge_c and mass_kg".into(),
            )),
        }
    }

    /// Either the calibration pair or all three coefficients must be present,
    /// not both.
    pub fn potential(&self, species: &IonSpecies) -> Result<AxialPotential> {
        let t = &self.trap;
        let base = match (t.separation_m, t.freq0_hz, t.alpha2_j_per_m2, t.alpha4_j_per_m4) {
            (Some(r), Some(f), None, None) if t.alpha1_j_per_m.is_none() => calibrate_symmetric(r, f, species)?,
            (None, None, Some(a2), Some(a4)) => AxialPotential::new(t.alpha1_j_per_m.unwrap_or(0.0), a2, a4, 0.0, 0.0)?,
            _ => {
                return Err(Error::InvalidParameter(
                    "[trap] needs separation_m + freq0_hz, or alpha2_j_per_m2 + alpha4_j_per_m4 (alpha1 optional)".into(),
                ))
            }
        };
        Ok(base.with_tuning(t.tune1_j_per_m_per_v.unwrap_or(0.0), t.tune2_j_per_m2_per_v.unwrap_or(0.0)))
    }

    /// A file describing `p` by its coefficients.
    pub fn from_potential(p: &AxialPotential, species_name: &str) -> Self {
        Self {
            species: SpeciesSection { name: Some(species_name.to_owned()), ..Default::default() },
            trap: TrapSection {
                alpha1_j_per_m: Some(p.alpha1),
                alpha2_j_per_m2: Some(p.alpha2),
                alpha4_j_per_m4: Some(p.alpha4),
                tune1_j_per_m_per_v: Some(p.tune1),
                tune2_j_per_m2_per_v: Some(p.tune2),
                ..Default::default()
            },
            ..Default::default()
        }
    }
}

/// `"3,2"` or `"3+2"` into `(3, 2)`.
pub fn parse_ions(s: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = s.split([',', '+']).map(str::trim).collect();
    let bad = || Error::Parse(format!("ion counts must look like 'n_left,n_right', got '{s}'"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let l = parts[0].parse().map_err(|_| bad())?;
    let r = parts[1].parse().map_err(|_| bad())?;
    Ok((l, r))
}
