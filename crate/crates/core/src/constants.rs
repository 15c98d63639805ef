//! Physical constants (CODATA 2018) shared by every module.
//!
//! All library quantities are SI. Angular frequencies (rad/s) are used
//! internally; the CLI reports ordinary frequencies in Hz.

/// Version tag of this table, embedded in every output file header.
pub const CONSTANTS_VERSION: &str = "CODATA-2018";

/// Elementary charge, C (exact).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Atomic mass constant, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Electron mass, kg.
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;

/// Atomic mass of neutral 40Ca in u (AME2016).
pub const CA40_ATOMIC_MASS_U: f64 = 39.962_590_863;

/// Coulomb constant 1/(4 pi eps0), N m^2 / C^2.
pub fn coulomb_constant() -> f64 {
    1.0 / (4.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY)
}

/// Named rows of the table, in print order.
pub fn table() -> Vec<(&'static str, f64, &'static str)> {
    vec![
        ("elementary_charge", ELEMENTARY_CHARGE, "C"),
        ("vacuum_permittivity", VACUUM_PERMITTIVITY, "F/m"),
        ("hbar", HBAR, "J s"),
        ("atomic_mass_unit", ATOMIC_MASS_UNIT, "kg"),
        ("electron_mass", ELECTRON_MASS, "kg"),
        ("ca40_atomic_mass", CA40_ATOMIC_MASS_U, "u"),
        ("coulomb_constant", coulomb_constant(), "N m^2/C^2"),
    ]
}
