#![allow(dead_code)]

use ionlink::equilibrium::IonConfiguration;
use ionlink::fitting::{SpectraDataset, SpectraPoint};
use ionlink::modes::{auto_range, mode_frequencies};
use ionlink::potential::{calibrate_symmetric, AxialPotential, IonSpecies};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Control-voltage response used throughout the tests, J/m per volt.
pub const TUNE1: f64 = 1.25e-19;

pub fn ca() -> IonSpecies {
    IonSpecies::ca40()
}

/// Symmetric 54 um / 537 kHz well for 40Ca+, with the test tuning.
pub fn reference_potential() -> AxialPotential {
    calibrate_symmetric(54e-6, 537e3, &ca()).unwrap().with_tuning(TUNE1, 0.0)
}

pub const REFERENCE_CONFIGS: [(usize, usize); 5] = [(1, 1), (2, 1), (2, 2), (3, 2), (3, 3)];

/// Both branches of each configuration over its auto range, `per_config`
/// voltages each, measured one configuration after another with
/// `seconds_per_point` between points and the control voltage drifting by
/// `drift` V/s. Frequencies get Gaussian noise of `noise` Hz.
#[allow(clippy::too_many_arguments)]
pub fn synthetic_spectra(
    p: &AxialPotential,
    configs: &[(usize, usize)],
    per_config: usize,
    seconds_per_point: f64,
    drift: f64,
    noise: f64,
    sigma: f64,
    seed: u64,
) -> SpectraDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut points = Vec::new();
    let mut t = 0.0;
    for &(nl, nr) in configs {
        let cfg = IonConfiguration::new(ca(), nl, nr).unwrap();
        let (lo, hi) = auto_range(p, &cfg).unwrap();
        for k in 0..per_config {
            let u = lo + (hi - lo) * k as f64 / (per_config - 1) as f64;
            // the set voltage is u; the ions see u + drift * t
            let s = mode_frequencies(p, u + drift * t, &cfg).unwrap();
            let (a, b) = s.lowest_pair().unwrap();
            for f in [a, b] {
                let f = f + noise * normal.sample(&mut rng);
                points.push(SpectraPoint { n_left: nl, n_right: nr, u_ax: u, frequency: f, sigma, timestamp: t });
            }
            t += seconds_per_point;
        }
    }
    SpectraDataset::new(points)
}
