//! Parameter recovery from measured data: mode spectra of several ion
//! configurations, single avoided crossings, and phonon-exchange traces.
//!
//! Every fitter minimizes a weighted sum of squares with simplex descent from
//! the initial guess plus random restarts, followed by a Levenberg-Marquardt
//! polish. Uncertainties come from the curvature of the residual at the
//! optimum, `(J^T J)^-1`, and are approximate.

pub mod crossing;
pub mod exchange;
pub mod optimize;
pub mod spectra;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use optimize::{covariance, levenberg_marquardt, multistart, Residuals, SimplexOptions};

pub use crossing::{fit_avoided_crossing, fit_avoided_crossing_with, points_from_scan, read_crossing_csv, CrossingPoint};
pub use exchange::{fit_exchange, fit_exchange_with, read_exchange_csv, ExchangePoint};
pub use spectra::{fit_spectra, fit_spectra_with, fitted_potential, SpectraDataset, SpectraFitOptions, SpectraPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub parameters: BTreeMap<String, f64>,
    /// One standard deviation; infinite (`null` in JSON) when unidentifiable,
    /// zero for frozen parameters.
    pub uncertainties: BTreeMap<String, f64>,
    /// Weighted sum of squared residuals.
    pub residual: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
    pub evaluations: usize,
}

impl FitResult {
    /// Value of a named parameter.
    pub fn get(&self, name: &str) -> f64 {
        self.parameters.get(name).copied().unwrap_or(f64::NAN)
    }

    pub fn uncertainty(&self, name: &str) -> f64 {
        self.uncertainties.get(name).copied().unwrap_or(f64::NAN)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Optimizer settings common to all fitters.
#[derive(Debug, Clone)]
pub struct FitSettings {
    pub restarts: usize,
    /// Relative size of the restart perturbations.
    pub spread: f64,
    pub seed: u64,
    pub simplex: SimplexOptions,
    pub lm_iterations: usize,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self { restarts: 5, spread: 0.05, seed: 0x5eed, simplex: SimplexOptions::default(), lm_iterations: 200 }
    }
}

/// Named parameters with scales, some possibly frozen at their initial value.
#[derive(Debug, Clone)]
pub(crate) struct ParamSpace {
    pub names: Vec<&'static str>,
    pub initial: Vec<f64>,
    pub scales: Vec<f64>,
    pub free: Vec<bool>,
}

impl ParamSpace {
    pub fn new(names: &[&'static str], initial: Vec<f64>, scales: Vec<f64>) -> Self {
        let free = vec![true; names.len()];
        Self { names: names.to_vec(), initial, scales, free }
    }

    pub fn freeze(&mut self, name: &str) -> Result<()> {
        let i = self
            .names
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown fit parameter '{name}'")))?;
        self.free[i] = false;
        Ok(())
    }

    pub fn x0(&self) -> Vec<f64> {
        (0..self.names.len()).filter(|&i| self.free[i]).map(|i| self.initial[i] / self.scales[i]).collect()
    }

    pub fn physical(&self, x: &[f64]) -> Vec<f64> {
        let mut it = x.iter();
        (0..self.names.len())
            .map(|i| if self.free[i] { it.next().unwrap() * self.scales[i] } else { self.initial[i] })
            .collect()
    }
}

pub(crate) struct RawFit {
    pub params: Vec<f64>,
    /// Standard deviations of the physical parameters.
    pub sigmas: Vec<f64>,
    pub cost: f64,
    pub converged: bool,
    pub evaluations: usize,
    pub singular: bool,
}

/// Multistart simplex plus Levenberg-Marquardt on `residual` (physical params).
pub(crate) fn run_fit(space: &ParamSpace, residual: &Residuals<'_>, settings: &FitSettings) -> RawFit {
    let scaled = |x: &[f64]| residual(&space.physical(x));
    let x0 = space.x0();
    let initial_cost = optimize::cost(&scaled, &x0);
    let nm = multistart(&scaled, &x0, settings.restarts, settings.spread, settings.seed, &settings.simplex);
    let lm = levenberg_marquardt(&scaled, &nm.x, settings.lm_iterations);
    let (x, cost, lm_ok) = if lm.cost <= nm.cost { (lm.x, lm.cost, lm.converged) } else { (nm.x, nm.cost, false) };

    let cov = covariance(&scaled, &x);
    let mut sigmas = vec![0.0; space.names.len()];
    let mut k = 0;
    for i in 0..space.names.len() {
        if space.free[i] {
            sigmas[i] = match &cov {
                Some(c) => c[(k, k)].sqrt() * space.scales[i].abs(),
                None => f64::INFINITY,
            };
            k += 1;
        }
    }
    let decreased = cost < initial_cost || initial_cost == 0.0;
    RawFit {
        params: space.physical(&x),
        sigmas,
        cost,
        converged: lm_ok && decreased && cost.is_finite(),
        evaluations: nm.evals + lm.evals,
        singular: cov.is_none(),
    }
}
