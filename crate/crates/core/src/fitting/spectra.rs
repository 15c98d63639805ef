//! Simultaneous fit of one potential to the mode spectra of several ion
//! configurations.
//!
//! The model frequency of a data point is the nearer of the two lowest modes
//! of its configuration at the effective control voltage
//! `u_ax + u_offset + drift_rate * timestamp`.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{run_fit, FitResult, FitSettings, ParamSpace};
use crate::coupling::coupling_rate;
use crate::equilibrium::{solve_equilibrium, IonConfiguration};
use crate::error::{Error, Result};
use crate::modes::{detuning_slope, spectrum_at};
use crate::potential::{calibrate_symmetric, AxialPotential, IonSpecies};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectraPoint {
    pub n_left: usize,
    pub n_right: usize,
    /// V
    pub u_ax: f64,
    /// Hz
    pub frequency: f64,
    /// Hz
    pub sigma: f64,
    /// s, for drift correction.
    pub timestamp: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectraDataset {
    pub points: Vec<SpectraPoint>,
}

/// Parse `"2+1"` into `(2, 1)`.
pub fn parse_config_label(label: &str) -> Result<(usize, usize)> {
    let (l, r) = label
        .trim()
        .split_once('+')
        .ok_or_else(|| Error::Parse(format!("configuration label '{label}' is not of the form L+R")))?;
    let parse = |s: &str| s.trim().parse::<usize>().map_err(|e| Error::Parse(format!("'{label}': {e}")));
    let (l, r) = (parse(l)?, parse(r)?);
    if l + r == 0 {
        return Err(Error::Parse(format!("configuration '{label}' holds no ions")));
    }
    Ok((l, r))
}

#[derive(Debug, Deserialize)]
struct SpectraRow {
    config_label: String,
    #[serde(rename = "u_ax_V")]
    u_ax: f64,
    #[serde(rename = "frequency_Hz")]
    frequency: f64,
    #[serde(rename = "sigma_Hz")]
    sigma: f64,
    #[serde(rename = "timestamp_s")]
    timestamp: f64,
}

impl SpectraDataset {
    pub fn new(points: Vec<SpectraPoint>) -> Self {
        Self { points }
    }

    /// Distinct `(n_left, n_right)` present, sorted.
    pub fn configurations(&self) -> Vec<(usize, usize)> {
        self.points.iter().map(|p| (p.n_left, p.n_right)).collect::<BTreeSet<_>>().into_iter().collect()
    }

    /// Read `config_label, u_ax_V, frequency_Hz, sigma_Hz, timestamp_s` rows;
    /// lines starting with `#` are comments.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let mut points = Vec::new();
        for row in rdr.deserialize() {
            let row: SpectraRow = row?;
            let (n_left, n_right) = parse_config_label(&row.config_label)?;
            if !(row.sigma > 0.0) {
                return Err(Error::Parse(format!("sigma must be positive, got {}", row.sigma)));
            }
            points.push(SpectraPoint {
                n_left,
                n_right,
                u_ax: row.u_ax,
                frequency: row.frequency,
                sigma: row.sigma,
                timestamp: row.timestamp,
            });
        }
        Ok(Self { points })
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["config_label", "u_ax_V", "frequency_Hz", "sigma_Hz", "timestamp_s"])?;
        for p in &self.points {
            wr.write_record([
                format!("{}+{}", p.n_left, p.n_right),
                format!("{:.12e}", p.u_ax),
                format!("{:.12e}", p.frequency),
                format!("{:.6e}", p.sigma),
                format!("{:.6e}", p.timestamp),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Model frequencies for every point (the nearer of the two lowest modes),
/// reusing and updating `warm` seeds per point.
pub(crate) fn model_frequencies(
    p: &AxialPotential,
    u_offset: f64,
    drift_rate: f64,
    data: &[SpectraPoint],
    species: &IonSpecies,
    warm: &mut [Option<Vec<f64>>],
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(data.len());
    for (k, d) in data.iter().enumerate() {
        let config = IonConfiguration::new(species.clone(), d.n_left, d.n_right)?;
        let u = d.u_ax + u_offset + drift_rate * d.timestamp;
        let eq = match solve_equilibrium(p, u, &config, warm[k].as_deref())?.into_valid() {
            Ok(eq) => eq,
            Err(_) => solve_equilibrium(p, u, &config, None)?.into_valid()?,
        };
        let s = spectrum_at(p, u, &config, &eq)?;
        let f = match s.lowest_pair() {
            Some((lo, hi)) => {
                if (d.frequency - lo).abs() <= (d.frequency - hi).abs() {
                    lo
                } else {
                    hi
                }
            }
            None => s.frequencies[0],
        };
        warm[k] = Some(eq.positions);
        out.push(f);
    }
    Ok(out)
}

/// Starting point and fit controls.
#[derive(Debug, Clone)]
pub struct SpectraFitOptions {
    /// Approximate well separation, m (used when `initial` is absent).
    pub approx_separation: f64,
    /// Approximate well frequency, Hz (used when `initial` is absent).
    pub approx_freq: f64,
    /// Explicit starting potential; overrides the approximate pair.
    pub initial: Option<AxialPotential>,
    pub initial_u_offset: Option<f64>,
    pub initial_drift_rate: f64,
    /// Parameters held at their initial value.
    pub freeze: Vec<String>,
    pub settings: FitSettings,
}

impl Default for SpectraFitOptions {
    fn default() -> Self {
        Self {
            approx_separation: 54e-6,
            approx_freq: 537e3,
            initial: None,
            initial_u_offset: None,
            initial_drift_rate: 0.0,
            freeze: Vec::new(),
            settings: FitSettings::default(),
        }
    }
}

pub const PARAMETERS: [&str; 6] = ["alpha2", "alpha4", "tune1", "tune2", "u_offset", "drift_rate"];

pub fn fit_spectra(data: &SpectraDataset, species: &IonSpecies) -> Result<FitResult> {
    fit_spectra_with(data, species, &SpectraFitOptions::default())
}

pub fn fit_spectra_with(data: &SpectraDataset, species: &IonSpecies, opts: &SpectraFitOptions) -> Result<FitResult> {
    let pts = &data.points;
    if pts.is_empty() {
        return Err(Error::InvalidParameter("empty spectra dataset".into()));
    }
    for p in pts {
        if !(p.sigma > 0.0) || !p.u_ax.is_finite() || !p.frequency.is_finite() || !p.timestamp.is_finite() {
            return Err(Error::InvalidParameter(format!("bad data point {p:?}")));
        }
    }
    let mut warnings = Vec::new();
    let configs = data.configurations();
    let mut identifiable = true;
    if configs.len() < 2 {
        warnings.push("only one configuration: potential parameters are not jointly identifiable".to_owned());
        identifiable = false;
    }
    for (nl, nr) in &configs {
        let n = pts.iter().filter(|p| (p.n_left, p.n_right) == (*nl, *nr)).count();
        if n < 3 {
            warnings.push(format!("configuration {nl}+{nr} has fewer than 3 points"));
        }
    }

    // starting point
    let base = match opts.initial {
        Some(p) => p,
        None => calibrate_symmetric(opts.approx_separation, opts.approx_freq, species)?,
    };
    let u_min = pts.iter().map(|p| p.u_ax).fold(f64::INFINITY, f64::min);
    let u_max = pts.iter().map(|p| p.u_ax).fold(f64::NEG_INFINITY, f64::max);
    let u_extent = (u_max - u_min).max(1e-6);
    let t_min = pts.iter().map(|p| p.timestamp).fold(f64::INFINITY, f64::min);
    let t_max = pts.iter().map(|p| p.timestamp).fold(f64::NEG_INFINITY, f64::max);
    let t_extent = t_max - t_min;

    let wells = base.find_wells(0.0, species)?;
    let f0 = 0.5 * (wells.freq_left + wells.freq_right);
    let tune1 = if opts.initial.is_some() && base.tune1 != 0.0 {
        base.tune1
    } else {
        // the scan extent is taken to span about ten expected splittings of detuning
        let s0 = coupling_rate(species, species, f0, f0, wells.separation_r)? / TAU;
        let probe = 1e-19;
        let per_volt = detuning_slope(&base.with_tuning(probe, 0.0), 0.0, species)?.abs();
        probe * (10.0 * s0 / u_extent) / per_volt
    };
    let tune2 = if opts.initial.is_some() { base.tune2 } else { 0.0 };
    let u_offset = opts.initial_u_offset.unwrap_or_else(|| {
        let sym: Vec<f64> = pts.iter().filter(|p| p.n_left == p.n_right).map(|p| p.u_ax).collect();
        if sym.is_empty() {
            0.0
        } else {
            -sym.iter().sum::<f64>() / sym.len() as f64
        }
    });

    let mut space = ParamSpace::new(
        &PARAMETERS,
        vec![base.alpha2, base.alpha4, tune1, tune2, u_offset, opts.initial_drift_rate],
        vec![
            base.alpha2.abs(),
            base.alpha4,
            tune1.abs().max(1e-30),
            1e-3 * base.alpha2.abs(),
            0.1 * u_extent,
            if t_extent > 0.0 { 0.01 * u_extent / t_extent } else { 1.0 },
        ],
    );
    for name in &opts.freeze {
        space.freeze(name)?;
    }
    if !(t_extent > 0.0) && space.free[5] {
        warnings.push("all timestamps equal: drift_rate frozen".to_owned());
        space.freeze("drift_rate")?;
    }

    let warm: RefCell<Vec<Option<Vec<f64>>>> = RefCell::new(vec![None; pts.len()]);
    let alpha1 = base.alpha1;
    let residual = |q: &[f64]| -> Option<Vec<f64>> {
        let p = AxialPotential::new(alpha1, q[0], q[1], q[2], q[3]).ok()?;
        let mut cache = warm.borrow_mut();
        let model = model_frequencies(&p, q[4], q[5], pts, species, &mut cache).ok()?;
        Some(model.iter().zip(pts).map(|(m, d)| (m - d.frequency) / d.sigma).collect())
    };
    let raw = run_fit(&space, &residual, &opts.settings);
    if raw.singular {
        warnings.push("residual curvature is singular; uncertainties unavailable".to_owned());
    }
    let parameters: BTreeMap<String, f64> =
        PARAMETERS.iter().zip(&raw.params).map(|(n, v)| (n.to_string(), *v)).collect();
    let uncertainties: BTreeMap<String, f64> =
        PARAMETERS.iter().zip(&raw.sigmas).map(|(n, v)| (n.to_string(), *v)).collect();
    Ok(FitResult {
        parameters,
        uncertainties,
        residual: raw.cost,
        converged: raw.converged && identifiable,
        warnings,
        evaluations: raw.evaluations,
    })
}

/// Potential described by a spectra fit (alpha1 taken from `base`).
pub fn fitted_potential(fit: &FitResult, alpha1: f64) -> Result<AxialPotential> {
    AxialPotential::new(alpha1, fit.get("alpha2"), fit.get("alpha4"), fit.get("tune1"), fit.get("tune2"))
}
