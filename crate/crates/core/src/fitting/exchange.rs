//! Fit of the damped, heated mean-phonon trace to measured `<n1>(tau)`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::{run_fit, FitResult, FitSettings, ParamSpace};
use crate::dynamics::ExchangeModel;
use crate::error::{Error, Result};
use crate::modes::golden_section;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExchangePoint {
    /// Waiting time, s.
    pub tau: f64,
    /// Measured mean phonon number of well 1.
    pub n1: f64,
    pub sigma: f64,
}

pub const MIN_POINTS: usize = 8;

#[derive(Deserialize)]
struct ExchangeRow {
    tau_s: f64,
    n1_mean: f64,
    #[serde(default)]
    sigma: Option<f64>,
}

/// Read `tau_s, n1_mean[, sigma]` rows (`#` lines are comments). Rows
/// without a sigma column get `default_sigma`.
pub fn read_exchange_csv<R: std::io::Read>(reader: R, default_sigma: f64) -> Result<Vec<ExchangePoint>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: ExchangeRow = row?;
        let sigma = row.sigma.unwrap_or(default_sigma);
        if !(sigma > 0.0) {
            return Err(Error::Parse(format!("sigma must be positive, got {sigma}")));
        }
        out.push(ExchangePoint { tau: row.tau_s, n1: row.n1_mean, sigma });
    }
    Ok(out)
}

/// Weighted straight line `a + b t`.
fn line_fit(data: &[ExchangePoint]) -> (f64, f64) {
    let (mut s, mut st, mut stt, mut sy, mut sty) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in data {
        let w = 1.0 / (p.sigma * p.sigma);
        s += w;
        st += w * p.tau;
        stt += w * p.tau * p.tau;
        sy += w * p.n1;
        sty += w * p.tau * p.n1;
    }
    let det = s * stt - st * st;
    if det.abs() < 1e-300 {
        return (sy / s, 0.0);
    }
    ((stt * sy - st * sty) / det, (s * sty - st * sy) / det)
}

/// Weighted projection of `resid` onto `cos(w t)`, `sin(w t)`: returns the
/// chi^2 reduction and the two coefficients.
fn harmonic_power(data: &[ExchangePoint], resid: &[f64], w: f64) -> (f64, f64, f64) {
    let (mut cc, mut ss, mut cs, mut yc, mut ys) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (p, r) in data.iter().zip(resid) {
        let wt = 1.0 / (p.sigma * p.sigma);
        let (s, c) = (w * p.tau).sin_cos();
        cc += wt * c * c;
        ss += wt * s * s;
        cs += wt * c * s;
        yc += wt * r * c;
        ys += wt * r * s;
    }
    let det = cc * ss - cs * cs;
    if det.abs() < 1e-300 * (cc * ss).max(1e-300) || det <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let a = (ss * yc - cs * ys) / det;
    let b = (cc * ys - cs * yc) / det;
    (a * yc + b * ys, a, b)
}

/// Dominant angular frequency of the detrended trace, with the cosine and
/// sine amplitudes at that frequency.
pub fn dominant_frequency(data: &[ExchangePoint]) -> Option<(f64, f64, f64)> {
    let (a, b) = line_fit(data);
    let resid: Vec<f64> = data.iter().map(|p| p.n1 - a - b * p.tau).collect();
    let t_min = data.iter().map(|p| p.tau).fold(f64::INFINITY, f64::min);
    let t_max = data.iter().map(|p| p.tau).fold(f64::NEG_INFINITY, f64::max);
    let span = t_max - t_min;
    if !(span > 0.0) {
        return None;
    }
    let mut taus: Vec<f64> = data.iter().map(|p| p.tau).collect();
    taus.sort_by(|x, y| x.total_cmp(y));
    let mut gaps: Vec<f64> = taus.windows(2).map(|w| w[1] - w[0]).filter(|g| *g > 0.0).collect();
    gaps.sort_by(|x, y| x.total_cmp(y));
    let median_gap = *gaps.get(gaps.len() / 2)?;
    let w_max = PI / median_gap;
    let dw = TAU / span / 10.0;
    let w_min = 0.5 * TAU / span;
    let n = ((w_max - w_min) / dw).ceil() as usize + 1;
    let (w_best, p_best) = (0..n)
        .map(|k| {
            let w = w_min + k as f64 * dw;
            (w, harmonic_power(data, &resid, w).0)
        })
        .max_by(|x, y| x.1.total_cmp(&y.1))?;
    if !(p_best > 0.0) {
        return None;
    }
    let (w, _) = golden_section(|w| -harmonic_power(data, &resid, w).0, (w_best - dw).max(0.5 * w_min), w_best + dw, 1e-9 * w_best);
    let (_, c, s) = harmonic_power(data, &resid, w);
    Some((w, c, s))
}

const NAMES: [&str; 5] = ["n1_0", "n2_0", "omega_c", "decay_rate", "gamma_h"];

/// Weighted least-squares fit of [`ExchangeModel`] to `data`, with default
/// optimizer settings.
pub fn fit_exchange(data: &[ExchangePoint]) -> Result<FitResult> {
    fit_exchange_with(data, &FitSettings::default())
}

pub fn fit_exchange_with(data: &[ExchangePoint], settings: &FitSettings) -> Result<FitResult> {
    if data.len() < MIN_POINTS {
        return Err(Error::InvalidParameter(format!("need at least {MIN_POINTS} points, got {}", data.len())));
    }
    for p in data {
        if !(p.sigma > 0.0) || !p.tau.is_finite() || !p.n1.is_finite() || p.tau < 0.0 {
            return Err(Error::InvalidParameter(format!("bad data point {p:?}")));
        }
    }
    let t_min = data.iter().map(|p| p.tau).fold(f64::INFINITY, f64::min);
    let t_max = data.iter().map(|p| p.tau).fold(f64::NEG_INFINITY, f64::max);
    let span = t_max - t_min;
    let (a, b) = line_fit(data);
    let mut warnings = Vec::new();

    let detrended = data.iter().map(|p| (p.n1 - a - b * p.tau).abs()).fold(0.0, f64::max);
    let scale_y = data.iter().map(|p| p.n1.abs()).fold(1.0, f64::max);
    let guess = if detrended > 1e-9 * scale_y { dominant_frequency(data) } else { None };
    let Some((w0, amp_c, _)) = guess else {
        warnings.push("trace shows no oscillation; omega_c is unidentifiable".to_owned());
        let residual = data.iter().map(|p| ((p.n1 - a - b * p.tau) / p.sigma).powi(2)).sum();
        let parameters = BTreeMap::from([
            ("n1_0".to_owned(), a),
            ("n2_0".to_owned(), a),
            ("omega_c".to_owned(), 0.0),
            ("tau_damp".to_owned(), f64::INFINITY),
            ("gamma_h".to_owned(), b),
        ]);
        let uncertainties = parameters.keys().map(|k| (k.clone(), f64::INFINITY)).collect();
        return Ok(FitResult { parameters, uncertainties, residual, converged: false, warnings, evaluations: 0 });
    };

    let n1_0 = a + amp_c;
    let n2_0 = a - amp_c;
    let decay0 = 1.0 / (3.0 * span.max(1e-300));
    let n_scale = n1_0.abs().max(n2_0.abs()).max(1.0);
    let space = ParamSpace::new(
        &NAMES,
        vec![n1_0, n2_0, w0, decay0, b],
        vec![n_scale, n_scale, w0, 1.0 / span, (amp_c.abs() + 1.0) / span],
    );

    let residual = |p: &[f64]| -> Option<Vec<f64>> {
        // a slightly negative decay rate is allowed so that undamped data
        // does not leave the optimum on a boundary
        if !(p[2] > 0.0) {
            return None;
        }
        let half = 0.5 * (p[0] - p[1]);
        let mean = 0.5 * (p[0] + p[1]);
        Some(
            data.iter()
                .map(|d| (mean + half * (p[2] * d.tau).cos() * (-p[3] * d.tau).exp() + p[4] * d.tau - d.n1) / d.sigma)
                .collect(),
        )
    };
    let raw = run_fit(&space, &residual, settings);
    let p = &raw.params;
    if raw.singular {
        warnings.push("residual curvature is singular; uncertainties unavailable".to_owned());
    }
    if span < PI / p[2] {
        warnings.push("data span shorter than one swap time".to_owned());
    }
    // reject parameter sets the model type itself would refuse
    if ExchangeModel::new(p[0].max(0.0), p[1].max(0.0), p[2], 1.0 / p[3].max(0.0), p[4].max(0.0)).is_err() {
        warnings.push("best fit lies outside the physical parameter range".to_owned());
    }
    if p[3] < -2.0 * raw.sigmas[3] {
        warnings.push("best fit has a growing oscillation amplitude".to_owned());
    }
    let tau_damp = if p[3] > 0.0 { 1.0 / p[3] } else { f64::INFINITY };
    let parameters = BTreeMap::from([
        ("n1_0".to_owned(), p[0]),
        ("n2_0".to_owned(), p[1]),
        ("omega_c".to_owned(), p[2]),
        ("tau_damp".to_owned(), tau_damp),
        ("gamma_h".to_owned(), p[4]),
    ]);
    let s = &raw.sigmas;
    let uncertainties = BTreeMap::from([
        ("n1_0".to_owned(), s[0]),
        ("n2_0".to_owned(), s[1]),
        ("omega_c".to_owned(), s[2]),
        ("tau_damp".to_owned(), if p[3] > 0.0 { s[3] / (p[3] * p[3]) } else { f64::INFINITY }),
        ("gamma_h".to_owned(), s[4]),
    ]);
    Ok(FitResult {
        parameters,
        uncertainties,
        residual: raw.cost,
        converged: raw.converged,
        warnings,
        evaluations: raw.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(model: &ExchangeModel, n: usize, until: f64, sigma: f64) -> Vec<ExchangePoint> {
        (0..n)
            .map(|k| {
                let tau = until * k as f64 / (n - 1) as f64;
                ExchangePoint { tau, n1: model.eval(tau), sigma }
            })
            .collect()
    }

    #[test]
    fn spectral_guess_finds_the_exchange_frequency() {
        let m = ExchangeModel::new(3.9, 9.0, TAU * 2.25e3, 3e-3, 1300.0).unwrap();
        let (w, c, _) = dominant_frequency(&synthetic(&m, 50, 1e-3, 0.3)).unwrap();
        assert!((w / m.omega_c - 1.0).abs() < 0.1, "{w}");
        assert!(c < 0.0);
    }

    #[test]
    fn too_few_points() {
        let m = ExchangeModel::new(3.9, 9.0, TAU * 2.25e3, 3e-3, 1300.0).unwrap();
        assert!(fit_exchange(&synthetic(&m, 7, 1e-3, 0.3)).is_err());
    }

    #[test]
    fn constant_trace_is_flagged() {
        let data: Vec<ExchangePoint> =
            (0..20).map(|k| ExchangePoint { tau: k as f64 * 1e-5, n1: 4.0, sigma: 0.2 }).collect();
        let fit = fit_exchange(&data).unwrap();
        assert!(!fit.converged);
        assert!(!fit.warnings.is_empty());
    }
}
