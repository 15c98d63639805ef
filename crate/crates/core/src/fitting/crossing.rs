//! Two-level hyperbola fit of an avoided crossing:
//! `nu_pm(u) = nu_bar +- sqrt(slope^2 (u - u_res)^2 + s^2) / 2`.
//! Each point is assigned to whichever branch it lies closer to.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{run_fit, FitResult, FitSettings, ParamSpace};
use crate::error::{Error, Result};
use crate::modes::CrossingScan;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingPoint {
    /// V
    pub u_ax: f64,
    /// Hz
    pub nu: f64,
    /// Hz
    pub sigma: f64,
}

/// Both branches of every stable scan point, with a common `sigma`.
pub fn points_from_scan(scan: &CrossingScan, sigma: f64) -> Vec<CrossingPoint> {
    scan.points
        .iter()
        .filter(|p| p.stable)
        .flat_map(|p| {
            [CrossingPoint { u_ax: p.u_ax, nu: p.nu_low, sigma }, CrossingPoint { u_ax: p.u_ax, nu: p.nu_high, sigma }]
        })
        .collect()
}

#[derive(Deserialize)]
struct PointRow {
    #[serde(rename = "u_ax_V")]
    u_ax: f64,
    #[serde(rename = "nu_Hz")]
    nu: f64,
    #[serde(rename = "sigma_Hz")]
    sigma: f64,
}

#[derive(Deserialize)]
struct ScanRow {
    #[serde(rename = "u_ax_V")]
    u_ax: f64,
    #[serde(rename = "nu_low_Hz")]
    nu_low: f64,
    #[serde(rename = "nu_high_Hz")]
    nu_high: f64,
    stable_flag: u8,
}

/// Read crossing data, either `u_ax_V, nu_Hz, sigma_Hz` rows or a scan file
/// (`u_ax_V, nu_low_Hz, nu_high_Hz, stable_flag`) whose stable rows
/// contribute both branches with `scan_sigma`.
pub fn read_crossing_csv<R: std::io::Read>(reader: R, scan_sigma: f64) -> Result<Vec<CrossingPoint>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let is_scan = rdr.headers()?.iter().any(|h| h == "nu_low_Hz");
    let mut out = Vec::new();
    if is_scan {
        for row in rdr.deserialize() {
            let row: ScanRow = row?;
            if row.stable_flag != 0 {
                out.push(CrossingPoint { u_ax: row.u_ax, nu: row.nu_low, sigma: scan_sigma });
                out.push(CrossingPoint { u_ax: row.u_ax, nu: row.nu_high, sigma: scan_sigma });
            }
        }
    } else {
        for row in rdr.deserialize() {
            let row: PointRow = row?;
            out.push(CrossingPoint { u_ax: row.u_ax, nu: row.nu, sigma: row.sigma });
        }
    }
    Ok(out)
}

/// Signed residual to the nearest branch and whether that branch is the upper one.
fn nearest_branch(nu_bar: f64, slope: f64, u_res: f64, s: f64, p: &CrossingPoint) -> (f64, bool) {
    let half = 0.5 * (slope * slope * (p.u_ax - u_res).powi(2) + s * s).sqrt();
    let up = p.nu - (nu_bar + half);
    let down = p.nu - (nu_bar - half);
    if up.abs() <= down.abs() {
        (up, true)
    } else {
        (down, false)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

const NAMES: [&str; 4] = ["nu_bar_offset", "slope", "u_res_offset", "splitting"];

pub fn fit_avoided_crossing(points: &[CrossingPoint]) -> Result<FitResult> {
    fit_avoided_crossing_with(points, &FitSettings::default())
}

pub fn fit_avoided_crossing_with(points: &[CrossingPoint], settings: &FitSettings) -> Result<FitResult> {
    if points.len() < 4 {
        return Err(Error::InvalidParameter(format!("need at least 4 points, got {}", points.len())));
    }
    for p in points {
        if !(p.sigma > 0.0) || !p.u_ax.is_finite() || !p.nu.is_finite() {
            return Err(Error::InvalidParameter(format!("bad data point {p:?}")));
        }
    }

    // initial guess from the geometry of the point cloud
    let nu0 = median(points.iter().map(|p| p.nu).collect());
    let closest = points.iter().min_by(|a, b| (a.nu - nu0).abs().total_cmp(&(b.nu - nu0).abs())).unwrap();
    let u0 = closest.u_ax;
    let s0 = 2.0 * (closest.nu - nu0).abs();
    let nu_spread = points.iter().map(|p| (p.nu - nu0).abs()).fold(0.0, f64::max).max(1e-9 * nu0.abs()).max(1e-12);
    let u_spread = points.iter().map(|p| (p.u_ax - u0).abs()).fold(0.0, f64::max).max(1e-12);
    let slope0 = median(
        points
            .iter()
            .filter(|p| (p.u_ax - u0).abs() > 0.1 * u_spread)
            .map(|p| ((2.0 * (p.nu - nu0)).powi(2) - s0 * s0).max(0.0).sqrt() / (p.u_ax - u0).abs())
            .collect(),
    );
    let slope0 = if slope0.is_finite() && slope0 > 0.0 { slope0 } else { nu_spread / u_spread };

    let s_scale = s0.max(0.01 * nu_spread);
    let space = ParamSpace::new(
        &NAMES,
        vec![0.0, slope0, 0.0, s0.max(0.1 * s_scale)],
        vec![s_scale, slope0, u_spread * 0.1, s_scale],
    );
    let residual = |q: &[f64]| -> Option<Vec<f64>> {
        Some(points.iter().map(|p| nearest_branch(nu0 + q[0], q[1], u0 + q[2], q[3], p).0 / p.sigma).collect())
    };
    let raw = run_fit(&space, &residual, settings);
    let q = &raw.params;
    let (nu_bar, slope, u_res, s) = (nu0 + q[0], q[1].abs(), u0 + q[2], q[3].abs());

    let mut warnings = Vec::new();
    let upper = points.iter().filter(|p| nearest_branch(nu_bar, slope, u_res, s, p).1).count();
    if upper == 0 || upper == points.len() {
        warnings.push("all points lie on one branch; the splitting is not identifiable".to_owned());
    }

    // uncertainties in (nu_bar, slope, u_res, s^2): the s^2 coordinate stays
    // regular at s = 0 where d(nu)/ds vanishes
    let scales = [s_scale, slope0, 0.1 * u_spread, s_scale * s_scale];
    let center = [q[0], q[1], q[2], s * s];
    let model_sq = |v: &[f64]| -> Vec<f64> {
        points
            .iter()
            .map(|p| nearest_branch(nu0 + v[0], v[1], u0 + v[2], v[3].max(0.0).sqrt(), p).0 / p.sigma)
            .collect()
    };
    let r0 = model_sq(&center);
    let mut jac = DMatrix::zeros(points.len(), 4);
    for k in 0..4 {
        let h = 1e-6 * scales[k];
        let mut fwd = center;
        fwd[k] += h;
        let rf = model_sq(&fwd);
        if k == 3 && center[3] < h {
            for i in 0..points.len() {
                jac[(i, k)] = (rf[i] - r0[i]) / h * scales[k];
            }
        } else {
            let mut bwd = center;
            bwd[k] -= h;
            let rb = model_sq(&bwd);
            for i in 0..points.len() {
                jac[(i, k)] = (rf[i] - rb[i]) / (2.0 * h) * scales[k];
            }
        }
    }
    let cov = (jac.transpose() * &jac).try_inverse();
    let sig = |k: usize| -> f64 {
        match &cov {
            Some(c) if c[(k, k)] >= 0.0 => c[(k, k)].sqrt() * scales[k],
            _ => f64::INFINITY,
        }
    };
    // map the s^2 interval back to s; its lower side is the wider one and
    // reaches zero whenever s^2 is within one sigma of zero
    let sigma_s2 = sig(3);
    let sigma_s = s - (s * s - sigma_s2).max(0.0).sqrt();
    if cov.is_none() {
        warnings.push("residual curvature is singular; uncertainties unavailable".to_owned());
    }

    let parameters = BTreeMap::from([
        ("nu_bar".to_owned(), nu_bar),
        ("slope".to_owned(), slope),
        ("u_res".to_owned(), u_res),
        ("splitting".to_owned(), s),
    ]);
    let uncertainties = BTreeMap::from([
        ("nu_bar".to_owned(), sig(0)),
        ("slope".to_owned(), sig(1)),
        ("u_res".to_owned(), sig(2)),
        ("splitting".to_owned(), sigma_s),
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

    fn hyperbola(nu_bar: f64, slope: f64, u_res: f64, s: f64, us: &[f64], sigma: f64) -> Vec<CrossingPoint> {
        us.iter()
            .flat_map(|&u| {
                let half = 0.5 * (slope * slope * (u - u_res).powi(2) + s * s).sqrt();
                [CrossingPoint { u_ax: u, nu: nu_bar - half, sigma }, CrossingPoint { u_ax: u, nu: nu_bar + half, sigma }]
            })
            .collect()
    }

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn one_branch_is_flagged() {
        let pts: Vec<CrossingPoint> = hyperbola(5e5, 1e4, 0.1, 5.5e3, &grid(-1.0, 1.0, 15), 50.0)
            .into_iter()
            .filter(|p| p.nu > 5e5)
            .collect();
        let fit = fit_avoided_crossing(&pts).unwrap();
        assert!(fit.warnings.iter().any(|w| w.contains("one branch")), "{:?}", fit.warnings);
    }

    #[test]
    fn too_few_points() {
        let pts = hyperbola(5e5, 1e4, 0.0, 5.5e3, &[0.0], 50.0);
        assert!(fit_avoided_crossing(&pts).is_err());
    }
}
