//! Normal modes from the Hessian of the total energy, control-voltage scans
//! through the avoided crossing, and the antenna enhancement table.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::constants::coulomb_constant;
use crate::coupling::point_charge_rate;
use crate::equilibrium::{check_distinct, solve_equilibrium, EquilibriumResult, IonConfiguration};
use crate::error::{Error, Result};
use crate::potential::{AxialPotential, IonSpecies};

/// Resolution of the golden-section refinement of the gap minimum, V.
pub const RESONANCE_TOLERANCE: f64 = 1e-5;

/// Second-derivative matrix of the total energy, J/m^2.
pub fn hessian(p: &AxialPotential, u_ax: f64, positions: &[f64], species: &IonSpecies) -> Result<DMatrix<f64>> {
    check_distinct(positions)?;
    let n = positions.len();
    let kq2 = coulomb_constant() * species.charge * species.charge;
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = p.curvature(u_ax, positions[i]);
    }
    for i in 0..n {
        for j in i + 1..n {
            let c = 2.0 * kq2 / (positions[i] - positions[j]).abs().powi(3);
            h[(i, i)] += c;
            h[(j, j)] += c;
            h[(i, j)] = -c;
            h[(j, i)] = -c;
        }
    }
    Ok(h)
}

/// Normal modes at one equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpectrum {
    /// Ascending, Hz.
    pub frequencies: Vec<f64>,
    /// Column k is the mass-weighted displacement pattern of mode k.
    pub eigenvectors: DMatrix<f64>,
    /// Equilibrium positions the modes were computed at, m.
    pub positions: Vec<f64>,
    /// Share of each mode's squared amplitude carried by the left-well ions.
    pub left_weight: Vec<f64>,
}

impl ModeSpectrum {
    /// The two lowest modes, which form the coupled pair.
    pub fn lowest_pair(&self) -> Option<(f64, f64)> {
        match self.frequencies.as_slice() {
            [a, b, ..] => Some((*a, *b)),
            _ => None,
        }
    }
}

/// Modes of a Hessian with per-ion masses, `K = M^-1/2 H M^-1/2`.
pub fn mass_weighted_spectrum(h: &DMatrix<f64>, masses: &[f64], n_left: usize) -> Result<ModeSpectrum> {
    let n = h.nrows();
    if h.ncols() != n || masses.len() != n {
        return Err(Error::InvalidParameter(format!("Hessian {}x{} with {} masses", n, h.ncols(), masses.len())));
    }
    if let Some(m) = masses.iter().find(|&&m| !(m > 0.0)) {
        return Err(Error::InvalidParameter(format!("mass must be positive, got {m}")));
    }
    let k = DMatrix::from_fn(n, n, |i, j| h[(i, j)] / (masses[i] * masses[j]).sqrt());
    // symmetrize against rounding in the caller's matrix
    let k = (&k + k.transpose()) * 0.5;
    let eig = k.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    if let Some(&lowest) = order.first() {
        let lambda = eig.eigenvalues[lowest];
        if lambda <= 0.0 {
            // reported in J/m^2 for the equal-mass case
            return Err(Error::Unstable { eigenvalue: lambda * masses[0] });
        }
    }
    let frequencies = order.iter().map(|&k| eig.eigenvalues[k].sqrt() / TAU).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |i, c| eig.eigenvectors[(i, order[c])]);
    let left_weight = (0..n)
        .map(|c| (0..n_left.min(n)).map(|i| eigenvectors[(i, c)].powi(2)).sum())
        .collect();
    Ok(ModeSpectrum { frequencies, eigenvectors, positions: Vec::new(), left_weight })
}

/// Spectrum at an already solved equilibrium.
pub fn spectrum_at(
    p: &AxialPotential,
    u_ax: f64,
    config: &IonConfiguration,
    eq: &EquilibriumResult,
) -> Result<ModeSpectrum> {
    if !eq.converged {
        return Err(Error::NotConverged { iterations: eq.iterations, grad_norm: eq.grad_norm });
    }
    let h = hessian(p, u_ax, &eq.positions, &config.species)?;
    let masses = vec![config.species.mass; config.len()];
    let mut s = mass_weighted_spectrum(&h, &masses, config.n_left)?;
    s.positions = eq.positions.clone();
    Ok(s)
}

/// Solve the equilibrium at `u_ax` and return the full mode spectrum.
pub fn mode_frequencies(p: &AxialPotential, u_ax: f64, config: &IonConfiguration) -> Result<ModeSpectrum> {
    let eq = solve_equilibrium(p, u_ax, config, None)?.into_valid()?;
    spectrum_at(p, u_ax, config, &eq)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub u_ax: f64,
    /// Hz; NaN when unstable.
    pub nu_low: f64,
    /// Hz; NaN when unstable.
    pub nu_high: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingScan {
    pub points: Vec<ScanPoint>,
    /// Minimal gap between the two lowest modes, Hz.
    pub splitting: f64,
    /// Control voltage of the minimal gap, V.
    pub resonance_voltage: f64,
}

impl CrossingScan {
    /// Rows for CSV output: `u_ax_V, nu_low_Hz, nu_high_Hz, stable_flag`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["u_ax_V", "nu_low_Hz", "nu_high_Hz", "stable_flag"])?;
        for pt in &self.points {
            wr.write_record([
                format!("{:.9e}", pt.u_ax),
                format!("{:.9e}", pt.nu_low),
                format!("{:.9e}", pt.nu_high),
                (pt.stable as u8).to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Lowest pair at `u_ax`, seeded from `seeds` when given; the solved
/// positions are returned for warm-starting the next point.
fn pair_at(
    p: &AxialPotential,
    u_ax: f64,
    config: &IonConfiguration,
    seeds: Option<&[f64]>,
) -> Result<(f64, f64, Vec<f64>)> {
    let eq = match solve_equilibrium(p, u_ax, config, seeds)?.into_valid() {
        Ok(eq) => eq,
        // a warm start from a distant point can fail where default seeds succeed
        Err(e) if seeds.is_some() => solve_equilibrium(p, u_ax, config, None)?.into_valid().map_err(|_| e)?,
        Err(e) => return Err(e),
    };
    let s = spectrum_at(p, u_ax, config, &eq)?;
    let (lo, hi) = s
        .lowest_pair()
        .ok_or_else(|| Error::InvalidParameter("a crossing needs at least two ions".into()))?;
    Ok((lo, hi, eq.positions))
}

/// Gap between the two lowest modes at `u_ax`, Hz.
pub fn mode_gap(p: &AxialPotential, u_ax: f64, config: &IonConfiguration) -> Result<f64> {
    pair_at(p, u_ax, config, None).map(|(lo, hi, _)| hi - lo)
}

/// Sweep the control voltage over `steps` evenly spaced points, recording
/// the two lowest modes; the minimal gap is refined by golden-section search.
pub fn scan_crossing(
    p: &AxialPotential,
    config: &IonConfiguration,
    u_min: f64,
    u_max: f64,
    steps: usize,
) -> Result<CrossingScan> {
    if steps < 3 {
        return Err(Error::InvalidParameter(format!("scan needs at least 3 steps, got {steps}")));
    }
    if !(u_min < u_max) {
        return Err(Error::InvalidParameter(format!("empty voltage range [{u_min}, {u_max}]")));
    }
    if config.len() < 2 {
        return Err(Error::InvalidParameter("a crossing needs at least two ions".into()));
    }
    let mut points = Vec::with_capacity(steps);
    let mut warm: Option<Vec<f64>> = None;
    for k in 0..steps {
        let u = u_min + (u_max - u_min) * k as f64 / (steps - 1) as f64;
        match pair_at(p, u, config, warm.as_deref()) {
            Ok((lo, hi, pos)) => {
                points.push(ScanPoint { u_ax: u, nu_low: lo, nu_high: hi, stable: true });
                warm = Some(pos);
            }
            Err(_) => {
                points.push(ScanPoint { u_ax: u, nu_low: f64::NAN, nu_high: f64::NAN, stable: false });
                warm = None;
            }
        }
    }

    let (best, _) = points
        .iter()
        .enumerate()
        .filter(|(_, pt)| pt.stable)
        .min_by(|a, b| (a.1.nu_high - a.1.nu_low).total_cmp(&(b.1.nu_high - b.1.nu_low)))
        .ok_or_else(|| Error::InvalidParameter("no stable point in the scan range".into()))?;
    let coarse_gap = points[best].nu_high - points[best].nu_low;
    let lo = points[best.saturating_sub(1)].u_ax;
    let hi = points[(best + 1).min(steps - 1)].u_ax;
    let (u_res, gap) = golden_section(|u| mode_gap(p, u, config).unwrap_or(f64::INFINITY), lo, hi, RESONANCE_TOLERANCE);
    let (splitting, resonance_voltage) = if gap <= coarse_gap { (gap, u_res) } else { (coarse_gap, points[best].u_ax) };
    Ok(CrossingScan { points, splitting, resonance_voltage })
}

/// Minimize a unimodal `f` on `[a, b]` to abscissa tolerance `tol`.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Detuning slope d(f_right - f_left)/du of the bare wells at `u_ax`, Hz/V.
pub fn detuning_slope(p: &AxialPotential, u_ax: f64, species: &IonSpecies) -> Result<f64> {
    let h = 1e-3;
    let a = p.find_wells(u_ax - h, species)?;
    let b = p.find_wells(u_ax + h, species)?;
    Ok(((b.freq_right - b.freq_left) - (a.freq_right - a.freq_left)) / (2.0 * h))
}

/// Voltage window centred on the resonance of `config`, wide enough that the
/// detuning spans about five times the splitting on each side.
pub fn auto_range(p: &AxialPotential, config: &IonConfiguration) -> Result<(f64, f64)> {
    if config.n_left == 0 || config.n_right == 0 {
        return Err(Error::InvalidParameter("both wells must hold ions for a crossing".into()));
    }
    let w0 = p.find_wells(0.0, &config.species)?;
    let slope = detuning_slope(p, 0.0, &config.species)?.abs();
    if !(slope > 0.0) {
        return Err(Error::InvalidParameter("control voltage does not detune the wells (tune1 = tune2 = 0?)".into()));
    }
    let f0 = 0.5 * (w0.freq_left + w0.freq_right);
    // coarse search for the resonance over +-15 % detuning of the bare wells
    let half = 0.15 * f0 / slope;
    let n = 61;
    let gaps: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let u = -half + 2.0 * half * k as f64 / (n - 1) as f64;
            (u, mode_gap(p, u, config).unwrap_or(f64::INFINITY))
        })
        .collect();
    let (u_star, gap_star) = gaps.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    if !gap_star.is_finite() {
        return Err(Error::InvalidParameter("no stable configuration found near resonance".into()));
    }
    let step = 2.0 * half / (n - 1) as f64;
    let (u_res, gap) = golden_section(|u| mode_gap(p, u, config).unwrap_or(f64::INFINITY), u_star - step, u_star + step, RESONANCE_TOLERANCE);
    let width = 5.0 * gap / slope;
    Ok((u_res - width, u_res + width))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnhancementRow {
    pub n_left: usize,
    pub n_right: usize,
    /// Minimal gap from the Hessian scan, Hz.
    pub splitting: f64,
    /// Point-charge string model, Hz.
    pub point_charge_prediction: f64,
    pub resonance_voltage: f64,
}

/// Configurations 1+1, 2+1, 2+2, 3+2, 3+3, ... up to `max_ions_per_well`.
pub fn enhancement_configurations(max_ions_per_well: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for n in 1..=max_ions_per_well {
        if n > 1 {
            out.push((n, n - 1));
        }
        out.push((n, n));
    }
    out
}

/// Hessian splitting next to the point-charge prediction for each
/// configuration of [`enhancement_configurations`].
pub fn enhancement_report(p: &AxialPotential, species: &IonSpecies, max_ions_per_well: usize) -> Result<Vec<EnhancementRow>> {
    if max_ions_per_well == 0 {
        return Err(Error::InvalidParameter("max_ions_per_well must be at least 1".into()));
    }
    let w0 = p.find_wells(0.0, species)?;
    let f0 = 0.5 * (w0.freq_left + w0.freq_right);
    let mut rows = Vec::new();
    for (nl, nr) in enhancement_configurations(max_ions_per_well) {
        let cfg = IonConfiguration::new(species.clone(), nl, nr)?;
        let (u_min, u_max) = auto_range(p, &cfg)?;
        let scan = scan_crossing(p, &cfg, u_min, u_max, 21)?;
        let pc = point_charge_rate(species, f0, w0.separation_r, nl, nr)? / TAU;
        rows.push(EnhancementRow {
            n_left: nl,
            n_right: nr,
            splitting: scan.splitting,
            point_charge_prediction: pc,
            resonance_voltage: scan.resonance_voltage,
        });
    }
    Ok(rows)
}
