//! Weighted least-squares machinery shared by the fitters.
//!
//! Problems are posed in scaled coordinates (all parameters of order one).
//! A residual function returns the weighted residual vector, or `None` when
//! the model cannot be evaluated at that point.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

pub type Residuals<'a> = dyn Fn(&[f64]) -> Option<Vec<f64>> + 'a;

pub(crate) fn cost(r: &Residuals<'_>, x: &[f64]) -> f64 {
    match r(x) {
        Some(v) => {
            let c: f64 = v.iter().map(|e| e * e).sum();
            if c.is_finite() {
                c
            } else {
                f64::INFINITY
            }
        }
        None => f64::INFINITY,
    }
}

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    pub max_evals: usize,
    /// Relative spread of cost values over the simplex.
    pub ftol: f64,
    /// Simplex diameter in scaled coordinates.
    pub xtol: f64,
    /// Initial edge length in scaled coordinates.
    pub step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { max_evals: 4000, ftol: 1e-14, xtol: 1e-10, step: 0.05 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub cost: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Nelder-Mead simplex descent.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], opts: &SimplexOptions) -> Minimum {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if v[i].abs() > 1e-3 { opts.step * v[i].abs().max(1.0) } else { opts.step };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut evals = n + 1;
    let mut converged = false;

    while evals < opts.max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let (best, worst) = (values[0], values[n]);
        let diameter = simplex[1..]
            .iter()
            .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if worst.is_finite() && ((worst - best) <= opts.ftol * best.abs() || diameter < opts.xtol) {
            converged = true;
            break;
        }

        let centroid: Vec<f64> =
            (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect() };

        let xr = along(1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < values[0] {
            let xe = along(2.0);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            let (xc, fc) = if fr < values[n] {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            evals += 1;
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                // shrink towards the best vertex
                for i in 1..=n {
                    simplex[i] = simplex[i].iter().zip(&simplex[0]).map(|(v, b)| b + 0.5 * (v - b)).collect();
                    values[i] = f(&simplex[i]);
                }
                evals += n;
            }
        }
    }

    let (i, _) = values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    Minimum { x: simplex[i].clone(), cost: values[i], evals, converged }
}

/// Simplex descent from `x0` plus `restarts` runs started from Gaussian
/// perturbations of `x0` (relative size `spread`); the best run wins.
pub fn multistart(
    r: &Residuals<'_>,
    x0: &[f64],
    restarts: usize,
    spread: f64,
    seed: u64,
    opts: &SimplexOptions,
) -> Minimum {
    let f = |x: &[f64]| cost(r, x);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = nelder_mead(&f, x0, opts);
    for _ in 0..restarts {
        let start: Vec<f64> = x0
            .iter()
            .map(|&v| {
                let z: f64 = rng.sample(StandardNormal);
                v + spread * z * v.abs().max(1.0)
            })
            .collect();
        let m = nelder_mead(&f, &start, opts);
        if m.cost < best.cost {
            best = m;
        }
    }
    // one more simplex from the winner clears a collapsed simplex
    let polish = nelder_mead(&f, &best.x, opts);
    if polish.cost <= best.cost {
        best = Minimum { evals: best.evals + polish.evals, ..polish };
    }
    best
}

/// Central-difference Jacobian of the residual vector; `None` if the model
/// fails anywhere in the stencil.
pub fn jacobian(r: &Residuals<'_>, x: &[f64], step: f64) -> Option<DMatrix<f64>> {
    let r0 = r(x)?;
    let mut j = DMatrix::zeros(r0.len(), x.len());
    for k in 0..x.len() {
        let h = step * x[k].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[k] += h;
        xm[k] -= h;
        let rp = r(&xp)?;
        let rm = r(&xm)?;
        for i in 0..r0.len() {
            j[(i, k)] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    Some(j)
}

/// Levenberg-Marquardt refinement from `x0`.
pub fn levenberg_marquardt(r: &Residuals<'_>, x0: &[f64], max_iter: usize) -> Minimum {
    let mut x = x0.to_vec();
    let mut c = cost(r, &x);
    let mut lambda = 1e-3;
    let mut evals = 1;
    let mut converged = false;
    if !c.is_finite() {
        return Minimum { x, cost: c, evals, converged };
    }
    for _ in 0..max_iter {
        if c == 0.0 {
            converged = true;
            break;
        }
        let Some(res) = r(&x) else { break };
        let Some(j) = jacobian(r, &x, 1e-7) else { break };
        evals += 1 + 2 * x.len();
        let jt = j.transpose();
        let jtj = &jt * &j;
        let g = &jt * DVector::from_vec(res);
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for k in 0..x.len() {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-30);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let ct = cost(r, &trial);
            evals += 1;
            if ct < c {
                let rel = (c - ct) / c;
                let small_step = step.iter().zip(&x).all(|(s, xi)| s.abs() <= 1e-14 * xi.abs().max(1.0));
                x = trial;
                c = ct;
                lambda = (lambda * 0.2).max(1e-12);
                improved = true;
                if rel < 1e-15 || small_step {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                break;
            }
        }
        if !improved {
            // no descent direction left: at a minimum to working precision
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }
    Minimum { x, cost: c, evals, converged }
}

/// Covariance `(J^T J)^-1` of the scaled parameters at `x`, restricted to the
/// free coordinates. `None` when singular.
pub fn covariance(r: &Residuals<'_>, x: &[f64]) -> Option<DMatrix<f64>> {
    let j = jacobian(r, x, 1e-6)?;
    let jtj = j.transpose() * &j;
    let n = jtj.nrows();
    // equilibrate before inverting
    let d: Vec<f64> = (0..n).map(|k| jtj[(k, k)].sqrt()).collect();
    if d.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let scaled = DMatrix::from_fn(n, n, |a, b| jtj[(a, b)] / (d[a] * d[b]));
    let inv = scaled.try_inverse()?;
    let cov = DMatrix::from_fn(n, n, |a, b| inv[(a, b)] / (d[a] * d[b]));
    if (0..n).any(|k| !(cov[(k, k)] >= 0.0) || !cov[(k, k)].is_finite()) {
        return None;
    }
    Some(cov)
}
