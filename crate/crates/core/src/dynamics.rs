//! Phonon exchange between the two wells.
//!
//! Quantum part: a truncated two-mode Fock state evolved under the resonant
//! exchange Hamiltonian `H = -hbar (omega_c / 2) (a1 a2^+ + a1^+ a2)`. The
//! propagator `exp(i theta (a1 a2^+ + a1^+ a2))`, `theta = omega_c t / 2`,
//! maps `a1^+ -> cos(theta) a1^+ + i sin(theta) a2^+` and
//! `a2^+ -> i sin(theta) a1^+ + cos(theta) a2^+`, so every basis state is
//! transformed within its own total-phonon manifold by a binomial expansion.
//!
//! Classical part: the damped mean-phonon trace of the first well,
//! `n(tau) = nbar + (dn/2) cos(omega_c tau) exp(-tau/tau_damp) + gamma_h tau`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const NORM_TOLERANCE: f64 = 1e-9;
/// Amplitudes below this modulus count as unoccupied.
const OCCUPIED: f64 = 1e-12;

/// Two-mode state with amplitudes indexed `(n1, n2)`, `0 <= n_i <= cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    cutoff: usize,
    amplitudes: Vec<Complex64>,
}

impl FockState {
    /// Default cutoff for a state whose largest occupied level is `max_level`.
    pub fn default_cutoff(max_level: usize) -> usize {
        2 * max_level + 4
    }

    /// Basis state `|n1, n2>` with the default cutoff.
    pub fn fock(n1: usize, n2: usize) -> Self {
        Self::fock_with_cutoff(n1, n2, Self::default_cutoff(n1.max(n2))).expect("default cutoff holds the state")
    }

    pub fn fock_with_cutoff(n1: usize, n2: usize, cutoff: usize) -> Result<Self> {
        if n1 > cutoff || n2 > cutoff {
            return Err(Error::CutoffTooSmall { cutoff, reason: format!("state |{n1},{n2}> exceeds it") });
        }
        let mut s = Self::vacuum(cutoff);
        s.amplitudes[0] = Complex64::new(0.0, 0.0);
        let i = s.index(n1, n2);
        s.amplitudes[i] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn vacuum(cutoff: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); (cutoff + 1) * (cutoff + 1)];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self { cutoff, amplitudes }
    }

    /// State from `(n1, n2, amplitude)` triples; must be normalized.
    pub fn from_components(cutoff: usize, components: &[(usize, usize, Complex64)]) -> Result<Self> {
        let mut s = Self { cutoff, amplitudes: vec![Complex64::new(0.0, 0.0); (cutoff + 1) * (cutoff + 1)] };
        for &(n1, n2, c) in components {
            if n1 > cutoff || n2 > cutoff {
                return Err(Error::CutoffTooSmall { cutoff, reason: format!("component |{n1},{n2}> exceeds it") });
            }
            let i = s.index(n1, n2);
            s.amplitudes[i] += c;
        }
        let norm = s.norm_squared();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidParameter(format!("state norm^2 is {norm}, expected 1")));
        }
        Ok(s)
    }

    /// Bell target `(|0,1> + i|1,0>)/sqrt(2)` produced by a half swap of `|0,1>`.
    pub fn bell(cutoff: usize) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_components(cutoff.max(1), &[(0, 1, Complex64::new(h, 0.0)), (1, 0, Complex64::new(0.0, h))])
            .expect("normalized by construction")
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn index(&self, n1: usize, n2: usize) -> usize {
        n1 * (self.cutoff + 1) + n2
    }

    pub fn amplitude(&self, n1: usize, n2: usize) -> Complex64 {
        if n1 > self.cutoff || n2 > self.cutoff {
            return Complex64::new(0.0, 0.0);
        }
        self.amplitudes[self.index(n1, n2)]
    }

    pub fn probability(&self, n1: usize, n2: usize) -> f64 {
        self.amplitude(n1, n2).norm_sqr()
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Iterator over `(n1, n2, amplitude)`.
    pub fn components(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        let d = self.cutoff + 1;
        self.amplitudes.iter().enumerate().map(move |(i, &c)| (i / d, i % d, c))
    }

    /// Probability in each total-phonon manifold `n1 + n2 = k`, `k = 0..=2*cutoff`.
    pub fn manifold_populations(&self) -> Vec<f64> {
        let mut out = vec![0.0; 2 * self.cutoff + 1];
        for (n1, n2, c) in self.components() {
            out[n1 + n2] += c.norm_sqr();
        }
        out
    }

    /// `<self|other>`; both states must share the cutoff.
    pub fn inner(&self, other: &FockState) -> Complex64 {
        assert_eq!(self.cutoff, other.cutoff, "states with different cutoffs");
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|<self|other>|^2`
    pub fn fidelity(&self, other: &FockState) -> f64 {
        self.inner(other).norm_sqr()
    }
}

/// Binomial coefficients up to `n` as f64, `table[k][j] = C(k, j)`.
fn binomials(n: usize) -> Vec<Vec<f64>> {
    let mut t = vec![vec![1.0]];
    for k in 1..=n {
        let prev = &t[k - 1];
        let mut row = vec![1.0; k + 1];
        for j in 1..k {
            row[j] = prev[j - 1] + prev[j];
        }
        t.push(row);
    }
    t
}

/// Evolve `state` for time `t` (s) under the exchange Hamiltonian with rate
/// `omega_c` (rad/s). Exact per manifold; the norm is preserved.
pub fn evolve_fock(state: &FockState, omega_c: f64, t: f64) -> Result<FockState> {
    let norm = state.norm_squared();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::InvalidParameter(format!("state norm^2 is {norm}, expected 1")));
    }
    let cutoff = state.cutoff;
    if let Some((n1, n2, _)) = state.components().find(|&(n1, n2, c)| c.norm() > OCCUPIED && n1 + n2 > cutoff) {
        return Err(Error::CutoffTooSmall {
            cutoff,
            reason: format!("|{n1},{n2}> would transfer up to {} phonons into one mode", n1 + n2),
        });
    }

    let theta = 0.5 * omega_c * t;
    let (c, s) = (theta.cos(), theta.sin());
    let i_s = Complex64::new(0.0, s);
    let cc = Complex64::new(c, 0.0);
    let binom = binomials(2 * cutoff);
    // sqrt(k!) table
    let sqrt_fact: Vec<f64> = (0..=2 * cutoff)
        .scan(1.0f64, |acc, k| {
            if k > 0 {
                *acc *= k as f64;
            }
            Some(acc.sqrt())
        })
        .collect();
    let pow = |base: Complex64, e: usize| base.powu(e as u32);

    let mut out = FockState { cutoff, amplitudes: vec![Complex64::new(0.0, 0.0); state.amplitudes.len()] };
    for (n1, n2, amp) in state.components() {
        if amp.norm() == 0.0 {
            continue;
        }
        // (c a1^+ + i s a2^+)^n1 (i s a1^+ + c a2^+)^n2 |0,0> / sqrt(n1! n2!)
        let norm_in = sqrt_fact[n1] * sqrt_fact[n2];
        for k in 0..=n1 {
            let left = binom[n1][k] * pow(cc, n1 - k) * pow(i_s, k);
            for l in 0..=n2 {
                let right = binom[n2][l] * pow(i_s, n2 - l) * pow(cc, l);
                let p = n1 - k + n2 - l;
                let q = k + l;
                let coeff = left * right * (sqrt_fact[p] * sqrt_fact[q] / norm_in);
                let idx = out.index(p, q);
                out.amplitudes[idx] += amp * coeff;
            }
        }
    }
    Ok(out)
}

/// `(<n1>, <n2>)`
pub fn mean_phonons(state: &FockState) -> (f64, f64) {
    state.components().fold((0.0, 0.0), |(a, b), (n1, n2, c)| {
        let p = c.norm_sqr();
        (a + n1 as f64 * p, b + n2 as f64 * p)
    })
}

/// Overlap with the Bell target `(|0,1> + i|1,0>)/sqrt(2)`.
pub fn bell_fidelity(state: &FockState) -> f64 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let overlap = h * state.amplitude(0, 1) + Complex64::new(0.0, -h) * state.amplitude(1, 0);
    overlap.norm_sqr().clamp(0.0, 1.0)
}

/// Parameters of the damped, heated mean-phonon trace of the first well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExchangeModel {
    /// Mean phonons in well 1 at tau = 0.
    pub n1_0: f64,
    /// Mean phonons in well 2 at tau = 0.
    pub n2_0: f64,
    /// rad/s
    pub omega_c: f64,
    /// s; may be infinite (no damping).
    pub tau_damp: f64,
    /// Background heating, quanta/s.
    pub gamma_h: f64,
}

impl ExchangeModel {
    pub fn new(n1_0: f64, n2_0: f64, omega_c: f64, tau_damp: f64, gamma_h: f64) -> Result<Self> {
        if !(n1_0 >= 0.0 && n2_0 >= 0.0) || !n1_0.is_finite() || !n2_0.is_finite() {
            return Err(Error::InvalidParameter("initial phonon numbers must be finite and non-negative".into()));
        }
        if !(omega_c.is_finite() && omega_c >= 0.0) {
            return Err(Error::InvalidParameter(format!("omega_c must be non-negative, got {omega_c}")));
        }
        if !(tau_damp > 0.0) {
            return Err(Error::InvalidParameter(format!("tau_damp must be positive, got {tau_damp}")));
        }
        if !(gamma_h >= 0.0 && gamma_h.is_finite()) {
            return Err(Error::InvalidParameter(format!("heating rate must be non-negative, got {gamma_h}")));
        }
        Ok(Self { n1_0, n2_0, omega_c, tau_damp, gamma_h })
    }

    /// `<n1>` at waiting time `tau` (s).
    pub fn eval(&self, tau: f64) -> f64 {
        // same as nbar + (dn/2) cos exp, arranged so that tau = 0 returns n1_0 exactly
        let half_diff = 0.5 * (self.n1_0 - self.n2_0);
        let envelope = (self.omega_c * tau).cos() * (-tau / self.tau_damp).exp();
        self.n1_0 - half_diff * (1.0 - envelope) + self.gamma_h * tau
    }
}

/// `<n1>` at each waiting time.
pub fn exchange_trace(model: &ExchangeModel, taus: &[f64]) -> Result<Vec<f64>> {
    if let Some(t) = taus.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::InvalidParameter(format!("waiting times must be non-negative, got {t}")));
    }
    Ok(taus.iter().map(|&t| model.eval(t)).collect())
}
