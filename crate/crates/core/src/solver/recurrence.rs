use std::sync::Arc;

use dashmap::DashMap;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{DerivedCoefficients, DifferenceProblem};
use crate::error::{Error, Result};
use crate::funcmodel::AnalyticHandle;
use crate::logspace::LogComplex;
use crate::splitting::SplitHalves;

/// Memo points are snapped to this lattice.
const QUANTUM: f64 = 1e-13;

/// `N_a` above this is reported as expensive.
pub const EXPENSIVE_NA: usize = 64;

type Key = (usize, i64, i64);

/// Snaps `z` to the memo lattice; values are always computed at the snapped
/// point so that a key determines its value.
fn canonical(z: Complex64) -> Result<(i64, i64, Complex64)> {
    let (kr, ki) = ((z.re / QUANTUM).round(), (z.im / QUANTUM).round());
    if !(kr.abs() < 9e18 && ki.abs() < 9e18) {
        return Err(Error::Domain(format!("recurrence point {z} is out of range")));
    }
    Ok((kr as i64, ki as i64, Complex64::new(kr * QUANTUM, ki * QUANTUM)))
}

/// The two shift recurrences
///
/// ```text
/// g_0 = chi_plus / a_1,   g_{n+1}(z) = sum_{j=2..q}   b_j(z) g_n(z + beta_j)
/// h_0 = chi_minus / a_q,  h_{n+1}(z) = sum_{j=1..q-1} c_j(z) h_n(z - gamma_j)
/// ```
///
/// evaluated in log space with a shared memo.
pub struct Recurrence {
    betas: Vec<f64>,
    gammas: Vec<f64>,
    b: Vec<AnalyticHandle>,
    c: Vec<AnalyticHandle>,
    a_first: AnalyticHandle,
    a_last: AnalyticHandle,
    halves: Arc<dyn SplitHalves>,
    beta_min: f64,
    gamma_min: f64,
    delta0: f64,
    c1: f64,
    budget: usize,
    g_memo: DashMap<Key, LogComplex>,
    h_memo: DashMap<Key, LogComplex>,
}

impl std::fmt::Debug for Recurrence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Recurrence")
            .field("betas", &self.betas)
            .field("gammas", &self.gammas)
            .field("cached", &self.cache_len())
            .field("budget", &self.budget)
            .finish()
    }
}

impl Recurrence {
    pub fn new(
        p: &DifferenceProblem,
        dc: &DerivedCoefficients,
        halves: Arc<dyn SplitHalves>,
        budget: usize,
    ) -> Self {
        Self {
            betas: dc.betas.clone(),
            gammas: dc.gammas.clone(),
            b: dc.b.clone(),
            c: dc.c.clone(),
            a_first: p.coeffs[0].clone(),
            a_last: p.coeffs[p.q() - 1].clone(),
            halves,
            beta_min: dc.beta_min(),
            gamma_min: dc.gamma_min(),
            delta0: dc.delta0,
            c1: dc.c1,
            budget,
            g_memo: DashMap::new(),
            h_memo: DashMap::new(),
        }
    }

    pub fn beta_min(&self) -> f64 {
        self.beta_min
    }

    pub fn gamma_min(&self) -> f64 {
        self.gamma_min
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn halves(&self) -> &Arc<dyn SplitHalves> {
        &self.halves
    }

    /// Entries in both memo tables.
    pub fn cache_len(&self) -> usize {
        self.g_memo.len() + self.h_memo.len()
    }

    fn store(&self, memo: &DashMap<Key, LogComplex>, key: Key, v: LogComplex) -> Result<()> {
        if self.cache_len() >= self.budget {
            return Err(Error::CacheBudget {
                budget: self.budget,
            });
        }
        memo.insert(key, v);
        Ok(())
    }

    /// `g_n(z)`.
    pub fn g(&self, n: usize, z: Complex64) -> Result<LogComplex> {
        let (kr, ki, zc) = canonical(z)?;
        let key = (n, kr, ki);
        if let Some(v) = self.g_memo.get(&key).map(|e| *e.value()) {
            return Ok(v);
        }
        let v = if n == 0 {
            self.halves.ln_plus(zc)? / self.a_first.log_eval(zc)
        } else {
            let mut terms = Vec::with_capacity(self.betas.len());
            for (bj, &beta) in self.b.iter().zip(&self.betas) {
                terms.push(bj.log_eval(zc) * self.g(n - 1, zc + beta)?);
            }
            LogComplex::sum_slice(&terms)
        };
        self.store(&self.g_memo, key, v)?;
        Ok(v)
    }

    /// `h_n(z)`.
    pub fn h(&self, n: usize, z: Complex64) -> Result<LogComplex> {
        let (kr, ki, zc) = canonical(z)?;
        let key = (n, kr, ki);
        if let Some(v) = self.h_memo.get(&key).map(|e| *e.value()) {
            return Ok(v);
        }
        let v = if n == 0 {
            self.halves.ln_minus(zc)? / self.a_last.log_eval(zc)
        } else {
            let mut terms = Vec::with_capacity(self.gammas.len());
            for (cj, &gamma) in self.c.iter().zip(&self.gammas) {
                terms.push(cj.log_eval(zc) * self.h(n - 1, zc - gamma)?);
            }
            LogComplex::sum_slice(&terms)
        };
        self.store(&self.h_memo, key, v)?;
        Ok(v)
    }

    pub fn g_value(&self, n: usize, z: Complex64) -> Result<Complex64> {
        self.g(n, z).map(|v| v.to_complex())
    }

    pub fn h_value(&self, n: usize, z: Complex64) -> Result<Complex64> {
        self.h(n, z).map(|v| v.to_complex())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NaIndex {
    pub n: usize,
    /// `n` exceeds [`EXPENSIVE_NA`].
    pub expensive: bool,
}

/// Smallest `n >= 1` with `n beta_2 > a + delta0`, `n gamma_{q-1} > a + delta0`
/// and `n (beta_2 + gamma_{q-1}) >= a`: from `n` on, every shifted point of
/// `[-a, a]` has left `[-delta0, delta0]` on the decaying side.
pub fn compute_na(a: f64, beta_min: f64, gamma_min: f64, delta0: f64) -> Result<NaIndex> {
    if !(a >= 0.0) || !(beta_min > 0.0) || !(gamma_min > 0.0) || !(delta0 >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "N_a needs a >= 0, positive shifts and delta0 >= 0 (a = {a}, beta = {beta_min}, gamma = {gamma_min}, delta0 = {delta0})"
        )));
    }
    let reach = a + delta0;
    let guess = (reach / beta_min).max(reach / gamma_min).max(a / (beta_min + gamma_min));
    if !guess.is_finite() || guess > 1e9 {
        return Err(Error::InvalidParams(format!("N_a = {guess:e} is not computable")));
    }
    let ok = |n: usize| {
        let m = n as f64;
        m * beta_min > reach && m * gamma_min > reach && m * (beta_min + gamma_min) >= a
    };
    let mut n = (guess.floor() as usize).saturating_sub(1).max(1);
    while !ok(n) {
        n += 1;
    }
    Ok(NaIndex {
        n,
        expensive: n > EXPENSIVE_NA,
    })
}
