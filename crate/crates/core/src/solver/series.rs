use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::recurrence::{compute_na, NaIndex, Recurrence};
use super::DifferenceProblem;
use crate::error::{Error, Result};
use crate::funcmodel::GridSpec;
use crate::logspace::LogComplex;
use crate::splitting::slope;

/// `ln sup |g_n|` and `ln sup |h_n|` over the monitoring grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermSup {
    pub n: usize,
    pub log_sup_g: f64,
    pub log_sup_h: f64,
}

/// Slopes of `ln(-ln sup |g_n|)` and `ln(-ln sup |h_n|)` against `n` from
/// `N_a` on, next to the rates `C1 beta_2` and `C1 gamma_{q-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub g: Option<f64>,
    pub h: Option<f64>,
    pub expected_g: f64,
    pub expected_h: f64,
}

#[derive(Debug, Clone)]
pub struct SeriesSolution {
    rec: Arc<Recurrence>,
    /// Terms `0..=truncation_n` are summed.
    pub truncation_n: usize,
    pub na: NaIndex,
    pub trace: Vec<TermSup>,
    pub tail_estimate: f64,
    /// Half-width of the monitoring interval.
    pub interval_halfwidth: f64,
    pub rates: RateFit,
}

impl SeriesSolution {
    pub fn recurrence(&self) -> &Arc<Recurrence> {
        &self.rec
    }

    pub fn ln_g_plus(&self, x: f64) -> Result<LogComplex> {
        let z = Complex64::new(x, 0.0);
        let terms = (0..=self.truncation_n)
            .map(|n| self.rec.g(n, z))
            .collect::<Result<Vec<_>>>()?;
        Ok(LogComplex::sum_slice(&terms))
    }

    pub fn ln_g_minus(&self, x: f64) -> Result<LogComplex> {
        let z = Complex64::new(x, 0.0);
        let terms = (0..=self.truncation_n)
            .map(|n| self.rec.h(n, z))
            .collect::<Result<Vec<_>>>()?;
        Ok(LogComplex::sum_slice(&terms))
    }

    /// `G_plus(x) = sum_n g_n(x)`.
    pub fn g_plus_eval(&self, x: f64) -> Result<Complex64> {
        self.ln_g_plus(x).map(|v| v.to_complex())
    }

    /// `G_minus(x) = sum_n h_n(x)`.
    pub fn g_minus_eval(&self, x: f64) -> Result<Complex64> {
        self.ln_g_minus(x).map(|v| v.to_complex())
    }
}

fn sup_over(xs: &[f64], f: impl Fn(Complex64) -> Result<LogComplex> + Sync) -> Result<f64> {
    let logs = xs
        .par_iter()
        .map(|&x| f(Complex64::new(x, 0.0)).map(|v| v.ln_abs))
        .collect::<Result<Vec<f64>>>()?;
    if let Some(i) = logs.iter().position(|l| l.is_nan()) {
        return Err(Error::Domain(format!("recurrence produced NaN at x = {}", xs[i])));
    }
    Ok(logs.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

fn fit_rate(trace: &[TermSup], from: usize, pick: impl Fn(&TermSup) -> f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = trace
        .iter()
        .filter(|t| t.n >= from)
        .map(|t| (t.n as f64, pick(t)))
        .filter(|(_, l)| l.is_finite() && *l < 0.0)
        .map(|(n, l)| (n, (-l).ln()))
        .collect();
    (pts.len() >= 2).then(|| slope(&pts))
}

/// Sums both series on `[-a, a]` until two consecutive terms, the later one
/// at index `>= N_a`, have sup below `tol` on the monitoring grid.
pub fn sum_series(
    rec: Arc<Recurrence>,
    a: f64,
    tol: f64,
    n_cap: usize,
    grid_points: usize,
) -> Result<SeriesSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tol = {tol} must be positive")));
    }
    let xs = GridSpec::symmetric(a, grid_points)?.xs();
    let na = compute_na(a, rec.beta_min(), rec.gamma_min(), rec.delta0())?;
    if na.expensive {
        log::warn!("N_a = {} for a = {a}: the series needs many terms", na.n);
    }
    let ln_tol = tol.ln();
    let mut trace: Vec<TermSup> = Vec::new();
    for n in 0..=n_cap {
        let log_sup_g = sup_over(&xs, |z| rec.g(n, z))?;
        let log_sup_h = sup_over(&xs, |z| rec.h(n, z))?;
        trace.push(TermSup {
            n,
            log_sup_g,
            log_sup_h,
        });
        let small = |t: &TermSup| t.log_sup_g < ln_tol && t.log_sup_h < ln_tol;
        if n >= na.n && n >= 1 && small(&trace[n]) && small(&trace[n - 1]) {
            let rates = RateFit {
                g: fit_rate(&trace, na.n, |t| t.log_sup_g),
                h: fit_rate(&trace, na.n, |t| t.log_sup_h),
                expected_g: rec.c1() * rec.beta_min(),
                expected_h: rec.c1() * rec.gamma_min(),
            };
            let last = trace[n];
            let next = |rate: Option<f64>, l: f64| match rate {
                Some(r) if r > 0.0 && l < 0.0 => -((-l).ln() + r).exp(),
                _ => l,
            };
            let tail_estimate =
                next(rates.g, last.log_sup_g).exp() + next(rates.h, last.log_sup_h).exp();
            return Ok(SeriesSolution {
                rec,
                truncation_n: n,
                na,
                trace,
                tail_estimate,
                interval_halfwidth: a,
                rates,
            });
        }
    }
    let last = trace.last().copied().expect("at least one term");
    Err(Error::NonConvergence {
        n_cap,
        last_log_g: last.log_sup_g,
        last_log_h: last.log_sup_h,
        trace,
    })
}

/// `max_x |sum_j a_j(x) phi(x + alpha_j) - chi(x)|` over the grid.
pub fn residual(
    p: &DifferenceProblem,
    phi: impl Fn(f64) -> Result<Complex64> + Sync,
    grid: &GridSpec,
) -> Result<f64> {
    grid.validate()?;
    let xs = grid.xs();
    let errs = xs
        .par_iter()
        .map(|&x| {
            let z = Complex64::new(x, 0.0);
            let mut s = Complex64::new(0.0, 0.0);
            for (a, &alpha) in p.coeffs.iter().zip(&p.alphas) {
                s += a.eval(z) * phi(x + alpha)?;
            }
            Ok((s - p.chi.value_at(x)).norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}

/// Exact solution `e^{i omega x} / sum_j a_j e^{i omega alpha_j}` of the
/// constant-coefficient equation with `chi(x) = e^{i omega x}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCoeffOracle {
    pub omega: f64,
    pub symbol: Complex64,
}

impl ConstantCoeffOracle {
    pub fn eval(&self, x: f64) -> Complex64 {
        (Complex64::i() * self.omega * x).exp() / self.symbol
    }
}

pub fn oracle_constant_coeff(a: &[f64], alphas: &[f64], omega: f64) -> Result<ConstantCoeffOracle> {
    if a.len() != alphas.len() || a.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} coefficients for {} shifts",
            a.len(),
            alphas.len()
        )));
    }
    let symbol: Complex64 = a
        .iter()
        .zip(alphas)
        .map(|(&aj, &al)| aj * (Complex64::i() * omega * al).exp())
        .sum();
    let scale: f64 = a.iter().map(|x| x.abs()).sum();
    if symbol.norm() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::VanishingSymbol(symbol.norm()));
    }
    Ok(ConstantCoeffOracle { omega, symbol })
}
