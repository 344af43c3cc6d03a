//! The difference-equation solver: problem validation, derived coefficients,
//! right-hand-side splitting, the two shift recurrences, and series summation.

mod recurrence;
mod series;

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::carleman::CarlemanSequence;
use crate::error::{Error, Result};
use crate::extension::build_extension;
use crate::funcmodel::{AnalyticHandle, Source};
use crate::logspace::LogComplex;
use crate::splitting::{split, PartitionSplit, SplitHalves, SplitParams, SplitSource};

pub use recurrence::{compute_na, NaIndex, Recurrence, EXPENSIVE_NA};
pub use series::{
    oracle_constant_coeff, residual, sum_series, ConstantCoeffOracle, RateFit, SeriesSolution,
    TermSup,
};

/// `sum_j a_j(x) phi(x + alpha_j) = chi(x)` with coefficients holomorphic on
/// `|Im z| < delta`.
#[derive(Debug, Clone)]
pub struct DifferenceProblem {
    pub alphas: Vec<f64>,
    pub coeffs: Vec<AnalyticHandle>,
    pub chi: Source,
    pub delta: f64,
    /// Constant of the growth condition.
    pub c: f64,
}

impl DifferenceProblem {
    pub fn new(
        alphas: Vec<f64>,
        coeffs: Vec<AnalyticHandle>,
        chi: Source,
        delta: f64,
        c: f64,
    ) -> Self {
        Self {
            alphas,
            coeffs,
            chi,
            delta,
            c,
        }
    }

    pub fn q(&self) -> usize {
        self.alphas.len()
    }

    /// Replaces the right-hand side.
    pub fn with_chi(&self, chi: Source) -> Self {
        let mut p = self.clone();
        p.chi = chi;
        p
    }

    fn check_structure(&self) -> Result<()> {
        if self.alphas.len() != self.coeffs.len() {
            return Err(Error::InvalidInput(format!(
                "{} shifts but {} coefficients",
                self.alphas.len(),
                self.coeffs.len()
            )));
        }
        if self.q() < 3 {
            return Err(Error::Unsupported(format!(
                "q = {} is not handled; the construction needs at least three shifts (q = 1, 2 are classical cases)",
                self.q()
            )));
        }
        if let Some(i) = self.alphas.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput(format!(
                "shifts must be strictly increasing: alpha_{} = {} is not below alpha_{} = {}",
                i + 1,
                self.alphas[i],
                i + 2,
                self.alphas[i + 1]
            )));
        }
        if self.alphas.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput("shifts must be finite".into()));
        }
        if !(self.delta > 0.0) || !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidInput(format!(
                "delta = {} and C = {} must be positive",
                self.delta, self.c
            )));
        }
        if let Some((j, h)) = self
            .coeffs
            .iter()
            .enumerate()
            .find(|(_, h)| h.strip_halfwidth() < self.delta)
        {
            return Err(Error::InvalidInput(format!(
                "coefficient a_{} = {} is holomorphic only for |Im z| < {}, narrower than delta = {}",
                j + 1,
                h.label(),
                h.strip_halfwidth(),
                self.delta
            )));
        }
        Ok(())
    }
}

/// Sample points of the strip used by [`validate_problem`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub half_width: f64,
    pub nx: usize,
    /// Rows in `|Im z| <= 0.95 delta`; odd counts include the real axis.
    pub ny: usize,
}

impl Default for SampleGrid {
    fn default() -> Self {
        Self {
            half_width: 4.0,
            nx: 161,
            ny: 5,
        }
    }
}

impl SampleGrid {
    fn rows(&self, delta: f64) -> Vec<f64> {
        let h = 0.95 * delta.min(1e6);
        if self.ny <= 1 {
            return vec![0.0];
        }
        (0..self.ny)
            .map(|k| h * (2.0 * k as f64 / (self.ny - 1) as f64 - 1.0))
            .collect()
    }

    fn columns(&self, half_width: f64, nx: usize) -> Vec<f64> {
        if nx <= 1 {
            return vec![0.0];
        }
        (0..nx)
            .map(|k| half_width * (2.0 * k as f64 / (nx - 1) as f64 - 1.0))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthTrend {
    Bounded,
    /// The sampled sup keeps increasing when the sample window is widened.
    Growing,
}

/// Outcome of [`validate_problem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub min_abs_a_first: f64,
    pub min_a_first_at: (f64, f64),
    pub min_abs_a_last: f64,
    pub min_a_last_at: (f64, f64),
    /// `ln sup` of the growth expression on the sample grid.
    pub growth_log_sup: f64,
    /// Same on the grid of twice the width.
    pub growth_log_sup_wide: f64,
    pub growth_trend: GrowthTrend,
    pub a_first_ok: bool,
    pub a_last_ok: bool,
    /// Advisory only.
    pub growth_ok: bool,
    pub passed: bool,
}

/// Coefficients smaller than this on the sample grid count as vanishing.
pub const NONVANISHING_FLOOR: f64 = 1e-9;

impl ValidationReport {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        if !self.a_first_ok {
            let _ = write!(
                s,
                "a_1 vanishes at sample point {} + {}i (|a_1| = {:.3e}); ",
                self.min_a_first_at.0, self.min_a_first_at.1, self.min_abs_a_first
            );
        }
        if !self.a_last_ok {
            let _ = write!(
                s,
                "a_q vanishes at sample point {} + {}i (|a_q| = {:.3e}); ",
                self.min_a_last_at.0, self.min_a_last_at.1, self.min_abs_a_last
            );
        }
        if !self.growth_ok {
            let _ = write!(
                s,
                "growth expression keeps increasing with the window (ln sup {:.3e} -> {:.3e}); ",
                self.growth_log_sup, self.growth_log_sup_wide
            );
        }
        if s.is_empty() {
            "all checks passed".into()
        } else {
            s.trim_end_matches("; ").to_string()
        }
    }
}

/// `ln` of a sum of positive terms given by their logarithms.
fn ln_sum(logs: &[f64]) -> f64 {
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return peak;
    }
    peak + logs.iter().map(|l| (l - peak).exp()).sum::<f64>().ln()
}

/// Checks that `a_1`, `a_q` do not vanish on the sample grid and samples the
/// growth condition. Fails with an error only for structural problems; the
/// outcome of the checks is in the report.
pub fn validate_problem(p: &DifferenceProblem, grid: &SampleGrid) -> Result<ValidationReport> {
    p.check_structure()?;
    let q = p.q();
    let rows = grid.rows(p.delta);

    let mut min_first = (f64::INFINITY, (0.0, 0.0));
    let mut min_last = (f64::INFINITY, (0.0, 0.0));
    let growth_on = |half_width: f64, nx: usize, track: bool, mf: &mut (f64, (f64, f64)), ml: &mut (f64, (f64, f64))| {
        let mut sup = f64::NEG_INFINITY;
        for &x in &grid.columns(half_width, nx) {
            for &y in &rows {
                let z = Complex64::new(x, y);
                let logs: Vec<LogComplex> = p.coeffs.iter().map(|a| a.log_eval(z)).collect();
                let (l1, lq) = (logs[0].ln_abs, logs[q - 1].ln_abs);
                if track {
                    let a1 = l1.exp();
                    let aq = lq.exp();
                    if a1 < mf.0 || a1.is_nan() {
                        *mf = (a1, (x, y));
                    }
                    if aq < ml.0 || aq.is_nan() {
                        *ml = (aq, (x, y));
                    }
                }
                let mut terms = Vec::with_capacity(2 * q);
                terms.extend(logs[1..].iter().map(|l| l.ln_abs - l1));
                terms.extend(logs[..q - 1].iter().map(|l| l.ln_abs - lq));
                terms.push(-l1);
                terms.push(-lq);
                let v = ln_sum(&terms) - (p.c * x.abs()).exp();
                if v.is_nan() {
                    sup = f64::INFINITY;
                } else {
                    sup = sup.max(v);
                }
            }
        }
        sup
    };
    let narrow = growth_on(grid.half_width, grid.nx, true, &mut min_first, &mut min_last);
    let wide = growth_on(2.0 * grid.half_width, 2 * grid.nx - 1, false, &mut min_first, &mut min_last);
    let growing = !narrow.is_finite() || wide > narrow + 1.0;

    let a_first_ok = min_first.0 > NONVANISHING_FLOOR;
    let a_last_ok = min_last.0 > NONVANISHING_FLOOR;
    let report = ValidationReport {
        min_abs_a_first: min_first.0,
        min_a_first_at: min_first.1,
        min_abs_a_last: min_last.0,
        min_a_last_at: min_last.1,
        growth_log_sup: narrow,
        growth_log_sup_wide: wide,
        growth_trend: if growing { GrowthTrend::Growing } else { GrowthTrend::Bounded },
        a_first_ok,
        a_last_ok,
        growth_ok: !growing,
        passed: a_first_ok && a_last_ok,
    };
    if !report.growth_ok {
        log::warn!("growth condition looks violated: {}", report.summary());
    }
    Ok(report)
}

/// Shifts and coefficient ratios of the two recurrences.
#[derive(Debug, Clone)]
pub struct DerivedCoefficients {
    /// `beta_j = alpha_j - alpha_1`, `j = 2..q`.
    pub betas: Vec<f64>,
    /// `gamma_j = alpha_q - alpha_j`, `j = 1..q-1`.
    pub gammas: Vec<f64>,
    /// `b_j = -a_j / a_1`, `j = 2..q`.
    pub b: Vec<AnalyticHandle>,
    /// `c_j = -a_j / a_q`, `j = 1..q-1`.
    pub c: Vec<AnalyticHandle>,
    pub delta0: f64,
    pub c1: f64,
}

impl DerivedCoefficients {
    /// Smallest right shift, `beta_2`.
    pub fn beta_min(&self) -> f64 {
        self.betas[0]
    }

    /// Smallest left shift, `gamma_{q-1}`.
    pub fn gamma_min(&self) -> f64 {
        *self.gammas.last().expect("q >= 3")
    }
}

fn neg_ratio(num: &AnalyticHandle, den: &AnalyticHandle) -> AnalyticHandle {
    let (n, d) = (num.clone(), den.clone());
    let (ln, ld) = (num.clone(), den.clone());
    AnalyticHandle::new(
        format!("-({})/({})", num.label(), den.label()),
        num.strip_halfwidth().min(den.strip_halfwidth()),
        move |z| -n.eval(z) / d.eval(z),
    )
    .with_log_eval(move |z| -(ln.log_eval(z) / ld.log_eval(z)))
}

pub fn derive_coefficients(
    p: &DifferenceProblem,
    c1: Option<f64>,
    delta0: Option<f64>,
) -> Result<DerivedCoefficients> {
    p.check_structure()?;
    let q = p.q();
    let c1 = c1.unwrap_or(p.c + 1.0);
    if !(c1 > p.c) || !c1.is_finite() {
        return Err(Error::InvalidParams(format!("C1 = {c1} must exceed C = {}", p.c)));
    }
    let limit = p.delta.min(FRAC_PI_2 / c1);
    let delta0 = delta0.unwrap_or(0.5 * limit);
    if !(delta0 > 0.0 && delta0 < limit) {
        return Err(Error::InvalidParams(format!(
            "delta0 = {delta0} must lie in (0, {limit})"
        )));
    }
    let a = &p.alphas;
    Ok(DerivedCoefficients {
        betas: (1..q).map(|j| a[j] - a[0]).collect(),
        gammas: (0..q - 1).map(|j| a[q - 1] - a[j]).collect(),
        b: (1..q).map(|j| neg_ratio(&p.coeffs[j], &p.coeffs[0])).collect(),
        c: (0..q - 1).map(|j| neg_ratio(&p.coeffs[j], &p.coeffs[q - 1])).collect(),
        delta0,
        c1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitStrategy {
    /// Holomorphic partition of unity; exact on the whole line.
    Partition,
    /// Cauchy–Pompeiu integrals on the disk of radius `delta0`; the halves
    /// add up to `chi` only on `(-delta0, delta0)`.
    Disk,
}

/// How a right-hand side given as a jet is extended before splitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionOptions {
    /// Name of a builtin Carleman sequence.
    pub sequence: String,
    pub b: f64,
    pub margin: f64,
}

impl Default for ExtensionOptions {
    fn default() -> Self {
        Self {
            sequence: "factorial_log".into(),
            b: 1.0,
            margin: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub c1: Option<f64>,
    pub delta0: Option<f64>,
    /// `phi` is wanted (and the residual verified) on `[-a, a]`.
    pub a: f64,
    pub tol: f64,
    pub n_cap: usize,
    /// Points of the monitoring grid for the per-term sups.
    pub grid_points: usize,
    pub cache_budget: usize,
    pub strategy: SplitStrategy,
    /// Transition point of the partition split.
    pub split_center: f64,
    pub contour_nodes: usize,
    pub area_nodes: usize,
    pub extension: ExtensionOptions,
    pub sample_grid: SampleGrid,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            c1: None,
            delta0: None,
            a: 2.0,
            tol: 1e-8,
            n_cap: 64,
            grid_points: 129,
            cache_budget: 4_000_000,
            strategy: SplitStrategy::Partition,
            split_center: 0.0,
            contour_nodes: 64,
            area_nodes: 32,
            extension: ExtensionOptions::default(),
            sample_grid: SampleGrid::default(),
        }
    }
}

/// Splits `chi` into `chi_plus` (decaying to the right, rate `C1`) and
/// `chi_minus` (decaying to the left).
pub fn split_rhs(
    p: &DifferenceProblem,
    dc: &DerivedCoefficients,
    opts: &SolveOptions,
) -> Result<Arc<dyn SplitHalves>> {
    let source = match &p.chi {
        Source::Analytic(h) => SplitSource::Analytic(h.clone()),
        Source::Jet(jet) => {
            let e = &opts.extension;
            let seq = CarlemanSequence::builtin(&e.sequence, jet.n_max().max(8) + 1)?;
            SplitSource::from(build_extension(jet.clone(), seq, e.b, e.margin)?)
        }
    };
    Ok(match opts.strategy {
        SplitStrategy::Partition => {
            Arc::new(PartitionSplit::new(source, dc.c1)?.centered_at(opts.split_center))
        }
        SplitStrategy::Disk => {
            let mut params = SplitParams::new(dc.delta0, dc.c1).with_contour_nodes(opts.contour_nodes);
            params.area_nodes_radial = opts.area_nodes;
            params.area_nodes_angular = opts.area_nodes;
            Arc::new(split(source, params)?)
        }
    })
}

/// A solved problem.
#[derive(Debug, Clone)]
pub struct Solution {
    pub report: ValidationReport,
    pub coefficients: DerivedCoefficients,
    pub series: SeriesSolution,
    pub alpha_first: f64,
    pub alpha_last: f64,
}

impl Solution {
    /// `phi(x) = G_plus(x - alpha_1) + G_minus(x - alpha_q)`.
    pub fn phi(&self, x: f64) -> Result<Complex64> {
        Ok(self.series.g_plus_eval(x - self.alpha_first)?
            + self.series.g_minus_eval(x - self.alpha_last)?)
    }
}

/// Full pipeline: validate, derive, split, sum.
pub fn solve(p: &DifferenceProblem, opts: &SolveOptions) -> Result<Solution> {
    let report = validate_problem(p, &opts.sample_grid)?;
    if !report.passed {
        return Err(Error::Validation(Box::new(report)));
    }
    if !(opts.a > 0.0) || !opts.a.is_finite() {
        return Err(Error::InvalidParams(format!("interval half-width a = {} must be positive", opts.a)));
    }
    let dc = derive_coefficients(p, opts.c1, opts.delta0)?;
    let halves = split_rhs(p, &dc, opts)?;
    let rec = Arc::new(Recurrence::new(p, &dc, halves, opts.cache_budget));
    let reach = p.alphas.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let working = opts.a + 2.0 * reach;
    let series = sum_series(rec, working, opts.tol, opts.n_cap, opts.grid_points)?;
    Ok(Solution {
        report,
        coefficients: dc,
        series,
        alpha_first: p.alphas[0],
        alpha_last: p.alphas[p.q() - 1],
    })
}
