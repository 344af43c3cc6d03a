//! Splitting a function into two halves that decay double-exponentially to
//! the right and to the left.
//!
//! Two constructions are provided:
//!
//! * [`split`]: weighted Cauchy–Pompeiu integrals over the two halves of the
//!   circle `|z| = rho`. The halves reassemble the source on `(-rho, rho)` only.
//! * [`PartitionSplit`]: multiplication by a holomorphic partition of unity
//!   `w(z) + w(-z) = 1` built from the same kernel. The halves reassemble the
//!   source everywhere, which is what the difference-equation solver needs.
//!
//! Both report values as [`LogComplex`] so that evaluation far out in the
//! decaying direction never underflows.

mod disk;
mod partition;

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::AlmostAnalyticExtension;
use crate::funcmodel::{AnalyticHandle, GridSpec};
use crate::logspace::LogComplex;

pub use disk::{split, SplitPair};
pub use partition::{PartitionSplit, BESSEL_K0_AT_2};

/// Something that has been split into a right-decaying and a left-decaying half.
pub trait SplitHalves: Send + Sync {
    /// `f_plus(z)`, small for large `Re z`.
    fn ln_plus(&self, z: Complex64) -> Result<LogComplex>;
    /// `f_minus(z)`, small for large `-Re z`.
    fn ln_minus(&self, z: Complex64) -> Result<LogComplex>;

    fn plus(&self, z: Complex64) -> Result<Complex64> {
        self.ln_plus(z).map(|v| v.to_complex())
    }

    fn minus(&self, z: Complex64) -> Result<Complex64> {
        self.ln_minus(z).map(|v| v.to_complex())
    }
}

/// What gets split: a strip-holomorphic function, or an almost-analytic
/// extension (then the area terms no longer vanish).
#[derive(Debug, Clone)]
pub enum SplitSource {
    Analytic(AnalyticHandle),
    Extension(Arc<AlmostAnalyticExtension>),
}

impl SplitSource {
    pub fn label(&self) -> &str {
        match self {
            SplitSource::Analytic(h) => h.label(),
            SplitSource::Extension(e) => e.jet().label(),
        }
    }

    /// Whether `eval` is meaningful at `z`.
    pub fn defined_at(&self, z: Complex64) -> bool {
        match self {
            SplitSource::Analytic(h) => h.in_strip(z),
            SplitSource::Extension(_) => true,
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            SplitSource::Analytic(h) => h.eval(z),
            SplitSource::Extension(e) => e.eval(z),
        }
    }

    pub fn log_eval(&self, z: Complex64) -> LogComplex {
        match self {
            SplitSource::Analytic(h) => h.log_eval(z),
            SplitSource::Extension(e) => LogComplex::from_complex(e.eval(z)),
        }
    }

    pub fn dbar(&self, z: Complex64) -> Complex64 {
        match self {
            SplitSource::Analytic(_) => Complex64::new(0.0, 0.0),
            SplitSource::Extension(e) => e.dbar(z),
        }
    }
}

impl From<AnalyticHandle> for SplitSource {
    fn from(h: AnalyticHandle) -> Self {
        SplitSource::Analytic(h)
    }
}

impl From<AlmostAnalyticExtension> for SplitSource {
    fn from(e: AlmostAnalyticExtension) -> Self {
        SplitSource::Extension(Arc::new(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitParams {
    pub rho: f64,
    pub c0: f64,
    /// Gauss–Legendre nodes per semicircle.
    pub contour_nodes: usize,
    pub area_nodes_radial: usize,
    pub area_nodes_angular: usize,
}

impl SplitParams {
    pub fn new(rho: f64, c0: f64) -> Self {
        Self {
            rho,
            c0,
            contour_nodes: 64,
            area_nodes_radial: 32,
            area_nodes_angular: 32,
        }
    }

    pub fn with_contour_nodes(mut self, n: usize) -> Self {
        self.contour_nodes = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !(self.c0 > 0.0) || !self.rho.is_finite() || !self.c0.is_finite() {
            return Err(Error::InvalidParams(format!(
                "rho = {} and C0 = {} must be positive",
                self.rho, self.c0
            )));
        }
        if self.rho * self.c0 >= FRAC_PI_2 {
            return Err(Error::InvalidParams(format!(
                "rho * C0 = {} must be below pi/2",
                self.rho * self.c0
            )));
        }
        if self.contour_nodes < 16 {
            return Err(Error::InvalidParams(format!(
                "contour_nodes = {} is below the minimum of 16",
                self.contour_nodes
            )));
        }
        if self.area_nodes_radial == 0 || self.area_nodes_angular == 0 {
            return Err(Error::InvalidParams("area rule needs at least one node per direction".into()));
        }
        Ok(())
    }

    /// `cos(rho C0)`, the constant in front of the decay exponent.
    pub fn decay_constant(&self) -> f64 {
        (self.rho * self.c0).cos()
    }
}

/// `2 cosh(c z)`, the exponent of the splitting kernel.
pub(crate) fn kernel_exponent(c: f64, z: Complex64) -> Complex64 {
    (z * c).cosh() * 2.0
}

/// Max over the grid of `|source(x) - f_plus(x) - f_minus(x)|`.
pub fn split_sum_check(pair: &dyn SplitHalves, source: &SplitSource, grid: &GridSpec) -> Result<f64> {
    grid.validate()?;
    let mut worst: f64 = 0.0;
    for z in grid.points() {
        let sum = pair.plus(z)? + pair.minus(z)?;
        worst = worst.max((source.eval(z) - sum).norm());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Slope of `ln(c - ln|f_plus(x)|)` against `x`; NaN when every sample is zero.
    pub inner_exponent: f64,
    pub d0: f64,
    pub bound_satisfied: bool,
    /// Every sample was an exact zero.
    pub degenerate: bool,
}

/// Fits the rate and constant of `|f_plus(x)| <= D0 exp(-cos(rho C0) e^{C0 x})`.
pub fn decay_check(pair: &dyn SplitHalves, params: &SplitParams, xs: &[f64]) -> Result<DecayFit> {
    params.validate()?;
    if xs.len() < 2 {
        return Err(Error::InvalidInput("decay fit needs at least two abscissae".into()));
    }
    if xs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput("abscissae must be strictly increasing".into()));
    }
    let mut samples = Vec::with_capacity(xs.len());
    for &x in xs {
        let l = pair.ln_plus(Complex64::new(x, 0.0))?.ln_abs;
        if l.is_nan() || l == f64::INFINITY {
            return Err(Error::Domain(format!("log|f_plus({x})| is not finite")));
        }
        if l.is_finite() {
            samples.push((x, l));
        }
    }
    if samples.is_empty() {
        return Ok(DecayFit {
            inner_exponent: f64::NAN,
            d0: 0.0,
            bound_satisfied: true,
            degenerate: true,
        });
    }

    let rate = params.decay_constant();
    let excess: Vec<f64> = samples
        .iter()
        .map(|&(x, l)| l + rate * (params.c0 * x).exp())
        .collect();
    let ln_d0 = excess.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let d0 = ln_d0.exp();
    let tail_ok = match excess.len() {
        0 | 1 => true,
        n => excess[n - 1] <= excess[n - 2] + 1e-9 * excess[n - 2].abs().max(1.0),
    };

    let l_max = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let shift = if l_max >= 0.0 { l_max + 1.0 } else { 0.0 };
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(x, l)| (x, (shift - l).ln())).collect();
    let inner_exponent = if pts.len() >= 2 { slope(&pts) } else { f64::NAN };

    Ok(DecayFit {
        inner_exponent,
        d0,
        bound_satisfied: d0.is_finite() && tail_ok,
        degenerate: false,
    })
}

/// Least-squares slope.
pub(crate) fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
