//! Holomorphic functions on strips (`AnalyticHandle`), derivative data on an
//! interval (`Jet`), uniform grids, and the builtin constructors exposed to
//! configuration files.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::carleman::ln_factorials;
use crate::error::{Error, Result};
use crate::logspace::LogComplex;

type EvalFn = dyn Fn(Complex64) -> Complex64 + Send + Sync;
type LogEvalFn = dyn Fn(Complex64) -> LogComplex + Send + Sync;
type DerivFn = dyn Fn(usize, f64) -> Complex64 + Send + Sync;

pub const DEFAULT_CAUCHY_NODES: usize = 64;

/// A function holomorphic on the strip `|Im z| < strip_halfwidth`.
#[derive(Clone)]
pub struct AnalyticHandle {
    label: String,
    strip_halfwidth: f64,
    eval: Arc<EvalFn>,
    log_eval: Option<Arc<LogEvalFn>>,
}

impl fmt::Debug for AnalyticHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticHandle")
            .field("label", &self.label)
            .field("strip_halfwidth", &self.strip_halfwidth)
            .field("log_eval", &self.log_eval.is_some())
            .finish()
    }
}

impl AnalyticHandle {
    pub fn new(
        label: impl Into<String>,
        strip_halfwidth: f64,
        eval: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            strip_halfwidth,
            eval: Arc::new(eval),
            log_eval: None,
        }
    }

    /// Attaches an overflow-safe `(ln |f|, arg f)` evaluator.
    pub fn with_log_eval(
        mut self,
        log_eval: impl Fn(Complex64) -> LogComplex + Send + Sync + 'static,
    ) -> Self {
        self.log_eval = Some(Arc::new(log_eval));
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn strip_halfwidth(&self) -> f64 {
        self.strip_halfwidth
    }

    pub fn in_strip(&self, z: Complex64) -> bool {
        z.im.abs() < self.strip_halfwidth
    }

    pub fn has_log_eval(&self) -> bool {
        self.log_eval.is_some()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        (self.eval)(z)
    }

    pub fn eval_real(&self, x: f64) -> Complex64 {
        (self.eval)(Complex64::new(x, 0.0))
    }

    /// Log-magnitude form; falls back to `ln` of [`Self::eval`].
    pub fn log_eval(&self, z: Complex64) -> LogComplex {
        match &self.log_eval {
            Some(f) => f(z),
            None => LogComplex::from_complex(self.eval(z)),
        }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let f = self.clone();
        let g = self.clone();
        let lc = LogComplex::from_complex(c);
        Self::new(format!("{c}*({})", self.label), self.strip_halfwidth, move |z| {
            c * f.eval(z)
        })
        .with_log_eval(move |z| lc * g.log_eval(z))
    }

    pub fn plus(&self, other: &AnalyticHandle) -> Self {
        let (f, g) = (self.clone(), other.clone());
        Self::new(
            format!("({})+({})", self.label, other.label),
            self.strip_halfwidth.min(other.strip_halfwidth),
            move |z| f.eval(z) + g.eval(z),
        )
    }

    pub fn times(&self, other: &AnalyticHandle) -> Self {
        let (f, g) = (self.clone(), other.clone());
        let (lf, lg) = (self.clone(), other.clone());
        Self::new(
            format!("({})*({})", self.label, other.label),
            self.strip_halfwidth.min(other.strip_halfwidth),
            move |z| f.eval(z) * g.eval(z),
        )
        .with_log_eval(move |z| lf.log_eval(z) * lg.log_eval(z))
    }

    /// `z -> f(z - x0)`.
    pub fn translated(&self, x0: f64) -> Self {
        let f = self.clone();
        let g = self.clone();
        let shift = Complex64::new(x0, 0.0);
        Self::new(
            format!("({})(z-{x0})", self.label),
            self.strip_halfwidth,
            move |z| f.eval(z - shift),
        )
        .with_log_eval(move |z| g.log_eval(z - shift))
    }

    /// `z -> conj(f(-conj z))`, the mirror image through the imaginary axis.
    pub fn mirrored(&self) -> Self {
        let f = self.clone();
        Self::new(format!("mirror({})", self.label), self.strip_halfwidth, move |z| {
            f.eval(-z.conj()).conj()
        })
    }
}

// ----- builtins -------------------------------------------------------------

pub fn constant(c: Complex64) -> AnalyticHandle {
    let lc = LogComplex::from_complex(c);
    AnalyticHandle::new(format!("const({c})"), f64::INFINITY, move |_| c).with_log_eval(move |_| lc)
}

pub fn real_constant(c: f64) -> AnalyticHandle {
    constant(Complex64::new(c, 0.0))
}

fn horner(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// `sum_k coeffs[k] z^k`.
pub fn polynomial(coeffs: Vec<f64>) -> AnalyticHandle {
    AnalyticHandle::new(format!("poly{coeffs:?}"), f64::INFINITY, move |z| {
        horner(&coeffs, z)
    })
}

/// `amp * exp(i omega z)`.
pub fn exp_i(omega: f64, amp: Complex64) -> AnalyticHandle {
    let la = LogComplex::from_complex(amp);
    AnalyticHandle::new(format!("{amp}*exp(i*{omega}*z)"), f64::INFINITY, move |z| {
        amp * (Complex64::i() * omega * z).exp()
    })
    .with_log_eval(move |z| la * LogComplex::exp_of(Complex64::i() * omega * z))
}

/// `offset + a cos(omega z) + b sin(omega z)`.
pub fn trig(offset: f64, a: f64, b: f64, omega: f64) -> AnalyticHandle {
    AnalyticHandle::new(
        format!("{offset}+{a}*cos({omega}z)+{b}*sin({omega}z)"),
        f64::INFINITY,
        move |z| {
            let w = z * omega;
            offset + a * w.cos() + b * w.sin()
        },
    )
}

/// `exp(exp(rate z))`; used to probe the growth condition.
pub fn exp_exp(rate: f64) -> AnalyticHandle {
    AnalyticHandle::new(format!("exp(exp({rate}z))"), f64::INFINITY, move |z| {
        (z * rate).exp().exp()
    })
    .with_log_eval(move |z| LogComplex::exp_of((z * rate).exp()))
}

/// Complex roots of a real polynomial (ascending coefficients), via the
/// eigenvalues of its companion matrix.
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let mut c = coeffs.to_vec();
    while c.last().is_some_and(|&x| x == 0.0) {
        c.pop();
    }
    let deg = c.len().saturating_sub(1);
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let mut m = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        m[(i, deg - 1)] = -c[i] / lead;
    }
    m.complex_eigenvalues().iter().copied().collect()
}

/// `num(z) / den(z)`, rejected if `den` has a zero inside the strip.
pub fn rational(num: Vec<f64>, den: Vec<f64>, strip_halfwidth: f64) -> Result<AnalyticHandle> {
    if den.iter().all(|&c| c == 0.0) {
        return Err(Error::InvalidInput("rational denominator is identically zero".into()));
    }
    if let Some(pole) = polynomial_roots(&den)
        .into_iter()
        .find(|p| p.im.abs() < strip_halfwidth)
    {
        return Err(Error::Domain(format!(
            "rational function has a pole at {pole:.6} inside the strip |Im z| < {strip_halfwidth}"
        )));
    }
    Ok(AnalyticHandle::new(
        format!("rational({num:?}/{den:?})"),
        strip_halfwidth,
        move |z| horner(&num, z) / horner(&den, z),
    ))
}

// ----- jets -----------------------------------------------------------------

/// Derivatives `f^(n)(x)` of a smooth function on `[-radius, radius]`.
#[derive(Clone)]
pub struct Jet {
    label: String,
    radius: f64,
    n_max: usize,
    deriv: Arc<DerivFn>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("label", &self.label)
            .field("radius", &self.radius)
            .field("n_max", &self.n_max)
            .finish()
    }
}

impl Jet {
    pub fn new(
        label: impl Into<String>,
        radius: f64,
        n_max: usize,
        deriv: impl Fn(usize, f64) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!("jet radius {radius} must be positive")));
        }
        if n_max < 1 {
            return Err(Error::InvalidInput("jet needs at least one derivative".into()));
        }
        let jet = Self {
            label: label.into(),
            radius,
            n_max,
            deriv: Arc::new(deriv),
        };
        jet.check_continuity()?;
        Ok(jet)
    }

    /// Refining the sample grid must shrink the largest jump of `f`.
    fn check_continuity(&self) -> Result<()> {
        let max_jump = |count: usize| -> Result<(f64, f64)> {
            let mut prev: Option<Complex64> = None;
            let mut jump: f64 = 0.0;
            let mut peak: f64 = 0.0;
            for k in 0..=count {
                let x = -self.radius + 2.0 * self.radius * k as f64 / count as f64;
                let v = self.deriv(0, x);
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::InvalidInput(format!(
                        "jet value at x = {x} is not finite"
                    )));
                }
                if let Some(p) = prev {
                    jump = jump.max((v - p).norm());
                }
                peak = peak.max(v.norm());
                prev = Some(v);
            }
            Ok((jump, peak))
        };
        let (coarse, peak) = max_jump(64)?;
        let (fine, _) = max_jump(256)?;
        if fine > 0.5 * coarse + 1e-12 * (1.0 + peak) {
            return Err(Error::InvalidInput(format!(
                "jet '{}' looks discontinuous on its interval (jump {fine:.3e} does not shrink under refinement)",
                self.label
            )));
        }
        Ok(())
    }

    /// Jet of an analytic handle, derivatives by circle quadrature. The circle
    /// radius grows with the order (up to 90% of the strip) to keep the `n!`
    /// amplification of rounding errors in check.
    pub fn from_analytic(handle: &AnalyticHandle, radius: f64, n_max: usize) -> Result<Self> {
        let h = handle.clone();
        let cap = 0.9 * h.strip_halfwidth();
        let base = (0.5 * h.strip_halfwidth()).min(1.0);
        Self::new(format!("jet({})", handle.label()), radius, n_max, move |n, x| {
            let r = (n as f64).max(base).min(cap);
            let nodes = DEFAULT_CAUCHY_NODES.max(2 * n + 32);
            derivative_via_cauchy(&h, x, n, r, nodes).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn deriv(&self, n: usize, x: f64) -> Complex64 {
        (self.deriv)(n, x)
    }
}

/// A right-hand side: analytic on a strip, or given by its jet.
#[derive(Debug, Clone)]
pub enum Source {
    Analytic(AnalyticHandle),
    Jet(Jet),
}

impl Source {
    /// Value on the real axis.
    pub fn value_at(&self, x: f64) -> Complex64 {
        match self {
            Source::Analytic(h) => h.eval_real(x),
            Source::Jet(j) => j.deriv(0, x),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            Source::Analytic(h) => h.label(),
            Source::Jet(j) => j.label(),
        }
    }
}

// ----- grids ----------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub count: usize,
    #[serde(default)]
    pub imag_offset: f64,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, count: usize) -> Result<Self> {
        let g = Self {
            x_min,
            x_max,
            count,
            imag_offset: 0.0,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn symmetric(half_width: f64, count: usize) -> Result<Self> {
        Self::new(-half_width, half_width, count)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max) || !self.x_min.is_finite() || !self.x_max.is_finite() {
            return Err(Error::InvalidInput(format!(
                "grid needs x_min < x_max, got [{}, {}]",
                self.x_min, self.x_max
            )));
        }
        if self.count < 2 {
            return Err(Error::InvalidInput(format!(
                "grid needs at least 2 points, got {}",
                self.count
            )));
        }
        Ok(())
    }

    /// Real parts of the grid points, endpoints included.
    pub fn xs(&self) -> Vec<f64> {
        let step = (self.x_max - self.x_min) / (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                if k + 1 == self.count {
                    self.x_max
                } else {
                    self.x_min + step * k as f64
                }
            })
            .collect()
    }

    pub fn points(&self) -> Vec<Complex64> {
        self.xs()
            .into_iter()
            .map(|x| Complex64::new(x, self.imag_offset))
            .collect()
    }
}

// ----- operations -----------------------------------------------------------

/// `f^(n)(x)` from the Cauchy integral over `|zeta - x| = radius`, trapezoidal
/// rule with `nodes` points.
pub fn derivative_via_cauchy(
    f: &AnalyticHandle,
    x: f64,
    n: usize,
    radius: f64,
    nodes: usize,
) -> Result<Complex64> {
    if !(radius > 0.0) {
        return Err(Error::Domain(format!("circle radius {radius} must be positive")));
    }
    if radius >= f.strip_halfwidth() {
        return Err(Error::Domain(format!(
            "circle radius {radius} leaves the strip of half-width {}",
            f.strip_halfwidth()
        )));
    }
    if nodes < 16 {
        return Err(Error::InvalidParams(format!("need at least 16 nodes, got {nodes}")));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..nodes {
        let theta = 2.0 * PI * k as f64 / nodes as f64;
        let u = Complex64::from_polar(1.0, theta);
        acc += f.eval(x + radius * u) * Complex64::from_polar(1.0, -(n as f64) * theta);
    }
    let ln_scale = ln_factorials(n)[n] - n as f64 * radius.ln();
    Ok(acc / nodes as f64 * ln_scale.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogScaled {
    pub ln_abs: f64,
    pub phase: f64,
    /// No log path was available and `f(z)` evaluated to exactly zero, which
    /// may be underflow rather than a true zero.
    pub underflow: bool,
}

pub fn log_scale_eval(f: &AnalyticHandle, z: Complex64) -> Result<LogScaled> {
    if !f.in_strip(z) {
        return Err(Error::Domain(format!(
            "{z} is outside the strip |Im z| < {}",
            f.strip_halfwidth()
        )));
    }
    let v = f.log_eval(z);
    Ok(LogScaled {
        ln_abs: v.ln_abs,
        phase: v.phase,
        underflow: !f.has_log_eval() && v.is_zero(),
    })
}
