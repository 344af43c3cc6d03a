use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use num_complex::Complex64;

use super::{kernel_exponent, SplitHalves, SplitParams, SplitSource};
use crate::error::{Error, Result};
use crate::logspace::LogComplex;
use crate::quadrature::GaussRule;

/// Relative radial offset used to evaluate on the contour itself.
const NUDGE: f64 = 1e-12;

/// Quadrature data for one semicircle and the half-disk it bounds.
#[derive(Debug)]
struct Half {
    theta_a: f64,
    theta_b: f64,
    zeta_a: Complex64,
    zeta_b: Complex64,
    zeta: Vec<Complex64>,
    /// Weight times `dzeta / dtheta`.
    dzeta: Vec<Complex64>,
    /// Kernel times source at the contour nodes.
    g: Vec<Complex64>,
    area_zeta: Vec<Complex64>,
    /// Kernel times `dbar F` times the area element.
    area_v: Vec<Complex64>,
}

impl Half {
    fn build(params: &SplitParams, source: &SplitSource, theta_a: f64, theta_b: f64) -> Self {
        let rho = params.rho;
        let kernel = |z: Complex64| kernel_exponent(params.c0, z).exp();
        let rule = GaussRule::new(params.contour_nodes);
        let mut zeta = Vec::with_capacity(rule.len());
        let mut dzeta = Vec::with_capacity(rule.len());
        let mut g = Vec::with_capacity(rule.len());
        for (t, w) in rule.mapped(theta_a, theta_b) {
            let z = Complex64::from_polar(rho, t);
            zeta.push(z);
            dzeta.push(Complex64::i() * z * w);
            g.push(kernel(z) * source.eval(z));
        }

        let mut area_zeta = Vec::new();
        let mut area_v = Vec::new();
        if let SplitSource::Extension(ext) = source {
            let radial = GaussRule::new(params.area_nodes_radial);
            let angular = GaussRule::new(params.area_nodes_angular);
            // the cutoff is only C^1 across its plateau and support circles
            let mut breaks = vec![0.0];
            for b in [ext.plateau_radius(), ext.support_radius()] {
                if b < rho {
                    breaks.push(b);
                }
            }
            breaks.push(rho);
            let radial_nodes: Vec<(f64, f64)> = breaks
                .windows(2)
                .flat_map(|w| radial.mapped(w[0], w[1]).collect::<Vec<_>>())
                .collect();
            for &(r, wr) in &radial_nodes {
                for (t, wt) in angular.mapped(theta_a, theta_b) {
                    let z = Complex64::from_polar(r, t);
                    let d = source.dbar(z);
                    if d.norm() == 0.0 {
                        continue;
                    }
                    area_zeta.push(z);
                    area_v.push(kernel(z) * d * (r * wr * wt));
                }
            }
        }

        Self {
            theta_a,
            theta_b,
            zeta_a: Complex64::from_polar(rho, theta_a),
            zeta_b: Complex64::from_polar(rho, theta_b),
            zeta,
            dzeta,
            g,
            area_zeta,
            area_v,
        }
    }

    /// `int_arc dzeta / (zeta - z)`, continuous along the arc.
    fn log_integral(&self, z: Complex64, rho: f64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        if z.norm() < rho {
            Complex64::new(0.0, self.theta_b - self.theta_a) + (one - z / self.zeta_b).ln()
                - (one - z / self.zeta_a).ln()
        } else {
            (one - self.zeta_b / z).ln() - (one - self.zeta_a / z).ln()
        }
    }

    /// `(1 / 2 pi i) int_arc K F / (zeta - z) dzeta - (1 / pi) int_half K dbar F / (zeta - z) dm`.
    fn integral(&self, z: Complex64, rho: f64, g_at_z: Option<Complex64>) -> Complex64 {
        let mut contour = Complex64::new(0.0, 0.0);
        match g_at_z {
            Some(gz) => {
                for ((zk, dk), gk) in self.zeta.iter().zip(&self.dzeta).zip(&self.g) {
                    contour += (gk - gz) / (zk - z) * dk;
                }
                contour += gz * self.log_integral(z, rho);
            }
            None => {
                for ((zk, dk), gk) in self.zeta.iter().zip(&self.dzeta).zip(&self.g) {
                    contour += gk / (zk - z) * dk;
                }
            }
        }
        contour /= Complex64::new(0.0, 2.0 * PI);

        let mut area = Complex64::new(0.0, 0.0);
        for (zk, vk) in self.area_zeta.iter().zip(&self.area_v) {
            let d = zk - z;
            if d.norm() > 0.0 {
                area += vk / d;
            }
        }
        contour - area / PI
    }
}

#[derive(Debug)]
struct DiskSplit {
    params: SplitParams,
    source: SplitSource,
    /// Left semicircle and half-disk, feeding `f_plus`.
    left: Half,
    /// Right semicircle and half-disk, feeding `f_minus`.
    right: Half,
}

impl DiskSplit {
    fn eval_half(&self, half: &Half, plus: bool, z: Complex64) -> Result<LogComplex> {
        let rho = self.params.rho;
        let r = z.norm();
        let own_side = if plus { z.re < 0.0 } else { z.re > 0.0 };
        if z.im != 0.0 && r < rho && own_side {
            return Err(Error::Domain(format!(
                "f_{} is not defined at {z} inside its half-disk",
                if plus { "plus" } else { "minus" }
            )));
        }
        let on_arc = (r - rho).abs() <= NUDGE * rho && (own_side || z.re == 0.0);
        if on_arc {
            if z.im != 0.0 && z.re != 0.0 {
                return Err(Error::Domain(format!("{z} lies on the splitting contour")));
            }
            let outer = self.eval_regular(half, z * (1.0 + NUDGE));
            let inner = self.eval_regular(half, z * (1.0 - NUDGE));
            return Ok(outer.add(inner).scale(0.5));
        }
        Ok(self.eval_regular(half, z))
    }

    fn eval_regular(&self, half: &Half, z: Complex64) -> LogComplex {
        let rho = self.params.rho;
        let g_at_z = if z.norm() < 2.0 * rho && self.source.defined_at(z) {
            Some(kernel_exponent(self.params.c0, z).exp() * self.source.eval(z))
        } else {
            None
        };
        let integral = half.integral(z, rho, g_at_z);
        LogComplex::exp_of(-kernel_exponent(self.params.c0, z)) * LogComplex::from_complex(integral)
    }
}

/// The two halves produced by [`split`].
#[derive(Debug, Clone)]
pub struct SplitPair {
    inner: Arc<DiskSplit>,
    d0_estimate: f64,
}

impl SplitPair {
    pub fn params(&self) -> &SplitParams {
        &self.inner.params
    }

    pub fn source(&self) -> &SplitSource {
        &self.inner.source
    }

    /// Fitted constant of the decay bound, over `|x| in rho + {0.5, 1, ..., 3}`.
    pub fn d0_estimate(&self) -> f64 {
        self.d0_estimate
    }

    pub fn f_plus(&self, z: Complex64) -> Result<Complex64> {
        self.plus(z)
    }

    pub fn f_minus(&self, z: Complex64) -> Result<Complex64> {
        self.minus(z)
    }

    pub fn log_f_plus(&self, z: Complex64) -> Result<LogComplex> {
        self.ln_plus(z)
    }

    pub fn log_f_minus(&self, z: Complex64) -> Result<LogComplex> {
        self.ln_minus(z)
    }
}

impl SplitHalves for SplitPair {
    fn ln_plus(&self, z: Complex64) -> Result<LogComplex> {
        self.inner.eval_half(&self.inner.left, true, z)
    }

    fn ln_minus(&self, z: Complex64) -> Result<LogComplex> {
        self.inner.eval_half(&self.inner.right, false, z)
    }
}

/// Splits `source` over the circle `|z| = rho`.
///
/// `f_plus` integrates over the left semicircle (and left half-disk) and
/// decays like `exp(-cos(rho C0) e^{C0 Re z})` to the right; `f_minus` is the
/// mirror image. On `(-rho, rho)` they add up to the source.
pub fn split(source: impl Into<SplitSource>, params: SplitParams) -> Result<SplitPair> {
    params.validate()?;
    let source = source.into();
    if let SplitSource::Analytic(h) = &source {
        if !(h.strip_halfwidth() > params.rho) {
            return Err(Error::Domain(format!(
                "source '{}' is holomorphic only for |Im z| < {}, which does not contain the disk of radius {}",
                h.label(),
                h.strip_halfwidth(),
                params.rho
            )));
        }
    }
    let left = Half::build(&params, &source, FRAC_PI_2, 3.0 * FRAC_PI_2);
    let right = Half::build(&params, &source, -FRAC_PI_2, FRAC_PI_2);
    let mut pair = SplitPair {
        inner: Arc::new(DiskSplit {
            params,
            source,
            left,
            right,
        }),
        d0_estimate: 0.0,
    };

    let rate = params.decay_constant();
    let mut ln_d0 = f64::NEG_INFINITY;
    for k in 1..=6 {
        let x = params.rho + 0.5 * k as f64;
        let bound = rate * (params.c0 * x).exp();
        let lp = pair.ln_plus(Complex64::new(x, 0.0))?.ln_abs;
        let lm = pair.ln_minus(Complex64::new(-x, 0.0))?.ln_abs;
        ln_d0 = ln_d0.max(lp + bound).max(lm + bound);
    }
    pair.d0_estimate = ln_d0.exp();
    Ok(pair)
}
