//! Almost-analytic extension of a jet.
//!
//! For `z = x + iy` the extension is
//!
//! ```text
//! F(z) = theta(|z|) * sum_{n <= N(|y|)} f^(n)(x) (iy)^n / n!
//! ```
//!
//! where `N(|y|)` is the minimizing index of the Carleman weight at `B|y|` and
//! `theta` is a radial C¹ cubic cutoff. On the plateau `theta = 1` the
//! Cauchy–Riemann derivative collapses to the last Taylor term,
//! `dbar F = f^(N+1)(x) (iy)^N / (2 N!)`, which is what makes
//! `|dbar F| <= A H_M(B |y|)` hold with computable `A`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::carleman::{weight_eval, CarlemanSequence};
use crate::error::{Error, Result};
use crate::funcmodel::Jet;

/// Imaginary parts below this are excluded from the bound estimate.
pub const NEAR_AXIS_EXCLUSION: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    /// Sampled `sup |dbar F(z)| / H_M(B |Im z|)` over the plateau grid.
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone)]
pub struct AlmostAnalyticExtension {
    jet: Jet,
    seq: CarlemanSequence,
    b: f64,
    plateau_radius: f64,
    support_radius: f64,
    bounds: BoundConstants,
    /// Below this `|y|` the truncation index hits the jet or sequence cap.
    certified_y_floor: f64,
}

/// Cubic `1 - 3t^2 + 2t^3` on `[0, 1]`, with its derivative in `t`.
fn smoothstep(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        (1.0, 0.0)
    } else if t >= 1.0 {
        (0.0, 0.0)
    } else {
        (1.0 - 3.0 * t * t + 2.0 * t * t * t, -6.0 * t + 6.0 * t * t)
    }
}

impl AlmostAnalyticExtension {
    pub fn jet(&self) -> &Jet {
        &self.jet
    }

    pub fn sequence(&self) -> &CarlemanSequence {
        &self.seq
    }

    pub fn interval_radius(&self) -> f64 {
        self.jet.radius()
    }

    pub fn plateau_radius(&self) -> f64 {
        self.plateau_radius
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn bound_constants(&self) -> BoundConstants {
        self.bounds
    }

    pub fn certified_y_floor(&self) -> f64 {
        self.certified_y_floor
    }

    fn index_cap(&self) -> usize {
        self.jet.n_max().saturating_sub(1)
    }

    /// `N(|y|)`: the weight's argmin at `B|y|`, capped so that `f^(N+1)` exists.
    pub fn truncation_index(&self, y: f64) -> usize {
        let cap = self.index_cap();
        if y == 0.0 {
            return cap;
        }
        let w = weight_eval(&self.seq, self.b * y.abs()).expect("B|y| > 0");
        w.argmin.min(cap)
    }

    fn cutoff(&self, r: f64) -> (f64, f64) {
        let width = self.support_radius - self.plateau_radius;
        let (v, dv) = smoothstep((r - self.plateau_radius) / width);
        (v, dv / width)
    }

    /// Truncated Taylor sum and its Cauchy–Riemann derivative at `(x, y)`.
    fn taylor(&self, x: f64, y: f64) -> (Complex64, Complex64) {
        let n_top = self.truncation_index(y);
        let iy = Complex64::new(0.0, y);
        let mut pow = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        for n in 0..=n_top {
            if n > 0 {
                pow = pow * iy / n as f64;
                if pow.norm() == 0.0 {
                    break;
                }
            }
            sum += self.jet.deriv(n, x) * pow;
        }
        let dbar = if pow.norm() == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            0.5 * self.jet.deriv(n_top + 1, x) * pow
        };
        (sum, dbar)
    }

    /// `F(z)`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let r = z.norm();
        if r >= self.support_radius {
            return Complex64::new(0.0, 0.0);
        }
        let (theta, _) = self.cutoff(r);
        theta * self.taylor(z.re, z.im).0
    }

    /// `dbar F(z) = (dF/dx + i dF/dy) / 2`, differentiated in closed form.
    pub fn dbar(&self, z: Complex64) -> Complex64 {
        let r = z.norm();
        if r >= self.support_radius {
            return Complex64::new(0.0, 0.0);
        }
        let (theta, dtheta) = self.cutoff(r);
        let (s, dbar_s) = self.taylor(z.re, z.im);
        let dbar_theta = if r > 0.0 {
            dtheta * z / (2.0 * r)
        } else {
            Complex64::new(0.0, 0.0)
        };
        theta * dbar_s + s * dbar_theta
    }

    /// `|y|` values where `N(|y|)` changes, inside `(0, plateau_radius]`.
    fn index_jumps_near(&self, y: f64, h: f64) -> bool {
        let a = y.abs();
        let lo = (a - h).max(0.0);
        let n = self.truncation_index(a);
        (lo > 0.0 && self.truncation_index(lo) != n) || self.truncation_index(a + h) != n
    }

    /// Log-ratio `ln |dbar F(z)| - ln H_M(B |Im z|)`.
    pub fn ln_bound_ratio(&self, z: Complex64) -> f64 {
        let d = self.dbar(z).norm();
        if d == 0.0 {
            return f64::NEG_INFINITY;
        }
        let w = weight_eval(&self.seq, self.b * z.im.abs()).expect("|Im z| > 0");
        d.ln() - w.ln_value
    }

    /// Plateau sample points used for the bound certificate.
    pub fn plateau_grid(&self, nx: usize, ny: usize) -> Vec<Complex64> {
        let y_lo = self.certified_y_floor.max(NEAR_AXIS_EXCLUSION);
        let r0 = self.plateau_radius;
        let mut pts = Vec::new();
        if y_lo >= r0 {
            return pts;
        }
        for j in 0..ny {
            // geometric in |y| to resolve the region near the axis
            let t = j as f64 / (ny.max(2) - 1) as f64;
            let y = y_lo * (r0 / y_lo).powf(t) * (1.0 - 1e-9);
            for sign in [1.0, -1.0] {
                for k in 0..nx {
                    let x = -r0 + 2.0 * r0 * k as f64 / (nx.max(2) - 1) as f64;
                    let z = Complex64::new(x, sign * y);
                    if z.norm() <= r0 {
                        pts.push(z);
                    }
                }
            }
        }
        pts
    }
}

/// Builds the extension of `jet` with respect to the weight of `seq`.
///
/// The cutoff is 1 on `|z| <= r + margin/2` and vanishes for
/// `|z| >= r + margin`, where `[-r, r]` is the jet's interval.
pub fn build_extension(
    jet: Jet,
    seq: CarlemanSequence,
    b: f64,
    cutoff_margin: f64,
) -> Result<AlmostAnalyticExtension> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::Domain(format!("B = {b} must be positive")));
    }
    if !(cutoff_margin > 0.0) || !cutoff_margin.is_finite() {
        return Err(Error::Domain(format!(
            "cutoff margin {cutoff_margin} must be positive"
        )));
    }
    let r = jet.radius();
    let mut ext = AlmostAnalyticExtension {
        jet,
        seq,
        b,
        plateau_radius: r + 0.5 * cutoff_margin,
        support_radius: r + cutoff_margin,
        bounds: BoundConstants { a: f64::NAN, b },
        certified_y_floor: 0.0,
    };

    // smallest |y| whose argmin stays below both caps; argmin is
    // nonincreasing in |y|, so bisect in log |y|
    let cap = ext.index_cap().min(ext.seq.n_max().saturating_sub(1));
    let uncapped = |y: f64| weight_eval(&ext.seq, b * y).map(|w| w.argmin < cap).unwrap_or(false);
    let (mut lo, mut hi) = (1e-300_f64, ext.plateau_radius);
    if uncapped(hi) {
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if uncapped(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        ext.certified_y_floor = hi;
    } else {
        log::warn!(
            "jet n_max = {} is too small: the truncation index is capped over the whole plateau",
            ext.jet.n_max()
        );
        ext.certified_y_floor = ext.plateau_radius;
    }

    let ln_a = ext
        .plateau_grid(21, 24)
        .into_iter()
        .map(|z| ext.ln_bound_ratio(z))
        .fold(f64::NEG_INFINITY, f64::max);
    ext.bounds.a = ln_a.exp();
    if ext.certified_y_floor > 0.1 * ext.plateau_radius {
        log::warn!(
            "extension certified only for |Im z| >= {:.3e}; achieved bound A = {:.3e}",
            ext.certified_y_floor,
            ext.bounds.a
        );
    }
    Ok(ext)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbarCheck {
    pub analytic: Complex64,
    pub numeric: Complex64,
    pub discrepancy: f64,
    /// A truncation-index jump or a cutoff kink lies within `h` of `z`.
    pub unreliable: bool,
}

pub const DEFAULT_DBAR_STEP: f64 = 1e-5;

/// Compares the closed-form `dbar F` against centered differences.
pub fn dbar_check(ext: &AlmostAnalyticExtension, z: Complex64, h: f64) -> Result<DbarCheck> {
    if !(h > 0.0) {
        return Err(Error::InvalidParams(format!("step h = {h} must be positive")));
    }
    let r = z.norm();
    if r - 2.0 * h > ext.support_radius {
        let zero = Complex64::new(0.0, 0.0);
        return Ok(DbarCheck {
            analytic: zero,
            numeric: zero,
            discrepancy: 0.0,
            unreliable: false,
        });
    }
    let analytic = ext.dbar(z);
    let dx = (ext.eval(z + h) - ext.eval(z - h)) / (2.0 * h);
    let ih = Complex64::new(0.0, h);
    let dy = (ext.eval(z + ih) - ext.eval(z - ih)) / (2.0 * h);
    let numeric = 0.5 * (dx + Complex64::i() * dy);
    let near_kink = (r - ext.plateau_radius).abs() < 2.0 * h
        || (r - ext.support_radius).abs() < 2.0 * h
        || z.im.abs() < 2.0 * h;
    Ok(DbarCheck {
        analytic,
        numeric,
        discrepancy: (analytic - numeric).norm(),
        unreliable: near_kink || ext.index_jumps_near(z.im, 2.0 * h),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn identity_jet() -> Jet {
        Jet::new("x", 0.5, 30, |n, x| match n {
            0 => c(x, 0.0),
            1 => c(1.0, 0.0),
            _ => c(0.0, 0.0),
        })
        .unwrap()
    }

    fn exp_jet() -> Jet {
        Jet::new("exp", 0.5, 80, |_, x| c(x.exp(), 0.0)).unwrap()
    }

    #[test]
    fn polynomial_jet_is_exact_on_plateau() {
        let ext = build_extension(
            identity_jet(),
            CarlemanSequence::factorial_squared(60).unwrap(),
            1.0,
            0.5,
        )
        .unwrap();
        for z in [c(0.1, 0.05), c(-0.3, 0.2), c(0.0, -0.6), c(0.7, 0.0)] {
            assert!((ext.eval(z) - z).norm() < 1e-15);
            assert_eq!(ext.dbar(z), c(0.0, 0.0));
        }
        let chk = dbar_check(&ext, c(0.1, 0.05), 1e-5).unwrap();
        assert_eq!(chk.analytic, c(0.0, 0.0));
        assert!(chk.discrepancy < 1e-9);
    }

    #[test]
    fn outside_support_everything_vanishes() {
        let ext = build_extension(exp_jet(), CarlemanSequence::factorial_squared(60).unwrap(), 1.0, 0.5)
            .unwrap();
        let z = c(0.9, 0.6);
        assert!(z.norm() > ext.support_radius());
        assert_eq!(ext.eval(z), c(0.0, 0.0));
        assert_eq!(ext.dbar(z), c(0.0, 0.0));
        let chk = dbar_check(&ext, c(3.0, 0.0), 1e-5).unwrap();
        assert_eq!((chk.analytic, chk.numeric, chk.discrepancy), (c(0.0, 0.0), c(0.0, 0.0), 0.0));
    }

    #[test]
    fn extension_agrees_with_jet_on_interval() {
        let ext = build_extension(exp_jet(), CarlemanSequence::factorial_squared(60).unwrap(), 1.0, 0.5)
            .unwrap();
        for k in 0..=20 {
            let x = -0.5 + k as f64 * 0.05;
            assert!((ext.eval(c(x, 0.0)) - c(x.exp(), 0.0)).norm() < 1e-12);
            assert_eq!(ext.dbar(c(x, 0.0)), c(0.0, 0.0));
        }
    }

    #[test]
    fn exp_remainder_at_tenth() {
        // N(0.1) = argmin n!·0.1^n = 9 (tie with 10, smallest index wins)
        let ext = build_extension(exp_jet(), CarlemanSequence::factorial_squared(60).unwrap(), 1.0, 0.5)
            .unwrap();
        assert_eq!(ext.truncation_index(0.1), 9);
        let fact9: f64 = (1..=9).map(|k| k as f64).product();
        let expected = 0.5 * 0.1f64.powi(9) / fact9;
        assert_relative_eq!(ext.dbar(c(0.0, 0.1)).norm(), expected, max_relative = 1e-12);
        assert_relative_eq!(expected, 1.3778659611992945e-15, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_dbar_matches_differences_where_resolvable() {
        // at y = 0.6 the index is N = 1, so dbar F = e^x · 0.6i / 2 is large
        let ext = build_extension(exp_jet(), CarlemanSequence::factorial_squared(60).unwrap(), 1.0, 0.5)
            .unwrap();
        assert_eq!(ext.truncation_index(0.6), 1);
        let z = c(0.1, 0.6);
        let chk = dbar_check(&ext, z, 1e-5).unwrap();
        assert!(!chk.unreliable);
        assert_relative_eq!(chk.analytic.im, 0.5 * 0.1f64.exp() * 0.6, max_relative = 1e-12);
        assert!(chk.discrepancy < 1e-8, "{chk:?}");
    }

    #[test]
    fn bound_holds_on_plateau_grid() {
        let ext = build_extension(exp_jet(), CarlemanSequence::factorial_squared(60).unwrap(), 1.0, 0.5)
            .unwrap();
        let a = ext.bound_constants().a;
        assert!(a.is_finite() && a > 0.0);
        for z in ext.plateau_grid(11, 11) {
            assert!(ext.ln_bound_ratio(z) <= a.ln() + 1e-12);
        }
    }

    #[test]
    fn discrepancy_is_second_order_in_h() {
        let ext = build_extension(exp_jet(), CarlemanSequence::factorial_squared(60).unwrap(), 1.0, 0.5)
            .unwrap();
        // inside the cutoff ramp, where F is smooth but not holomorphic
        let z = c(0.7, 0.4);
        let e1 = dbar_check(&ext, z, 1e-2).unwrap().discrepancy;
        let e2 = dbar_check(&ext, z, 5e-3).unwrap().discrepancy;
        assert!(e2 < 0.3 * e1, "e1 = {e1:e}, e2 = {e2:e}");
    }

    #[test]
    fn invalid_parameters() {
        let m = CarlemanSequence::factorial(20).unwrap();
        assert!(matches!(build_extension(exp_jet(), m.clone(), 0.0, 0.5), Err(Error::Domain(_))));
        assert!(build_extension(exp_jet(), m, 1.0, -1.0).is_err());
    }
}
