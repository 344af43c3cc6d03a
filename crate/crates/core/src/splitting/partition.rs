use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use super::{kernel_exponent, SplitHalves, SplitSource};
use crate::error::{Error, Result};
use crate::logspace::LogComplex;
use crate::quadrature::GaussRule;

/// Modified Bessel function `K_0(2)`.
pub const BESSEL_K0_AT_2: f64 = 0.113_893_872_749_533_44;

/// Panels stop once the integrand has dropped below `exp(-CUTOFF)`.
const CUTOFF: f64 = 45.0;
const PANEL_NODES: usize = 24;
const MAX_PANELS: usize = 200;

/// Holomorphic partition of unity `w(z) + w(-z) = 1` with
///
/// ```text
/// w(z) = (1/Z) int_z^inf exp(-2 cosh(C0 t)) dt,    Z = 2 K_0(2) / C0,
/// ```
///
/// and the split `f_plus = w f`, `f_minus = w(-.) f`. The halves add up to the
/// source on the whole strip `|Im z| < pi / (2 C0)` and inherit the decay of
/// the kernel.
#[derive(Debug, Clone)]
pub struct PartitionSplit {
    c0: f64,
    /// The partition is `w(z - center)`.
    center: f64,
    ln_z: f64,
    source: SplitSource,
    rule: GaussRule,
}

impl PartitionSplit {
    pub fn new(source: impl Into<SplitSource>, c0: f64) -> Result<Self> {
        if !(c0 > 0.0) || !c0.is_finite() {
            return Err(Error::InvalidParams(format!("C0 = {c0} must be positive")));
        }
        Ok(Self {
            c0,
            center: 0.0,
            ln_z: (2.0 * BESSEL_K0_AT_2 / c0).ln(),
            source: source.into(),
            rule: GaussRule::new(PANEL_NODES),
        })
    }

    /// Moves the transition point of the partition to `center`.
    pub fn centered_at(mut self, center: f64) -> Self {
        self.center = center;
        self
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn source(&self) -> &SplitSource {
        &self.source
    }

    /// Half-width of the strip on which the partition is defined.
    pub fn strip_halfwidth(&self) -> f64 {
        FRAC_PI_2 / self.c0
    }

    /// `int_0^inf exp(-(2 cosh(C0 (z + s)) - 2 cosh(C0 z))) ds` for `Re z >= 0`,
    /// on geometrically growing panels.
    fn relative_tail(&self, z: Complex64) -> Complex64 {
        let c = self.c0;
        let scale = (2.0 * (z * c).sinh()).norm().max(1.0);
        let mut width = 1.0 / (c * scale);
        let mut a = 0.0;
        let mut acc = Complex64::new(0.0, 0.0);
        let d = |s: f64| ((z * 2.0 + s) * (0.5 * c)).sinh() * (0.5 * c * s).sinh() * 4.0;
        for _ in 0..MAX_PANELS {
            let b = a + width;
            for (s, w) in self.rule.mapped(a, b) {
                acc += (-d(s)).exp() * w;
            }
            if d(b).re >= CUTOFF {
                break;
            }
            a = b;
            width *= 2.0;
        }
        acc
    }

    /// `ln w(z)` for `Re z > 0`, where `w` is small.
    fn ln_tail(&self, z: Complex64) -> LogComplex {
        LogComplex::exp_of(-kernel_exponent(self.c0, z))
            * LogComplex::from_complex(self.relative_tail(z))
            * LogComplex::new(-self.ln_z, 0.0)
    }

    fn check(&self, z: Complex64) -> Result<()> {
        if !(z.im.abs() < self.strip_halfwidth()) {
            return Err(Error::Domain(format!(
                "partition weight is defined only for |Im z| < {}, got {z}",
                self.strip_halfwidth()
            )));
        }
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Domain(format!("non-finite point {z}")));
        }
        Ok(())
    }

    /// `w(z)` about the origin (the center is not applied).
    pub fn ln_weight(&self, z: Complex64) -> Result<LogComplex> {
        self.check(z)?;
        if z.re == 0.0 && z.im == 0.0 {
            return Ok(LogComplex::from_real(0.5));
        }
        if z.re > 0.0 || (z.re == 0.0 && z.im > 0.0) {
            Ok(self.ln_tail(z))
        } else {
            let t = self.ln_tail(-z).to_complex();
            Ok(LogComplex::from_complex(Complex64::new(1.0, 0.0) - t))
        }
    }

    pub fn weight(&self, z: Complex64) -> Result<Complex64> {
        self.ln_weight(z).map(|w| w.to_complex())
    }
}

impl SplitHalves for PartitionSplit {
    fn ln_plus(&self, z: Complex64) -> Result<LogComplex> {
        let w = self.ln_weight(z - self.center)?;
        if w.is_zero() {
            return Ok(LogComplex::ZERO);
        }
        Ok(w * self.source.log_eval(z))
    }

    fn ln_minus(&self, z: Complex64) -> Result<LogComplex> {
        let w = self.ln_weight(self.center - z)?;
        if w.is_zero() {
            return Ok(LogComplex::ZERO);
        }
        Ok(w * self.source.log_eval(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcmodel;
    use crate::splitting::{decay_check, split_sum_check, SplitParams};
    use crate::GridSpec;
    use proptest::prelude::*;

    #[test]
    fn weight_is_one_half_at_origin_and_matches_the_bessel_normalisation() {
        for c0 in [0.5, 1.0, 2.0, 3.5] {
            let s = PartitionSplit::new(funcmodel::real_constant(1.0), c0).unwrap();
            // int_0^inf k = Z / 2, computed with the panel rule at a point next to 0
            let t = s.ln_tail(Complex64::new(1e-300, 0.0)).to_complex();
            assert!((t.re - 0.5).abs() < 1e-13, "C0 = {c0}: {t}");
            assert_eq!(s.weight(Complex64::new(0.0, 0.0)).unwrap().re, 0.5);
        }
    }

    #[test]
    fn weight_matches_direct_quadrature() {
        // independent composite Simpson rule on the real axis
        let c0 = 2.0;
        let z_norm = 2.0 * BESSEL_K0_AT_2 / c0;
        let k = |t: f64| (-2.0 * (c0 * t).cosh()).exp();
        let simpson = |a: f64, b: f64, n: usize| {
            let h = (b - a) / n as f64;
            let mut s = k(a) + k(b);
            for i in 1..n {
                s += k(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        let split = PartitionSplit::new(funcmodel::real_constant(1.0), c0).unwrap();
        for x in [0.05, 0.3, 0.9, 1.4] {
            let reference = simpson(x, 4.0, 200_000) / z_norm;
            let w = split.weight(Complex64::new(x, 0.0)).unwrap().re;
            assert!((w - reference).abs() < 1e-11 * reference.max(1e-3), "x = {x}");
            let wm = split.weight(Complex64::new(-x, 0.0)).unwrap().re;
            assert!((wm - (1.0 - reference)).abs() < 1e-11);
        }
    }

    #[test]
    fn reassembles_on_a_wide_interval() {
        let src = SplitSource::from(funcmodel::trig(0.0, 1.0, 0.0, 1.0));
        let split = PartitionSplit::new(src.clone(), 2.0).unwrap();
        let grid = GridSpec::new(-6.0, 6.0, 121).unwrap();
        assert!(split_sum_check(&split, &src, &grid).unwrap() < 1e-15);
    }

    #[test]
    fn decays_at_the_kernel_rate() {
        let split = PartitionSplit::new(funcmodel::real_constant(1.0), 1.0).unwrap();
        let xs: Vec<f64> = (0..7).map(|k| 1.0 + 0.5 * k as f64).collect();
        let fit = decay_check(&split, &SplitParams::new(0.5, 1.0), &xs).unwrap();
        assert!(fit.bound_satisfied, "{fit:?}");
        assert!((fit.inner_exponent - 1.0).abs() < 0.1, "{fit:?}");
        let far = split.ln_plus(Complex64::new(9.0, 0.0)).unwrap();
        assert!(far.ln_abs < -8000.0 && far.ln_abs.is_finite());
    }

    #[test]
    fn halves_are_holomorphic() {
        let src = funcmodel::exp_i(1.0, Complex64::new(1.0, 0.0));
        let split = PartitionSplit::new(src, 2.0).unwrap();
        let h = 1e-5;
        for z in [
            Complex64::new(0.4, 0.2),
            Complex64::new(-0.7, -0.3),
            Complex64::new(1e-7, 0.1),
            Complex64::new(-1e-7, 0.1),
            Complex64::new(2.0, 0.5),
        ] {
            for plus in [true, false] {
                let f = |w| if plus { split.plus(w).unwrap() } else { split.minus(w).unwrap() };
                let dx = (f(z + h) - f(z - h)) / (2.0 * h);
                let dy = (f(z + Complex64::new(0.0, h)) - f(z - Complex64::new(0.0, h))) / (2.0 * h);
                let dbar = 0.5 * (dx + Complex64::i() * dy);
                assert!(dbar.norm() <= 1e-6, "z = {z}, plus = {plus}: {dbar}");
            }
        }
    }

    #[test]
    fn centered_partition_is_a_translate() {
        let f = funcmodel::trig(0.0, 1.0, 0.0, 1.0);
        let base = PartitionSplit::new(f.clone(), 2.0).unwrap();
        let moved = PartitionSplit::new(f.translated(0.7), 2.0).unwrap().centered_at(0.7);
        for x in [-1.3, -0.2, 0.0, 0.5, 2.1] {
            let z = Complex64::new(x, 0.0);
            let shifted = z + 0.7;
            assert!((moved.plus(shifted).unwrap() - base.plus(z).unwrap()).norm() < 1e-15);
            assert!((moved.minus(shifted).unwrap() - base.minus(z).unwrap()).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_points_off_the_strip() {
        let split = PartitionSplit::new(funcmodel::real_constant(1.0), 2.0).unwrap();
        assert!(matches!(split.plus(Complex64::new(0.0, 0.8)), Err(Error::Domain(_))));
        assert!(PartitionSplit::new(funcmodel::real_constant(1.0), 0.0).is_err());
    }

    proptest! {
        #[test]
        fn splitting_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, x in -3.0f64..3.0) {
            let f = funcmodel::trig(0.3, 1.0, 0.0, 1.0);
            let g = funcmodel::polynomial(vec![0.0, 1.0, 0.5]);
            let combo = f.scaled(a.into()).plus(&g.scaled(b.into()));
            let sf = PartitionSplit::new(f, 2.0).unwrap();
            let sg = PartitionSplit::new(g, 2.0).unwrap();
            let sc = PartitionSplit::new(combo, 2.0).unwrap();
            let z = Complex64::new(x, 0.0);
            let lhs = sc.plus(z).unwrap();
            let rhs = sf.plus(z).unwrap() * a + sg.plus(z).unwrap() * b;
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        }

        #[test]
        fn halves_sum_to_source(x in -5.0f64..5.0, y in -0.5f64..0.5) {
            let f = funcmodel::exp_i(1.3, Complex64::new(0.5, -1.0));
            let split = PartitionSplit::new(f.clone(), 2.0).unwrap();
            let z = Complex64::new(x, y);
            let s = split.plus(z).unwrap() + split.minus(z).unwrap();
            prop_assert!((s - f.eval(z)).norm() <= 1e-12 * (1.0 + f.eval(z).norm()));
        }
    }
}
