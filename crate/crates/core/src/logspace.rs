//! Complex numbers stored as `(ln |z|, arg z)`.
//!
//! The split halves and the recurrence terms decay like `exp(-c * exp(r * x))`,
//! which leaves the range of `f64` after a handful of shifts. Every quantity on
//! that path is carried in this representation and only converted back to a
//! plain complex number at the very end, where underflow to zero is harmless.

use std::f64::consts::PI;
use std::fmt;
use std::iter::Sum;
use std::ops::{Div, Mul, Neg};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_phase(theta: f64) -> f64 {
    if !theta.is_finite() {
        return 0.0;
    }
    if theta > -PI && theta <= PI {
        return theta;
    }
    let w = theta.sin().atan2(theta.cos());
    if w == -PI {
        PI
    } else {
        w
    }
}

#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogComplex {
    /// `ln |z|`; `-inf` encodes an exact zero.
    pub ln_abs: f64,
    /// `arg z` in `(-pi, pi]`.
    pub phase: f64,
}

impl fmt::Debug for LogComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exp({:e}) * e^(i {:.6})", self.ln_abs, self.phase)
    }
}

impl LogComplex {
    pub const ZERO: LogComplex = LogComplex {
        ln_abs: f64::NEG_INFINITY,
        phase: 0.0,
    };
    pub const ONE: LogComplex = LogComplex {
        ln_abs: 0.0,
        phase: 0.0,
    };

    pub fn new(ln_abs: f64, phase: f64) -> Self {
        if ln_abs == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        Self {
            ln_abs,
            phase: wrap_phase(phase),
        }
    }

    pub fn from_complex(z: Complex64) -> Self {
        if z.re == 0.0 && z.im == 0.0 {
            return Self::ZERO;
        }
        Self {
            ln_abs: z.norm().ln(),
            phase: z.im.atan2(z.re),
        }
    }

    pub fn from_real(x: f64) -> Self {
        Self::from_complex(Complex64::new(x, 0.0))
    }

    /// `exp(w)` without ever forming the (possibly non-representable) value.
    pub fn exp_of(w: Complex64) -> Self {
        Self::new(w.re, w.im)
    }

    pub fn is_zero(&self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    /// Back to a plain complex number; underflows to zero, overflows to infinity.
    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.ln_abs.exp(), self.phase)
    }

    pub fn abs(&self) -> f64 {
        self.ln_abs.exp()
    }

    pub fn recip(&self) -> Self {
        Self::new(-self.ln_abs, -self.phase)
    }

    pub fn scale(&self, c: f64) -> Self {
        *self * Self::from_real(c)
    }

    /// Log-sum-exp over a slice, accumulated in slice order.
    pub fn sum_slice(terms: &[LogComplex]) -> Self {
        let peak = terms
            .iter()
            .map(|t| t.ln_abs)
            .fold(f64::NEG_INFINITY, f64::max);
        if peak == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        if peak == f64::INFINITY {
            return Self::new(f64::INFINITY, 0.0);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for t in terms {
            if !t.is_zero() {
                acc += Complex64::from_polar((t.ln_abs - peak).exp(), t.phase);
            }
        }
        let rel = Self::from_complex(acc);
        if rel.is_zero() {
            return Self::ZERO;
        }
        Self::new(rel.ln_abs + peak, rel.phase)
    }

    pub fn add(self, other: Self) -> Self {
        Self::sum_slice(&[self, other])
    }
}

impl Mul for LogComplex {
    type Output = LogComplex;
    fn mul(self, rhs: LogComplex) -> LogComplex {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        Self::new(self.ln_abs + rhs.ln_abs, self.phase + rhs.phase)
    }
}

impl Div for LogComplex {
    type Output = LogComplex;
    fn div(self, rhs: LogComplex) -> LogComplex {
        self * rhs.recip()
    }
}

impl Neg for LogComplex {
    type Output = LogComplex;
    fn neg(self) -> LogComplex {
        Self::new(self.ln_abs, self.phase + PI)
    }
}

impl Sum for LogComplex {
    fn sum<I: Iterator<Item = LogComplex>>(iter: I) -> LogComplex {
        let terms: Vec<LogComplex> = iter.collect();
        Self::sum_slice(&terms)
    }
}
