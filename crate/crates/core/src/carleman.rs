//! Carleman sequences `(M_n)`, their weight `H_M(x) = inf_n (M_n / n!) x^n`,
//! and finite-sample class diagnostics.
//!
//! Terms are stored as logarithms so that sequences like `(n!)^2` can be
//! carried to a few hundred indices without overflow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_N_MAX: usize = 8;

/// `ln n!` for `n = 0..=n_max`, by cumulative summation.
pub(crate) fn ln_factorials(n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n_max {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarlemanSequence {
    label: String,
    ln_terms: Vec<f64>,
}

impl CarlemanSequence {
    /// Builds from `ln M_n`, `n = 0..=n_max`.
    pub fn from_ln_terms(label: impl Into<String>, ln_terms: Vec<f64>) -> Result<Self> {
        if ln_terms.is_empty() {
            return Err(Error::InvalidInput("empty Carleman sequence".into()));
        }
        if let Some(n) = ln_terms.iter().position(|t| !t.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "M_{n} must be strictly positive and finite"
            )));
        }
        if ln_terms.len() < MIN_N_MAX + 1 {
            return Err(Error::InvalidInput(format!(
                "Carleman sequence needs n_max >= {MIN_N_MAX}, got {}",
                ln_terms.len() - 1
            )));
        }
        Ok(Self {
            label: label.into(),
            ln_terms,
        })
    }

    pub fn from_terms(terms: &[f64]) -> Result<Self> {
        if let Some(n) = terms.iter().position(|&t| !(t > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "M_{n} = {} is not strictly positive",
                terms[n]
            )));
        }
        Self::from_ln_terms("explicit", terms.iter().map(|t| t.ln()).collect())
    }

    /// `M_n = n!`: the analytic class.
    pub fn factorial(n_max: usize) -> Result<Self> {
        Self::from_ln_terms("factorial", ln_factorials(n_max))
    }

    /// `M_n = (n!)^2`: a Gevrey class (not quasianalytic).
    pub fn factorial_squared(n_max: usize) -> Result<Self> {
        Self::from_ln_terms(
            "factorial_squared",
            ln_factorials(n_max).into_iter().map(|l| 2.0 * l).collect(),
        )
    }

    /// `M_n = n! (ln(n + e))^n`: quasianalytic and strictly larger than the
    /// analytic class.
    pub fn factorial_log(n_max: usize) -> Result<Self> {
        let lf = ln_factorials(n_max);
        let terms = lf
            .iter()
            .enumerate()
            .map(|(n, l)| l + n as f64 * (n as f64 + std::f64::consts::E).ln().ln())
            .collect();
        Self::from_ln_terms("factorial_log", terms)
    }

    /// Looks up one of the named builtins.
    pub fn builtin(name: &str, n_max: usize) -> Result<Self> {
        match name {
            "factorial" => Self::factorial(n_max),
            "factorial_squared" => Self::factorial_squared(n_max),
            "factorial_log" => Self::factorial_log(n_max),
            other => Err(Error::InvalidInput(format!(
                "unknown Carleman sequence builtin {other:?}"
            ))),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n_max(&self) -> usize {
        self.ln_terms.len() - 1
    }

    pub fn ln_term(&self, n: usize) -> f64 {
        self.ln_terms[n]
    }

    pub fn ln_terms(&self) -> &[f64] {
        &self.ln_terms
    }

    /// Multiplies every term by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidInput(format!("scale {c} must be positive")));
        }
        let shift = c.ln();
        Self::from_ln_terms(
            self.label.clone(),
            self.ln_terms.iter().map(|t| t + shift).collect(),
        )
    }

    /// `H_M(x)` truncated at `n_max`.
    pub fn weight(&self, x: f64) -> Result<WeightValue> {
        weight_eval(self, x)
    }
}

/// Result of [`weight_eval`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightValue {
    pub value: f64,
    pub ln_value: f64,
    /// Smallest minimizing index.
    pub argmin: usize,
    /// The terms were still strictly decreasing at `n_max`, so `value` only
    /// bounds the true infimum from above.
    pub upper_bound: bool,
}

fn tie_tol(v: f64) -> f64 {
    1e-12 * v.abs().max(1.0)
}

pub fn weight_eval(seq: &CarlemanSequence, x: f64) -> Result<WeightValue> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("weight H_M needs x > 0, got {x}")));
    }
    let lx = x.ln();
    let lf = ln_factorials(seq.n_max());
    let mut best = f64::INFINITY;
    let mut argmin = 0;
    let mut prev = f64::INFINITY;
    let mut last_step_down = false;
    for (n, (&lm, &lfact)) in seq.ln_terms.iter().zip(&lf).enumerate() {
        let t = lm - lfact + n as f64 * lx;
        if n == 0 || t < best - tie_tol(best) {
            best = t;
            argmin = n;
        }
        last_step_down = n > 0 && t < prev - tie_tol(prev);
        prev = t;
    }
    let upper_bound = argmin == seq.n_max() && last_step_down && seq.n_max() > 0;
    Ok(WeightValue {
        value: best.exp(),
        ln_value: best,
        argmin,
        upper_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesTrend {
    /// Partial sums keep growing at a roughly constant rate per doubling.
    Diverging,
    /// Partial sums are levelling off.
    Converging,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDiagnostics {
    pub logconvex_ok: bool,
    /// First `n` at which `(M_{n+1}/(n+1)!)^2 <= (M_n/n!)(M_{n+2}/(n+2)!)` fails.
    pub first_logconvex_violation: Option<usize>,
    /// `max_{1 <= n < n_max} (M_{n+1} / ((n+1) M_n))^{1/n}`.
    pub sup_ratio_estimate: f64,
    /// `M_n^{1/n}` for `n = 1..=n_max`.
    pub root_growth: Vec<f64>,
    /// `sum_{n < n_max} M_n / M_{n+1}`.
    pub dc_partial_sum: f64,
    /// Heuristic read of the Denjoy–Carleman sum. Never a proof.
    pub dc_trend: SeriesTrend,
}

pub fn diagnose_class(seq: &CarlemanSequence) -> ClassDiagnostics {
    let n_max = seq.n_max();
    let lf = ln_factorials(n_max);
    let norm: Vec<f64> = seq.ln_terms.iter().zip(&lf).map(|(m, f)| m - f).collect();

    let first_logconvex_violation = (0..n_max.saturating_sub(1)).find(|&n| {
        let lhs = 2.0 * norm[n + 1];
        let rhs = norm[n] + norm[n + 2];
        lhs > rhs + tie_tol(lhs.abs().max(rhs.abs()))
    });

    let sup_ratio_estimate = (1..n_max)
        .map(|n| {
            let l = seq.ln_terms[n + 1] - ((n + 1) as f64).ln() - seq.ln_terms[n];
            (l / n as f64).exp()
        })
        .fold(0.0, f64::max);

    let root_growth = (1..=n_max)
        .map(|n| (seq.ln_terms[n] / n as f64).exp())
        .collect();

    let ratios: Vec<f64> = (0..n_max)
        .map(|n| (seq.ln_terms[n] - seq.ln_terms[n + 1]).exp())
        .collect();
    let partial = |k: usize| ratios[..k].iter().sum::<f64>();
    let dc_partial_sum = partial(n_max);

    let q1 = n_max / 4;
    let q2 = n_max / 2;
    let early = partial(q2) - partial(q1);
    let late = dc_partial_sum - partial(q2);
    let dc_trend = if early <= 0.0 {
        SeriesTrend::Inconclusive
    } else {
        let r = late / early;
        if r >= 0.75 {
            SeriesTrend::Diverging
        } else if r <= 0.6 {
            SeriesTrend::Converging
        } else {
            SeriesTrend::Inconclusive
        }
    };

    ClassDiagnostics {
        logconvex_ok: first_logconvex_violation.is_none(),
        first_logconvex_violation,
        sup_ratio_estimate,
        root_growth,
        dc_partial_sum,
        dc_trend,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Plain-`f64` scan of `(M_n / n!) x^n`, used as the oracle.
    fn brute_force_weight(m: impl Fn(usize) -> f64, x: f64, n_max: usize) -> (f64, usize) {
        let mut fact = 1.0;
        let mut best = (f64::INFINITY, 0);
        for n in 0..=n_max {
            if n > 0 {
                fact *= n as f64;
            }
            let t = m(n) / fact * x.powi(n as i32);
            if t < best.0 * (1.0 - 1e-12) {
                best = (t, n);
            }
        }
        best
    }

    #[test]
    fn factorial_weight_at_two_is_one_at_index_zero() {
        let m = CarlemanSequence::factorial(30).unwrap();
        let w = weight_eval(&m, 2.0).unwrap();
        assert_eq!(w.argmin, 0);
        assert_relative_eq!(w.value, 1.0);
        assert!(!w.upper_bound);
    }

    #[test]
    fn factorial_squared_at_tenth_matches_scan() {
        let m = CarlemanSequence::factorial_squared(20).unwrap();
        let w = weight_eval(&m, 0.1).unwrap();
        let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
        let (v, n) = brute_force_weight(|n| fact(n) * fact(n), 0.1, 20);
        // 9!·0.1^9 and 10!·0.1^10 tie; the smaller index wins.
        assert_eq!(n, 9);
        assert_eq!(w.argmin, 9);
        assert_relative_eq!(w.value, v, max_relative = 1e-12);
        assert_relative_eq!(w.value, 3.6288e-4, max_relative = 1e-12);
    }

    #[test]
    fn still_decreasing_at_cap_is_flagged() {
        let m = CarlemanSequence::factorial(40).unwrap();
        let w = weight_eval(&m, 0.5).unwrap();
        assert_eq!(w.argmin, 40);
        assert!(w.upper_bound);
        assert_relative_eq!(w.value, 0.5f64.powi(40), max_relative = 1e-12);
    }

    #[test]
    fn bad_inputs() {
        let m = CarlemanSequence::factorial(10).unwrap();
        assert!(matches!(weight_eval(&m, 0.0), Err(Error::Domain(_))));
        assert!(matches!(weight_eval(&m, -1.0), Err(Error::Domain(_))));
        assert!(matches!(
            CarlemanSequence::from_terms(&[]),
            Err(Error::InvalidInput(_))
        ));
        assert!(CarlemanSequence::from_terms(&[1.0; 5]).is_err());
        assert!(CarlemanSequence::from_terms(&[1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]).is_err());
        assert!(CarlemanSequence::builtin("bogus", 10).is_err());
    }

    #[test]
    fn diagnostics_of_builtins() {
        let d = diagnose_class(&CarlemanSequence::factorial(50).unwrap());
        assert!(d.logconvex_ok);
        assert_eq!(d.dc_trend, SeriesTrend::Diverging);

        let d = diagnose_class(&CarlemanSequence::factorial_squared(50).unwrap());
        assert!(d.logconvex_ok);
        assert!(d.root_growth.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(d.dc_trend, SeriesTrend::Converging);
        // independent check of the normalized log-convexity on plain floats
        let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
        for n in 0..18 {
            let a = |k: usize| fact(k) * fact(k) / fact(k);
            assert!(a(n + 1).powi(2) <= a(n) * a(n + 2) * (1.0 + 1e-12));
        }

        let d = diagnose_class(&CarlemanSequence::factorial_log(200).unwrap());
        assert!(d.logconvex_ok);
        assert_eq!(d.dc_trend, SeriesTrend::Diverging);
    }

    #[test]
    fn alternating_sequence_is_not_logconvex() {
        let terms: Vec<f64> = (0..12).map(|n| if n % 2 == 0 { 1.0 } else { 10.0 }).collect();
        let d = diagnose_class(&CarlemanSequence::from_terms(&terms).unwrap());
        assert!(!d.logconvex_ok);
        assert_eq!(d.first_logconvex_violation, Some(0));
    }

    proptest! {
        #[test]
        fn weight_is_nondecreasing_and_bounded_by_m0(x1 in 1e-3f64..5.0, dx in 0.0f64..5.0) {
            for m in [
                CarlemanSequence::factorial(60).unwrap(),
                CarlemanSequence::factorial_squared(60).unwrap(),
                CarlemanSequence::factorial_log(60).unwrap(),
            ] {
                let w1 = weight_eval(&m, x1).unwrap();
                let w2 = weight_eval(&m, x1 + dx).unwrap();
                prop_assert!(w1.ln_value <= w2.ln_value + 1e-12);
                prop_assert!(w1.ln_value <= m.ln_term(0) + 1e-12);
                // argmin is nonincreasing in x
                prop_assert!(w2.argmin <= w1.argmin);
            }
        }

        #[test]
        fn scaling_scales_value_and_keeps_argmin(x in 1e-2f64..3.0, c in 1e-3f64..1e3) {
            let m = CarlemanSequence::factorial_squared(40).unwrap();
            let w = weight_eval(&m, x).unwrap();
            let ws = weight_eval(&m.scaled(c).unwrap(), x).unwrap();
            prop_assert_eq!(w.argmin, ws.argmin);
            prop_assert!((ws.value / (c * w.value) - 1.0).abs() < 1e-12);
        }
    }
}
