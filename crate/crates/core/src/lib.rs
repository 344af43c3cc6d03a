//! Constructive solver for linear difference equations
//!
//! ```text
//! sum_{j=1..q} a_j(x) phi(x + alpha_j) = chi(x)
//! ```
//!
//! with coefficients holomorphic on a strip and a right-hand side from a
//! quasianalytic Carleman class. The pipeline is: extend `chi` almost
//! analytically, split it into halves decaying double-exponentially to the
//! right and to the left, solve each half by a shift recurrence, and verify
//! the assembled solution by its residual.

/// Crate version, echoed in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod carleman;
pub mod error;
pub mod extension;
pub mod funcmodel;
pub mod logspace;
pub mod quadrature;
pub mod solver;
pub mod splitting;

pub use carleman::{diagnose_class, weight_eval, CarlemanSequence, ClassDiagnostics, WeightValue};
pub use error::{Error, Result};
pub use extension::{build_extension, dbar_check, AlmostAnalyticExtension, DbarCheck};
pub use funcmodel::{derivative_via_cauchy, log_scale_eval, AnalyticHandle, GridSpec, Jet, Source};
pub use logspace::LogComplex;
pub use num_complex::Complex64;
pub use solver::{
    compute_na, derive_coefficients, oracle_constant_coeff, residual, solve, split_rhs,
    sum_series, validate_problem, DerivedCoefficients, DifferenceProblem, Recurrence,
    SampleGrid, SeriesSolution, Solution, SolveOptions, SplitStrategy, TermSup,
    ValidationReport,
};
pub use splitting::{
    decay_check, split, split_sum_check, DecayFit, PartitionSplit, SplitHalves, SplitPair,
    SplitParams, SplitSource,
};
