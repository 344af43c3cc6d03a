use thiserror::Error;

use crate::solver::{TermSup, ValidationReport};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("problem failed validation: {}", .0.summary())]
    Validation(Box<ValidationReport>),

    #[error("series did not converge within {n_cap} terms (last log sup |g_n| = {last_log_g:.3e}, |h_n| = {last_log_h:.3e})")]
    NonConvergence {
        n_cap: usize,
        last_log_g: f64,
        last_log_h: f64,
        trace: Vec<TermSup>,
    },

    #[error("recurrence cache exceeded its budget of {budget} entries; use a smaller level or a coarser grid")]
    CacheBudget { budget: usize },

    #[error("constant-coefficient oracle has no solution: symbol vanishes (|symbol| = {0:.3e})")]
    VanishingSymbol(f64),
}
