//! Fixtures shared by the benchmarks.

use carleman_core::funcmodel;
use carleman_core::{DifferenceProblem, Source};

/// `2 phi(x-1) + phi(x) + 2 phi(x+1) = cos x`.
pub fn symmetric_problem() -> DifferenceProblem {
    let c = |v| funcmodel::real_constant(v);
    DifferenceProblem::new(
        vec![-1.0, 0.0, 1.0],
        vec![c(2.0), c(1.0), c(2.0)],
        Source::Analytic(funcmodel::trig(0.0, 1.0, 0.0, 1.0)),
        0.5,
        1.0,
    )
}

/// Same shifts with `a_1 = 2 + 0.1 sin z`, `a_2 = 0.5 cos z`.
pub fn variable_problem() -> DifferenceProblem {
    DifferenceProblem::new(
        vec![-1.0, 0.0, 1.0],
        vec![
            funcmodel::trig(2.0, 0.0, 0.1, 1.0),
            funcmodel::trig(0.0, 0.5, 0.0, 1.0),
            funcmodel::real_constant(2.0),
        ],
        Source::Analytic(funcmodel::trig(0.0, 1.0, 0.0, 1.0)),
        0.5,
        1.0,
    )
}
