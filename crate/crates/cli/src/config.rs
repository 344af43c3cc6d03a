//! The JSON run configuration and its conversion to solver objects.

use std::path::Path;

use carleman_core::funcmodel::{self, Jet};
use carleman_core::{
    AnalyticHandle, CarlemanSequence, Complex64, DifferenceProblem, GridSpec, SampleGrid,
    SolveOptions, Source, SplitStrategy,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[value(rename_all = "kebab-case")]
pub enum Command {
    CheckClass,
    Extend,
    Split,
    Solve,
    Verify,
    Bench,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckClass => "check-class",
            Command::Extend => "extend",
            Command::Split => "split",
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::Bench => "bench",
        }
    }
}

fn one() -> f64 {
    1.0
}

/// A function given by kind and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionDescriptor {
    /// `value + i im`.
    Const {
        value: f64,
        #[serde(default)]
        im: f64,
    },
    /// Ascending coefficients.
    Poly { coeffs: Vec<f64> },
    Rational {
        num: Vec<f64>,
        den: Vec<f64>,
        strip: f64,
    },
    /// `offset + a cos(omega z) + b sin(omega z)`.
    Trig {
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        a: f64,
        #[serde(default)]
        b: f64,
        #[serde(default = "one")]
        omega: f64,
    },
    /// `amp exp(i omega z)`.
    ExpI {
        omega: f64,
        #[serde(default = "one")]
        amp: f64,
    },
    #[serde(rename = "expexp")]
    ExpExp { rate: f64 },
    /// The jet of another descriptor on `[-radius, radius]`, orders up to `n_max`.
    Jet {
        of: Box<FunctionDescriptor>,
        radius: f64,
        n_max: usize,
    },
}

impl FunctionDescriptor {
    pub fn analytic(&self) -> Result<AnalyticHandle, CliError> {
        Ok(match self {
            FunctionDescriptor::Const { value, im } => funcmodel::constant(Complex64::new(*value, *im)),
            FunctionDescriptor::Poly { coeffs } => funcmodel::polynomial(coeffs.clone()),
            FunctionDescriptor::Rational { num, den, strip } => {
                funcmodel::rational(num.clone(), den.clone(), *strip)?
            }
            FunctionDescriptor::Trig { offset, a, b, omega } => funcmodel::trig(*offset, *a, *b, *omega),
            FunctionDescriptor::ExpI { omega, amp } => {
                funcmodel::exp_i(*omega, Complex64::new(*amp, 0.0))
            }
            FunctionDescriptor::ExpExp { rate } => funcmodel::exp_exp(*rate),
            FunctionDescriptor::Jet { .. } => {
                return Err(CliError::Config(
                    "a jet descriptor is not an analytic function here".into(),
                ))
            }
        })
    }

    pub fn source(&self) -> Result<Source, CliError> {
        match self {
            FunctionDescriptor::Jet { of, radius, n_max } => {
                Ok(Source::Jet(Jet::from_analytic(&of.analytic()?, *radius, *n_max)?))
            }
            other => Ok(Source::Analytic(other.analytic()?)),
        }
    }
}

/// A Carleman sequence: a builtin by name, or explicit terms `M_0, M_1, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SequenceSpec {
    Builtin { builtin: String, n_max: usize },
    Terms { terms: Vec<f64> },
}

impl SequenceSpec {
    pub fn build(&self) -> Result<CarlemanSequence, CliError> {
        Ok(match self {
            SequenceSpec::Builtin { builtin, n_max } => CarlemanSequence::builtin(builtin, *n_max)?,
            SequenceSpec::Terms { terms } => CarlemanSequence::from_terms(terms)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub alphas: Vec<f64>,
    pub coeffs: Vec<FunctionDescriptor>,
    pub chi: FunctionDescriptor,
    pub delta: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl ProblemSpec {
    pub fn build(&self) -> Result<DifferenceProblem, CliError> {
        let coeffs = self
            .coeffs
            .iter()
            .map(FunctionDescriptor::analytic)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DifferenceProblem::new(
            self.alphas.clone(),
            coeffs,
            self.chi.source()?,
            self.delta,
            self.c,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub count: usize,
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec, CliError> {
        Ok(GridSpec::new(self.x_min, self.x_max, self.count)?)
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            x_min: -2.0,
            x_max: 2.0,
            count: 65,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtensionSpec {
    #[serde(rename = "B")]
    pub b: f64,
    pub cutoff_margin: f64,
    /// Builtin sequence used when a jet right-hand side is extended for `solve`.
    pub sequence: String,
}

impl Default for ExtensionSpec {
    fn default() -> Self {
        Self {
            b: 1.0,
            cutoff_margin: 0.5,
            sequence: "factorial_log".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericSpec {
    #[serde(rename = "C1", skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta0: Option<f64>,
    /// Disk radius for `split`.
    pub rho: f64,
    /// Kernel constant for `split`.
    #[serde(rename = "C0")]
    pub c0: f64,
    pub tol: f64,
    pub n_cap: usize,
    pub contour_nodes: usize,
    pub area_nodes: usize,
    pub monitor_points: usize,
    pub cache_budget: usize,
    pub strategy: SplitStrategy,
    pub split_center: f64,
    /// Output grid; `solve` also verifies the residual on it.
    pub grid: GridConfig,
}

impl Default for NumericSpec {
    fn default() -> Self {
        let d = SolveOptions::default();
        Self {
            c1: None,
            delta0: None,
            rho: 0.5,
            c0: 1.0,
            tol: d.tol,
            n_cap: d.n_cap,
            contour_nodes: d.contour_nodes,
            area_nodes: d.area_nodes,
            monitor_points: d.grid_points,
            cache_budget: d.cache_budget,
            strategy: d.strategy,
            split_center: d.split_center,
            grid: GridConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    /// Also write `n, ln(-ln sup|g_n|), ln(-ln sup|h_n|)` next to the result.
    pub emit_plot_data: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemSpec>,
    /// Input of `split` and `extend`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<FunctionDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<SequenceSpec>,
    #[serde(default)]
    pub extension: ExtensionSpec,
    #[serde(default)]
    pub numeric: NumericSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn problem(&self) -> Result<DifferenceProblem, CliError> {
        self.problem
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs a \"problem\" section".into()))?
            .build()
    }

    pub fn source_descriptor(&self) -> Result<&FunctionDescriptor, CliError> {
        self.source
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs a \"source\" descriptor".into()))
    }

    pub fn sequence(&self) -> Result<CarlemanSequence, CliError> {
        self.sequence
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs a \"sequence\"".into()))?
            .build()
    }

    /// Solver options; `phi` is wanted on the output grid.
    pub fn solve_options(&self) -> SolveOptions {
        let n = &self.numeric;
        let e = &self.extension;
        SolveOptions {
            c1: n.c1,
            delta0: n.delta0,
            a: n.grid.x_min.abs().max(n.grid.x_max.abs()),
            tol: n.tol,
            n_cap: n.n_cap,
            grid_points: n.monitor_points,
            cache_budget: n.cache_budget,
            strategy: n.strategy,
            split_center: n.split_center,
            contour_nodes: n.contour_nodes,
            area_nodes: n.area_nodes,
            extension: carleman_core::solver::ExtensionOptions {
                sequence: e.sequence.clone(),
                b: e.b,
                margin: e.cutoff_margin,
            },
            sample_grid: SampleGrid::default(),
        }
    }
}
