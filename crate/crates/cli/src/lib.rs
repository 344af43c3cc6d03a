//! Batch front end: one JSON config in, result files and a manifest out.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use carleman_core::{
    build_extension, dbar_check, decay_check, derive_coefficients, diagnose_class,
    oracle_constant_coeff, split, split_rhs, sum_series, validate_problem, weight_eval, Complex64,
    DifferenceProblem, Error, Recurrence, SplitHalves, SplitParams, SplitSource, Solution, Source,
    TermSup,
};
use serde_json::{json, Value};

use config::{Command, Format, FunctionDescriptor, RunConfig};
use output::{Cell, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("cannot write output: {0}")]
    Io(String),
    #[error("verification failed: {0}")]
    Verify(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Core(Error::NonConvergence { .. } | Error::CacheBudget { .. }) => 3,
            CliError::Core(_) | CliError::Verify(_) => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Where the artifacts of one run go.
#[derive(Debug, Clone)]
pub struct Paths {
    pub result: PathBuf,
}

impl Paths {
    pub fn new(result: PathBuf) -> Self {
        Self { result }
    }

    /// Default result path when neither `--out` nor `output.path` is given.
    pub fn default_for(command: Command, format: Format) -> PathBuf {
        let ext = if command == Command::Bench || format == Format::Json {
            "json"
        } else {
            "csv"
        };
        PathBuf::from(format!("carleman-{}.{ext}", command.name()))
    }

    fn sibling(&self, suffix: &str) -> PathBuf {
        let mut s = self.result.clone().into_os_string();
        s.push(suffix);
        PathBuf::from(s)
    }

    pub fn manifest(&self) -> PathBuf {
        self.sibling(".manifest.json")
    }

    pub fn plot(&self) -> PathBuf {
        self.sibling(".plot.csv")
    }

    pub fn report(&self) -> PathBuf {
        self.sibling(".report.json")
    }

    pub fn trace(&self) -> PathBuf {
        self.sibling(".trace.csv")
    }
}

/// Runs `command` and writes its artifacts. On failure the report or trace
/// file is written before the error is returned, and recorded in `artifacts`.
pub fn run(
    command: Command,
    cfg: &RunConfig,
    paths: &Paths,
    artifacts: &mut Vec<PathBuf>,
) -> Result<Value, CliError> {
    let res = match command {
        Command::CheckClass => check_class(cfg, paths, artifacts),
        Command::Extend => extend(cfg, paths, artifacts),
        Command::Split => split_cmd(cfg, paths, artifacts),
        Command::Solve => solve_cmd(cfg, paths, artifacts, false),
        Command::Verify => solve_cmd(cfg, paths, artifacts, true),
        Command::Bench => bench(cfg, paths, artifacts),
    };
    if let Err(e) = &res {
        write_failure(e, paths, artifacts)?;
    }
    res
}

fn write_failure(e: &CliError, paths: &Paths, artifacts: &mut Vec<PathBuf>) -> Result<(), CliError> {
    match e.exit_code() {
        2 => {
            let report = match e {
                CliError::Core(Error::Validation(r)) => serde_json::to_value(r.as_ref()).ok(),
                _ => None,
            };
            let doc = json!({ "error": e.to_string(), "validation": report });
            output::write_json(&paths.report(), &doc)?;
            artifacts.push(paths.report());
        }
        3 => {
            let trace = match e {
                CliError::Core(Error::NonConvergence { trace, .. }) => trace.as_slice(),
                _ => &[],
            };
            output::write_csv(&paths.trace(), &trace_table(trace))?;
            artifacts.push(paths.trace());
        }
        _ => {}
    }
    Ok(())
}

fn trace_table(trace: &[TermSup]) -> Table {
    let mut t = Table::new(&["n", "log_sup_g", "log_sup_h"]);
    for s in trace {
        t.push(vec![Cell::Int(s.n as i64), Cell::Real(s.log_sup_g), Cell::Real(s.log_sup_h)]);
    }
    t
}

fn emit(cfg: &RunConfig, paths: &Paths, table: &Table, artifacts: &mut Vec<PathBuf>) -> Result<(), CliError> {
    match cfg.output.format {
        Format::Csv => output::write_csv(&paths.result, table)?,
        Format::Json => output::write_json(&paths.result, &table.to_json())?,
    }
    artifacts.push(paths.result.clone());
    Ok(())
}

fn check_class(cfg: &RunConfig, paths: &Paths, artifacts: &mut Vec<PathBuf>) -> Result<Value, CliError> {
    let seq = cfg.sequence()?;
    let diag = diagnose_class(&seq);
    let xs: Vec<f64> = cfg.numeric.grid.spec()?.xs().into_iter().filter(|&x| x > 0.0).collect();
    if xs.is_empty() {
        return Err(CliError::Config("check-class needs grid points with x > 0".into()));
    }
    let mut t = Table::new(&["x", "weight", "ln_weight", "argmin", "upper_bound"]);
    for x in xs {
        let w = weight_eval(&seq, x)?;
        t.push(vec![
            Cell::Real(x),
            Cell::Real(w.value),
            Cell::Real(w.ln_value),
            Cell::Int(w.argmin as i64),
            Cell::Bool(w.upper_bound),
        ]);
    }
    emit(cfg, paths, &t, artifacts)?;
    Ok(json!({ "sequence": seq.label(), "n_max": seq.n_max(), "diagnostics": diag }))
}

fn extend(cfg: &RunConfig, paths: &Paths, artifacts: &mut Vec<PathBuf>) -> Result<Value, CliError> {
    let jet = match cfg.source_descriptor()?.source()? {
        Source::Jet(j) => j,
        Source::Analytic(_) => {
            return Err(CliError::Config("extend needs a source of kind \"jet\"".into()))
        }
    };
    let ext = build_extension(jet, cfg.sequence()?, cfg.extension.b, cfg.extension.cutoff_margin)?;
    let h = carleman_core::extension::DEFAULT_DBAR_STEP;
    let mut t = Table::new(&[
        "x", "y", "re_F", "im_F", "re_dbar", "im_dbar", "ln_bound_ratio", "dbar_discrepancy", "unreliable",
    ]);
    let mut worst: f64 = 0.0;
    for z in ext.plateau_grid(cfg.numeric.grid.count, 9) {
        let f = ext.eval(z);
        let c = dbar_check(&ext, z, h)?;
        if !c.unreliable {
            worst = worst.max(c.discrepancy);
        }
        t.push(vec![
            Cell::Real(z.re),
            Cell::Real(z.im),
            Cell::Real(f.re),
            Cell::Real(f.im),
            Cell::Real(c.analytic.re),
            Cell::Real(c.analytic.im),
            Cell::Real(ext.ln_bound_ratio(z)),
            Cell::Real(c.discrepancy),
            Cell::Bool(c.unreliable),
        ]);
    }
    emit(cfg, paths, &t, artifacts)?;
    Ok(json!({
        "bound": ext.bound_constants(),
        "plateau_radius": ext.plateau_radius(),
        "support_radius": ext.support_radius(),
        "certified_y_floor": ext.certified_y_floor(),
        "max_dbar_discrepancy": worst,
    }))
}

fn split_cmd(cfg: &RunConfig, paths: &Paths, artifacts: &mut Vec<PathBuf>) -> Result<Value, CliError> {
    let n = &cfg.numeric;
    let source = match cfg.source_descriptor()? {
        FunctionDescriptor::Jet { .. } => {
            let Source::Jet(jet) = cfg.source_descriptor()?.source()? else {
                unreachable!("jet descriptor builds a jet")
            };
            let seq = carleman_core::CarlemanSequence::builtin(&cfg.extension.sequence, jet.n_max().max(8) + 1)?;
            SplitSource::from(build_extension(jet, seq, cfg.extension.b, cfg.extension.cutoff_margin)?)
        }
        d => SplitSource::from(d.analytic()?),
    };
    let mut params = SplitParams::new(n.rho, n.c0).with_contour_nodes(n.contour_nodes);
    params.area_nodes_radial = n.area_nodes;
    params.area_nodes_angular = n.area_nodes;
    let pair = split(source.clone(), params)?;

    let mut t = Table::new(&["x", "re_f_plus", "im_f_plus", "re_f_minus", "im_f_minus", "reassembly_error"]);
    let mut worst: f64 = 0.0;
    for x in n.grid.spec()?.xs() {
        let z = Complex64::new(x, 0.0);
        let (p, m) = (pair.plus(z)?, pair.minus(z)?);
        // the halves add up to the source only inside the disk
        let err = if x.abs() < n.rho {
            let e = (source.eval(z) - p - m).norm();
            worst = worst.max(e);
            Cell::Real(e)
        } else {
            Cell::Empty
        };
        t.push(vec![Cell::Real(x), Cell::Real(p.re), Cell::Real(p.im), Cell::Real(m.re), Cell::Real(m.im), err]);
    }
    emit(cfg, paths, &t, artifacts)?;
    let xs: Vec<f64> = (1..=6).map(|k| n.rho + 0.5 * k as f64).collect();
    let fit = decay_check(&pair, &params, &xs)?;
    Ok(json!({
        "max_reassembly_error": worst,
        "decay": fit,
        "decay_constant": params.decay_constant(),
        "d0_estimate": pair.d0_estimate(),
    }))
}

/// `|sum_j a_j(x) phi(x + alpha_j) - chi(x)|` at `x`.
fn pointwise_residual(p: &DifferenceProblem, sol: &Solution, x: f64) -> Result<f64, CliError> {
    let z = Complex64::new(x, 0.0);
    let mut s = Complex64::new(0.0, 0.0);
    for (a, &alpha) in p.coeffs.iter().zip(&p.alphas) {
        s += a.eval(z) * sol.phi(x + alpha)?;
    }
    Ok((s - p.chi.value_at(x)).norm())
}

/// Closed-form solution when every coefficient is a real constant and the
/// right-hand side is `cos(omega x)` or `amp exp(i omega x)`.
fn oracle(cfg: &RunConfig) -> Option<Box<dyn Fn(f64) -> Complex64>> {
    let spec = cfg.problem.as_ref()?;
    let a: Vec<f64> = spec
        .coeffs
        .iter()
        .map(|c| match c {
            FunctionDescriptor::Const { value, im } if *im == 0.0 => Some(*value),
            _ => None,
        })
        .collect::<Option<_>>()?;
    match spec.chi {
        FunctionDescriptor::ExpI { omega, amp } => {
            let o = oracle_constant_coeff(&a, &spec.alphas, omega).ok()?;
            Some(Box::new(move |x| o.eval(x) * amp))
        }
        FunctionDescriptor::Trig { offset, a: ca, b, omega } if offset == 0.0 && b == 0.0 => {
            let plus = oracle_constant_coeff(&a, &spec.alphas, omega).ok()?;
            let minus = oracle_constant_coeff(&a, &spec.alphas, -omega).ok()?;
            Some(Box::new(move |x| 0.5 * ca * (plus.eval(x) + minus.eval(x))))
        }
        _ => None,
    }
}

fn solve_cmd(
    cfg: &RunConfig,
    paths: &Paths,
    artifacts: &mut Vec<PathBuf>,
    verify: bool,
) -> Result<Value, CliError> {
    let p = cfg.problem()?;
    let opts = cfg.solve_options();
    let sol = carleman_core::solve(&p, &opts)?;
    let xs = cfg.numeric.grid.spec()?.xs();

    let mut t = Table::new(&["x", "re_phi", "im_phi", "residual"]);
    let mut worst = (0.0f64, xs[0]);
    for &x in &xs {
        let phi = sol.phi(x)?;
        let r = pointwise_residual(&p, &sol, x)?;
        if r > worst.0 || r.is_nan() {
            worst = (r, x);
        }
        t.push(vec![Cell::Real(x), Cell::Real(phi.re), Cell::Real(phi.im), Cell::Real(r)]);
    }
    emit(cfg, paths, &t, artifacts)?;

    if cfg.output.emit_plot_data {
        let mut plot = Table::new(&["n", "lnln_g", "lnln_h"]);
        let lnln = |l: f64| if l < 0.0 { Cell::Real((-l).ln()) } else { Cell::Empty };
        for s in &sol.series.trace {
            plot.push(vec![Cell::Int(s.n as i64), lnln(s.log_sup_g), lnln(s.log_sup_h)]);
        }
        output::write_csv(&paths.plot(), &plot)?;
        artifacts.push(paths.plot());
    }

    let s = &sol.series;
    let mut summary = json!({
        "validation": sol.report,
        "truncation_n": s.truncation_n,
        "na": s.na,
        "tail_estimate": s.tail_estimate,
        "monitor_halfwidth": s.interval_halfwidth,
        "rates": s.rates,
        "max_residual": worst.0,
        "max_residual_at": worst.1,
    });
    if !verify {
        return Ok(summary);
    }
    let limit = 10.0 * cfg.numeric.tol;
    let oracle_diff = oracle(cfg).map(|o| -> Result<f64, CliError> {
        let mut d: f64 = 0.0;
        for &x in &xs {
            d = d.max((sol.phi(x)? - o(x)).norm());
        }
        Ok(d)
    });
    if let Some(d) = oracle_diff {
        summary["oracle_max_difference"] = json!(d?);
    }
    summary["residual_limit"] = json!(limit);
    if !(worst.0 <= limit) {
        let msg = format!(
            "residual {:.3e} exceeds {limit:.3e} at sample point x = {}",
            worst.0, worst.1
        );
        return Err(CliError::Verify(msg));
    }
    Ok(summary)
}

fn bench(cfg: &RunConfig, paths: &Paths, artifacts: &mut Vec<PathBuf>) -> Result<Value, CliError> {
    let p = cfg.problem()?;
    let opts = cfg.solve_options();
    let total = Instant::now();

    let report = validate_problem(&p, &opts.sample_grid)?;
    if !report.passed {
        return Err(Error::Validation(Box::new(report)).into());
    }
    let reach = p.alphas.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let working = opts.a + 2.0 * reach;

    let t0 = Instant::now();
    let dc = derive_coefficients(&p, opts.c1, opts.delta0)?;
    let halves = split_rhs(&p, &dc, &opts)?;
    // the halves are lazy; evaluate them on the monitoring grid
    for x in carleman_core::GridSpec::symmetric(working, opts.grid_points)?.xs() {
        let z = Complex64::new(x, 0.0);
        halves.ln_plus(z)?;
        halves.ln_minus(z)?;
    }
    let split_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let rec = Arc::new(Recurrence::new(&p, &dc, halves, opts.cache_budget));
    let series = sum_series(rec, working, opts.tol, opts.n_cap, opts.grid_points)?;
    let recurrence_s = t1.elapsed().as_secs_f64();

    let sol = Solution {
        report,
        coefficients: dc,
        series,
        alpha_first: p.alphas[0],
        alpha_last: p.alphas[p.q() - 1],
    };
    let xs = cfg.numeric.grid.spec()?.xs();
    let t2 = Instant::now();
    for &x in &xs {
        sol.phi(x)?;
    }
    let summation_s = t2.elapsed().as_secs_f64();

    let t3 = Instant::now();
    let residual = carleman_core::residual(&p, |x| sol.phi(x), &cfg.numeric.grid.spec()?)?;
    let residual_s = t3.elapsed().as_secs_f64();

    let doc = json!({
        "stages": {
            "split_s": split_s,
            "recurrence_s": recurrence_s,
            "summation_s": summation_s,
            "residual_s": residual_s,
        },
        "total_s": total.elapsed().as_secs_f64(),
        "truncation_n": sol.series.truncation_n,
        "cache_entries": sol.series.recurrence().cache_len(),
        "max_residual": residual,
    });
    output::write_json(&paths.result, &doc)?;
    artifacts.push(paths.result.clone());
    Ok(doc)
}

/// What a finished run records next to its result.
#[derive(Debug, serde::Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub library_version: &'static str,
    pub command: &'static str,
    /// The parsed config with defaults filled in; `null` if it did not parse.
    pub config: Option<&'a RunConfig>,
    pub wall_time_s: f64,
    pub exit_code: u8,
    pub error: Option<String>,
    pub summary: Value,
    pub artifacts: Vec<String>,
}

impl<'a> Manifest<'a> {
    pub fn new(command: Command, config: Option<&'a RunConfig>) -> Self {
        Self {
            tool: "carleman-dsolve",
            version: env!("CARGO_PKG_VERSION"),
            library_version: carleman_core::VERSION,
            command: command.name(),
            config,
            wall_time_s: 0.0,
            exit_code: 0,
            error: None,
            summary: Value::Null,
            artifacts: Vec::new(),
        }
    }

    pub fn write(&self, paths: &Paths) -> Result<(), CliError> {
        let doc = serde_json::to_value(self).map_err(|e| CliError::Io(e.to_string()))?;
        output::write_json(&paths.manifest(), &doc)
    }
}

/// Resolves the result path: `--out`, then `output.path`, then a default.
pub fn result_path(command: Command, out: Option<&Path>, cfg: Option<&RunConfig>) -> PathBuf {
    if let Some(p) = out {
        return p.to_path_buf();
    }
    if let Some(p) = cfg.and_then(|c| c.output.path.as_ref()) {
        return PathBuf::from(p);
    }
    let format = cfg.map(|c| c.output.format).unwrap_or_default();
    Paths::default_for(command, format)
}
