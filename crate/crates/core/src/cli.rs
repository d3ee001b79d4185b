//! Command-line front end. `main.rs` only forwards to [`run`].
//!
//! Exit codes: 0 pass, 1 verification or evaluation failure, 2 usage or
//! configuration error.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Error;
use crate::field::{Field, Interval};
use crate::invariant::{check_invariant_space, solve_constraint};
use crate::kernels::{brownian_burgers_solution, burgers_residual, heat_residual, hyperbolic_heat_density, KernelPoint};
use crate::operators::{check_a_ode, check_commutator, check_factorization, check_leibniz, Probe, Sample, SpatialOp};
use crate::report::{g12, ser_g12, ser_g12_map, CheckOutcome};
use crate::residual::{convergence_sweep, evaluate_detailed, perturb, write_points_csv, GridSpec, Refine, Sweep};
use crate::sampling::interior_samples;
use crate::scenarios::{find_with, metric_mismatch, ClockKind, Scenario, ScenarioParams, Solution};
use crate::specialfn::{hermite_gen, mittag_leffler, HermiteArgs, MLParams};
use crate::transform::{backward, forward, Gauge, TransformContext};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "opburgers",
    version,
    about = "Exact solutions and residual verification for operator Burgers equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One row per catalog scenario.
    List {
        #[arg(long, value_enum, default_value_t = ListFormat::Text)]
        format: ListFormat,
    },
    /// Full descriptor of one scenario as JSON.
    Describe {
        id: String,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Hypothesis checks, invariant-space checks and residuals.
    Verify(VerifyArgs),
    /// Tabulate the exponential transform over a grid.
    Transform(TransformArgs),
    /// Evaluate a special function.
    Special {
        #[command(subcommand)]
        func: SpecialCmd,
    },
    /// Residual convergence sweep.
    Sweep(SweepArgs),
    /// (eta, t, phi, u) rows of the hyperbolic heat kernel.
    Kernel(KernelArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ListFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    Forward,
    Backward,
}

/// Overrides of the catalog constants.
#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    /// Fractional order.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_enum)]
    pub clock: Option<ClockArg>,
    /// Pole of A(t) = 1/(t - t0).
    #[arg(long, allow_hyphen_values = true)]
    pub t0: Option<f64>,
    /// Riccati integration constant.
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    /// Target eigenvalue of the coefficient system.
    #[arg(long, allow_hyphen_values = true)]
    pub target: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClockArg {
    Identity,
    Log1p,
}

impl ParamArgs {
    pub fn params(&self) -> ScenarioParams {
        let mut p = ScenarioParams::default();
        if let Some(b) = self.beta {
            p.beta = b;
        }
        if let Some(c) = self.clock {
            p.clock = match c {
                ClockArg::Identity => ClockKind::Identity,
                ClockArg::Log1p => ClockKind::Log1p,
            };
        }
        if let Some(t0) = self.t0 {
            p.t0 = t0;
        }
        if let Some(c) = self.c {
            p.c = c;
        }
        if let Some(a) = self.target {
            p.target = a;
        }
        p
    }
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    pub id: String,
    /// Nodes per spatial axis, optionally followed by time nodes: 24x12, 8x8x6.
    #[arg(long)]
    pub grid: Option<String>,
    /// Relative residual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Adds eps x₀² to the solution (control run).
    #[arg(long, allow_hyphen_values = true)]
    pub perturb: Option<f64>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed of the sample points for the hypothesis checks.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Solution label; defaults to the scenario's first solution.
    #[arg(long)]
    pub solution: Option<String>,
    /// Levels of the convergence sweep.
    #[arg(long, default_value_t = 4)]
    pub levels: usize,
    /// Per-point residual CSV.
    #[arg(long)]
    pub points: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TransformArgs {
    pub id: String,
    #[arg(value_enum)]
    pub direction: Direction,
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub solution: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    pub id: String,
    #[arg(long, default_value_t = 4)]
    pub levels: usize,
    #[arg(long)]
    pub solution: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub perturb: Option<f64>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[arg(long, default_value_t = 0.5)]
    pub eta_lo: f64,
    #[arg(long, default_value_t = 2.5)]
    pub eta_hi: f64,
    #[arg(long, default_value_t = 9)]
    pub eta_n: usize,
    /// Comma-separated times.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 1.0, 2.0])]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub t0: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub rel_tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum SpecialCmd {
    /// E_β(z)
    Ml {
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, allow_hyphen_values = true)]
        z: f64,
    },
    /// H_n(f, h)
    Hermite {
        #[arg(long)]
        n: u32,
        #[arg(long, allow_hyphen_values = true)]
        f: f64,
        #[arg(long, allow_hyphen_values = true)]
        h: f64,
    },
    /// φ(η, t)
    Kernel {
        #[arg(long, allow_hyphen_values = true)]
        eta: f64,
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        #[arg(long, default_value_t = 1e-10)]
        rel_tol: f64,
    },
}

/// A command failure with its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Failed(_) => EXIT_FAIL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

/// Configuration errors exit 2, everything else 1.
fn classify(e: Error) -> CliError {
    match e {
        Error::UnknownScenario(_) | Error::Parameter(_) | Error::Arity { .. } | Error::UnsupportedCheck(_) => {
            CliError::Usage(e.to_string())
        }
        _ => CliError::Failed(e.to_string()),
    }
}

fn failed(e: Error) -> CliError {
    CliError::Failed(e.to_string())
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Failed(format!("output failed: {e}"))
}

type CmdResult = std::result::Result<i32, CliError>;

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_PASS
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.cmd, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    match cmd {
        Command::List { format } => cmd_list(format, out),
        Command::Describe { id, params } => cmd_describe(&id, &params.params(), out),
        Command::Verify(a) => cmd_verify(&a, out, err),
        Command::Transform(a) => cmd_transform(&a, out, err),
        Command::Special { func } => cmd_special(&func, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
        Command::Kernel(a) => cmd_kernel(&a, out),
    }
}

/// Writes to `--out` when given, otherwise to `out`.
fn emit(
    path: &Option<PathBuf>,
    out: &mut dyn Write,
    f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> std::result::Result<(), CliError> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(io_err)?;
            let mut w = BufWriter::new(file);
            f(&mut w).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
        None => f(out).map_err(io_err),
    }
}

pub fn cmd_list(format: ListFormat, out: &mut dyn Write) -> CmdResult {
    let cat = crate::scenarios::catalog();
    match format {
        ListFormat::Json => {
            let d: Vec<_> = cat.iter().map(|s| s.descriptor()).collect();
            writeln!(out, "{}", serde_json::to_string_pretty(&d).expect("descriptors serialize")).map_err(io_err)?;
        }
        ListFormat::Text => {
            writeln!(out, "{:<16} {:<9} {:>4}  time", "id", "equation", "dims").map_err(io_err)?;
            for s in &cat {
                writeln!(out, "{:<16} {:<9} {:>4}  {}", s.id, s.equation, s.ndim(), s.time_op.kind()).map_err(io_err)?;
            }
        }
    }
    Ok(EXIT_PASS)
}

pub fn cmd_describe(id: &str, p: &ScenarioParams, out: &mut dyn Write) -> CmdResult {
    let sc = find_with(id, p).map_err(classify)?;
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(&sc.descriptor()).expect("descriptor serializes")
    )
    .map_err(io_err)?;
    Ok(EXIT_PASS)
}

/// Parses `8x8` or `8x8x6` (spatial counts, then optionally time nodes).
/// A single number applies to every spatial axis.
pub fn parse_grid(s: &str, ndim: usize) -> std::result::Result<(Vec<usize>, Option<usize>), CliError> {
    let nums: Vec<usize> = s
        .split(['x', 'X'])
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("malformed grid '{s}'")))?;
    match nums.len() {
        1 => Ok((vec![nums[0]; ndim], None)),
        n if n == ndim => Ok((nums, None)),
        n if n == ndim + 1 => Ok((nums[..ndim].to_vec(), Some(nums[ndim]))),
        _ => Err(CliError::Usage(format!("grid '{s}' does not fit {ndim} spatial axes"))),
    }
}

/// Default residual grid: nodes per axis and time nodes by dimension.
pub fn default_grid(ndim: usize) -> (usize, usize) {
    match ndim {
        1 => (24, 12),
        2 => (10, 6),
        3 => (6, 5),
        _ => (5, 4),
    }
}

/// Coarser grid for sweeps.
pub fn sweep_grid(ndim: usize) -> (usize, usize) {
    match ndim {
        1 => (8, 4),
        2 => (5, 4),
        _ => (4, 4),
    }
}

/// Base grid of a convergence sweep for the scenario's refinement kind.
pub fn sweep_base(sc: &Scenario, sol: &Solution) -> GridSpec {
    let (n, nt) = sweep_grid(sc.ndim());
    let g = GridSpec::for_solution(sc, sol, n, nt);
    match Refine::for_scenario(sc) {
        Refine::Step => g.with_step(0.0025, crate::operators::Stencil::Central),
        Refine::FracNodes => g.with_frac_nodes(512),
    }
}

/// Accepted sweep orders: at least 1.8 for classical time, the band
/// [2 - β - 0.3, 2 - β + 0.5] for fractional time.
pub fn order_window(sc: &Scenario) -> (f64, f64) {
    match &sc.time_op {
        crate::operators::TimeOp::Classical => (1.8, f64::INFINITY),
        crate::operators::TimeOp::Fractional(p) => (2.0 - p.beta - 0.3, 2.0 - p.beta + 0.5),
    }
}

fn order_check(sc: &Scenario, sw: &Sweep) -> CheckOutcome {
    let (lo, hi) = order_window(sc);
    let pass = sw.order >= lo && sw.order <= hi && sw.decreasing(0.1);
    CheckOutcome {
        name: "residual-order".into(),
        max_dev: sw.order,
        tol: lo,
        pass,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualSummary {
    #[serde(serialize_with = "ser_g12")]
    pub max_abs: f64,
    #[serde(serialize_with = "ser_g12")]
    pub l2: f64,
    #[serde(serialize_with = "ser_g12_map")]
    pub per_term: BTreeMap<String, f64>,
    #[serde(serialize_with = "ser_g12")]
    pub order: f64,
    #[serde(serialize_with = "ser_g12")]
    pub normalization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub scenario: String,
    pub solution: String,
    pub checks: Vec<CheckOutcome>,
    pub residual: ResidualSummary,
    pub excluded_points: usize,
}

impl VerifyReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    fn write_csv(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "name,max_dev,tol,pass")?;
        for c in &self.checks {
            writeln!(w, "{},{},{},{}", c.name, g12(c.max_dev), g12(c.tol), c.pass)?;
        }
        Ok(())
    }
}

/// Settings of a verification run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub grid: Option<(Vec<usize>, Option<usize>)>,
    pub tol: Option<f64>,
    pub perturb: Option<f64>,
    pub seed: u64,
    pub solution: Option<String>,
    pub levels: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid: None,
            tol: None,
            perturb: None,
            seed: 7,
            solution: None,
            levels: 4,
        }
    }
}

/// Smooth test fields for the operator checks.
fn test_fields() -> (Field, Field) {
    let u = Field::new(|x, t| 1.3 + 0.4 * x.iter().map(|v| v * v).sum::<f64>() * (1.0 + 0.2 * t));
    let v = Field::new(|x, t| (0.3 * x.iter().sum::<f64>()).exp() * (0.5 * t).cos());
    (u, v)
}

fn distinct_ops(sc: &Scenario) -> Vec<&SpatialOp> {
    let mut ops: Vec<&SpatialOp> = Vec::new();
    for d in &sc.dims {
        for op in [&d.n, &d.m] {
            if !ops.iter().any(|o| o.axis == op.axis && o.label == op.label) {
                ops.push(op);
            }
        }
    }
    ops
}

fn run_check(name: &str, tol: f64, r: crate::Result<f64>) -> CheckOutcome {
    match r {
        Ok(dev) => CheckOutcome::below(name, dev, tol),
        Err(e) => CheckOutcome::failed(name, &e.to_string()),
    }
}

/// Operator hypotheses, generator properties, constraint identity and
/// metric consistency at seeded sample points.
pub fn hypothesis_checks(sc: &Scenario, seed: u64) -> Vec<CheckOutcome> {
    let samples = interior_samples(&sc.bounds(), sc.time.interval, 24, 0.05, seed);
    let probe = Probe::new(sc.bounds(), sc.time.interval);
    let (u, v) = test_fields();
    let mut checks = Vec::new();
    for op in distinct_ops(sc) {
        checks.push(run_check(
            &format!("leibniz[{}]", op.label),
            1e-5,
            check_leibniz(op, &u, &v, &samples, &probe),
        ));
    }
    if sc.is_classical() {
        for op in distinct_ops(sc) {
            let name = format!("commutator[{}]", op.label);
            checks.push(run_check(&name, 1e-5, check_commutator(&sc.time_op, op, &u, &samples, &probe)));
        }
        let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
        for d in &sc.dims {
            let name = format!("riccati-identity[{}]", d.axis.name);
            checks.push(run_check(&name, 1e-6, check_a_ode(&sc.time_op, &d.a, &times, &probe)));
        }
    }
    for d in &sc.dims {
        if d.l.identity {
            continue;
        }
        let name = format!("factorization[{}]", d.axis.name);
        checks.push(run_check(&name, 1e-8, check_factorization(&d.m, &d.l, &d.n, &u, &samples, &probe)));
    }
    checks.push(run_check(
        "invariant-space",
        1e-6,
        check_invariant_space(sc, &samples, &probe).map(|r| r.max()),
    ));
    if !sc.is_classical() {
        match solve_constraint(sc, sc.params.target) {
            Ok(c) => checks.push(CheckOutcome::below("constraint-identity", c.max_dev, 1e-9)),
            Err(Error::UnsupportedConstraint(_)) => {}
            Err(e) => checks.push(CheckOutcome::failed("constraint-identity", &e.to_string())),
        }
    }
    if sc.metric.is_some() {
        checks.push(run_check("metric", 1e-5, metric_mismatch(sc, &u, &samples, 1e-3)));
    }
    checks
}

fn pick_solution<'a>(sc: &'a Scenario, label: &Option<String>) -> std::result::Result<&'a Solution, CliError> {
    match label {
        Some(l) => sc.solution(l).map_err(classify),
        None => Ok(sc.exact()),
    }
}

/// Kernel residuals at 12 seeded samples, for quadrature-defined solutions.
fn kernel_checks(sc: &Scenario, seed: u64) -> (Vec<CheckOutcome>, f64) {
    let samples = interior_samples(&[Interval::new(0.5, 2.5)], Interval::new(0.5, 2.0), 12, 0.0, seed);
    let (mut heat, mut burgers) = (0.0_f64, 0.0_f64);
    for s in &samples {
        let p = match KernelPoint::new(s.x[0], s.t) {
            Ok(p) => p,
            Err(e) => return (vec![CheckOutcome::failed("kernel-residual", &e.to_string())], f64::NAN),
        };
        match (heat_residual(p, 1e-3, 1e-10), burgers_residual(p, sc.params.t0, 1e-3, 1e-10)) {
            (Ok(h), Ok(b)) => {
                heat = heat.max(h.relative);
                burgers = burgers.max(b.relative);
            }
            (Err(e), _) | (_, Err(e)) => return (vec![CheckOutcome::failed("kernel-residual", &e.to_string())], f64::NAN),
        }
    }
    (
        vec![
            CheckOutcome::below("kernel-heat-residual", heat, 1e-3),
            CheckOutcome::below("kernel-burgers-residual", burgers, 1e-2),
        ],
        burgers,
    )
}

/// The full verification pipeline behind `verify`.
pub fn verify(sc: &Scenario, cfg: &RunConfig) -> std::result::Result<(VerifyReport, Vec<crate::residual::PointRecord>), CliError> {
    let sol = pick_solution(sc, &cfg.solution)?;
    let mut checks = hypothesis_checks(sc, cfg.seed);

    if sol.expensive {
        if cfg.perturb.is_some() {
            return Err(CliError::Usage(
                "perturbation is not available for quadrature-defined solutions".into(),
            ));
        }
        let (kc, rel) = kernel_checks(sc, cfg.seed);
        checks.extend(kc);
        let report = VerifyReport {
            scenario: sc.id.clone(),
            solution: sol.label.clone(),
            checks,
            residual: ResidualSummary {
                max_abs: rel,
                l2: f64::NAN,
                per_term: BTreeMap::new(),
                order: f64::NAN,
                normalization: 1.0,
            },
            excluded_points: 0,
        };
        return Ok((report, Vec::new()));
    }

    let field = match cfg.perturb {
        Some(eps) => perturb(&sol.field, eps),
        None => sol.field.clone(),
    };
    let (n, nt) = default_grid(sc.ndim());
    let mut grid = GridSpec::for_solution(sc, sol, n, nt);
    if let Some((counts, t)) = &cfg.grid {
        grid = grid.with_counts(counts.clone());
        if let Some(t) = t {
            grid.time_nodes = *t;
        }
    }
    let (rep, records) = evaluate_detailed(sc, &field, &grid).map_err(classify)?;
    let tol = cfg.tol.unwrap_or(if sc.is_classical() { 1e-5 } else { 1e-3 });
    checks.push(CheckOutcome::below("residual", rep.max_abs / rep.normalization, tol));

    let sweep = convergence_sweep(sc, &field, &sweep_base(sc, sol), cfg.levels, Refine::for_scenario(sc)).map_err(classify)?;
    checks.push(order_check(sc, &sweep));

    let report = VerifyReport {
        scenario: sc.id.clone(),
        solution: sol.label.clone(),
        checks,
        residual: ResidualSummary {
            max_abs: rep.max_abs,
            l2: rep.l2,
            per_term: rep.per_term,
            order: sweep.order,
            normalization: rep.normalization,
        },
        excluded_points: rep.excluded,
    };
    Ok((report, records))
}

pub fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let sc = find_with(&a.id, &a.params.params()).map_err(classify)?;
    let grid = a.grid.as_deref().map(|g| parse_grid(g, sc.ndim())).transpose()?;
    if a.levels < 3 {
        return Err(CliError::Usage("--levels must be at least 3".into()));
    }
    let cfg = RunConfig {
        grid,
        tol: a.tol,
        perturb: a.perturb,
        seed: a.seed,
        solution: a.solution.clone(),
        levels: a.levels,
    };
    let (report, records) = verify(&sc, &cfg)?;
    emit(&a.out, out, |w| match a.format {
        ReportFormat::Json => writeln!(w, "{}", report.to_json()),
        ReportFormat::Csv => report.write_csv(w),
    })?;
    if let Some(p) = &a.points {
        let file = File::create(p).map_err(io_err)?;
        write_points_csv(&sc, &records, BufWriter::new(file)).map_err(failed)?;
    }
    for c in report.checks.iter().filter(|c| !c.pass) {
        let _ = writeln!(err, "failed: {} (max_dev {}, tol {})", c.name, g12(c.max_dev), g12(c.tol));
    }
    Ok(if report.pass() { EXIT_PASS } else { EXIT_FAIL })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub scenario: String,
    pub solution: String,
    pub sweep: Sweep,
    pub check: CheckOutcome,
}

pub fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> CmdResult {
    let sc = find_with(&a.id, &a.params.params()).map_err(classify)?;
    let sol = pick_solution(&sc, &a.solution)?;
    if sol.expensive {
        return Err(CliError::Usage("sweeps are not available for quadrature-defined solutions".into()));
    }
    let field = match a.perturb {
        Some(eps) => perturb(&sol.field, eps),
        None => sol.field.clone(),
    };
    let sweep = convergence_sweep(&sc, &field, &sweep_base(&sc, sol), a.levels, Refine::for_scenario(&sc)).map_err(classify)?;
    let check = order_check(&sc, &sweep);
    let pass = check.pass;
    let rep = SweepReport {
        scenario: sc.id.clone(),
        solution: sol.label.clone(),
        sweep,
        check,
    };
    emit(&a.out, out, |w| match a.format {
        ReportFormat::Json => writeln!(w, "{}", serde_json::to_string_pretty(&rep).expect("sweep serializes")),
        ReportFormat::Csv => {
            writeln!(w, "h,max_abs,excluded")?;
            for s in &rep.sweep.samples {
                writeln!(w, "{},{},{}", g12(s.h), g12(s.max_abs), s.excluded)?;
            }
            writeln!(w, "# order {}", g12(rep.sweep.order))
        }
    })?;
    Ok(if pass { EXIT_PASS } else { EXIT_FAIL })
}

/// One transform row; `output` and `deviation` are empty for excluded rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformRow {
    pub x: Vec<f64>,
    pub t: f64,
    pub input: f64,
    pub output: Option<f64>,
    pub deviation: Option<f64>,
}

/// Tabulates the transform. Backward maps the solution to ψ and reports
/// the roundtrip deviation; forward maps the companion to u and reports
/// the deviation from the closed-form solution.
pub fn transform_table(sc: &Scenario, sol: &Solution, dir: Direction, grid: &GridSpec) -> std::result::Result<Vec<TransformRow>, CliError> {
    let ctx = TransformContext::for_scenario(sc).map_err(classify)?;
    let anchor = ctx.clone().with_gauge(Gauge::Anchor);
    let axes: Vec<Vec<f64>> = grid.intervals.iter().zip(&grid.counts).map(|(iv, &n)| iv.nodes(n)).collect();
    let mut pts = Vec::new();
    let mut idx = vec![0usize; axes.len()];
    'outer: loop {
        let x: Vec<f64> = idx.iter().enumerate().map(|(d, &i)| axes[d][i]).collect();
        for t in grid.time_interval.nodes(grid.time_nodes) {
            pts.push(Sample { x: x.clone(), t });
        }
        for d in 0..axes.len() {
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                continue 'outer;
            }
            idx[d] = 0;
        }
        break;
    }
    let rows = match dir {
        Direction::Backward => {
            let psi_anchor = crate::transform::backward_field(&anchor, &sol.field);
            pts.par_iter()
                .map(|s| {
                    let input = sol.field.eval(&s.x, s.t);
                    match backward(&ctx, &sol.field, &s.x, s.t) {
                        Ok(b) => {
                            let dev = forward(&anchor, &psi_anchor, &s.x, s.t).ok().map(|v| (v - input).abs());
                            TransformRow {
                                x: s.x.clone(),
                                t: s.t,
                                input,
                                output: Some(b.psi),
                                deviation: dev,
                            }
                        }
                        Err(_) => TransformRow {
                            x: s.x.clone(),
                            t: s.t,
                            input,
                            output: None,
                            deviation: None,
                        },
                    }
                })
                .collect()
        }
        Direction::Forward => {
            let psi = sol
                .companion
                .clone()
                .ok_or_else(|| CliError::Usage(format!("solution '{}' has no closed-form companion", sol.label)))?;
            pts.par_iter()
                .map(|s| {
                    let input = psi.eval(&s.x, s.t);
                    let output = forward(&ctx, &psi, &s.x, s.t).ok();
                    let deviation = output.map(|v| (v - sol.field.eval(&s.x, s.t)).abs());
                    TransformRow {
                        x: s.x.clone(),
                        t: s.t,
                        input,
                        output,
                        deviation,
                    }
                })
                .collect()
        }
    };
    Ok(rows)
}

pub fn cmd_transform(a: &TransformArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let sc = find_with(&a.id, &a.params.params()).map_err(classify)?;
    let sol = match (&a.solution, a.direction) {
        (Some(l), _) => sc.solution(l).map_err(classify)?,
        (None, Direction::Forward) => sc
            .solutions
            .iter()
            .find(|s| s.companion.is_some())
            .ok_or_else(|| CliError::Usage(format!("{} has no solution with a closed-form companion", sc.id)))?,
        (None, Direction::Backward) => sc.solution("riccati").unwrap_or(sc.exact()),
    };
    if sol.expensive {
        return Err(CliError::Usage(
            "transforms of quadrature-defined solutions are not tabulated".into(),
        ));
    }
    let mut grid = GridSpec::for_scenario(&sc, 11, 5);
    if let Some(g) = &a.grid {
        let (counts, t) = parse_grid(g, sc.ndim())?;
        grid = grid.with_counts(counts);
        if let Some(t) = t {
            grid.time_nodes = t;
        }
    }
    let rows = transform_table(&sc, sol, a.direction, &grid)?;
    let excluded = rows.iter().filter(|r| r.output.is_none()).count();
    let (inp, outp) = match a.direction {
        Direction::Backward => ("u", "psi"),
        Direction::Forward => ("psi", "u"),
    };
    emit(&a.out, out, |w| {
        let mut head: Vec<String> = sc.dims.iter().map(|d| d.axis.name.clone()).collect();
        head.extend([sc.time.name.clone(), inp.into(), outp.into(), "deviation".into(), "status".into()]);
        writeln!(w, "{}", head.join(","))?;
        for r in &rows {
            let mut cells: Vec<String> = r.x.iter().map(|v| g12(*v)).collect();
            cells.push(g12(r.t));
            cells.push(g12(r.input));
            cells.push(r.output.map(g12).unwrap_or_default());
            cells.push(r.deviation.map(g12).unwrap_or_default());
            cells.push(if r.output.is_some() { "ok".into() } else { "excluded".into() });
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    })?;
    let _ = writeln!(err, "{excluded} of {} rows excluded", rows.len());
    Ok(EXIT_PASS)
}

pub fn cmd_special(f: &SpecialCmd, out: &mut dyn Write) -> CmdResult {
    let v = match *f {
        SpecialCmd::Ml { beta, z } => mittag_leffler(MLParams { beta, arg: z }),
        SpecialCmd::Hermite { n, f, h } => hermite_gen(HermiteArgs { n, fval: f, hval: h }),
        SpecialCmd::Kernel { eta, t, rel_tol } => KernelPoint::new(eta, t).and_then(|p| hyperbolic_heat_density(p, rel_tol)),
    }
    .map_err(failed)?;
    writeln!(out, "{}", g12(v)).map_err(io_err)?;
    Ok(EXIT_PASS)
}

pub fn cmd_kernel(a: &KernelArgs, out: &mut dyn Write) -> CmdResult {
    if a.eta_n < 2 || !(a.eta_lo > 0.0) || a.eta_hi <= a.eta_lo {
        return Err(CliError::Usage("need 0 < eta-lo < eta-hi and eta-n >= 2".into()));
    }
    let etas = Interval::new(a.eta_lo, a.eta_hi).nodes(a.eta_n);
    let pts: Vec<(f64, f64)> = a.t.iter().flat_map(|&t| etas.iter().map(move |&e| (e, t))).collect();
    let rows: Vec<crate::Result<(f64, f64, f64, f64)>> = pts
        .par_iter()
        .map(|&(eta, t)| {
            let p = KernelPoint::new(eta, t)?;
            let phi = hyperbolic_heat_density(p, a.rel_tol)?;
            let u = brownian_burgers_solution(p, a.t0, 1e-3, a.rel_tol)?;
            Ok((eta, t, phi, u))
        })
        .collect();
    let rows: Vec<(f64, f64, f64, f64)> = rows.into_iter().collect::<crate::Result<_>>().map_err(classify)?;
    emit(&a.out, out, |w| {
        writeln!(w, "eta,t,phi,u")?;
        for (e, t, phi, u) in &rows {
            writeln!(w, "{},{},{},{}", g12(*e), g12(*t), g12(*phi), g12(*u))?;
        }
        Ok(())
    })?;
    Ok(EXIT_PASS)
}
