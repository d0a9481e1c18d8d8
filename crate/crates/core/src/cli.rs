//! Config-driven batch runs.
//!
//! Each run reads one JSON experiment config. Only `--seed` and `--out`
//! override values from the file. Outputs go to the output directory:
//! `report.json` always, plus `trace.jsonl` and `trace.csv` for `solve`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bifunctions::{
    check_convexity_in_y, check_h1, check_monotone, check_pseudomonotone, estimate_theta, BifunctionError,
    BifunctionHandle, CatalogEntry, PropertyReport,
};
use crate::existence::{
    brute_force_equilibria, build_omega_k, check_assumption_1_segments, check_assumption_2, check_coercivity,
    Assumption2Report, CoercivityReport, ExistenceError, GridSpec,
};
use crate::geometry::{property_suite, GeometryError, Manifold, ManifoldDescriptor, ManifoldPoint, SuiteReport};
use crate::sets::{ConvexSet, SetDescriptor, SetError};
use crate::solver::{
    estimate_conditioning, fejer_inner_products, proximal_solve, read_jsonl, write_csv, write_jsonl,
    ConditioningEstimate, LambdaSchedule, ProximalConfig, SolverError, TerminationStatus, TraceIoError,
};
use crate::vr::{certify_variational_trap, TrapReport, TrapVerdict, VrError};

#[derive(Debug, Parser)]
#[command(
    name = "hadamard-ep",
    version,
    about = "Proximal point experiments for equilibrium problems on Hadamard manifolds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the proximal point method and write the trace.
    Solve(RunArgs),
    /// Sample the monotonicity-type properties of the bifunction.
    Properties(RunArgs),
    /// Brute-force equilibria and the existence assumptions.
    Existence(RunArgs),
    /// Fit the conditioning exponent and constant.
    Conditioning(RunArgs),
    /// Certify a trace as a variational trap.
    Trap(RunArgs),
    /// Run the geometry property suite on a manifold.
    GeometryTest(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Command {
    pub fn task(&self) -> Task {
        match self {
            Command::Solve(_) => Task::Solve,
            Command::Properties(_) => Task::Properties,
            Command::Existence(_) => Task::Existence,
            Command::Conditioning(_) => Task::Conditioning,
            Command::Trap(_) => Task::Trap,
            Command::GeometryTest(_) => Task::GeometryTest,
        }
    }

    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Solve(a)
            | Command::Properties(a)
            | Command::Existence(a)
            | Command::Conditioning(a)
            | Command::Trap(a)
            | Command::GeometryTest(a) => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Solve,
    Properties,
    Existence,
    Conditioning,
    Trap,
    GeometryTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub task: Option<Task>,
    #[serde(default)]
    pub problem: Option<CatalogEntry>,
    /// Starting point in ambient coordinates.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub proximal: Option<ProximalConfig>,
    /// Grid for the brute-force oracle.
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default = "default_oracle_tol")]
    pub oracle_tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub existence: Option<ExistenceSection>,
    #[serde(default)]
    pub trap: Option<TrapSection>,
    #[serde(default)]
    pub geometry: Option<GeometrySection>,
}

fn default_oracle_tol() -> f64 {
    1e-9
}

fn default_samples() -> usize {
    10_000
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExistenceSection {
    pub z0: Vec<f64>,
    /// Radius of the truncated domain used for the segment check.
    pub k: f64,
    /// Divergent path, ambient coordinates.
    pub path: Vec<Vec<f64>>,
    #[serde(default)]
    pub coercivity: Option<CoercivitySection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoercivitySection {
    pub ball: SetDescriptor,
    pub y0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    /// Trace file in the `solve` output format, relative to the config file.
    pub trace: PathBuf,
    pub lambda: LambdaSchedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub manifold: ManifoldDescriptor,
    #[serde(default = "default_radius")]
    pub radius: f64,
}

fn default_radius() -> f64 {
    1.5
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config {path}: field `{field}`: {message}")]
    Config { path: PathBuf, field: String, message: String },
    #[error("config: {0}")]
    Invalid(String),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Trace(#[from] TraceIoError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Bifunction(#[from] BifunctionError),
    #[error(transparent)]
    Existence(#[from] ExistenceError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Vr(#[from] VrError),
}

/// What a successful run found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    /// A property failed, an assumption was violated or a trap was not
    /// certified; the report holds the witness.
    Counterexample,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Ok => 0,
            Outcome::Counterexample => 2,
        }
    }
}

/// Parses a config, reporting the failing field path and line/column.
pub fn parse_config(text: &str, path: &Path) -> Result<ExperimentConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        CliError::Config {
            path: path.to_path_buf(),
            field,
            message: format!("{inner} (line {}, column {})", inner.line(), inner.column()),
        }
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Read { path: path.to_path_buf(), source: e })?;
    parse_config(&text, path)
}

struct Ctx {
    cfg: ExperimentConfig,
    seed: u64,
    out: PathBuf,
    base: PathBuf,
    stdout: Vec<String>,
}

impl Ctx {
    fn problem(&self) -> Result<BifunctionHandle, CliError> {
        let p = self.cfg.problem.as_ref().ok_or_else(|| CliError::Invalid("missing `problem`".into()))?;
        Ok(p.build()?)
    }

    fn grid(&self, f: &BifunctionHandle) -> GridSpec {
        self.cfg.grid.clone().unwrap_or_else(|| GridSpec::default_for(f.manifold().intrinsic_dim()))
    }

    fn oracle(&self, f: &BifunctionHandle) -> Result<Vec<ManifoldPoint>, CliError> {
        let grid = self.grid(f).build(f.domain())?;
        Ok(brute_force_equilibria(f, &grid, self.cfg.oracle_tol)?)
    }

    fn point(&self, m: &Manifold, coords: &[f64]) -> Result<ManifoldPoint, CliError> {
        Ok(m.point(coords.to_vec())?)
    }

    fn say(&mut self, line: impl Into<String>) {
        self.stdout.push(line.into());
    }

    fn write_file(
        &self,
        name: &str,
        write: impl FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
    ) -> Result<(), CliError> {
        let path = self.out.join(name);
        let wrap = |e| CliError::Write { path: path.clone(), source: e };
        let file = File::create(&path).map_err(wrap)?;
        let mut w = BufWriter::new(file);
        write(&mut w)?;
        w.flush().map_err(wrap)?;
        Ok(())
    }

    fn write_report<T: Serialize>(&self, report: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(report).map_err(|e| CliError::Invalid(e.to_string()))?;
        let path = self.out.join("report.json");
        fs::write(&path, text + "\n").map_err(|e| CliError::Write { path, source: e })
    }
}

/// Runs one command. Returns the outcome and the summary lines printed to
/// standard output.
pub fn run(command: &Command) -> Result<(Outcome, Vec<String>), CliError> {
    let args = command.args();
    let cfg = load_config(&args.config)?;
    if let Some(t) = cfg.task {
        if t != command.task() {
            return Err(CliError::Invalid(format!("config task {t:?} does not match subcommand {:?}", command.task())));
        }
    }
    let seed = args.seed.unwrap_or(cfg.seed);
    let out = args.out.clone().or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out).map_err(|e| CliError::Write { path: out.clone(), source: e })?;
    let base = args.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut ctx = Ctx { cfg, seed, out, base, stdout: Vec::new() };
    let outcome = match command.task() {
        Task::Solve => solve(&mut ctx)?,
        Task::Properties => properties(&mut ctx)?,
        Task::Existence => existence(&mut ctx)?,
        Task::Conditioning => conditioning(&mut ctx)?,
        Task::Trap => trap(&mut ctx)?,
        Task::GeometryTest => geometry_test(&mut ctx)?,
    };
    Ok((outcome, ctx.stdout))
}

#[derive(Serialize)]
struct SolveReport {
    problem: String,
    status: TerminationStatus,
    iterations: usize,
    final_point: Vec<f64>,
    lambda: LambdaSchedule,
    theta_bound: f64,
    oracle_size: usize,
    max_fejer_slack: Option<f64>,
    max_fejer_inner_product: Option<f64>,
    experimental: bool,
}

fn solve(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    let f = ctx.problem()?;
    let x0 = ctx.cfg.x0.clone().ok_or_else(|| CliError::Invalid("missing `x0`".into()))?;
    let x0 = ctx.point(f.manifold(), &x0)?;
    let mut pc = ctx.cfg.proximal.clone().ok_or_else(|| CliError::Invalid("missing `proximal`".into()))?;
    if pc.lambda.is_none() {
        let theta = estimate_theta(&f, ctx.cfg.samples.max(1), ctx.seed)?.theta_estimate.unwrap_or(0.0);
        pc.theta_bound = pc.theta_bound.max(theta);
        pc.lambda = Some(LambdaSchedule::default_for(pc.theta_bound));
    }
    let s = ctx.oracle(&f)?;
    let result = proximal_solve(&f, &x0, &pc, if s.is_empty() { None } else { Some(&s) });
    let trace = match result {
        Ok(t) => t,
        Err(failure) => {
            ctx.write_file("trace.jsonl", |w| Ok(write_jsonl(&failure.partial, w)?))?;
            ctx.write_file("trace.csv", |w| Ok(write_csv(&failure.partial, w)?))?;
            return Err(failure.source.into());
        }
    };
    ctx.write_file("trace.jsonl", |w| Ok(write_jsonl(&trace, w)?))?;
    ctx.write_file("trace.csv", |w| Ok(write_csv(&trace, w)?))?;
    let max_fejer = trace.records.iter().filter_map(|r| r.fejer_slack).reduce(f64::max);
    let max_ip = s.first().and_then(|p| fejer_inner_products(&trace, p).into_iter().reduce(f64::max));
    let last = trace.last_point().expect("solver traces are nonempty");
    let report = SolveReport {
        problem: f.label().to_string(),
        status: trace.status.clone(),
        iterations: trace.len() - 1,
        final_point: last.coords().to_vec(),
        lambda: pc.lambda.clone().expect("set above"),
        theta_bound: pc.theta_bound,
        oracle_size: s.len(),
        max_fejer_slack: max_fejer,
        max_fejer_inner_product: max_ip,
        experimental: trace.experimental,
    };
    ctx.write_report(&report)?;
    ctx.say(format!("problem: {}", report.problem));
    ctx.say(format!("status: {:?}", report.status));
    ctx.say(format!("iterations: {}", report.iterations));
    ctx.say(format!("final point: {:?}", report.final_point));
    if report.experimental {
        ctx.say("note: curved manifold, convergence is experimental");
    }
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct PropertiesReport {
    problem: String,
    reports: Vec<PropertyReport>,
}

fn properties(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    let f = ctx.problem()?;
    let (n, seed) = (ctx.cfg.samples, ctx.seed);
    let reports = vec![
        check_h1(&f, n, seed)?,
        check_monotone(&f, n, seed)?,
        check_pseudomonotone(&f, n, seed)?,
        estimate_theta(&f, n, seed)?,
        check_convexity_in_y(&f, n, seed)?,
    ];
    for r in &reports {
        let extra = r.theta_estimate.map(|t| format!(" theta={t}")).unwrap_or_default();
        ctx.say(format!("{:?}: {:?}{extra}", r.property, r.verdict));
    }
    let failed = reports.iter().any(|r| !r.passed_on_samples());
    ctx.write_report(&PropertiesReport { problem: f.label().to_string(), reports })?;
    Ok(if failed { Outcome::Counterexample } else { Outcome::Ok })
}

#[derive(Serialize)]
struct ExistenceReport {
    problem: String,
    equilibria: Vec<Vec<f64>>,
    assumption_1_segments: Option<PropertyReport>,
    assumption_2: Option<Assumption2Report>,
    coercivity: Option<CoercivityReport>,
}

fn existence(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    let f = ctx.problem()?;
    let grid = ctx.grid(&f).build(f.domain())?;
    let s = brute_force_equilibria(&f, &grid, ctx.cfg.oracle_tol)?;
    let mut report = ExistenceReport {
        problem: f.label().to_string(),
        equilibria: s.iter().map(|p| p.coords().to_vec()).collect(),
        assumption_1_segments: None,
        assumption_2: None,
        coercivity: None,
    };
    ctx.say(format!("equilibria on grid: {}", s.len()));
    let mut failed = s.is_empty();
    if let Some(sec) = ctx.cfg.existence.clone() {
        let m = f.manifold().clone();
        let z0 = ctx.point(&m, &sec.z0)?;
        let omega_k = build_omega_k(f.domain(), &z0, sec.k)?;
        let a1 = check_assumption_1_segments(&f, &omega_k, ctx.cfg.samples, ctx.seed)?;
        ctx.say(format!("assumption 1 (segments): {:?}", a1.verdict));
        failed |= !a1.passed_on_samples();
        report.assumption_1_segments = Some(a1);

        let path = sec.path.iter().map(|c| ctx.point(&m, c)).collect::<Result<Vec<_>, _>>()?;
        let a2 = check_assumption_2(&f, &z0, &path, grid.nodes())?;
        ctx.say(format!(
            "assumption 2: {} x*={:?} k0={:?}",
            if a2.found { "found" } else { "not found" },
            a2.x_star,
            a2.k0
        ));
        failed |= !a2.found;
        report.assumption_2 = Some(a2);

        if let Some(c) = sec.coercivity {
            let b = ConvexSet::from_descriptor(&c.ball)?;
            let y0 = ctx.point(&m, &c.y0)?;
            let cr = check_coercivity(&f, &b, &y0, ctx.cfg.samples, ctx.seed)?;
            ctx.say(format!("coercivity: {}", if cr.passed { "pass" } else { "fail" }));
            failed |= !cr.passed;
            report.coercivity = Some(cr);
        }
    }
    ctx.write_report(&report)?;
    Ok(if failed { Outcome::Counterexample } else { Outcome::Ok })
}

#[derive(Serialize)]
struct ConditioningReport {
    problem: String,
    oracle_size: usize,
    estimate: Option<ConditioningEstimate>,
    not_conditioned_witness: Option<(Vec<f64>, f64)>,
}

fn conditioning(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    let f = ctx.problem()?;
    let s = ctx.oracle(&f)?;
    let mut report = ConditioningReport {
        problem: f.label().to_string(),
        oracle_size: s.len(),
        estimate: None,
        not_conditioned_witness: None,
    };
    let outcome = match estimate_conditioning(&f, &s, ctx.cfg.samples, ctx.seed) {
        Ok(est) => {
            ctx.say(format!("rho: {}", est.rho));
            ctx.say(format!("tau: {}", est.tau));
            report.estimate = Some(est);
            Outcome::Ok
        }
        Err(SolverError::NotConditioned { point, value }) => {
            ctx.say(format!("not conditioned at {point:?}"));
            report.not_conditioned_witness = Some((point, value));
            Outcome::Counterexample
        }
        Err(e) => return Err(e.into()),
    };
    ctx.write_report(&report)?;
    Ok(outcome)
}

fn trap(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    let f = ctx.problem()?;
    let sec = ctx.cfg.trap.clone().ok_or_else(|| CliError::Invalid("missing `trap` section".into()))?;
    let path = if sec.trace.is_absolute() { sec.trace.clone() } else { ctx.base.join(&sec.trace) };
    let file = File::open(&path).map_err(|e| CliError::Read { path: path.clone(), source: e })?;
    let trace = read_jsonl(BufReader::new(file))?;
    if trace.manifold != *f.manifold().descriptor() {
        return Err(CliError::Invalid("trace manifold differs from the problem's".into()));
    }
    let r: TrapReport = certify_variational_trap(&f.negated(), &trace, &sec.lambda, ctx.cfg.samples, ctx.seed)?;
    ctx.say(format!("verdict: {:?}", r.verdict));
    ctx.say(format!("terminal: {:?}", r.terminal_verdict));
    if let Some(i) = r.failing_index {
        ctx.say(format!("first step that is not worthwhile reaches index {i}"));
    }
    let outcome = if r.verdict == TrapVerdict::VariationalTrap { Outcome::Ok } else { Outcome::Counterexample };
    ctx.write_report(&r)?;
    Ok(outcome)
}

fn geometry_test(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    let sec = ctx.cfg.geometry.clone().ok_or_else(|| CliError::Invalid("missing `geometry` section".into()))?;
    let m = Manifold::new(sec.manifold)?;
    let r: SuiteReport = property_suite(&m, ctx.cfg.samples, ctx.seed, sec.radius)?;
    ctx.say(format!("manifold: {}", m.descriptor()));
    ctx.say(format!("max triangle slack: {:e}", r.max_triangle_slack));
    ctx.say(format!("min pair slack: {:e}", r.min_pair_slack));
    ctx.say(format!("max round-trip error: {:e}", r.max_roundtrip_error));
    ctx.say(format!("result: {}", if r.passed { "pass" } else { "fail" }));
    let outcome = if r.passed { Outcome::Ok } else { Outcome::Counterexample };
    ctx.write_report(&r)?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_errors_name_the_field() {
        let text = r#"{"problem": {"name": "example41"}, "samples": "many"}"#;
        match parse_config(text, Path::new("c.json")) {
            Err(CliError::Config { field, message, .. }) => {
                assert_eq!(field, "samples");
                assert!(message.contains("line 1"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let text = "{\n  \"problem\": {\"name\": \"example99\"}\n}";
        assert!(matches!(parse_config(text, Path::new("c.json")), Err(CliError::Config { .. })));
    }

    #[test]
    fn minimal_config_parses() {
        let cfg = parse_config(
            r#"{"task":"solve","problem":{"name":"example41"},"x0":[0.5],
                "proximal":{"lambda":7,"theta_bound":1,"inner":{"kind":"closed_form"}}}"#,
            Path::new("c.json"),
        )
        .unwrap();
        assert_eq!(cfg.task, Some(Task::Solve));
        assert_eq!(cfg.proximal.unwrap().lambda, Some(LambdaSchedule::Constant(7.0)));
    }
}
