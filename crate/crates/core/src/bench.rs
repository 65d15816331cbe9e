//! Multi-start experiments, per-problem metrics, performance profiles and
//! Pareto-point export.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm_sq;
use crate::linesearch::LineSearchParams;
use crate::ordering::OrderingSpec;
use crate::problem::{sample_initial_point, EvalCounters, Problem};
use crate::problems::{get_problem, Variant};
use crate::solver::{
    solve, solve_traced_invariant_check, IterationRecord, Method, RunStatus, SolverConfig,
    Violation,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Solver settings shared by every method of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub ls_params: LineSearchParams,
    pub max_iters: usize,
    pub stop_tol: f64,
    pub qp_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let c = SolverConfig::default();
        SolverSettings {
            ls_params: c.ls_params,
            max_iters: c.max_iters,
            stop_tol: c.stop_tol,
            qp_tol: c.qp_tol,
        }
    }
}

/// Per-method replacements for fields of [`SolverSettings`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SettingsOverride {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ls_params: Option<LineSearchParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qp_tol: Option<f64>,
}

/// What to keep of each run's trace.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceMode {
    /// Discard traces after summarizing them.
    #[default]
    Drop,
    /// Recheck every iteration from scratch, keep only the violations.
    Verify,
    /// Keep full traces.
    Keep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub problems: Vec<String>,
    pub methods: Vec<Method>,
    pub starts_per_problem: usize,
    pub base_seed: u64,
    /// Worker threads; 0 picks the number of cores.
    pub workers: usize,
    pub solver: SolverSettings,
    /// Keyed by method name.
    pub overrides: BTreeMap<String, SettingsOverride>,
    pub trace: TraceMode,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            problems: Vec::new(),
            methods: Method::ALL.to_vec(),
            starts_per_problem: 100,
            base_seed: 0,
            workers: 0,
            solver: SolverSettings::default(),
            overrides: BTreeMap::new(),
            trace: TraceMode::Drop,
        }
    }
}

impl ExperimentSpec {
    pub fn new(
        problems: &[&str],
        methods: &[Method],
        starts_per_problem: usize,
        base_seed: u64,
    ) -> Self {
        ExperimentSpec {
            problems: problems.iter().map(|s| s.to_string()).collect(),
            methods: methods.to_vec(),
            starts_per_problem,
            base_seed,
            ..Default::default()
        }
    }

    pub fn config_for(&self, method: Method) -> Result<SolverConfig> {
        let mut s = self.solver;
        for (key, o) in &self.overrides {
            if key.parse::<Method>()? != method {
                continue;
            }
            s.ls_params = o.ls_params.unwrap_or(s.ls_params);
            s.max_iters = o.max_iters.unwrap_or(s.max_iters);
            s.stop_tol = o.stop_tol.unwrap_or(s.stop_tol);
            s.qp_tol = o.qp_tol.unwrap_or(s.qp_tol);
        }
        let cfg = SolverConfig {
            method,
            ls_params: s.ls_params,
            max_iters: s.max_iters,
            stop_tol: s.stop_tol,
            qp_tol: s.qp_tol,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn seed_for(&self, start: usize) -> u64 {
        self.base_seed.wrapping_add(start as u64)
    }

    pub fn validate(&self) -> Result<Vec<Problem>> {
        if self.problems.is_empty() {
            return Err(Error::InvalidInput("experiment has no problems".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidInput("experiment has no methods".into()));
        }
        if self.starts_per_problem == 0 {
            return Err(Error::InvalidInput(
                "starts_per_problem must be at least 1".into(),
            ));
        }
        for m in &self.methods {
            self.config_for(*m)?;
        }
        self.problems
            .iter()
            .map(|p| get_problem(p, Variant::default()))
            .collect()
    }
}

/// Summary of one (problem, method, start) run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub problem: String,
    pub method: Method,
    pub start: usize,
    pub seed: u64,
    pub x0: Vec<f64>,
    pub phi0: Vec<f64>,
    pub status: RunStatus,
    pub iterations: usize,
    pub counters: EvalCounters,
    pub final_point: Vec<f64>,
    pub final_objectives: Vec<f64>,
    pub final_theta: f64,
    pub wall_time: f64,
    pub message: Option<String>,
    /// Largest `|λ(x, ϑ(x)) + ‖ϑ(x)‖²|` over the trace.
    pub max_kkt_defect: f64,
    /// Same defect divided by `max(1, ‖ϑ(x)‖²)`.
    pub max_kkt_defect_scaled: f64,
    /// Largest `λ(x^k, d^k) - λ(x^k, ϑ(x^k))` as computed during the run.
    pub max_descent_excess: f64,
    /// Same excess divided by `max(1, |λ(x^k, ϑ(x^k))|)`.
    pub max_descent_excess_scaled: f64,
    /// Filled in [`TraceMode::Verify`].
    pub violations: Vec<Violation>,
    /// Filled in [`TraceMode::Keep`].
    pub trace: Option<Vec<IterationRecord>>,
}

impl RunRecord {
    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }
}

fn trace_stats(trace: &[IterationRecord]) -> (f64, f64, f64, f64) {
    let mut kkt = 0.0f64;
    let mut kkt_scaled = 0.0f64;
    let mut descent = f64::NEG_INFINITY;
    let mut descent_scaled = f64::NEG_INFINITY;
    for r in trace {
        let s = norm_sq(&r.steepest);
        let defect = (r.lambda_steepest + s).abs();
        kkt = kkt.max(defect);
        kkt_scaled = kkt_scaled.max(defect / s.max(1.0));
        if let Some(ld) = r.lambda_dir {
            descent = descent.max(ld - r.lambda_steepest);
            descent_scaled =
                descent_scaled.max((ld - r.lambda_steepest) / r.lambda_steepest.abs().max(1.0));
        }
    }
    (kkt, kkt_scaled, descent, descent_scaled)
}

/// Runs every (problem, start, method) triple. All methods see the same `x0`
/// for a given (problem, start). Results come back in problem, start,
/// method order regardless of scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<RunRecord>> {
    let problems = spec.validate()?;
    let configs: Vec<SolverConfig> = spec
        .methods
        .iter()
        .map(|m| spec.config_for(*m))
        .collect::<Result<_>>()?;
    let mut tasks = Vec::new();
    for (pi, p) in problems.iter().enumerate() {
        for start in 0..spec.starts_per_problem {
            let seed = spec.seed_for(start);
            let x0 = sample_initial_point(p, seed);
            for ci in 0..configs.len() {
                tasks.push((pi, start, seed, x0.clone(), ci));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("worker pool: {e}")))?;
    let records = pool.install(|| {
        tasks
            .into_par_iter()
            .map(|(pi, start, seed, x0, ci)| {
                run_one(
                    &problems[pi],
                    &spec.problems[pi],
                    start,
                    seed,
                    x0,
                    &configs[ci],
                    spec.trace,
                )
            })
            .collect()
    });
    Ok(records)
}

fn run_one(
    problem: &Problem,
    name: &str,
    start: usize,
    seed: u64,
    x0: Vec<f64>,
    config: &SolverConfig,
    mode: TraceMode,
) -> RunRecord {
    let ordering = OrderingSpec::canonical(problem.m());
    let phi0 = problem.objectives(&x0);
    let base = RunRecord {
        problem: name.to_string(),
        method: config.method,
        start,
        seed,
        x0,
        phi0,
        status: RunStatus::LinesearchFailure,
        iterations: 0,
        counters: EvalCounters::default(),
        final_point: Vec::new(),
        final_objectives: Vec::new(),
        final_theta: f64::NAN,
        wall_time: 0.0,
        message: None,
        max_kkt_defect: 0.0,
        max_kkt_defect_scaled: 0.0,
        max_descent_excess: f64::NEG_INFINITY,
        max_descent_excess_scaled: f64::NEG_INFINITY,
        violations: Vec::new(),
        trace: None,
    };
    let run = match solve(problem, &base.x0, config, &ordering) {
        Ok(r) => r,
        Err(e) => {
            return RunRecord {
                message: Some(e.to_string()),
                ..base
            }
        }
    };
    let (kkt, kkt_scaled, descent, descent_scaled) = trace_stats(&run.trace);
    let violations = if mode == TraceMode::Verify {
        solve_traced_invariant_check(&run, problem, &ordering)
    } else {
        Vec::new()
    };
    RunRecord {
        status: run.status,
        iterations: run.iterations(),
        counters: run.counters,
        final_point: run.final_point.clone(),
        final_objectives: run.final_objectives.clone(),
        final_theta: run.final_theta,
        wall_time: run.wall_time,
        message: run.message.clone(),
        max_kkt_defect: kkt,
        max_kkt_defect_scaled: kkt_scaled,
        max_descent_excess: descent,
        max_descent_excess_scaled: descent_scaled,
        violations,
        trace: (mode == TraceMode::Keep).then_some(run.trace),
        ..base
    }
}

/// Median with the two middle values averaged for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[h]
    } else {
        0.5 * (v[h - 1] + v[h])
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub problem: String,
    pub method: Method,
    pub runs: usize,
    pub successes: usize,
    pub iteration_caps: usize,
    pub linesearch_failures: usize,
    pub subproblem_failures: usize,
    pub success_rate_percent: f64,
    pub median_iterations: Option<f64>,
    pub median_obj_evals: Option<f64>,
    pub median_jac_evals: Option<f64>,
    pub median_wall_time: Option<f64>,
}

/// Groups runs by (problem, method) in first-seen order. Medians are over
/// converged runs only.
pub fn aggregate_metrics(results: &[RunRecord]) -> Vec<MetricsRow> {
    let mut rows: Vec<MetricsRow> = Vec::new();
    for (problem, method, group) in grouped(results) {
        let ok: Vec<&RunRecord> = group.iter().copied().filter(|r| r.converged()).collect();
        let count = |s: RunStatus| group.iter().filter(|r| r.status == s).count();
        let med =
            |f: &dyn Fn(&RunRecord) -> f64| median(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
        rows.push(MetricsRow {
            problem,
            method,
            runs: group.len(),
            successes: ok.len(),
            iteration_caps: count(RunStatus::IterationCap),
            linesearch_failures: count(RunStatus::LinesearchFailure),
            subproblem_failures: count(RunStatus::SubproblemFailure),
            success_rate_percent: 100.0 * ok.len() as f64 / group.len() as f64,
            median_iterations: med(&|r| r.iterations as f64),
            median_obj_evals: med(&|r| r.counters.n_obj_evals as f64),
            median_jac_evals: med(&|r| r.counters.n_jac_evals as f64),
            median_wall_time: med(&|r| r.wall_time),
        });
    }
    rows
}

fn grouped(results: &[RunRecord]) -> Vec<(String, Method, Vec<&RunRecord>)> {
    let mut order: Vec<(String, Method)> = Vec::new();
    let mut map: BTreeMap<(String, Method), Vec<&RunRecord>> = BTreeMap::new();
    for r in results {
        let key = (r.problem.clone(), r.method);
        map.entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r);
    }
    order
        .into_iter()
        .map(|k| {
            let g = map.remove(&k).unwrap_or_default();
            (k.0, k.1, g)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Measure {
    WallTime,
    Iterations,
    JacEvals,
    ObjEvals,
}

impl Measure {
    pub const ALL: [Measure; 4] = [
        Measure::WallTime,
        Measure::Iterations,
        Measure::JacEvals,
        Measure::ObjEvals,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Measure::WallTime => "wall_time",
            Measure::Iterations => "iterations",
            Measure::JacEvals => "jac_evals",
            Measure::ObjEvals => "obj_evals",
        }
    }

    /// Wall-clock measurements differ between machines and runs.
    pub fn platform_dependent(&self) -> bool {
        matches!(self, Measure::WallTime)
    }

    fn of(&self, r: &RunRecord) -> f64 {
        match self {
            Measure::WallTime => r.wall_time,
            Measure::Iterations => r.iterations as f64,
            Measure::JacEvals => r.counters.n_jac_evals as f64,
            Measure::ObjEvals => r.counters.n_obj_evals as f64,
        }
    }

    // Keeps ratios finite when the best method needs no work at all.
    fn floor(&self) -> f64 {
        match self {
            Measure::WallTime => 1e-9,
            _ => 1.0,
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown measure `{s}`")))
    }
}

/// Step function `ρ_s(ω)`; `breakpoints` holds each distinct finite ratio
/// and the fraction of problems solved within it.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub method: Method,
    pub measure: Measure,
    pub problems: usize,
    pub breakpoints: Vec<(f64, f64)>,
}

impl ProfileCurve {
    pub fn value_at(&self, omega: f64) -> f64 {
        self.breakpoints
            .iter()
            .take_while(|(w, _)| *w <= omega)
            .last()
            .map_or(0.0, |(_, r)| *r)
    }
}

/// Dolan-Moré profiles. The cost of a method on a problem is the median of
/// `measure` over its converged starts; a method without any converged start
/// gets ratio `+∞` on that problem.
pub fn performance_profile(results: &[RunRecord], measure: Measure) -> Vec<ProfileCurve> {
    let mut problems: Vec<String> = Vec::new();
    let mut methods: BTreeSet<Method> = BTreeSet::new();
    let mut cost: BTreeMap<(String, Method), f64> = BTreeMap::new();
    for (problem, method, group) in grouped(results) {
        if !problems.contains(&problem) {
            problems.push(problem.clone());
        }
        methods.insert(method);
        let ok: Vec<f64> = group
            .iter()
            .filter(|r| r.converged())
            .map(|r| measure.of(r))
            .collect();
        if let Some(t) = median(&ok) {
            cost.insert((problem, method), t.max(measure.floor()));
        }
    }
    let mut ratios: BTreeMap<Method, Vec<f64>> = methods.iter().map(|m| (*m, Vec::new())).collect();
    for p in &problems {
        let best = methods
            .iter()
            .filter_map(|m| cost.get(&(p.clone(), *m)))
            .copied()
            .fold(f64::INFINITY, f64::min);
        for m in &methods {
            let r = cost
                .get(&(p.clone(), *m))
                .map_or(f64::INFINITY, |t| t / best);
            ratios.get_mut(m).unwrap().push(r);
        }
    }
    let np = problems.len();
    ratios
        .into_iter()
        .map(|(method, mut r)| {
            r.retain(|v| v.is_finite());
            r.sort_by(f64::total_cmp);
            let mut breakpoints: Vec<(f64, f64)> = Vec::new();
            for (i, w) in r.iter().enumerate() {
                let frac = (i + 1) as f64 / np as f64;
                match breakpoints.last_mut() {
                    Some(last) if last.0 == *w => last.1 = frac,
                    _ => breakpoints.push((*w, frac)),
                }
            }
            ProfileCurve {
                method,
                measure,
                problems: np,
                breakpoints,
            }
        })
        .collect()
}

/// One row of a Pareto-point table.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoRow {
    pub method: Method,
    pub start: usize,
    pub status: RunStatus,
    pub x0: Vec<f64>,
    pub final_point: Vec<f64>,
    pub phi0: Vec<f64>,
    pub phi_final: Vec<f64>,
}

/// Rows for every run of `problem`, in result order.
pub fn export_pareto_points(results: &[RunRecord], problem: &str) -> Vec<ParetoRow> {
    results
        .iter()
        .filter(|r| r.problem == problem)
        .map(|r| ParetoRow {
            method: r.method,
            start: r.start,
            status: r.status,
            x0: r.x0.clone(),
            final_point: r.final_point.clone(),
            phi0: r.phi0.clone(),
            phi_final: r.final_objectives.clone(),
        })
        .collect()
}

/// Fraction of `points` that no other point beats by more than `tol` in
/// every component.
pub fn nondominated_fraction(points: &[Vec<f64>], tol: f64) -> f64 {
    if points.is_empty() {
        return 1.0;
    }
    let kept = points
        .iter()
        .enumerate()
        .filter(|(i, p)| {
            !points
                .iter()
                .enumerate()
                .any(|(j, q)| j != *i && q.iter().zip(p.iter()).all(|(a, b)| *a < *b - tol))
        })
        .count();
    kept as f64 / points.len() as f64
}

// ---------------------------------------------------------------------------
// Files

/// `# key=value` lines opening every output table.
pub fn manifest_header(spec: &ExperimentSpec, extra: &[(&str, String)]) -> Vec<String> {
    let mut h = vec![
        format!("# ttprp {VERSION}"),
        format!("# base_seed={}", spec.base_seed),
        format!("# starts_per_problem={}", spec.starts_per_problem),
        format!("# stop_tol={:e}", spec.solver.stop_tol),
        format!("# qp_tol={:e}", spec.solver.qp_tol),
        format!("# max_iters={}", spec.solver.max_iters),
        format!(
            "# rho={:e} sigma={:e} mu={:e}",
            spec.solver.ls_params.rho, spec.solver.ls_params.sigma, spec.solver.ls_params.mu
        ),
    ];
    h.extend(extra.iter().map(|(k, v)| format!("# {k}={v}")));
    h
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "NA".to_string()
    } else {
        v.to_string()
    }
}

fn table_writer(path: &Path, header: &[String]) -> Result<csv::Writer<BufWriter<File>>> {
    let mut f = BufWriter::new(File::create(path)?);
    for line in header {
        writeln!(f, "{line}")?;
    }
    Ok(csv::Writer::from_writer(f))
}

pub fn write_metrics(path: &Path, header: &[String], rows: &[MetricsRow]) -> Result<()> {
    let mut w = table_writer(path, header)?;
    w.write_record([
        "problem",
        "method",
        "runs",
        "successes",
        "success_rate_percent",
        "median_iterations",
        "median_obj_evals",
        "median_jac_evals",
        "iteration_caps",
        "linesearch_failures",
        "subproblem_failures",
    ])?;
    for r in rows {
        w.write_record([
            r.problem.clone(),
            r.method.to_string(),
            r.runs.to_string(),
            r.successes.to_string(),
            r.success_rate_percent.to_string(),
            fmt_opt(r.median_iterations),
            fmt_opt(r.median_obj_evals),
            fmt_opt(r.median_jac_evals),
            r.iteration_caps.to_string(),
            r.linesearch_failures.to_string(),
            r.subproblem_failures.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics_wall_time(path: &Path, header: &[String], rows: &[MetricsRow]) -> Result<()> {
    let mut w = table_writer(path, header)?;
    w.write_record(["problem", "method", "median_wall_time"])?;
    for r in rows {
        w.write_record([
            r.problem.clone(),
            r.method.to_string(),
            fmt_opt(r.median_wall_time),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_profiles(path: &Path, header: &[String], curves: &[ProfileCurve]) -> Result<()> {
    let mut w = table_writer(path, header)?;
    w.write_record(["measure", "method", "omega", "rho"])?;
    for c in curves {
        for (omega, rho) in &c.breakpoints {
            w.write_record([
                c.measure.to_string(),
                c.method.to_string(),
                omega.to_string(),
                rho.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

const RESULT_COLUMNS: [&str; 11] = [
    "problem",
    "method",
    "start",
    "seed",
    "status",
    "iterations",
    "n_obj_evals",
    "n_jac_evals",
    "n_subproblem_solves",
    "final_theta",
    "final_objectives",
];

/// One row per run; objective vectors are `;`-separated. Wall time goes to
/// a separate file so this table is reproducible byte for byte.
pub fn write_results(path: &Path, header: &[String], results: &[RunRecord]) -> Result<()> {
    let mut w = table_writer(path, header)?;
    w.write_record(RESULT_COLUMNS)?;
    for r in results {
        w.write_record([
            r.problem.clone(),
            r.method.to_string(),
            r.start.to_string(),
            r.seed.to_string(),
            r.status.to_string(),
            r.iterations.to_string(),
            r.counters.n_obj_evals.to_string(),
            r.counters.n_jac_evals.to_string(),
            r.counters.n_subproblem_solves.to_string(),
            fmt_num(r.final_theta),
            join(&r.final_objectives),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_wall_times(path: &Path, header: &[String], results: &[RunRecord]) -> Result<()> {
    let mut w = table_writer(path, header)?;
    w.write_record(["problem", "method", "start", "wall_time"])?;
    for r in results {
        w.write_record([
            r.problem.clone(),
            r.method.to_string(),
            r.start.to_string(),
            r.wall_time.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn split(s: &str) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| Error::InvalidInput(format!("bad number `{t}`: {e}")))
        })
        .collect()
}

/// Reads a table written by [`write_results`], merging wall times from
/// `wall_times` when given. Points and traces are not stored there and
/// come back empty.
pub fn read_results(path: &Path, wall_times: Option<&Path>) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let bad = |what: &str| Error::InvalidInput(format!("{}: bad {what}", path.display()));
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        if row.len() != RESULT_COLUMNS.len() {
            return Err(bad("row width"));
        }
        let num = |i: usize| row[i].parse::<u64>().map_err(|_| bad(RESULT_COLUMNS[i]));
        let final_theta = if &row[9] == "NA" {
            f64::NAN
        } else {
            row[9].parse().map_err(|_| bad("final_theta"))?
        };
        out.push(RunRecord {
            problem: row[0].to_string(),
            method: row[1].parse()?,
            start: num(2)? as usize,
            seed: num(3)?,
            x0: Vec::new(),
            phi0: Vec::new(),
            status: row[4].parse()?,
            iterations: num(5)? as usize,
            counters: EvalCounters {
                n_obj_evals: num(6)?,
                n_jac_evals: num(7)?,
                n_subproblem_solves: num(8)?,
            },
            final_point: Vec::new(),
            final_objectives: split(&row[10])?,
            final_theta,
            wall_time: f64::NAN,
            message: None,
            max_kkt_defect: f64::NAN,
            max_kkt_defect_scaled: f64::NAN,
            max_descent_excess: f64::NAN,
            max_descent_excess_scaled: f64::NAN,
            violations: Vec::new(),
            trace: None,
        });
    }
    if let Some(wp) = wall_times {
        let mut times: BTreeMap<(String, String, usize), f64> = BTreeMap::new();
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(wp)?;
        for row in rdr.records() {
            let row = row?;
            let start = row[2].parse::<usize>().map_err(|_| bad("start"))?;
            let t = row[3].parse::<f64>().map_err(|_| bad("wall_time"))?;
            times.insert((row[0].to_string(), row[1].to_string(), start), t);
        }
        for r in &mut out {
            if let Some(t) = times.get(&(r.problem.clone(), r.method.to_string(), r.start)) {
                r.wall_time = *t;
            }
        }
    }
    Ok(out)
}

pub fn write_pareto(path: &Path, header: &[String], rows: &[ParetoRow]) -> Result<()> {
    let mut w = table_writer(path, header)?;
    let (n, m) = rows.first().map_or((0, 0), |r| (r.x0.len(), r.phi0.len()));
    let mut cols: Vec<String> = vec!["method".into(), "start".into(), "status".into()];
    cols.extend((1..=n).map(|i| format!("x0_{i}")));
    cols.extend((1..=n).map(|i| format!("x_{i}")));
    cols.extend((1..=m).map(|i| format!("phi0_{i}")));
    cols.extend((1..=m).map(|i| format!("phi_{i}")));
    w.write_record(&cols)?;
    for r in rows {
        let mut rec = vec![
            r.method.to_string(),
            r.start.to_string(),
            r.status.to_string(),
        ];
        for v in
            r.x0.iter()
                .chain(&r.final_point)
                .chain(&r.phi0)
                .chain(&r.phi_final)
        {
            rec.push(fmt_num(*v));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per iterate. Move columns are `NA` on the final record.
pub fn write_trace(path: &Path, header: &[String], trace: &[IterationRecord]) -> Result<()> {
    let mut w = table_writer(path, header)?;
    let (n, m) = trace
        .first()
        .map_or((0, 0), |r| (r.x.len(), r.objectives.len()));
    let mut cols: Vec<String> = vec!["k".into()];
    cols.extend((1..=n).map(|i| format!("x_{i}")));
    cols.extend((1..=m).map(|i| format!("phi_{i}")));
    cols.extend(
        [
            "theta",
            "lambda_steepest",
            "kkt_residual",
            "beta",
            "lambda_dir",
            "step",
            "ls_trials",
            "n_obj_evals",
            "n_jac_evals",
            "n_subproblem_solves",
        ]
        .map(String::from),
    );
    w.write_record(&cols)?;
    for r in trace {
        let mut rec = vec![r.k.to_string()];
        rec.extend(r.x.iter().chain(&r.objectives).map(|v| fmt_num(*v)));
        rec.push(fmt_num(r.theta));
        rec.push(fmt_num(r.lambda_steepest));
        rec.push(fmt_num(r.kkt_residual));
        rec.push(fmt_num(r.beta));
        rec.push(fmt_opt(r.lambda_dir));
        rec.push(fmt_opt(r.step));
        rec.push(r.ls_trials.to_string());
        rec.push(r.counters.n_obj_evals.to_string());
        rec.push(r.counters.n_jac_evals.to_string());
        rec.push(r.counters.n_subproblem_solves.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    version: &'a str,
    files: Vec<String>,
    platform_dependent_files: Vec<String>,
    spec: &'a ExperimentSpec,
}

/// Everything [`write_report`] produced.
#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub manifest: PathBuf,
    pub results: PathBuf,
    pub metrics: PathBuf,
    pub profiles: PathBuf,
    pub wall_times: PathBuf,
    pub metrics_wall_time: PathBuf,
    pub profiles_wall_time: PathBuf,
}

/// Writes results, metrics and profile tables plus a TOML run manifest into
/// `dir`. Files whose names end in `_wall_time.csv` or `wall_times.csv` carry
/// timings and differ between executions; all others are reproducible.
pub fn write_report(
    dir: &Path,
    spec: &ExperimentSpec,
    results: &[RunRecord],
) -> Result<ReportFiles> {
    std::fs::create_dir_all(dir)?;
    let files = ReportFiles {
        manifest: dir.join("manifest.toml"),
        results: dir.join("results.csv"),
        metrics: dir.join("metrics.csv"),
        profiles: dir.join("profiles.csv"),
        wall_times: dir.join("wall_times.csv"),
        metrics_wall_time: dir.join("metrics_wall_time.csv"),
        profiles_wall_time: dir.join("profiles_wall_time.csv"),
    };
    let header = manifest_header(spec, &[]);
    let timing_header = manifest_header(spec, &[("platform_dependent", "true".into())]);
    let rows = aggregate_metrics(results);
    write_results(&files.results, &header, results)?;
    write_wall_times(&files.wall_times, &timing_header, results)?;
    write_metrics(&files.metrics, &header, &rows)?;
    write_metrics_wall_time(&files.metrics_wall_time, &timing_header, &rows)?;
    let curves: Vec<ProfileCurve> = [Measure::Iterations, Measure::JacEvals, Measure::ObjEvals]
        .into_iter()
        .flat_map(|m| performance_profile(results, m))
        .collect();
    write_profiles(&files.profiles, &header, &curves)?;
    write_profiles(
        &files.profiles_wall_time,
        &timing_header,
        &performance_profile(results, Measure::WallTime),
    )?;
    let name = |p: &PathBuf| p.file_name().unwrap().to_string_lossy().into_owned();
    let manifest = RunManifest {
        version: VERSION,
        files: vec![
            name(&files.results),
            name(&files.metrics),
            name(&files.profiles),
        ],
        platform_dependent_files: vec![
            name(&files.wall_times),
            name(&files.metrics_wall_time),
            name(&files.profiles_wall_time),
        ],
        spec,
    };
    std::fs::write(&files.manifest, toml::to_string(&manifest)?)?;
    Ok(files)
}
