//! `ttprp`: list problems, solve single instances, run benchmarks, build
//! performance profiles, export Pareto points and run the self-test battery.
//!
//! Standard output is TOML unless `--pretty` is given. Exit codes: 0 on
//! success, 1 when a run does not converge or a check fails, 2 on usage
//! errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ttprp::bench::{
    aggregate_metrics, export_pareto_points, manifest_header, nondominated_fraction,
    performance_profile, read_results, run_experiment, write_pareto, write_profiles, write_report,
    write_trace, ExperimentSpec, Measure, MetricsRow, RunRecord, VERSION,
};
use ttprp::checks::{run_checks, Fault};
use ttprp::problems::{registry_names, ProblemInfo, MIN_ROSTER};
use ttprp::{
    get_problem, sample_initial_point, solve, Error, Method, OrderingSpec, RunStatus, Variant,
};

#[derive(Parser, Debug)]
#[command(
    name = "ttprp",
    version,
    about = "Three-term PRP conjugate gradient methods for vector optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Base seed; start `i` uses `seed + i`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(
        long,
        global = true,
        env = "TTPRP_OUT_DIR",
        default_value = "ttprp-out"
    )]
    out_dir: PathBuf,
    /// Worker threads for experiments (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Stopping tolerance on |Θ|.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Iteration cap per run
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// Comma-separated subset of TT-PRP, TT-PRP1, PRP+, SD.
    #[arg(long, global = true, value_delimiter = ',')]
    method: Vec<String>,
    /// Comma-separated registry names.
    #[arg(long, global = true, value_delimiter = ',')]
    problem: Vec<String>,
    /// Random starts per problem.
    #[arg(long, global = true)]
    starts: Option<usize>,
    /// TOML experiment description; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Human-readable output.
    #[arg(long, global = true)]
    pretty: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the problem registry.
    List,
    /// Solve one problem from one starting point and write its trace.
    Solve {
        /// Problem name (alternative to --problem).
        name: Option<String>,
        /// Explicit starting point, comma-separated; overrides the seed.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
    },
    /// Run a multi-start experiment and write results, metrics and profiles.
    Bench,
    /// Performance profiles, from a previous `bench` directory or a fresh run.
    Profile {
        /// Directory holding `results.csv` (and optionally `wall_times.csv`).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Comma-separated subset of wall_time, iterations, jac_evals, obj_evals.
        #[arg(long, value_delimiter = ',')]
        measure: Vec<String>,
    },
    /// Export start and final points of every run for frontier plots.
    Pareto,
    /// Run the fast self-test battery.
    Check {
        /// Only checks whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Csv(_) | Error::Manifest(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::List => cmd_list(&cli.common),
        Command::Solve { name, x0 } => cmd_solve(&cli.common, name.as_deref(), x0.as_deref()),
        Command::Bench => cmd_bench(&cli.common),
        Command::Profile { input, measure } => cmd_profile(&cli.common, input.as_deref(), measure),
        Command::Pareto => cmd_pareto(&cli.common),
        Command::Check {
            filter,
            inject_fault,
        } => cmd_check(&cli.common, filter.as_deref(), inject_fault.as_deref()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn emit<T: Serialize>(value: &T) -> Result<(), Failure> {
    let text = toml::to_string(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    print!("{text}");
    Ok(())
}

fn parse_methods(names: &[String]) -> Result<Vec<Method>, Failure> {
    names
        .iter()
        .map(|s| s.parse::<Method>().map_err(Failure::from))
        .collect()
}

/// Config file first, then flags.
fn build_spec(
    c: &Common,
    default_problems: &[&str],
    default_methods: &[Method],
) -> Result<ExperimentSpec, Failure> {
    let mut spec = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            toml::from_str::<ExperimentSpec>(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => ExperimentSpec {
            problems: default_problems.iter().map(|s| s.to_string()).collect(),
            methods: default_methods.to_vec(),
            ..Default::default()
        },
    };
    if spec.problems.is_empty() {
        spec.problems = default_problems.iter().map(|s| s.to_string()).collect();
    }
    if !c.problem.is_empty() {
        spec.problems = c.problem.clone();
    }
    if !c.method.is_empty() {
        spec.methods = parse_methods(&c.method)?;
    }
    if let Some(s) = c.seed {
        spec.base_seed = s;
    }
    if let Some(w) = c.workers {
        spec.workers = w;
    }
    if let Some(t) = c.tol {
        spec.solver.stop_tol = t;
    }
    if let Some(k) = c.max_iters {
        spec.solver.max_iters = k;
    }
    if let Some(s) = c.starts {
        spec.starts_per_problem = s;
    }
    spec.validate()?;
    Ok(spec)
}

fn create_out_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn cmd_list(c: &Common) -> Outcome {
    let infos: Vec<ProblemInfo> = registry_names()
        .iter()
        .map(|n| get_problem(n, Variant::default()).map(|p| ProblemInfo::of(&p)))
        .collect::<Result<_, _>>()?;
    if c.pretty {
        println!("{:<10} {:>5} {:>4}  {:<7} box", "name", "n", "m", "convex");
        for p in &infos {
            let bounds = if p.bounds.len() == 1 {
                format!("[{}, {}]^n", p.bounds[0][0], p.bounds[0][1])
            } else {
                p.bounds
                    .iter()
                    .map(|b| format!("[{}, {}]", b[0], b[1]))
                    .collect::<Vec<_>>()
                    .join(" x ")
            };
            println!(
                "{:<10} {:>5} {:>4}  {:<7} {bounds}",
                p.name, p.n, p.m, p.convex
            );
        }
    } else {
        #[derive(Serialize)]
        struct Listing {
            version: &'static str,
            problem: Vec<ProblemInfo>,
        }
        emit(&Listing {
            version: VERSION,
            problem: infos,
        })?;
    }
    Ok(true)
}

#[derive(Serialize)]
struct SolveSummary {
    problem: String,
    method: String,
    seed: Option<u64>,
    status: String,
    iterations: usize,
    n_obj_evals: u64,
    n_jac_evals: u64,
    n_subproblem_solves: u64,
    final_theta: f64,
    wall_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
    trace_file: String,
    x0: Vec<f64>,
    final_point: Vec<f64>,
    final_objectives: Vec<f64>,
}

fn cmd_solve(c: &Common, name: Option<&str>, x0: Option<&[f64]>) -> Outcome {
    let problem_name = match (name, c.problem.as_slice()) {
        (Some(n), []) => n.to_string(),
        (None, [n]) => n.clone(),
        (Some(_), [_, ..]) => {
            return Err(Failure::Usage(
                "give the problem either positionally or via --problem".into(),
            ))
        }
        _ => return Err(Failure::Usage("solve needs exactly one problem".into())),
    };
    let method = match parse_methods(&c.method)?.as_slice() {
        [] => Method::TtPrp,
        [m] => *m,
        _ => return Err(Failure::Usage("solve takes a single --method".into())),
    };
    let problem = get_problem(&problem_name, Variant::default())?;
    let common = Common {
        problem: vec![problem_name.clone()],
        method: vec![method.to_string()],
        config: c.config.clone(),
        out_dir: c.out_dir.clone(),
        ..*c
    };
    let spec = build_spec(&common, &[], &[method])?;
    let config = spec.config_for(method)?;
    let (x0, seed) = match x0 {
        Some(x) => (x.to_vec(), None),
        None => (
            sample_initial_point(&problem, spec.base_seed),
            Some(spec.base_seed),
        ),
    };
    if x0.len() != problem.n() {
        return Err(Failure::Usage(format!(
            "--x0 has {} entries but {} has n = {}",
            x0.len(),
            problem.name(),
            problem.n()
        )));
    }
    let ordering = OrderingSpec::canonical(problem.m());
    let run = match solve(&problem, &x0, &config, &ordering) {
        Ok(r) => r,
        Err(e @ (Error::InvalidInput(_) | Error::DimensionMismatch(_))) => {
            return Err(Failure::Usage(e.to_string()))
        }
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(false);
        }
    };

    create_out_dir(&c.out_dir)?;
    let tag = seed.map_or_else(|| "x0".to_string(), |s| format!("seed{s}"));
    let file_method = method.as_str().replace('+', "plus");
    let trace_path = c.out_dir.join(format!(
        "trace_{}_{}_{tag}.csv",
        problem.name(),
        file_method
    ));
    let mut extra = vec![
        ("problem", problem.name().to_string()),
        ("method", method.to_string()),
        ("status", run.status.to_string()),
    ];
    if let Some(s) = seed {
        extra.push(("seed", s.to_string()));
    }
    write_trace(&trace_path, &manifest_header(&spec, &extra), &run.trace)?;

    let summary = SolveSummary {
        problem: problem.name().to_string(),
        method: method.to_string(),
        seed,
        status: run.status.to_string(),
        iterations: run.iterations(),
        n_obj_evals: run.counters.n_obj_evals,
        n_jac_evals: run.counters.n_jac_evals,
        n_subproblem_solves: run.counters.n_subproblem_solves,
        final_theta: run.final_theta,
        wall_time: run.wall_time,
        message: run.message.clone(),
        trace_file: trace_path.display().to_string(),
        x0,
        final_point: run.final_point.clone(),
        final_objectives: run.final_objectives.clone(),
    };
    if c.pretty {
        println!(
            "{} with {}: {}",
            summary.problem, summary.method, summary.status
        );
        println!("  iterations  {}", summary.iterations);
        println!(
            "  evaluations {} objective, {} Jacobian",
            summary.n_obj_evals, summary.n_jac_evals
        );
        println!("  final Θ     {:e}", summary.final_theta);
        println!("  Φ(final)    {:?}", summary.final_objectives);
        if let Some(m) = &summary.message {
            println!("  note        {m}");
        }
        println!("  trace       {}", summary.trace_file);
    } else {
        emit(&summary)?;
    }
    Ok(run.status == RunStatus::Converged)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x}"))
}

fn print_metrics(rows: &[MetricsRow]) {
    println!(
        "{:<10} {:<8} {:>7} {:>8} {:>8} {:>8}",
        "problem", "method", "%", "mit", "mf", "mg"
    );
    for r in rows {
        println!(
            "{:<10} {:<8} {:>7.1} {:>8} {:>8} {:>8}",
            r.problem,
            r.method.as_str(),
            r.success_rate_percent,
            fmt_opt(r.median_iterations),
            fmt_opt(r.median_obj_evals),
            fmt_opt(r.median_jac_evals)
        );
    }
}

#[derive(Serialize)]
struct MetricsEntry {
    problem: String,
    method: String,
    runs: usize,
    successes: usize,
    success_rate_percent: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    median_iterations: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    median_obj_evals: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    median_jac_evals: Option<f64>,
}

impl From<&MetricsRow> for MetricsEntry {
    fn from(r: &MetricsRow) -> Self {
        MetricsEntry {
            problem: r.problem.clone(),
            method: r.method.to_string(),
            runs: r.runs,
            successes: r.successes,
            success_rate_percent: r.success_rate_percent,
            median_iterations: r.median_iterations,
            median_obj_evals: r.median_obj_evals,
            median_jac_evals: r.median_jac_evals,
        }
    }
}

fn cmd_bench(c: &Common) -> Outcome {
    let spec = build_spec(c, &MIN_ROSTER, &Method::ALL)?;
    let results = run_experiment(&spec)?;
    let files = write_report(&c.out_dir, &spec, &results)?;
    let rows = aggregate_metrics(&results);
    if c.pretty {
        print_metrics(&rows);
        println!("wrote {}", c.out_dir.display());
    } else {
        #[derive(Serialize)]
        struct BenchSummary {
            out_dir: String,
            manifest: String,
            runs: usize,
            metrics: Vec<MetricsEntry>,
        }
        emit(&BenchSummary {
            out_dir: c.out_dir.display().to_string(),
            manifest: files.manifest.display().to_string(),
            runs: results.len(),
            metrics: rows.iter().map(MetricsEntry::from).collect(),
        })?;
    }
    Ok(true)
}

fn cmd_profile(c: &Common, input: Option<&Path>, measures: &[String]) -> Outcome {
    let measures: Vec<Measure> = if measures.is_empty() {
        Measure::ALL.to_vec()
    } else {
        measures
            .iter()
            .map(|m| m.parse::<Measure>().map_err(Failure::from))
            .collect::<Result<_, _>>()?
    };
    let (spec, results): (ExperimentSpec, Vec<RunRecord>) = match input {
        Some(dir) => {
            let results_path = dir.join("results.csv");
            if !results_path.exists() {
                return Err(Failure::Usage(format!(
                    "{} not found",
                    results_path.display()
                )));
            }
            let wall = dir.join("wall_times.csv");
            let results = read_results(&results_path, wall.exists().then_some(wall.as_path()))?;
            let spec = build_spec(c, &MIN_ROSTER, &Method::ALL)?;
            (spec, results)
        }
        None => {
            let spec = build_spec(c, &MIN_ROSTER, &Method::ALL)?;
            let results = run_experiment(&spec)?;
            (spec, results)
        }
    };
    create_out_dir(&c.out_dir)?;
    let mut at_one: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let mut files = Vec::new();
    for m in measures {
        let curves = performance_profile(&results, m);
        let mut extra = vec![("measure", m.to_string())];
        if m.platform_dependent() {
            extra.push(("platform_dependent", "true".into()));
        }
        let path = c.out_dir.join(format!("profile_{m}.csv"));
        write_profiles(&path, &manifest_header(&spec, &extra), &curves)?;
        files.push(path.display().to_string());
        let entry = at_one.entry(m.to_string()).or_default();
        for curve in &curves {
            entry.insert(curve.method.to_string(), curve.value_at(1.0));
        }
    }
    if c.pretty {
        for (m, per_method) in &at_one {
            println!("{m}: fraction of problems won (ω = 1)");
            for (method, v) in per_method {
                println!("  {method:<8} {v:.3}");
            }
        }
    } else {
        #[derive(Serialize)]
        struct ProfileSummary {
            files: Vec<String>,
            rho_at_one: BTreeMap<String, BTreeMap<String, f64>>,
        }
        emit(&ProfileSummary {
            files,
            rho_at_one: at_one,
        })?;
    }
    Ok(true)
}

fn cmd_pareto(c: &Common) -> Outcome {
    let spec = build_spec(c, &["EX1"], &[Method::TtPrp])?;
    let results = run_experiment(&spec)?;
    create_out_dir(&c.out_dir)?;
    #[derive(Serialize)]
    struct ParetoSummary {
        problem: String,
        file: String,
        rows: usize,
        converged: usize,
        nondominated_fraction: f64,
    }
    let mut summaries = Vec::new();
    for name in &spec.problems {
        let rows = export_pareto_points(&results, name);
        let path = c.out_dir.join(format!("pareto_{name}.csv"));
        write_pareto(
            &path,
            &manifest_header(&spec, &[("problem", name.clone())]),
            &rows,
        )?;
        let finals: Vec<Vec<f64>> = rows
            .iter()
            .filter(|r| r.status == RunStatus::Converged)
            .map(|r| r.phi_final.clone())
            .collect();
        summaries.push(ParetoSummary {
            problem: name.clone(),
            file: path.display().to_string(),
            rows: rows.len(),
            converged: finals.len(),
            nondominated_fraction: nondominated_fraction(&finals, 1e-6),
        });
    }
    if c.pretty {
        for s in &summaries {
            println!(
                "{}: {} rows, {} converged, {:.1}% mutually nondominated -> {}",
                s.problem,
                s.rows,
                s.converged,
                100.0 * s.nondominated_fraction,
                s.file
            );
        }
    } else {
        #[derive(Serialize)]
        struct Out {
            pareto: Vec<ParetoSummary>,
        }
        emit(&Out { pareto: summaries })?;
    }
    Ok(true)
}

fn cmd_check(c: &Common, filter: Option<&str>, fault: Option<&str>) -> Outcome {
    let fault = fault.map(|f| f.parse::<Fault>()).transpose()?;
    let outcomes = run_checks(filter, fault.as_ref());
    if outcomes.is_empty() {
        return Err(Failure::Usage(format!(
            "no check matches `{}`",
            filter.unwrap_or("")
        )));
    }
    let all_passed = outcomes.iter().all(|o| o.passed);
    if c.pretty {
        for o in &outcomes {
            println!(
                "{} {} ({})",
                if o.passed { "PASS" } else { "FAIL" },
                o.name,
                o.detail
            );
        }
        let failed = outcomes.iter().filter(|o| !o.passed).count();
        println!("{} checks, {failed} failed", outcomes.len());
    } else {
        #[derive(Serialize)]
        struct Entry<'a> {
            name: &'a str,
            passed: bool,
            detail: &'a str,
        }
        #[derive(Serialize)]
        struct Out<'a> {
            passed: bool,
            check: Vec<Entry<'a>>,
        }
        emit(&Out {
            passed: all_passed,
            check: outcomes
                .iter()
                .map(|o| Entry {
                    name: &o.name,
                    passed: o.passed,
                    detail: &o.detail,
                })
                .collect(),
        })?;
    }
    Ok(all_passed)
}
