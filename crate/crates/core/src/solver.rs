//! Outer iteration shared by the three-term PRP method and its baselines.
//!
//! Each iteration runs the method's line search from `x^{k-1}` along
//! `d^{k-1}`, recomputes the steepest direction at the new point, stops when
//! `Θ(x^k) >= -stop_tol`, and otherwise forms `d^k` from the method's rule.
//! Line-search failures end the run; there are no restarts.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::directions::{
    prp_beta, prp_plus_direction, sd_direction, ttprp_direction, DirectionState,
};
use crate::error::{Error, Result};
use crate::linalg::{step, Matrix};
use crate::linesearch::{
    armijo_holds, curvature_holds, generalized_wolfe, strong_wolfe, LineSearchParams,
};
use crate::ordering::OrderingSpec;
use crate::problem::{EvalCounters, Evaluator, Problem};
use crate::scalarize::{lambda, steepest_from_jacobian, SteepestResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// Three-term direction, generalized Wolfe steps.
    #[serde(rename = "TT-PRP")]
    TtPrp,
    /// Three-term direction, strong Wolfe steps.
    #[serde(rename = "TT-PRP1")]
    TtPrp1,
    /// Two-term PRP+ direction, strong Wolfe steps.
    #[serde(rename = "PRP+")]
    PrpPlus,
    /// Steepest descent, strong Wolfe steps.
    #[serde(rename = "SD")]
    Sd,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::TtPrp, Method::TtPrp1, Method::PrpPlus, Method::Sd];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::TtPrp => "TT-PRP",
            Method::TtPrp1 => "TT-PRP1",
            Method::PrpPlus => "PRP+",
            Method::Sd => "SD",
        }
    }

    pub fn uses_generalized_wolfe(&self) -> bool {
        matches!(self, Method::TtPrp)
    }

    /// Whether the direction rule guarantees `λ(x, d) <= λ(x, ϑ(x))`.
    pub fn guarantees_sufficient_descent(&self) -> bool {
        !matches!(self, Method::PrpPlus)
    }

    /// Line-search parameters actually enforced for this method.
    pub fn effective_params(&self, params: &LineSearchParams) -> LineSearchParams {
        if self.uses_generalized_wolfe() {
            *params
        } else {
            params.strong()
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "TT-PRP" | "TTPRP" => Ok(Method::TtPrp),
            "TT-PRP1" | "TTPRP1" => Ok(Method::TtPrp1),
            "PRP+" | "PRPPLUS" => Ok(Method::PrpPlus),
            "SD" => Ok(Method::Sd),
            _ => Err(Error::UnknownMethod(s.to_string())),
        }
    }
}

/// `5 * sqrt(machine epsilon)`.
pub fn default_stop_tol() -> f64 {
    5.0 * f64::EPSILON.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub method: Method,
    pub ls_params: LineSearchParams,
    pub max_iters: usize,
    pub stop_tol: f64,
    pub qp_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::TtPrp,
            ls_params: LineSearchParams::default(),
            max_iters: 3000,
            stop_tol: default_stop_tol(),
            qp_tol: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn for_method(method: Method) -> Self {
        SolverConfig {
            method,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ls_params.validate()?;
        if !(self.stop_tol > 0.0) || !(self.qp_tol > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    IterationCap,
    LinesearchFailure,
    SubproblemFailure,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::IterationCap => "iteration_cap",
            RunStatus::LinesearchFailure => "linesearch_failure",
            RunStatus::SubproblemFailure => "subproblem_failure",
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RunStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "converged" => Ok(RunStatus::Converged),
            "iteration_cap" => Ok(RunStatus::IterationCap),
            "linesearch_failure" => Ok(RunStatus::LinesearchFailure),
            "subproblem_failure" => Ok(RunStatus::SubproblemFailure),
            _ => Err(Error::InvalidInput(format!("unknown status `{s}`"))),
        }
    }
}

/// State at `x^k`. `direction`, `step` and `lambda_dir` describe the move
/// out of `x^k` and are absent on the final record.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub objectives: Vec<f64>,
    pub theta: f64,
    pub steepest: Vec<f64>,
    pub lambda_steepest: f64,
    pub kkt_residual: f64,
    pub beta: f64,
    pub direction: Option<Vec<f64>>,
    pub lambda_dir: Option<f64>,
    pub step: Option<f64>,
    pub ls_trials: usize,
    /// Counters right after `x^k` and `ϑ(x^k)` were available.
    pub counters: EvalCounters,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub status: RunStatus,
    pub final_point: Vec<f64>,
    pub final_objectives: Vec<f64>,
    pub final_theta: f64,
    pub trace: Vec<IterationRecord>,
    pub counters: EvalCounters,
    pub wall_time: f64,
    pub config: SolverConfig,
    pub message: Option<String>,
}

impl RunResult {
    /// Number of completed line searches.
    pub fn iterations(&self) -> usize {
        self.trace.len().saturating_sub(1)
    }

    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }
}

fn status_of(err: &Error) -> RunStatus {
    match err {
        Error::SubproblemFailed { .. } => RunStatus::SubproblemFailure,
        _ => RunStatus::LinesearchFailure,
    }
}

/// Runs `config.method` from `x0`.
pub fn solve(
    problem: &Problem,
    x0: &[f64],
    config: &SolverConfig,
    ordering: &OrderingSpec,
) -> Result<RunResult> {
    config.validate()?;
    if x0.len() != problem.n() {
        return Err(Error::DimensionMismatch(format!(
            "x0 of length {} for n = {}",
            x0.len(),
            problem.n()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("x0 is not finite".into()));
    }
    if ordering.m() != problem.m() {
        return Err(Error::DimensionMismatch(format!(
            "ordering m = {} for problem m = {}",
            ordering.m(),
            problem.m()
        )));
    }

    let started = Instant::now();
    let mut eval = Evaluator::new(problem);
    let method = config.method;
    let params = method.effective_params(&config.ls_params);
    let mut trace: Vec<IterationRecord> = Vec::new();

    let finish = |status: RunStatus,
                  trace: Vec<IterationRecord>,
                  eval: &Evaluator<'_>,
                  x: Vec<f64>,
                  phi: Vec<f64>,
                  theta: f64,
                  message: Option<String>| RunResult {
        status,
        final_point: x,
        final_objectives: phi,
        final_theta: theta,
        trace,
        counters: eval.counters(),
        wall_time: started.elapsed().as_secs_f64(),
        config: *config,
        message,
    };

    // Step 1
    let mut x = x0.to_vec();
    let mut phi = eval.objectives(&x);
    if phi.iter().any(|v| !v.is_finite()) {
        return Ok(finish(
            RunStatus::LinesearchFailure,
            trace,
            &eval,
            x,
            phi,
            f64::NAN,
            Some("objective not finite at x0".into()),
        ));
    }
    let mut jac = eval.jacobian(&x);
    let mut sd = match steepest(&mut eval, &jac, ordering, config.qp_tol) {
        Ok(s) => s,
        Err(e) => {
            return Ok(finish(
                status_of(&e),
                trace,
                &eval,
                x,
                phi,
                f64::NAN,
                Some(e.to_string()),
            ))
        }
    };
    trace.push(record(0, &x, &phi, &sd, 0.0, &eval));
    if sd.theta >= -config.stop_tol {
        let theta = sd.theta;
        return Ok(finish(
            RunStatus::Converged,
            trace,
            &eval,
            x,
            phi,
            theta,
            None,
        ));
    }
    let mut d = sd_direction(&sd.direction);
    let mut lam_d = lambda(&jac, &d, ordering)?;
    set_direction(trace.last_mut().unwrap(), &d, lam_d);

    for k in 1..=config.max_iters {
        // Step 2
        let ls = if method.uses_generalized_wolfe() {
            generalized_wolfe(&mut eval, &x, &d, &phi, lam_d, ordering, &params)
        } else {
            strong_wolfe(&mut eval, &x, &d, &phi, lam_d, ordering, &params)
        };
        let out = match ls {
            Ok(o) => o,
            Err(e) => {
                let theta = sd.theta;
                return Ok(finish(
                    status_of(&e),
                    trace,
                    &eval,
                    x,
                    phi,
                    theta,
                    Some(e.to_string()),
                ));
            }
        };
        {
            let last = trace.last_mut().unwrap();
            last.step = Some(out.alpha);
            last.ls_trials = out.trials;
        }
        let prev_jac = std::mem::replace(&mut jac, out.jac_at_step);
        let prev_x = std::mem::replace(&mut x, out.point);
        phi = out.obj_at_step;
        let lam_prevdir_at_new = out.lambda_at_step;

        // Step 3
        let prev_sd = sd;
        sd = match steepest(&mut eval, &jac, ordering, config.qp_tol) {
            Ok(s) => s,
            Err(e) => {
                return Ok(finish(
                    status_of(&e),
                    trace,
                    &eval,
                    x,
                    phi,
                    f64::NAN,
                    Some(e.to_string()),
                ))
            }
        };
        if sd.theta >= -config.stop_tol {
            trace.push(record(k, &x, &phi, &sd, 0.0, &eval));
            let theta = sd.theta;
            return Ok(finish(
                RunStatus::Converged,
                trace,
                &eval,
                x,
                phi,
                theta,
                None,
            ));
        }

        // Step 4
        let state = DirectionState {
            prev_direction: d,
            prev_lambda_steepest: prev_sd.lambda,
            prev_point: prev_x,
            prev_jacobian: prev_jac,
        };
        let (beta, next) = match method {
            Method::Sd => (0.0, sd_direction(&sd.direction)),
            Method::PrpPlus => {
                let beta = prp_beta(&sd.direction, sd.lambda, &state, ordering)?;
                (
                    beta,
                    prp_plus_direction(&sd.direction, beta, &state.prev_direction)?,
                )
            }
            Method::TtPrp | Method::TtPrp1 => {
                let beta = prp_beta(&sd.direction, sd.lambda, &state, ordering)?;
                let dir = ttprp_direction(
                    &sd.direction,
                    sd.lambda,
                    lam_prevdir_at_new,
                    beta,
                    &state.prev_direction,
                )?;
                (beta, dir)
            }
        };
        d = next;
        lam_d = lambda(&jac, &d, ordering)?;
        let mut rec = record(k, &x, &phi, &sd, beta, &eval);
        set_direction(&mut rec, &d, lam_d);
        trace.push(rec);
    }

    let theta = sd.theta;
    // The last record has a direction that was never used.
    if let Some(last) = trace.last_mut() {
        last.direction = None;
        last.lambda_dir = None;
    }
    Ok(finish(
        RunStatus::IterationCap,
        trace,
        &eval,
        x,
        phi,
        theta,
        None,
    ))
}

fn steepest(
    eval: &mut Evaluator<'_>,
    jac: &Matrix,
    ordering: &OrderingSpec,
    tol: f64,
) -> Result<SteepestResult> {
    eval.count_subproblem();
    steepest_from_jacobian(jac, ordering, tol)
}

fn record(
    k: usize,
    x: &[f64],
    phi: &[f64],
    sd: &SteepestResult,
    beta: f64,
    eval: &Evaluator<'_>,
) -> IterationRecord {
    IterationRecord {
        k,
        x: x.to_vec(),
        objectives: phi.to_vec(),
        theta: sd.theta,
        steepest: sd.direction.clone(),
        lambda_steepest: sd.lambda,
        kkt_residual: sd.kkt_residual,
        beta,
        direction: None,
        lambda_dir: None,
        step: None,
        ls_trials: 0,
        counters: eval.counters(),
    }
}

fn set_direction(rec: &mut IterationRecord, d: &[f64], lam_d: f64) {
    rec.direction = Some(d.to_vec());
    rec.lambda_dir = Some(lam_d);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    SufficientDescent,
    Armijo,
    LowerCurvature,
    UpperCurvature,
    PointMismatch,
    ThetaSign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub k: usize,
    pub kind: ViolationKind,
    /// How far past the bound the recomputed value lies.
    pub excess: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "iteration {}: {:?} violated by {:e}",
            self.k, self.kind, self.excess
        )
    }
}

const RECHECK_SLACK: f64 = 1e-9;

/// Re-derives, with fresh evaluations, every guarantee the run claims:
/// sufficient descent of each direction (for methods that promise it),
/// the Armijo condition and the curvature window of each accepted step.
pub fn solve_traced_invariant_check(
    run: &RunResult,
    problem: &Problem,
    ordering: &OrderingSpec,
) -> Vec<Violation> {
    let method = run.config.method;
    let params = method.effective_params(&run.config.ls_params);
    let mut out = Vec::new();
    for (i, rec) in run.trace.iter().enumerate() {
        if rec.theta > 0.0 {
            out.push(Violation {
                k: rec.k,
                kind: ViolationKind::ThetaSign,
                excess: rec.theta,
            });
        }
        let Some(d) = rec.direction.as_ref() else {
            continue;
        };
        let jac = problem.jacobian(&rec.x);
        let lam0 = match lambda(&jac, d, ordering) {
            Ok(v) => v,
            Err(_) => {
                out.push(Violation {
                    k: rec.k,
                    kind: ViolationKind::SufficientDescent,
                    excess: f64::INFINITY,
                });
                continue;
            }
        };
        if method.guarantees_sufficient_descent() {
            let lam_sd = steepest_from_jacobian(&jac, ordering, run.config.qp_tol)
                .map(|s| s.lambda)
                .unwrap_or(f64::NAN);
            let excess = lam0 - lam_sd;
            if !(excess <= RECHECK_SLACK) {
                out.push(Violation {
                    k: rec.k,
                    kind: ViolationKind::SufficientDescent,
                    excess,
                });
            }
        }
        let (Some(alpha), Some(next)) = (rec.step, run.trace.get(i + 1)) else {
            continue;
        };
        let point = step(&rec.x, alpha, d);
        if point != next.x {
            out.push(Violation {
                k: rec.k,
                kind: ViolationKind::PointMismatch,
                excess: f64::INFINITY,
            });
        }
        let phi0 = problem.objectives(&rec.x);
        let phi1 = problem.objectives(&point);
        if !armijo_holds(ordering, &phi0, &phi1, alpha, lam0, params.rho) {
            let excess = phi1
                .iter()
                .zip(&phi0)
                .zip(ordering.xi())
                .map(|((a, b), xi)| a - (b + params.rho * alpha * lam0 * xi))
                .fold(f64::NEG_INFINITY, f64::max);
            if !(excess <= RECHECK_SLACK) {
                out.push(Violation {
                    k: rec.k,
                    kind: ViolationKind::Armijo,
                    excess,
                });
            }
        }
        let lam1 = lambda(&problem.jacobian(&point), d, ordering).unwrap_or(f64::NAN);
        let (lower, upper) = curvature_holds(lam1, lam0, params.sigma, params.mu);
        if !lower && !(params.sigma * lam0 - lam1 <= RECHECK_SLACK) {
            out.push(Violation {
                k: rec.k,
                kind: ViolationKind::LowerCurvature,
                excess: params.sigma * lam0 - lam1,
            });
        }
        if !upper && !(lam1 + params.mu * lam0 <= RECHECK_SLACK) {
            out.push(Violation {
                k: rec.k,
                kind: ViolationKind::UpperCurvature,
                excess: lam1 + params.mu * lam0,
            });
        }
    }
    out
}
