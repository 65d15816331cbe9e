//! Three-term Polak-Ribière-Polyak conjugate gradient method for vector
//! optimization, with PRP+ and steepest-descent baselines, Wolfe-type vector
//! line searches, benchmark problems and an experiment harness.
//!
//! Problems minimize `Φ: Rⁿ → Rᵐ` with respect to the order induced by a
//! polyhedral cone given by a finite generator set of its dual
//! ([`OrderingSpec`]); the nonnegative orthant is the multiobjective case.

pub mod bench;
pub mod checks;
pub mod directions;
pub mod error;
pub mod linalg;
pub mod linesearch;
pub mod ordering;
pub mod problem;
pub mod problems;
pub mod scalarize;
pub mod simplex_qp;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use linesearch::{LineSearchOutcome, LineSearchParams};
pub use ordering::OrderingSpec;
pub use problem::{
    sample_initial_point, EvalCounters, Evaluator, Interval, Problem, VectorFunction,
};
pub use problems::{get_problem, Variant};
pub use scalarize::{lambda, steepest_direction, theta, SteepestResult};
pub use solver::{
    solve, solve_traced_invariant_check, IterationRecord, Method, RunResult, RunStatus,
    SolverConfig,
};
