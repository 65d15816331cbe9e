//! Problem definitions, evaluation counting and initial-point sampling.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// A smooth map from `R^n` to `R^m` with a hand-coded Jacobian.
///
/// Implementations hold no mutable state so a single instance can serve many
/// concurrent runs.
pub trait VectorFunction: Send + Sync {
    /// Writes the `m` objective values at `x` into `out`.
    fn eval(&self, x: &[f64], out: &mut [f64]);

    /// Writes the `m x n` Jacobian at `x` into `jac`; row `i` is the gradient
    /// of objective `i`.
    fn jacobian(&self, x: &[f64], jac: &mut Matrix);
}

/// Closed interval used for per-coordinate sampling boxes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }
}

/// An `m`-objective, `n`-variable test problem.
#[derive(Clone)]
pub struct Problem {
    name: String,
    n: usize,
    m: usize,
    bounds: Vec<Interval>,
    convex: bool,
    function: Arc<dyn VectorFunction>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("convex", &self.convex)
            .finish_non_exhaustive()
    }
}

impl Problem {
    /// Builds a problem. Bounds must have one interval per variable with
    /// `lo <= hi`; a degenerate interval pins that coordinate.
    pub fn new(
        name: impl Into<String>,
        n: usize,
        m: usize,
        bounds: Vec<Interval>,
        convex: bool,
        function: Arc<dyn VectorFunction>,
    ) -> Result<Self> {
        let name = name.into();
        if n == 0 || m == 0 {
            return Err(Error::InvalidInput(format!(
                "{name}: n and m must be positive"
            )));
        }
        if bounds.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{name}: {} bounds for {n} variables",
                bounds.len()
            )));
        }
        if let Some(b) = bounds
            .iter()
            .find(|b| !(b.lo <= b.hi) || !b.lo.is_finite() || !b.hi.is_finite())
        {
            return Err(Error::InvalidInput(format!(
                "{name}: bad interval [{}, {}]",
                b.lo, b.hi
            )));
        }
        Ok(Problem {
            name,
            n,
            m,
            bounds,
            convex,
            function,
        })
    }

    /// Same sampling box in every coordinate.
    pub fn with_cube(
        name: impl Into<String>,
        n: usize,
        m: usize,
        lo: f64,
        hi: f64,
        convex: bool,
        function: Arc<dyn VectorFunction>,
    ) -> Result<Self> {
        Self::new(name, n, m, vec![Interval::new(lo, hi); n], convex, function)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn bounds(&self) -> &[Interval] {
        &self.bounds
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    pub fn function(&self) -> &Arc<dyn VectorFunction> {
        &self.function
    }

    /// Replaces the evaluators while keeping the metadata.
    pub fn with_function(&self, function: Arc<dyn VectorFunction>) -> Problem {
        Problem {
            function,
            ..self.clone()
        }
    }

    pub fn objectives(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        let mut out = vec![0.0; self.m];
        self.function.eval(x, &mut out);
        out
    }

    pub fn jacobian(&self, x: &[f64]) -> Matrix {
        debug_assert_eq!(x.len(), self.n);
        let mut jac = Matrix::zeros(self.m, self.n);
        self.function.jacobian(x, &mut jac);
        jac
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.n
            && x.iter()
                .zip(&self.bounds)
                .all(|(v, b)| b.lo <= *v && *v <= b.hi)
    }
}

/// Evaluation counts of one run. One call of the objective map counts once
/// regardless of `m`; likewise for the Jacobian.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct EvalCounters {
    pub n_obj_evals: u64,
    pub n_jac_evals: u64,
    pub n_subproblem_solves: u64,
}

/// A problem paired with the counters of the run that uses it.
#[derive(Debug)]
pub struct Evaluator<'p> {
    problem: &'p Problem,
    counters: EvalCounters,
}

impl<'p> Evaluator<'p> {
    pub fn new(problem: &'p Problem) -> Self {
        Evaluator {
            problem,
            counters: EvalCounters::default(),
        }
    }

    pub fn problem(&self) -> &'p Problem {
        self.problem
    }

    pub fn counters(&self) -> EvalCounters {
        self.counters
    }

    pub fn objectives(&mut self, x: &[f64]) -> Vec<f64> {
        self.counters.n_obj_evals += 1;
        self.problem.objectives(x)
    }

    pub fn jacobian(&mut self, x: &[f64]) -> Matrix {
        self.counters.n_jac_evals += 1;
        self.problem.jacobian(x)
    }

    pub(crate) fn count_subproblem(&mut self) {
        self.counters.n_subproblem_solves += 1;
    }
}

/// Uniform independent sample from the problem's box, deterministic in `seed`.
pub fn sample_initial_point(problem: &Problem, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    problem
        .bounds
        .iter()
        .map(|b| {
            if b.lo == b.hi {
                b.lo
            } else {
                rng.gen_range(b.lo..=b.hi)
            }
        })
        .collect()
}

/// One Jacobian entry that disagrees with central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMismatch {
    pub point: Vec<f64>,
    pub row: usize,
    pub col: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Compares the analytic Jacobian with Richardson-extrapolated central
/// differences at `samples` seeded box points. An entry passes when
/// `|analytic - numeric| <= max(rel_tol * max(|analytic|, |numeric|), abs_floor)`
/// plus the rounding bound of the differences, which matters only when an
/// objective is large relative to its partials.
pub fn check_jacobian(
    problem: &Problem,
    samples: usize,
    seed: u64,
    rel_tol: f64,
    abs_floor: f64,
) -> Vec<JacobianMismatch> {
    let mut bad = Vec::new();
    for s in 0..samples {
        let x = sample_initial_point(problem, seed.wrapping_add(s as u64));
        let jac = problem.jacobian(&x);
        if jac.rows() != problem.m || jac.cols() != problem.n {
            bad.push(JacobianMismatch {
                point: x,
                row: jac.rows(),
                col: jac.cols(),
                analytic: f64::NAN,
                numeric: f64::NAN,
            });
            continue;
        }
        let mut xp = x.clone();
        let mut central = |j: usize, h: f64| {
            xp[j] = x[j] + h;
            let fp = problem.objectives(&xp);
            xp[j] = x[j] - h;
            let fm = problem.objectives(&xp);
            xp[j] = x[j];
            let mag: Vec<f64> = fp
                .iter()
                .zip(&fm)
                .map(|(a, b)| a.abs().max(b.abs()))
                .collect();
            let d: Vec<f64> = fp
                .iter()
                .zip(&fm)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect();
            (d, mag)
        };
        for j in 0..problem.n {
            let h = 1e-4 * x[j].abs().max(1.0);
            let (coarse, mag) = central(j, h);
            let (fine, _) = central(j, 0.5 * h);
            for i in 0..problem.m {
                let numeric = (4.0 * fine[i] - coarse[i]) / 3.0;
                let analytic = jac.get(i, j);
                // Rounding in the differences is bounded by a few ulps of |f| over h.
                let cancellation = 16.0 * f64::EPSILON * mag[i] / h;
                let tol =
                    (rel_tol * analytic.abs().max(numeric.abs())).max(abs_floor) + cancellation;
                if !((analytic - numeric).abs() <= tol) {
                    bad.push(JacobianMismatch {
                        point: x.clone(),
                        row: i,
                        col: j,
                        analytic,
                        numeric,
                    });
                }
            }
        }
    }
    bad
}
