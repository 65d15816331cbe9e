//! The worst-case directional derivative `λ(u, d)`, the steepest descent
//! direction `ϑ(u)` and its optimal value `Θ(u)`.
//!
//! `ϑ(u)` minimizes `λ(u, d) + ½‖d‖²`. With `a_j = JΦ(u)ᵀ v_j` the dual is the
//! minimum-norm point of the convex hull of the `a_j`, so the direction is
//! `-Σ w_j a_j` for the simplex weights `w` solving `min ½‖Σ w_j a_j‖²`.

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm_sq, Matrix};
use crate::ordering::OrderingSpec;
use crate::problem::Problem;
use crate::simplex_qp::solve_simplex_qp;

/// Inner-iteration cap of the dual QP solver.
pub const QP_MAX_ITER: usize = 10_000;

/// `λ(u, d) = max_{v ∈ V} <JΦ(u) d, v>` for the Jacobian `jac = JΦ(u)`.
pub fn lambda(jac: &Matrix, d: &[f64], ordering: &OrderingSpec) -> Result<f64> {
    if jac.cols() != d.len() || jac.rows() != ordering.m() {
        return Err(Error::DimensionMismatch(format!(
            "Jacobian {}x{}, direction {}, ordering m = {}",
            jac.rows(),
            jac.cols(),
            d.len(),
            ordering.m()
        )));
    }
    Ok(ordering.support(&jac.mul_vec(d)).1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteepestResult {
    /// `ϑ(u)`.
    pub direction: Vec<f64>,
    /// `Θ(u) = λ(u, ϑ(u)) + ½‖ϑ(u)‖²`.
    pub theta: f64,
    /// `λ(u, ϑ(u))`.
    pub lambda: f64,
    /// Convex weights over the generators.
    pub dual_weights: Vec<f64>,
    pub kkt_residual: f64,
}

impl SteepestResult {
    pub fn is_critical(&self) -> bool {
        self.direction.iter().all(|&v| v == 0.0)
    }
}

/// Steepest direction from an already evaluated Jacobian.
pub fn steepest_from_jacobian(
    jac: &Matrix,
    ordering: &OrderingSpec,
    tol: f64,
) -> Result<SteepestResult> {
    if jac.rows() != ordering.m() {
        return Err(Error::DimensionMismatch(format!(
            "Jacobian has {} rows, ordering m = {}",
            jac.rows(),
            ordering.m()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tolerance {tol} must be positive"
        )));
    }
    if !jac.is_finite() {
        return Err(Error::InvalidInput("Jacobian is not finite".into()));
    }
    let k = ordering.generators().len();
    let n = jac.cols();

    // a_j = Jᵀ v_j
    let atoms: Vec<Vec<f64>> = if ordering.is_canonical() {
        (0..k).map(|i| jac.row(i).to_vec()).collect()
    } else {
        ordering
            .generators()
            .iter()
            .map(|v| jac.tr_mul_vec(v))
            .collect()
    };

    if atoms.iter().all(|a| a.iter().all(|&x| x == 0.0)) {
        return Ok(SteepestResult {
            direction: vec![0.0; n],
            theta: 0.0,
            lambda: 0.0,
            dual_weights: vec![1.0 / k as f64; k],
            kkt_residual: 0.0,
        });
    }

    let mut gram = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let g = dot(&atoms[i], &atoms[j]);
            gram.set(i, j, g);
            gram.set(j, i, g);
        }
    }
    let sol = solve_simplex_qp(&gram, tol, QP_MAX_ITER)?;

    let mut direction = vec![0.0; n];
    for (w, a) in sol.weights.iter().zip(&atoms) {
        if *w != 0.0 {
            axpy(-w, a, &mut direction);
        }
    }
    let lam = lambda(jac, &direction, ordering)?;
    let theta = lam + 0.5 * norm_sq(&direction);
    if theta >= 0.0 {
        // d = 0 is at least as good: the point is critical to working precision.
        return Ok(SteepestResult {
            direction: vec![0.0; n],
            theta: 0.0,
            lambda: 0.0,
            dual_weights: sol.weights,
            kkt_residual: sol.residual,
        });
    }
    Ok(SteepestResult {
        direction,
        theta,
        lambda: lam,
        dual_weights: sol.weights,
        kkt_residual: sol.residual,
    })
}

/// `ϑ(x)` for a problem; evaluates the Jacobian once (uncounted).
pub fn steepest_direction(
    problem: &Problem,
    x: &[f64],
    ordering: &OrderingSpec,
    tol: f64,
) -> Result<SteepestResult> {
    if x.len() != problem.n() {
        return Err(Error::DimensionMismatch(format!(
            "point of length {} for n = {}",
            x.len(),
            problem.n()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("point is not finite".into()));
    }
    steepest_from_jacobian(&problem.jacobian(x), ordering, tol)
}

/// `Θ(x)`.
pub fn theta(problem: &Problem, x: &[f64], ordering: &OrderingSpec) -> Result<f64> {
    Ok(steepest_direction(problem, x, ordering, 1e-12)?.theta)
}
