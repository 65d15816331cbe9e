//! Step sizes along a descent direction satisfying the vector Armijo
//! condition plus one- or two-sided curvature bounds on `λ(x + αd, d)`.
//!
//! The Wolfe searches expand `alpha` until the Armijo test fails or the
//! point is past the curvature window, then bisect the bracket. There is no
//! interpolation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{step, Matrix};
use crate::ordering::OrderingSpec;
use crate::problem::Evaluator;
use crate::scalarize::lambda;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LineSearchParams {
    pub rho: f64,
    pub sigma: f64,
    pub mu: f64,
    pub alpha_init: f64,
    pub expand_factor: f64,
    pub max_trials: usize,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        LineSearchParams {
            rho: 1e-4,
            sigma: 0.1,
            mu: 0.2,
            alpha_init: 1.0,
            expand_factor: 2.0,
            max_trials: 100,
        }
    }
}

impl LineSearchParams {
    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 < self.rho
            && self.rho < self.sigma
            && self.sigma < 1.0
            && self.mu >= 0.0
            && self.alpha_init > 0.0
            && self.expand_factor > 1.0
            && self.max_trials > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "line search parameters {self:?}"
            )))
        }
    }

    /// The strong Wolfe window is the generalized one with `mu = sigma`.
    pub fn strong(&self) -> Self {
        LineSearchParams {
            mu: self.sigma,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConditionFlags {
    pub armijo: bool,
    pub lower_curvature: bool,
    pub upper_curvature: bool,
}

impl ConditionFlags {
    pub fn all(&self) -> bool {
        self.armijo && self.lower_curvature && self.upper_curvature
    }
}

#[derive(Debug, Clone)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    pub trials: usize,
    pub point: Vec<f64>,
    pub obj_at_step: Vec<f64>,
    pub jac_at_step: Matrix,
    /// `λ(x + αd, d)`.
    pub lambda_at_step: f64,
    pub satisfied: ConditionFlags,
}

/// Vector Armijo test `Φ(x + αd) ⪯ Φ(x) + ρ α λ0 ξ`.
pub fn armijo_holds(
    ordering: &OrderingSpec,
    phi_x: &[f64],
    phi_trial: &[f64],
    alpha: f64,
    lam0: f64,
    rho: f64,
) -> bool {
    let bound: Vec<f64> = phi_x
        .iter()
        .zip(ordering.xi())
        .map(|(f, xi)| f + rho * alpha * lam0 * xi)
        .collect();
    ordering.precedes(phi_trial, &bound)
}

/// Curvature window `σ λ0 <= λ+ <= -μ λ0` as (lower, upper).
pub fn curvature_holds(lam_trial: f64, lam0: f64, sigma: f64, mu: f64) -> (bool, bool) {
    (lam_trial >= sigma * lam0, lam_trial <= -mu * lam0)
}

/// Generalized Wolfe step: Armijo plus `σ λ0 <= λ(x + αd, d) <= -μ λ0`.
///
/// `phi_x` is `Φ(x)` and `lam0` is `λ(x, d)`; both are already known to the
/// caller and are not re-evaluated. The Jacobian is evaluated only at trial
/// points that pass the Armijo test.
pub fn generalized_wolfe(
    eval: &mut Evaluator<'_>,
    x: &[f64],
    d: &[f64],
    phi_x: &[f64],
    lam0: f64,
    ordering: &OrderingSpec,
    params: &LineSearchParams,
) -> Result<LineSearchOutcome> {
    params.validate()?;
    if !(lam0 < 0.0) {
        return Err(Error::NotDescent { lambda: lam0 });
    }
    let mut lo = 0.0_f64;
    let mut hi = f64::INFINITY;
    let mut alpha = params.alpha_init;

    for trial in 1..=params.max_trials {
        let point = step(x, alpha, d);
        let phi = eval.objectives(&point);
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteObjective { alpha });
        }
        if !armijo_holds(ordering, phi_x, &phi, alpha, lam0, params.rho) {
            hi = alpha;
        } else {
            let jac = eval.jacobian(&point);
            if !jac.is_finite() {
                return Err(Error::NonFiniteObjective { alpha });
            }
            let lam = lambda(&jac, d, ordering)?;
            let (lower, upper) = curvature_holds(lam, lam0, params.sigma, params.mu);
            if lower && upper {
                return Ok(LineSearchOutcome {
                    alpha,
                    trials: trial,
                    point,
                    obj_at_step: phi,
                    jac_at_step: jac,
                    lambda_at_step: lam,
                    satisfied: ConditionFlags {
                        armijo: true,
                        lower_curvature: true,
                        upper_curvature: true,
                    },
                });
            }
            if !lower {
                lo = alpha;
            } else {
                hi = alpha;
            }
        }
        alpha = if hi.is_finite() {
            if hi - lo < 1e-16 {
                return Err(Error::LineSearchFailed {
                    trials: trial,
                    alpha,
                });
            }
            0.5 * (lo + hi)
        } else {
            alpha * params.expand_factor
        };
    }
    Err(Error::LineSearchFailed {
        trials: params.max_trials,
        alpha,
    })
}

/// Strong Wolfe step: Armijo plus `|λ(x + αd, d)| <= σ |λ0|`.
pub fn strong_wolfe(
    eval: &mut Evaluator<'_>,
    x: &[f64],
    d: &[f64],
    phi_x: &[f64],
    lam0: f64,
    ordering: &OrderingSpec,
    params: &LineSearchParams,
) -> Result<LineSearchOutcome> {
    generalized_wolfe(eval, x, d, phi_x, lam0, ordering, &params.strong())
}

/// Smallest `α ∈ (0, alpha_max]` with `λ(x + αd, d) = 0` (to 1e-10), found by
/// geometric expansion from `alpha_max / 1024` and then bisection.
pub fn exact_line_search(
    eval: &mut Evaluator<'_>,
    x: &[f64],
    d: &[f64],
    ordering: &OrderingSpec,
    alpha_max: f64,
) -> Result<f64> {
    if !(alpha_max > 0.0) {
        return Err(Error::InvalidInput(format!("alpha_max = {alpha_max}")));
    }
    let lam_at = |eval: &mut Evaluator<'_>, a: f64| -> Result<f64> {
        let jac = eval.jacobian(&step(x, a, d));
        lambda(&jac, d, ordering)
    };
    let lam0 = lam_at(eval, 0.0)?;
    if !(lam0 < 0.0) {
        return Err(Error::NotDescent { lambda: lam0 });
    }
    let mut lo = 0.0;
    let mut hi = alpha_max / 1024.0;
    loop {
        let l = lam_at(eval, hi)?;
        if l.abs() <= 1e-10 {
            return Ok(hi);
        }
        if l > 0.0 {
            break;
        }
        if hi >= alpha_max {
            return Err(Error::NoRoot { alpha_max });
        }
        lo = hi;
        hi = (2.0 * hi).min(alpha_max);
    }
    // λ(lo) < 0 < λ(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let l = lam_at(eval, mid)?;
        if l.abs() <= 1e-10 || mid == lo || mid == hi {
            return Ok(mid);
        }
        if l < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Problem, VectorFunction};
    use std::sync::Arc;

    /// ½‖x‖².
    struct HalfSq;
    impl VectorFunction for HalfSq {
        fn eval(&self, x: &[f64], out: &mut [f64]) {
            out[0] = 0.5 * x.iter().map(|v| v * v).sum::<f64>();
        }
        fn jacobian(&self, x: &[f64], jac: &mut Matrix) {
            jac.row_mut(0).copy_from_slice(x);
        }
    }

    fn half_sq() -> Problem {
        Problem::with_cube("halfsq", 2, 1, -1.0, 1.0, true, Arc::new(HalfSq)).unwrap()
    }

    #[test]
    fn defaults_are_valid() {
        let p = LineSearchParams::default();
        p.validate().unwrap();
        assert_eq!((p.rho, p.sigma, p.mu), (1e-4, 0.1, 0.2));
        assert!(LineSearchParams { sigma: 1e-5, ..p }.validate().is_err());
    }

    #[test]
    fn unit_step_accepted_on_quadratic() {
        // Φ(x + αd) = ½α² - α + ½ from x = (1, 0), d = (-1, 0); λ0 = -1.
        let p = half_sq();
        let o = OrderingSpec::canonical(1);
        let params = LineSearchParams::default();
        for search in [generalized_wolfe, strong_wolfe] {
            let mut ev = Evaluator::new(&p);
            let out = search(
                &mut ev,
                &[1.0, 0.0],
                &[-1.0, 0.0],
                &[0.5],
                -1.0,
                &o,
                &params,
            )
            .unwrap();
            assert_eq!(out.alpha, 1.0);
            assert_eq!(out.trials, 1);
            assert!(out.satisfied.all());
        }
    }

    #[test]
    fn ascent_direction_rejected() {
        let p = half_sq();
        let mut ev = Evaluator::new(&p);
        let r = generalized_wolfe(
            &mut ev,
            &[1.0, 0.0],
            &[1.0, 0.0],
            &[0.5],
            0.5,
            &OrderingSpec::canonical(1),
            &LineSearchParams::default(),
        );
        assert!(matches!(r, Err(Error::NotDescent { .. })));
        assert_eq!(ev.counters().n_obj_evals, 0);
    }

    #[test]
    fn short_step_expands_and_long_step_bisects() {
        let p = half_sq();
        let o = OrderingSpec::canonical(1);
        for alpha_init in [1e-3, 37.0] {
            let params = LineSearchParams {
                alpha_init,
                ..Default::default()
            };
            let mut ev = Evaluator::new(&p);
            let out = generalized_wolfe(
                &mut ev,
                &[1.0, 0.0],
                &[-1.0, 0.0],
                &[0.5],
                -1.0,
                &o,
                &params,
            )
            .unwrap();
            // λ(x + αd, d) = α - 1 must land in [-0.1, 0.2].
            assert!(
                out.alpha >= 0.9 && out.alpha <= 1.2,
                "alpha = {}",
                out.alpha
            );
            assert!(out.trials > 1);
        }
    }

    #[test]
    fn exact_search_on_quadratic() {
        let p = half_sq();
        let mut ev = Evaluator::new(&p);
        let a = exact_line_search(
            &mut ev,
            &[1.0, 0.0],
            &[-1.0, 0.0],
            &OrderingSpec::canonical(1),
            10.0,
        )
        .unwrap();
        assert!((a - 1.0).abs() < 1e-9);
        let mut ev = Evaluator::new(&p);
        assert!(matches!(
            exact_line_search(
                &mut ev,
                &[1.0, 0.0],
                &[1.0, 0.0],
                &OrderingSpec::canonical(1),
                10.0
            ),
            Err(Error::NotDescent { .. })
        ));
        let mut ev = Evaluator::new(&p);
        assert!(matches!(
            exact_line_search(
                &mut ev,
                &[1.0, 0.0],
                &[-1.0, 0.0],
                &OrderingSpec::canonical(1),
                0.5
            ),
            Err(Error::NoRoot { .. })
        ));
    }
}
