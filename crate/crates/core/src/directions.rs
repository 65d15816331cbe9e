//! Search-direction rules: steepest descent, two-term PRP+, and the
//! three-term PRP direction that satisfies `λ(x, d) <= λ(x, ϑ(x))` for any
//! `β >= 0` and any previous direction.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::ordering::OrderingSpec;
use crate::scalarize::lambda;

/// What the direction update needs from the previous iterate.
#[derive(Debug, Clone)]
pub struct DirectionState {
    pub prev_direction: Vec<f64>,
    /// `λ(x^{k-1}, ϑ(x^{k-1}))`, negative while the run is live.
    pub prev_lambda_steepest: f64,
    pub prev_point: Vec<f64>,
    /// `JΦ(x^{k-1})`, kept so `λ(x^{k-1}, ϑ(x^k))` costs no evaluation.
    pub prev_jacobian: Matrix,
}

/// Nonnegative PRP parameter
/// `max{0, (-λ(x^k, ϑ^k) + λ(x^{k-1}, ϑ^k)) / (-λ(x^{k-1}, ϑ^{k-1}))}`.
///
/// Note the numerator's second term is evaluated at the old point along the
/// new steepest direction.
pub fn prp_beta(
    steepest_new: &[f64],
    lambda_steepest_new: f64,
    state: &DirectionState,
    ordering: &OrderingSpec,
) -> Result<f64> {
    let denom = -state.prev_lambda_steepest;
    if !(denom > 1e-300) {
        return Err(Error::Critical {
            lambda: state.prev_lambda_steepest,
        });
    }
    let cross = lambda(&state.prev_jacobian, steepest_new, ordering)?;
    let raw = (-lambda_steepest_new + cross) / denom;
    Ok(if raw > 0.0 { raw } else { 0.0 })
}

/// Three-term PRP direction
/// `ϑ + β d_prev - β (|λ(x^k, d_prev)| / λ(x^k, ϑ)) ϑ`.
pub fn ttprp_direction(
    steepest_new: &[f64],
    lambda_steepest_new: f64,
    lambda_prevdir_at_new: f64,
    beta: f64,
    prev_direction: &[f64],
) -> Result<Vec<f64>> {
    if !(lambda_steepest_new < 0.0) {
        return Err(Error::Critical {
            lambda: lambda_steepest_new,
        });
    }
    if !(beta >= 0.0) {
        return Err(Error::InvalidInput(format!("beta = {beta}")));
    }
    check_len(steepest_new, prev_direction)?;
    // Nonnegative: -β |·| / λ with λ < 0.
    let third = -beta * lambda_prevdir_at_new.abs() / lambda_steepest_new;
    Ok(steepest_new
        .iter()
        .zip(prev_direction)
        .map(|(s, p)| s + beta * p + third * s)
        .collect())
}

/// Two-term PRP+ direction `ϑ + β d_prev`; not necessarily a descent direction.
pub fn prp_plus_direction(
    steepest_new: &[f64],
    beta: f64,
    prev_direction: &[f64],
) -> Result<Vec<f64>> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidInput(format!("beta = {beta}")));
    }
    check_len(steepest_new, prev_direction)?;
    Ok(steepest_new
        .iter()
        .zip(prev_direction)
        .map(|(s, p)| s + beta * p)
        .collect())
}

/// Steepest descent: the direction is `ϑ` itself.
pub fn sd_direction(steepest_new: &[f64]) -> Vec<f64> {
    steepest_new.to_vec()
}

fn check_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "directions of length {} and {}",
            a.len(),
            b.len()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalarize::steepest_from_jacobian;
    use proptest::prelude::*;

    fn ex1_jacobian(x: &[f64]) -> Matrix {
        Matrix::from_rows(&[
            vec![x[0], x[1].cos() / 2.0],
            vec![x[0] - 1.0, -(x[1] - 1.0)],
        ])
        .unwrap()
    }

    const X0: [f64; 2] = [1.5, 0.9];
    const X1: [f64; 2] = [-0.0835, 0.5833];
    const D0: [f64; 2] = [-0.5, -0.1];

    fn example_state() -> DirectionState {
        DirectionState {
            prev_direction: D0.to_vec(),
            prev_lambda_steepest: -0.26,
            prev_point: X0.to_vec(),
            prev_jacobian: ex1_jacobian(&X0),
        }
    }

    #[test]
    fn example_beta_and_two_term_direction() {
        let o = OrderingSpec::canonical(2);
        let j1 = ex1_jacobian(&X1);
        let s1 = steepest_from_jacobian(&j1, &o, 1e-12).unwrap();
        let beta = prp_beta(&s1.direction, s1.lambda, &example_state(), &o).unwrap();
        assert!((beta - 0.6966).abs() < 1e-3, "beta = {beta}");
        let d1 = prp_plus_direction(&s1.direction, beta, &D0).unwrap();
        assert!(
            (d1[0] + 0.2649).abs() < 5e-4 && (d1[1] + 0.4870).abs() < 5e-4,
            "{d1:?}"
        );
        let l = lambda(&j1, &d1, &o).unwrap();
        assert!((l - 0.0840).abs() < 5e-4 && l > 0.0);
        assert_eq!(
            prp_plus_direction(&s1.direction, 0.0, &D0).unwrap(),
            s1.direction
        );
    }

    #[test]
    fn example_three_term_direction() {
        // Inputs rounded as stated; oracle values from hand arithmetic:
        // third = 0.6966 * 0.5001 / 0.1811 = 1.92363...,
        // d = ϑ(1 + third) + β d0 = (-0.10420, -1.28958).
        let o = OrderingSpec::canonical(2);
        let theta1 = [0.0835, -0.4173];
        let d = ttprp_direction(&theta1, -0.1811, 0.5001, 0.6966, &D0).unwrap();
        assert!(
            (d[0] + 0.1042).abs() < 1e-4 && (d[1] + 1.2896).abs() < 1e-4,
            "{d:?}"
        );
        let j1 = ex1_jacobian(&X1);
        let l = lambda(&j1, &d, &o).unwrap();
        assert!((l + 0.4245).abs() < 1e-3, "lambda = {l}");
        assert!(l <= lambda(&j1, &theta1, &o).unwrap());
    }

    #[test]
    fn zero_beta_restarts() {
        let s = [0.3, -0.2];
        assert_eq!(
            ttprp_direction(&s, -0.1, 7.0, 0.0, &[5.0, 5.0]).unwrap(),
            s.to_vec()
        );
        assert_eq!(sd_direction(&s), s.to_vec());
        assert_eq!(sd_direction(&[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn zero_step_gives_zero_beta() {
        let o = OrderingSpec::canonical(2);
        let j = ex1_jacobian(&X0);
        let s = steepest_from_jacobian(&j, &o, 1e-12).unwrap();
        let state = DirectionState {
            prev_direction: s.direction.clone(),
            prev_lambda_steepest: s.lambda,
            prev_point: X0.to_vec(),
            prev_jacobian: j,
        };
        assert_eq!(prp_beta(&s.direction, s.lambda, &state, &o).unwrap(), 0.0);
    }

    #[test]
    fn negative_ratio_clamped() {
        // Old Jacobian makes λ(x^{k-1}, ϑ^k) very negative.
        let o = OrderingSpec::canonical(1);
        let state = DirectionState {
            prev_direction: vec![1.0],
            prev_lambda_steepest: -1.0,
            prev_point: vec![0.0],
            prev_jacobian: Matrix::from_rows(&[vec![100.0]]).unwrap(),
        };
        assert_eq!(prp_beta(&[-1.0], -1.0, &state, &o).unwrap(), 0.0);
    }

    #[test]
    fn critical_inputs_rejected() {
        let o = OrderingSpec::canonical(1);
        let state = DirectionState {
            prev_direction: vec![1.0],
            prev_lambda_steepest: 0.0,
            prev_point: vec![0.0],
            prev_jacobian: Matrix::from_rows(&[vec![1.0]]).unwrap(),
        };
        assert!(matches!(
            prp_beta(&[-1.0], -1.0, &state, &o),
            Err(Error::Critical { .. })
        ));
        assert!(matches!(
            ttprp_direction(&[0.0], 0.0, 1.0, 1.0, &[1.0]),
            Err(Error::Critical { .. })
        ));
    }

    #[test]
    fn reduces_to_two_term_when_prev_is_orthogonal() {
        let s = [0.4, -1.0];
        let p = [2.0, 3.0];
        assert_eq!(
            ttprp_direction(&s, -0.7, 0.0, 0.8, &p).unwrap(),
            prp_plus_direction(&s, 0.8, &p).unwrap()
        );
    }

    proptest! {
        #[test]
        fn three_term_is_sufficient_descent(
            (m, n, rows) in (1usize..=5, 1usize..=10).prop_flat_map(|(m, n)| {
                (Just(m), Just(n), prop::collection::vec(prop::collection::vec(-5.0f64..5.0, n), m))
            }),
            prev in prop::collection::vec(-10.0f64..10.0, 10),
            beta in 0.0f64..20.0,
        ) {
            let o = OrderingSpec::canonical(m);
            let jac = Matrix::from_rows(&rows).unwrap();
            let s = steepest_from_jacobian(&jac, &o, 1e-12).unwrap();
            prop_assume!(s.lambda < 0.0);
            let prev = &prev[..n];
            let lp = lambda(&jac, prev, &o).unwrap();
            let d = ttprp_direction(&s.direction, s.lambda, lp, beta, prev).unwrap();
            let ld = lambda(&jac, &d, &o).unwrap();
            prop_assert!(ld <= s.lambda + 1e-9 * (1.0 + ld.abs()));
        }
    }
}
