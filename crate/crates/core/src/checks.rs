//! Fast self-test battery: Jacobian consistency of every registered problem,
//! the simplex QP against exhaustive face enumeration, and the worked
//! two-objective example.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::directions::{prp_beta, prp_plus_direction, ttprp_direction, DirectionState};
use crate::error::{Error, Result};
use crate::linalg::{dot, solve_dense, Matrix};
use crate::ordering::OrderingSpec;
use crate::problem::{check_jacobian, Problem, VectorFunction};
use crate::problems::{all_problems, ex1, get_problem, Variant};
use crate::scalarize::{lambda, steepest_from_jacobian};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    /// `group:subject`, e.g. `jacobian:FDS-1`.
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Deliberate defects for exercising the battery.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fault {
    /// Perturbs one Jacobian entry of the named problem.
    CorruptJacobian(String),
}

impl std::str::FromStr for Fault {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some(("jacobian", name)) => {
                get_problem(name, Variant::default())?;
                Ok(Fault::CorruptJacobian(name.to_string()))
            }
            _ => Err(Error::InvalidInput(format!(
                "unknown fault `{s}`; expected jacobian:<problem>"
            ))),
        }
    }
}

struct Corrupted(Arc<dyn VectorFunction>);

impl VectorFunction for Corrupted {
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        self.0.eval(x, out)
    }
    fn jacobian(&self, x: &[f64], jac: &mut Matrix) {
        self.0.jacobian(x, jac);
        let v = jac.get(0, 0);
        jac.set(0, 0, 1.1 * v + 0.5);
    }
}

/// Runs every check whose name contains `filter`.
pub fn run_checks(filter: Option<&str>, fault: Option<&Fault>) -> Vec<CheckOutcome> {
    let wanted = |name: &str| filter.is_none_or(|f| name.contains(f));
    let mut out = Vec::new();

    for p in all_problems() {
        let name = format!("jacobian:{}", p.name());
        if !wanted(&name) {
            continue;
        }
        let p = match fault {
            Some(Fault::CorruptJacobian(target)) if target == p.name() => {
                p.with_function(Arc::new(Corrupted(p.function().clone())))
            }
            _ => p,
        };
        out.push(jacobian_check(&p, name));
    }

    for (m, n) in [(1, 3), (2, 2), (2, 3), (3, 2), (3, 3)] {
        let name = format!("qp:m{m}n{n}");
        if wanted(&name) {
            out.push(qp_check(m, n, 50, name));
        }
    }

    let name = "example:two-objective".to_string();
    if wanted(&name) {
        out.push(match example_check() {
            Ok(()) => CheckOutcome {
                name,
                passed: true,
                detail: "all reference values reproduced".into(),
            },
            Err(detail) => CheckOutcome {
                name,
                passed: false,
                detail,
            },
        });
    }
    out
}

fn jacobian_check(p: &Problem, name: String) -> CheckOutcome {
    let samples = if p.n() > 200 { 3 } else { 20 };
    let bad = check_jacobian(p, samples, 0x5eed, 1e-5, 1e-7);
    CheckOutcome {
        name,
        passed: bad.is_empty(),
        detail: match bad.first() {
            None => format!("{samples} points agree with finite differences"),
            Some(b) => format!(
                "{} mismatches; first at row {} col {}: analytic {:e} vs numeric {:e}",
                bad.len(),
                b.row,
                b.col,
                b.analytic,
                b.numeric
            ),
        },
    }
}

/// Minimizes `wᵀGw` over the unit simplex by solving the equality-constrained
/// problem on every face and keeping the best feasible candidate.
pub fn simplex_qp_by_enumeration(gram: &Matrix) -> Vec<f64> {
    let k = gram.rows();
    let mut best = (f64::INFINITY, vec![1.0 / k as f64; k]);
    for mask in 1u32..(1 << k) {
        let idx: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let s = idx.len();
        let mut a = Matrix::zeros(s + 1, s + 1);
        let mut b = vec![0.0; s + 1];
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                a.set(r, c, gram.get(i, j));
            }
            a.set(r, s, 1.0);
            a.set(s, r, 1.0);
        }
        b[s] = 1.0;
        let Some(sol) = solve_dense(a, b) else {
            continue;
        };
        if sol[..s].iter().any(|w| *w < -1e-12) {
            continue;
        }
        let mut w = vec![0.0; k];
        for (r, &i) in idx.iter().enumerate() {
            w[i] = sol[r].max(0.0);
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        let val = dot(&w, &gram.mul_vec(&w));
        if val < best.0 {
            best = (val, w);
        }
    }
    best.1
}

fn qp_check(m: usize, n: usize, instances: usize, name: String) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64((m * 10 + n) as u64);
    let ordering = OrderingSpec::canonical(m);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let rows: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let jac = Matrix::from_rows(&rows).expect("rectangular");
        let got = match steepest_from_jacobian(&jac, &ordering, 1e-12) {
            Ok(s) => s,
            Err(e) => {
                return CheckOutcome {
                    name,
                    passed: false,
                    detail: e.to_string(),
                }
            }
        };
        let mut gram = Matrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                gram.set(i, j, dot(&rows[i], &rows[j]));
            }
        }
        let w = simplex_qp_by_enumeration(&gram);
        let reference = jac.tr_mul_vec(&w).iter().map(|v| -v).collect::<Vec<_>>();
        let ref_theta =
            lambda(&jac, &reference, &ordering).unwrap() + 0.5 * dot(&reference, &reference);
        let ref_theta = ref_theta.min(0.0);
        let dir_err = got
            .direction
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(dir_err).max((got.theta - ref_theta).abs());
    }
    CheckOutcome {
        name,
        passed: worst <= 1e-8,
        detail: format!("{instances} instances, worst deviation {worst:e}"),
    }
}

fn close(what: &str, got: f64, want: f64, tol: f64) -> std::result::Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{what}: got {got}, expected {want} ± {tol}"))
    }
}

/// Reference values of the two-objective example at the published iterate
/// `x1 = (-0.0835, 0.5833)` reached from `x0 = (1.5, 0.9)` along `(-0.5, -0.1)`.
fn example_check() -> std::result::Result<(), String> {
    let p = ex1().map_err(|e| e.to_string())?;
    let o = OrderingSpec::canonical(2);
    let (x0, x1, d0) = ([1.5, 0.9], [-0.0835, 0.5833], vec![-0.5, -0.1]);
    let j0 = p.jacobian(&x0);
    let j1 = p.jacobian(&x1);
    let s0 = steepest_from_jacobian(&j0, &o, 1e-12).map_err(|e| e.to_string())?;
    let s1 = steepest_from_jacobian(&j1, &o, 1e-12).map_err(|e| e.to_string())?;
    close("steepest(x0)[0]", s0.direction[0], -0.5, 1e-8)?;
    close("steepest(x0)[1]", s0.direction[1], -0.1, 1e-8)?;
    close("steepest(x1)[0]", s1.direction[0], 0.0835, 5e-4)?;
    close("steepest(x1)[1]", s1.direction[1], -0.4173, 5e-4)?;
    let state = DirectionState {
        prev_direction: d0.clone(),
        prev_lambda_steepest: s0.lambda,
        prev_point: x0.to_vec(),
        prev_jacobian: j0,
    };
    let beta = prp_beta(&s1.direction, s1.lambda, &state, &o).map_err(|e| e.to_string())?;
    close("beta", beta, 0.6966, 1e-3)?;
    let d_plus = prp_plus_direction(&s1.direction, beta, &d0).map_err(|e| e.to_string())?;
    close("prp+ direction[0]", d_plus[0], -0.2649, 5e-4)?;
    close("prp+ direction[1]", d_plus[1], -0.4870, 5e-4)?;
    let lam_plus = lambda(&j1, &d_plus, &o).map_err(|e| e.to_string())?;
    close("lambda(x1, prp+ direction)", lam_plus, 0.0840, 5e-4)?;
    let lam_prev = lambda(&j1, &d0, &o).map_err(|e| e.to_string())?;
    let d_tt = ttprp_direction(&s1.direction, s1.lambda, lam_prev, beta, &d0)
        .map_err(|e| e.to_string())?;
    let lam_tt = lambda(&j1, &d_tt, &o).map_err(|e| e.to_string())?;
    if !(lam_tt <= s1.lambda) {
        return Err(format!(
            "three-term direction not sufficiently descent: {lam_tt} > {}",
            s1.lambda
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pristine_battery_passes() {
        let out = run_checks(None, None);
        assert!(
            out.iter().all(|c| c.passed),
            "{:?}",
            out.iter().filter(|c| !c.passed).collect::<Vec<_>>()
        );
        assert!(out.len() > 20);
    }

    #[test]
    fn filter_selects_group() {
        let out = run_checks(Some("qp"), None);
        assert!(!out.is_empty() && out.iter().all(|c| c.name.starts_with("qp:")));
    }

    #[test]
    fn corrupted_jacobian_is_caught() {
        let fault: Fault = "jacobian:FDS-1".parse().unwrap();
        let out = run_checks(Some("jacobian:FDS"), Some(&fault));
        let bad: Vec<_> = out.iter().filter(|c| !c.passed).collect();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].name, "jacobian:FDS-1");
        assert!("jacobian:NOPE".parse::<Fault>().is_err());
    }
}
