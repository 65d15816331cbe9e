//! `min ½ wᵀGw` over the unit simplex, for a small PSD Gram matrix `G`.
//!
//! Wolfe's minimum-norm-point active-set method, written in terms of `G`
//! only, solves the problem exactly on a sequence of faces. If it stalls
//! through rounding, projected gradient takes over: sort-based Euclidean
//! projection, fixed step `1/L` with `L` a bound on the largest eigenvalue
//! of `G`, and every few iterations an exact solve on the current support
//! that is kept only if it is feasible and lowers the duality gap.
//!
//! A solution is accepted once its relative gap is below the tolerance, or
//! once the absolute gap is below the rounding error already present in the
//! Gram entries it is computed from.

use crate::error::{Error, Result};
use crate::linalg::{dot, solve_dense, Matrix};

const POLISH_EVERY: usize = 10;
const ROUNDING: f64 = 16.0;
const RIDGE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexQpSolution {
    pub weights: Vec<f64>,
    /// Frank-Wolfe gap `wᵀGw - min_j (Gw)_j` divided by `max(1, wᵀGw)`.
    pub residual: f64,
    pub iterations: usize,
}

/// Euclidean projection onto `{w >= 0, Σ w = 1}`.
pub fn project_simplex(v: &mut [f64]) {
    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            tau = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - tau).max(0.0);
    }
}

/// Relative duality gap of `w`, returned with `Gw` and whether the gap is
/// below `tol` or below the rounding level of the Gram entries involved.
fn gap(gram: &Matrix, w: &[f64], tol: f64) -> (f64, bool, Vec<f64>) {
    let g = gram.mul_vec(w);
    let quad = dot(w, &g);
    let (jmin, min) = g
        .iter()
        .copied()
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |acc, (j, v)| if v < acc.1 { (j, v) } else { acc },
        );
    let raw = (quad - min).max(0.0);
    let res = raw / quad.max(1.0);
    // Entries of G carry errors of order eps * |a_i| * |a_j|.
    let spread: f64 = w
        .iter()
        .enumerate()
        .map(|(i, wi)| wi * gram.get(i, i).sqrt())
        .sum();
    let floor = ROUNDING * f64::EPSILON * spread * spread.max(gram.get(jmin, jmin).sqrt());
    (res, res <= tol || raw <= floor, g)
}

/// Minimizer of `αᵀG_SSα` subject to `Σ α = 1` on the index set `set`.
fn affine_min(gram: &Matrix, set: &[usize]) -> Option<Vec<f64>> {
    let k = set.len();
    if k == 1 {
        return Some(vec![1.0]);
    }
    // Eliminate the weight of the shortest atom r: α_r = 1 - Σ μ_i, leaving
    // normal equations in the differences a_i - a_r.
    let r = (0..k).min_by(|&a, &b| {
        gram.get(set[a], set[a])
            .total_cmp(&gram.get(set[b], set[b]))
    })?;
    let others: Vec<usize> = (0..k).filter(|&a| a != r).collect();
    let gr = |i: usize, j: usize| gram.get(set[i], set[j]);
    let mut normal = Matrix::zeros(k - 1, k - 1);
    let mut rhs = vec![0.0; k - 1];
    for (p, &i) in others.iter().enumerate() {
        for (q, &j) in others.iter().enumerate() {
            normal.set(p, q, gr(i, j) - gr(i, r) - gr(r, j) + gr(r, r));
        }
        rhs[p] = gr(r, r) - gr(i, r);
    }
    // Jacobi scaling keeps atoms of wildly different lengths solvable.
    let scale: Vec<f64> = (0..k - 1)
        .map(|p| {
            let d = normal.get(p, p);
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    for p in 0..k - 1 {
        for q in 0..k - 1 {
            normal.set(p, q, normal.get(p, q) * scale[p] * scale[q]);
        }
        rhs[p] *= scale[p];
    }
    // A nearly affinely dependent set gets a tiny ridge instead of failing.
    let mu = solve_dense(normal.clone(), rhs.clone()).or_else(|| {
        for p in 0..k - 1 {
            normal.set(p, p, normal.get(p, p) + RIDGE);
        }
        solve_dense(normal, rhs)
    })?;
    let mut alpha = vec![0.0; k];
    let mut rest = 1.0;
    for (p, &i) in others.iter().enumerate() {
        alpha[i] = mu[p] * scale[p];
        rest -= alpha[i];
    }
    alpha[r] = rest;
    alpha.iter().all(|v| v.is_finite()).then_some(alpha)
}

/// Exact minimizer restricted to the support of `w`, if it is feasible.
fn polish(gram: &Matrix, w: &[f64]) -> Option<Vec<f64>> {
    let support: Vec<usize> = (0..w.len()).filter(|&j| w[j] > 0.0).collect();
    if support.len() < 2 {
        return None;
    }
    let sol = affine_min(gram, &support)?;
    if sol.iter().any(|&v| !(v >= 0.0)) {
        return None;
    }
    let mut out = vec![0.0; w.len()];
    for (a, &i) in support.iter().enumerate() {
        out[i] = sol[a];
    }
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= s);
    Some(out)
}

/// Wolfe's minimum-norm-point iteration. `None` when rounding breaks the
/// active-set logic before the gap reaches `tol`.
fn min_norm_point(gram: &Matrix, tol: f64) -> Option<SimplexQpSolution> {
    let m = gram.rows();
    let first = (0..m).min_by(|&a, &b| gram.get(a, a).total_cmp(&gram.get(b, b)))?;
    let mut set = vec![first];
    let mut w = vec![0.0; m];
    w[first] = 1.0;
    for it in 0..(20 * m + 100) {
        let (res, done, g) = gap(gram, &w, tol);
        if done {
            return Some(SimplexQpSolution {
                weights: w,
                residual: res,
                iterations: it,
            });
        }
        let entering = (0..m).min_by(|&a, &b| g[a].total_cmp(&g[b]))?;
        if set.contains(&entering) {
            return None;
        }
        set.push(entering);
        loop {
            let alpha = affine_min(gram, &set)?;
            if alpha.iter().all(|&a| a > 0.0) {
                for (a, &i) in set.iter().enumerate() {
                    w[i] = alpha[a];
                }
                break;
            }
            // Move toward the affine minimizer until a weight hits zero.
            let mut theta = f64::INFINITY;
            let mut leaving = 0;
            for (a, &i) in set.iter().enumerate() {
                if alpha[a] <= 0.0 {
                    let t = w[i] / (w[i] - alpha[a]);
                    if t < theta {
                        theta = t;
                        leaving = a;
                    }
                }
            }
            for (a, &i) in set.iter().enumerate() {
                w[i] += theta * (alpha[a] - w[i]);
            }
            w[set[leaving]] = 0.0;
            set.retain(|&i| w[i] > 0.0);
            for (j, wj) in w.iter_mut().enumerate() {
                if !set.contains(&j) {
                    *wj = 0.0;
                }
            }
            if set.is_empty() {
                return None;
            }
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
    }
    None
}

/// Solves the simplex-constrained QP to relative gap `tol`, giving up after
/// `max_iter` projected-gradient steps.
pub fn solve_simplex_qp(gram: &Matrix, tol: f64, max_iter: usize) -> Result<SimplexQpSolution> {
    let m = gram.rows();
    if m == 0 || gram.cols() != m {
        return Err(Error::DimensionMismatch(format!(
            "Gram matrix is {}x{}",
            gram.rows(),
            gram.cols()
        )));
    }
    let w = vec![1.0 / m as f64; m];
    if m == 1 {
        return Ok(SimplexQpSolution {
            weights: w,
            residual: 0.0,
            iterations: 0,
        });
    }
    // Gershgorin bound on the spectral radius.
    let lip = (0..m)
        .map(|i| gram.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if lip == 0.0 {
        return Ok(SimplexQpSolution {
            weights: w,
            residual: 0.0,
            iterations: 0,
        });
    }
    if let Some(sol) = min_norm_point(gram, tol) {
        return Ok(sol);
    }
    projected_gradient(gram, tol, max_iter, lip)
}

fn projected_gradient(
    gram: &Matrix,
    tol: f64,
    max_iter: usize,
    lip: f64,
) -> Result<SimplexQpSolution> {
    let m = gram.rows();
    let mut w = vec![1.0 / m as f64; m];
    let eta = 1.0 / lip;

    let (mut res, mut done, mut g) = gap(gram, &w, tol);
    let mut best = (res, w.clone());
    for it in 0..max_iter {
        if done {
            return Ok(SimplexQpSolution {
                weights: w,
                residual: res,
                iterations: it,
            });
        }
        for (wj, gj) in w.iter_mut().zip(&g) {
            *wj -= eta * gj;
        }
        project_simplex(&mut w);
        (res, done, g) = gap(gram, &w, tol);

        if it % POLISH_EVERY == 0 {
            if let Some(p) = polish(gram, &w) {
                let (pres, pdone, pg) = gap(gram, &p, tol);
                if pres < res {
                    w = p;
                    res = pres;
                    done = pdone;
                    g = pg;
                }
            }
        }
        if res < best.0 {
            best = (res, w.clone());
        }
    }
    if done {
        return Ok(SimplexQpSolution {
            weights: w,
            residual: res,
            iterations: max_iter,
        });
    }
    Err(Error::SubproblemFailed {
        iterations: max_iter,
        residual: best.0,
        weights: best.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn projection_known_values() {
        let mut v = vec![0.5, 0.5];
        project_simplex(&mut v);
        assert_eq!(v, vec![0.5, 0.5]);
        let mut v = vec![2.0, 0.0];
        project_simplex(&mut v);
        assert_eq!(v, vec![1.0, 0.0]);
        let mut v = vec![1.0, 1.0, 1.0];
        project_simplex(&mut v);
        for x in v {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn vertex_solution() {
        // a1 = (1, 0), a2 = (2, 1): the nearest hull point to 0 is a1.
        let g = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 5.0]]).unwrap();
        let s = solve_simplex_qp(&g, 1e-12, 10_000).unwrap();
        assert!((s.weights[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn edge_solution() {
        // a1 = (1, 1), a2 = (-1, 1): nearest point is (0, 1) at w = (½, ½).
        let g = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let s = solve_simplex_qp(&g, 1e-12, 10_000).unwrap();
        assert!((s.weights[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn iteration_cap_reports_best_iterate() {
        let g = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 5.0]]).unwrap();
        match projected_gradient(&g, 1e-12, 0, 7.0) {
            Err(Error::SubproblemFailed { weights, .. }) => assert_eq!(weights, vec![0.5, 0.5]),
            other => panic!("expected failure, got {other:?}"),
        }
        let s = projected_gradient(&g, 1e-12, 10_000, 7.0).unwrap();
        assert!((s.weights[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_atom_lengths() {
        // a1 = (1, 0), a2 = (-1e12, 1): the hull passes within ~1e-12 of 0.
        let g = Matrix::from_rows(&[vec![1.0, -1e12], vec![-1e12, 1e24 + 1.0]]).unwrap();
        let s = solve_simplex_qp(&g, 1e-12, 10).unwrap();
        let w2 = s.weights[1];
        assert!((w2 - 1.0 / (1.0 + 1e12)).abs() < 1e-20, "{w2:e}");
    }

    #[test]
    fn opposed_atoms_converge_to_rounding_level() {
        // Nearly antiparallel gradients of size ~1e2 leave a gap near eps * |G|.
        let g = Matrix::from_rows(&[vec![10913.45, -10976.24], vec![-10976.24, 11039.38]]).unwrap();
        let s = solve_simplex_qp(&g, 1e-12, 100).unwrap();
        assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn matches_projected_gradient(rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 2..6)) {
            let m = rows.len();
            let mut g = Matrix::zeros(m, m);
            for i in 0..m {
                for j in 0..m {
                    g.set(i, j, dot(&rows[i], &rows[j]));
                }
            }
            let lip = (0..m).map(|i| g.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
            let a = solve_simplex_qp(&g, 1e-12, 100_000).unwrap();
            let b = projected_gradient(&g, 1e-10, 1_000_000, lip).unwrap();
            let qa = dot(&a.weights, &g.mul_vec(&a.weights));
            let qb = dot(&b.weights, &g.mul_vec(&b.weights));
            prop_assert!(qa <= qb + 1e-9, "{qa} vs {qb}");
        }
    }

    proptest! {
        #[test]
        fn projection_lands_on_simplex(v in prop::collection::vec(-10.0f64..10.0, 1..8)) {
            let mut w = v.clone();
            project_simplex(&mut w);
            prop_assert!(w.iter().all(|&x| x >= 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            // Idempotent.
            let mut again = w.clone();
            project_simplex(&mut again);
            for (a, b) in w.iter().zip(&again) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
