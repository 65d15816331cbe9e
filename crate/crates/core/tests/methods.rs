use proptest::prelude::*;

use ttprp::bench::{run_experiment, ExperimentSpec, TraceMode};
use ttprp::directions::{prp_beta, ttprp_direction, DirectionState};
use ttprp::linesearch::exact_line_search;
use ttprp::problems::ex1;
use ttprp::scalarize::steepest_from_jacobian;
use ttprp::{
    get_problem, lambda, sample_initial_point, solve, solve_traced_invariant_check, Evaluator,
    Matrix, Method, OrderingSpec, SolverConfig, Variant,
};

fn problem(name: &str) -> ttprp::Problem {
    get_problem(name, Variant::default()).unwrap()
}

#[test]
fn exact_search_on_worked_example() {
    let p = ex1().unwrap();
    let o = OrderingSpec::canonical(2);
    let (x0, d0) = ([1.5, 0.9], [-0.5, -0.1]);
    let mut eval = Evaluator::new(&p);
    let alpha = exact_line_search(&mut eval, &x0, &d0, &o, 10.0).unwrap();
    // The second objective's slope -0.26 + 0.24α vanishes first.
    assert!((alpha - 0.26 / 0.24).abs() < 1e-6, "alpha = {alpha}");
    // The published iterate x1 = x0 + 3.1669 d0 zeroes only the first slope.
    let jac = p.jacobian(&[-0.0835, 0.5833]);
    assert!(lambda(&jac, &d0, &o).unwrap() > 0.4);
}

#[test]
fn recorded_steps_survive_fresh_recheck() {
    for name in ["FDS-1", "Hil1", "MOP7"] {
        let p = problem(name);
        let o = OrderingSpec::canonical(p.m());
        for method in Method::ALL {
            for seed in 0..5 {
                let x0 = sample_initial_point(&p, seed);
                let run = solve(&p, &x0, &SolverConfig::for_method(method), &o).unwrap();
                let bad = solve_traced_invariant_check(&run, &p, &o);
                assert!(bad.is_empty(), "{name} {method} seed {seed}: {bad:?}");
            }
        }
    }
}

#[test]
fn generalized_wolfe_with_mu_equal_sigma_is_the_strong_variant() {
    for name in ["EX1", "Hil1", "MOP5"] {
        let p = problem(name);
        let o = OrderingSpec::canonical(p.m());
        let mut cfg = SolverConfig::for_method(Method::TtPrp);
        cfg.ls_params.mu = cfg.ls_params.sigma;
        for seed in 0..5 {
            let x0 = sample_initial_point(&p, seed);
            let a = solve(&p, &x0, &cfg, &o).unwrap();
            let b = solve(&p, &x0, &SolverConfig::for_method(Method::TtPrp1), &o).unwrap();
            assert_eq!(a.status, b.status);
            assert_eq!(a.final_point, b.final_point, "{name} seed {seed}");
            assert_eq!(a.counters, b.counters);
        }
    }
}

#[test]
fn objectives_decrease_and_counters_grow() {
    let p = problem("SLC2-2");
    let o = OrderingSpec::canonical(p.m());
    for method in Method::ALL {
        let x0 = sample_initial_point(&p, 3);
        let run = solve(&p, &x0, &SolverConfig::for_method(method), &o).unwrap();
        for w in run.trace.windows(2) {
            assert!(
                w[1].objectives
                    .iter()
                    .zip(&w[0].objectives)
                    .all(|(a, b)| a <= b),
                "{method} k={}",
                w[0].k
            );
            assert!(w[1].counters.n_jac_evals > w[0].counters.n_jac_evals);
            assert!(w[1].counters.n_obj_evals > w[0].counters.n_obj_evals);
            assert!(w[1].counters.n_subproblem_solves == w[0].counters.n_subproblem_solves + 1);
            assert!(w[0].theta <= 0.0);
        }
        assert!(run.counters.n_jac_evals as usize >= run.iterations());
    }
}

#[test]
fn methods_share_starting_points() {
    let spec = ExperimentSpec::new(&["EX1", "MOP5"], &Method::ALL, 6, 42);
    let runs = run_experiment(&spec).unwrap();
    assert_eq!(runs.len(), 2 * 6 * 4);
    for group in runs.chunks(4) {
        assert!(group.iter().all(|r| r.x0 == group[0].x0
            && r.start == group[0].start
            && r.problem == group[0].problem));
        let methods: Vec<Method> = group.iter().map(|r| r.method).collect();
        assert_eq!(methods, Method::ALL);
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let mut spec = ExperimentSpec::new(&["FDS-1", "Hil1"], &Method::ALL, 8, 9);
    spec.trace = TraceMode::Verify;
    spec.workers = 1;
    let a = run_experiment(&spec).unwrap();
    spec.workers = 4;
    let b = run_experiment(&spec).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(
            (x.status, x.iterations, x.counters),
            (y.status, y.iterations, y.counters)
        );
        assert_eq!(x.final_point, y.final_point);
        assert!(x.violations.is_empty());
    }
}

fn jacobian(m: usize, n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(prop::collection::vec(-2.0..2.0f64, n), m)
        .prop_map(|rows| Matrix::from_rows(&rows).unwrap())
}

fn direction_case() -> impl Strategy<Value = (Matrix, Matrix, Vec<f64>)> {
    (1usize..=3, 0usize..=2).prop_flat_map(|(m, extra)| {
        let n = m + extra;
        (
            jacobian(m, n),
            jacobian(m, n),
            prop::collection::vec(-3.0..3.0f64, n),
        )
    })
}

proptest! {
    #[test]
    fn three_term_direction_is_sufficient_descent((j_prev, j_new, d_prev) in direction_case()) {
        let o = OrderingSpec::canonical(j_new.rows());
        let prev = steepest_from_jacobian(&j_prev, &o, 1e-12).unwrap();
        let new = steepest_from_jacobian(&j_new, &o, 1e-12).unwrap();
        prop_assume!(prev.lambda < 0.0 && new.lambda < 0.0);
        let state = DirectionState {
            prev_direction: d_prev.clone(),
            prev_lambda_steepest: prev.lambda,
            prev_point: vec![0.0; d_prev.len()],
            prev_jacobian: j_prev,
        };
        let beta = prp_beta(&new.direction, new.lambda, &state, &o).unwrap();
        prop_assert!(beta >= 0.0);
        let lam_prev = lambda(&j_new, &d_prev, &o).unwrap();
        let d = ttprp_direction(&new.direction, new.lambda, lam_prev, beta, &d_prev).unwrap();
        let lam_d = lambda(&j_new, &d, &o).unwrap();
        // Cancellation in d grows with β when λ at the previous point is tiny.
        let spread = (0..j_new.rows())
            .map(|r| j_new.row(r).iter().zip(&d_prev).map(|(a, v)| (a * v).abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let slack = 1e-9 + 64.0 * f64::EPSILON * beta * (lam_prev.abs() + spread);
        prop_assert!(lam_d <= new.lambda + slack, "λ(d) = {lam_d}, λ(ϑ) = {}, β = {beta}", new.lambda);
    }

    #[test]
    fn steepest_satisfies_kkt_identity(j in (1usize..=4, 1usize..=6).prop_flat_map(|(m, n)| jacobian(m, n))) {
        let o = OrderingSpec::canonical(j.rows());
        let s = steepest_from_jacobian(&j, &o, 1e-12).unwrap();
        let nsq: f64 = s.direction.iter().map(|v| v * v).sum();
        prop_assert!((s.lambda + nsq).abs() <= 1e-9 * nsq.max(1.0));
        prop_assert!(s.theta <= 0.0);
        prop_assert!((s.theta - (s.lambda + 0.5 * nsq)).abs() <= 1e-12);
    }
}
