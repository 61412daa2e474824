use dsm_core::bench::{HammersteinProblem, NormConvention};
use dsm_core::linalg::solve_shifted;
use dsm_core::regularized::solve_regularized;
use dsm_core::rng::{point_in_ball, seeded};
use dsm_core::verify::{adjoint_defect, check_monotonicity, fd_derivative_check, BallSampler};
use dsm_core::NonlinearOperator;

fn problem() -> HammersteinProblem {
    HammersteinProblem::weighted(50).unwrap()
}

#[test]
fn monotone_on_seeded_pairs() {
    let p = problem();
    let mut s = BallSampler::new(p.grid().zeros(), 5.0, 11).unwrap();
    let r = check_monotonicity(&p, &mut s, 100, 1e-12).unwrap();
    assert!(r.passed, "{r:?}");
    assert!(r.min_value >= -1e-12);
}

#[test]
fn derivative_matches_central_differences() {
    let p = problem();
    assert!(fd_derivative_check(&p, &p.exact_solution(), 10, 1e-6, 0).unwrap() <= 1e-6);
    let mut rng = seeded(5);
    for k in 0..5 {
        let u = point_in_ball(&mut rng, &p.exact_solution(), 2.0);
        let err = fd_derivative_check(&p, &u, 10, 1e-6, k).unwrap();
        assert!(err <= 1e-6, "base point {k}: {err}");
    }
}

#[test]
fn derivative_adjoint_consistent() {
    let p = problem();
    let mut rng = seeded(9);
    for k in 0..5 {
        let u = point_in_ball(&mut rng, &p.grid().zeros(), 3.0);
        let jac = p.derivative(&u).unwrap();
        assert!(adjoint_defect(jac.as_ref(), 20, k) <= 1e-10);
    }
}

#[test]
fn shifted_solve_on_kernel() {
    let p = problem();
    let jac = p.derivative(&p.grid().zeros()).unwrap();
    let rhs = p.exact_rhs();
    let a = 0.1;
    let x = solve_shifted(jac.as_ref(), a, &rhs, 1e-12).unwrap();
    let mut r = jac.apply(&x);
    r.axpy(a, &x);
    let rel = r.sub(&rhs).norm() / rhs.norm();
    assert!(rel <= 1e-10, "{rel}");
    assert!(x.norm() <= rhs.norm() / a * (1.0 + 1e-8));
}

#[test]
fn regularized_solution_near_exact_for_small_a() {
    let p = problem();
    let f = p.exact_rhs();
    let sol = solve_regularized(&p, &f, 1e-4, None, None).unwrap();
    let y = p.exact_solution();
    assert!(sol.v.distance(&y) / y.norm() <= 1e-3);
}

#[test]
fn regularized_lower_bound_on_pairs() {
    // max(‖F(u) − F(v)‖, a‖u − v‖) ≤ ‖F(u) − F(v) + a(u − v)‖
    let p = problem();
    let mut s = BallSampler::new(p.exact_solution(), 3.0, 21).unwrap();
    for (k, a) in [1e-3, 1e-2, 1e-1, 1.0, 10.0].into_iter().cycle().take(100).enumerate() {
        let (u, v) = s.next_pair();
        let df = p.apply(&u).sub(&p.apply(&v));
        let d = u.sub(&v);
        let mut shifted = df.clone();
        shifted.axpy(a, &d);
        let rhs = shifted.norm() * (1.0 + 1e-10);
        assert!(df.norm() <= rhs, "pair {k}");
        assert!(a * d.norm() <= rhs, "pair {k}");
    }
}

#[test]
fn norm_conventions_share_kernel_values() {
    let w = HammersteinProblem::new(20, NormConvention::WeightedL2).unwrap();
    let e = HammersteinProblem::new(20, NormConvention::Euclidean).unwrap();
    assert_eq!(w.kernel().matrix(), e.kernel().matrix());
}
