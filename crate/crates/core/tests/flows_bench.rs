mod common;

use rand::Rng;

use dsm_core::flows::{euler_step, init_u0, run_flow, FlowConfig, FlowMethod};
use dsm_core::iterations::newton_step;
use dsm_core::regularized::solve_regularized;
use dsm_core::rng::{point_in_ball, seeded};
use dsm_core::schedules::ContinuousKind;
use dsm_core::NonlinearOperator;

use common::{continuous_schedule, weighted};

#[test]
fn newton_flow_on_benchmark_tracks_regularized_path() {
    let noisy = weighted(50, 0.01, 0);
    let (s, lambda) = continuous_schedule(&noisy, ContinuousKind::NewtonFlow, 1.0, 7.0);
    let cfg = FlowConfig::new(1.5, 0.9, s);
    let r = run_flow(FlowMethod::Newton, &noisy.op, &noisy.f_delta, noisy.delta, &cfg, &noisy.op.grid().zeros())
        .unwrap();
    assert!(r.stopped());
    assert!(r.residual_at_stop <= r.threshold);
    let hist = &r.residual_history;
    assert!(hist[..hist.len() - 1].iter().all(|&(_, x)| x > r.threshold));
    assert!(hist.iter().all(|&(_, x)| x > 0.0));
    for w in hist.windows(2) {
        assert!(w[1].1 <= w[0].1 * (1.0 + 1e-12));
    }
    assert!(noisy.relative_error(&r.u_final).unwrap() <= 0.1);
    let a = s.a(r.t_stop.unwrap());
    let v = solve_regularized(&noisy.op, &noisy.f_delta, a, Some(1e-12), None).unwrap();
    let gap = r.u_final.distance(&v.v);
    assert!(gap <= 1.5 * a / lambda, "{gap} vs {}", a / lambda);
}

#[test]
fn gradient_flow_on_benchmark() {
    // ζ = 0.65 keeps the b = 1/4 decay to the stopping level within ~1e5 steps.
    let noisy = weighted(20, 0.01, 0);
    let (s, _) = continuous_schedule(&noisy, ContinuousKind::GradientFlow, 0.25, 1.0);
    let cfg = FlowConfig::new(1.5, 0.65, s);
    let r = run_flow(FlowMethod::Gradient, &noisy.op, &noisy.f_delta, noisy.delta, &cfg, &noisy.op.grid().zeros())
        .unwrap();
    assert!(r.stopped());
    assert!(r.residual_at_stop <= r.threshold);
    assert!(noisy.relative_error(&r.u_final).unwrap() <= 0.1);
}

#[test]
fn simple_flow_on_benchmark() {
    let noisy = weighted(50, 0.01, 0);
    let (s, _) = continuous_schedule(&noisy, ContinuousKind::SimpleFlow, 0.5, 1.0);
    let cfg = FlowConfig::new(1.5, 0.9, s);
    let r = run_flow(FlowMethod::Simple, &noisy.op, &noisy.f_delta, noisy.delta, &cfg, &noisy.op.grid().zeros())
        .unwrap();
    assert!(r.stopped());
    assert!(noisy.relative_error(&r.u_final).unwrap() <= 0.1);
}

#[test]
fn newton_flow_error_decreases_with_noise() {
    let mut errs = Vec::new();
    for delta_rel in [3e-2, 1e-2, 3e-3, 1e-3] {
        let noisy = weighted(50, delta_rel, 3);
        let (s, _) = continuous_schedule(&noisy, ContinuousKind::NewtonFlow, 1.0, 7.0);
        let cfg = FlowConfig::new(1.5, 0.9, s);
        let r = run_flow(FlowMethod::Newton, &noisy.op, &noisy.f_delta, noisy.delta, &cfg, &noisy.op.grid().zeros())
            .unwrap();
        assert!(r.stopped());
        errs.push(noisy.relative_error(&r.u_final).unwrap());
    }
    for w in errs.windows(2) {
        assert!(w[1] < w[0], "{errs:?}");
    }
}

#[test]
fn unit_euler_step_equals_newton_iterate_on_benchmark() {
    let noisy = weighted(50, 0.01, 1);
    let mut rng = seeded(77);
    for _ in 0..20 {
        let u = point_in_ball(&mut rng, &noisy.op.exact_solution(), 2.0);
        let a = 10f64.powf(rng.random_range(-3.0..0.0));
        let e = euler_step(FlowMethod::Newton, &noisy.op, &noisy.f_delta, a, &u, 1.0).unwrap();
        let n = newton_step(&noisy.op, &noisy.f_delta, a, &u).unwrap();
        assert!(e.distance(&n) <= 1e-12);
    }
}

#[test]
fn initial_point_on_benchmark() {
    let noisy = weighted(50, 0.01, 2);
    let (s, _) = continuous_schedule(&noisy, ContinuousKind::NewtonFlow, 1.0, 7.0);
    let a0 = s.a(0.0);
    let p = init_u0(&noisy.op, &noisy.f_delta, a0).unwrap();
    let mut h = noisy.op.apply(&p.u0);
    h.axpy(a0, &p.u0);
    h.axpy(-1.0, &noisy.f_delta);
    let v = solve_regularized(&noisy.op, &noisy.f_delta, a0, Some(1e-13), None).unwrap();
    assert!(h.norm() <= 0.25 * a0 * v.v.norm());
}
