#![allow(dead_code)]

use dsm_core::bench::{HammersteinProblem, NoiseSpec, NoisyProblem, NormConvention};
use dsm_core::schedules::{
    search_continuous_d, search_discrete_d0, search_lambda, ContinuousKind, ContinuousSchedule,
    DiscreteKind, DiscreteSchedule, ValidationParams,
};
use dsm_core::NonlinearOperator;

pub fn weighted(n: usize, delta_rel: f64, seed: u64) -> NoisyProblem<HammersteinProblem> {
    HammersteinProblem::new(n, NormConvention::WeightedL2)
        .unwrap()
        .noisy(&NoiseSpec { delta_rel, seed })
        .unwrap()
}

/// Validator inputs for the benchmark with `c0 = c1 = 0.1`.
pub fn params(noisy: &NoisyProblem<HammersteinProblem>, horizon: f64) -> ValidationParams {
    ValidationParams {
        m1: noisy.op.bounds().m1.unwrap(),
        c0: 0.1,
        c1: 0.1,
        lambda: 1.0,
        y_norm: noisy.op.exact_solution().norm(),
        residual0: noisy.f_delta.norm(),
        horizon,
        alpha_tilde: 0.0,
        g0: 0.0,
    }
}

/// Smallest admissible `λ`, then the smallest `d` for it.
pub fn continuous_schedule(
    noisy: &NoisyProblem<HammersteinProblem>,
    kind: ContinuousKind,
    b: f64,
    c: f64,
) -> (ContinuousSchedule, f64) {
    let p = params(noisy, 1e4);
    let (lambda, _) = search_lambda(p.clone(), |q| search_continuous_d(kind, b, c, q).map(|r| r.1)).unwrap();
    let (s, _) = search_continuous_d(kind, b, c, &ValidationParams { lambda, ..p }).unwrap();
    (s, lambda)
}

pub fn discrete_schedule(
    noisy: &NoisyProblem<HammersteinProblem>,
    kind: DiscreteKind,
    b: f64,
    d: f64,
    alpha_tilde: f64,
) -> (DiscreteSchedule, f64) {
    let p = ValidationParams {
        alpha_tilde,
        ..params(noisy, 1e4)
    };
    let (lambda, _) = search_lambda(p.clone(), |q| search_discrete_d0(kind, b, d, q).map(|r| r.1)).unwrap();
    let (s, _) = search_discrete_d0(kind, b, d, &ValidationParams { lambda, ..p }).unwrap();
    (s, lambda)
}
