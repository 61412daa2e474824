//! Newton-type iteration on the Hammerstein benchmark over a list of noise
//! levels, summarized by seed medians.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::hammerstein::HammersteinProblem;
use crate::bench::noise::NoiseSpec;
use crate::bench::NormConvention;
use crate::error::{Error, Result};
use crate::iterations::{iter_newton, IterConfig};
use crate::schedules::sweep_schedule;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub delta_rels: Vec<f64>,
    pub n_nodes: usize,
    /// Scale in `a_n = C0 δ^0.99/(n + 1)`.
    pub c0: f64,
    /// Stopping constant in `‖F(u_n) − f_δ‖ ≤ C δ^γ`.
    pub c: f64,
    pub gamma: f64,
    pub seeds: Vec<u64>,
    pub norm: NormConvention,
    pub n_max: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            delta_rels: vec![0.05, 0.03, 0.02, 0.01, 0.003, 0.001],
            n_nodes: 50,
            c0: 4.0,
            c: 1.01,
            gamma: 0.99,
            seeds: (0..10).collect(),
            norm: NormConvention::Euclidean,
            n_max: 10_000,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.delta_rels.is_empty() || self.delta_rels.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
            return bad("delta_rels must be nonempty with entries in (0, 1)".into());
        }
        if self.n_nodes < 2 {
            return bad(format!("n_nodes = {} must be >= 2", self.n_nodes));
        }
        if !(self.c0 > 0.0) {
            return bad(format!("C0 = {} must be > 0", self.c0));
        }
        if !(self.c > 1.0) {
            return bad(format!("C = {} must exceed 1", self.c));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma = {} must lie in (0, 1]", self.gamma));
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub delta: f64,
    pub n_iterations: usize,
    pub rel_error: f64,
    pub residual_at_stop: f64,
    pub a_at_stop: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta_rel: f64,
    /// Medians over the successful seeds.
    pub n_iterations: f64,
    pub rel_error: f64,
    pub residual_at_stop: f64,
    pub a_at_stop: f64,
    pub seed_count: usize,
    pub runs: Vec<SeedRun>,
    /// `(seed, error message)` for runs that did not stop.
    pub failures: Vec<(u64, String)>,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// One run: `f = F(1)`, noisy data from `seed`, Newton-type iteration from
/// `u0 = 0`.
pub fn run_single(
    problem: &HammersteinProblem,
    cfg: &SweepConfig,
    delta_rel: f64,
    seed: u64,
) -> Result<SeedRun> {
    let noisy = problem.clone().noisy(&NoiseSpec { delta_rel, seed })?;
    let schedule = sweep_schedule(cfg.c0, noisy.delta)?;
    let mut icfg = IterConfig::new(cfg.c, cfg.gamma, schedule);
    icfg.n_max = Some(cfg.n_max);
    let u0 = noisy.op.exact_solution().scale(0.0);
    let report = iter_newton(&noisy.op, &noisy.f_delta, noisy.delta, &icfg, &u0)?;
    Ok(SeedRun {
        seed,
        delta: noisy.delta,
        n_iterations: report.n_stop.unwrap_or(report.steps),
        rel_error: noisy
            .relative_error(&report.u_final)
            .expect("exact solution known"),
        residual_at_stop: report.residual_at_stop,
        a_at_stop: report.a_at_stop,
    })
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let problem = HammersteinProblem::new(cfg.n_nodes, cfg.norm)?;
    let jobs: Vec<(usize, u64)> = (0..cfg.delta_rels.len())
        .flat_map(|i| cfg.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let results: Vec<(usize, u64, Result<SeedRun>)> = jobs
        .par_iter()
        .map(|&(i, s)| (i, s, run_single(&problem, cfg, cfg.delta_rels[i], s)))
        .collect();
    let mut rows = Vec::with_capacity(cfg.delta_rels.len());
    for (i, &delta_rel) in cfg.delta_rels.iter().enumerate() {
        let mut runs = Vec::new();
        let mut failures = Vec::new();
        for (j, s, r) in &results {
            if *j != i {
                continue;
            }
            match r {
                Ok(run) => runs.push(run.clone()),
                Err(e) => failures.push((*s, e.to_string())),
            }
        }
        let med = |f: fn(&SeedRun) -> f64| median(&mut runs.iter().map(f).collect::<Vec<_>>());
        rows.push(SweepRow {
            delta_rel,
            n_iterations: med(|r| r.n_iterations as f64),
            rel_error: med(|r| r.rel_error),
            residual_at_stop: med(|r| r.residual_at_stop),
            a_at_stop: med(|r| r.a_at_stop),
            seed_count: runs.len(),
            runs,
            failures,
        });
    }
    Ok(rows)
}
