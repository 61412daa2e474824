//! JSON experiment configuration. Every section is optional; unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dsm_core::bench::{gen_noise, HammersteinProblem, NoiseSpec, NormConvention, RankOneProblem, SyntheticMonotone};
use dsm_core::inequalities::{ContinuousInstance, DiscreteInstance};
use dsm_core::{HilbertVector, NonlinearOperator};

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Option<ProblemConfig>,
    pub method: Option<Method>,
    pub delta_rels: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub dp: DpSection,
    #[serde(default)]
    pub stop: StopSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub validation: ValidationSection,
    #[serde(default)]
    pub bench: BenchSection,
    pub inequality: Option<InequalityConfig>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Hammerstein {
        #[serde(default = "default_nodes")]
        n_nodes: usize,
        /// Weighted by default; the `bench` command defaults to Euclidean.
        norm: Option<NormConvention>,
    },
    /// `F u = ⟨u, p⟩ p` on `R²` with data `p + δ q`.
    RankOne {},
    /// `F(u) = M u + c tanh(u)` with exact solution `u ≡ 1`.
    Synthetic {
        dim: usize,
        #[serde(default = "default_synthetic_c")]
        c: f64,
        #[serde(default)]
        seed: u64,
    },
}

fn default_nodes() -> usize {
    50
}

fn default_synthetic_c() -> f64 {
    0.5
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self::Hammerstein {
            n_nodes: default_nodes(),
            norm: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dp,
    FlowNewton,
    FlowGradient,
    FlowSimple,
    IterNewton,
    IterGradient,
    IterSimple,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| CliError::Config(format!("unknown method `{s}`")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Dp => "dp",
            Self::FlowNewton => "flow-newton",
            Self::FlowGradient => "flow-gradient",
            Self::FlowSimple => "flow-simple",
            Self::IterNewton => "iter-newton",
            Self::IterGradient => "iter-gradient",
            Self::IterSimple => "iter-simple",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpSection {
    pub c: f64,
    pub gamma: f64,
    pub dp_tol: Option<f64>,
}

impl Default for DpSection {
    fn default() -> Self {
        Self {
            c: 1.01,
            gamma: 0.9,
            dp_tol: None,
        }
    }
}

/// Threshold `C1 δ^ζ` shared by the flows and iterations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSection {
    pub c1: f64,
    pub zeta: f64,
    pub n_max: Option<usize>,
    pub t_max: Option<f64>,
}

impl Default for StopSection {
    fn default() -> Self {
        Self {
            c1: 1.5,
            zeta: 0.9,
            n_max: None,
            t_max: None,
        }
    }
}

/// `a(t) = d/(c+t)^b` for flows, `a_n = d0/(d+n)^b` for iterations. A
/// missing scale (`d` for flows, `d0` for iterations) is searched for.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub d: Option<f64>,
    pub d0: Option<f64>,
    pub lambda: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSection {
    pub c0: f64,
    pub c1: f64,
    pub horizon: f64,
}

impl Default for ValidationSection {
    fn default() -> Self {
        Self {
            c0: 0.1,
            c1: 0.1,
            horizon: 1e4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    pub c0: f64,
    pub c: f64,
    pub gamma: f64,
    pub n_max: usize,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            c0: 4.0,
            c: 1.01,
            gamma: 0.99,
            n_max: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InequalityConfig {
    Continuous {
        instance: ContinuousInstance,
        #[serde(default = "default_ineq_steps")]
        n_steps: usize,
    },
    Discrete {
        instance: DiscreteInstance,
    },
    /// Seeded feasible instances of both kinds.
    Random {
        count: u64,
        #[serde(default)]
        seed: u64,
    },
}

fn default_ineq_steps() -> usize {
    10_000
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub format: Option<Format>,
    /// Include residual histories in JSON reports.
    #[serde(default)]
    pub history: bool,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if let Some(d) = &self.delta_rels {
            if d.is_empty() || d.iter().any(|x| !(*x > 0.0 && *x < 1.0)) {
                return bad("delta_rels must be nonempty with entries in (0, 1)".into());
            }
        }
        if self.seeds.as_ref().is_some_and(|s| s.is_empty()) {
            return bad("seeds must be nonempty".into());
        }
        match self.problem {
            Some(ProblemConfig::Hammerstein { n_nodes, .. }) if n_nodes < 2 => {
                return bad(format!("n_nodes = {n_nodes} must be >= 2"));
            }
            Some(ProblemConfig::Synthetic { dim, c, .. }) if dim == 0 || !(c >= 0.0) => {
                return bad(format!("synthetic problem needs dim >= 1 and c >= 0, got {dim}, {c}"));
            }
            _ => {}
        }
        if !(self.dp.c > 1.0) {
            return bad(format!("dp.c = {} must exceed 1", self.dp.c));
        }
        if !(self.dp.gamma > 0.0 && self.dp.gamma <= 1.0) {
            return bad(format!("dp.gamma = {} must lie in (0, 1]", self.dp.gamma));
        }
        if !(self.stop.c1 > 1.0) {
            return bad(format!("stop.c1 = {} must exceed 1", self.stop.c1));
        }
        if !(self.stop.zeta > 0.0 && self.stop.zeta <= 1.0) {
            return bad(format!("stop.zeta = {} must lie in (0, 1]", self.stop.zeta));
        }
        if !(self.bench.c > 1.0) {
            return bad(format!("bench.c = {} must exceed 1", self.bench.c));
        }
        if !(self.bench.c0 > 0.0) {
            return bad(format!("bench.c0 = {} must be > 0", self.bench.c0));
        }
        if !(self.bench.gamma > 0.0 && self.bench.gamma <= 1.0) {
            return bad(format!("bench.gamma = {} must lie in (0, 1]", self.bench.gamma));
        }
        Ok(())
    }

    pub fn problem(&self) -> ProblemConfig {
        self.problem.clone().unwrap_or_default()
    }
}

/// One noisy instance of the configured problem.
pub struct Instance {
    pub op: Box<dyn NonlinearOperator>,
    pub f_delta: HilbertVector,
    pub delta: f64,
    /// Minimal-norm solution, when known.
    pub exact: Option<HilbertVector>,
}

impl Instance {
    pub fn relative_error(&self, u: &HilbertVector) -> f64 {
        self.exact
            .as_ref()
            .map_or(f64::NAN, |y| u.distance(y) / y.norm())
    }
}

impl ProblemConfig {
    pub fn is_rank_one(&self) -> bool {
        matches!(self, Self::RankOne {})
    }

    /// Rank-one data carry no random noise, so `seed` is ignored there and
    /// `δ = δ_rel` because `‖p‖ = 1`.
    pub fn instance(&self, delta_rel: f64, seed: u64) -> Result<Instance, CliError> {
        let spec = NoiseSpec { delta_rel, seed };
        match *self {
            Self::Hammerstein { n_nodes, norm } => {
                let p = HammersteinProblem::new(n_nodes, norm.unwrap_or_default())?;
                let noisy = p.noisy(&spec)?;
                Ok(Instance {
                    f_delta: noisy.f_delta,
                    delta: noisy.delta,
                    exact: noisy.exact_solution,
                    op: Box::new(noisy.op),
                })
            }
            Self::RankOne {} => {
                let p = RankOneProblem::new();
                Ok(Instance {
                    f_delta: p.data(delta_rel),
                    delta: delta_rel,
                    exact: Some(p.p.clone()),
                    op: Box::new(p.op),
                })
            }
            Self::Synthetic { dim, c, seed: op_seed } => {
                let op = SyntheticMonotone::new(dim, c, op_seed)?;
                let y = op.grid().constant(1.0);
                let draw = gen_noise(&op.apply(&y), &spec)?;
                Ok(Instance {
                    f_delta: draw.f_delta,
                    delta: draw.delta,
                    exact: Some(y),
                    op: Box::new(op),
                })
            }
        }
    }
}
