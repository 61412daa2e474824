//! One function per subcommand. Each returns its report and an exit code;
//! configuration problems are returned as errors.

use serde::Serialize;

use dsm_core::bench::{run_sweep, NormConvention, RankOneProblem, SweepConfig, SweepRow};
use dsm_core::discrepancy::{solve_dp, DPConfig};
use dsm_core::flows::{run_flow, FlowConfig, FlowMethod};
use dsm_core::inequalities::{
    bound_continuous, bound_discrete, split_condition_check, random_continuous_instance,
    random_discrete_instance,
};
use dsm_core::iterations::{iter_gradient, iter_newton, iter_simple, IterConfig};
use dsm_core::report::SolveReport;
use dsm_core::schedules::{
    make_continuous, make_discrete, search_continuous_d, search_discrete_d0, search_lambda,
    validate_continuous, validate_discrete, ConditionReport, ConditionResult, ContinuousKind,
    ContinuousSchedule, DiscreteKind, DiscreteSchedule, ValidationParams,
};
use dsm_core::Error as CoreError;

use crate::config::{ExperimentConfig, InequalityConfig, Instance, Method, ProblemConfig};
use crate::error::{exit, is_config_error, CliError};
use crate::output::{Cell, Report, Table};

pub type Outcome = Result<(Report, u8), CliError>;

fn delta_rels(cfg: &ExperimentConfig) -> Vec<f64> {
    cfg.delta_rels.clone().unwrap_or_else(|| vec![0.01])
}

fn seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    let s = cfg.seeds.clone().unwrap_or_else(|| vec![0]);
    // Rank-one data are noise-free apart from δ, so one seed suffices.
    if cfg.problem().is_rank_one() {
        s[..1].to_vec()
    } else {
        s
    }
}

/// Solver failures become report rows; configuration errors abort.
fn solver_failure(e: CoreError) -> Result<String, CliError> {
    if is_config_error(&e) {
        Err(e.into())
    } else {
        Ok(e.to_string())
    }
}

#[derive(Serialize)]
struct DpRecord {
    delta_rel: f64,
    seed: u64,
    delta: f64,
    a_delta: f64,
    residual: f64,
    target: f64,
    rel_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    a_analytic: Option<f64>,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub fn dp(cfg: &ExperimentConfig) -> Outcome {
    let mut dcfg = DPConfig::with_constants(cfg.dp.c, cfg.dp.gamma);
    if let Some(t) = cfg.dp.dp_tol {
        dcfg.dp_tol = t;
    }
    dcfg.validate()?;
    let problem = cfg.problem();
    let analytic = problem.is_rank_one() && cfg.dp.gamma == 1.0;
    let mut records = Vec::new();
    for delta_rel in delta_rels(cfg) {
        for seed in seeds(cfg) {
            let inst = problem.instance(delta_rel, seed)?;
            let a_analytic = analytic.then(|| RankOneProblem::analytic_a(cfg.dp.c, inst.delta));
            let rec = match solve_dp(inst.op.as_ref(), &inst.f_delta, inst.delta, &dcfg) {
                Ok(r) => DpRecord {
                    delta_rel,
                    seed,
                    delta: inst.delta,
                    a_delta: r.a_delta,
                    residual: r.achieved_residual,
                    target: r.target,
                    rel_error: inst.relative_error(&r.v),
                    a_analytic,
                    status: "ok",
                    error: None,
                },
                Err(e) => DpRecord {
                    delta_rel,
                    seed,
                    delta: inst.delta,
                    a_delta: f64::NAN,
                    residual: f64::NAN,
                    target: dcfg.c * inst.delta.powf(dcfg.gamma),
                    rel_error: f64::NAN,
                    a_analytic,
                    status: "failed",
                    error: Some(solver_failure(e)?),
                },
            };
            records.push(rec);
        }
    }
    let mut header = vec!["delta_rel", "seed", "delta", "a_delta", "residual", "target", "rel_error", "status"];
    if analytic {
        header.push("a_analytic");
    }
    let mut table = Table::new(&header);
    for r in &records {
        let mut row: Vec<Cell> = vec![
            r.delta_rel.into(),
            r.seed.into(),
            r.delta.into(),
            r.a_delta.into(),
            r.residual.into(),
            r.target.into(),
            r.rel_error.into(),
            r.status.into(),
        ];
        if let Some(a) = r.a_analytic {
            row.push(a.into());
        }
        table.push(row);
    }
    let code = if records.iter().all(|r| r.error.is_none()) {
        exit::OK
    } else {
        exit::NON_CONVERGENCE
    };
    Ok((Report::new("dp", table, &records)?, code))
}

#[derive(Clone, Copy, Debug, Serialize)]
struct ScheduleUsed {
    b: f64,
    /// `c` of a flow schedule, `d` of an iteration schedule.
    offset: f64,
    /// `d` of a flow schedule, `d0` of an iteration schedule.
    scale: f64,
    lambda: f64,
}

#[derive(Serialize)]
struct RunRecord {
    delta_rel: f64,
    seed: u64,
    delta: f64,
    method: &'static str,
    schedule: Option<ScheduleUsed>,
    /// Stopping time of a flow or stopping index of an iteration.
    stop: f64,
    steps: usize,
    residual_at_stop: f64,
    threshold: f64,
    a_at_stop: f64,
    rel_error: f64,
    max_excursion: f64,
    status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual_history: Option<Vec<(f64, f64)>>,
}

fn validation_params(inst: &Instance, cfg: &ExperimentConfig, alpha_tilde: f64) -> Result<ValidationParams, CliError> {
    let m1 = inst
        .op
        .bounds()
        .m1
        .ok_or_else(|| CliError::Config("the problem declares no M1 bound".into()))?;
    let y_norm = inst
        .exact
        .as_ref()
        .map(|y| y.norm())
        .ok_or_else(|| CliError::Config("schedule search needs a known solution norm".into()))?;
    let u0 = inst.op.grid().zeros();
    Ok(ValidationParams {
        m1,
        c0: cfg.validation.c0,
        c1: cfg.validation.c1,
        lambda: cfg.schedule.lambda.unwrap_or(1.0),
        y_norm,
        residual0: inst.op.apply(&u0).sub(&inst.f_delta).norm(),
        horizon: cfg.validation.horizon,
        alpha_tilde,
        g0: 0.0,
    })
}

/// `λ` from the config, or the smallest admissible one.
fn with_lambda(
    cfg: &ExperimentConfig,
    p: ValidationParams,
    check: impl Fn(&ValidationParams) -> dsm_core::Result<ConditionReport>,
) -> dsm_core::Result<ValidationParams> {
    if cfg.schedule.lambda.is_some() {
        return Ok(p);
    }
    let (lambda, _) = search_lambda(p.clone(), check)?;
    Ok(ValidationParams { lambda, ..p })
}

fn continuous_defaults(kind: ContinuousKind) -> (f64, f64) {
    match kind {
        ContinuousKind::NewtonFlow => (1.0, 7.0),
        ContinuousKind::GradientFlow => (0.25, 1.0),
        ContinuousKind::SimpleFlow => (0.5, 1.0),
    }
}

fn discrete_defaults(kind: DiscreteKind) -> (f64, f64) {
    match kind {
        DiscreteKind::NewtonIter => (1.0, 1.0),
        DiscreteKind::GradientIter => (0.25, 1.0),
        DiscreteKind::SimpleIter => (0.5, 1.0),
    }
}

/// Half the smallest admissible step over all `a ≤ 1`.
fn alpha_floor(kind: DiscreteKind, m1: f64) -> f64 {
    match kind {
        DiscreteKind::NewtonIter => 0.0,
        DiscreteKind::GradientIter => 0.5 * 2.0 / (1.0 + (m1 + 1.0).powi(2)),
        DiscreteKind::SimpleIter => 0.5 * 2.0 / (2.0 + m1),
    }
}

fn continuous_schedule(
    cfg: &ExperimentConfig,
    kind: ContinuousKind,
    inst: &Instance,
) -> dsm_core::Result<(ContinuousSchedule, ValidationParams)> {
    let (b0, c0) = continuous_defaults(kind);
    let (b, c) = (cfg.schedule.b.unwrap_or(b0), cfg.schedule.c.unwrap_or(c0));
    let p = validation_params(inst, cfg, 0.0).map_err(|e| CoreError::InvalidConfig(e.to_string()))?;
    match cfg.schedule.d {
        Some(d) => {
            let s = make_continuous(kind, b, c, d)?;
            let p = with_lambda(cfg, p, |q| validate_continuous(&s, q))?;
            Ok((s, p))
        }
        None => {
            // Constraints independent of the scale are reported as such.
            make_continuous(kind, b, c, 2f64.powi(20))?;
            let p = with_lambda(cfg, p, |q| search_continuous_d(kind, b, c, q).map(|r| r.1))?;
            Ok((search_continuous_d(kind, b, c, &p)?.0, p))
        }
    }
}

fn discrete_schedule(
    cfg: &ExperimentConfig,
    kind: DiscreteKind,
    inst: &Instance,
) -> dsm_core::Result<(DiscreteSchedule, ValidationParams)> {
    let (b0, d_default) = discrete_defaults(kind);
    let (b, d) = (cfg.schedule.b.unwrap_or(b0), cfg.schedule.d.unwrap_or(d_default));
    let m1 = inst.op.bounds().m1.unwrap_or(0.0);
    let p = validation_params(inst, cfg, alpha_floor(kind, m1))
        .map_err(|e| CoreError::InvalidConfig(e.to_string()))?;
    match cfg.schedule.d0 {
        Some(d0) => {
            let s = make_discrete(kind, b, d, d0)?;
            let p = with_lambda(cfg, p, |q| validate_discrete(&s, q))?;
            Ok((s, p))
        }
        None => {
            let p = with_lambda(cfg, p, |q| search_discrete_d0(kind, b, d, q).map(|r| r.1))?;
            Ok((search_discrete_d0(kind, b, d, &p)?.0, p))
        }
    }
}

fn flow_method(m: Method) -> Option<FlowMethod> {
    match m {
        Method::FlowNewton => Some(FlowMethod::Newton),
        Method::FlowGradient => Some(FlowMethod::Gradient),
        Method::FlowSimple => Some(FlowMethod::Simple),
        _ => None,
    }
}

fn discrete_kind(m: Method) -> Option<DiscreteKind> {
    match m {
        Method::IterNewton => Some(DiscreteKind::NewtonIter),
        Method::IterGradient => Some(DiscreteKind::GradientIter),
        Method::IterSimple => Some(DiscreteKind::SimpleIter),
        _ => None,
    }
}

fn run_one(
    cfg: &ExperimentConfig,
    method: Method,
    inst: &Instance,
) -> dsm_core::Result<(SolveReport, ScheduleUsed)> {
    let u0 = inst.op.grid().zeros();
    let op = inst.op.as_ref();
    let y_norm = inst.exact.as_ref().map(|y| y.norm());
    if let Some(fm) = flow_method(method) {
        let (s, p) = continuous_schedule(cfg, fm.kind(), inst)?;
        let mut fc = FlowConfig::new(cfg.stop.c1, cfg.stop.zeta, s);
        fc.y_norm = y_norm;
        fc.t_max = cfg.stop.t_max;
        if let Some(n) = cfg.stop.n_max {
            fc.max_steps = n;
        }
        let r = run_flow(fm, op, &inst.f_delta, inst.delta, &fc, &u0)?;
        let used = ScheduleUsed { b: s.b, offset: s.c, scale: s.d, lambda: p.lambda };
        return Ok((r, used));
    }
    let kind = discrete_kind(method).expect("dispatch checked the method");
    let (s, p) = discrete_schedule(cfg, kind, inst)?;
    let mut ic = IterConfig::new(cfg.stop.c1, cfg.stop.zeta, s);
    ic.y_norm = y_norm;
    ic.n_max = cfg.stop.n_max;
    let r = match kind {
        DiscreteKind::NewtonIter => iter_newton(op, &inst.f_delta, inst.delta, &ic, &u0),
        DiscreteKind::GradientIter => iter_gradient(op, &inst.f_delta, inst.delta, &ic, &u0),
        DiscreteKind::SimpleIter => iter_simple(op, &inst.f_delta, inst.delta, &ic, &u0),
    }?;
    Ok((r, ScheduleUsed { b: s.b, offset: s.d, scale: s.d0, lambda: p.lambda }))
}

fn trajectories(cfg: &ExperimentConfig, method: Method, name: &'static str) -> Outcome {
    let problem = cfg.problem();
    let mut records = Vec::new();
    for delta_rel in delta_rels(cfg) {
        for seed in seeds(cfg) {
            let inst = problem.instance(delta_rel, seed)?;
            let threshold = cfg.stop.c1 * inst.delta.powf(cfg.stop.zeta);
            let rec = match run_one(cfg, method, &inst) {
                Ok((r, used)) => RunRecord {
                    delta_rel,
                    seed,
                    delta: inst.delta,
                    method: method.name(),
                    schedule: Some(used),
                    stop: r.t_stop.or(r.n_stop.map(|n| n as f64)).unwrap_or(f64::NAN),
                    steps: r.steps,
                    residual_at_stop: r.residual_at_stop,
                    threshold: r.threshold,
                    a_at_stop: r.a_at_stop,
                    rel_error: inst.relative_error(&r.u_final),
                    max_excursion: r.max_excursion,
                    status: r.status.name().to_string(),
                    error: (!r.stopped()).then(|| format!("stopped with status {}", r.status.name())),
                    residual_history: cfg.output.history.then(|| r.residual_history.clone()),
                },
                Err(e) => RunRecord {
                    delta_rel,
                    seed,
                    delta: inst.delta,
                    method: method.name(),
                    schedule: None,
                    stop: f64::NAN,
                    steps: 0,
                    residual_at_stop: f64::NAN,
                    threshold,
                    a_at_stop: f64::NAN,
                    rel_error: f64::NAN,
                    max_excursion: f64::NAN,
                    status: "failed".into(),
                    error: Some(solver_failure(e)?),
                    residual_history: None,
                },
            };
            records.push(rec);
        }
    }
    let mut table = Table::new(&[
        "delta_rel",
        "seed",
        "delta",
        "method",
        "b",
        "offset",
        "scale",
        "lambda",
        "stop",
        "steps",
        "residual_at_stop",
        "threshold",
        "a_at_stop",
        "rel_error",
        "max_excursion",
        "status",
    ]);
    let nan = ScheduleUsed { b: f64::NAN, offset: f64::NAN, scale: f64::NAN, lambda: f64::NAN };
    for r in &records {
        let s = r.schedule.unwrap_or(nan);
        table.push(vec![
            r.delta_rel.into(),
            r.seed.into(),
            r.delta.into(),
            r.method.into(),
            s.b.into(),
            s.offset.into(),
            s.scale.into(),
            s.lambda.into(),
            r.stop.into(),
            r.steps.into(),
            r.residual_at_stop.into(),
            r.threshold.into(),
            r.a_at_stop.into(),
            r.rel_error.into(),
            r.max_excursion.into(),
            r.status.clone().into(),
        ]);
    }
    let code = if records.iter().all(|r| r.error.is_none()) {
        exit::OK
    } else {
        exit::NON_CONVERGENCE
    };
    Ok((Report::new(name, table, &records)?, code))
}

pub fn flow(cfg: &ExperimentConfig) -> Outcome {
    let method = cfg.method.unwrap_or(Method::FlowNewton);
    if flow_method(method).is_none() {
        return Err(CliError::Config(format!("`flow` needs a flow method, got {}", method.name())));
    }
    trajectories(cfg, method, "flow")
}

pub fn iterate(cfg: &ExperimentConfig) -> Outcome {
    let method = cfg.method.unwrap_or(Method::IterNewton);
    if discrete_kind(method).is_none() {
        return Err(CliError::Config(format!("`iterate` needs an iteration method, got {}", method.name())));
    }
    trajectories(cfg, method, "iterate")
}

pub fn bench(cfg: &ExperimentConfig) -> Outcome {
    let (n_nodes, norm) = match cfg.problem {
        None => (50, NormConvention::Euclidean),
        Some(ProblemConfig::Hammerstein { n_nodes, norm }) => (n_nodes, norm.unwrap_or(NormConvention::Euclidean)),
        Some(_) => return Err(CliError::Config("`bench` runs the Hammerstein problem only".into())),
    };
    let defaults = SweepConfig::default();
    let tcfg = SweepConfig {
        delta_rels: cfg.delta_rels.clone().unwrap_or(defaults.delta_rels),
        n_nodes,
        c0: cfg.bench.c0,
        c: cfg.bench.c,
        gamma: cfg.bench.gamma,
        seeds: cfg.seeds.clone().unwrap_or(defaults.seeds),
        norm,
        n_max: cfg.bench.n_max,
    };
    let rows: Vec<SweepRow> = run_sweep(&tcfg)?;
    let mut table = Table::new(&[
        "delta_rel",
        "n_iterations",
        "rel_error",
        "residual_at_stop",
        "a_at_stop",
        "seed_count",
    ]);
    for r in &rows {
        table.push(vec![
            r.delta_rel.into(),
            r.n_iterations.into(),
            r.rel_error.into(),
            r.residual_at_stop.into(),
            r.a_at_stop.into(),
            r.seed_count.into(),
        ]);
    }
    let code = if rows.iter().all(|r| r.failures.is_empty()) {
        exit::OK
    } else {
        exit::NON_CONVERGENCE
    };
    Ok((Report::new("bench", table, &rows)?, code))
}

#[derive(Serialize)]
struct ScheduleCheck {
    kind: &'static str,
    schedule: Option<ScheduleUsed>,
    report: ConditionReport,
}

fn rejected(kind: &'static str, e: CoreError) -> Result<ConditionReport, CliError> {
    match e {
        CoreError::ConstraintViolated { condition, margin } => Ok(ConditionReport {
            kind: kind.to_string(),
            samples: 0,
            conditions: vec![ConditionResult {
                name: condition,
                worst_margin: margin,
                worst_at: f64::NAN,
                strict: true,
                passed: false,
            }],
            passed: false,
        }),
        e => Err(e.into()),
    }
}

pub fn schedule_check(cfg: &ExperimentConfig) -> Outcome {
    let method = cfg
        .method
        .ok_or_else(|| CliError::Config("`schedule-check` needs --method".into()))?;
    let delta_rel = delta_rels(cfg)[0];
    let inst = cfg.problem().instance(delta_rel, seeds(cfg)[0])?;
    let (kind, result) = if let Some(fm) = flow_method(method) {
        let kind = fm.kind();
        let r = continuous_schedule(cfg, kind, &inst).and_then(|(s, p)| {
            let report = validate_continuous(&s, &p)?;
            Ok((ScheduleUsed { b: s.b, offset: s.c, scale: s.d, lambda: p.lambda }, report))
        });
        (kind.name(), r)
    } else if let Some(kind) = discrete_kind(method) {
        let r = discrete_schedule(cfg, kind, &inst).and_then(|(s, p)| {
            let report = validate_discrete(&s, &p)?;
            Ok((ScheduleUsed { b: s.b, offset: s.d, scale: s.d0, lambda: p.lambda }, report))
        });
        (kind.name(), r)
    } else {
        return Err(CliError::Config("`schedule-check` needs a flow or iteration method".into()));
    };
    let (schedule, report) = match result {
        Ok((s, r)) => (Some(s), r),
        Err(e) => (None, rejected(kind, e)?),
    };
    let mut table = Table::new(&["condition", "worst_margin", "worst_at", "strict", "passed"]);
    for c in &report.conditions {
        table.push(vec![
            c.name.clone().into(),
            c.worst_margin.into(),
            c.worst_at.into(),
            c.strict.into(),
            c.passed.into(),
        ]);
    }
    let code = if report.passed { exit::OK } else { exit::CHECK_FAILED };
    let out = ScheduleCheck { kind, schedule, report };
    Ok((Report::new("schedule_check", table, &out)?, code))
}

fn failed_check(e: CoreError) -> Result<(Table, serde_json::Value), CliError> {
    let (condition, at, margin) = match &e {
        CoreError::PreconditionFailed { condition, at, margin } => (condition.clone(), *at, *margin),
        CoreError::BoundViolated { at, value, bound } => ("g < 1/mu".to_string(), *at, bound - value),
        _ => return Err(e.into()),
    };
    let mut table = Table::new(&["condition", "at", "margin"]);
    table.push(vec![condition.clone().into(), at.into(), margin.into()]);
    let json = serde_json::json!({ "condition": condition, "at": at, "margin": margin, "error": e.to_string() });
    Ok((table, json))
}

pub fn ineq(cfg: &ExperimentConfig) -> Outcome {
    let section = cfg
        .inequality
        .as_ref()
        .ok_or_else(|| CliError::Config("`ineq` needs an `inequality` section".into()))?;
    let finish = |result: Result<(Table, serde_json::Value), CoreError>| -> Outcome {
        match result {
            Ok((table, json)) => Ok((Report::new("ineq", table, &json)?, exit::OK)),
            Err(e) => {
                let (table, json) = failed_check(e)?;
                Ok((Report::new("ineq", table, &json)?, exit::CHECK_FAILED))
            }
        }
    };
    match section {
        InequalityConfig::Continuous { instance, n_steps } => finish(bound_continuous(instance, *n_steps).map(|r| {
            let mut t = Table::new(&["t", "g", "bound"]);
            for ((t_i, g), b) in r.times.iter().zip(&r.g).zip(&r.bound) {
                t.push(vec![(*t_i).into(), (*g).into(), (*b).into()]);
            }
            (t, serde_json::to_value(&r).expect("serializable"))
        })),
        InequalityConfig::Discrete { instance } => finish(bound_discrete(instance).map(|r| {
            let mut t = Table::new(&["n", "g", "bound"]);
            for (n, (g, b)) in r.g.iter().zip(&r.bound).enumerate() {
                t.push(vec![n.into(), (*g).into(), (*b).into()]);
            }
            (t, serde_json::to_value(&r).expect("serializable"))
        })),
        InequalityConfig::Random { count, seed } => random_suite(*count, *seed),
    }
}

#[derive(Serialize)]
struct SuiteRecord {
    kind: &'static str,
    seed: u64,
    p: f64,
    min_margin: f64,
    passed: bool,
    /// Outcome of the split-condition implication check, for `p = 2`.
    implication: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn random_suite(count: u64, seed: u64) -> Outcome {
    let mut records = Vec::new();
    for s in seed..seed.saturating_add(count) {
        let inst = random_continuous_instance(s);
        let implication = if inst.p == 2.0 {
            Some(split_condition_check(&inst)?.implication_holds)
        } else {
            None
        };
        let r = bound_continuous(&inst, 2000);
        records.push(SuiteRecord {
            kind: "continuous",
            seed: s,
            p: inst.p,
            min_margin: r.as_ref().map_or(f64::NAN, |r| r.min_margin),
            passed: r.is_ok() && implication != Some(false),
            implication,
            error: r.err().map(|e| e.to_string()),
        });
    }
    for s in seed..seed.saturating_add(count) {
        let inst = random_discrete_instance(s);
        let r = bound_discrete(&inst);
        records.push(SuiteRecord {
            kind: "discrete",
            seed: s,
            p: inst.p,
            min_margin: r.as_ref().map_or(f64::NAN, |r| r.min_margin),
            passed: r.is_ok(),
            implication: None,
            error: r.err().map(|e| e.to_string()),
        });
    }
    let mut table = Table::new(&["kind", "seed", "p", "min_margin", "implication", "passed"]);
    for r in &records {
        let imp = r.implication.map_or(String::new(), |b| b.to_string());
        table.push(vec![
            r.kind.into(),
            r.seed.into(),
            r.p.into(),
            r.min_margin.into(),
            imp.into(),
            r.passed.into(),
        ]);
    }
    let code = if records.iter().all(|r| r.passed) {
        exit::OK
    } else {
        exit::CHECK_FAILED
    };
    Ok((Report::new("ineq", table, &records)?, code))
}
