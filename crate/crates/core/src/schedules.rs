//! Power-law regularization schedules `a(t) = d/(c+t)^b` and
//! `a_n = d0/(d+n)^b`, with validators for the conditions each solver needs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuousKind {
    NewtonFlow,
    GradientFlow,
    SimpleFlow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscreteKind {
    NewtonIter,
    GradientIter,
    SimpleIter,
}

impl ContinuousKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::NewtonFlow => "newton_flow",
            Self::GradientFlow => "gradient_flow",
            Self::SimpleFlow => "simple_flow",
        }
    }

    /// Largest admissible exponent `b`.
    pub fn max_exponent(self) -> f64 {
        match self {
            Self::NewtonFlow => 1.0,
            Self::GradientFlow => 0.25,
            Self::SimpleFlow => 0.5,
        }
    }
}

impl DiscreteKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::NewtonIter => "newton_iter",
            Self::GradientIter => "gradient_iter",
            Self::SimpleIter => "simple_iter",
        }
    }

    pub fn max_exponent(self) -> f64 {
        match self {
            Self::NewtonIter => 1.0,
            Self::GradientIter => 0.25,
            Self::SimpleIter => 0.5,
        }
    }
}

fn violated(condition: impl Into<String>, margin: f64) -> Error {
    Error::ConstraintViolated {
        condition: condition.into(),
        margin,
    }
}

fn check_exponent(b: f64, max: f64) -> Result<()> {
    if !(b > 0.0) {
        return Err(violated("b > 0", b));
    }
    if b > max {
        return Err(violated(format!("b <= {max}"), max - b));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(violated(format!("{name} > 0"), v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousSchedule {
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub kind: ContinuousKind,
}

/// Allowance for rounding in the non-strict flow constraints, relative to `6b`.
const ROUNDING: f64 = 4.0 * f64::EPSILON;

/// Construct `a(t) = d/(c+t)^b`, rejecting parameters outside the range
/// required by `kind`.
pub fn make_continuous(kind: ContinuousKind, b: f64, c: f64, d: f64) -> Result<ContinuousSchedule> {
    check_exponent(b, kind.max_exponent())?;
    check_positive("c", c)?;
    check_positive("d", d)?;
    match kind {
        ContinuousKind::NewtonFlow => {
            let margin = c - 6.0 * b;
            if margin == 0.0 {
                return Err(violated("c > 6b (boundary c = 6b)", margin));
            }
            if margin < 0.0 {
                return Err(violated("c > 6b", margin));
            }
        }
        ContinuousKind::GradientFlow => {
            if c < 1.0 {
                return Err(violated("c >= 1", c - 1.0));
            }
            let margin = d * d * c.powf(1.0 - 2.0 * b) - 6.0 * b;
            if margin < -ROUNDING * 6.0 * b {
                return Err(violated("d^2 c^(1-2b) >= 6b", margin));
            }
        }
        ContinuousKind::SimpleFlow => {
            if c < 1.0 {
                return Err(violated("c >= 1", c - 1.0));
            }
            let margin = d * c.powf(1.0 - b) - 6.0 * b;
            if margin < -ROUNDING * 6.0 * b {
                return Err(violated("d c^(1-b) >= 6b", margin));
            }
        }
    }
    Ok(ContinuousSchedule { b, c, d, kind })
}

impl ContinuousSchedule {
    pub fn a(&self, t: f64) -> f64 {
        self.d / (self.c + t).powf(self.b)
    }

    pub fn a_dot(&self, t: f64) -> f64 {
        -self.b * self.d / (self.c + t).powf(self.b + 1.0)
    }

    /// The time at which `a` falls to `level`.
    pub fn time_of(&self, level: f64) -> f64 {
        ((self.d / level).powf(1.0 / self.b) - self.c).max(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSchedule {
    pub b: f64,
    /// Offset `d ≥ 1` in `a_n = d0/(d+n)^b`.
    pub d: f64,
    pub d0: f64,
    pub kind: DiscreteKind,
}

pub fn make_discrete(kind: DiscreteKind, b: f64, d: f64, d0: f64) -> Result<DiscreteSchedule> {
    check_exponent(b, kind.max_exponent())?;
    if !(d >= 1.0 && d.is_finite()) {
        return Err(violated("d >= 1", d - 1.0));
    }
    check_positive("d0", d0)?;
    Ok(DiscreteSchedule { b, d, d0, kind })
}

impl DiscreteSchedule {
    pub fn a(&self, n: usize) -> f64 {
        self.d0 / (self.d + n as f64).powf(self.b)
    }

    /// `a_n / a_{n+1} = ((d+n+1)/(d+n))^b`
    pub fn ratio(&self, n: usize) -> f64 {
        let m = self.d + n as f64;
        ((m + 1.0) / m).powf(self.b)
    }

    /// First index with `a_n ≤ level`, or `usize::MAX` when that index is
    /// beyond `2^52`, where consecutive `a_n` are no longer distinguishable.
    pub fn index_of(&self, level: f64) -> usize {
        let x = (self.d0 / level).powf(1.0 / self.b) - self.d;
        if !(x < 2f64.powi(52)) {
            return usize::MAX;
        }
        let mut n = x.max(0.0).floor() as usize;
        while n > 0 && self.a(n - 1) <= level {
            n -= 1;
        }
        while self.a(n) > level {
            n += 1;
        }
        n
    }
}

/// `a_n = C0 δ^0.99 / (n + 1)`
pub fn sweep_schedule(c0: f64, delta: f64) -> Result<DiscreteSchedule> {
    make_discrete(DiscreteKind::NewtonIter, 1.0, 1.0, c0 * delta.powf(0.99))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationParams {
    pub m1: f64,
    pub c0: f64,
    pub c1: f64,
    pub lambda: f64,
    /// Known value or bound for the norm of the minimal-norm solution.
    pub y_norm: f64,
    /// `‖F(0) − f_δ‖`
    pub residual0: f64,
    /// Sampling range: final time, or last index for discrete schedules.
    pub horizon: f64,
    /// Step-size floor for gradient and simple iterations.
    pub alpha_tilde: f64,
    /// Initial distance `‖u0 − V_δ(0)‖` to the regularized path.
    pub g0: f64,
}

impl ValidationParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("M1", self.m1),
            ("c0", self.c0),
            ("c1", self.c1),
            ("residual0", self.residual0),
            ("alpha_tilde", self.alpha_tilde),
            ("g0", self.g0),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} = {v} must be >= 0")));
            }
        }
        for (name, v) in [("lambda", self.lambda), ("y_norm", self.y_norm), ("horizon", self.horizon)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} = {v} must be > 0")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub name: String,
    /// Smallest `rhs − lhs` over the samples.
    pub worst_margin: f64,
    /// Time or index of the smallest margin.
    pub worst_at: f64,
    pub strict: bool,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub kind: String,
    pub samples: usize,
    pub conditions: Vec<ConditionResult>,
    pub passed: bool,
}

impl ConditionReport {
    pub fn condition(&self, name: &str) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

struct Tracker {
    name: &'static str,
    strict: bool,
    worst: f64,
    at: f64,
}

impl Tracker {
    fn new(name: &'static str, strict: bool) -> Self {
        Self {
            name,
            strict,
            worst: f64::INFINITY,
            at: 0.0,
        }
    }

    fn record(&mut self, margin: f64, at: f64) {
        // NaN margins count as failures.
        if !(margin >= self.worst) {
            self.worst = margin;
            self.at = at;
        }
    }

    fn finish(self) -> ConditionResult {
        let passed = if self.strict {
            self.worst > 0.0
        } else {
            self.worst >= 0.0
        };
        ConditionResult {
            name: self.name.to_string(),
            worst_margin: self.worst,
            worst_at: self.at,
            strict: self.strict,
            passed,
        }
    }
}

fn report(kind: &str, samples: usize, trackers: Vec<Tracker>) -> ConditionReport {
    let conditions: Vec<_> = trackers.into_iter().map(Tracker::finish).collect();
    let passed = conditions.iter().all(|c| c.passed);
    ConditionReport {
        kind: kind.to_string(),
        samples,
        conditions,
        passed,
    }
}

pub const CONTINUOUS_SAMPLES: usize = 1000;

/// `t = 0` followed by log-spaced points ending at `horizon`.
pub fn continuous_sample_times(horizon: f64) -> Vec<f64> {
    let lo = (horizon * 1e-9).max(1e-9).min(horizon).log10();
    let hi = horizon.log10();
    let mut ts = vec![0.0];
    for i in 0..CONTINUOUS_SAMPLES {
        let s = i as f64 / (CONTINUOUS_SAMPLES - 1) as f64;
        ts.push(10f64.powf(lo + s * (hi - lo)));
    }
    *ts.last_mut().expect("nonempty") = horizon;
    ts
}

pub mod names {
    pub const M1_OVER_Y: &str = "M1/|y| <= lambda";
    pub const NEWTON_C0: &str = "c0/a <= lambda/(2a) (1 - |a'|/a)";
    pub const NEWTON_C1: &str = "c1 |a'|/a <= a/(2 lambda) (1 - |a'|/a)";
    pub const INITIAL_A2: &str = "|F(0) - f| <= a(0)^2/lambda";
    pub const DECAY_CUBIC: &str = "|a'| <= a^3/4";
    pub const GRADIENT_C0: &str = "c0 (M1 + a) <= lambda/(2a^2) (a^2 - 2|a'|/a)";
    pub const GRADIENT_C1: &str = "c1 |a'|/a <= a^2/(2 lambda) (a^2 - 2|a'|/a)";
    pub const GRADIENT_G0: &str = "lambda g0/a(0)^2 < 1";
    pub const DECAY_QUADRATIC: &str = "|a'| <= a^2/2";
    pub const SIMPLE_BRACKET: &str = "0 <= lambda/(2a) (a - |a'|/a)";
    pub const SIMPLE_C1: &str = "c1 |a'|/a <= a/(2 lambda) (a - |a'|/a)";
    pub const SIMPLE_G0: &str = "lambda g0/a(0) < 1";
    pub const RATIO: &str = "a_n <= 2 a_(n+1)";
    pub const INITIAL_D2: &str = "|f - F(0)| <= a_0^2/lambda";
    pub const INITIAL_D3: &str = "|f - F(0)| <= a_0^3/lambda";
    pub const M1_OVER_LAMBDA: &str = "M1/lambda <= |y|";
    pub const NEWTON_STEP: &str = "c1 (a_n - a_(n+1))/a_(n+1)^2 <= 1/(2 lambda)";
    pub const NEWTON_DECAY: &str = "c0 a_n/lambda^2 + c1 (a_n - a_(n+1))/a_(n+1) <= a_(n+1)/lambda";
    pub const GRADIENT_START: &str = "c0 (M1 + a_0)/lambda <= 1/2";
    pub const GRADIENT_DECAY: &str =
        "a_n^2/lambda - alpha a_n^4/(2 lambda) + c1 (a_n - a_(n+1))/a_(n+1) <= a_(n+1)^2/lambda";
    pub const SIMPLE_DECAY: &str =
        "a_n/lambda - alpha a_n^2/lambda + c1 (a_n - a_(n+1))/a_(n+1) <= a_(n+1)/lambda";
}

/// Evaluate every condition the schedule's kind requires, sampled over
/// `[0, horizon]`, and report the worst margin of each.
pub fn validate_continuous(s: &ContinuousSchedule, p: &ValidationParams) -> Result<ConditionReport> {
    use names::*;
    p.validate()?;
    let ts = continuous_sample_times(p.horizon);
    let lam = p.lambda;
    let mut m1y = Tracker::new(M1_OVER_Y, false);
    m1y.record(lam - p.m1 / p.y_norm, 0.0);
    let a0 = s.a(0.0);
    let trackers = match s.kind {
        ContinuousKind::NewtonFlow => {
            let mut c0 = Tracker::new(NEWTON_C0, false);
            let mut c1 = Tracker::new(NEWTON_C1, false);
            let mut init = Tracker::new(INITIAL_A2, false);
            init.record(a0 * a0 / lam - p.residual0, 0.0);
            for &t in &ts {
                let a = s.a(t);
                let r = s.a_dot(t).abs() / a;
                c0.record(lam / (2.0 * a) * (1.0 - r) - p.c0 / a, t);
                c1.record(a / (2.0 * lam) * (1.0 - r) - p.c1 * r, t);
            }
            vec![m1y, c0, c1, init]
        }
        ContinuousKind::GradientFlow => {
            let mut decay = Tracker::new(DECAY_CUBIC, false);
            let mut c0 = Tracker::new(GRADIENT_C0, false);
            let mut c1 = Tracker::new(GRADIENT_C1, false);
            let mut g0 = Tracker::new(GRADIENT_G0, true);
            g0.record(1.0 - lam * p.g0 / (a0 * a0), 0.0);
            for &t in &ts {
                let a = s.a(t);
                let ad = s.a_dot(t).abs();
                let bracket = a * a - 2.0 * ad / a;
                decay.record(a * a * a / 4.0 - ad, t);
                c0.record(lam / (2.0 * a * a) * bracket - p.c0 * (p.m1 + a), t);
                c1.record(a * a / (2.0 * lam) * bracket - p.c1 * ad / a, t);
            }
            vec![decay, m1y, c0, c1, g0]
        }
        ContinuousKind::SimpleFlow => {
            let mut decay = Tracker::new(DECAY_QUADRATIC, false);
            let mut br = Tracker::new(SIMPLE_BRACKET, false);
            let mut c1 = Tracker::new(SIMPLE_C1, false);
            let mut g0 = Tracker::new(SIMPLE_G0, true);
            g0.record(1.0 - lam * p.g0 / a0, 0.0);
            for &t in &ts {
                let a = s.a(t);
                let ad = s.a_dot(t).abs();
                let bracket = a - ad / a;
                decay.record(a * a / 2.0 - ad, t);
                br.record(lam / (2.0 * a) * bracket, t);
                c1.record(a / (2.0 * lam) * bracket - p.c1 * ad / a, t);
            }
            vec![decay, m1y, br, c1, g0]
        }
    };
    Ok(report(s.kind.name(), ts.len(), trackers))
}

/// Discrete counterpart of [`validate_continuous`]: every `n ≤ horizon`.
pub fn validate_discrete(s: &DiscreteSchedule, p: &ValidationParams) -> Result<ConditionReport> {
    use names::*;
    p.validate()?;
    let n_max = p.horizon.floor() as usize;
    let lam = p.lambda;
    let a0 = s.a(0);
    let mut ratio = Tracker::new(RATIO, false);
    let mut m1 = Tracker::new(M1_OVER_LAMBDA, false);
    m1.record(p.y_norm - p.m1 / lam, 0.0);
    let mut init = Tracker::new(
        if s.kind == DiscreteKind::GradientIter {
            INITIAL_D3
        } else {
            INITIAL_D2
        },
        false,
    );
    let a0_pow = if s.kind == DiscreteKind::GradientIter {
        a0 * a0 * a0
    } else {
        a0 * a0
    };
    init.record(a0_pow / lam - p.residual0, 0.0);
    let mut trackers = match s.kind {
        DiscreteKind::NewtonIter => {
            vec![Tracker::new(NEWTON_STEP, false), Tracker::new(NEWTON_DECAY, false)]
        }
        DiscreteKind::GradientIter => {
            let mut start = Tracker::new(GRADIENT_START, false);
            start.record(0.5 - p.c0 * (p.m1 + a0) / lam, 0.0);
            vec![start, Tracker::new(GRADIENT_DECAY, false)]
        }
        DiscreteKind::SimpleIter => vec![Tracker::new(SIMPLE_DECAY, false)],
    };
    for n in 0..=n_max {
        let (an, an1) = (s.a(n), s.a(n + 1));
        let at = n as f64;
        ratio.record(2.0 * an1 - an, at);
        let rel = (an - an1) / an1;
        match s.kind {
            DiscreteKind::NewtonIter => {
                trackers[0].record(1.0 / (2.0 * lam) - p.c1 * (an - an1) / (an1 * an1), at);
                trackers[1].record(an1 / lam - p.c0 * an / (lam * lam) - p.c1 * rel, at);
            }
            DiscreteKind::GradientIter => {
                let lhs = an * an / lam - p.alpha_tilde * an.powi(4) / (2.0 * lam) + p.c1 * rel;
                trackers[1].record(an1 * an1 / lam - lhs, at);
            }
            DiscreteKind::SimpleIter => {
                let lhs = an / lam - p.alpha_tilde * an * an / lam + p.c1 * rel;
                trackers[0].record(an1 / lam - lhs, at);
            }
        }
    }
    let mut all = vec![ratio, init, m1];
    all.append(&mut trackers);
    Ok(report(s.kind.name(), n_max + 1, all))
}

/// Candidate scales searched for "sufficiently large `d`": `1, 2, 4, …, 2^20`.
pub fn scale_grid() -> impl Iterator<Item = f64> {
    (0..=20).map(|k| 2f64.powi(k))
}

fn no_scale(best: Option<f64>) -> Error {
    violated(
        "no scale in {1, 2, ..., 2^20} satisfies every condition",
        best.unwrap_or(f64::NEG_INFINITY),
    )
}

fn worst_margin(r: &ConditionReport) -> f64 {
    r.conditions
        .iter()
        .map(|c| c.worst_margin)
        .fold(f64::INFINITY, f64::min)
}

/// Smallest `d` from [`scale_grid`] for which `d/(c+t)^b` passes validation.
pub fn search_continuous_d(
    kind: ContinuousKind,
    b: f64,
    c: f64,
    p: &ValidationParams,
) -> Result<(ContinuousSchedule, ConditionReport)> {
    let mut best: Option<f64> = None;
    for d in scale_grid() {
        let s = match make_continuous(kind, b, c, d) {
            Ok(s) => s,
            Err(Error::ConstraintViolated { .. }) => continue,
            Err(e) => return Err(e),
        };
        let r = validate_continuous(&s, p)?;
        if r.passed {
            return Ok((s, r));
        }
        let m = worst_margin(&r);
        best = Some(best.map_or(m, |b: f64| b.max(m)));
    }
    Err(no_scale(best))
}

/// Smallest `d0` from [`scale_grid`] for which `d0/(d+n)^b` passes validation.
pub fn search_discrete_d0(
    kind: DiscreteKind,
    b: f64,
    d: f64,
    p: &ValidationParams,
) -> Result<(DiscreteSchedule, ConditionReport)> {
    let mut best: Option<f64> = None;
    for d0 in scale_grid() {
        let s = make_discrete(kind, b, d, d0)?;
        let r = validate_discrete(&s, p)?;
        if r.passed {
            return Ok((s, r));
        }
        let m = worst_margin(&r);
        best = Some(best.map_or(m, |b: f64| b.max(m)));
    }
    Err(no_scale(best))
}

/// `λ = max(M1/|y|, 2^k)` for the smallest `k ∈ [-40, 60]` passing validation.
pub fn search_lambda(
    mut p: ValidationParams,
    validate: impl Fn(&ValidationParams) -> Result<ConditionReport>,
) -> Result<(f64, ConditionReport)> {
    let floor = p.m1 / p.y_norm;
    let mut tried = f64::NAN;
    for k in -40..=60 {
        let lam = f64::max(floor, 2f64.powi(k));
        if lam == tried || !(lam > 0.0) {
            continue;
        }
        tried = lam;
        p.lambda = lam;
        let r = validate(&p)?;
        if r.passed {
            return Ok((lam, r));
        }
    }
    Err(violated("no lambda in [M1/|y|, 2^60] satisfies every condition", f64::NEG_INFINITY))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> ValidationParams {
        ValidationParams {
            m1: 1.0,
            c0: 0.1,
            c1: 0.1,
            lambda: 1.0,
            y_norm: 1.0,
            residual0: 1.0,
            horizon: 1e4,
            alpha_tilde: 0.1,
            g0: 0.0,
        }
    }

    #[test]
    fn newton_flow_constraint() {
        assert!(make_continuous(ContinuousKind::NewtonFlow, 1.0, 7.0, 10.0).is_ok());
        assert_eq!(
            make_continuous(ContinuousKind::NewtonFlow, 1.0, 5.0, 10.0).unwrap_err(),
            Error::ConstraintViolated {
                condition: "c > 6b".into(),
                margin: -1.0
            }
        );
        assert_eq!(
            make_continuous(ContinuousKind::NewtonFlow, 1.0, 6.0, 10.0).unwrap_err(),
            Error::ConstraintViolated {
                condition: "c > 6b (boundary c = 6b)".into(),
                margin: 0.0
            }
        );
    }

    #[test]
    fn gradient_flow_constraint() {
        // d^2 c^(1/2) = 1.69 >= 1.5
        assert!(make_continuous(ContinuousKind::GradientFlow, 0.25, 1.0, 1.3).is_ok());
        // 1.44 < 1.5
        assert!(make_continuous(ContinuousKind::GradientFlow, 0.25, 1.0, 1.2).is_err());
        assert!(make_continuous(ContinuousKind::GradientFlow, 0.3, 1.0, 5.0).is_err());
    }

    #[test]
    fn simple_flow_constraint() {
        assert!(make_continuous(ContinuousKind::SimpleFlow, 0.5, 1.0, 3.0).is_ok());
        assert!(make_continuous(ContinuousKind::SimpleFlow, 0.5, 1.0, 2.99).is_err());
        assert!(make_continuous(ContinuousKind::SimpleFlow, 0.6, 1.0, 10.0).is_err());
    }

    #[test]
    fn discrete_ranges() {
        let s = make_discrete(DiscreteKind::NewtonIter, 1.0, 1.0, 5.0).unwrap();
        assert_eq!(s.a(0) / s.a(1), 2.0);
        assert!(matches!(
            make_discrete(DiscreteKind::SimpleIter, 0.6, 1.0, 1.0),
            Err(Error::ConstraintViolated { .. })
        ));
        assert!(make_discrete(DiscreteKind::GradientIter, 0.25, 0.5, 1.0).is_err());
    }

    #[test]
    fn sweep_first_value() {
        let s = sweep_schedule(4.0, 0.01).unwrap();
        assert_relative_eq!(s.a(0), 4.0 * 0.01f64.powf(0.99), max_relative = 1e-15);
        assert!((s.a(0) - 0.0418853).abs() < 1e-6);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let s = make_continuous(ContinuousKind::NewtonFlow, 0.7, 5.0, 3.0).unwrap();
        for t in [0.0, 0.3, 2.0, 50.0, 1e3] {
            let h = 1e-5 * (s.c + t);
            let fd = (s.a(t + h) - s.a(t - h)) / (2.0 * h);
            assert_relative_eq!(s.a_dot(t), fd, max_relative = 1e-8);
        }
    }

    #[test]
    fn index_of_level() {
        let s = make_discrete(DiscreteKind::NewtonIter, 1.0, 1.0, 5.0).unwrap();
        assert_eq!(s.index_of(1.0 / 9.0), 44);
        assert_eq!(s.index_of(10.0), 0);
    }

    #[test]
    fn lambda_boundary_passes() {
        let s = make_continuous(ContinuousKind::NewtonFlow, 1.0, 7.0, 10.0).unwrap();
        let mut p = params();
        p.m1 = 2.0;
        p.y_norm = 4.0;
        p.lambda = 0.5;
        let r = validate_continuous(&s, &p).unwrap();
        let c = r.condition(names::M1_OVER_Y).unwrap();
        assert_eq!(c.worst_margin, 0.0);
        assert!(c.passed);
    }

    #[test]
    fn newton_bracket_stays_positive() {
        // |a'|/a = b/(c+t) ≤ 1/7 < 1/6
        let s = make_continuous(ContinuousKind::NewtonFlow, 1.0, 7.0, 10.0).unwrap();
        for t in continuous_sample_times(1e6) {
            assert!(1.0 - s.a_dot(t).abs() / s.a(t) >= 5.0 / 6.0);
        }
    }

    #[test]
    fn quadratic_decay_condition() {
        let s = make_continuous(ContinuousKind::SimpleFlow, 0.5, 1.0, 3.0).unwrap();
        let r = validate_continuous(&s, &params()).unwrap();
        let c = r.condition(names::DECAY_QUADRATIC).unwrap();
        assert!(c.passed && c.worst_margin > 0.0);
        // Equivalent form b (c+t)^(b-1) <= d/2 is tightest at t = 0: 1/2 <= 3/2.
        assert_relative_eq!(s.a(0.0).powi(2) / 2.0 - s.a_dot(0.0).abs(), 3.0, max_relative = 1e-14);
    }

    #[test]
    fn search_finds_newton_flow_scale() {
        let (s, r) = search_continuous_d(ContinuousKind::NewtonFlow, 1.0, 7.0, &params()).unwrap();
        assert!(r.passed);
        // d = 4 violates the initial condition d^2/49 >= 1, d = 8 does not.
        assert_eq!(s.d, 8.0);
    }

    #[test]
    fn search_rejects_infeasible_lambda() {
        let mut p = params();
        p.m1 = 100.0;
        p.lambda = 1.0;
        let s = make_continuous(ContinuousKind::NewtonFlow, 1.0, 7.0, 1e3).unwrap();
        let r = validate_continuous(&s, &p).unwrap();
        assert!(!r.condition(names::M1_OVER_Y).unwrap().passed);
        assert!(!r.passed);
        let (lam, r) = search_lambda(p, |q| validate_continuous(&s, q)).unwrap();
        assert!(lam >= 100.0 && r.passed);
    }

    #[test]
    fn discrete_search_newton() {
        let mut p = params();
        p.horizon = 2000.0;
        let (s, r) = search_discrete_d0(DiscreteKind::NewtonIter, 1.0, 1.0, &p).unwrap();
        assert!(r.passed);
        let smaller = make_discrete(DiscreteKind::NewtonIter, 1.0, 1.0, s.d0 / 2.0).unwrap();
        if s.d0 > 1.0 {
            assert!(!validate_discrete(&smaller, &p).unwrap().passed);
        }
    }

    #[test]
    fn strict_g0_condition() {
        let s = make_continuous(ContinuousKind::SimpleFlow, 0.5, 1.0, 4.0).unwrap();
        let mut p = params();
        p.g0 = 4.0; // λ g0 / a(0) = 1
        let r = validate_continuous(&s, &p).unwrap();
        let c = r.condition(names::SIMPLE_G0).unwrap();
        assert_eq!(c.worst_margin, 0.0);
        assert!(!c.passed);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn discrete_positive_decreasing_ratio(b in 0.01f64..=1.0, d in 1.0f64..50.0, d0 in 0.01f64..100.0) {
                let s = make_discrete(DiscreteKind::NewtonIter, b, d, d0).unwrap();
                for n in 0..500 {
                    let (x, y) = (s.a(n), s.a(n + 1));
                    prop_assert!(y > 0.0 && y < x);
                    prop_assert!(x <= 2.0 * y);
                }
            }

            #[test]
            fn continuous_positive_decreasing(b in 0.01f64..=1.0, c in 6.5f64..50.0, d in 0.01f64..100.0) {
                let s = make_continuous(ContinuousKind::NewtonFlow, b, c, d).unwrap();
                let ts = continuous_sample_times(1e5);
                for w in ts.windows(2) {
                    prop_assert!(s.a(w[1]) > 0.0 && s.a(w[1]) < s.a(w[0]));
                }
            }

            #[test]
            fn constructed_schedules_validate(
                k in 0usize..3, c0 in 0.0f64..1.0, c1 in 0.0f64..1.0, m1 in 0.1f64..3.0, r0 in 0.01f64..3.0
            ) {
                let kind = [DiscreteKind::NewtonIter, DiscreteKind::GradientIter, DiscreteKind::SimpleIter][k];
                let p = ValidationParams {
                    m1, c0, c1, lambda: m1, y_norm: 1.0, residual0: r0, horizon: 300.0, alpha_tilde: 0.05, g0: 0.0,
                };
                if let Ok((s, _)) = search_discrete_d0(kind, kind.max_exponent(), 1.0, &p) {
                    prop_assert!(validate_discrete(&s, &p).unwrap().passed);
                }
            }
        }
    }
}
