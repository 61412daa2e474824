use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sample_tolerance;
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Rounding allowance in `g_n ≤ 1/μ_n`, in units of the bound.
const ROUNDING: f64 = 4.0 * f64::EPSILON;

pub mod names {
    pub const STEP: &str = "0 < h_n gamma_n < 1";
    pub const MU_GROWING: &str = "0 < mu_n <= mu_{n+1}";
    pub const NONNEGATIVE: &str = "alpha_n, beta_n >= 0";
    pub const GROWTH: &str =
        "alpha_n/mu_n^p + beta_n <= (gamma_n - (mu_{n+1} - mu_n)/(mu_n h_n))/mu_n";
    pub const INITIAL: &str = "g_0 <= 1/mu_0";
}

/// Sequences for `n = 0..N`; `mu` carries one more entry, `mu_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteInstance {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub h: Vec<f64>,
    pub mu: Vec<f64>,
    pub p: f64,
    pub g0: f64,
}

impl DiscreteInstance {
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// `g_{n+1} = g_n(1 − h_n γ_n) + α_n h_n g_n^p + h_n β_n`
    pub fn step(&self, n: usize, g: f64) -> f64 {
        let h = self.h[n];
        g * (1.0 - h * self.gamma[n]) + self.alpha[n] * h * g.powf(self.p) + h * self.beta[n]
    }

    /// The same sequence with `α, β, γ` multiplied by `s` and `h` divided by `s`.
    pub fn rescaled(&self, s: f64) -> Self {
        let mul = |v: &[f64]| v.iter().map(|x| x * s).collect();
        Self {
            alpha: mul(&self.alpha),
            beta: mul(&self.beta),
            gamma: mul(&self.gamma),
            h: self.h.iter().map(|x| x / s).collect(),
            mu: self.mu.clone(),
            p: self.p,
            g0: self.g0,
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.len();
        if n == 0 || self.beta.len() != n || self.gamma.len() != n || self.h.len() != n {
            return Err(Error::InvalidInput(
                "alpha, beta, gamma and h must share a nonzero length".into(),
            ));
        }
        if self.mu.len() != n + 1 {
            return Err(Error::InvalidInput(format!(
                "mu needs {} entries, got {}",
                n + 1,
                self.mu.len()
            )));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidInput(format!("p = {} must exceed 1", self.p)));
        }
        if !(self.g0 >= 0.0 && self.g0.is_finite()) {
            return Err(Error::InvalidInput(format!("g0 = {} must be >= 0", self.g0)));
        }
        Ok(())
    }

    /// First violated hypothesis, if any.
    pub fn check(&self) -> Result<()> {
        self.validate()?;
        let fail = |condition: &str, at: usize, margin: f64| {
            Err(Error::PreconditionFailed {
                condition: condition.to_string(),
                at: at as f64,
                margin,
            })
        };
        for n in 0..self.len() {
            let (a, b, g, h, mu, mu_next) = (
                self.alpha[n],
                self.beta[n],
                self.gamma[n],
                self.h[n],
                self.mu[n],
                self.mu[n + 1],
            );
            let hg = h * g;
            if !(h > 0.0 && hg > 0.0 && hg < 1.0) {
                return fail(names::STEP, n, hg.min(1.0 - hg));
            }
            if !(mu > 0.0 && mu_next >= mu) {
                return fail(names::MU_GROWING, n, (mu_next - mu).min(mu));
            }
            if !(a >= 0.0 && b >= 0.0) {
                return fail(names::NONNEGATIVE, n, a.min(b));
            }
            let growth = (mu_next - mu) / (mu * h);
            let lhs = a / mu.powf(self.p) + b;
            let rhs = (g - growth) / mu;
            let margin = rhs - lhs;
            if margin < -sample_tolerance(&[lhs, g / mu, growth / mu]) {
                return fail(names::GROWTH, n, margin);
            }
        }
        let margin = 1.0 / self.mu[0] - self.g0;
        if margin < 0.0 {
            return fail(names::INITIAL, 0, margin);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteReport {
    pub g: Vec<f64>,
    pub bound: Vec<f64>,
    /// `min (1/μ_n − g_n)`; may be zero when the initial condition is tight.
    pub min_margin: f64,
    pub min_margin_at: usize,
}

/// Iterate the equality recursion and check `g_n ≤ 1/μ_n` for `n ≤ N`.
pub fn bound_discrete(inst: &DiscreteInstance) -> Result<DiscreteReport> {
    inst.check()?;
    let n = inst.len();
    let mut g = Vec::with_capacity(n + 1);
    let mut bound = Vec::with_capacity(n + 1);
    let (mut min_margin, mut min_margin_at) = (f64::INFINITY, 0);
    let mut y = inst.g0;
    for k in 0..=n {
        if k > 0 {
            y = inst.step(k - 1, y);
        }
        let b = 1.0 / inst.mu[k];
        if !(y >= 0.0 && y <= b * (1.0 + ROUNDING)) {
            return Err(Error::BoundViolated { at: k as f64, value: y, bound: b });
        }
        if b - y < min_margin {
            min_margin = b - y;
            min_margin_at = k;
        }
        g.push(y);
        bound.push(b);
    }
    Ok(DiscreteReport {
        g,
        bound,
        min_margin,
        min_margin_at,
    })
}

/// A feasible instance of length `200` with geometric `μ_n`,
/// `p ∈ {1.5, 2, 3}`, random steps, and `α_n, β_n` splitting a random part
/// of the slack. Draws repeat until the hypotheses hold.
pub fn random_discrete_instance(seed: u64) -> DiscreteInstance {
    const N: usize = 200;
    let mut rng = seeded(seed);
    loop {
        let p: f64 = [1.5, 2.0, 3.0][rng.random_range(0..3)];
        let mu0: f64 = rng.random_range(0.5..2.0);
        let mut mu = vec![mu0];
        let (mut alpha, mut beta, mut gamma, mut h) = (vec![], vec![], vec![], vec![]);
        for n in 0..N {
            let hn = rng.random_range(0.05..1.0);
            let ratio = 1.0 + rng.random_range(0.0..0.3) * hn;
            let next = mu[n] * ratio;
            let growth = (ratio - 1.0) / hn;
            // γ_n above the growth term with h_n γ_n < 1.
            let g = growth + rng.random_range(0.05..0.95) * (1.0 / hn - growth);
            let slack = (g - growth) / mu[n];
            let theta = rng.random_range(0.05..0.95);
            let (u1, u2) = (rng.random_range(0.0..0.95), rng.random_range(0.0..0.95));
            alpha.push(theta * u1 * slack * mu[n].powf(p));
            beta.push((1.0 - theta) * u2 * slack);
            gamma.push(g);
            h.push(hn);
            mu.push(next);
        }
        let inst = DiscreteInstance {
            alpha,
            beta,
            gamma,
            h,
            g0: rng.random_range(0.0..1.0) / mu0,
            mu,
            p,
        };
        if inst.check().is_ok() {
            return inst;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_decay() {
        let n = 30;
        let inst = DiscreteInstance {
            alpha: vec![0.0; n],
            beta: vec![0.0; n],
            gamma: vec![0.5; n],
            h: vec![1.0; n],
            mu: vec![2.0; n + 1],
            p: 2.0,
            g0: 0.5,
        };
        let r = bound_discrete(&inst).unwrap();
        for (k, g) in r.g.iter().enumerate() {
            assert_eq!(*g, 0.5f64.powi(k as i32 + 1));
        }
        assert_eq!(r.min_margin, 0.0);
    }

    #[test]
    fn tight_initial_value() {
        let n = 50;
        let inst = DiscreteInstance {
            alpha: vec![0.1; n],
            beta: vec![0.05; n],
            gamma: vec![0.8; n],
            h: vec![0.5; n],
            mu: vec![1.0; n + 1],
            p: 2.0,
            g0: 1.0,
        };
        // (0.1 + 0.05) <= 0.8 strictly
        let r = bound_discrete(&inst).unwrap();
        assert_eq!(r.g[0], 1.0);
        assert!(r.g[1..].iter().all(|&g| g < 1.0));
    }

    #[test]
    fn step_condition() {
        let mut inst = random_discrete_instance(1);
        inst.h[3] = 2.0 / inst.gamma[3];
        assert!(matches!(
            bound_discrete(&inst),
            Err(Error::PreconditionFailed { ref condition, at, .. }) if condition == names::STEP && at == 3.0
        ));
    }

    #[test]
    fn initial_condition() {
        let mut inst = random_discrete_instance(2);
        inst.g0 = 1.01 / inst.mu[0];
        assert!(matches!(
            bound_discrete(&inst),
            Err(Error::PreconditionFailed { ref condition, .. }) if condition == names::INITIAL
        ));
    }

    #[test]
    fn shrinking_mu_rejected() {
        let mut inst = random_discrete_instance(3);
        inst.mu[10] = inst.mu[9] * 0.5;
        assert!(matches!(
            bound_discrete(&inst),
            Err(Error::PreconditionFailed { ref condition, .. }) if condition == names::MU_GROWING
        ));
    }

    #[test]
    fn rescaling_by_power_of_two_is_exact() {
        let inst = random_discrete_instance(4);
        let a = bound_discrete(&inst).unwrap();
        let b = bound_discrete(&inst.rescaled(8.0)).unwrap();
        assert_eq!(a.g, b.g);
    }

    #[test]
    fn length_mismatch() {
        let mut inst = random_discrete_instance(5);
        inst.mu.pop();
        assert!(matches!(bound_discrete(&inst), Err(Error::InvalidInput(_))));
    }
}
