//! Closed-form bounds: residual variances, inverse-variance weights, baseline
//! and optimal MSE, the efficiency bound, sample requirements and the
//! learn-or-average recommendation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AgentSpec, TheoryReport, Weights};

/// `‖f‖² / (‖f‖² + τ²)`.
pub fn learnability_ratio(f_sq_norm: f64, tau_sq: f64) -> Result<f64> {
    if !(f_sq_norm >= 0.0 && tau_sq >= 0.0) || !f_sq_norm.is_finite() || !tau_sq.is_finite() {
        return Err(Error::invalid(
            "learnability inputs",
            "must be finite and >= 0",
        ));
    }
    let total = f_sq_norm + tau_sq;
    if total == 0.0 {
        return Err(Error::Undefined(
            "learnable and stochastic variance are both zero",
        ));
    }
    Ok(f_sq_norm / total)
}

/// Variance left after perfect removal of the learnable bias,
/// `(1 − λ)β² + σ²`.
pub fn residual_variance(agent: &AgentSpec) -> f64 {
    agent.tau_sq() + agent.sigma_sq()
}

fn check_variances(variances: &[f64]) -> Result<()> {
    if variances.is_empty() {
        return Err(Error::invalid("variances", "need at least one agent"));
    }
    if let Some(v) = variances.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::invalid(
            "variances",
            format!("{v} must be finite and > 0"),
        ));
    }
    Ok(())
}

/// Inverse-variance weights `(1/v_i) / Σ 1/v_j`.
pub fn optimal_weights(variances: &[f64]) -> Result<Weights> {
    check_variances(variances)?;
    Weights::normalize(variances.iter().map(|v| 1.0 / v).collect())
}

/// Uniform averaging without correction, `(1/K²) Σ (β² + σ²)`.
pub fn mse_baseline(agents: &[AgentSpec]) -> Result<f64> {
    if agents.is_empty() {
        return Err(Error::invalid("agents", "need at least one agent"));
    }
    let k = agents.len() as f64;
    Ok(agents
        .iter()
        .map(|a| a.beta_sq() + a.sigma_sq())
        .sum::<f64>()
        / (k * k))
}

/// `1 / Σ 1/v_i`.
pub fn mse_optimal(variances: &[f64]) -> Result<f64> {
    check_variances(variances)?;
    Ok(1.0 / variances.iter().map(|v| 1.0 / v).sum::<f64>())
}

/// `λ̄ β̄² / (β̄² + σ̄²)`.
pub fn simplified_bound(lambda_bar: f64, beta_bar_sq: f64, sigma_bar_sq: f64) -> Result<f64> {
    if [lambda_bar, beta_bar_sq, sigma_bar_sq]
        .iter()
        .any(|v| !v.is_finite() || *v < 0.0)
    {
        return Err(Error::invalid(
            "simplified_bound inputs",
            "must be finite and >= 0",
        ));
    }
    let denom = beta_bar_sq + sigma_bar_sq;
    if denom == 0.0 {
        return Err(Error::Undefined(
            "mean bias and noise variances are both zero",
        ));
    }
    Ok(lambda_bar * beta_bar_sq / denom)
}

/// Arithmetic means `(λ̄, β̄², σ̄²)` over the agents.
pub fn agent_means(agents: &[AgentSpec]) -> (f64, f64, f64) {
    let k = agents.len().max(1) as f64;
    let sum = agents.iter().fold((0.0, 0.0, 0.0), |acc, a| {
        (acc.0 + a.lambda, acc.1 + a.beta_sq(), acc.2 + a.sigma_sq())
    });
    (sum.0 / k, sum.1 / k, sum.2 / k)
}

/// Full closed-form report for an agent list.
pub fn efficiency_bound(agents: &[AgentSpec]) -> Result<TheoryReport> {
    if agents.is_empty() {
        return Err(Error::invalid("agents", "need at least one agent"));
    }
    for a in agents {
        a.validate()?;
    }
    let v_star: Vec<f64> = agents.iter().map(residual_variance).collect();
    let w_star = optimal_weights(&v_star)?;
    let baseline = mse_baseline(agents)?;
    let optimal = mse_optimal(&v_star)?;
    let eta_bound = (baseline - optimal) / baseline;

    let (num, den) = agents
        .iter()
        .zip(w_star.as_slice())
        .fold((0.0, 0.0), |(n, d), (a, w)| {
            (
                n + w * a.learnable_var(),
                d + w * (a.beta_sq() + a.sigma_sq()),
            )
        });
    let eta_weighted_ratio = num / den;

    let (lambda_bar, beta_bar_sq, sigma_bar_sq) = agent_means(agents);
    let eta_simplified = simplified_bound(lambda_bar, beta_bar_sq, sigma_bar_sq)?;

    let precision: f64 = agents.iter().map(|a| 1.0 / a.sigma_sq()).sum();
    let oracle_mse_noise_only = 1.0 / precision;

    Ok(TheoryReport {
        v_star,
        w_star,
        mse_baseline: baseline,
        mse_optimal: optimal,
        eta_bound,
        eta_weighted_ratio,
        eta_simplified,
        oracle_mse_noise_only,
    })
}

/// Inputs to the sample-size bound `N ≥ C (d + Σp) / (ε² λ̄²) · ln(K/δ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRequirement {
    pub c: f64,
    pub d: usize,
    pub p_list: Vec<usize>,
    pub eps: f64,
    pub lambda_bar: f64,
    pub delta: f64,
}

impl SampleRequirement {
    pub fn k(&self) -> usize {
        self.p_list.len()
    }

    /// Smallest integer `N` meeting the bound.
    pub fn samples(&self) -> Result<u64> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid("c", format!("{} must be > 0", self.c)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::invalid("eps", format!("{} not in (0, 1)", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(
                "delta",
                format!("{} not in (0, 1)", self.delta),
            ));
        }
        if self.lambda_bar == 0.0 {
            return Err(Error::Infeasible("mean learnability is zero"));
        }
        if !(self.lambda_bar > 0.0 && self.lambda_bar <= 1.0) {
            return Err(Error::invalid(
                "lambda_bar",
                format!("{} not in (0, 1]", self.lambda_bar),
            ));
        }
        if self.p_list.is_empty() {
            return Err(Error::invalid("p_list", "need at least one agent"));
        }
        let dims = (self.d + self.p_list.iter().sum::<usize>()) as f64;
        let n = self.c * dims / (self.eps * self.eps * self.lambda_bar * self.lambda_bar)
            * (self.k() as f64 / self.delta).ln();
        Ok(n.ceil() as u64)
    }
}

pub fn sample_requirement(
    c: f64,
    d: usize,
    p_list: &[usize],
    eps: f64,
    lambda_bar: f64,
    delta: f64,
) -> Result<u64> {
    SampleRequirement {
        c,
        d,
        p_list: p_list.to_vec(),
        eps,
        lambda_bar,
        delta,
    }
    .samples()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    LearnBias,
    SimpleAverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub decision: Decision,
    pub checks: Vec<Check>,
}

impl Recommendation {
    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub const CHECK_LEARNABILITY: &str = "learnability";
pub const CHECK_SIGNAL_TO_NOISE: &str = "signal_to_noise";
pub const CHECK_DATA: &str = "sufficient_data";

/// Learn bias only when `λ̄ > 0.5`, `β̄²/σ̄² > 0.5` and `T > 10 (d + Σp)`.
pub fn decision_rule(
    lambda_bar: f64,
    beta_bar_sq: f64,
    sigma_bar_sq: f64,
    t: usize,
    d: usize,
    p_list: &[usize],
) -> Recommendation {
    let snr = if sigma_bar_sq > 0.0 {
        beta_bar_sq / sigma_bar_sq
    } else if beta_bar_sq > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let data_floor = 10.0 * (d + p_list.iter().sum::<usize>()) as f64;
    let checks = vec![
        Check {
            name: CHECK_LEARNABILITY.into(),
            value: lambda_bar,
            threshold: 0.5,
            passed: lambda_bar > 0.5,
        },
        Check {
            name: CHECK_SIGNAL_TO_NOISE.into(),
            value: snr,
            threshold: 0.5,
            passed: snr > 0.5,
        },
        Check {
            name: CHECK_DATA.into(),
            value: t as f64,
            threshold: data_floor,
            passed: t as f64 > data_floor,
        },
    ];
    let decision = if checks.iter().all(|c| c.passed) {
        Decision::LearnBias
    } else {
        Decision::SimpleAverage
    };
    Recommendation { decision, checks }
}

/// [`decision_rule`] evaluated on the nominal agent means.
pub fn recommend(agents: &[AgentSpec], t: usize, d: usize) -> Recommendation {
    let (lambda_bar, beta_bar_sq, sigma_bar_sq) = agent_means(agents);
    let p_list: Vec<usize> = agents.iter().map(|a| a.p).collect();
    decision_rule(lambda_bar, beta_bar_sq, sigma_bar_sq, t, d, &p_list)
}
