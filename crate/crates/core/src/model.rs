//! Domain types shared by the generator, the solver and the harness.
//!
//! Arrays are dense `f64`, row-major by time: every `T×d` array has one row
//! per time point `t = 1..=T` (stored at row `t - 1`).

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of leading covariates the synthetic learnable bias depends on.
pub const BIAS_COVARIATES: usize = 6;

/// Nominal per-agent parameters.
///
/// `beta` is the per-dimension standard deviation of the total bias and
/// `lambda` the fraction of its variance that is predictable from the
/// covariates. The stochastic variance `tau²` is always derived from these two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub lambda: f64,
    pub beta: f64,
    pub sigma: f64,
    pub p: usize,
}

impl AgentSpec {
    pub fn new(lambda: f64, beta: f64, sigma: f64, p: usize) -> Result<Self> {
        let spec = AgentSpec {
            lambda,
            beta,
            sigma,
            p,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the parameter ranges. A zero `sigma` is accepted so that
    /// noiseless datasets can be generated; closed-form bounds that divide by
    /// the residual variance reject it there instead.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::invalid(
                "lambda",
                format!("{} not in [0, 1]", self.lambda),
            ));
        }
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(Error::invalid(
                "beta",
                format!("{} must be finite and >= 0", self.beta),
            ));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::invalid(
                "sigma",
                format!("{} must be finite and >= 0", self.sigma),
            ));
        }
        if self.p == 0 {
            return Err(Error::invalid("p", "covariate dimension must be >= 1"));
        }
        Ok(())
    }

    pub fn beta_sq(&self) -> f64 {
        self.beta * self.beta
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// Variance of the learnable component, `lambda * beta²`.
    pub fn learnable_var(&self) -> f64 {
        self.lambda * self.beta_sq()
    }

    /// Variance of the stochastic component, `(1 - lambda) * beta²`.
    pub fn tau_sq(&self) -> f64 {
        ((1.0 - self.lambda) * self.beta_sq()).max(0.0)
    }
}

/// Reference used when scoring an iterate for early stopping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationMode {
    /// Weighted spread of corrected observations around the estimate. Needs
    /// no ground truth.
    #[default]
    Proxy,
    /// Squared error against the true trajectory.
    Oracle,
}

/// How time indices are divided between training and validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SplitMode {
    /// First `split_fraction` of the time axis trains, the remainder validates.
    #[default]
    Contiguous,
    /// Seeded random permutation of the time axis.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AblocParams {
    pub alpha0: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub damping_new: f64,
    pub shrink_base: f64,
    pub shrink_step: f64,
    pub shrink_cap: f64,
    pub validation_mode: ValidationMode,
}

impl Default for AblocParams {
    fn default() -> Self {
        AblocParams {
            alpha0: 0.1,
            max_iter: 30,
            tol: 1e-4,
            damping_new: 0.7,
            shrink_base: 0.5,
            shrink_step: 0.02,
            shrink_cap: 0.9,
            validation_mode: ValidationMode::Proxy,
        }
    }
}

impl AblocParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha0", self.alpha0),
            ("tol", self.tol),
            ("shrink_base", self.shrink_base),
            ("shrink_step", self.shrink_step),
            ("shrink_cap", self.shrink_cap),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::invalid(
                    name,
                    format!("{value} must be finite and > 0"),
                ));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::invalid(
                "max_iter",
                "at least one iteration is required",
            ));
        }
        if !(self.damping_new > 0.0 && self.damping_new <= 1.0) {
            return Err(Error::invalid(
                "damping_new",
                format!("{} not in (0, 1]", self.damping_new),
            ));
        }
        if self.shrink_base > self.shrink_cap {
            return Err(Error::invalid(
                "shrink_base",
                format!(
                    "{} exceeds shrink_cap {}",
                    self.shrink_base, self.shrink_cap
                ),
            ));
        }
        if self.shrink_cap > 1.0 {
            return Err(Error::invalid(
                "shrink_cap",
                format!("{} > 1", self.shrink_cap),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub d: usize,
    pub t: usize,
    pub seed: u64,
    pub agents: Vec<AgentSpec>,
    pub abloc: AblocParams,
    pub split_fraction: f64,
    pub split_mode: SplitMode,
}

impl ExperimentConfig {
    /// The four-agent, `T = 2000`, `d = 3`, `p = 10` configuration with seed
    /// 42 used for the reference experiment.
    pub fn reference() -> Self {
        let table = [
            (0.75, 0.40, 0.10),
            (0.60, 0.45, 0.12),
            (0.50, 0.50, 0.15),
            (0.30, 0.60, 0.20),
        ];
        ExperimentConfig {
            d: 3,
            t: 2000,
            seed: 42,
            agents: table
                .iter()
                .map(|&(lambda, beta, sigma)| AgentSpec {
                    lambda,
                    beta,
                    sigma,
                    p: 10,
                })
                .collect(),
            abloc: AblocParams::default(),
            split_fraction: 0.8,
            split_mode: SplitMode::Contiguous,
        }
    }

    pub fn k(&self) -> usize {
        self.agents.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents.is_empty() {
            return Err(Error::invalid("agents", "at least one agent is required"));
        }
        for (i, agent) in self.agents.iter().enumerate() {
            agent.validate().map_err(|e| match e {
                Error::InvalidParameter { field, reason } => Error::InvalidParameter {
                    field: format!("agents[{i}].{field}"),
                    reason,
                },
                other => other,
            })?;
        }
        if self.d == 0 {
            return Err(Error::invalid("d", "parameter dimension must be >= 1"));
        }
        if self.t < 10 {
            return Err(Error::invalid(
                "t",
                format!("{} time points, need at least 10", self.t),
            ));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::invalid(
                "split_fraction",
                format!("{} not in (0, 1)", self.split_fraction),
            ));
        }
        let n_train = (self.split_fraction * self.t as f64).floor() as usize;
        if n_train == 0 || n_train >= self.t {
            return Err(Error::invalid(
                "split_fraction",
                format!("leaves an empty train or validation set for T = {}", self.t),
            ));
        }
        self.abloc.validate()
    }
}

/// Arrays generated for one agent. All `T×d` arrays share the time axis of
/// [`Dataset::theta`].
#[derive(Debug, Clone, PartialEq)]
pub struct AgentData {
    /// `T×p` covariates `X_{i,t}`.
    pub covariates: Array2<f64>,
    /// `d×6` coefficients of the learnable bias, one row per dimension.
    pub coefficients: Array2<f64>,
    pub learnable_bias: Array2<f64>,
    pub stochastic_bias: Array2<f64>,
    pub noise: Array2<f64>,
    pub observations: Array2<f64>,
}

impl AgentData {
    /// Realized total bias `f + ν`.
    pub fn total_bias(&self) -> Array2<f64> {
        &self.learnable_bias + &self.stochastic_bias
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `T×d` ground-truth trajectory.
    pub theta: Array2<f64>,
    pub agents: Vec<AgentData>,
}

impl Dataset {
    pub fn t(&self) -> usize {
        self.theta.nrows()
    }

    pub fn d(&self) -> usize {
        self.theta.ncols()
    }

    pub fn k(&self) -> usize {
        self.agents.len()
    }

    /// Largest absolute violation of `Y = θ + f + ν + ε` over all entries.
    pub fn reconstruction_error(&self) -> f64 {
        self.agents
            .iter()
            .flat_map(|a| {
                let rebuilt = &self.theta + &a.learnable_bias + &a.stochastic_bias + &a.noise;
                (&a.observations - &rebuilt).into_iter().collect::<Vec<_>>()
            })
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Checks that every array has the shape implied by `theta`.
    pub fn check_shapes(&self) -> Result<()> {
        let (t, d) = self.theta.dim();
        for a in &self.agents {
            for (name, arr) in [
                ("learnable_bias", &a.learnable_bias),
                ("stochastic_bias", &a.stochastic_bias),
                ("noise", &a.noise),
                ("observations", &a.observations),
            ] {
                if arr.dim() != (t, d) {
                    return Err(Error::ShapeMismatch {
                        context: "dataset",
                        expected: format!("{name} {t}x{d}"),
                        actual: format!("{:?}", arr.dim()),
                    });
                }
            }
            if a.covariates.nrows() != t {
                return Err(Error::shape(
                    "dataset covariates rows",
                    t,
                    a.covariates.nrows(),
                ));
            }
            if a.coefficients.dim() != (d, BIAS_COVARIATES) {
                return Err(Error::shape(
                    "dataset coefficients",
                    format!("{d}x{BIAS_COVARIATES}"),
                    format!("{:?}", a.coefficients.dim()),
                ));
            }
        }
        Ok(())
    }
}

/// Combination weights on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Weights(Vec<f64>);

impl Weights {
    pub fn uniform(k: usize) -> Self {
        Weights(vec![1.0 / k as f64; k])
    }

    /// Normalizes nonnegative raw weights onto the simplex.
    pub fn normalize(raw: Vec<f64>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::invalid("weights", "empty weight vector"));
        }
        if raw.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("weights", "entries must be finite and >= 0"));
        }
        let total: f64 = raw.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::invalid("weights", "sum must be positive and finite"));
        }
        Ok(Weights(raw.into_iter().map(|w| w / total).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for Weights {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for Weights {
    type Error = String;

    fn try_from(raw: Vec<f64>) -> std::result::Result<Self, String> {
        let total: f64 = raw.iter().sum();
        if raw.is_empty() || raw.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err("weights must be a nonempty vector of finite nonnegative values".into());
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(format!("weights sum to {total}, expected 1"));
        }
        Ok(Weights(raw))
    }
}

impl From<Weights> for Vec<f64> {
    fn from(w: Weights) -> Self {
        w.0
    }
}

/// Ridge coefficients for one agent, one row of length `p` per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasModel {
    pub coef: Array2<f64>,
    pub alpha_used: f64,
    pub shrinkage: f64,
}

impl BiasModel {
    /// Shrunk bias prediction `γ · X · coefᵀ`, `T×d`.
    pub fn predict(&self, covariates: &Array2<f64>) -> Array2<f64> {
        covariates.dot(&self.coef.t()) * self.shrinkage
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub validation_score: f64,
    pub relative_change: f64,
    pub variances: Vec<f64>,
    pub weights: Weights,
}

/// Parameters retained by early stopping.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub iteration: usize,
    pub theta_hat: Array2<f64>,
    pub weights: Weights,
    pub bias_models: Vec<BiasModel>,
    pub validation_score: f64,
}

/// Final state of an ABLOC run. `theta_hat`, `weights` and `bias_models` hold
/// the last iterate; `best` holds the early-stopping choice.
#[derive(Debug, Clone, PartialEq)]
pub struct AblocState {
    pub theta_hat: Array2<f64>,
    pub weights: Weights,
    pub bias_models: Vec<BiasModel>,
    pub iter: usize,
    pub best: Snapshot,
    pub converged: bool,
    pub history: Vec<IterationRecord>,
}

impl AblocState {
    /// The early-stopped estimate.
    pub fn estimate(&self) -> &Array2<f64> {
        &self.best.theta_hat
    }
}

/// Closed-form quantities derived from a list of agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    /// Residual variance per agent after the learnable bias is removed.
    pub v_star: Vec<f64>,
    pub w_star: Weights,
    pub mse_baseline: f64,
    pub mse_optimal: f64,
    /// `1 - mse_optimal / mse_baseline`.
    pub eta_bound: f64,
    /// `Σ w*λβ² / Σ w*(β² + σ²)`, the weighted-ratio form of the bound.
    pub eta_weighted_ratio: f64,
    /// Bound from agent means, `λ̄ β̄² / (β̄² + σ̄²)`.
    pub eta_simplified: f64,
    /// `1 / Σ 1/σ²`, the error left when the whole bias is known.
    pub oracle_mse_noise_only: f64,
}
