//! The ABLOC iteration: alternate per-agent ridge bias fits with damped
//! inverse-variance weighting, keeping the iterate with the best validation
//! score.
//!
//! One iteration `k` (starting at 1):
//!
//! 1. `γ_k = min(shrink_base + shrink_step·k, shrink_cap)`,
//!    `α_k = α₀ · 5 / (1 + k/3)`;
//! 2. for each agent and dimension, ridge-fit the residual `Y_i − θ̂^(k−1)`
//!    on the agent's covariates over the training indices, predict over all
//!    `t` and scale by `γ_k`;
//! 3. subtract the shrunk prediction, giving `Ỹ_i`;
//! 4. `v_i = (1/T) Σ_t ‖Ỹ_{i,t} − θ̂^(k−1)_t‖²`;
//! 5. weights `∝ 1/(v_i + 1e-10)`, blended with the previous weights and
//!    renormalized;
//! 6. `θ̂^(k) = Σ_i w_i Ỹ_i`;
//! 7. score on the validation indices, keep the best;
//! 8. stop when `‖θ̂^(k) − θ̂^(k−1)‖_F / ‖θ̂^(k−1)‖_F < tol`.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::model::{
    AblocParams, AblocState, BiasModel, Dataset, ExperimentConfig, IterationRecord, Snapshot,
    SplitMode, ValidationMode, Weights,
};
use crate::ridge::ridge_fit_multi;

/// Added to each variance before inversion.
pub const VARIANCE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub gamma: f64,
    pub alpha: f64,
}

pub fn schedule_values(k: usize, params: &AblocParams) -> Result<Schedule> {
    if k < 1 {
        return Err(Error::invalid("k", "iterations are numbered from 1"));
    }
    let kf = k as f64;
    Ok(Schedule {
        gamma: (params.shrink_base + params.shrink_step * kf).min(params.shrink_cap),
        alpha: params.alpha0 * 5.0 / (1.0 + kf / 3.0),
    })
}

/// Train and validation time indices, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

impl DataSplit {
    pub fn new(t_len: usize, fraction: f64, mode: SplitMode) -> Result<Self> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::invalid(
                "split_fraction",
                format!("{fraction} not in (0, 1)"),
            ));
        }
        let n_train = (fraction * t_len as f64).floor() as usize;
        if n_train == 0 || n_train >= t_len {
            return Err(Error::invalid(
                "split_fraction",
                format!("empty train or validation set for T = {t_len}"),
            ));
        }
        let mut order: Vec<usize> = (0..t_len).collect();
        if let SplitMode::Random { seed } = mode {
            order.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
        }
        let mut train = order[..n_train].to_vec();
        let mut validation = order[n_train..].to_vec();
        train.sort_unstable();
        validation.sort_unstable();
        Ok(DataSplit { train, validation })
    }
}

/// What the engine sees of one agent: observations and covariates, no truth.
#[derive(Debug, Clone, Copy)]
pub struct AgentObservations<'a> {
    pub observations: ArrayView2<'a, f64>,
    pub covariates: ArrayView2<'a, f64>,
}

pub fn observed(dataset: &Dataset) -> Vec<AgentObservations<'_>> {
    dataset
        .agents
        .iter()
        .map(|a| AgentObservations {
            observations: a.observations.view(),
            covariates: a.covariates.view(),
        })
        .collect()
}

fn check_agents(agents: &[AgentObservations<'_>], theta_hat: &ArrayView2<f64>) -> Result<()> {
    if agents.is_empty() {
        return Err(Error::invalid("agents", "need at least one agent"));
    }
    for a in agents {
        if a.observations.dim() != theta_hat.dim() {
            return Err(Error::shape(
                "agent observations",
                format!("{:?}", theta_hat.dim()),
                format!("{:?}", a.observations.dim()),
            ));
        }
        if a.covariates.nrows() != theta_hat.nrows() {
            return Err(Error::shape(
                "agent covariates rows",
                theta_hat.nrows(),
                a.covariates.nrows(),
            ));
        }
    }
    Ok(())
}

/// Bias models fitted at one iteration and the shrunk corrections they imply.
#[derive(Debug, Clone)]
pub struct BiasStep {
    pub models: Vec<BiasModel>,
    /// Per agent, `T×d`: `γ · f̂_i(X_i)` over every time index.
    pub corrections: Vec<Array2<f64>>,
}

pub fn learn_bias_step(
    agents: &[AgentObservations<'_>],
    theta_hat: ArrayView2<f64>,
    train_idx: &[usize],
    schedule: Schedule,
) -> Result<BiasStep> {
    check_agents(agents, &theta_hat)?;
    if train_idx.is_empty() {
        return Err(Error::invalid("train_idx", "training set is empty"));
    }
    if theta_hat.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("learn_bias_step estimate"));
    }
    let mut models = Vec::with_capacity(agents.len());
    let mut corrections = Vec::with_capacity(agents.len());
    for a in agents {
        let residual = &a.observations - &theta_hat;
        let x_train = a.covariates.select(Axis(0), train_idx);
        let r_train = residual.select(Axis(0), train_idx);
        // p×d, transposed into one row per dimension.
        let coef = ridge_fit_multi(x_train.view(), r_train.view(), schedule.alpha)?
            .reversed_axes()
            .as_standard_layout()
            .into_owned();
        let model = BiasModel {
            coef,
            alpha_used: schedule.alpha,
            shrinkage: schedule.gamma,
        };
        corrections.push(a.covariates.dot(&model.coef.t()) * schedule.gamma);
        models.push(model);
    }
    Ok(BiasStep {
        models,
        corrections,
    })
}

/// `Ỹ_i = Y_i − correction_i`.
pub fn corrected_observations(
    agents: &[AgentObservations<'_>],
    corrections: &[Array2<f64>],
) -> Vec<Array2<f64>> {
    agents
        .iter()
        .zip(corrections)
        .map(|(a, c)| &a.observations - c)
        .collect()
}

fn check_corrected(corrected: &[Array2<f64>], theta_hat: &ArrayView2<f64>) -> Result<()> {
    if corrected.is_empty() {
        return Err(Error::invalid("corrected", "need at least one agent"));
    }
    for c in corrected {
        if c.dim() != theta_hat.dim() {
            return Err(Error::shape(
                "corrected observations",
                format!("{:?}", theta_hat.dim()),
                format!("{:?}", c.dim()),
            ));
        }
    }
    Ok(())
}

/// Mean over all time points of `‖Ỹ_{i,t} − θ̂_t‖²`, one value per agent.
pub fn estimate_variances(
    corrected: &[Array2<f64>],
    theta_hat: ArrayView2<f64>,
) -> Result<Vec<f64>> {
    check_corrected(corrected, &theta_hat)?;
    let t = theta_hat.nrows().max(1) as f64;
    Ok(corrected
        .iter()
        .map(|c| {
            c.iter()
                .zip(theta_hat.iter())
                .map(|(y, th)| (y - th).powi(2))
                .sum::<f64>()
                / t
        })
        .collect())
}

/// Damped inverse-variance update:
/// `normalize(damping_new · w_new + (1 − damping_new) · prev)`.
pub fn update_weights(variances: &[f64], prev: &Weights, damping_new: f64) -> Result<Weights> {
    if variances.len() != prev.len() {
        return Err(Error::shape("update_weights", prev.len(), variances.len()));
    }
    if variances.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid("variances", "must be finite and >= 0"));
    }
    if !(damping_new > 0.0 && damping_new <= 1.0) {
        return Err(Error::invalid(
            "damping_new",
            format!("{damping_new} not in (0, 1]"),
        ));
    }
    let fresh = Weights::normalize(
        variances
            .iter()
            .map(|v| 1.0 / (v + VARIANCE_FLOOR))
            .collect(),
    )?;
    let blended = fresh
        .as_slice()
        .iter()
        .zip(prev.as_slice())
        .map(|(new, old)| damping_new * new + (1.0 - damping_new) * old)
        .collect();
    Weights::normalize(blended)
}

/// `θ̂_t = Σ_i w_i Ỹ_{i,t}`.
pub fn combine(corrected: &[Array2<f64>], weights: &Weights) -> Result<Array2<f64>> {
    let first = corrected
        .first()
        .ok_or_else(|| Error::invalid("corrected", "need at least one agent"))?;
    if corrected.len() != weights.len() {
        return Err(Error::shape(
            "combine weights",
            corrected.len(),
            weights.len(),
        ));
    }
    let mut out = Array2::<f64>::zeros(first.dim());
    for (c, w) in corrected.iter().zip(weights.as_slice()) {
        if c.dim() != first.dim() {
            return Err(Error::shape(
                "combine",
                format!("{:?}", first.dim()),
                format!("{:?}", c.dim()),
            ));
        }
        out.scaled_add(*w, c);
    }
    Ok(out)
}

/// Early-stopping score over `val_idx`.
///
/// Proxy: mean of `Σ_i w_i ‖Ỹ_{i,t} − θ̂_t‖²`. Oracle: mean of `‖θ̂_t − θ_t‖²`.
pub fn validation_score(
    corrected: &[Array2<f64>],
    theta_hat: ArrayView2<f64>,
    weights: &Weights,
    val_idx: &[usize],
    mode: ValidationMode,
    theta_true: Option<ArrayView2<f64>>,
) -> Result<f64> {
    if val_idx.is_empty() {
        return Err(Error::invalid("val_idx", "validation set is empty"));
    }
    if let Some(&bad) = val_idx.iter().find(|&&t| t >= theta_hat.nrows()) {
        return Err(Error::shape(
            "validation index",
            format!("< {}", theta_hat.nrows()),
            bad,
        ));
    }
    let n = val_idx.len() as f64;
    let sq = |a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>| -> f64 {
        a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum()
    };
    match mode {
        ValidationMode::Oracle => {
            let truth = theta_true.ok_or_else(|| {
                Error::invalid(
                    "validation_mode",
                    "oracle scoring needs the true trajectory",
                )
            })?;
            if truth.dim() != theta_hat.dim() {
                return Err(Error::shape(
                    "theta_true",
                    format!("{:?}", theta_hat.dim()),
                    format!("{:?}", truth.dim()),
                ));
            }
            Ok(val_idx
                .iter()
                .map(|&t| sq(theta_hat.row(t), truth.row(t)))
                .sum::<f64>()
                / n)
        }
        ValidationMode::Proxy => {
            check_corrected(corrected, &theta_hat)?;
            if corrected.len() != weights.len() {
                return Err(Error::shape(
                    "validation weights",
                    corrected.len(),
                    weights.len(),
                ));
            }
            Ok(val_idx
                .iter()
                .map(|&t| {
                    corrected
                        .iter()
                        .zip(weights.as_slice())
                        .map(|(c, w)| w * sq(c.row(t), theta_hat.row(t)))
                        .sum::<f64>()
                })
                .sum::<f64>()
                / n)
        }
    }
}

fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `‖new − old‖_F / ‖old‖_F`, falling back to the absolute change when the
/// previous estimate is identically zero.
pub fn relative_change(new: &Array2<f64>, old: &Array2<f64>) -> f64 {
    let diff = frobenius(&(new - old));
    let base = frobenius(old);
    if base > 0.0 {
        diff / base
    } else {
        diff
    }
}

/// Per-time mean over agents, the starting estimate.
pub fn initial_estimate(agents: &[AgentObservations<'_>]) -> Result<Array2<f64>> {
    let first = agents
        .first()
        .ok_or_else(|| Error::invalid("agents", "need at least one agent"))?;
    let mut sum = Array2::<f64>::zeros(first.observations.dim());
    for a in agents {
        if a.observations.dim() != sum.dim() {
            return Err(Error::shape(
                "agent observations",
                format!("{:?}", sum.dim()),
                format!("{:?}", a.observations.dim()),
            ));
        }
        sum += &a.observations;
    }
    Ok(sum / agents.len() as f64)
}

/// Runs the full iteration. `theta_true` is only consulted for oracle-mode
/// validation.
pub fn run_abloc_with(
    agents: &[AgentObservations<'_>],
    split: &DataSplit,
    params: &AblocParams,
    theta_true: Option<ArrayView2<f64>>,
) -> Result<AblocState> {
    params.validate()?;
    let mut theta_hat = initial_estimate(agents)?;
    check_agents(agents, &theta_hat.view())?;
    if params.validation_mode == ValidationMode::Oracle && theta_true.is_none() {
        return Err(Error::invalid(
            "validation_mode",
            "oracle scoring needs the true trajectory",
        ));
    }
    let k_agents = agents.len();
    let mut weights = Weights::uniform(k_agents);
    let mut history = Vec::with_capacity(params.max_iter);
    let mut best: Option<Snapshot> = None;
    let mut last_models = Vec::new();
    let mut converged = false;
    let mut iter = 0;

    for k in 1..=params.max_iter {
        iter = k;
        let schedule = schedule_values(k, params)?;
        let step = learn_bias_step(agents, theta_hat.view(), &split.train, schedule)?;
        let corrected = corrected_observations(agents, &step.corrections);
        let variances = estimate_variances(&corrected, theta_hat.view())?;
        weights = update_weights(&variances, &weights, params.damping_new)?;
        let next = combine(&corrected, &weights)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("ABLOC estimate"));
        }
        let score = validation_score(
            &corrected,
            next.view(),
            &weights,
            &split.validation,
            params.validation_mode,
            theta_true,
        )?;
        let change = relative_change(&next, &theta_hat);
        theta_hat = next;

        history.push(IterationRecord {
            iteration: k,
            gamma: schedule.gamma,
            alpha: schedule.alpha,
            validation_score: score,
            relative_change: change,
            variances,
            weights: weights.clone(),
        });
        if best.as_ref().map_or(true, |b| score < b.validation_score) {
            best = Some(Snapshot {
                iteration: k,
                theta_hat: theta_hat.clone(),
                weights: weights.clone(),
                bias_models: step.models.clone(),
                validation_score: score,
            });
        }
        last_models = step.models;
        if change < params.tol {
            converged = true;
            break;
        }
    }

    Ok(AblocState {
        theta_hat,
        weights,
        bias_models: last_models,
        iter,
        // max_iter >= 1, so at least one snapshot exists.
        best: best.expect("at least one iteration ran"),
        converged,
        history,
    })
}

/// Runs ABLOC on a generated dataset with the configured split and params.
pub fn run_abloc(dataset: &Dataset, config: &ExperimentConfig) -> Result<AblocState> {
    dataset.check_shapes()?;
    let split = DataSplit::new(dataset.t(), config.split_fraction, config.split_mode)?;
    run_abloc_with(
        &observed(dataset),
        &split,
        &config.abloc,
        Some(dataset.theta.view()),
    )
}
