//! Reference combiners: plain averaging and the bias-aware oracle.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::engine::combine;
use crate::error::{Error, Result};
use crate::model::{AgentSpec, Dataset, Weights};

/// Per-`(t, j)` arithmetic mean over agents.
pub fn uniform_average(observations: &[ArrayView2<f64>]) -> Result<Array2<f64>> {
    let first = observations
        .first()
        .ok_or_else(|| Error::invalid("observations", "need at least one agent"))?;
    let mut sum = Array2::<f64>::zeros(first.dim());
    for o in observations {
        if o.dim() != sum.dim() {
            return Err(Error::shape(
                "uniform_average",
                format!("{:?}", sum.dim()),
                format!("{:?}", o.dim()),
            ));
        }
        sum += o;
    }
    Ok(sum / observations.len() as f64)
}

pub fn dataset_average(dataset: &Dataset) -> Result<Array2<f64>> {
    let views: Vec<_> = dataset
        .agents
        .iter()
        .map(|a| a.observations.view())
        .collect();
    uniform_average(&views)
}

/// Which part of the realized bias the oracle subtracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleBias {
    /// `f + ν`; the residual is pure measurement noise.
    Full,
    /// `f` only; the residual is `ν + ε`.
    LearnableOnly,
}

/// Where the oracle's inverse-variance weights come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleWeighting {
    /// Nominal residual variance from the agent specs: `σ²` for
    /// [`OracleBias::Full`], `(1 − λ)β² + σ²` for [`OracleBias::LearnableOnly`].
    Nominal,
    /// Mean squared residual `Y − bias − θ` measured on the dataset.
    Empirical,
}

#[derive(Debug, Clone)]
pub struct OracleEstimate {
    pub estimate: Array2<f64>,
    pub weights: Weights,
}

pub fn oracle_combine(
    dataset: &Dataset,
    agents: &[AgentSpec],
    bias: OracleBias,
    weighting: OracleWeighting,
) -> Result<OracleEstimate> {
    if dataset.k() == 0 {
        return Err(Error::invalid("dataset", "no agents"));
    }
    if agents.len() != dataset.k() {
        return Err(Error::shape(
            "oracle agent specs",
            dataset.k(),
            agents.len(),
        ));
    }
    dataset.check_shapes()?;
    let corrected: Vec<Array2<f64>> = dataset
        .agents
        .iter()
        .map(|a| match bias {
            OracleBias::Full => &a.observations - &a.learnable_bias - &a.stochastic_bias,
            OracleBias::LearnableOnly => &a.observations - &a.learnable_bias,
        })
        .collect();

    let variances: Vec<f64> = match weighting {
        OracleWeighting::Nominal => agents
            .iter()
            .map(|s| match bias {
                OracleBias::Full => s.sigma_sq(),
                OracleBias::LearnableOnly => s.tau_sq() + s.sigma_sq(),
            })
            .collect(),
        OracleWeighting::Empirical => corrected
            .iter()
            .map(|c| (c - &dataset.theta).mapv(|v| v * v).mean().unwrap_or(0.0))
            .collect(),
    };
    let weights = if variances.iter().all(|v| *v == variances[0]) {
        Weights::uniform(variances.len())
    } else if variances.iter().any(|v| *v <= 0.0) {
        // Noise-free agents are exact; share the weight among them.
        Weights::normalize(
            variances
                .iter()
                .map(|v| if *v <= 0.0 { 1.0 } else { 0.0 })
                .collect(),
        )?
    } else {
        Weights::normalize(variances.iter().map(|v| 1.0 / v).collect())?
    };
    let estimate = combine(&corrected, &weights)?;
    Ok(OracleEstimate { estimate, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ExperimentConfig;
    use crate::synth::generate_dataset;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn average_examples() {
        let y = array![[1.0, -2.0], [0.5, 3.0]];
        assert_eq!(uniform_average(&[y.view()]).unwrap(), y);
        let neg = -&y;
        let avg = uniform_average(&[y.view(), neg.view()]).unwrap();
        assert!(avg.iter().all(|v| *v == 0.0));
        assert!(uniform_average(&[]).is_err());
    }

    #[test]
    fn oracle_weights_follow_noise() {
        let cfg = ExperimentConfig::reference();
        let ds = generate_dataset(&cfg).unwrap();
        let o =
            oracle_combine(&ds, &cfg.agents, OracleBias::Full, OracleWeighting::Nominal).unwrap();
        // 1/σ² = [100, 69.44, 44.44, 25] normalized.
        let raw = [100.0, 1.0 / 0.0144, 1.0 / 0.0225, 25.0];
        let total: f64 = raw.iter().sum();
        for (got, r) in o.weights.as_slice().iter().zip(raw) {
            assert_abs_diff_eq!(*got, r / total, epsilon = 1e-12);
        }
        for (got, want) in o
            .weights
            .as_slice()
            .iter()
            .zip([0.4186, 0.2907, 0.1860, 0.1046])
        {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-4);
        }
        let mse = (&o.estimate - &ds.theta).mapv(|v| v * v).mean().unwrap();
        let expected = 1.0 / total;
        assert!((mse - expected).abs() < 0.15 * expected, "mse = {mse}");
    }

    #[test]
    fn equal_noise_gives_uniform_oracle() {
        let mut cfg = ExperimentConfig::reference();
        for a in &mut cfg.agents {
            a.sigma = 0.1;
        }
        let ds = generate_dataset(&cfg).unwrap();
        let o =
            oracle_combine(&ds, &cfg.agents, OracleBias::Full, OracleWeighting::Nominal).unwrap();
        assert_eq!(o.weights, Weights::uniform(4));
    }

    #[test]
    fn learnable_only_oracle_uses_residual_variance() {
        let cfg = ExperimentConfig::reference();
        let ds = generate_dataset(&cfg).unwrap();
        let o = oracle_combine(
            &ds,
            &cfg.agents,
            OracleBias::LearnableOnly,
            OracleWeighting::Nominal,
        )
        .unwrap();
        for (got, want) in o
            .weights
            .as_slice()
            .iter()
            .zip([0.49156, 0.25763, 0.16663, 0.08417])
        {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-5);
        }
        let e = oracle_combine(
            &ds,
            &cfg.agents,
            OracleBias::Full,
            OracleWeighting::Empirical,
        )
        .unwrap();
        assert!(e.weights[0] > e.weights[3]);
    }
}
