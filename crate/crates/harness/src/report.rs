//! Single-run experiment orchestration and the versioned run report.

use abloc_core::baselines::{dataset_average, oracle_combine, OracleBias, OracleWeighting};
use abloc_core::engine::run_abloc;
use abloc_core::metrics::{
    achievement_ratio, efficiency, mse, mse_by_component, weight_comparison, WeightComparison,
};
use abloc_core::synth::{empirical_learnability, generate_dataset, realized_moments};
use abloc_core::theory::{
    agent_means, efficiency_bound, recommend, Recommendation, SampleRequirement,
};
use abloc_core::{
    AgentSpec, Dataset, Error, ExperimentConfig, IterationRecord, TheoryReport, Weights,
};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const REPORT_SCHEMA: &str = "abloc-run-report/1";

/// Accuracy and failure probability used for the reported sample requirement.
pub const SAMPLE_EPS: f64 = 0.1;
pub const SAMPLE_DELTA: f64 = 0.05;
pub const SAMPLE_C: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheorySection {
    /// Bounds from the configured agent parameters.
    pub nominal: TheoryReport,
    /// Bounds from the realized bias and noise moments of the generated data.
    pub empirical: TheoryReport,
    /// Realized per-agent learnability, `None` for an agent with no bias.
    pub empirical_learnability: Vec<Option<f64>>,
    pub recommendation: Recommendation,
    pub sample_requirement: SampleRequirement,
    /// `None` when the mean learnability is zero.
    pub required_samples: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Results {
    pub mse_baseline: f64,
    pub mse_abloc: f64,
    /// Full-bias oracle with nominal noise weights.
    pub mse_oracle: f64,
    pub mse_oracle_learnable_only: f64,
    pub efficiency_abloc: f64,
    pub efficiency_oracle: f64,
    /// ABLOC efficiency over the nominal bound; `None` if that bound is zero.
    pub achievement_nominal: Option<f64>,
    pub achievement_empirical: Option<f64>,
    pub iterations: usize,
    pub early_stop_iteration: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSection {
    pub abloc: Weights,
    /// Nominal inverse-noise weights of the full-bias oracle.
    pub oracle: Weights,
    pub oracle_empirical: Weights,
    pub comparison: Option<WeightComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRow {
    pub dimension: usize,
    pub mse_baseline: f64,
    pub mse_abloc: f64,
    pub reduction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub config: ExperimentConfig,
    pub theory: TheorySection,
    pub results: Results,
    pub weights: WeightSection,
    pub components: Vec<ComponentRow>,
    pub history: Vec<IterationRecord>,
}

/// Agent specs implied by the realized moments of `dataset`: `β²` is the
/// mean square of the total bias, `λ` its learnable share, `σ²` the mean
/// square of the noise.
pub fn empirical_specs(dataset: &Dataset, nominal: &[AgentSpec]) -> Vec<AgentSpec> {
    dataset
        .agents
        .iter()
        .zip(nominal)
        .map(|(a, spec)| {
            let m = realized_moments(a);
            let bias_sq = m.learnable_sq + m.stochastic_sq;
            AgentSpec {
                lambda: if bias_sq > 0.0 {
                    m.learnable_sq / bias_sq
                } else {
                    0.0
                },
                beta: bias_sq.sqrt(),
                sigma: m.noise_sq.sqrt(),
                p: spec.p,
            }
        })
        .collect()
}

pub fn theory_section(
    config: &ExperimentConfig,
    dataset: Option<&Dataset>,
) -> Result<TheorySection> {
    let nominal = efficiency_bound(&config.agents)?;
    let (empirical, empirical_learnability) = match dataset {
        Some(ds) => (
            efficiency_bound(&empirical_specs(ds, &config.agents))?,
            ds.agents.iter().map(empirical_learnability).collect(),
        ),
        None => (
            nominal.clone(),
            config.agents.iter().map(|a| Some(a.lambda)).collect(),
        ),
    };
    let (lambda_bar, _, _) = agent_means(&config.agents);
    let sample_requirement = SampleRequirement {
        c: SAMPLE_C,
        d: config.d,
        p_list: config.agents.iter().map(|a| a.p).collect(),
        eps: SAMPLE_EPS,
        lambda_bar,
        delta: SAMPLE_DELTA,
    };
    let required_samples = match sample_requirement.samples() {
        Ok(n) => Some(n),
        Err(Error::Infeasible(_)) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(TheorySection {
        nominal,
        empirical,
        empirical_learnability,
        recommendation: recommend(&config.agents, config.t, config.d),
        sample_requirement,
        required_samples,
    })
}

fn positive_ratio(eta: f64, bound: f64) -> Result<Option<f64>> {
    if bound > 0.0 {
        Ok(Some(achievement_ratio(eta, bound)?))
    } else {
        Ok(None)
    }
}

fn ensure_finite(values: &[(&'static str, f64)]) -> Result<()> {
    for (name, v) in values {
        if !v.is_finite() {
            return Err(HarnessError::Numeric(Error::NonFinite(name)));
        }
    }
    Ok(())
}

/// Generates the dataset for `config`, runs the uniform baseline, ABLOC and
/// both oracles, and assembles the report. Deterministic in `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate().map_err(HarnessError::ConfigInvalid)?;
    let dataset = generate_dataset(config)?;
    run_on_dataset(config, &dataset)
}

pub fn run_on_dataset(config: &ExperimentConfig, dataset: &Dataset) -> Result<RunReport> {
    let theory = theory_section(config, Some(dataset))?;
    let truth = dataset.theta.view();

    let baseline = dataset_average(dataset)?;
    let state = run_abloc(dataset, config)?;
    let oracle = oracle_combine(
        dataset,
        &config.agents,
        OracleBias::Full,
        OracleWeighting::Nominal,
    )?;
    let oracle_emp = oracle_combine(
        dataset,
        &config.agents,
        OracleBias::Full,
        OracleWeighting::Empirical,
    )?;
    let oracle_f = oracle_combine(
        dataset,
        &config.agents,
        OracleBias::LearnableOnly,
        OracleWeighting::Nominal,
    )?;

    let mse_baseline = mse(baseline.view(), truth)?;
    let mse_abloc = mse(state.estimate().view(), truth)?;
    let mse_oracle = mse(oracle.estimate.view(), truth)?;
    let mse_oracle_learnable_only = mse(oracle_f.estimate.view(), truth)?;
    let efficiency_abloc = efficiency(mse_baseline, mse_abloc)?;
    let efficiency_oracle = efficiency(mse_baseline, mse_oracle)?;
    ensure_finite(&[
        ("baseline MSE", mse_baseline),
        ("ABLOC MSE", mse_abloc),
        ("oracle MSE", mse_oracle),
        ("learnable-only oracle MSE", mse_oracle_learnable_only),
    ])?;

    let results = Results {
        mse_baseline,
        mse_abloc,
        mse_oracle,
        mse_oracle_learnable_only,
        efficiency_abloc,
        efficiency_oracle,
        achievement_nominal: positive_ratio(efficiency_abloc, theory.nominal.eta_bound)?,
        achievement_empirical: positive_ratio(efficiency_abloc, theory.empirical.eta_bound)?,
        iterations: state.iter,
        early_stop_iteration: state.best.iteration,
        converged: state.converged,
    };

    let comparison = if config.k() >= 2 {
        Some(weight_comparison(&state.best.weights, &oracle.weights)?)
    } else {
        None
    };
    let weights = WeightSection {
        abloc: state.best.weights.clone(),
        oracle: oracle.weights,
        oracle_empirical: oracle_emp.weights,
        comparison,
    };

    let base_c = mse_by_component(baseline.view(), truth)?;
    let abloc_c = mse_by_component(state.estimate().view(), truth)?;
    let components = base_c
        .iter()
        .zip(&abloc_c)
        .enumerate()
        .map(|(dimension, (&b, &a))| {
            Ok(ComponentRow {
                dimension,
                mse_baseline: b,
                mse_abloc: a,
                reduction: efficiency(b, a)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(RunReport {
        schema: REPORT_SCHEMA.into(),
        config: config.clone(),
        theory,
        results,
        weights,
        components,
        history: state.history,
    })
}

pub fn report_to_json(report: &RunReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes") + "\n"
}

pub fn parse_report(text: &str) -> Result<RunReport> {
    let r: RunReport =
        serde_json::from_str(text).map_err(|e| HarnessError::decode("run report", e))?;
    if r.schema != REPORT_SCHEMA {
        return Err(HarnessError::decode(
            "run report",
            format!("unknown schema {:?}", r.schema),
        ));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use abloc_core::ValidationMode;

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::reference();
        c.t = 400;
        c.abloc.validation_mode = ValidationMode::Oracle;
        c
    }

    #[test]
    fn report_fields_are_consistent() {
        let r = run_experiment(&small()).unwrap();
        assert_eq!(r.schema, REPORT_SCHEMA);
        assert_eq!(r.components.len(), 3);
        let mean: f64 = r.components.iter().map(|c| c.mse_abloc).sum::<f64>() / 3.0;
        assert!((mean - r.results.mse_abloc).abs() < 1e-12);
        assert!(r.results.early_stop_iteration >= 1);
        assert!(r.results.early_stop_iteration <= r.results.iterations);
        assert_eq!(r.history.len(), r.results.iterations);
        assert!((r.theory.nominal.eta_bound - 0.6288).abs() < 1e-3);
        assert!(r.results.mse_oracle < r.results.mse_abloc);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let r = run_experiment(&small()).unwrap();
        let text = report_to_json(&r);
        assert_eq!(parse_report(&text).unwrap(), r);
        assert!(parse_report(&text.replace(REPORT_SCHEMA, "x/9")).is_err());
    }

    #[test]
    fn zero_bias_gives_no_nominal_achievement() {
        let mut c = small();
        for a in &mut c.agents {
            a.beta = 0.0;
            a.sigma = 0.15;
        }
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.results.achievement_nominal, None);
        assert!(
            r.results.efficiency_abloc.abs() < 0.05,
            "{}",
            r.results.efficiency_abloc
        );
    }

    #[test]
    fn zero_learnability_has_no_sample_requirement() {
        let mut c = small();
        for a in &mut c.agents {
            a.lambda = 0.0;
        }
        let th = theory_section(&c, None).unwrap();
        assert_eq!(th.required_samples, None);
        assert_eq!(th.nominal, th.empirical);
    }

    #[test]
    fn empirical_specs_reflect_moments() {
        let c = small();
        let ds = generate_dataset(&c).unwrap();
        let specs = empirical_specs(&ds, &c.agents);
        for (s, nominal) in specs.iter().zip(&c.agents) {
            assert!((s.sigma - nominal.sigma).abs() < 0.1 * nominal.sigma);
            assert!((0.0..=1.0).contains(&s.lambda));
        }
    }
}
