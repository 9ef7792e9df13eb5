//! TOML experiment configuration.
//!
//! ```toml
//! schema_version = 1
//! seed = 42
//! t = 2000
//! d = 3
//! split_fraction = 0.8
//! split_mode = "contiguous"   # or "random", seeded by split_seed
//!
//! [abloc]
//! alpha0 = 0.1
//! validation_mode = "oracle"
//!
//! [[agents]]
//! lambda = 0.75
//! beta = 0.40
//! sigma = 0.10
//! p = 10
//! ```
//!
//! Only `agents` is required; everything else falls back to the defaults of
//! [`ExperimentConfig::reference`] and [`AblocParams::default`].

use std::fs;
use std::path::Path;

use abloc_core::synth::COVARIATE_DIM;
use abloc_core::{AblocParams, AgentSpec, Error, ExperimentConfig, SplitMode, ValidationMode};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SplitKind {
    Contiguous,
    Random,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAgent {
    lambda: f64,
    beta: f64,
    sigma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAbloc {
    alpha0: Option<f64>,
    max_iter: Option<usize>,
    tol: Option<f64>,
    damping_new: Option<f64>,
    shrink_base: Option<f64>,
    shrink_step: Option<f64>,
    shrink_cap: Option<f64>,
    validation_mode: Option<ValidationMode>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    seed: Option<u64>,
    t: Option<usize>,
    d: Option<usize>,
    split_fraction: Option<f64>,
    split_mode: Option<SplitKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    split_seed: Option<u64>,
    #[serde(default)]
    abloc: RawAbloc,
    agents: Vec<RawAgent>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let upto = &text[..offset.min(text.len())];
    let line = upto.matches('\n').count() + 1;
    let column = upto
        .rfind('\n')
        .map_or(upto.len(), |nl| upto.len() - nl - 1)
        + 1;
    (line, column)
}

fn invalid(field: &str, reason: String) -> HarnessError {
    HarnessError::ConfigInvalid(Error::invalid(field, reason))
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        HarnessError::ConfigParse {
            line,
            column,
            message: e.message().trim().to_string(),
        }
    })?;

    if let Some(v) = raw.schema_version {
        if v != CONFIG_SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("{v} is not supported (expected {CONFIG_SCHEMA_VERSION})"),
            ));
        }
    }
    if let Some(k) = raw.k {
        if k != raw.agents.len() {
            return Err(invalid(
                "k",
                format!("{k} does not match the {} listed agents", raw.agents.len()),
            ));
        }
    }

    let reference = ExperimentConfig::reference();
    let defaults = AblocParams::default();
    let seed = raw.seed.unwrap_or(reference.seed);
    let split_mode = match raw.split_mode.unwrap_or(SplitKind::Contiguous) {
        SplitKind::Contiguous => {
            if raw.split_seed.is_some() {
                return Err(invalid(
                    "split_seed",
                    "only valid with split_mode = \"random\"".into(),
                ));
            }
            SplitMode::Contiguous
        }
        SplitKind::Random => SplitMode::Random {
            seed: raw.split_seed.unwrap_or(seed),
        },
    };
    let a = raw.abloc;
    let config = ExperimentConfig {
        d: raw.d.unwrap_or(reference.d),
        t: raw.t.unwrap_or(reference.t),
        seed,
        agents: raw
            .agents
            .into_iter()
            .map(|r| AgentSpec {
                lambda: r.lambda,
                beta: r.beta,
                sigma: r.sigma,
                p: r.p.unwrap_or(COVARIATE_DIM),
            })
            .collect(),
        abloc: AblocParams {
            alpha0: a.alpha0.unwrap_or(defaults.alpha0),
            max_iter: a.max_iter.unwrap_or(defaults.max_iter),
            tol: a.tol.unwrap_or(defaults.tol),
            damping_new: a.damping_new.unwrap_or(defaults.damping_new),
            shrink_base: a.shrink_base.unwrap_or(defaults.shrink_base),
            shrink_step: a.shrink_step.unwrap_or(defaults.shrink_step),
            shrink_cap: a.shrink_cap.unwrap_or(defaults.shrink_cap),
            validation_mode: a.validation_mode.unwrap_or(defaults.validation_mode),
        },
        split_fraction: raw.split_fraction.unwrap_or(reference.split_fraction),
        split_mode,
    };
    config.validate().map_err(HarnessError::ConfigInvalid)?;
    for (i, agent) in config.agents.iter().enumerate() {
        if agent.p != COVARIATE_DIM {
            return Err(invalid(
                &format!("agents[{i}].p"),
                format!(
                    "{} covariates requested, the generator produces {COVARIATE_DIM}",
                    agent.p
                ),
            ));
        }
    }
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_config(&text)
}

/// Renders a config with every field explicit. `parse_config` of the output
/// returns an equal config.
pub fn render_config(config: &ExperimentConfig) -> String {
    let (split_mode, split_seed) = match config.split_mode {
        SplitMode::Contiguous => (SplitKind::Contiguous, None),
        SplitMode::Random { seed } => (SplitKind::Random, Some(seed)),
    };
    let a = &config.abloc;
    let raw = RawConfig {
        schema_version: Some(CONFIG_SCHEMA_VERSION),
        k: None,
        seed: Some(config.seed),
        t: Some(config.t),
        d: Some(config.d),
        split_fraction: Some(config.split_fraction),
        split_mode: Some(split_mode),
        split_seed,
        abloc: RawAbloc {
            alpha0: Some(a.alpha0),
            max_iter: Some(a.max_iter),
            tol: Some(a.tol),
            damping_new: Some(a.damping_new),
            shrink_base: Some(a.shrink_base),
            shrink_step: Some(a.shrink_step),
            shrink_cap: Some(a.shrink_cap),
            validation_mode: Some(a.validation_mode),
        },
        agents: config
            .agents
            .iter()
            .map(|s| RawAgent {
                lambda: s.lambda,
                beta: s.beta,
                sigma: s.sigma,
                p: Some(s.p),
            })
            .collect(),
    };
    toml::to_string(&raw).expect("config fields are all representable in TOML")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[[agents]]
lambda = 0.5
beta = 0.5
sigma = 0.15
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.abloc, AblocParams::default());
        assert_eq!(c.abloc.alpha0, 0.1);
        assert_eq!(c.abloc.max_iter, 30);
        assert_eq!(c.abloc.tol, 1e-4);
        assert_eq!((c.t, c.d, c.seed), (2000, 3, 42));
        assert_eq!(c.agents[0].p, 10);
        assert_eq!(c.split_mode, SplitMode::Contiguous);
    }

    #[test]
    fn out_of_range_lambda_names_field() {
        let text = MINIMAL.replace("lambda = 0.5", "lambda = 1.5");
        let err = parse_config(&text).unwrap_err();
        assert!(matches!(err, HarnessError::ConfigInvalid(_)));
        assert!(err.to_string().contains("lambda"), "{err}");
    }

    #[test]
    fn zero_split_rejected() {
        let text = format!("split_fraction = 0\n{MINIMAL}");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("split_fraction"), "{err}");
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = format!("seed = 1\nbogus = 3\n{MINIMAL}");
        match parse_config(&text).unwrap_err() {
            HarnessError::ConfigParse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("bogus"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let nested = MINIMAL.replace("sigma = 0.15", "sigma = 0.15\ngamma = 1");
        assert!(matches!(
            parse_config(&nested),
            Err(HarnessError::ConfigParse { .. })
        ));
    }

    #[test]
    fn agent_count_and_schema_checked() {
        assert!(parse_config(&format!("k = 2\n{MINIMAL}")).is_err());
        assert!(parse_config(&format!("k = 1\n{MINIMAL}")).is_ok());
        assert!(parse_config(&format!("schema_version = 2\n{MINIMAL}")).is_err());
        assert!(parse_config("seed = 1").is_err());
    }

    #[test]
    fn random_split_defaults_to_master_seed() {
        let c = parse_config(&format!("seed = 9\nsplit_mode = \"random\"\n{MINIMAL}")).unwrap();
        assert_eq!(c.split_mode, SplitMode::Random { seed: 9 });
        assert!(parse_config(&format!("split_seed = 3\n{MINIMAL}")).is_err());
    }

    #[test]
    fn render_round_trips() {
        let mut c = ExperimentConfig::reference();
        c.split_mode = SplitMode::Random { seed: 7 };
        c.abloc.validation_mode = ValidationMode::Oracle;
        assert_eq!(parse_config(&render_config(&c)).unwrap(), c);
    }

    #[test]
    fn line_col_counts_from_one() {
        assert_eq!(line_col("ab\ncd", 0), (1, 1));
        assert_eq!(line_col("ab\ncd", 4), (2, 2));
    }
}
