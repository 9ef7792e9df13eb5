//! Parameter sweeps over seed, learnability or horizon length.

use std::fmt;
use std::str::FromStr;

use abloc_core::{Error, ExperimentConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::report::{run_experiment, RunReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Each value is a master seed.
    Seed,
    /// Each value overrides `lambda` for every agent.
    Lambda,
    /// Each value is the number of time points.
    T,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Seed => "seed",
            SweepAxis::Lambda => "lambda",
            SweepAxis::T => "t",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "seed" => Ok(SweepAxis::Seed),
            "lambda" => Ok(SweepAxis::Lambda),
            "t" => Ok(SweepAxis::T),
            other => Err(format!("unknown sweep axis {other:?} (seed, lambda, t)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    /// `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(*v), hi.max(*v))
            });
        Some(Stats {
            n: values.len(),
            mean: values.iter().sum::<f64>() / values.len() as f64,
            min,
            max,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub seeds: Vec<u64>,
    pub reports: Vec<RunReport>,
    pub efficiency: Stats,
    /// Over runs whose nominal bound is positive.
    pub achievement: Option<Stats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

impl SweepReport {
    pub fn mean_efficiencies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.efficiency.mean).collect()
    }
}

/// Config for one sweep cell.
pub fn apply(
    template: &ExperimentConfig,
    axis: SweepAxis,
    value: f64,
    seed: u64,
) -> Result<ExperimentConfig> {
    let mut c = template.clone();
    c.seed = seed;
    match axis {
        SweepAxis::Seed => {
            if value < 0.0 || value.fract() != 0.0 || value > u64::MAX as f64 {
                return Err(HarnessError::ConfigInvalid(Error::invalid(
                    "values",
                    format!("seed {value} is not a non-negative integer"),
                )));
            }
            c.seed = value as u64;
        }
        SweepAxis::Lambda => c.agents.iter_mut().for_each(|a| a.lambda = value),
        SweepAxis::T => {
            if value < 0.0 || value.fract() != 0.0 {
                return Err(HarnessError::ConfigInvalid(Error::invalid(
                    "values",
                    format!("T = {value} is not a non-negative integer"),
                )));
            }
            c.t = value as usize;
        }
    }
    c.validate().map_err(HarnessError::ConfigInvalid)?;
    Ok(c)
}

/// Runs every `(value, seed)` cell in parallel and aggregates per value.
/// For [`SweepAxis::Seed`] the `seeds` list is ignored. Output order follows
/// `values`, then `seeds`, independent of scheduling.
pub fn sweep(
    template: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
    seeds: &[u64],
) -> Result<SweepReport> {
    if values.len() < 2 {
        return Err(HarnessError::ConfigInvalid(Error::invalid(
            "values",
            format!("a sweep needs at least two values, got {}", values.len()),
        )));
    }
    let seeds: Vec<u64> = match axis {
        SweepAxis::Seed => vec![template.seed],
        _ if seeds.is_empty() => vec![template.seed],
        _ => seeds.to_vec(),
    };
    let cells = values
        .iter()
        .flat_map(|&v| seeds.iter().map(move |&s| (v, s)))
        .map(|(v, s)| apply(template, axis, v, s))
        .collect::<Result<Vec<_>>>()?;
    let reports = cells
        .par_iter()
        .map(run_experiment)
        .collect::<Result<Vec<_>>>()?;

    let mut iter = reports.into_iter();
    let points = values
        .iter()
        .map(|&value| {
            let reports: Vec<RunReport> = iter.by_ref().take(seeds.len()).collect();
            let eff: Vec<f64> = reports.iter().map(|r| r.results.efficiency_abloc).collect();
            let ach: Vec<f64> = reports
                .iter()
                .filter_map(|r| r.results.achievement_nominal)
                .collect();
            SweepPoint {
                value,
                seeds: reports.iter().map(|r| r.config.seed).collect(),
                efficiency: Stats::of(&eff).expect("at least one seed"),
                achievement: Stats::of(&ach),
                reports,
            }
        })
        .collect();
    Ok(SweepReport { axis, points })
}
