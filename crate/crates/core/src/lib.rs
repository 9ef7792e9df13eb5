//! Adaptive bias learning and optimal combining (ABLOC) for multi-agent
//! estimation.
//!
//! Agents observe a shared trajectory through covariate-dependent biases and
//! noise. This crate generates such data, computes closed-form performance
//! bounds, runs the iterative bias-learning combiner and evaluates it against
//! uniform averaging and a bias-aware oracle.

pub mod baselines;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod model;
pub mod ridge;
pub mod rng;
pub mod synth;
pub mod theory;

pub use error::{Error, Result};
pub use model::{
    AblocParams, AblocState, AgentData, AgentSpec, BiasModel, Dataset, ExperimentConfig,
    IterationRecord, Snapshot, SplitMode, TheoryReport, ValidationMode, Weights,
};
