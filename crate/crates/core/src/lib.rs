//! Exact-arithmetic engine for finite local detection models of the
//! three-particle GHZ experiment.
//!
//! A model assigns each of the 128 GHZ-compatible micro-states a uniform
//! distribution over detection patterns (d-distributions). The crate
//! enumerates the state space, evaluates the quantum predictions, computes
//! model probabilities, verifies agreement with QM and the detection
//! requirement, and searches for new models. All probabilities are exact
//! rationals.

pub mod builtin;
pub mod cli;
pub mod error;
pub mod model;
pub mod qm;
pub mod rational;
pub mod search;
pub mod state_space;
pub mod verify;

pub use builtin::{model_m1, model_m2, model_m3, reproduce, BuiltinModel, UndetectedSiteSet};
pub use error::{Error, Result};
pub use model::{
    census, combination_distribution, conditional_probability, detection_probability,
    total_probability, Census, Combination, DDistribution, MSpecification, Model,
};
pub use qm::{qm_probability, OutcomeAssignment};
pub use rational::Rational;
pub use search::{search_models, verify_counts, ExpectedCounts, SearchSpec};
pub use state_space::{
    classify, enumerate_contexts, enumerate_ghz_microstates, MeasurementContext, MicroState,
    PartitionElement, Sign, Site, Triad,
};
pub use verify::{verify_ac, verify_dm, VerificationReport};
