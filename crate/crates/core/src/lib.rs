//! Graph-based open-ended surveys: the opinion graph, annotation priors,
//! stochastic block model inference and the analytics built on top.

pub mod analysis;
pub mod annotation;
pub mod error;
pub mod graph;
pub mod inference;
pub mod metrics;
pub mod seeds;
pub mod simulator;

pub use error::{GosError, Result};
pub use graph::{OpinionGraph, OpinionId, RespondentId, SurveyConfig};
