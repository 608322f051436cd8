//! A desk-scale neuroevolution lab for studying how environmental
//! variations affect rank-based selection.
//!
//! The pipeline evolves feedforward controllers with a mirrored-sampling
//! evolution strategy while measuring, every generation, how much the
//! population's fitness ranking changes between two independent evaluation
//! passes. That rank-displacement measure ([`metrics`]) quantifies the
//! impact of initial-state and per-step action perturbations ([`variation`],
//! [`envs`]) on the selection signal, and the harness ([`harness`]) runs the
//! experiment grid: variation amplitudes, injection schedules, multi-episode
//! evaluation, post-evaluation protocols, and nonparametric condition
//! comparisons ([`stats`]).

pub mod config;
pub mod envs;
pub mod error;
pub mod es;
pub mod harness;
pub mod metrics;
pub mod policy;
pub mod seeds;
pub mod stats;
pub mod variation;

pub use error::{Error, Result};
