//! RLStop: a reinforcement-learning stopping rule for technology-assisted review.
//!
//! A ranked collection is split into `B` batches. An agent walks down the
//! ranking one batch at a time and decides after each batch whether to STOP
//! or CONTINUE. The agent is a small actor-critic MLP trained with PPO against
//! a reward that peaks at the batch where a target recall is first reached.
//!
//! Modules:
//!
//! - [`corpus`]: run/qrels ingestion, batching, target batches, synthetic topics
//! - [`env`]: the stopping MDP and a vectorised wrapper
//! - [`nn`]: actor/critic MLPs with analytic gradients and Adam
//! - [`ppo`]: rollout collection, GAE, clipped-surrogate updates, training, inference
//! - [`baselines`]: oracle, knee and fixed-budget stopping rules
//! - [`eval`]: recall, cost, excess, aggregation and Pareto flags
//! - [`cli`]: subcommand implementations used by the `rlstop` binary

pub mod baselines;
pub mod cli;
pub mod corpus;
pub mod env;
pub mod error;
pub mod eval;
pub mod nn;
pub mod ppo;

pub use error::{Error, Result};

/// Slack used when comparing found-relevant counts against `target * R`.
pub const RECALL_EPS: f64 = 1e-9;
