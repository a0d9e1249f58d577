//! Exact-planning lab for reinforcement learning where rewards depend on a
//! hidden internal state decoded from the history.
//!
//! Everything is tabular over histories, so values, regret and dimensions are
//! computed exactly rather than estimated:
//!
//! - [`pormdp`]: specs, history codes, policies, exact evaluation and simulation.
//! - [`envs`]: combination lock, Markovian trap, linear-reward and fixture instances with their model classes.
//! - [`estimation`]: least-squares fits, confidence sets and radii.
//! - [`cardinal`]: POR-UCRL, POR-UCBVI, GOLF and baselines on per-step feedback.
//! - [`dueling`]: learners from pairwise trajectory preferences.
//! - [`dims`]: eluder, Bellman-eluder and history-aware Bellman-eluder dimensions.
//! - [`harness`]: JSON configurations, CSV logs, manifests and summaries.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cardinal;
pub mod dims;
pub mod dueling;
pub mod envs;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod metrics;
pub mod pormdp;

pub use error::{ConfigIssue, Error, Result};
