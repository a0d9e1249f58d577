//! The decision process, its history encoding, policies, exact evaluation and simulation.

pub mod history;
pub mod policy;
pub mod simulate;
pub mod spec;
pub mod value;

pub use history::{enumerate_histories, Shape, DEFAULT_HISTORY_CAP};
pub use policy::{enumerate_policies, HistoryPolicy};
pub use simulate::{monte_carlo_value_w, rollout, simulate_episode, simulate_with, StochasticDecoderSpec, Trajectory};
pub use spec::{Activation, FeedbackNoise, HistoryRewards, PormdpSpec, SpecDoc, Transitions};
pub use value::{backward_plan, minimizing_policy, occupancy, optimal_policy, policy_value};
