//! Learners that observe noisy per-step feedback, and the episode loop that
//! scores them by exact regret.

pub mod common;
pub mod evi;
pub mod golf;
pub mod markovian;
pub mod ucbvi;
pub mod ucrl;

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use common::{Learner, Plan};
pub use evi::{extended_value_iteration, optimistic_expectation};
pub use golf::{build_q_class, Golf, QClass};
pub use markovian::MarkovianUcbvi;
pub use ucbvi::PorUcbvi;
pub use ucrl::{NaiveHistoryUcrl, PorUcrl};

use crate::envs::EnvInstance;
use crate::error::{invalid, Result};
use crate::estimation::ConfidenceParams;
use crate::pormdp::{optimal_policy, policy_value, simulate_with, HistoryPolicy, PormdpSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    PorUcrl,
    PorUcbvi,
    Golf,
    MarkovianUcbvi,
    NaiveHistoryUcrl,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] =
        [Algorithm::PorUcrl, Algorithm::PorUcbvi, Algorithm::Golf, Algorithm::MarkovianUcbvi, Algorithm::NaiveHistoryUcrl];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::PorUcrl => "por_ucrl",
            Algorithm::PorUcbvi => "por_ucbvi",
            Algorithm::Golf => "golf",
            Algorithm::MarkovianUcbvi => "markovian_ucbvi",
            Algorithm::NaiveHistoryUcrl => "naive_history_ucrl",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Algorithm::PorUcrl => "optimistic planning over reward confidence sets and L1 transition balls",
            Algorithm::PorUcbvi => "planning under the estimated model with reward-spread and transition bonuses",
            Algorithm::Golf => "optimism over Q tuples surviving a Bellman-residual test",
            Algorithm::MarkovianUcbvi => "baseline restricted to time-dependent state-only policies",
            Algorithm::NaiveHistoryUcrl => "baseline estimating a transition row per history",
        }
    }
}

/// Whether the learner must estimate the transition kernel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionMode {
    #[default]
    Unknown,
    Known,
}

/// Learner tuning, as written in experiment configurations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlgoParams {
    pub delta: f64,
    pub bonus_scale: f64,
    pub zeta_prefix: f64,
    pub transition_mode: TransitionMode,
    /// Constant in front of the Bellman-residual radius.
    pub golf_c: f64,
}

impl Default for AlgoParams {
    fn default() -> Self {
        let c = ConfidenceParams::default();
        AlgoParams {
            delta: c.delta,
            bonus_scale: c.bonus_scale,
            zeta_prefix: c.zeta_prefix,
            transition_mode: TransitionMode::Unknown,
            golf_c: 1.0,
        }
    }
}

impl AlgoParams {
    pub fn confidence(&self) -> ConfidenceParams {
        ConfidenceParams { delta: self.delta, bonus_scale: self.bonus_scale, zeta_prefix: self.zeta_prefix }
    }

    pub fn validate(&self) -> Result<()> {
        self.confidence().validate()?;
        if !(self.golf_c > 0.0) {
            return invalid("golf_c must be positive");
        }
        Ok(())
    }
}

/// One row of a cardinal run log.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub policy_id: String,
    pub value: f64,
    pub regret_inc: f64,
    pub cum_regret: f64,
    pub optimistic_value: f64,
    pub truth_in_cf: bool,
    pub truth_in_cp: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegretLog {
    pub v_star: f64,
    pub records: Vec<EpisodeRecord>,
}

impl RegretLog {
    pub fn cumulative(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.cum_regret).collect()
    }

    pub fn final_regret(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cum_regret)
    }

    /// Whether the truth stayed in both confidence sets throughout.
    pub fn always_covered(&self) -> bool {
        self.records.iter().all(|r| r.truth_in_cf && r.truth_in_cp)
    }
}

/// A finished run with the distinct policies it played.
#[derive(Clone, Debug)]
pub struct CardinalRun {
    pub log: RegretLog,
    pub policies: Vec<HistoryPolicy>,
    /// Index into `policies` for each episode.
    pub episode_policy: Vec<usize>,
}

pub fn make_learner<'a>(inst: &'a EnvInstance, algo: Algorithm, params: AlgoParams, episodes: usize) -> Box<dyn Learner + 'a> {
    match algo {
        Algorithm::PorUcrl => Box::new(PorUcrl::new(inst, params, episodes)),
        Algorithm::PorUcbvi => Box::new(PorUcbvi::new(inst, params, episodes)),
        Algorithm::Golf => Box::new(Golf::new(inst, params, episodes)),
        Algorithm::MarkovianUcbvi => Box::new(MarkovianUcbvi::new(inst, params, episodes)),
        Algorithm::NaiveHistoryUcrl => Box::new(NaiveHistoryUcrl::new(inst, params, episodes)),
    }
}

/// Plays `episodes` episodes and records exact per-episode regret.
///
/// Deterministic in `(inst, algo, params, episodes, seed)`.
pub fn run_cardinal(inst: &EnvInstance, algo: Algorithm, params: AlgoParams, episodes: usize, seed: u64) -> Result<CardinalRun> {
    params.validate()?;
    let mut learner = make_learner(inst, algo, params, episodes);
    run_learner(inst, learner.as_mut(), episodes, seed)
}

pub fn run_learner(inst: &EnvInstance, learner: &mut dyn Learner, episodes: usize, seed: u64) -> Result<CardinalRun> {
    let spec = &inst.spec;
    let s1 = spec.initial_state();
    let truth = spec.composed_rewards();
    let (_, v_star) = optimal_policy(spec.transitions(), s1, truth);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_id: HashMap<String, (usize, f64)> = HashMap::new();
    let mut policies = Vec::new();
    let mut episode_policy = Vec::with_capacity(episodes);
    let mut records = Vec::with_capacity(episodes);
    let mut cum = 0.0;
    for episode in 1..=episodes {
        let plan = learner.plan();
        let canonical = plan.policy.canonical(s1);
        let id = canonical.id();
        let (index, value) = *by_id.entry(id.clone()).or_insert_with(|| {
            policies.push(canonical);
            (policies.len() - 1, policy_value(spec.transitions(), s1, truth, &plan.policy))
        });
        let regret_inc = v_star - value;
        cum += regret_inc;
        records.push(EpisodeRecord {
            episode,
            policy_id: id,
            value,
            regret_inc,
            cum_regret: cum,
            optimistic_value: plan.optimistic_value,
            truth_in_cf: plan.truth_in_cf,
            truth_in_cp: plan.truth_in_cp,
        });
        episode_policy.push(index);
        let traj = simulate_with(spec, &plan.policy, &mut rng);
        learner.observe(&traj);
    }
    Ok(CardinalRun { log: RegretLog { v_star, records }, policies, episode_policy })
}

/// Draws one played policy uniformly and returns it with its exact gap to the optimum.
pub fn regret_to_pac(run: &CardinalRun, spec: &PormdpSpec, seed: u64) -> Result<(HistoryPolicy, f64)> {
    if run.episode_policy.is_empty() {
        return invalid("the run has no episodes");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(0..run.episode_policy.len());
    let policy = run.policies[run.episode_policy[k]].clone();
    let value = policy_value(spec.transitions(), spec.initial_state(), spec.composed_rewards(), &policy);
    Ok((policy, run.log.v_star - value))
}

/// `R / T + 8 B p sqrt(log(1 / delta) / T)`.
pub fn pac_bound(regret: f64, episodes: usize, return_bound: f64, delta: f64) -> f64 {
    let t = episodes as f64;
    regret / t + 8.0 * return_bound * ((1.0 / delta).ln() / t).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{combination_lock, LockMode};

    #[test]
    fn runs_are_reproducible_and_consistent() {
        let inst = combination_lock(2, 2, 0.8, LockMode::Dense, None).unwrap();
        for algo in Algorithm::ALL {
            let a = run_cardinal(&inst, algo, AlgoParams::default(), 60, 7).unwrap();
            let b = run_cardinal(&inst, algo, AlgoParams::default(), 60, 7).unwrap();
            assert_eq!(a.log, b.log);
            let mut cum = 0.0;
            for r in &a.log.records {
                assert!(r.regret_inc >= -1e-12);
                cum += r.regret_inc;
                assert!((r.cum_regret - cum).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pac_gap_matches_logged_regret() {
        let inst = combination_lock(2, 2, 0.8, LockMode::Dense, None).unwrap();
        let run = run_cardinal(&inst, Algorithm::PorUcrl, AlgoParams::default(), 30, 1).unwrap();
        for seed in 0..20 {
            let (pi, gap) = regret_to_pac(&run, &inst.spec, seed).unwrap();
            let rec = run.log.records.iter().find(|r| r.policy_id == pi.id()).unwrap();
            assert!((rec.regret_inc - gap).abs() < 1e-12);
        }
    }
}
