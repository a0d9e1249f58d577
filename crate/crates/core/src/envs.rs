//! Benchmark instances together with their realizable candidate classes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::estimation::FiniteFunctionClass;
use crate::pormdp::{
    Activation, FeedbackNoise, HistoryRewards, PormdpSpec, Shape, SpecDoc, StochasticDecoderSpec, Transitions, DEFAULT_HISTORY_CAP,
};

/// Which steps of the combination lock give feedback.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LockMode {
    /// Every step.
    Dense,
    /// Only the last step.
    Sparse,
}

/// A spec plus the finite model class a learner is given.
#[derive(Clone, Debug)]
pub struct EnvInstance {
    pub name: String,
    pub spec: PormdpSpec,
    /// One candidate class per feedback step, aligned with `spec.feedback_steps()`.
    pub classes: Vec<FiniteFunctionClass>,
    /// Joint models as one candidate index per feedback step.
    pub models: Vec<Vec<usize>>,
    pub truth_model: usize,
    /// Finite transition class; the true kernel sits at `truth_transition`.
    pub transition_candidates: Vec<Transitions>,
    pub truth_transition: usize,
}

impl EnvInstance {
    pub fn shape(&self) -> Shape {
        self.spec.shape()
    }

    /// Index of the true candidate in the class of the `i`-th feedback step.
    pub fn truth(&self, i: usize) -> usize {
        self.models[self.truth_model][i]
    }

    /// Reward tables that pick candidate `choice[i]` at the `i`-th feedback step.
    pub fn rewards_for(&self, choice: &[usize]) -> HistoryRewards {
        let shape = self.shape();
        let mut tables = vec![None; shape.horizon];
        for (i, &h) in self.spec.feedback_steps().iter().enumerate() {
            tables[h - 1] = Some(self.classes[i].candidate(choice[i]).to_vec());
        }
        HistoryRewards::new(shape, tables).expect("class domains match the spec")
    }

    pub fn model_rewards(&self, m: usize) -> HistoryRewards {
        self.rewards_for(&self.models[m])
    }

    /// Checks that the classes match the spec and contain the truth.
    pub fn validate(&self) -> Result<()> {
        let shape = self.shape();
        let steps = self.spec.feedback_steps();
        if self.classes.len() != steps.len() {
            return invalid("one class per feedback step is required");
        }
        for (i, &h) in steps.iter().enumerate() {
            if self.classes[i].domain() != shape.count(h) {
                return invalid(format!("class at step {h} has the wrong domain"));
            }
        }
        if self.models.iter().any(|m| m.len() != steps.len() || m.iter().zip(&self.classes).any(|(&c, k)| c >= k.len())) {
            return invalid("a joint model indexes outside its class");
        }
        let truth = self.model_rewards(self.truth_model);
        for &h in steps {
            let a = truth.get(h).unwrap();
            let b = self.spec.composed_rewards().get(h).unwrap();
            if a.iter().zip(b).any(|(x, y)| (x - y).abs() > 1e-12) {
                return invalid(format!("the true model does not reproduce the spec at step {h}"));
            }
        }
        if self.transition_candidates.get(self.truth_transition) != Some(self.spec.transitions()) {
            return invalid("the transition class does not contain the spec kernel");
        }
        Ok(())
    }
}

/// Lock with `H` digits over `A` actions and a single state.
///
/// Internal state `k - 1` means the first `k` digits are right; state `H` is
/// the dead state. Feedback at step `h` is `Bernoulli(q)` while the prefix is
/// right and 0 after.
pub fn make_combination_lock(actions: usize, horizon: usize, q: f64, mode: LockMode, combo: &[usize]) -> Result<PormdpSpec> {
    if actions == 0 || horizon == 0 {
        return invalid("the lock needs at least one action and one step");
    }
    if !(0.0..=1.0).contains(&q) {
        return invalid("q must lie in [0, 1]");
    }
    if combo.len() != horizon || combo.iter().any(|&a| a >= actions) {
        return invalid("the combination must have one valid action per step");
    }
    let shape = Shape::new(1, actions, horizon);
    let steps: Vec<usize> = match mode {
        LockMode::Dense => (1..=horizon).collect(),
        LockMode::Sparse => vec![horizon],
    };
    let dead = horizon;
    let decoder = steps
        .iter()
        .map(|&h| {
            let right = shape.encode(&combo[..h].iter().map(|&a| (0, a)).collect::<Vec<_>>());
            (0..shape.count(h)).map(|code| if code == right { h - 1 } else { dead }).collect()
        })
        .collect();
    let rewards = steps
        .iter()
        .map(|&h| {
            let per_u = (0..=horizon).map(|u| vec![if u == h - 1 { q } else { 0.0 }; actions]).collect();
            vec![per_u]
        })
        .collect();
    PormdpSpec::new(SpecDoc {
        num_states: 1,
        num_actions: actions,
        horizon,
        feedback_steps: steps,
        transitions: vec![vec![vec![1.0]; actions]],
        initial_state: 0,
        internal_states: horizon + 1,
        decoder,
        rewards,
        reward_bound: 1.0,
        activation: Activation::Identity,
        feedback_noise: FeedbackNoise::Bernoulli,
    })
}

/// Default lock combination: digit `i` is `(i + 1) mod A`.
pub fn default_combo(actions: usize, horizon: usize) -> Vec<usize> {
    (0..horizon).map(|i| (i + 1) % actions).collect()
}

/// Lock instance with its class.
///
/// Candidate 0 at every step is the zero function: the decoder that sends
/// every history to the dead state. Candidate `1 + x` is `q * 1[tau[h] = x]`.
/// Joint models are the zero model followed by one model per combination.
pub fn combination_lock(actions: usize, horizon: usize, q: f64, mode: LockMode, combo: Option<Vec<usize>>) -> Result<EnvInstance> {
    let combo = combo.unwrap_or_else(|| default_combo(actions, horizon));
    let spec = make_combination_lock(actions, horizon, q, mode, &combo)?;
    let shape = spec.shape();
    let steps = spec.feedback_steps().to_vec();
    let classes = steps
        .iter()
        .map(|&h| {
            let n = shape.count(h);
            let mut values = vec![vec![0.0; n]];
            values.extend((0..n).map(|x| (0..n).map(|y| if x == y { q } else { 0.0 }).collect()));
            FiniteFunctionClass::new(values)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut models = vec![vec![0; steps.len()]];
    let mut truth_model = 0;
    for code in 0..shape.count(horizon) {
        let digits: Vec<usize> = shape.decode(code, horizon).into_iter().map(|(_, a)| a).collect();
        if digits == combo {
            truth_model = models.len();
        }
        models.push(steps.iter().map(|&h| 1 + code / shape.count(horizon - h)).collect());
    }
    let inst = EnvInstance {
        name: "combination_lock".into(),
        transition_candidates: vec![spec.transitions().clone()],
        spec,
        classes,
        models,
        truth_model,
        truth_transition: 0,
    };
    inst.validate()?;
    Ok(inst)
}

/// Whether the history stays in the trap's target set: action 1 until state 1
/// has appeared, action 0 from then on.
pub fn in_trap_set(pairs: &[(usize, usize)]) -> bool {
    let mut seen = false;
    pairs.iter().all(|&(s, a)| {
        seen |= s == 1;
        a == if seen { 0 } else { 1 }
    })
}

/// Two states visited uniformly at random, reward 1 at the last step iff the
/// history is in the target set.
pub fn make_markovian_trap(horizon: usize) -> Result<PormdpSpec> {
    trap_instance(horizon).map(|i| i.spec)
}

/// Trap instance; the class is `w * 1[tau in target]` for `w` in {0, 0.5, 1}.
pub fn trap_instance(horizon: usize) -> Result<EnvInstance> {
    if horizon == 0 {
        return invalid("the trap needs at least one step");
    }
    let shape = Shape::new(2, 2, horizon);
    let indicator: Vec<f64> = (0..shape.checked_count(horizon, crate::pormdp::DEFAULT_HISTORY_CAP)?)
        .map(|code| f64::from(u8::from(in_trap_set(&shape.decode(code, horizon)))))
        .collect();
    let mut tables = vec![None; horizon];
    tables[horizon - 1] = Some(indicator.clone());
    let rewards = HistoryRewards::new(shape, tables)?;
    let trans = Transitions::uniform(2, 2);
    let spec = PormdpSpec::from_history_rewards(&trans, 0, &rewards, 1.0, Activation::Identity, FeedbackNoise::Bernoulli)?;
    let class = FiniteFunctionClass::new([0.0, 0.5, 1.0].iter().map(|w| indicator.iter().map(|x| w * x).collect()).collect())?;
    let inst = EnvInstance {
        name: "markovian_trap".into(),
        spec,
        classes: vec![class],
        models: vec![vec![0], vec![1], vec![2]],
        truth_model: 2,
        transition_candidates: vec![trans],
        truth_transition: 0,
    };
    inst.validate()?;
    Ok(inst)
}

/// Linear rewards `f_h(tau) = phi_h(tau) . w` on a tabular process.
#[derive(Clone, Debug)]
pub struct LinearRewardEnv {
    pub transitions: Transitions,
    pub initial_state: usize,
    pub horizon: usize,
    pub feedback_steps: Vec<usize>,
    /// Per feedback step, one feature vector per history code.
    pub features: Vec<Vec<Vec<f64>>>,
    /// Candidate weights; `candidates[truth]` generates the spec.
    pub candidates: Vec<Vec<f64>>,
    pub truth: usize,
    pub reward_bound: f64,
    pub activation: Activation,
    pub feedback_noise: FeedbackNoise,
}

pub fn make_linear_reward_env(env: &LinearRewardEnv) -> Result<EnvInstance> {
    let shape = Shape::new(env.transitions.states(), env.transitions.actions(), env.horizon);
    shape.check_cap(crate::pormdp::DEFAULT_HISTORY_CAP)?;
    if env.features.len() != env.feedback_steps.len() || env.truth >= env.candidates.len() {
        return invalid("features need one table per feedback step and the truth must be a candidate");
    }
    let dot = |phi: &[f64], w: &[f64]| phi.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
    let table_for = |w: &[f64]| -> Vec<Vec<f64>> {
        env.features.iter().map(|per_code| per_code.iter().map(|phi| dot(phi, w)).collect()).collect()
    };
    let truth_tables = table_for(&env.candidates[env.truth]);
    let mut tables = vec![None; env.horizon];
    for (i, &h) in env.feedback_steps.iter().enumerate() {
        tables[h - 1] = Some(truth_tables[i].clone());
    }
    let rewards = HistoryRewards::new(shape, tables)?;
    let spec = PormdpSpec::from_history_rewards(
        &env.transitions,
        env.initial_state,
        &rewards,
        env.reward_bound,
        env.activation,
        env.feedback_noise.clone(),
    )?;
    let per_candidate: Vec<Vec<Vec<f64>>> = env.candidates.iter().map(|w| table_for(w)).collect();
    let classes = (0..env.feedback_steps.len())
        .map(|i| FiniteFunctionClass::new(per_candidate.iter().map(|t| t[i].clone()).collect()))
        .collect::<Result<Vec<_>>>()?;
    let inst = EnvInstance {
        name: "linear_reward".into(),
        spec,
        classes,
        models: (0..env.candidates.len()).map(|c| vec![c; env.feedback_steps.len()]).collect(),
        truth_model: env.truth,
        transition_candidates: vec![env.transitions.clone()],
        truth_transition: 0,
    };
    inst.validate()?;
    Ok(inst)
}

/// Random kernel with every entry bounded away from zero.
pub fn random_transitions(states: usize, actions: usize, rng: &mut ChaCha8Rng) -> Transitions {
    let mut probs = Vec::with_capacity(states * actions * states);
    for _ in 0..states * actions {
        let raw: Vec<f64> = (0..states).map(|_| rng.random::<f64>() + 0.05).collect();
        let total: f64 = raw.iter().sum();
        let mut row: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let head: f64 = row[..states - 1].iter().sum();
        row[states - 1] = 1.0 - head;
        probs.extend(row);
    }
    Transitions::from_flat(states, actions, probs).expect("normalized rows")
}

/// Random linear instance: features in `[0, 1/d]^d`, weights in `[0, 1]^d`,
/// the truth last among `num_candidates` weight vectors.
pub fn random_linear_env(
    states: usize,
    actions: usize,
    horizon: usize,
    feedback_steps: Vec<usize>,
    dim: usize,
    num_candidates: usize,
    seed: u64,
) -> Result<EnvInstance> {
    if dim == 0 || num_candidates == 0 || states == 0 || actions == 0 {
        return invalid("linear env sizes must be positive");
    }
    let shape = Shape::new(states, actions, horizon);
    shape.check_cap(crate::pormdp::DEFAULT_HISTORY_CAP)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let transitions = random_transitions(states, actions, &mut rng);
    let features = feedback_steps
        .iter()
        .map(|&h| (0..shape.count(h)).map(|_| (0..dim).map(|_| rng.random::<f64>() / dim as f64).collect()).collect())
        .collect();
    let candidates = (0..num_candidates).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect();
    make_linear_reward_env(&LinearRewardEnv {
        transitions,
        initial_state: 0,
        horizon,
        feedback_steps,
        features,
        candidates,
        truth: num_candidates - 1,
        reward_bound: 1.0,
        activation: Activation::Identity,
        feedback_noise: FeedbackNoise::Bernoulli,
    })
}

/// Random process with uniform history rewards on a random nonempty set of feedback steps.
pub fn random_spec(states: usize, actions: usize, horizon: usize, seed: u64) -> Result<PormdpSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = Shape::new(states, actions, horizon);
    shape.check_cap(DEFAULT_HISTORY_CAP)?;
    let trans = random_transitions(states, actions, &mut rng);
    let mut steps: Vec<usize> = (1..=horizon).filter(|_| rng.random::<f64>() < 0.6).collect();
    if steps.is_empty() {
        steps.push(rng.random_range(1..=horizon));
    }
    let mut rewards = HistoryRewards::zeros(shape, &steps);
    for &h in &steps {
        for x in rewards.get_mut(h).unwrap() {
            *x = rng.random::<f64>();
        }
    }
    let initial = rng.random_range(0..states);
    PormdpSpec::from_history_rewards(&trans, initial, &rewards, 1.0, Activation::Identity, FeedbackNoise::Bernoulli)
}

/// Small process whose internal state is drawn afresh at every feedback step.
///
/// Returns the spec built from the marginal rewards and the stochastic decoder
/// that produces them.
pub fn stochastic_internal_fixture() -> Result<(PormdpSpec, StochasticDecoderSpec)> {
    let shape = Shape::new(2, 2, 3);
    let trans = Transitions::from_nested(&[
        vec![vec![0.6, 0.4], vec![0.2, 0.8]],
        vec![vec![0.5, 0.5], vec![0.9, 0.1]],
    ])?;
    let steps = vec![1, 2, 3];
    let rewards = vec![vec![vec![0.1, 0.9], vec![0.7, 0.2]], vec![vec![0.4, 0.0], vec![1.0, 0.6]]];
    let w = StochasticDecoderSpec {
        feedback_steps: steps.clone(),
        internal_states: 2,
        probs: steps.iter().map(|&h| [0.7, 0.3].repeat(shape.count(h))).collect(),
        rewards: vec![rewards; steps.len()],
    };
    fixture_spec(shape, &trans, w)
}

/// Random fixture with `U` internal states whose law depends on the history.
pub fn random_stochastic_fixture(internal_states: usize, seed: u64) -> Result<(PormdpSpec, StochasticDecoderSpec)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = Shape::new(2, 2, 3);
    let trans = random_transitions(2, 2, &mut rng);
    let steps: Vec<usize> = if rng.random::<bool>() { vec![1, 2, 3] } else { vec![2, 3] };
    let probs = steps
        .iter()
        .map(|&h| {
            (0..shape.count(h))
                .flat_map(|_| {
                    let raw: Vec<f64> = (0..internal_states).map(|_| rng.random::<f64>()).collect();
                    let total: f64 = raw.iter().sum();
                    raw.into_iter().map(move |x| x / total)
                })
                .collect()
        })
        .collect();
    let rewards = steps
        .iter()
        .map(|_| (0..2).map(|_| (0..internal_states).map(|_| (0..2).map(|_| rng.random::<f64>()).collect()).collect()).collect())
        .collect();
    let w = StochasticDecoderSpec { feedback_steps: steps, internal_states, probs, rewards };
    fixture_spec(shape, &trans, w)
}

fn fixture_spec(shape: Shape, trans: &Transitions, w: StochasticDecoderSpec) -> Result<(PormdpSpec, StochasticDecoderSpec)> {
    w.validate(&shape)?;
    let g = w.marginal_rewards(shape);
    let spec = PormdpSpec::from_history_rewards(trans, 0, &g, 1.0, Activation::Identity, FeedbackNoise::Bernoulli)?;
    Ok((spec, w))
}

/// Wraps a spec with the singleton class holding its own rewards.
pub fn singleton_instance(name: &str, spec: PormdpSpec) -> EnvInstance {
    let f = spec.composed_rewards();
    let classes = spec
        .feedback_steps()
        .iter()
        .map(|&h| FiniteFunctionClass::new(vec![f.get(h).unwrap().to_vec()]).expect("one candidate"))
        .collect();
    let p = spec.feedback_steps().len();
    EnvInstance {
        name: name.into(),
        transition_candidates: vec![spec.transitions().clone()],
        spec,
        classes,
        models: vec![vec![0; p]],
        truth_model: 0,
        truth_transition: 0,
    }
}

/// Environment section of an experiment configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvConfig {
    CombinationLock(LockConfig),
    MarkovianTrap(TrapConfig),
    LinearReward(LinearConfig),
    StochasticInternal(FixtureConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LockConfig {
    pub actions: usize,
    pub horizon: usize,
    pub q: f64,
    pub mode: LockMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combo: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapConfig {
    pub horizon: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearConfig {
    pub states: usize,
    pub actions: usize,
    pub horizon: usize,
    pub feedback_steps: Vec<usize>,
    pub dim: usize,
    pub num_candidates: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureConfig {}

impl EnvConfig {
    pub fn build(&self) -> Result<EnvInstance> {
        match self {
            EnvConfig::CombinationLock(c) => combination_lock(c.actions, c.horizon, c.q, c.mode, c.combo.clone()),
            EnvConfig::MarkovianTrap(c) => trap_instance(c.horizon),
            EnvConfig::LinearReward(c) => {
                random_linear_env(c.states, c.actions, c.horizon, c.feedback_steps.clone(), c.dim, c.num_candidates, c.seed)
            }
            EnvConfig::StochasticInternal(_) => Ok(singleton_instance("stochastic_internal", stochastic_internal_fixture()?.0)),
        }
    }
}

/// Registered environment names with a one-line description.
pub fn list_envs() -> Vec<(&'static str, &'static str)> {
    vec![
        ("combination_lock", "single-state lock; reward while the action prefix matches a hidden combination"),
        ("markovian_trap", "two uniform states; reward needs memory of whether state 1 has appeared"),
        ("linear_reward", "random tabular process with linear history features and a finite weight class"),
        ("stochastic_internal", "fixed process whose internal state is redrawn at every feedback step"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pormdp::{enumerate_policies, optimal_policy, policy_value};

    #[test]
    fn lock_optimum_is_the_combination() {
        for mode in [LockMode::Dense, LockMode::Sparse] {
            let inst = combination_lock(3, 3, 0.8, mode, None).unwrap();
            let spec = &inst.spec;
            let (pi, v) = optimal_policy(spec.transitions(), 0, spec.composed_rewards());
            let expected = if mode == LockMode::Dense { 2.4 } else { 0.8 };
            assert!((v - expected).abs() < 1e-12);
            let shape = spec.shape();
            let t = crate::pormdp::simulate_episode(spec, &pi, 0);
            assert_eq!(t.actions, default_combo(3, 3));
            assert_eq!(inst.models.len(), 1 + shape.count(3));
        }
    }

    #[test]
    fn lock_class_contains_zero_and_indicators() {
        let inst = combination_lock(2, 3, 0.8, LockMode::Dense, Some(vec![1, 1, 0])).unwrap();
        assert_eq!(inst.classes.iter().map(|c| c.len()).collect::<Vec<_>>(), vec![3, 5, 9]);
        assert!(inst.classes[2].candidate(0).iter().all(|&x| x == 0.0));
        assert_eq!(inst.models[inst.truth_model], vec![2, 4, 7]);
    }

    #[test]
    fn trap_values() {
        let inst = trap_instance(4).unwrap();
        let spec = &inst.spec;
        let (_, v) = optimal_policy(spec.transitions(), 0, spec.composed_rewards());
        assert_eq!(v, 1.0);
        let shape = spec.shape();
        let mut best: f64 = 0.0;
        for code in 0..256usize {
            let table: Vec<Vec<usize>> = (0..4).map(|h| vec![(code >> (2 * h)) & 1, (code >> (2 * h + 1)) & 1]).collect();
            let pi = crate::pormdp::HistoryPolicy::markovian(shape, &table);
            best = best.max(policy_value(spec.transitions(), 0, spec.composed_rewards(), &pi));
        }
        assert_eq!(best, 0.75);
        assert_eq!(enumerate_policies(shape, 0, 1 << 20).unwrap().len(), 1 << 15);
    }

    #[test]
    fn configs_build_valid_instances() {
        let configs = [
            r#"{"name":"combination_lock","params":{"actions":2,"horizon":3,"q":0.8,"mode":"sparse"}}"#,
            r#"{"name":"markovian_trap","params":{"horizon":3}}"#,
            r#"{"name":"linear_reward","params":{"states":2,"actions":2,"horizon":3,"feedback_steps":[2,3],"dim":3,"num_candidates":4,"seed":1}}"#,
            r#"{"name":"stochastic_internal","params":{}}"#,
        ];
        for c in configs {
            let cfg: EnvConfig = serde_json::from_str(c).unwrap();
            cfg.build().unwrap().validate().unwrap();
        }
        let bad = r#"{"name":"markovian_trap","params":{"horizon":3,"extra":1}}"#;
        assert!(serde_json::from_str::<EnvConfig>(bad).is_err());
    }
}
