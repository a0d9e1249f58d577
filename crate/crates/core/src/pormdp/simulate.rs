//! Sampling episodes, feedback and Monte-Carlo values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::history::Shape;
use super::policy::HistoryPolicy;
use super::spec::{Activation, FeedbackNoise, HistoryRewards, PormdpSpec, Transitions};
use crate::error::{invalid, Result};

/// One episode: states, actions, history codes and feedback, all indexed by `h - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    /// `codes[h - 1]` is the code of `tau[h]`.
    pub codes: Vec<usize>,
    /// `Some(o_h)` on feedback steps.
    pub feedback: Vec<Option<f64>>,
}

impl Trajectory {
    pub fn code(&self, h: usize) -> usize {
        self.codes[h - 1]
    }

    /// Code of `tau[h]` for `h >= 0`, with the empty history at 0.
    pub fn prefix(&self, h: usize) -> usize {
        if h == 0 {
            0
        } else {
            self.codes[h - 1]
        }
    }

    /// Decision node visited at step `h`.
    pub fn node(&self, shape: &Shape, h: usize) -> usize {
        shape.node(self.prefix(h - 1), self.states[h - 1])
    }

    pub fn horizon(&self) -> usize {
        self.states.len()
    }
}

pub fn sample_next_state<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let mut u: f64 = rng.random();
    for (s, p) in row.iter().enumerate() {
        if u < *p {
            return s;
        }
        u -= p;
    }
    row.iter().rposition(|p| *p > 0.0).unwrap_or(row.len() - 1)
}

/// Samples states and actions only.
pub fn rollout<R: Rng + ?Sized>(trans: &Transitions, initial_state: usize, policy: &HistoryPolicy, rng: &mut R) -> Trajectory {
    let shape = policy.shape();
    let h_n = shape.horizon;
    let mut traj = Trajectory {
        states: Vec::with_capacity(h_n),
        actions: Vec::with_capacity(h_n),
        codes: Vec::with_capacity(h_n),
        feedback: vec![None; h_n],
    };
    let mut s = initial_state;
    let mut code = 0;
    for h in 1..=h_n {
        let a = policy.sample(h, shape.node(code, s), rng);
        code = shape.step(code, s, a);
        traj.states.push(s);
        traj.actions.push(a);
        traj.codes.push(code);
        if h < h_n {
            s = sample_next_state(trans.row(s, a), rng);
        }
    }
    traj
}

/// Draws one feedback value with mean `activation(value)`.
pub fn sample_feedback<R: Rng + ?Sized>(activation: Activation, noise: &FeedbackNoise, index: usize, value: f64, rng: &mut R) -> f64 {
    let mean = activation.apply(value);
    match noise {
        FeedbackNoise::Bernoulli => f64::from(u8::from(rng.random::<f64>() < mean)),
        FeedbackNoise::Gaussian { eta } => {
            if eta[index] == 0.0 {
                mean
            } else {
                Normal::new(mean, eta[index]).expect("eta is finite").sample(rng)
            }
        }
    }
}

/// Samples an episode under the spec, with feedback on every feedback step.
pub fn simulate_with<R: Rng + ?Sized>(spec: &PormdpSpec, policy: &HistoryPolicy, rng: &mut R) -> Trajectory {
    let mut traj = rollout(spec.transitions(), spec.initial_state(), policy, rng);
    let f = spec.composed_rewards();
    for (i, &h) in spec.feedback_steps().iter().enumerate() {
        let r = f.at(h, traj.code(h));
        traj.feedback[h - 1] = Some(sample_feedback(spec.activation(), spec.noise(), i, r, rng));
    }
    traj
}

/// Deterministic in `(spec, policy, seed)`.
pub fn simulate_episode(spec: &PormdpSpec, policy: &HistoryPolicy, seed: u64) -> Trajectory {
    simulate_with(spec, policy, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// A stochastic map from histories to internal states: `u_h ~ w_h(. | tau[h])`.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticDecoderSpec {
    pub feedback_steps: Vec<usize>,
    pub internal_states: usize,
    /// Per feedback step, `probs[i][code * U + u]`.
    pub probs: Vec<Vec<f64>>,
    /// Per feedback step, `rewards[i][s][u][a]`.
    pub rewards: Vec<Vec<Vec<Vec<f64>>>>,
}

impl StochasticDecoderSpec {
    pub fn validate(&self, shape: &Shape) -> Result<()> {
        let u_n = self.internal_states;
        if self.probs.len() != self.feedback_steps.len() || self.rewards.len() != self.feedback_steps.len() {
            return invalid("one probability and reward table per feedback step is required");
        }
        for (i, &h) in self.feedback_steps.iter().enumerate() {
            if self.probs[i].len() != shape.count(h) * u_n {
                return invalid(format!("decoder probabilities at step {h} have the wrong length"));
            }
            for row in self.probs[i].chunks(u_n) {
                if (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 || row.iter().any(|p| !(*p >= 0.0)) {
                    return invalid(format!("decoder row at step {h} is not a distribution"));
                }
            }
            let r = &self.rewards[i];
            if r.len() != shape.states || r.iter().any(|x| x.len() != u_n || x.iter().any(|y| y.len() != shape.actions)) {
                return invalid(format!("rewards at step {h} have the wrong shape"));
            }
        }
        Ok(())
    }

    /// `g_h(tau[h]) = E_{u ~ w_h(tau[h])} r_h(s_h, u, a_h)`.
    pub fn marginal_rewards(&self, shape: Shape) -> HistoryRewards {
        let mut out = HistoryRewards::zeros(shape, &self.feedback_steps);
        let u_n = self.internal_states;
        for (i, &h) in self.feedback_steps.iter().enumerate() {
            for (code, x) in out.get_mut(h).unwrap().iter_mut().enumerate() {
                let (s, a) = shape.last(code);
                let row = &self.probs[i][code * u_n..(code + 1) * u_n];
                *x = row.iter().enumerate().map(|(u, p)| p * self.rewards[i][s][u][a]).sum();
            }
        }
        out
    }
}

/// Monte-Carlo estimate of the value under the stochastic decoder.
///
/// Returns the mean return over `n` episodes and its standard error, which is
/// infinite when `n = 1`.
pub fn monte_carlo_value_w(
    trans: &Transitions,
    initial_state: usize,
    w: &StochasticDecoderSpec,
    policy: &HistoryPolicy,
    n: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let shape = policy.shape();
    w.validate(&shape)?;
    if n == 0 {
        return invalid("at least one episode is required");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u_n = w.internal_states;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n {
        let traj = rollout(trans, initial_state, policy, &mut rng);
        let mut ret = 0.0;
        for (i, &h) in w.feedback_steps.iter().enumerate() {
            let code = traj.code(h);
            let u = sample_next_state(&w.probs[i][code * u_n..(code + 1) * u_n], &mut rng);
            ret += w.rewards[i][traj.states[h - 1]][u][traj.actions[h - 1]];
        }
        sum += ret;
        sum_sq += ret * ret;
    }
    let mean = sum / n as f64;
    if n == 1 {
        return Ok((mean, f64::INFINITY));
    }
    let var = ((sum_sq - n as f64 * mean * mean) / (n as f64 - 1.0)).max(0.0);
    Ok((mean, (var / n as f64).sqrt()))
}
