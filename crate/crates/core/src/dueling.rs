//! Learning from preferences between pairs of trajectories.
//!
//! Each round two policies are played, and each feedback step reports a noisy
//! `sigma(f(tau1[h]) - f(tau2[h]))`. The learner fits the difference class
//! built from the base candidate classes, so a candidate index `c` stands for
//! `fbar_c(x, y) = f_c(x) - f_c(y)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envs::EnvInstance;
use crate::error::{invalid, Result};
use crate::estimation::{
    beta_threshold, in_l1_balls, reward_bonus_gamma, xi_bonus, z_of, Candidates, DifferenceClass, RadiusInputs, RewardFit,
    TransitionCounts,
};
use crate::pormdp::{enumerate_policies, occupancy, rollout, Activation, FeedbackNoise, HistoryPolicy, Trajectory, Transitions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuelingAlgorithm {
    /// Candidates are optimal for some surviving model; duel the pair whose
    /// value gap is most uncertain.
    DuelConfidence,
    /// Candidates and duels chosen from additive bonuses.
    DuelBonus,
    /// Optimistic cardinal learner over policy pairs that maximizes the
    /// preference for the first policy.
    NaiveUcrl,
    /// Bonus-based cardinal learner over policy pairs.
    NaiveUcbvi,
}

impl DuelingAlgorithm {
    pub const ALL: [DuelingAlgorithm; 4] =
        [DuelingAlgorithm::DuelConfidence, DuelingAlgorithm::DuelBonus, DuelingAlgorithm::NaiveUcrl, DuelingAlgorithm::NaiveUcbvi];

    pub fn name(&self) -> &'static str {
        match self {
            DuelingAlgorithm::DuelConfidence => "duel_confidence",
            DuelingAlgorithm::DuelBonus => "duel_bonus",
            DuelingAlgorithm::NaiveUcrl => "naive_ucrl",
            DuelingAlgorithm::NaiveUcbvi => "naive_ucbvi",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            DuelingAlgorithm::DuelConfidence => "duels the most uncertain pair among policies optimal for a surviving model",
            DuelingAlgorithm::DuelBonus => "candidate set and duels from reward-spread and transition bonuses",
            DuelingAlgorithm::NaiveUcrl => "reduction to an optimistic cardinal learner on policy pairs",
            DuelingAlgorithm::NaiveUcbvi => "reduction to a bonus-based cardinal learner on policy pairs",
        }
    }
}

/// How the transition kernel enters the model class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuelTransitionMode {
    /// The true kernel is given.
    #[default]
    Known,
    /// The instance's finite list of kernels, filtered by L1 balls around the estimate.
    Finite,
}

/// Noise on duel feedback.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DuelNoise {
    Gaussian { eta: f64 },
    /// Requires the logistic activation.
    Bernoulli,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DuelingParams {
    pub delta: f64,
    pub bonus_scale: f64,
    pub zeta_prefix: f64,
    pub transition_mode: DuelTransitionMode,
    pub activation: Activation,
    pub noise: DuelNoise,
    /// Largest policy universe or model product that is enumerated.
    pub enumeration_limit: usize,
}

impl Default for DuelingParams {
    fn default() -> Self {
        DuelingParams {
            delta: 0.1,
            bonus_scale: 0.1,
            zeta_prefix: 2.0,
            transition_mode: DuelTransitionMode::Known,
            activation: Activation::Identity,
            noise: DuelNoise::Gaussian { eta: 0.5 },
            enumeration_limit: 1_000_000,
        }
    }
}

impl DuelingParams {
    pub fn validate(&self) -> Result<()> {
        crate::estimation::ConfidenceParams { delta: self.delta, bonus_scale: self.bonus_scale, zeta_prefix: self.zeta_prefix }
            .validate()?;
        match self.noise {
            DuelNoise::Gaussian { eta } if !(eta >= 0.0) => invalid("duel noise eta must be non-negative"),
            DuelNoise::Bernoulli if self.activation != Activation::Logistic => {
                invalid("bernoulli duel feedback needs the logistic activation")
            }
            _ => Ok(()),
        }
    }

    fn noise_scale(&self) -> f64 {
        match self.noise {
            DuelNoise::Gaussian { eta } => eta,
            DuelNoise::Bernoulli => 0.5,
        }
    }

    fn feedback_noise(&self, steps: usize) -> FeedbackNoise {
        match self.noise {
            DuelNoise::Gaussian { eta } => FeedbackNoise::Gaussian { eta: vec![eta; steps] },
            DuelNoise::Bernoulli => FeedbackNoise::Bernoulli,
        }
    }
}

/// One row of a dueling run log.
#[derive(Clone, Debug, PartialEq)]
pub struct DuelRecord {
    pub round: usize,
    pub pi1_id: String,
    pub pi2_id: String,
    pub duel_regret_inc: f64,
    pub cum_duel_regret: f64,
    pub candidate_count: usize,
    pub opt_in_candidates: bool,
    /// True values of the two policies.
    pub value1: f64,
    pub value2: f64,
}

#[derive(Clone, Debug)]
pub struct DuelingRun {
    pub v_star: f64,
    pub v_min: f64,
    pub records: Vec<DuelRecord>,
}

impl DuelingRun {
    pub fn cumulative(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.cum_duel_regret).collect()
    }

    pub fn final_regret(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cum_duel_regret)
    }
}

/// Policy universe and exact values of every candidate on it.
pub struct DuelingContext<'a> {
    pub inst: &'a EnvInstance,
    pub policies: Vec<HistoryPolicy>,
    /// `values[j][i][c][k]`: value at feedback step `i` of candidate `c` under
    /// transition candidate `j` for policy `k`.
    pub values: Vec<Vec<Vec<Vec<f64>>>>,
    /// True value of each policy.
    pub true_values: Vec<f64>,
    pub v_star: f64,
    pub v_min: f64,
}

fn step_values(inst: &EnvInstance, trans: &Transitions, policies: &[HistoryPolicy]) -> Vec<Vec<Vec<f64>>> {
    let occ: Vec<Vec<Vec<f64>>> = policies.iter().map(|p| occupancy(trans, inst.spec.initial_state(), p)).collect();
    step_values_from(inst, &occ)
}

fn step_values_from(inst: &EnvInstance, occ: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<f64>>> {
    inst.spec
        .feedback_steps()
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            let class = &inst.classes[i];
            (0..class.len())
                .map(|c| {
                    let f = class.candidate(c);
                    occ.iter().map(|d| d[h - 1].iter().zip(f).map(|(p, x)| p * x).sum()).collect()
                })
                .collect()
        })
        .collect()
}

impl<'a> DuelingContext<'a> {
    pub fn new(inst: &'a EnvInstance, limit: usize) -> Result<Self> {
        let policies = enumerate_policies(inst.shape(), inst.spec.initial_state(), limit)?;
        let values: Vec<_> = inst.transition_candidates.iter().map(|t| step_values(inst, t, &policies)).collect();
        let truth_j = inst.truth_transition;
        let true_values: Vec<f64> = (0..policies.len())
            .map(|k| (0..inst.classes.len()).map(|i| values[truth_j][i][inst.truth(i)][k]).sum())
            .collect();
        let v_star = true_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let v_min = true_values.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(DuelingContext { inst, policies, values, true_values, v_star, v_min })
    }

    /// Indices of truly optimal policies.
    pub fn optimal_set(&self) -> Vec<usize> {
        (0..self.policies.len()).filter(|&k| self.true_values[k] >= self.v_star - 1e-12).collect()
    }

    /// Policies optimal for at least one model in `C_P x prod_i C_i`.
    pub fn candidate_set(&self, p_mask: &[bool], masks: &[Vec<bool>]) -> Vec<usize> {
        let n = self.policies.len();
        let mut is_candidate = vec![false; n];
        let survivors: Vec<Vec<usize>> = masks.iter().map(|m| (0..m.len()).filter(|&c| m[c]).collect()).collect();
        for j in (0..p_mask.len()).filter(|&j| p_mask[j]) {
            let mut pick = vec![0usize; survivors.len()];
            loop {
                let totals: Vec<f64> = (0..n)
                    .map(|k| pick.iter().enumerate().map(|(i, &x)| self.values[j][i][survivors[i][x]][k]).sum())
                    .collect();
                let best = totals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                for k in 0..n {
                    if totals[k] >= best - 1e-12 {
                        is_candidate[k] = true;
                    }
                }
                let mut i = 0;
                loop {
                    if i == pick.len() {
                        break;
                    }
                    pick[i] += 1;
                    if pick[i] < survivors[i].len() {
                        break;
                    }
                    pick[i] = 0;
                    i += 1;
                }
                if i == pick.len() {
                    break;
                }
            }
        }
        (0..n).filter(|&k| is_candidate[k]).collect()
    }

    /// Largest and smallest `V(pi) - V(pi')` over surviving models.
    pub fn gap_range(&self, p_mask: &[bool], masks: &[Vec<bool>], k1: usize, k2: usize) -> (f64, f64) {
        let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
        for j in (0..p_mask.len()).filter(|&j| p_mask[j]) {
            let (mut up, mut down) = (0.0, 0.0);
            for (i, m) in masks.iter().enumerate() {
                let (mut a, mut b) = (f64::NEG_INFINITY, f64::INFINITY);
                for c in (0..m.len()).filter(|&c| m[c]) {
                    let d = self.values[j][i][c][k1] - self.values[j][i][c][k2];
                    a = a.max(d);
                    b = b.min(d);
                }
                up += a;
                down += b;
            }
            hi = hi.max(up);
            lo = lo.min(down);
        }
        (hi, lo)
    }

    pub fn model_count(&self) -> f64 {
        self.inst.transition_candidates.len() as f64 * self.inst.classes.iter().map(|c| c.len() as f64).product::<f64>()
    }
}

/// Lexicographically first maximizer of `score` over `pairs`.
fn argmax_pair(pairs: impl Iterator<Item = (usize, usize)>, mut score: impl FnMut(usize, usize) -> f64) -> (usize, usize) {
    let mut best = ((0, 0), f64::NEG_INFINITY);
    for (a, b) in pairs {
        let s = score(a, b);
        if s > best.1 {
            best = ((a, b), s);
        }
    }
    best.0
}

struct DuelLearner<'a, 'b> {
    ctx: &'b DuelingContext<'a>,
    params: DuelingParams,
    fits: Vec<RewardFit>,
    inputs: Vec<RadiusInputs>,
    counts: TransitionCounts,
    rounds: usize,
}

impl<'a, 'b> DuelLearner<'a, 'b> {
    fn new(ctx: &'b DuelingContext<'a>, params: DuelingParams, rounds: usize) -> Self {
        let inst = ctx.inst;
        let shape = inst.shape();
        DuelLearner {
            ctx,
            params,
            fits: inst.classes.iter().map(|c| RewardFit::new(c.len(), params.activation)).collect(),
            inputs: inst
                .classes
                .iter()
                .map(|c| RadiusInputs {
                    class_size: c.len(),
                    eta: params.noise_scale(),
                    reward_bound: 2.0 * inst.spec.reward_bound(),
                    episodes: rounds,
                    horizon: shape.horizon,
                })
                .collect(),
            counts: TransitionCounts::new(shape.states, shape.actions),
            rounds: 0,
        }
    }

    fn masks(&self, delta: f64) -> Vec<Vec<bool>> {
        self.fits
            .iter()
            .enumerate()
            .map(|(i, fit)| {
                let beta = beta_threshold(&self.inputs[i], self.rounds, delta, self.params.bonus_scale);
                fit.mask(&DifferenceClass { base: &self.ctx.inst.classes[i] }, beta)
            })
            .collect()
    }

    fn p_mask(&self) -> Vec<bool> {
        let inst = self.ctx.inst;
        match self.params.transition_mode {
            DuelTransitionMode::Known => (0..inst.transition_candidates.len()).map(|j| j == inst.truth_transition).collect(),
            DuelTransitionMode::Finite => {
                let conf = crate::estimation::ConfidenceParams {
                    delta: self.params.delta,
                    bonus_scale: self.params.bonus_scale,
                    zeta_prefix: self.params.zeta_prefix,
                };
                let p_hat = self.counts.mle();
                let radii = self.counts.radii(self.params.delta, &conf);
                let mask: Vec<bool> = inst.transition_candidates.iter().map(|p| in_l1_balls(p, &p_hat, &radii)).collect();
                if mask.iter().any(|&m| m) {
                    mask
                } else {
                    vec![true; mask.len()]
                }
            }
        }
    }

    fn delta_bar(&self) -> f64 {
        let shape = self.ctx.inst.shape();
        let h = shape.horizon as f64;
        self.params.delta / (h * (shape.states as f64).powf(h) * (shape.actions as f64).powf(h))
    }

    /// Occupancies of every policy under the kernel used for bonuses.
    fn occupancies(&self) -> Vec<Vec<Vec<f64>>> {
        let inst = self.ctx.inst;
        let p = match self.params.transition_mode {
            DuelTransitionMode::Known => inst.spec.transitions().clone(),
            DuelTransitionMode::Finite => self.counts.mle(),
        };
        self.ctx.policies.iter().map(|pi| occupancy(&p, inst.spec.initial_state(), pi)).collect()
    }

    /// Pieces of the bonus-based rules: `V_D` under the fitted model, the
    /// reward-spread bonus per pair, and `z * b_P` per policy.
    fn bonus_terms(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) {
        let inst = self.ctx.inst;
        let shape = inst.shape();
        let n = self.ctx.policies.len();
        let occ = self.occupancies();
        let values = step_values_from(inst, &occ);
        let fits: Vec<usize> = self.fits.iter().map(|f| f.fit()).collect();
        let v_hat: Vec<f64> = (0..n).map(|k| fits.iter().enumerate().map(|(i, &c)| values[i][c][k]).sum()).collect();
        let v_d: Vec<Vec<f64>> = (0..n).map(|a| (0..n).map(|b| v_hat[a] - v_hat[b]).collect()).collect();
        let masks = self.masks(self.delta_bar());
        let supports: Vec<Vec<Vec<(usize, f64)>>> = occ
            .iter()
            .map(|d| d.iter().map(|level| level.iter().copied().enumerate().filter(|x| x.1 > 0.0).collect()).collect())
            .collect();
        let mut b_f = vec![vec![0.0; n]; n];
        for (a, row) in b_f.iter_mut().enumerate() {
            for (b, cell) in row.iter_mut().enumerate() {
                let mut total = 0.0;
                for (i, &h) in inst.spec.feedback_steps().iter().enumerate() {
                    let diff = DifferenceClass { base: &inst.classes[i] };
                    for &(x, px) in &supports[a][h - 1] {
                        for &(y, py) in &supports[b][h - 1] {
                            total += px * py * reward_bonus_gamma(&diff, &masks[i], diff.encode(x, y));
                        }
                    }
                }
                *cell = total;
            }
        }
        let b_p: Vec<f64> = match self.params.transition_mode {
            DuelTransitionMode::Known => vec![0.0; n],
            DuelTransitionMode::Finite => {
                let (s_n, a_n) = (shape.states, shape.actions);
                let t = self.rounds.max(1);
                let xi: Vec<f64> = (0..s_n * a_n)
                    .map(|sa| xi_bonus(t, self.counts.visits(sa / a_n, sa % a_n), s_n, a_n, shape.horizon, self.params.delta))
                    .collect();
                let z = z_of(inst.spec.return_bound(), self.params.bonus_scale).expect("positive bound");
                occ.iter()
                    .map(|d| {
                        let sum: f64 = (1..shape.horizon)
                            .map(|h| {
                                d[h - 1]
                                    .iter()
                                    .enumerate()
                                    .map(|(code, p)| {
                                        let (s, a) = shape.last(code);
                                        p * xi[s * a_n + a]
                                    })
                                    .sum::<f64>()
                            })
                            .sum();
                        z * sum.min(crate::cardinal::ucbvi::XI_SUM_CAP)
                    })
                    .collect()
            }
        };
        (v_d, b_f, b_p)
    }

    /// Returns the duel and the candidate set it was drawn from.
    fn choose(&self, algo: DuelingAlgorithm) -> ((usize, usize), Vec<usize>) {
        let n = self.ctx.policies.len();
        let all_pairs = || (0..n).flat_map(move |a| (0..n).map(move |b| (a, b)));
        match algo {
            DuelingAlgorithm::DuelConfidence => {
                let masks = self.masks(self.params.delta);
                let p_mask = self.p_mask();
                let cand = self.ctx.candidate_set(&p_mask, &masks);
                let pairs = cand.iter().flat_map(|&a| cand.iter().map(move |&b| (a, b)));
                let duel = argmax_pair(pairs, |a, b| {
                    let (hi, lo) = self.ctx.gap_range(&p_mask, &masks, a, b);
                    hi - lo
                });
                (duel, cand)
            }
            DuelingAlgorithm::NaiveUcrl => {
                let masks = self.masks(self.params.delta);
                let p_mask = self.p_mask();
                let duel = argmax_pair(all_pairs(), |a, b| self.ctx.gap_range(&p_mask, &masks, a, b).0);
                (duel, (0..n).collect())
            }
            DuelingAlgorithm::DuelBonus => {
                let (v_d, b_f, b_p) = self.bonus_terms();
                let cand: Vec<usize> = (0..n)
                    .filter(|&a| (0..n).all(|b| v_d[a][b] + b_f[a][b] + b_p[a] + b_p[b] >= -1e-12))
                    .collect();
                let pairs = cand.iter().flat_map(|&a| cand.iter().map(move |&b| (a, b)));
                let duel = argmax_pair(pairs, |a, b| b_f[a][b] + b_p[a] + b_p[b]);
                (duel, cand)
            }
            DuelingAlgorithm::NaiveUcbvi => {
                let (v_d, b_f, b_p) = self.bonus_terms();
                let duel = argmax_pair(all_pairs(), |a, b| v_d[a][b] + b_f[a][b] + b_p[a] + b_p[b]);
                (duel, (0..n).collect())
            }
        }
    }

    fn observe(&mut self, t1: &Trajectory, t2: &Trajectory, feedback: &[f64]) {
        let inst = self.ctx.inst;
        for (i, &h) in inst.spec.feedback_steps().iter().enumerate() {
            let diff = DifferenceClass { base: &inst.classes[i] };
            self.fits[i].observe(&diff, diff.encode(t1.code(h), t2.code(h)), feedback[i]);
        }
        for t in [t1, t2] {
            crate::cardinal::common::observe_transitions(&mut self.counts, t);
        }
        self.rounds += 1;
    }
}

/// Plays `rounds` duels and records exact dueling regret
/// `V* - (V(pi1) + V(pi2)) / 2`.
pub fn run_dueling(inst: &EnvInstance, algo: DuelingAlgorithm, params: DuelingParams, rounds: usize, seed: u64) -> Result<DuelingRun> {
    params.validate()?;
    let ctx = DuelingContext::new(inst, params.enumeration_limit)?;
    run_dueling_with(&ctx, algo, params, rounds, seed)
}

pub fn run_dueling_with(ctx: &DuelingContext, algo: DuelingAlgorithm, params: DuelingParams, rounds: usize, seed: u64) -> Result<DuelingRun> {
    params.validate()?;
    if ctx.model_count() > params.enumeration_limit as f64 {
        return invalid(format!("{} models exceed the enumeration limit", ctx.model_count()));
    }
    let inst = ctx.inst;
    let spec = &inst.spec;
    let truth = spec.composed_rewards();
    let steps = spec.feedback_steps().to_vec();
    let noise = params.feedback_noise(steps.len());
    let optimal = ctx.optimal_set();
    let ids: Vec<String> = ctx.policies.iter().map(|p| p.id()).collect();
    let mut learner = DuelLearner::new(ctx, params, rounds);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(rounds);
    let mut cum = 0.0;
    for round in 1..=rounds {
        let ((k1, k2), cand) = learner.choose(algo);
        let (v1, v2) = (ctx.true_values[k1], ctx.true_values[k2]);
        let inc = ctx.v_star - 0.5 * (v1 + v2);
        cum += inc;
        records.push(DuelRecord {
            round,
            pi1_id: ids[k1].clone(),
            pi2_id: ids[k2].clone(),
            duel_regret_inc: inc,
            cum_duel_regret: cum,
            candidate_count: cand.len(),
            opt_in_candidates: optimal.iter().any(|k| cand.contains(k)),
            value1: v1,
            value2: v2,
        });
        let t1 = rollout(spec.transitions(), spec.initial_state(), &ctx.policies[k1], &mut rng);
        let t2 = rollout(spec.transitions(), spec.initial_state(), &ctx.policies[k2], &mut rng);
        let feedback: Vec<f64> = steps
            .iter()
            .enumerate()
            .map(|(i, &h)| {
                let gap = truth.at(h, t1.code(h)) - truth.at(h, t2.code(h));
                crate::pormdp::simulate::sample_feedback(params.activation, &noise, i, gap, &mut rng)
            })
            .collect();
        learner.observe(&t1, &t2, &feedback);
    }
    Ok(DuelingRun { v_star: ctx.v_star, v_min: ctx.v_min, records })
}

/// Candidate set for explicit masks, exposed for inspection and tests.
pub fn candidate_set_for(ctx: &DuelingContext, masks: &[Vec<bool>]) -> Vec<usize> {
    let p_mask: Vec<bool> = (0..ctx.inst.transition_candidates.len()).map(|j| j == ctx.inst.truth_transition).collect();
    ctx.candidate_set(&p_mask, masks)
}

/// `fbar_c` evaluated on a pair of histories.
pub fn difference_value(inst: &EnvInstance, i: usize, c: usize, x: usize, y: usize) -> f64 {
    let diff = DifferenceClass { base: &inst.classes[i] };
    diff.value(c, diff.encode(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{combination_lock, LockMode};

    #[test]
    fn full_class_makes_every_policy_a_candidate() {
        let inst = combination_lock(2, 2, 0.8, LockMode::Dense, None).unwrap();
        let ctx = DuelingContext::new(&inst, 1000).unwrap();
        assert_eq!(ctx.policies.len(), 4);
        let masks: Vec<Vec<bool>> = inst.classes.iter().map(|c| vec![true; c.len()]).collect();
        assert_eq!(candidate_set_for(&ctx, &masks).len(), 4);
    }

    #[test]
    fn two_surviving_combos_give_two_candidates() {
        let inst = combination_lock(2, 2, 0.8, LockMode::Dense, Some(vec![1, 0])).unwrap();
        let ctx = DuelingContext::new(&inst, 1000).unwrap();
        // Step 1 knows the first digit is 1; step 2 keeps prefixes 10 and 11.
        let masks = vec![vec![false, false, true], vec![false, false, false, true, true]];
        let cand = candidate_set_for(&ctx, &masks);
        assert_eq!(cand.len(), 2);
        let firsts: Vec<Vec<usize>> = cand
            .iter()
            .map(|&k| crate::pormdp::simulate_episode(&inst.spec, &ctx.policies[k], 0).actions)
            .collect();
        assert_eq!(firsts, vec![vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn singleton_class_leaves_only_optimizers() {
        let inst = combination_lock(2, 2, 0.8, LockMode::Dense, None).unwrap();
        let ctx = DuelingContext::new(&inst, 1000).unwrap();
        let masks: Vec<Vec<bool>> =
            inst.classes.iter().enumerate().map(|(i, c)| (0..c.len()).map(|x| x == inst.truth(i)).collect()).collect();
        assert_eq!(candidate_set_for(&ctx, &masks), ctx.optimal_set());
    }
}
