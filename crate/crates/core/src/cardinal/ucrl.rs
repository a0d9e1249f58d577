//! Optimism over confidence sets: the history-aware learner and a baseline
//! that estimates transitions per history.

use super::common::{observe_transitions, truth_in_masks, Learner, Plan, RewardSide};
use super::evi::{extended_value_iteration, extended_value_iteration_with};
use super::{AlgoParams, TransitionMode};
use crate::envs::EnvInstance;
use crate::estimation::{in_l1_balls, l1_radius_for, TransitionCounts};
use crate::pormdp::{HistoryRewards, Trajectory};

/// `r_tilde_h(tau) = max over surviving candidates of f(tau)`.
pub fn optimistic_rewards(inst: &EnvInstance, masks: &[Vec<bool>]) -> HistoryRewards {
    let shape = inst.shape();
    let mut out = HistoryRewards::zeros(shape, inst.spec.feedback_steps());
    for (i, &h) in inst.spec.feedback_steps().iter().enumerate() {
        let class = &inst.classes[i];
        let table = out.get_mut(h).unwrap();
        table.fill(f64::NEG_INFINITY);
        for c in (0..class.len()).filter(|&c| masks[i][c]) {
            for (t, &v) in table.iter_mut().zip(class.candidate(c)) {
                *t = t.max(v);
            }
        }
    }
    out
}

pub struct PorUcrl<'a> {
    inst: &'a EnvInstance,
    params: AlgoParams,
    reward: RewardSide,
    counts: TransitionCounts,
}

impl<'a> PorUcrl<'a> {
    pub fn new(inst: &'a EnvInstance, params: AlgoParams, episodes: usize) -> Self {
        let shape = inst.shape();
        PorUcrl {
            inst,
            params,
            reward: RewardSide::new(inst, episodes),
            counts: TransitionCounts::new(shape.states, shape.actions),
        }
    }
}

impl Learner for PorUcrl<'_> {
    fn plan(&mut self) -> Plan {
        let inst = self.inst;
        let shape = inst.shape();
        let conf = self.params.confidence();
        let masks = self.reward.masks(inst, conf.delta, conf.bonus_scale);
        let r_tilde = optimistic_rewards(inst, &masks);
        let truth_p = inst.spec.transitions();
        let s1 = inst.spec.initial_state();
        let (policy, value, in_cp) = match self.params.transition_mode {
            TransitionMode::Known => {
                let (pi, v) = extended_value_iteration(truth_p, &vec![0.0; shape.radix()], s1, &r_tilde);
                (pi, v, true)
            }
            TransitionMode::Unknown => {
                let p_hat = self.counts.mle();
                let radii = self.counts.radii(conf.delta, &conf);
                let (pi, v) = extended_value_iteration(&p_hat, &radii, s1, &r_tilde);
                (pi, v, in_l1_balls(truth_p, &p_hat, &radii))
            }
        };
        Plan { policy, optimistic_value: value, truth_in_cf: truth_in_masks(inst, &masks), truth_in_cp: in_cp }
    }

    fn observe(&mut self, traj: &Trajectory) {
        self.reward.observe(self.inst, traj);
        observe_transitions(&mut self.counts, traj);
    }
}

/// Same reward side, but each decision node gets its own transition estimate,
/// as if every history were a separate state.
pub struct NaiveHistoryUcrl<'a> {
    inst: &'a EnvInstance,
    params: AlgoParams,
    reward: RewardSide,
    /// Per step `h < H`: counts indexed `(node * A + a) * S + s'`.
    counts: Vec<Vec<f64>>,
    totals: Vec<Vec<usize>>,
}

impl<'a> NaiveHistoryUcrl<'a> {
    pub fn new(inst: &'a EnvInstance, params: AlgoParams, episodes: usize) -> Self {
        let shape = inst.shape();
        let counts = (1..shape.horizon).map(|h| vec![0.0; shape.nodes(h) * shape.actions * shape.states]).collect();
        let totals = (1..shape.horizon).map(|h| vec![0; shape.nodes(h) * shape.actions]).collect();
        NaiveHistoryUcrl { inst, params, reward: RewardSide::new(inst, episodes), counts, totals }
    }
}

impl Learner for NaiveHistoryUcrl<'_> {
    fn plan(&mut self) -> Plan {
        let inst = self.inst;
        let shape = inst.shape();
        let conf = self.params.confidence();
        let masks = self.reward.masks(inst, conf.delta, conf.bonus_scale);
        let r_tilde = optimistic_rewards(inst, &masks);
        let known = self.params.transition_mode == TransitionMode::Known;
        let rows_estimated: usize = (1..shape.horizon).map(|h| shape.nodes(h) * shape.actions).sum();
        let (s_n, a_n) = (shape.states, shape.actions);
        let truth = inst.spec.transitions();
        // Empirical rows and radii per step, built once per episode.
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(shape.horizon);
        let mut radii: Vec<Vec<f64>> = Vec::with_capacity(shape.horizon);
        let mut in_cp = true;
        for h in 1..shape.horizon {
            let n_rows = shape.nodes(h) * a_n;
            let mut p = Vec::with_capacity(n_rows * s_n);
            let mut r = Vec::with_capacity(n_rows);
            for row in 0..n_rows {
                let (node, a) = (row / a_n, row % a_n);
                let s = node % s_n;
                let n = self.totals[h - 1][row];
                if known {
                    p.extend_from_slice(truth.row(s, a));
                    r.push(0.0);
                    continue;
                }
                let counts = &self.counts[h - 1][row * s_n..(row + 1) * s_n];
                let start = p.len();
                if n == 0 {
                    p.extend(std::iter::repeat_n(1.0 / s_n as f64, s_n));
                } else {
                    p.extend(counts.iter().map(|c| c / n as f64));
                }
                let radius = l1_radius_for(n, s_n, rows_estimated, conf.delta, &conf);
                let dist: f64 = p[start..].iter().zip(truth.row(s, a)).map(|(x, y)| (x - y).abs()).sum();
                in_cp &= dist <= radius + 1e-12;
                r.push(radius);
            }
            rows.push(p);
            radii.push(r);
        }
        let (policy, value) = extended_value_iteration_with(shape, inst.spec.initial_state(), &r_tilde, |h, node, a| {
            let row = node * a_n + a;
            (&rows[h - 1][row * s_n..(row + 1) * s_n], radii[h - 1][row])
        });
        Plan { policy, optimistic_value: value, truth_in_cf: truth_in_masks(inst, &masks), truth_in_cp: in_cp }
    }

    fn observe(&mut self, traj: &Trajectory) {
        self.reward.observe(self.inst, traj);
        let shape = self.inst.shape();
        for h in 1..traj.horizon() {
            let row = traj.node(&shape, h) * shape.actions + traj.actions[h - 1];
            self.counts[h - 1][row * shape.states + traj.states[h]] += 1.0;
            self.totals[h - 1][row] += 1;
        }
    }
}
