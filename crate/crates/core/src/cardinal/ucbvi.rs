//! Planning under the estimated model with additive exploration bonuses.

use super::common::{observe_transitions, truth_in_masks, Learner, Plan, RewardSide};
use super::{AlgoParams, TransitionMode};
use crate::envs::EnvInstance;
use crate::estimation::{in_l1_balls, reward_bonus_gamma, xi_bonus, z_of, TransitionCounts};
use crate::pormdp::{backward_plan, optimal_policy, HistoryRewards, Trajectory};

/// Cap on the summed per-step transition bonus along one trajectory.
pub const XI_SUM_CAP: f64 = 4.0;

pub struct PorUcbvi<'a> {
    inst: &'a EnvInstance,
    params: AlgoParams,
    reward: RewardSide,
    counts: TransitionCounts,
}

impl<'a> PorUcbvi<'a> {
    pub fn new(inst: &'a EnvInstance, params: AlgoParams, episodes: usize) -> Self {
        let shape = inst.shape();
        PorUcbvi {
            inst,
            params,
            reward: RewardSide::new(inst, episodes),
            counts: TransitionCounts::new(shape.states, shape.actions),
        }
    }

    /// Confidence level for the reward sets, split over every history.
    fn delta_bar(&self) -> f64 {
        let shape = self.inst.shape();
        let h = shape.horizon as f64;
        self.params.delta / (h * (shape.states as f64).powf(h) * (shape.actions as f64).powf(h))
    }

    /// `f_hat + gamma` on every feedback step.
    fn bonus_rewards(&self, masks: &[Vec<bool>]) -> HistoryRewards {
        let inst = self.inst;
        let fits = self.reward.best();
        let mut out = HistoryRewards::zeros(inst.shape(), inst.spec.feedback_steps());
        for (i, &h) in inst.spec.feedback_steps().iter().enumerate() {
            let class = &inst.classes[i];
            for (code, x) in out.get_mut(h).unwrap().iter_mut().enumerate() {
                *x = class.candidate(fits[i])[code] + reward_bonus_gamma(class, &masks[i], code);
            }
        }
        out
    }
}

impl Learner for PorUcbvi<'_> {
    fn plan(&mut self) -> Plan {
        let inst = self.inst;
        let shape = inst.shape();
        let conf = self.params.confidence();
        let masks = self.reward.masks(inst, self.delta_bar(), conf.bonus_scale);
        let rewards = self.bonus_rewards(&masks);
        let s1 = inst.spec.initial_state();
        let truth_in_cf = truth_in_masks(inst, &masks);
        if self.params.transition_mode == TransitionMode::Known {
            let (policy, v) = optimal_policy(inst.spec.transitions(), s1, &rewards);
            return Plan { policy, optimistic_value: v, truth_in_cf, truth_in_cp: true };
        }
        let p_hat = self.counts.mle();
        let t = self.reward.episodes.max(1);
        let (s_n, a_n) = (shape.states, shape.actions);
        let xi: Vec<f64> = (0..s_n * a_n)
            .map(|sa| xi_bonus(t, self.counts.visits(sa / a_n, sa % a_n), s_n, a_n, shape.horizon, conf.delta))
            .collect();
        let z = z_of(inst.spec.return_bound(), conf.bonus_scale).expect("positive return bound");
        // acc[h][code]: summed xi over the first h steps of the history, h < H.
        let mut acc: Vec<Vec<f64>> = vec![vec![0.0]];
        for h in 1..shape.horizon {
            let prev = &acc[h - 1];
            let level = (0..shape.count(h))
                .map(|code| {
                    let (s, a) = shape.last(code);
                    prev[shape.parent(code)] + xi[s * a_n + a]
                })
                .collect();
            acc.push(level);
        }
        let (policy, v) = backward_plan(shape, s1, |h, node, a, child, next| {
            let s = node % s_n;
            let future: f64 = p_hat.row(s, a).iter().zip(next).map(|(p, x)| p * x).sum();
            let bonus = if h < shape.horizon {
                let before = acc[h - 1][node / s_n].min(XI_SUM_CAP);
                z * (acc[h][child].min(XI_SUM_CAP) - before)
            } else {
                0.0
            };
            rewards.at(h, child) + bonus + future
        });
        let truth_in_cp = in_l1_balls(inst.spec.transitions(), &p_hat, &xi);
        Plan { policy, optimistic_value: v, truth_in_cf, truth_in_cp }
    }

    fn observe(&mut self, traj: &Trajectory) {
        self.reward.observe(self.inst, traj);
        observe_transitions(&mut self.counts, traj);
    }
}
