//! A standard optimistic learner restricted to time-dependent state-only policies.

use super::common::{observe_transitions, Learner, Plan};
use super::{AlgoParams, TransitionMode};
use crate::envs::EnvInstance;
use crate::estimation::{in_l1_balls, TransitionCounts};
use crate::pormdp::{HistoryPolicy, Trajectory};

/// Treats the feedback at `(h, s, a)` as a Markovian reward and runs
/// Hoeffding-style optimistic value iteration on `(h, s)`.
pub struct MarkovianUcbvi<'a> {
    inst: &'a EnvInstance,
    params: AlgoParams,
    episodes_planned: usize,
    counts: TransitionCounts,
    /// `[h - 1][s * A + a]` visit counts and feedback sums.
    visits: Vec<Vec<f64>>,
    sums: Vec<Vec<f64>>,
}

impl<'a> MarkovianUcbvi<'a> {
    pub fn new(inst: &'a EnvInstance, params: AlgoParams, episodes: usize) -> Self {
        let shape = inst.shape();
        let sa = shape.states * shape.actions;
        MarkovianUcbvi {
            inst,
            params,
            episodes_planned: episodes.max(1),
            counts: TransitionCounts::new(shape.states, shape.actions),
            visits: vec![vec![0.0; sa]; shape.horizon],
            sums: vec![vec![0.0; sa]; shape.horizon],
        }
    }
}

impl Learner for MarkovianUcbvi<'_> {
    fn plan(&mut self) -> Plan {
        let spec = &self.inst.spec;
        let shape = spec.shape();
        let (s_n, a_n, h_n) = (shape.states, shape.actions, shape.horizon);
        let known = self.params.transition_mode == TransitionMode::Known;
        let p = if known { spec.transitions().clone() } else { self.counts.mle() };
        let bound = spec.reward_bound();
        let log_term = ((2 * s_n * a_n * h_n * self.episodes_planned) as f64 / self.params.delta).ln();
        let mut table = vec![vec![0usize; s_n]; h_n];
        let mut next = vec![0.0; s_n];
        for h in (1..=h_n).rev() {
            let feedback = spec.feedback_index(h).is_some();
            let remaining = spec.feedback_steps().iter().filter(|&&l| l >= h).count() as f64 * bound;
            let mut values = vec![0.0; s_n];
            for s in 0..s_n {
                let mut best = (0, f64::NEG_INFINITY);
                for a in 0..a_n {
                    let n = self.visits[h - 1][s * a_n + a];
                    let r_hat = if feedback && n > 0.0 { self.sums[h - 1][s * a_n + a] / n } else { 0.0 };
                    let bonus = self.params.bonus_scale * spec.return_bound() * (log_term / n.max(1.0)).sqrt();
                    let future: f64 = if h < h_n { p.row(s, a).iter().zip(&next).map(|(x, v)| x * v).sum() } else { 0.0 };
                    let q = (r_hat + bonus + future).min(remaining);
                    if q > best.1 {
                        best = (a, q);
                    }
                }
                table[h - 1][s] = best.0;
                values[s] = best.1;
            }
            next = values;
        }
        let policy = HistoryPolicy::markovian(shape, &table);
        let truth_in_cp = known || {
            let conf = self.params.confidence();
            in_l1_balls(spec.transitions(), &p, &self.counts.radii(conf.delta, &conf))
        };
        Plan { policy, optimistic_value: next[spec.initial_state()], truth_in_cf: false, truth_in_cp }
    }

    fn observe(&mut self, traj: &Trajectory) {
        let a_n = self.inst.shape().actions;
        for h in 1..=traj.horizon() {
            let sa = traj.states[h - 1] * a_n + traj.actions[h - 1];
            self.visits[h - 1][sa] += 1.0;
            if let Some(o) = traj.feedback[h - 1] {
                self.sums[h - 1][sa] += o;
            }
        }
        observe_transitions(&mut self.counts, traj);
    }
}
