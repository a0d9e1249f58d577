//! Model-free optimism over Q-function tuples with a Bellman-residual
//! confidence set.

use std::collections::HashMap;

use super::common::{Learner, Plan};
use super::AlgoParams;
use crate::envs::EnvInstance;
use crate::pormdp::{HistoryPolicy, HistoryRewards, Shape, Trajectory, Transitions};

/// One Q tuple per (transition candidate, reward model) pair.
#[derive(Clone, Debug)]
pub struct QClass {
    pub shape: Shape,
    /// `q[i][h - 1][code]` over length `h` histories.
    pub q: Vec<Vec<Vec<f64>>>,
    /// `next_max[i][h - 1][node]`: `max_a Q_{h+1}` at each step `h + 1` decision node, `h < H`.
    pub next_max: Vec<Vec<Vec<f64>>>,
    /// `(transition index, model index)` behind each tuple.
    pub labels: Vec<(usize, usize)>,
    pub truth: usize,
}

/// Optimal Q-functions of a model, by backward induction over histories.
pub fn q_tuple(trans: &Transitions, rewards: &HistoryRewards) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let shape = rewards.shape();
    let mut q: Vec<Vec<f64>> = vec![Vec::new(); shape.horizon];
    let mut next_max: Vec<Vec<f64>> = vec![Vec::new(); shape.horizon];
    for h in (1..=shape.horizon).rev() {
        let n = shape.count(h);
        let mut level = vec![0.0; n];
        if h < shape.horizon {
            let after = &q[h];
            let maxes: Vec<f64> = (0..shape.nodes(h + 1))
                .map(|node| {
                    let (code, s) = (node / shape.states, node % shape.states);
                    (0..shape.actions).map(|a| after[shape.step(code, s, a)]).fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            for (code, x) in level.iter_mut().enumerate() {
                let (s, a) = shape.last(code);
                let future: f64 = trans.row(s, a).iter().enumerate().map(|(s2, p)| p * maxes[shape.node(code, s2)]).sum();
                *x = rewards.at(h, code) + future;
            }
            next_max[h - 1] = maxes;
        } else {
            for (code, x) in level.iter_mut().enumerate() {
                *x = rewards.at(h, code);
            }
        }
        q[h - 1] = level;
    }
    (q, next_max)
}

pub fn build_q_class(inst: &EnvInstance) -> QClass {
    let mut q = Vec::new();
    let mut next_max = Vec::new();
    let mut labels = Vec::new();
    let mut truth = 0;
    for (j, trans) in inst.transition_candidates.iter().enumerate() {
        for m in 0..inst.models.len() {
            if j == inst.truth_transition && m == inst.truth_model {
                truth = labels.len();
            }
            let (qt, nm) = q_tuple(trans, &inst.model_rewards(m));
            q.push(qt);
            next_max.push(nm);
            labels.push((j, m));
        }
    }
    QClass { shape: inst.shape(), q, next_max, labels, truth }
}

/// Sufficient statistics of the squared Bellman loss at one step.
#[derive(Clone, Debug, Default)]
struct Groups {
    index: HashMap<usize, usize>,
    /// `(key, n, sum o, sum o^2)`; the key is the next decision node, or the
    /// history code at the last step.
    rows: Vec<(usize, f64, f64, f64)>,
}

impl Groups {
    fn add(&mut self, key: usize, o: f64) {
        let slot = *self.index.entry(key).or_insert_with(|| {
            self.rows.push((key, 0.0, 0.0, 0.0));
            self.rows.len() - 1
        });
        let r = &mut self.rows[slot];
        r.1 += 1.0;
        r.2 += o;
        r.3 += o * o;
    }
}

pub struct Golf<'a> {
    inst: &'a EnvInstance,
    class: QClass,
    beta: f64,
    groups: Vec<Groups>,
    episodes: usize,
    /// Episodes in which no tuple survived and the full class was used.
    pub fallbacks: usize,
}

impl<'a> Golf<'a> {
    pub fn new(inst: &'a EnvInstance, params: AlgoParams, episodes: usize) -> Self {
        let class = build_q_class(inst);
        let shape = inst.shape();
        let n = class.q.len() * (1 + shape.horizon);
        let beta = params.golf_c * ((shape.horizon * episodes.max(1) * n) as f64).ln() * params.bonus_scale;
        Golf { inst, class, beta, groups: vec![Groups::default(); shape.horizon], episodes: 0, fallbacks: 0 }
    }

    pub fn class(&self) -> &QClass {
        &self.class
    }

    /// `sum (g_h(tau[h]) - o_h - max_a Q_{h+1})^2` over the data.
    fn loss(&self, h: usize, g: usize, q: usize) -> f64 {
        let shape = self.class.shape;
        let gh = &self.class.q[g][h - 1];
        self.groups[h - 1]
            .rows
            .iter()
            .map(|&(key, n, so, so2)| {
                let (code, m) = if h < shape.horizon {
                    (key / shape.states, self.class.next_max[q][h - 1][key])
                } else {
                    (key, 0.0)
                };
                let d = gh[code] - m;
                n * d * d - 2.0 * d * so + so2
            })
            .sum()
    }

    /// Tuples whose loss at every step is within `beta` of the best fit.
    pub fn mask(&self) -> Vec<bool> {
        let n = self.class.q.len();
        if self.episodes == 0 {
            return vec![true; n];
        }
        let h_n = self.class.shape.horizon;
        (0..n)
            .map(|q| {
                (1..=h_n).all(|h| {
                    let own = self.loss(h, q, q);
                    let best = (0..n).map(|g| self.loss(h, g, q)).fold(f64::INFINITY, f64::min);
                    own <= best + self.beta
                })
            })
            .collect()
    }
}

impl Learner for Golf<'_> {
    fn plan(&mut self) -> Plan {
        let mut mask = self.mask();
        let truth_in_cf = mask[self.class.truth];
        if !mask.iter().any(|&m| m) {
            log::warn!("empty Q confidence set after {} episodes; acting on the full class", self.episodes);
            self.fallbacks += 1;
            mask.fill(true);
        }
        let survivors: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
        let shape = self.class.shape;
        let q = &self.class.q;
        let best_at = |h: usize, code: usize| survivors.iter().map(|&i| q[i][h - 1][code]).fold(f64::NEG_INFINITY, f64::max);
        let policy = HistoryPolicy::from_fn(shape, |h, code, s| {
            let mut choice = (0, f64::NEG_INFINITY);
            for a in 0..shape.actions {
                let v = best_at(h, shape.step(code, s, a));
                if v > choice.1 {
                    choice = (a, v);
                }
            }
            choice.0
        });
        let s1 = self.inst.spec.initial_state();
        let optimistic_value = (0..shape.actions).map(|a| best_at(1, shape.step(0, s1, a))).fold(f64::NEG_INFINITY, f64::max);
        Plan { policy, optimistic_value, truth_in_cf, truth_in_cp: true }
    }

    fn observe(&mut self, traj: &Trajectory) {
        let shape = self.class.shape;
        for h in 1..=shape.horizon {
            let o = traj.feedback[h - 1].unwrap_or(0.0);
            let key = if h < shape.horizon { shape.node(traj.code(h), traj.states[h]) } else { traj.code(h) };
            self.groups[h - 1].add(key, o);
        }
        self.episodes += 1;
    }
}
