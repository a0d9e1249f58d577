//! State shared by the model-based learners.

use crate::envs::EnvInstance;
use crate::estimation::{beta_threshold, RadiusInputs, RewardFit, TransitionCounts};
use crate::pormdp::{HistoryPolicy, Trajectory};

/// What a learner commits to for one episode.
#[derive(Clone, Debug)]
pub struct Plan {
    pub policy: HistoryPolicy,
    pub optimistic_value: f64,
    pub truth_in_cf: bool,
    pub truth_in_cp: bool,
}

pub trait Learner {
    fn plan(&mut self) -> Plan;
    fn observe(&mut self, traj: &Trajectory);
}

/// Per feedback step least-squares fits on the observed feedback.
#[derive(Clone, Debug)]
pub struct RewardSide {
    pub fits: Vec<RewardFit>,
    pub inputs: Vec<RadiusInputs>,
    pub episodes: usize,
}

impl RewardSide {
    pub fn new(inst: &EnvInstance, total_episodes: usize) -> Self {
        let spec = &inst.spec;
        let fits = inst.classes.iter().map(|c| RewardFit::new(c.len(), spec.activation())).collect();
        let inputs = inst
            .classes
            .iter()
            .enumerate()
            .map(|(i, c)| RadiusInputs {
                class_size: c.len(),
                eta: spec.noise().scale(i),
                reward_bound: spec.reward_bound(),
                episodes: total_episodes,
                horizon: spec.shape().horizon,
            })
            .collect();
        RewardSide { fits, inputs, episodes: 0 }
    }

    pub fn observe(&mut self, inst: &EnvInstance, traj: &Trajectory) {
        for (i, &h) in inst.spec.feedback_steps().iter().enumerate() {
            if let Some(o) = traj.feedback[h - 1] {
                self.fits[i].observe(&inst.classes[i], traj.code(h), o);
            }
        }
        self.episodes += 1;
    }

    pub fn masks(&self, inst: &EnvInstance, delta: f64, bonus_scale: f64) -> Vec<Vec<bool>> {
        self.fits
            .iter()
            .enumerate()
            .map(|(i, fit)| fit.mask(&inst.classes[i], beta_threshold(&self.inputs[i], self.episodes, delta, bonus_scale)))
            .collect()
    }

    pub fn best(&self) -> Vec<usize> {
        self.fits.iter().map(|f| f.fit()).collect()
    }
}

pub fn truth_in_masks(inst: &EnvInstance, masks: &[Vec<bool>]) -> bool {
    masks.iter().enumerate().all(|(i, m)| m[inst.truth(i)])
}

pub fn observe_transitions(counts: &mut TransitionCounts, traj: &Trajectory) {
    for h in 1..traj.horizon() {
        counts.observe(traj.states[h - 1], traj.actions[h - 1], traj.states[h]);
    }
}
