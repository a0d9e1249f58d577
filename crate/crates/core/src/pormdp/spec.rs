//! The observable process, the hidden reward machinery and its composed form.

use serde::{Deserialize, Serialize};

use super::history::{Shape, DEFAULT_HISTORY_CAP};
use crate::error::{Error, Result};

const ROW_TOL: f64 = 1e-12;

/// Link between a reward and the mean of its feedback.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Logistic,
}

impl Activation {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Logistic => 1.0 / (1.0 + (-x).exp()),
        }
    }
}

/// Distribution of feedback around its mean `sigma(r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeedbackNoise {
    /// `o ~ Bernoulli(sigma(r))`.
    Bernoulli,
    /// `o ~ N(sigma(r), eta_h^2)`, one `eta` per feedback step.
    Gaussian { eta: Vec<f64> },
}

impl FeedbackNoise {
    /// Sub-Gaussian scale of the noise at the `i`-th feedback step.
    pub fn scale(&self, i: usize) -> f64 {
        match self {
            FeedbackNoise::Bernoulli => 0.5,
            FeedbackNoise::Gaussian { eta } => eta[i],
        }
    }
}

/// Tabular transition kernel `P(s' | s, a)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Transitions {
    states: usize,
    actions: usize,
    probs: Vec<f64>,
}

impl Transitions {
    pub fn from_nested(rows: &[Vec<Vec<f64>>]) -> Result<Self> {
        let states = rows.len();
        if states == 0 {
            return Err(Error::InvalidSpec("transitions are empty".into()));
        }
        let actions = rows[0].len();
        let mut probs = Vec::with_capacity(states * actions * states);
        for (s, per_s) in rows.iter().enumerate() {
            if per_s.len() != actions {
                return Err(Error::InvalidSpec(format!("transitions[{s}] has {} actions, expected {actions}", per_s.len())));
            }
            for (a, row) in per_s.iter().enumerate() {
                if row.len() != states {
                    return Err(Error::InvalidSpec(format!("transitions[{s}][{a}] has length {}, expected {states}", row.len())));
                }
                probs.extend_from_slice(row);
            }
        }
        let t = Transitions { states, actions, probs };
        t.validate()?;
        Ok(t)
    }

    pub fn from_flat(states: usize, actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != states * actions * states {
            return Err(Error::InvalidSpec("transition table has the wrong length".into()));
        }
        let t = Transitions { states, actions, probs };
        t.validate()?;
        Ok(t)
    }

    pub fn uniform(states: usize, actions: usize) -> Self {
        Transitions { states, actions, probs: vec![1.0 / states as f64; states * actions * states] }
    }

    fn validate(&self) -> Result<()> {
        for s in 0..self.states {
            for a in 0..self.actions {
                let row = self.row(s, a);
                if row.iter().any(|p| !(0.0..=1.0).contains(p) || p.is_nan()) {
                    return Err(Error::InvalidSpec(format!("transitions[{s}][{a}] has an entry outside [0, 1]")));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_TOL {
                    return Err(Error::InvalidSpec(format!("transitions[{s}][{a}] sums to {sum}")));
                }
            }
        }
        Ok(())
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.actions + a) * self.states;
        &self.probs[start..start + self.states]
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.states)
            .map(|s| (0..self.actions).map(|a| self.row(s, a).to_vec()).collect())
            .collect()
    }

    /// Largest L1 distance between matching rows.
    pub fn max_l1_distance(&self, other: &Transitions) -> f64 {
        self.probs
            .chunks(self.states)
            .zip(other.probs.chunks(other.states))
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// A reward table over histories for every feedback step: `f_h(tau[h])`.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryRewards {
    shape: Shape,
    tables: Vec<Option<Vec<f64>>>,
}

impl HistoryRewards {
    /// `tables[h - 1]` is `Some` exactly on feedback steps and has `(S A)^h` entries.
    pub fn new(shape: Shape, tables: Vec<Option<Vec<f64>>>) -> Result<Self> {
        if tables.len() != shape.horizon {
            return Err(Error::InvalidArgument(format!("expected {} reward tables, got {}", shape.horizon, tables.len())));
        }
        for (i, t) in tables.iter().enumerate() {
            if let Some(t) = t {
                if t.len() != shape.count(i + 1) {
                    return Err(Error::InvalidArgument(format!("reward table at step {} has length {}", i + 1, t.len())));
                }
            }
        }
        Ok(HistoryRewards { shape, tables })
    }

    pub fn zeros(shape: Shape, feedback_steps: &[usize]) -> Self {
        let mut tables = vec![None; shape.horizon];
        for &h in feedback_steps {
            tables[h - 1] = Some(vec![0.0; shape.count(h)]);
        }
        HistoryRewards { shape, tables }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Table at step `h` (1-based), `None` off the feedback steps.
    pub fn get(&self, h: usize) -> Option<&[f64]> {
        self.tables[h - 1].as_deref()
    }

    pub fn get_mut(&mut self, h: usize) -> Option<&mut Vec<f64>> {
        self.tables[h - 1].as_mut()
    }

    pub fn at(&self, h: usize, code: usize) -> f64 {
        self.get(h).map_or(0.0, |t| t[code])
    }

    pub fn feedback_steps(&self) -> Vec<usize> {
        (1..=self.shape.horizon).filter(|&h| self.tables[h - 1].is_some()).collect()
    }

    pub fn negated(&self) -> Self {
        let tables = self.tables.iter().map(|t| t.as_ref().map(|t| t.iter().map(|x| -x).collect())).collect();
        HistoryRewards { shape: self.shape, tables }
    }

    /// Applies `op(h, code, value)` to every entry.
    pub fn map(&self, op: impl Fn(usize, usize, f64) -> f64) -> Self {
        let tables = self
            .tables
            .iter()
            .enumerate()
            .map(|(i, t)| t.as_ref().map(|t| t.iter().enumerate().map(|(c, &x)| op(i + 1, c, x)).collect()))
            .collect();
        HistoryRewards { shape: self.shape, tables }
    }
}

/// Serialized form of [`PormdpSpec`]. Field names match the JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDoc {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    /// 1-based steps that produce feedback, strictly increasing.
    pub feedback_steps: Vec<usize>,
    /// `transitions[s][a][s']`.
    pub transitions: Vec<Vec<Vec<f64>>>,
    pub initial_state: usize,
    pub internal_states: usize,
    /// One decoder per feedback step, mapping each history code of that length to an internal state.
    pub decoder: Vec<Vec<usize>>,
    /// One table per feedback step, `rewards[i][s][u][a]`.
    pub rewards: Vec<Vec<Vec<Vec<f64>>>>,
    pub reward_bound: f64,
    pub activation: Activation,
    pub feedback_noise: FeedbackNoise,
}

/// A partially observable reward-state decision process with a deterministic decoder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecDoc", into = "SpecDoc")]
pub struct PormdpSpec {
    doc: SpecDoc,
    shape: Shape,
    transitions: Transitions,
    composed: HistoryRewards,
}

impl TryFrom<SpecDoc> for PormdpSpec {
    type Error = Error;

    fn try_from(doc: SpecDoc) -> Result<Self> {
        PormdpSpec::new(doc)
    }
}

impl From<PormdpSpec> for SpecDoc {
    fn from(spec: PormdpSpec) -> SpecDoc {
        spec.doc
    }
}

impl PormdpSpec {
    pub fn new(doc: SpecDoc) -> Result<Self> {
        Self::with_cap(doc, DEFAULT_HISTORY_CAP)
    }

    pub fn with_cap(doc: SpecDoc, cap: usize) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        let (s_n, a_n, h_n) = (doc.num_states, doc.num_actions, doc.horizon);
        if s_n == 0 || a_n == 0 || h_n == 0 {
            return bad("num_states, num_actions and horizon must be positive".into());
        }
        let shape = Shape::new(s_n, a_n, h_n);
        shape.check_cap(cap)?;
        if doc.transitions.len() != s_n {
            return bad(format!("transitions has {} states, expected {s_n}", doc.transitions.len()));
        }
        let transitions = Transitions::from_nested(&doc.transitions)?;
        if transitions.actions() != a_n {
            return bad(format!("transitions has {} actions, expected {a_n}", transitions.actions()));
        }
        if doc.initial_state >= s_n {
            return bad(format!("initial_state {} out of range", doc.initial_state));
        }
        let hp = &doc.feedback_steps;
        if hp.is_empty() {
            return bad("feedback_steps is empty".into());
        }
        if hp.windows(2).any(|w| w[0] >= w[1]) || hp[0] == 0 || *hp.last().unwrap() > h_n {
            return bad("feedback_steps must be strictly increasing within 1..=horizon".into());
        }
        if doc.internal_states == 0 {
            return bad("internal_states must be positive".into());
        }
        if !(doc.reward_bound > 0.0) {
            return bad("reward_bound must be positive".into());
        }
        if doc.decoder.len() != hp.len() || doc.rewards.len() != hp.len() {
            return bad("decoder and rewards need one entry per feedback step".into());
        }
        if let FeedbackNoise::Gaussian { eta } = &doc.feedback_noise {
            if eta.len() != hp.len() || eta.iter().any(|e| !(*e >= 0.0)) {
                return bad("gaussian noise needs one non-negative eta per feedback step".into());
            }
        }
        let mut tables = vec![None; h_n];
        for (i, &h) in hp.iter().enumerate() {
            let g = &doc.decoder[i];
            if g.len() != shape.count(h) {
                return bad(format!("decoder at step {h} has length {}, expected {}", g.len(), shape.count(h)));
            }
            if g.iter().any(|&u| u >= doc.internal_states) {
                return bad(format!("decoder at step {h} emits an internal state out of range"));
            }
            let r = &doc.rewards[i];
            let well_shaped = r.len() == s_n
                && r.iter().all(|per_s| per_s.len() == doc.internal_states && per_s.iter().all(|per_u| per_u.len() == a_n));
            if !well_shaped {
                return bad(format!("rewards at step {h} must have shape [{s_n}][{}][{a_n}]", doc.internal_states));
            }
            for x in r.iter().flatten().flatten() {
                if !(x.abs() <= doc.reward_bound) {
                    return bad(format!("reward {x} at step {h} exceeds the bound {}", doc.reward_bound));
                }
                if doc.feedback_noise == FeedbackNoise::Bernoulli {
                    let m = doc.activation.apply(*x);
                    if !(0.0..=1.0).contains(&m) {
                        return bad(format!("bernoulli feedback needs sigma(r) in [0, 1], got {m} at step {h}"));
                    }
                }
            }
            let f: Vec<f64> = (0..shape.count(h))
                .map(|code| {
                    let (s, a) = shape.last(code);
                    r[s][g[code]][a]
                })
                .collect();
            tables[h - 1] = Some(f);
        }
        let composed = HistoryRewards::new(shape, tables)?;
        Ok(PormdpSpec { doc, shape, transitions, composed })
    }

    /// Builds a spec whose internal states are the distinct reward levels of `rewards`.
    ///
    /// Any history-dependent reward table can be written this way: the decoder
    /// sends each history to its level and the reward of a level is that value.
    pub fn from_history_rewards(
        transitions: &Transitions,
        initial_state: usize,
        rewards: &HistoryRewards,
        reward_bound: f64,
        activation: Activation,
        feedback_noise: FeedbackNoise,
    ) -> Result<Self> {
        let shape = rewards.shape();
        let steps = rewards.feedback_steps();
        let mut levels: Vec<f64> = steps.iter().flat_map(|&h| rewards.get(h).unwrap().iter().copied()).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let level_of = |x: f64| levels.binary_search_by(|l| l.total_cmp(&x)).unwrap();
        let decoder = steps.iter().map(|&h| rewards.get(h).unwrap().iter().map(|&x| level_of(x)).collect()).collect();
        let table: Vec<Vec<Vec<f64>>> = vec![levels.iter().map(|&l| vec![l; shape.actions]).collect(); shape.states];
        let doc = SpecDoc {
            num_states: shape.states,
            num_actions: shape.actions,
            horizon: shape.horizon,
            feedback_steps: steps.clone(),
            transitions: transitions.to_nested(),
            initial_state,
            internal_states: levels.len(),
            decoder,
            rewards: vec![table; steps.len()],
            reward_bound,
            activation,
            feedback_noise,
        };
        PormdpSpec::new(doc)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn doc(&self) -> &SpecDoc {
        &self.doc
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn transitions(&self) -> &Transitions {
        &self.transitions
    }

    pub fn initial_state(&self) -> usize {
        self.doc.initial_state
    }

    pub fn feedback_steps(&self) -> &[usize] {
        &self.doc.feedback_steps
    }

    /// Position of `h` among the feedback steps.
    pub fn feedback_index(&self, h: usize) -> Option<usize> {
        self.doc.feedback_steps.iter().position(|&x| x == h)
    }

    pub fn reward_bound(&self) -> f64 {
        self.doc.reward_bound
    }

    pub fn activation(&self) -> Activation {
        self.doc.activation
    }

    pub fn noise(&self) -> &FeedbackNoise {
        &self.doc.feedback_noise
    }

    /// `f_h(tau[h]) = r_h(s_h, g_h(tau[h]), a_h)` for every feedback step.
    pub fn composed_rewards(&self) -> &HistoryRewards {
        &self.composed
    }

    /// `B * p`, the largest possible return magnitude.
    pub fn return_bound(&self) -> f64 {
        self.doc.reward_bound * self.doc.feedback_steps.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_doc() -> SpecDoc {
        SpecDoc {
            num_states: 2,
            num_actions: 2,
            horizon: 2,
            feedback_steps: vec![2],
            transitions: vec![vec![vec![0.5, 0.5], vec![1.0, 0.0]], vec![vec![0.0, 1.0], vec![0.25, 0.75]]],
            initial_state: 0,
            internal_states: 2,
            decoder: vec![(0..16).map(|c| c % 2).collect()],
            rewards: vec![vec![vec![vec![0.0, 0.1], vec![0.9, 1.0]]; 2]],
            reward_bound: 1.0,
            activation: Activation::Identity,
            feedback_noise: FeedbackNoise::Bernoulli,
        }
    }

    #[test]
    fn json_roundtrip_is_byte_identical() {
        let spec = PormdpSpec::new(tiny_doc()).unwrap();
        let text = spec.to_json();
        let back = PormdpSpec::from_json(&text).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn composed_table_reads_decoder() {
        let spec = PormdpSpec::new(tiny_doc()).unwrap();
        let shape = spec.shape();
        let f = spec.composed_rewards().get(2).unwrap();
        assert_eq!(f.len(), 16);
        for (code, &x) in f.iter().enumerate() {
            let (_, a) = shape.last(code);
            assert_eq!(x, [[0.0, 0.1], [0.9, 1.0]][code % 2][a]);
        }
        assert!(spec.composed_rewards().get(1).is_none());
    }

    #[test]
    fn rejects_bad_rows_and_unknown_fields() {
        let mut doc = tiny_doc();
        doc.transitions[0][0] = vec![0.5, 0.6];
        assert!(PormdpSpec::new(doc).is_err());
        let mut v = serde_json::to_value(tiny_doc()).unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(PormdpSpec::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn rejects_bernoulli_mean_outside_unit_interval() {
        let mut doc = tiny_doc();
        doc.rewards[0][0][0][0] = -0.5;
        assert!(PormdpSpec::new(doc).is_err());
    }

    #[test]
    fn level_construction_reproduces_table() {
        let shape = Shape::new(2, 2, 2);
        let mut rewards = HistoryRewards::zeros(shape, &[1, 2]);
        for (i, x) in rewards.get_mut(2).unwrap().iter_mut().enumerate() {
            *x = (i % 5) as f64 / 5.0;
        }
        rewards.get_mut(1).unwrap()[3] = 0.3;
        let spec = PormdpSpec::from_history_rewards(
            &Transitions::uniform(2, 2),
            1,
            &rewards,
            1.0,
            Activation::Identity,
            FeedbackNoise::Bernoulli,
        )
        .unwrap();
        assert_eq!(spec.composed_rewards(), &rewards);
    }
}
