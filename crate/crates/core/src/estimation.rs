//! Least-squares reward fits, confidence sets and concentration radii.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::pormdp::{Activation, Transitions};

/// A finite set of candidate functions over `0..domain`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteFunctionClass {
    domain: usize,
    /// `values[c][x]`.
    values: Vec<Vec<f64>>,
}

impl FiniteFunctionClass {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = values.first() else {
            return invalid("a function class needs at least one candidate");
        };
        let domain = first.len();
        if values.iter().any(|v| v.len() != domain) {
            return invalid("all candidates must share the same domain");
        }
        Ok(FiniteFunctionClass { domain, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn domain(&self) -> usize {
        self.domain
    }

    pub fn candidate(&self, c: usize) -> &[f64] {
        &self.values[c]
    }

    pub fn candidates(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn bound(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Anything that evaluates candidate `c` at domain point `x`.
pub trait Candidates {
    fn size(&self) -> usize;
    fn value(&self, c: usize, x: usize) -> f64;
}

impl Candidates for FiniteFunctionClass {
    fn size(&self) -> usize {
        self.len()
    }

    fn value(&self, c: usize, x: usize) -> f64 {
        self.values[c][x]
    }
}

/// `fbar_c(x, y) = f_c(x) - f_c(y)`, with the pair encoded as `x * domain + y`.
#[derive(Clone, Debug)]
pub struct DifferenceClass<'a> {
    pub base: &'a FiniteFunctionClass,
}

impl DifferenceClass<'_> {
    pub fn encode(&self, x: usize, y: usize) -> usize {
        x * self.base.domain() + y
    }
}

impl Candidates for DifferenceClass<'_> {
    fn size(&self) -> usize {
        self.base.len()
    }

    fn value(&self, c: usize, xy: usize) -> f64 {
        let d = self.base.domain();
        let f = self.base.candidate(c);
        f[xy / d] - f[xy % d]
    }
}

/// Tuning shared by every confidence construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfidenceParams {
    pub delta: f64,
    /// Multiplies every confidence radius and the `z` factor.
    pub bonus_scale: f64,
    /// Leading constant of the L1 transition radius.
    pub zeta_prefix: f64,
}

impl Default for ConfidenceParams {
    fn default() -> Self {
        ConfidenceParams { delta: 0.1, bonus_scale: 0.1, zeta_prefix: 2.0 }
    }
}

impl ConfidenceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return invalid("delta must lie in (0, 1)");
        }
        if !(self.bonus_scale > 0.0) || !(self.zeta_prefix > 0.0) {
            return invalid("bonus_scale and zeta_prefix must be positive");
        }
        Ok(())
    }
}

/// Quantities a reward confidence radius depends on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiusInputs {
    /// `N_h`, the number of candidates.
    pub class_size: usize,
    /// Sub-Gaussian scale of the feedback noise.
    pub eta: f64,
    pub reward_bound: f64,
    /// Planned number of episodes `T`.
    pub episodes: usize,
    pub horizon: usize,
}

/// `eta^2 log(N / delta) + (t B + t eta log(t / delta)) / T`.
pub fn beta_bar(inp: &RadiusInputs, t: usize, delta: f64) -> f64 {
    let t_f = t as f64;
    let alpha = (t_f * inp.reward_bound + t_f * inp.eta * (t_f / delta).ln()) / inp.episodes as f64;
    inp.eta * inp.eta * (inp.class_size as f64 / delta).ln() + alpha
}

/// Radius after `t` episodes: `beta_bar` at `delta / (2 t^2 H)`, times `bonus_scale`.
///
/// With no data the radius is infinite.
pub fn beta_threshold(inp: &RadiusInputs, t: usize, delta: f64, bonus_scale: f64) -> f64 {
    if t == 0 {
        return f64::INFINITY;
    }
    let t_f = t as f64;
    bonus_scale * beta_bar(inp, t, delta / (2.0 * t_f * t_f * inp.horizon as f64))
}

/// Index of the least-squares candidate on `data`, lowest index on ties.
pub fn least_squares_fit<C: Candidates>(class: &C, activation: Activation, data: &[(usize, f64)]) -> usize {
    let mut best = (0, f64::INFINITY);
    for c in 0..class.size() {
        let loss: f64 = data.iter().map(|&(x, o)| (activation.apply(class.value(c, x)) - o).powi(2)).sum();
        if loss < best.1 {
            best = (c, loss);
        }
    }
    best.0
}

/// `sum_i (sigma(f(x_i)) - sigma(f'(x_i)))^2`.
pub fn mse<C: Candidates>(class: &C, activation: Activation, xs: &[usize], c: usize, c2: usize) -> f64 {
    xs.iter()
        .map(|&x| (activation.apply(class.value(c, x)) - activation.apply(class.value(c2, x))).powi(2))
        .sum()
}

/// Candidates within `beta` of the fit in empirical squared distance.
pub fn confidence_set<C: Candidates>(class: &C, activation: Activation, data: &[(usize, f64)], fit: usize, beta: f64) -> Vec<bool> {
    let xs: Vec<usize> = data.iter().map(|d| d.0).collect();
    (0..class.size()).map(|c| mse(class, activation, &xs, c, fit) <= beta).collect()
}

/// Incremental version of [`least_squares_fit`] and [`confidence_set`].
#[derive(Clone, Debug)]
pub struct RewardFit {
    activation: Activation,
    size: usize,
    loss: Vec<f64>,
    /// Visit count per domain point that has been seen.
    visits: Vec<(usize, f64)>,
    index: std::collections::HashMap<usize, usize>,
    observations: usize,
}

impl RewardFit {
    pub fn new(size: usize, activation: Activation) -> Self {
        RewardFit {
            activation,
            size,
            loss: vec![0.0; size],
            visits: Vec::new(),
            index: Default::default(),
            observations: 0,
        }
    }

    pub fn observe<C: Candidates>(&mut self, class: &C, x: usize, o: f64) {
        for (c, l) in self.loss.iter_mut().enumerate() {
            *l += (self.activation.apply(class.value(c, x)) - o).powi(2);
        }
        let slot = *self.index.entry(x).or_insert_with(|| {
            self.visits.push((x, 0.0));
            self.visits.len() - 1
        });
        self.visits[slot].1 += 1.0;
        self.observations += 1;
    }

    pub fn observations(&self) -> usize {
        self.observations
    }

    pub fn fit(&self) -> usize {
        let mut best = (0, f64::INFINITY);
        for (c, &l) in self.loss.iter().enumerate() {
            if l < best.1 {
                best = (c, l);
            }
        }
        best.0
    }

    pub fn mse<C: Candidates>(&self, class: &C, c: usize, c2: usize) -> f64 {
        let s = |c, x| self.activation.apply(class.value(c, x));
        self.visits.iter().map(|&(x, n)| n * (s(c, x) - s(c2, x)).powi(2)).sum()
    }

    /// Mask of candidates within `beta` of the current fit.
    pub fn mask<C: Candidates>(&self, class: &C, beta: f64) -> Vec<bool> {
        if beta.is_infinite() {
            return vec![true; self.size];
        }
        let fit = self.fit();
        (0..self.size).map(|c| c == fit || self.mse(class, c, fit) <= beta).collect()
    }
}

/// Largest minus smallest surviving value at `x`.
pub fn reward_bonus_gamma<C: Candidates>(class: &C, mask: &[bool], x: usize) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in (0..class.size()).filter(|&c| mask[c]) {
        let v = class.value(c, x);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi < lo {
        0.0
    } else {
        hi - lo
    }
}

/// L1 radius around the empirical transition row after `n` visits, clipped at 2.
pub fn l1_radius(n: usize, states: usize, actions: usize, delta: f64, params: &ConfidenceParams) -> f64 {
    l1_radius_for(n, states, states * actions, delta, params)
}

/// [`l1_radius`] with the row support size and the number of estimated rows
/// given separately.
pub fn l1_radius_for(n: usize, support: usize, rows: usize, delta: f64, params: &ConfidenceParams) -> f64 {
    if n == 0 {
        return 2.0;
    }
    let n_f = n as f64;
    let inner = support as f64 * std::f64::consts::LN_2 + (n_f * (n_f + 1.0) * rows as f64 / delta).ln();
    (params.bonus_scale * params.zeta_prefix * (inner / (2.0 * n_f)).sqrt()).min(2.0)
}

/// Per-step transition bonus `xi^t(s, a)` after `n` visits in `t` episodes, clipped at 2.
pub fn xi_bonus(t: usize, n: usize, states: usize, actions: usize, horizon: usize, delta: f64) -> f64 {
    if n == 0 {
        return 2.0;
    }
    let (t_f, n_f, h_f, s_f) = (t.max(1) as f64, n as f64, horizon as f64, states as f64);
    let inner = h_f * (6.0 * h_f * s_f * actions as f64).ln()
        + s_f * (8.0 * t_f * t_f * h_f * h_f).ln()
        + (32.0 * t_f * t_f * n_f / delta).ln();
    (4.0 * (inner / (2.0 * n_f)).sqrt()).min(2.0)
}

/// `z(D) = max(D, 2 D sqrt(log max(D, e)))`, times `bonus_scale`.
pub fn z_of(d: f64, bonus_scale: f64) -> Result<f64> {
    if !(d > 0.0) {
        return invalid("z(D) needs D > 0");
    }
    let raw = d.max(2.0 * d * d.max(std::f64::consts::E).ln().sqrt());
    Ok(bonus_scale * raw)
}

/// Transition counts and the maximum-likelihood kernel.
#[derive(Clone, Debug)]
pub struct TransitionCounts {
    states: usize,
    actions: usize,
    counts: Vec<f64>,
    totals: Vec<usize>,
}

impl TransitionCounts {
    pub fn new(states: usize, actions: usize) -> Self {
        TransitionCounts {
            states,
            actions,
            counts: vec![0.0; states * actions * states],
            totals: vec![0; states * actions],
        }
    }

    pub fn observe(&mut self, s: usize, a: usize, s2: usize) {
        let sa = s * self.actions + a;
        self.counts[sa * self.states + s2] += 1.0;
        self.totals[sa] += 1;
    }

    pub fn visits(&self, s: usize, a: usize) -> usize {
        self.totals[s * self.actions + a]
    }

    /// `N(s, a, s') / N(s, a)`, uniform where `N(s, a) = 0`.
    pub fn mle(&self) -> Transitions {
        let mut probs = Vec::with_capacity(self.counts.len());
        for sa in 0..self.states * self.actions {
            let n = self.totals[sa];
            let row = &self.counts[sa * self.states..(sa + 1) * self.states];
            if n == 0 {
                probs.extend(std::iter::repeat_n(1.0 / self.states as f64, self.states));
            } else {
                probs.extend(row.iter().map(|c| c / n as f64));
            }
        }
        Transitions::from_flat(self.states, self.actions, probs).expect("empirical rows are distributions")
    }

    /// Radius per `(s, a)`, indexed `s * A + a`.
    pub fn radii(&self, delta: f64, params: &ConfidenceParams) -> Vec<f64> {
        self.totals.iter().map(|&n| l1_radius(n, self.states, self.actions, delta, params)).collect()
    }
}

/// Whether every row of `truth` lies in the L1 ball of the matching row of `estimate`.
pub fn in_l1_balls(truth: &Transitions, estimate: &Transitions, radii: &[f64]) -> bool {
    let a_n = truth.actions();
    (0..truth.states()).all(|s| {
        (0..a_n).all(|a| {
            let d: f64 = truth.row(s, a).iter().zip(estimate.row(s, a)).map(|(p, q)| (p - q).abs()).sum();
            d <= radii[s * a_n + a] + 1e-12
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(eta: f64) -> RadiusInputs {
        RadiusInputs { class_size: 8, eta, reward_bound: 1.0, episodes: 100, horizon: 3 }
    }

    #[test]
    fn beta_without_noise_is_linear_in_t() {
        for t in [1, 5, 40] {
            assert!((beta_bar(&inputs(0.0), t, 0.1) - t as f64 / 100.0).abs() < 1e-15);
        }
    }

    #[test]
    fn beta_grows_with_t() {
        let inp = inputs(0.5);
        let b: Vec<f64> = (1..50).map(|t| beta_threshold(&inp, t, 0.1, 1.0)).collect();
        assert!(b.windows(2).all(|w| w[1] > w[0]));
        assert!(beta_threshold(&inp, 0, 0.1, 1.0).is_infinite());
    }

    #[test]
    fn zeta_example_clips() {
        let p = ConfidenceParams { delta: 0.1, bonus_scale: 1.0, zeta_prefix: 8.0 };
        assert_eq!(l1_radius(1, 2, 2, 0.1, &p), 2.0);
        assert_eq!(l1_radius(0, 2, 2, 0.1, &p), 2.0);
        assert!(l1_radius(100_000, 2, 2, 0.1, &p) < 0.2);
    }

    #[test]
    fn z_values() {
        assert!((z_of(std::f64::consts::E, 1.0).unwrap() - 2.0 * std::f64::consts::E).abs() < 1e-12);
        assert_eq!(z_of(0.5, 1.0).unwrap(), 1.0);
        assert!(z_of(0.0, 1.0).is_err());
        for d in [0.1, 1.0, 3.0, 50.0] {
            assert!(z_of(d, 1.0).unwrap() >= d);
        }
    }

    #[test]
    fn xi_clips_when_unvisited() {
        assert_eq!(xi_bonus(5, 0, 2, 2, 3, 0.1), 2.0);
        assert!(xi_bonus(5, 1_000_000, 2, 2, 3, 0.1) < 0.1);
    }

    #[test]
    fn fit_and_mask_match_batch_versions() {
        let class = FiniteFunctionClass::new(vec![vec![0.0, 0.0, 0.0], vec![0.8, 0.0, 0.0], vec![0.0, 0.8, 0.0]]).unwrap();
        let data = vec![(1, 1.0), (1, 1.0), (0, 0.0), (2, 0.0), (1, 0.0)];
        let mut inc = RewardFit::new(3, Activation::Identity);
        for &(x, o) in &data {
            inc.observe(&class, x, o);
        }
        let fit = least_squares_fit(&class, Activation::Identity, &data);
        assert_eq!(inc.fit(), fit);
        assert_eq!(fit, 2);
        for beta in [0.0, 0.5, 1.3, 2.0] {
            assert_eq!(inc.mask(&class, beta), confidence_set(&class, Activation::Identity, &data, fit, beta));
        }
        assert_eq!(least_squares_fit(&class, Activation::Identity, &[]), 0);
    }

    #[test]
    fn gamma_is_spread_of_survivors() {
        let class = FiniteFunctionClass::new(vec![vec![0.0, 1.0], vec![0.5, 0.2], vec![0.9, 0.4]]).unwrap();
        assert!((reward_bonus_gamma(&class, &[true, true, true], 0) - 0.9).abs() < 1e-15);
        assert!((reward_bonus_gamma(&class, &[false, true, true], 1) - 0.2).abs() < 1e-15);
        assert_eq!(reward_bonus_gamma(&class, &[false, true, false], 1), 0.0);
    }

    #[test]
    fn mle_is_uniform_when_unvisited() {
        let mut c = TransitionCounts::new(3, 1);
        c.observe(0, 0, 2);
        c.observe(0, 0, 2);
        c.observe(0, 0, 1);
        let p = c.mle();
        assert_eq!(p.row(0, 0), &[0.0, 1.0 / 3.0, 2.0 / 3.0]);
        assert_eq!(p.row(1, 0), &[1.0 / 3.0; 3]);
    }
}
