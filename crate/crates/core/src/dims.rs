//! Exact eluder-type dimensions of finite classes, with checkable witnesses.
//!
//! All dimensions use the pairwise form: a point `x` is `eps`-independent of
//! `x_1..x_k` when some pair `f, f'` has `sum_i (f - f')(x_i)^2 <= eps^2` and
//! `|(f - f')(x)| > eps`. The dimension at `eps` is the longest independent
//! sequence at any scale `eps' >= eps`.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cardinal::QClass;
use crate::envs::EnvInstance;
use crate::error::{invalid, Result};
use crate::estimation::FiniteFunctionClass;
use crate::pormdp::{occupancy, HistoryPolicy, PormdpSpec};

/// Slack for comparing sums and gaps that are equal in exact arithmetic.
const TOL: f64 = 1e-9;

pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DimOptions {
    /// Search nodes expanded before giving up with a lower bound.
    pub budget: u64,
}

impl Default for DimOptions {
    fn default() -> Self {
        DimOptions { budget: DEFAULT_BUDGET }
    }
}

/// An independent sequence at scale `epsilon`, with the pair used at each step.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DimWitness {
    pub points: Vec<usize>,
    pub epsilon: f64,
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimResult {
    pub dim: usize,
    pub witness: DimWitness,
    /// The search stopped early; `dim` is a certified lower bound.
    pub budget_exceeded: bool,
    pub nodes: u64,
}

impl DimResult {
    fn zero() -> Self {
        DimResult { dim: 0, witness: DimWitness::default(), budget_exceeded: false, nodes: 0 }
    }
}

/// Functions and distributions over a common finite domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteDimQuery {
    pub functions: Vec<Vec<f64>>,
    pub distributions: Vec<Vec<f64>>,
    pub epsilon: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
}

impl FiniteDimQuery {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return invalid("epsilon must be positive");
        }
        let n = self.functions.first().or(self.distributions.first()).map_or(0, |v| v.len());
        if self.functions.iter().chain(&self.distributions).any(|v| v.len() != n) {
            return invalid("functions and distributions must share one domain");
        }
        for (k, mu) in self.distributions.iter().enumerate() {
            if mu.iter().any(|&p| !(p >= 0.0)) || (mu.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return invalid(format!("distribution {k} is not a probability vector"));
            }
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pairwise differences, deduplicated up to sign; zero vectors dropped.
fn pair_differences(functions: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<(usize, usize)>) {
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut diffs = Vec::new();
    let mut labels = Vec::new();
    for i in 0..functions.len() {
        for j in i + 1..functions.len() {
            let d: Vec<f64> = functions[i].iter().zip(&functions[j]).map(|(a, b)| a - b).collect();
            if d.iter().all(|x| x.abs() <= TOL) {
                continue;
            }
            // Canonical sign: first entry of meaningful size is positive.
            let lead = d.iter().find(|x| x.abs() > TOL).copied().unwrap_or(0.0);
            let key: Vec<u64> = d.iter().map(|x| if lead < 0.0 { (-x + 0.0).to_bits() } else { (x + 0.0).to_bits() }).collect();
            if seen.insert(key) {
                diffs.push(d);
                labels.push((i, j));
            }
        }
    }
    (diffs, labels)
}

/// Longest-sequence search over a value matrix `m[point][function]`.
struct Search<'a> {
    m: &'a [Vec<f64>],
    g: f64,
    budget: u64,
    nodes: u64,
    exceeded: bool,
    memo: HashSet<Vec<u64>>,
    best: Vec<(usize, usize)>,
    ceiling: usize,
}

const MEMO_CAP: usize = 4_000_000;

impl Search<'_> {
    fn strong(&self, p: usize, k: usize) -> bool {
        self.m[p][k].abs() >= self.g - TOL
    }

    fn dfs(&mut self, chosen: &mut Vec<u64>, sums: &[f64], path: &mut Vec<(usize, usize)>) {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exceeded = true;
            return;
        }
        if path.len() > self.best.len() {
            self.best = path.clone();
        }
        if self.memo.len() < MEMO_CAP && !self.memo.insert(chosen.clone()) {
            return;
        }
        let g2 = self.g * self.g;
        let alive: Vec<usize> = (0..sums.len()).filter(|&k| sums[k] < g2 - TOL).collect();
        let is_chosen = |p: usize, c: &Vec<u64>| c[p / 64] >> (p % 64) & 1 == 1;
        let mut moves = Vec::new();
        let mut live_functions = vec![false; sums.len()];
        for p in (0..self.m.len()).filter(|&p| !is_chosen(p, chosen)) {
            let mut witness = None;
            for &k in &alive {
                if self.strong(p, k) {
                    live_functions[k] = true;
                    witness.get_or_insert(k);
                }
            }
            if let Some(k) = witness {
                moves.push((p, k));
            }
        }
        let bound = path.len() + moves.len().min(live_functions.iter().filter(|&&x| x).count());
        if bound <= self.best.len() {
            return;
        }
        for (p, k) in moves {
            chosen[p / 64] |= 1 << (p % 64);
            let next: Vec<f64> = sums.iter().zip(&self.m[p]).map(|(s, v)| s + v * v).collect();
            path.push((p, k));
            self.dfs(chosen, &next, path);
            path.pop();
            chosen[p / 64] &= !(1 << (p % 64));
            if self.exceeded || self.best.len() >= self.ceiling {
                return;
            }
        }
    }
}

/// Longest independent sequence over points with values `m[point][function]`
/// (functions already differenced), maximized over scales `>= eps`.
fn longest_sequence(m: &[Vec<f64>], labels: &[(usize, usize)], eps: f64, opts: DimOptions) -> DimResult {
    let n_fun = labels.len();
    if m.is_empty() || n_fun == 0 {
        return DimResult::zero();
    }
    let mut gaps: Vec<f64> = m.iter().flatten().map(|v| v.abs()).filter(|&v| v > eps + TOL).collect();
    gaps.sort_by(|a, b| a.total_cmp(b));
    gaps.dedup_by(|a, b| (*a - *b).abs() <= TOL);
    let mut result = DimResult::zero();
    let mut nodes = 0;
    for &g in &gaps {
        let strong_points = m.iter().filter(|row| row.iter().any(|v| v.abs() >= g - TOL)).count();
        let strong_functions = (0..n_fun).filter(|&k| m.iter().any(|row| row[k].abs() >= g - TOL)).count();
        let ceiling = strong_points.min(strong_functions);
        if ceiling <= result.dim {
            // Ceilings only shrink as the gap grows.
            break;
        }
        let mut search = Search {
            m,
            g,
            budget: opts.budget.saturating_sub(nodes),
            nodes: 0,
            exceeded: false,
            memo: HashSet::new(),
            best: Vec::new(),
            ceiling,
        };
        let mut chosen = vec![0u64; m.len().div_ceil(64)];
        search.dfs(&mut chosen, &vec![0.0; n_fun], &mut Vec::new());
        nodes += search.nodes;
        if search.best.len() > result.dim {
            result.dim = search.best.len();
            result.witness = witness_at(m, labels, &search.best, g, eps);
        }
        if search.exceeded {
            result.budget_exceeded = true;
            break;
        }
    }
    result.nodes = nodes;
    result
}

/// Picks a concrete scale in `[eps, g)` at which the found sequence is independent.
fn witness_at(m: &[Vec<f64>], labels: &[(usize, usize)], path: &[(usize, usize)], g: f64, eps: f64) -> DimWitness {
    let mut largest: f64 = 0.0;
    let mut sums = vec![0.0; labels.len()];
    for &(p, k) in path {
        largest = largest.max(sums[k]);
        for (s, v) in sums.iter_mut().zip(&m[p]) {
            *s += v * v;
        }
    }
    let lo = largest.sqrt().max(eps);
    DimWitness {
        points: path.iter().map(|x| x.0).collect(),
        epsilon: if lo < g { 0.5 * (lo + g) } else { lo },
        pairs: path.iter().map(|x| labels[x.1]).collect(),
    }
}

fn transpose_values(points: usize, diffs: &[Vec<f64>], value: impl Fn(usize, &[f64]) -> f64) -> Vec<Vec<f64>> {
    (0..points).map(|p| diffs.iter().map(|d| value(p, d)).collect()).collect()
}

/// Eluder dimension of a class given as value vectors over a finite domain.
pub fn eluder_dim(class: &[Vec<f64>], eps: f64, opts: DimOptions) -> DimResult {
    let domain = class.first().map_or(0, |f| f.len());
    let (diffs, labels) = pair_differences(class);
    let m = transpose_values(domain, &diffs, |x, d| d[x]);
    longest_sequence(&m, &labels, eps, opts)
}

/// Distributional eluder dimension: points are the query's distributions and
/// gaps are expectations of pairwise differences.
pub fn dist_eluder_dim(query: &FiniteDimQuery, opts: DimOptions) -> Result<DimResult> {
    query.validate()?;
    let (diffs, labels) = pair_differences(&query.functions);
    // Identical distributions can never both appear in a sequence.
    let mut seen = HashSet::new();
    let keep: Vec<usize> = (0..query.distributions.len())
        .filter(|&k| seen.insert(query.distributions[k].iter().map(|x| (x + 0.0).to_bits()).collect::<Vec<_>>()))
        .collect();
    let m = transpose_values(keep.len(), &diffs, |p, d| dot(&query.distributions[keep[p]], d));
    let mut result = longest_sequence(&m, &labels, query.epsilon, opts);
    for p in &mut result.witness.points {
        *p = keep[*p];
    }
    Ok(result)
}

/// Re-verifies a witness from the raw points and class, trying every pair.
fn check_sequence(points: &[usize], value: impl Fn(usize, usize, usize) -> f64, n_fun: usize, scale: f64, eps: f64) -> bool {
    if points.is_empty() {
        return true;
    }
    if !(scale >= eps) {
        return false;
    }
    (0..points.len()).all(|j| {
        (0..n_fun).any(|a| {
            (0..n_fun).any(|b| {
                let sum: f64 = points[..j].iter().map(|&p| value(p, a, b).powi(2)).sum();
                sum <= scale * scale && value(points[j], a, b).abs() > scale
            })
        })
    })
}

pub fn check_eluder_witness(class: &[Vec<f64>], witness: &DimWitness, eps: f64) -> bool {
    check_sequence(&witness.points, |x, a, b| class[a][x] - class[b][x], class.len(), witness.epsilon, eps)
}

pub fn check_dist_witness(query: &FiniteDimQuery, witness: &DimWitness) -> bool {
    let mu = &query.distributions;
    let f = &query.functions;
    check_sequence(&witness.points, |p, a, b| dot(&mu[p], &f[a]) - dot(&mu[p], &f[b]), f.len(), witness.epsilon, query.epsilon)
}

/// Greedy policy of a Q tuple; ties go to the lowest action.
pub fn greedy_policy(class: &QClass, i: usize) -> HistoryPolicy {
    let shape = class.shape;
    HistoryPolicy::from_fn(shape, |h, code, s| {
        let mut best = (0, f64::NEG_INFINITY);
        for a in 0..shape.actions {
            let v = class.q[i][h - 1][shape.step(code, s, a)];
            if v > best.1 {
                best = (a, v);
            }
        }
        best.0
    })
}

/// `Q_h - T_h Q_{h+1}` under the true model, as `[tuple][h - 1][code]`.
pub fn bellman_errors(class: &QClass, spec: &PormdpSpec) -> Vec<Vec<Vec<f64>>> {
    let shape = class.shape;
    let truth = spec.composed_rewards();
    let trans = spec.transitions();
    (0..class.q.len())
        .map(|i| {
            (1..=shape.horizon)
                .map(|h| {
                    (0..shape.count(h))
                        .map(|code| {
                            let future = if h < shape.horizon {
                                let (s, a) = shape.last(code);
                                trans.row(s, a).iter().enumerate().map(|(s2, p)| p * class.next_max[i][h - 1][shape.node(code, s2)]).sum()
                            } else {
                                0.0
                            };
                            class.q[i][h - 1][code] - truth.at(h, code) - future
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Exact occupancy of each greedy policy under the true kernel, `[tuple][h - 1][code]`.
pub fn greedy_occupancies(class: &QClass, spec: &PormdpSpec) -> Vec<Vec<Vec<f64>>> {
    (0..class.q.len()).map(|i| occupancy(spec.transitions(), spec.initial_state(), &greedy_policy(class, i))).collect()
}

/// Per-step dimensions of a Bellman-error family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimsReport {
    pub per_h_dims: Vec<usize>,
    pub max: usize,
    pub witnesses: Vec<DimWitness>,
    pub budget_flag: bool,
    /// Tuples surviving the gate before each step.
    pub gated_sizes: Vec<usize>,
}

/// Per-step queries: Bellman errors of the tuples in `members[h - 1]` and the
/// occupancies those tuples induce.
pub fn bellman_queries(class: &QClass, spec: &PormdpSpec, alpha: Option<f64>, eps: f64) -> Vec<FiniteDimQuery> {
    let errors = bellman_errors(class, spec);
    let occ = greedy_occupancies(class, spec);
    let h_n = class.shape.horizon;
    let mut members: Vec<usize> = (0..class.q.len()).collect();
    let mut out = Vec::with_capacity(h_n);
    for h in 1..=h_n {
        out.push(FiniteDimQuery {
            functions: members.iter().map(|&i| errors[i][h - 1].clone()).collect(),
            distributions: members.iter().map(|&i| occ[i][h - 1].clone()).collect(),
            epsilon: eps,
            alpha,
        });
        if let Some(a) = alpha {
            members.retain(|&i| dot(&occ[i][h - 1], &errors[i][h - 1]).abs() <= a + TOL);
        }
    }
    out
}

fn report(queries: Vec<FiniteDimQuery>, opts: DimOptions) -> Result<DimsReport> {
    let gated_sizes = queries.iter().map(|q| q.functions.len()).collect();
    let results: Vec<DimResult> = queries.par_iter().map(|q| dist_eluder_dim(q, opts)).collect::<Result<_>>()?;
    Ok(DimsReport {
        per_h_dims: results.iter().map(|r| r.dim).collect(),
        max: results.iter().map(|r| r.dim).max().unwrap_or(0),
        witnesses: results.iter().map(|r| r.witness.clone()).collect(),
        budget_flag: results.iter().any(|r| r.budget_exceeded),
        gated_sizes,
    })
}

/// History-aware Bellman-eluder dimension: at step `h`, only tuples whose
/// expected Bellman errors at steps before `h` are within `alpha`.
pub fn habe_dim(class: &QClass, spec: &PormdpSpec, alpha: f64, eps: f64, opts: DimOptions) -> Result<DimsReport> {
    if !(alpha >= 0.0) {
        return invalid("alpha must be non-negative");
    }
    report(bellman_queries(class, spec, Some(alpha), eps), opts)
}

/// The same construction without the gate.
pub fn be_dim(class: &QClass, spec: &PormdpSpec, eps: f64, opts: DimOptions) -> Result<DimsReport> {
    report(bellman_queries(class, spec, None, eps), opts)
}

/// `min(alpha, sqrt(1 / T))`.
pub fn default_epsilon(alpha: f64, episodes: usize) -> f64 {
    alpha.min((1.0 / episodes.max(1) as f64).sqrt())
}

/// Eluder dimension of each step's reward class.
pub fn reward_class_dims(inst: &EnvInstance, eps: f64, opts: DimOptions) -> Vec<DimResult> {
    inst.classes.par_iter().map(|c| eluder_dim(c.candidates(), eps, opts)).collect()
}

/// Class of `(x, y) -> f(x) - f(y)` over the paired domain, indexed as `x * n + y`.
pub fn difference_class(class: &FiniteFunctionClass, cap: usize) -> Result<FiniteFunctionClass> {
    let n = class.domain();
    if n.checked_mul(n).is_none_or(|d| d > cap) {
        return invalid(format!("paired domain of {n}^2 points exceeds the cap of {cap}"));
    }
    let values = class
        .candidates()
        .iter()
        .map(|f| (0..n * n).map(|xy| f[xy / n] - f[xy % n]).collect())
        .collect();
    FiniteFunctionClass::new(values)
}

/// For the lock: point masses at every non-optimal combination, in order,
/// each independent through the Bellman error of the tuple that trusts it.
pub fn lock_indicator_witness(class: &QClass, spec: &PormdpSpec, eps: f64) -> (FiniteDimQuery, DimWitness) {
    let query = bellman_queries(class, spec, None, eps).pop().expect("horizon is positive");
    let (trans, s1, truth) = (spec.transitions(), spec.initial_state(), spec.composed_rewards());
    let v_star = crate::pormdp::optimal_policy(trans, s1, truth).1;
    let mut seen = HashSet::new();
    let mut points = Vec::new();
    for (i, mu) in query.distributions.iter().enumerate() {
        let value = crate::pormdp::policy_value(trans, s1, truth, &greedy_policy(class, i));
        if value < v_star - 1e-12 && seen.insert(mu.iter().map(|x| x.to_bits()).collect::<Vec<_>>()) {
            points.push(i);
        }
    }
    let pairs: Vec<(usize, usize)> = points.iter().map(|&i| (i, class.truth)).collect();
    let value = |p: usize, (a, b): (usize, usize)| dot(&query.distributions[p], &query.functions[a]) - dot(&query.distributions[p], &query.functions[b]);
    let gap = points.iter().zip(&pairs).map(|(&p, &ab)| value(p, ab).abs()).fold(f64::INFINITY, f64::min);
    let largest = (0..points.len())
        .map(|j| points[..j].iter().map(|&p| value(p, pairs[j]).powi(2)).sum::<f64>())
        .fold(0.0, f64::max);
    let lo = largest.sqrt().max(eps);
    let epsilon = if lo < gap { 0.5 * (lo + gap) } else { lo };
    (query, DimWitness { points, epsilon, pairs })
}
