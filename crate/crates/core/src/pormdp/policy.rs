//! History-dependent policies.

use rand::Rng;
use sha2::{Digest, Sha256};

use super::history::Shape;
use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq)]
enum Table {
    /// `actions[h - 1][node]`.
    Deterministic(Vec<Vec<usize>>),
    /// `probs[h - 1][node * A + a]`.
    Stochastic(Vec<Vec<f64>>),
}

/// A policy that reads the whole history: `pi_h(a | tau[h-1], s_h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryPolicy {
    shape: Shape,
    table: Table,
}

impl HistoryPolicy {
    pub fn deterministic(shape: Shape, actions: Vec<Vec<usize>>) -> Result<Self> {
        if actions.len() != shape.horizon {
            return invalid("one action table per step is required");
        }
        for (i, level) in actions.iter().enumerate() {
            if level.len() != shape.nodes(i + 1) || level.iter().any(|&a| a >= shape.actions) {
                return invalid(format!("action table at step {} is malformed", i + 1));
            }
        }
        Ok(HistoryPolicy { shape, table: Table::Deterministic(actions) })
    }

    pub fn stochastic(shape: Shape, probs: Vec<Vec<f64>>) -> Result<Self> {
        if probs.len() != shape.horizon {
            return invalid("one probability table per step is required");
        }
        for (i, level) in probs.iter().enumerate() {
            if level.len() != shape.nodes(i + 1) * shape.actions {
                return invalid(format!("probability table at step {} has the wrong length", i + 1));
            }
            for row in level.chunks(shape.actions) {
                let sum: f64 = row.iter().sum();
                if row.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                    return invalid(format!("probability table at step {} has a row that is not a distribution", i + 1));
                }
            }
        }
        Ok(HistoryPolicy { shape, table: Table::Stochastic(probs) })
    }

    /// Deterministic policy from `choose(h, code, s)`, where `code` is the
    /// length `h - 1` history.
    pub fn from_fn(shape: Shape, mut choose: impl FnMut(usize, usize, usize) -> usize) -> Self {
        let actions = (1..=shape.horizon)
            .map(|h| (0..shape.nodes(h)).map(|n| choose(h, n / shape.states, n % shape.states)).collect())
            .collect();
        HistoryPolicy { shape, table: Table::Deterministic(actions) }
    }

    /// Time-dependent state-only policy, `table[h - 1][s]`.
    pub fn markovian(shape: Shape, table: &[Vec<usize>]) -> Self {
        Self::from_fn(shape, |h, _, s| table[h - 1][s])
    }

    /// Plays the same action sequence whatever is observed.
    pub fn open_loop(shape: Shape, actions: &[usize]) -> Self {
        Self::from_fn(shape, |h, _, _| actions[h - 1])
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self.table, Table::Deterministic(_))
    }

    /// Action at a decision node, for deterministic policies.
    pub fn action(&self, h: usize, node: usize) -> Option<usize> {
        match &self.table {
            Table::Deterministic(t) => Some(t[h - 1][node]),
            Table::Stochastic(_) => None,
        }
    }

    pub fn prob(&self, h: usize, node: usize, a: usize) -> f64 {
        match &self.table {
            Table::Deterministic(t) => f64::from(u8::from(t[h - 1][node] == a)),
            Table::Stochastic(t) => t[h - 1][node * self.shape.actions + a],
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, h: usize, node: usize, rng: &mut R) -> usize {
        match &self.table {
            Table::Deterministic(t) => t[h - 1][node],
            Table::Stochastic(t) => {
                let a_n = self.shape.actions;
                let row = &t[h - 1][node * a_n..(node + 1) * a_n];
                let mut u: f64 = rng.random();
                for (a, p) in row.iter().enumerate() {
                    if u < *p {
                        return a;
                    }
                    u -= p;
                }
                row.iter().rposition(|p| *p > 0.0).unwrap_or(a_n - 1)
            }
        }
    }

    /// Representative of the behaviour class: actions at nodes the policy
    /// itself can never reach from `initial_state` are reset to 0.
    ///
    /// Reachability assumes any state may follow any action, so two policies
    /// with equal canonical forms act identically under every transition kernel.
    pub fn canonical(&self, initial_state: usize) -> HistoryPolicy {
        let Table::Deterministic(t) = &self.table else {
            return self.clone();
        };
        let shape = self.shape;
        let mut out = Vec::with_capacity(shape.horizon);
        let mut reachable: Vec<bool> = (0..shape.states).map(|s| s == initial_state).collect();
        for h in 1..=shape.horizon {
            let level: Vec<usize> = t[h - 1].iter().zip(&reachable).map(|(&a, &r)| if r { a } else { 0 }).collect();
            if h < shape.horizon {
                let mut next = vec![false; shape.nodes(h + 1)];
                for (node, &r) in reachable.iter().enumerate() {
                    if r {
                        let (code, s) = (node / shape.states, node % shape.states);
                        let child = shape.step(code, s, level[node]);
                        for s2 in 0..shape.states {
                            next[shape.node(child, s2)] = true;
                        }
                    }
                }
                reachable = next;
            }
            out.push(level);
        }
        HistoryPolicy { shape, table: Table::Deterministic(out) }
    }

    /// Stable short identifier of the exact table.
    pub fn id(&self) -> String {
        let mut hasher = Sha256::new();
        match &self.table {
            Table::Deterministic(t) => {
                hasher.update(b"d");
                for level in t {
                    for &a in level {
                        hasher.update((a as u32).to_le_bytes());
                    }
                }
            }
            Table::Stochastic(t) => {
                hasher.update(b"s");
                for level in t {
                    for p in level {
                        hasher.update(p.to_bits().to_le_bytes());
                    }
                }
            }
        }
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Every deterministic policy up to behavioural equivalence, in canonical form.
///
/// Policies are listed in lexicographic order of their reachable-node actions.
pub fn enumerate_policies(shape: Shape, initial_state: usize, limit: usize) -> Result<Vec<HistoryPolicy>> {
    // Reachable nodes form a tree: one node at step 1, then S per chosen action.
    let reachable: usize = (0..shape.horizon).map(|h| shape.states.pow(h as u32)).sum();
    let total = (shape.actions as f64).powi(reachable as i32);
    if total > limit as f64 {
        return invalid(format!("{total} policies exceed the enumeration limit {limit}"));
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut choice = vec![0usize; reachable];
    loop {
        out.push(policy_from_choices(shape, initial_state, &choice));
        let mut i = reachable;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            choice[i] += 1;
            if choice[i] < shape.actions {
                break;
            }
            choice[i] = 0;
        }
    }
}

fn policy_from_choices(shape: Shape, initial_state: usize, choice: &[usize]) -> HistoryPolicy {
    let mut actions: Vec<Vec<usize>> = (1..=shape.horizon).map(|h| vec![0; shape.nodes(h)]).collect();
    let mut frontier = vec![shape.node(0, initial_state)];
    let mut next_choice = 0;
    for h in 1..=shape.horizon {
        let mut next = Vec::new();
        for &node in &frontier {
            let a = choice[next_choice];
            next_choice += 1;
            actions[h - 1][node] = a;
            let child = shape.step(node / shape.states, node % shape.states, a);
            next.extend((0..shape.states).map(|s| shape.node(child, s)));
        }
        frontier = next;
    }
    HistoryPolicy { shape, table: Table::Deterministic(actions) }
}
