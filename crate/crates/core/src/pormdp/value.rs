//! Exact evaluation and planning over the history tree.

use super::history::Shape;
use super::policy::HistoryPolicy;
use super::spec::{HistoryRewards, Transitions};

/// `d_h(tau[h])` for every step: the probability of each length `h` history.
pub fn occupancy(trans: &Transitions, initial_state: usize, policy: &HistoryPolicy) -> Vec<Vec<f64>> {
    let shape = policy.shape();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(shape.horizon);
    // Probability of reaching each decision node at the current step.
    let mut at_node = vec![0.0; shape.nodes(1)];
    at_node[initial_state] = 1.0;
    for h in 1..=shape.horizon {
        let mut d = vec![0.0; shape.count(h)];
        for (node, &p) in at_node.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let (code, s) = (node / shape.states, node % shape.states);
            for a in 0..shape.actions {
                let q = policy.prob(h, node, a);
                if q > 0.0 {
                    d[shape.step(code, s, a)] += p * q;
                }
            }
        }
        if h < shape.horizon {
            at_node = vec![0.0; shape.nodes(h + 1)];
            for (child, &p) in d.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let (s, a) = shape.last(child);
                for (s2, &q) in trans.row(s, a).iter().enumerate() {
                    at_node[shape.node(child, s2)] += p * q;
                }
            }
        }
        out.push(d);
    }
    out
}

/// `V(P, f, pi) = sum over feedback steps of E[f_h(tau[h])]`.
pub fn policy_value(trans: &Transitions, initial_state: usize, rewards: &HistoryRewards, policy: &HistoryPolicy) -> f64 {
    let d = occupancy(trans, initial_state, policy);
    value_from_occupancy(&d, rewards)
}

pub fn value_from_occupancy(d: &[Vec<f64>], rewards: &HistoryRewards) -> f64 {
    rewards
        .feedback_steps()
        .into_iter()
        .map(|h| d[h - 1].iter().zip(rewards.get(h).unwrap()).map(|(p, f)| p * f).sum::<f64>())
        .sum()
}

/// Backward induction with a caller-supplied action value.
///
/// `q(h, node, a, child, next)` receives the decision node, the history code
/// after playing `a`, and the values of the step `h + 1` decision nodes under
/// `child` (all zero at the last step). Ties go to the lowest action.
pub fn backward_plan<F>(shape: Shape, initial_state: usize, mut q: F) -> (HistoryPolicy, f64)
where
    F: FnMut(usize, usize, usize, usize, &[f64]) -> f64,
{
    let zeros = vec![0.0; shape.states];
    let mut actions: Vec<Vec<usize>> = vec![Vec::new(); shape.horizon];
    let mut next: Vec<f64> = Vec::new();
    for h in (1..=shape.horizon).rev() {
        let n = shape.nodes(h);
        let mut values = vec![0.0; n];
        let mut chosen = vec![0usize; n];
        for node in 0..n {
            let (code, s) = (node / shape.states, node % shape.states);
            let mut best = f64::NEG_INFINITY;
            for a in 0..shape.actions {
                let child = shape.step(code, s, a);
                let slice = if h == shape.horizon { &zeros[..] } else { &next[child * shape.states..(child + 1) * shape.states] };
                let v = q(h, node, a, child, slice);
                if v > best {
                    best = v;
                    chosen[node] = a;
                }
            }
            values[node] = best;
        }
        actions[h - 1] = chosen;
        next = values;
    }
    let policy = HistoryPolicy::deterministic(shape, actions).expect("planner builds valid tables");
    (policy, next[initial_state])
}

/// Deterministic history policy maximizing `V(P, f, .)` and its value.
pub fn optimal_policy(trans: &Transitions, initial_state: usize, rewards: &HistoryRewards) -> (HistoryPolicy, f64) {
    let shape = rewards.shape();
    backward_plan(shape, initial_state, |h, node, a, child, next| {
        let s = node % shape.states;
        let future: f64 = trans.row(s, a).iter().zip(next).map(|(p, v)| p * v).sum();
        rewards.at(h, child) + future
    })
}

/// Deterministic history policy minimizing `V(P, f, .)` and its value.
pub fn minimizing_policy(trans: &Transitions, initial_state: usize, rewards: &HistoryRewards) -> (HistoryPolicy, f64) {
    let (policy, v) = optimal_policy(trans, initial_state, &rewards.negated());
    (policy, -v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pormdp::policy::enumerate_policies;

    fn random_instance(seed: u64) -> (Transitions, HistoryRewards) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let shape = Shape::new(2, 2, 3);
        let probs: Vec<f64> = (0..4)
            .flat_map(|_| {
                let x: f64 = rng.random();
                [x, 1.0 - x]
            })
            .collect();
        let trans = Transitions::from_flat(2, 2, probs).unwrap();
        let mut rewards = HistoryRewards::zeros(shape, &[1, 3]);
        for h in [1, 3] {
            for x in rewards.get_mut(h).unwrap() {
                *x = rng.random();
            }
        }
        (trans, rewards)
    }

    #[test]
    fn planner_matches_brute_force_over_all_policies() {
        for seed in 0..5 {
            let (trans, rewards) = random_instance(seed);
            let shape = rewards.shape();
            let (pi, v) = optimal_policy(&trans, 0, &rewards);
            let brute = enumerate_policies(shape, 0, 1 << 12)
                .unwrap()
                .iter()
                .map(|p| policy_value(&trans, 0, &rewards, p))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((v - brute).abs() < 1e-12);
            assert!((policy_value(&trans, 0, &rewards, &pi) - v).abs() < 1e-12);
            let (_, vmin) = minimizing_policy(&trans, 0, &rewards);
            assert!(vmin <= v);
        }
    }

    #[test]
    fn occupancy_sums_to_one() {
        let (trans, _) = random_instance(9);
        let shape = Shape::new(2, 2, 3);
        let pi = HistoryPolicy::from_fn(shape, |h, code, s| (h + code + s) % 2);
        for d in occupancy(&trans, 1, &pi) {
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
