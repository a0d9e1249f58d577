//! Optimistic planning over L1 balls of transition rows.

use crate::pormdp::{backward_plan, HistoryPolicy, HistoryRewards, Shape, Transitions};

/// `max p . v` over distributions `p` with `||p - p_hat||_1 <= radius`.
///
/// Moves up to `radius / 2` mass onto the best next state and takes it from
/// the worst ones. Ties in `v` keep the lower index first.
pub fn optimistic_expectation(p_hat: &[f64], radius: f64, v: &[f64]) -> f64 {
    if radius <= 0.0 {
        return p_hat.iter().zip(v).map(|(p, x)| p * x).sum();
    }
    let n = p_hat.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| v[j].total_cmp(&v[i]));
    let mut p = p_hat.to_vec();
    let best = order[0];
    p[best] = (p_hat[best] + radius / 2.0).min(1.0);
    let mut excess = p.iter().sum::<f64>() - 1.0;
    for &j in order.iter().rev() {
        if excess <= 0.0 {
            break;
        }
        if j == best {
            continue;
        }
        let take = excess.min(p[j]);
        p[j] -= take;
        excess -= take;
    }
    p.iter().zip(v).map(|(p, x)| p * x).sum()
}

/// Extended value iteration with a caller-supplied row and radius per
/// `(h, node, a)`. Returns the greedy policy and the optimistic value.
pub fn extended_value_iteration_with<'a, F>(shape: Shape, initial_state: usize, rewards: &HistoryRewards, mut row: F) -> (HistoryPolicy, f64)
where
    F: FnMut(usize, usize, usize) -> (&'a [f64], f64),
{
    backward_plan(shape, initial_state, |h, node, a, child, next| {
        let future = if h == shape.horizon {
            0.0
        } else {
            let (p, radius) = row(h, node, a);
            optimistic_expectation(p, radius, next)
        };
        rewards.at(h, child) + future
    })
}

/// Extended value iteration with one radius per `(s, a)`, indexed `s * A + a`.
pub fn extended_value_iteration(
    p_hat: &Transitions,
    radii: &[f64],
    initial_state: usize,
    rewards: &HistoryRewards,
) -> (HistoryPolicy, f64) {
    let shape = rewards.shape();
    extended_value_iteration_with(shape, initial_state, rewards, |_, node, a| {
        let s = node % shape.states;
        (p_hat.row(s, a), radii[s * shape.actions + a])
    })
}
