//! A stochastic internal state is equivalent to its marginal reward: Monte-Carlo under w
//! against exact planning under g.

use porrl::envs::stochastic_internal_fixture;
use porrl::pormdp::{monte_carlo_value_w, optimal_policy, policy_value, HistoryPolicy};

fn main() -> porrl::Result<()> {
    let (spec, w) = stochastic_internal_fixture()?;
    let (pi_star, _) = optimal_policy(spec.transitions(), 0, spec.composed_rewards());
    let policies = [("optimal", pi_star), ("always 0", HistoryPolicy::open_loop(spec.shape(), &[0, 0, 0]))];
    for (name, pi) in &policies {
        let exact = policy_value(spec.transitions(), 0, spec.composed_rewards(), pi);
        let (mc, se) = monte_carlo_value_w(spec.transitions(), 0, &w, pi, 100_000, 1)?;
        println!("{name:<9} exact {exact:.4}  Monte-Carlo {mc:.4} ± {se:.4}  ({:.2} standard errors)", (mc - exact) / se);
    }
    Ok(())
}
