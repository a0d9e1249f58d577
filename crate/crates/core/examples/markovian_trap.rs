//! Memory matters: the best state-only policy on the trap earns 0.75, a history policy earns 1.

use porrl::cardinal::{run_cardinal, AlgoParams, Algorithm};
use porrl::envs::trap_instance;
use porrl::pormdp::{optimal_policy, policy_value, HistoryPolicy};

fn main() -> porrl::Result<()> {
    let h = 4;
    let inst = trap_instance(h)?;
    let (trans, f) = (inst.spec.transitions(), inst.spec.composed_rewards());
    let (_, v_star) = optimal_policy(trans, 0, f);
    // A Markovian policy is one action per (step, state): 2^(2H) of them.
    let best_markovian = (0..1usize << (2 * h))
        .map(|bits| {
            let table: Vec<Vec<usize>> = (0..h).map(|k| (0..2).map(|s| bits >> (2 * k + s) & 1).collect()).collect();
            policy_value(trans, 0, f, &HistoryPolicy::markovian(inst.shape(), &table))
        })
        .fold(f64::NEG_INFINITY, f64::max);
    println!("history-dependent optimum {v_star:.3}, best Markovian {best_markovian:.3}");
    let episodes = 1000;
    for algo in [Algorithm::MarkovianUcbvi, Algorithm::PorUcrl] {
        let run = run_cardinal(&inst, algo, AlgoParams::default(), episodes, 0)?;
        println!("{:<16} regret after {episodes} episodes: {:.1}", algo.name(), run.log.final_regret());
    }
    Ok(())
}
