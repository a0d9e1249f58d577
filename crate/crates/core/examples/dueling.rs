//! Preference feedback: candidate-set duels against the naive cardinal reduction.

use porrl::dueling::{run_dueling_with, DuelingAlgorithm, DuelingContext, DuelingParams};
use porrl::envs::{combination_lock, LockMode};

fn main() -> porrl::Result<()> {
    let inst = combination_lock(2, 2, 0.8, LockMode::Dense, None)?;
    let ctx = DuelingContext::new(&inst, 1 << 20)?;
    println!("{} policies, V* {:.2}, V_min {:.2}", ctx.policies.len(), ctx.v_star, ctx.v_min);
    let rounds = 2000;
    for algo in DuelingAlgorithm::ALL {
        let run = run_dueling_with(&ctx, algo, DuelingParams::default(), rounds, 3)?;
        let tail = &run.records[3 * rounds / 4..];
        let per_round = tail.iter().map(|r| r.duel_regret_inc).sum::<f64>() / tail.len() as f64;
        println!("{:<16} duel regret {:>8.2}  last-quarter per round {per_round:.3}", algo.name(), run.final_regret());
    }
    Ok(())
}
