//! Cumulative regret of the cardinal learners on the dense combination lock.

use porrl::cardinal::{run_cardinal, AlgoParams, Algorithm};
use porrl::envs::{combination_lock, LockMode};
use porrl::metrics::loglog_slope;

fn main() -> porrl::Result<()> {
    let inst = combination_lock(2, 3, 0.8, LockMode::Dense, None)?;
    let episodes = 2000;
    for algo in [Algorithm::PorUcrl, Algorithm::PorUcbvi, Algorithm::Golf, Algorithm::NaiveHistoryUcrl] {
        let run = run_cardinal(&inst, algo, AlgoParams::default(), episodes, 7)?;
        let slope = loglog_slope(&run.log.cumulative()).map_or("undefined".to_owned(), |s| format!("{s:.3}"));
        println!(
            "{:<20} V* {:.2}  regret {:>7.2}  log-log slope {slope}  distinct policies {}",
            algo.name(),
            run.log.v_star,
            run.log.final_regret(),
            run.policies.len()
        );
    }
    Ok(())
}
