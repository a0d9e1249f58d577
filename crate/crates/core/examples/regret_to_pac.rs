//! Turning a regret run into a single policy: draw one played policy uniformly.

use porrl::cardinal::{pac_bound, regret_to_pac, run_cardinal, AlgoParams, Algorithm};
use porrl::envs::{combination_lock, LockMode};

fn main() -> porrl::Result<()> {
    let inst = combination_lock(2, 3, 0.8, LockMode::Dense, None)?;
    let episodes = 1000;
    // Full-width confidence sets; at the default scale a seed can lock out the truth.
    let params = AlgoParams { bonus_scale: 1.0, ..AlgoParams::default() };
    let run = run_cardinal(&inst, Algorithm::PorUcrl, params, episodes, 0)?;
    let regret = run.log.final_regret();
    let bound = pac_bound(regret, episodes, inst.spec.return_bound(), 0.1);
    let gaps: Vec<f64> = (0..200).map(|s| regret_to_pac(&run, &inst.spec, s).map(|x| x.1)).collect::<porrl::Result<_>>()?;
    let within = gaps.iter().filter(|&&g| g <= bound).count();
    println!("R(T)/T {:.4}, bound {bound:.4}, {within}/200 draws within the bound", regret / episodes as f64);
    Ok(())
}
