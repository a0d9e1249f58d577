//! Bellman-eluder dimensions of the combination lock, with and without the history gate.

use porrl::cardinal::build_q_class;
use porrl::dims::{be_dim, habe_dim, reward_class_dims, DimOptions};
use porrl::envs::{combination_lock, LockMode};

fn main() -> porrl::Result<()> {
    let opts = DimOptions::default();
    let eps = 0.01;
    for actions in [2, 3] {
        let inst = combination_lock(actions, 3, 0.8, LockMode::Dense, None)?;
        let class = build_q_class(&inst);
        let habe = habe_dim(&class, &inst.spec, 0.5, eps, opts)?;
        let be = be_dim(&class, &inst.spec, eps, opts)?;
        let eluder: Vec<usize> = reward_class_dims(&inst, eps, opts).iter().map(|r| r.dim).collect();
        println!("A={actions} H=3: HABE per step {:?}, BE per step {:?}, eluder of reward classes {eluder:?}", habe.per_h_dims, be.per_h_dims);
    }
    Ok(())
}
