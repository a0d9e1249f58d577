//! A process written as a JSON document: plan exactly, then simulate.

use porrl::pormdp::{optimal_policy, simulate_episode, PormdpSpec};

const SPEC: &str = r#"{
  "num_states": 2,
  "num_actions": 2,
  "horizon": 2,
  "feedback_steps": [2],
  "transitions": [[[0.9, 0.1], [0.2, 0.8]], [[0.5, 0.5], [0.0, 1.0]]],
  "initial_state": 0,
  "internal_states": 2,
  "decoder": [[0, 1, 0, 1, 1, 0, 1, 0, 0, 0, 1, 1, 1, 1, 0, 0]],
  "rewards": [[[[0.0, 1.0], [1.0, 0.0]], [[0.5, 0.5], [0.2, 0.9]]]],
  "reward_bound": 1.0,
  "activation": "identity",
  "feedback_noise": {"kind": "bernoulli"}
}"#;

fn main() -> porrl::Result<()> {
    let spec = PormdpSpec::from_json(SPEC)?;
    let (pi, v) = optimal_policy(spec.transitions(), spec.initial_state(), spec.composed_rewards());
    println!("optimal value {v:.4}, policy {}", pi.id());
    for seed in 0..3 {
        let t = simulate_episode(&spec, &pi, seed);
        println!("seed {seed}: states {:?} actions {:?} feedback {:?}", t.states, t.actions, t.feedback);
    }
    Ok(())
}
