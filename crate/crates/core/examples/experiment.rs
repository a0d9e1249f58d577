//! The configuration-driven harness: run seeds, write CSVs and a manifest, then summarize.

use porrl::harness::{run_experiment, summarize, ExperimentConfig, ExperimentOutput};
use serde_json::json;

fn main() -> porrl::Result<()> {
    let dir = std::env::temp_dir().join("porrl_example_experiment");
    let config = ExperimentConfig::from_value(json!({
        "mode": "cardinal",
        "env": {"name": "combination_lock", "params": {"actions": 2, "horizon": 3, "q": 0.8, "mode": "dense"}},
        "algorithm": {"name": "por_ucbvi", "params": {"bonus_scale": 0.1}},
        "episodes": 500,
        "seeds": [0, 1, 2, 3],
        "output_dir": dir,
    }))?;
    if let ExperimentOutput::Runs { manifest, path } = run_experiment(&config)? {
        println!("wrote {} ({} runs, mean final regret {:.2})", path.display(), manifest.runs.len(), manifest.summary.final_regret_mean.unwrap_or(0.0));
    }
    let summary = summarize(&dir)?;
    println!("{}", serde_json::to_string_pretty(&summary).expect("serializable"));
    Ok(())
}
