use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use porrl::harness::{list_algorithms, run_experiment, summarize, ExperimentConfig, ExperimentOutput, Mode};
use porrl::Error;

/// Exact-planning lab for reinforcement learning with partially observed reward-states.
#[derive(Parser)]
#[command(name = "porrl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run only this seed instead of the configured list.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    /// Output directory, replacing the configured one.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a cardinal, dueling or dims experiment.
    Run { config: PathBuf },
    /// Aggregate the run CSVs in a directory into summary.json.
    Summarize { dir: PathBuf },
    /// Compute the dimension report of a dims-mode configuration.
    Dims { config: PathBuf },
    /// List environment constructors.
    ListEnvs,
    /// List learners and dimension measures by mode.
    ListAlgos,
}

/// Prints to stdout, ignoring a closed pipe.
macro_rules! emit {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

const CONFIG_ERROR: u8 = 2;
const RUNTIME_ERROR: u8 = 3;

fn load(cli: &Cli, path: &Path) -> Result<ExperimentConfig, Error> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed_override {
        config.seeds = vec![seed];
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn report(err: &Error) -> ExitCode {
    match err {
        Error::Config(issues) => {
            eprintln!("invalid configuration:");
            for i in issues {
                eprintln!("  {}: {}", i.field, i.message);
            }
        }
        other => eprintln!("error: {other}"),
    }
    ExitCode::from(if err.is_config() { CONFIG_ERROR } else { RUNTIME_ERROR })
}

fn execute(config: &ExperimentConfig) -> ExitCode {
    match run_experiment(config) {
        Ok(ExperimentOutput::Runs { manifest, path }) => {
            for r in &manifest.runs {
                match (&r.error, r.final_regret) {
                    (Some(e), _) => emit!("seed {}: failed: {e}", r.seed),
                    (None, Some(regret)) => emit!(
                        "seed {}: final regret {regret:.4}, slope {}",
                        r.seed,
                        r.slope.map_or("undefined".into(), |s| format!("{s:.3}"))
                    ),
                    (None, None) => {}
                }
            }
            emit!("manifest: {}", path.display());
            if manifest.failed() {
                ExitCode::from(RUNTIME_ERROR)
            } else {
                ExitCode::SUCCESS
            }
        }
        Ok(ExperimentOutput::Dims { report, path }) => {
            emit!("{}", serde_json::to_string_pretty(&report).expect("serializable report"));
            eprintln!("report: {}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => report(&e),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Run { config } => match load(&cli, config) {
            Ok(c) => execute(&c),
            Err(e) => report(&e),
        },
        Command::Dims { config } => match load(&cli, config) {
            Ok(c) if c.mode != Mode::Dims => {
                eprintln!("error: `dims` needs a configuration with \"mode\": \"dims\"");
                ExitCode::from(CONFIG_ERROR)
            }
            Ok(c) => execute(&c),
            Err(e) => report(&e),
        },
        Command::Summarize { dir } => match summarize(dir) {
            Ok(s) => {
                emit!("{}", serde_json::to_string_pretty(&s).expect("serializable summary"));
                ExitCode::SUCCESS
            }
            Err(e) => report(&e),
        },
        Command::ListEnvs => {
            for (name, about) in porrl::envs::list_envs() {
                emit!("{name:<22} {about}");
            }
            ExitCode::SUCCESS
        }
        Command::ListAlgos => {
            for (mode, name, about) in list_algorithms() {
                let mode = serde_json::to_value(mode).expect("mode").as_str().unwrap_or_default().to_owned();
                emit!("{mode:<9} {name:<20} {about}");
            }
            ExitCode::SUCCESS
        }
    }
}
