//! Seeded experiment runs, their CSV and JSON outputs, and summaries of
//! finished run directories.

pub mod config;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use config::{AlgorithmConfig, DimsMeasure, DimsParams, ExperimentConfig, Mode};

use crate::cardinal::{build_q_class, run_cardinal, RegretLog};
use crate::dims::{be_dim, default_epsilon, habe_dim, reward_class_dims, DimOptions, DimWitness};
use crate::dueling::{run_dueling_with, DuelRecord, DuelingContext};
use crate::envs::EnvInstance;
use crate::error::{invalid, Error, Result};
use crate::metrics::{loglog_slope, mean, stderr};
use crate::pormdp::optimal_policy;

pub const CARDINAL_HEADER: [&str; 8] =
    ["episode", "policy_id", "value", "regret_inc", "cum_regret", "optimistic_value", "truth_in_cf", "truth_in_cp"];
pub const DUELING_HEADER: [&str; 7] =
    ["round", "pi1_id", "pi2_id", "duel_regret_inc", "cum_duel_regret", "candidate_count", "opt_in_candidates"];

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn cardinal_csv(log: &RegretLog) -> String {
    let mut out = CARDINAL_HEADER.join(",");
    out.push('\n');
    for r in &log.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.episode,
            r.policy_id,
            format_float(r.value),
            format_float(r.regret_inc),
            format_float(r.cum_regret),
            format_float(r.optimistic_value),
            r.truth_in_cf,
            r.truth_in_cp
        );
    }
    out
}

pub fn dueling_csv(records: &[DuelRecord]) -> String {
    let mut out = DUELING_HEADER.join(",");
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.round,
            r.pi1_id,
            r.pi2_id,
            format_float(r.duel_regret_inc),
            format_float(r.cum_duel_regret),
            r.candidate_count,
            r.opt_in_candidates
        );
    }
    out
}

/// Outcome of one seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub csv: Option<String>,
    pub final_regret: Option<f64>,
    pub slope: Option<f64>,
    /// Truth (or an optimal policy, when dueling) stayed covered in every round.
    pub covered: Option<bool>,
    pub error: Option<String>,
}

/// Mean and standard error across seeds; slopes only over seeds where defined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub failed: usize,
    pub final_regret_mean: Option<f64>,
    pub final_regret_stderr: Option<f64>,
    pub slope_mean: Option<f64>,
    pub slope_stderr: Option<f64>,
    pub slopes_undefined: usize,
    pub coverage_fraction: Option<f64>,
}

fn aggregate(finals: &[f64], slopes: &[Option<f64>], covered: &[bool], failed: usize) -> Aggregate {
    let defined: Vec<f64> = slopes.iter().flatten().copied().collect();
    let some = |xs: &[f64], f: fn(&[f64]) -> f64| (!xs.is_empty()).then(|| f(xs));
    Aggregate {
        runs: finals.len(),
        failed,
        final_regret_mean: some(finals, mean),
        final_regret_stderr: some(finals, stderr),
        slope_mean: some(&defined, mean),
        slope_stderr: some(&defined, stderr),
        slopes_undefined: slopes.len() - defined.len(),
        coverage_fraction: (!covered.is_empty()).then(|| covered.iter().filter(|&&c| c).count() as f64 / covered.len() as f64),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: Value,
    pub mode: Mode,
    pub env: String,
    pub algorithm: String,
    pub episodes: usize,
    pub v_star: f64,
    /// Smallest policy value; dueling runs only.
    pub v_min: Option<f64>,
    pub wall_time_secs: f64,
    pub runs: Vec<RunSummary>,
    pub summary: Aggregate,
}

impl Manifest {
    pub fn failed(&self) -> bool {
        self.runs.iter().any(|r| r.error.is_some())
    }
}

/// JSON report of a dimension computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimsOutput {
    pub measure: DimsMeasure,
    pub env: String,
    pub alpha: f64,
    pub epsilon: f64,
    pub per_h_dims: Vec<usize>,
    pub max: usize,
    pub witnesses: Vec<DimWitness>,
    pub budget_flag: bool,
    pub wall_time_secs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExperimentOutput {
    Runs { manifest: Manifest, path: PathBuf },
    Dims { report: DimsOutput, path: PathBuf },
}

fn csv_name(algo: &str, seed: u64) -> String {
    format!("{algo}_seed{seed}.csv")
}

/// Runs every seed of the configuration and writes its outputs.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let start = Instant::now();
    let inst = config.build_env()?;
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir)?;
    let algo_name = config.algorithm.name();
    let (v_star, v_min, runs) = match &config.algorithm {
        AlgorithmConfig::Cardinal(algo, params) => {
            let spec = &inst.spec;
            let v_star = optimal_policy(spec.transitions(), spec.initial_state(), spec.composed_rewards()).1;
            let runs = config
                .seeds
                .par_iter()
                .map(|&seed| {
                    isolate(seed, || {
                        let run = run_cardinal(&inst, *algo, *params, config.episodes, seed)?;
                        let name = csv_name(algo_name, seed);
                        write_atomic(&dir.join(&name), cardinal_csv(&run.log).as_bytes())?;
                        Ok(RunSummary {
                            seed,
                            csv: Some(name),
                            final_regret: Some(run.log.final_regret()),
                            slope: loglog_slope(&run.log.cumulative()),
                            covered: Some(run.log.always_covered()),
                            error: None,
                        })
                    })
                })
                .collect::<Vec<_>>();
            (v_star, None, runs)
        }
        AlgorithmConfig::Dueling(algo, params) => {
            let ctx = DuelingContext::new(&inst, params.enumeration_limit)?;
            let runs = config
                .seeds
                .par_iter()
                .map(|&seed| {
                    isolate(seed, || {
                        let run = run_dueling_with(&ctx, *algo, *params, config.episodes, seed)?;
                        let name = csv_name(algo_name, seed);
                        write_atomic(&dir.join(&name), dueling_csv(&run.records).as_bytes())?;
                        Ok(RunSummary {
                            seed,
                            csv: Some(name),
                            final_regret: Some(run.final_regret()),
                            slope: loglog_slope(&run.cumulative()),
                            covered: Some(run.records.iter().all(|r| r.opt_in_candidates)),
                            error: None,
                        })
                    })
                })
                .collect::<Vec<_>>();
            (ctx.v_star, Some(ctx.v_min), runs)
        }
        AlgorithmConfig::Dims(measure, params) => {
            let report = compute_dims(&inst, *measure, *params, config.episodes)?;
            let report = DimsOutput { wall_time_secs: start.elapsed().as_secs_f64(), ..report };
            let path = dir.join(format!("{}_dims.json", measure.name()));
            write_json(&path, &report)?;
            return Ok(ExperimentOutput::Dims { report, path });
        }
    };
    let ok: Vec<&RunSummary> = runs.iter().filter(|r| r.error.is_none()).collect();
    let finals: Vec<f64> = ok.iter().filter_map(|r| r.final_regret).collect();
    let slopes: Vec<Option<f64>> = ok.iter().map(|r| r.slope).collect();
    let covered: Vec<bool> = ok.iter().filter_map(|r| r.covered).collect();
    let summary = aggregate(&finals, &slopes, &covered, runs.len() - ok.len());
    let manifest = Manifest {
        config: config.raw.clone(),
        mode: config.mode,
        env: inst.name.clone(),
        algorithm: algo_name.into(),
        episodes: config.episodes,
        v_star,
        v_min,
        wall_time_secs: start.elapsed().as_secs_f64(),
        runs,
        summary,
    };
    let path = dir.join(format!("{algo_name}_manifest.json"));
    write_json(&path, &manifest)?;
    Ok(ExperimentOutput::Runs { manifest, path })
}

/// A failing seed is recorded in its summary instead of aborting the others.
fn isolate(seed: u64, f: impl FnOnce() -> Result<RunSummary>) -> RunSummary {
    f().unwrap_or_else(|e| {
        log::error!("seed {seed} failed: {e}");
        RunSummary { seed, csv: None, final_regret: None, slope: None, covered: None, error: Some(e.to_string()) }
    })
}

pub fn compute_dims(inst: &EnvInstance, measure: DimsMeasure, params: DimsParams, episodes: usize) -> Result<DimsOutput> {
    let eps = params.epsilon.unwrap_or_else(|| default_epsilon(params.alpha, episodes));
    if !(eps > 0.0) {
        return invalid("the dimension scale must be positive; set epsilon or a positive alpha");
    }
    let opts = DimOptions { budget: params.budget };
    let (per_h_dims, witnesses, budget_flag) = match measure {
        DimsMeasure::Eluder => {
            let rs = reward_class_dims(inst, eps, opts);
            (rs.iter().map(|r| r.dim).collect(), rs.iter().map(|r| r.witness.clone()).collect(), rs.iter().any(|r| r.budget_exceeded))
        }
        DimsMeasure::Habe | DimsMeasure::Be => {
            let class = build_q_class(inst);
            let r = if measure == DimsMeasure::Habe {
                habe_dim(&class, &inst.spec, params.alpha, eps, opts)?
            } else {
                be_dim(&class, &inst.spec, eps, opts)?
            };
            (r.per_h_dims, r.witnesses, r.budget_flag)
        }
    };
    Ok(DimsOutput {
        measure,
        env: inst.name.clone(),
        alpha: params.alpha,
        epsilon: eps,
        max: per_h_dims.iter().copied().max().unwrap_or(0),
        per_h_dims,
        witnesses,
        budget_flag,
        wall_time_secs: 0.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogKind {
    Cardinal,
    Dueling,
}

/// One parsed run log.
#[derive(Clone, Debug, PartialEq)]
pub struct RunLog {
    pub kind: LogKind,
    pub increments: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub covered: bool,
}

pub fn read_run_csv(path: &Path) -> Result<RunLog> {
    let bad = |msg: String| Error::InvalidArgument(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let (kind, inc, cum, flags): (_, usize, usize, Vec<usize>) = if header == CARDINAL_HEADER {
        (LogKind::Cardinal, 3, 4, vec![6, 7])
    } else if header == DUELING_HEADER {
        (LogKind::Dueling, 3, 4, vec![6])
    } else {
        return Err(bad(format!("unrecognized columns {}", header.join(","))));
    };
    let mut log = RunLog { kind, increments: Vec::new(), cumulative: Vec::new(), covered: true };
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let num = |i: usize| record[i].parse::<f64>().map_err(|e| bad(format!("row {}: column {}: {e}", line + 1, header[i])));
        log.increments.push(num(inc)?);
        log.cumulative.push(num(cum)?);
        for &i in &flags {
            match &record[i] {
                "true" => {}
                "false" => log.covered = false,
                other => return Err(bad(format!("row {}: column {}: expected a boolean, got `{other}`", line + 1, header[i]))),
            }
        }
    }
    Ok(log)
}

/// Per-algorithm statistics of a run directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgoSummary {
    pub kind: LogKind,
    pub seeds: Vec<String>,
    pub episodes: usize,
    pub stats: Aggregate,
    /// Expected gap of a policy drawn uniformly from the played ones, `R(T) / T`.
    pub pac_gap_mean: Option<f64>,
    pub pac_gap_stderr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub algorithms: BTreeMap<String, AlgoSummary>,
}

/// Aggregates every `{algo}_seed{seed}.csv` in `dir` and writes `summary.json` there.
pub fn summarize(dir: &Path) -> Result<Summary> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return invalid(format!("no run CSVs in {}", dir.display()));
    }
    let mut groups: BTreeMap<String, Vec<(String, RunLog)>> = BTreeMap::new();
    for path in &files {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let (algo, seed) = stem.rsplit_once("_seed").unwrap_or((stem, ""));
        groups.entry(algo.to_owned()).or_default().push((seed.to_owned(), read_run_csv(path)?));
    }
    let mut algorithms = BTreeMap::new();
    for (algo, logs) in groups {
        let kind = logs[0].1.kind;
        if logs.iter().any(|(_, l)| l.kind != kind) {
            return invalid(format!("{algo}: mixed cardinal and dueling logs"));
        }
        let finals: Vec<f64> = logs.iter().map(|(_, l)| l.cumulative.last().copied().unwrap_or(0.0)).collect();
        let slopes: Vec<Option<f64>> = logs.iter().map(|(_, l)| loglog_slope(&l.cumulative)).collect();
        let covered: Vec<bool> = logs.iter().map(|(_, l)| l.covered).collect();
        let gaps: Vec<f64> = logs
            .iter()
            .filter(|(_, l)| !l.increments.is_empty())
            .map(|(_, l)| l.increments.iter().sum::<f64>() / l.increments.len() as f64)
            .collect();
        let cardinal = kind == LogKind::Cardinal && !gaps.is_empty();
        algorithms.insert(
            algo,
            AlgoSummary {
                kind,
                seeds: logs.iter().map(|(s, _)| s.clone()).collect(),
                episodes: logs.iter().map(|(_, l)| l.cumulative.len()).max().unwrap_or(0),
                stats: aggregate(&finals, &slopes, &covered, 0),
                pac_gap_mean: cardinal.then(|| mean(&gaps)),
                pac_gap_stderr: cardinal.then(|| stderr(&gaps)),
            },
        );
    }
    let summary = Summary { algorithms };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Registered learners and measures by mode, with descriptions.
pub fn list_algorithms() -> Vec<(Mode, &'static str, &'static str)> {
    let mut out: Vec<_> = crate::cardinal::Algorithm::ALL.iter().map(|a| (Mode::Cardinal, a.name(), a.description())).collect();
    out.extend(crate::dueling::DuelingAlgorithm::ALL.iter().map(|a| (Mode::Dueling, a.name(), a.description())));
    out.extend(DimsMeasure::ALL.iter().map(|m| (Mode::Dims, m.name(), m.description())));
    out
}
