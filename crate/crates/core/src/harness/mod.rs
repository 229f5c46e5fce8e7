//! Experiment orchestration: configuration, episode runs against sampled
//! types, metrics and CSV output.
//!
//! Every operation writes `{method}_{env}_{kind}.csv` files plus a JSON run
//! manifest into the configured output directory. CSV rows start with the
//! run seed and config hash. Column order:
//!
//! - `episodes`: seed, config_hash, episode, episode_seed, true_joint, steps,
//!   planner_return, planner_undiscounted, returns, undiscounted,
//!   trees_built, meta_queries, depleted_at
//! - `steps`: seed, config_hash, episode, t, action, reward, prob_true_type,
//!   action_dist_distance, max_depth, simulations, generative_steps,
//!   meta_queries, particles, root_visits
//! - `summary`: see [`Summary`]
//! - `belief`: seed, config_hash, t, n, prob_true_type, prob_ci95,
//!   action_dist_distance, distance_ci95
//! - `oracle`: see [`OracleRow`]

mod config;
mod evaluate;
mod oracle_check;
mod report;
mod setup;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{Baseline, EnvConfig, OracleCheckConfig, RunConfig, SearchPolicy};
pub use evaluate::{episode_seed, run_episode, run_episodes, EpisodeRecord, StepRecord};
pub use oracle_check::{oracle_check, BudgetSummary, OracleReport, OracleRow, REQUIRED_AGREEMENT};
pub use report::{
    belief_rows, mean_ci, quartile_comparison, summarise, write_csv, BeliefRow, MeanCi, QuartileComparison, Summary, Z95,
};
pub use setup::{build_problem, AnyProblem, Problem};

use crate::error::{Error, Result};
use crate::metagame::{make_meta_policy, PayoffTable};
use crate::posg::Posg;
use crate::with_problem;

use report::{ensure_dir, output_path, write_episodes, write_manifest, write_steps, RunManifest};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Result of an evaluation: the records plus the files written.
#[derive(Debug)]
pub struct Evaluation {
    pub summary: Summary,
    pub records: Vec<EpisodeRecord>,
    pub files: Vec<PathBuf>,
}

fn names(files: &[PathBuf]) -> Vec<String> {
    files
        .iter()
        .map(|f| f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default())
        .collect()
}

fn finish(dir: &Path, command: &str, config: &RunConfig, started: Instant, mut files: Vec<PathBuf>, kind: &str) -> Result<Vec<PathBuf>> {
    let hash = config.hash();
    let path = output_path(dir, &config.method(), &config.env.id(), kind, "json");
    let manifest = RunManifest {
        command,
        version: VERSION,
        config_hash: &hash,
        config,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        files: names(&files),
    };
    write_manifest(&path, &manifest)?;
    files.push(path);
    Ok(files)
}

/// Evaluate on an already built problem (lets callers share one problem
/// between methods).
pub fn evaluate_problem<E: Posg + 'static>(problem: &Problem<E>, config: &RunConfig) -> Result<Evaluation> {
    config.validate()?;
    let started = Instant::now();
    let records = run_episodes(problem, config)?;
    let (method, env, hash) = (config.method(), config.env.id(), config.hash());
    let planner = problem.set.planner().0;
    let summary = summarise(&records, planner, config.seed, &hash, &method, &env);
    let dir = &config.output_dir;
    ensure_dir(dir)?;
    let files = vec![
        output_path(dir, &method, &env, "episodes", "csv"),
        output_path(dir, &method, &env, "steps", "csv"),
        output_path(dir, &method, &env, "summary", "csv"),
    ];
    write_episodes(&files[0], &records, planner, config.seed, &hash)?;
    write_steps(&files[1], &records, config.seed, &hash)?;
    write_csv(&files[2], [&summary])?;
    let files = finish(dir, "evaluate", config, started, files, "manifest")?;
    Ok(Evaluation {
        summary,
        records,
        files,
    })
}

pub fn run_evaluation(config: &RunConfig) -> Result<Evaluation> {
    let problem = build_problem(config)?;
    with_problem!(&problem, p => evaluate_problem(p, config))
}

#[derive(Debug)]
pub struct BeliefStudy {
    pub rows: Vec<BeliefRow>,
    pub quartiles: QuartileComparison,
    pub records: Vec<EpisodeRecord>,
    pub files: Vec<PathBuf>,
}

pub fn belief_study_problem<E: Posg + 'static>(problem: &Problem<E>, config: &RunConfig) -> Result<BeliefStudy> {
    config.validate()?;
    if config.baseline != Baseline::Planner {
        return Err(Error::Config("baseline: belief study needs the planner".into()));
    }
    let started = Instant::now();
    let records = run_episodes(problem, config)?;
    let (method, env, hash) = (config.method(), config.env.id(), config.hash());
    let rows = belief_rows(&records, config.seed, &hash);
    let quartiles = quartile_comparison(&records);
    let dir = &config.output_dir;
    ensure_dir(dir)?;
    let files = vec![
        output_path(dir, &method, &env, "belief", "csv"),
        output_path(dir, &method, &env, "belief_steps", "csv"),
    ];
    write_csv(&files[0], &rows)?;
    write_steps(&files[1], &records, config.seed, &hash)?;
    let files = finish(dir, "belief-stats", config, started, files, "belief_manifest")?;
    Ok(BeliefStudy {
        rows,
        quartiles,
        records,
        files,
    })
}

pub fn run_belief_study(config: &RunConfig) -> Result<BeliefStudy> {
    let problem = build_problem(config)?;
    with_problem!(&problem, p => belief_study_problem(p, config))
}

pub fn run_oracle_check(config: &RunConfig) -> Result<(OracleReport, Vec<PathBuf>)> {
    config.validate()?;
    let started = Instant::now();
    let AnyProblem::Tiny(problem) = build_problem(config)? else {
        return Err(Error::Config("env: oracle check needs a tiny instance".into()));
    };
    let (report, rows) = oracle_check(&problem, config)?;
    let dir = &config.output_dir;
    ensure_dir(dir)?;
    let (method, env) = (config.method(), config.env.id());
    let csv = output_path(dir, &method, &env, "oracle", "csv");
    write_csv(&csv, &rows)?;
    let json = output_path(dir, &method, &env, "oracle_report", "json");
    std::fs::write(&json, serde_json::to_string_pretty(&report)?).map_err(|e| Error::io(&json, e))?;
    let files = finish(dir, "oracle-check", config, started, vec![csv, json], "oracle_manifest")?;
    Ok((report, files))
}

/// Compute the payoff table for the configured policy set and write it with
/// the meta-policy for the configured temperature.
pub fn run_payoffs(config: &RunConfig) -> Result<(PayoffTable, Vec<PathBuf>)> {
    let problem = build_problem(config)?;
    let table = with_problem!(&problem, p => p.table.clone());
    let dir = &config.output_dir;
    ensure_dir(dir)?;
    let env = config.env.id();
    let table_path = dir.join(format!("payoffs_{env}.json"));
    table.save(&table_path)?;
    let mut files = vec![table_path];
    if let SearchPolicy::Meta { tau } = config.search_policy {
        let path = dir.join(format!("meta_{env}_tau{tau}.json"));
        make_meta_policy(&table, tau).save(&path)?;
        files.push(path);
    }
    Ok((table, files))
}
