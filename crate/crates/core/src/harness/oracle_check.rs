use rayon::prelude::*;
use serde::Serialize;

use crate::envs::tiny::TinyPosgModel;
use crate::error::{Error, Result};
use crate::metagame::payoff_horizon;
use crate::oracle::{oracle_records, OracleRecord};
use crate::planner::{Budget, Planner};
use crate::posg::{derive_seed, rng_from_seed, Posg};

use super::config::{OracleCheckConfig, RunConfig};
use super::setup::Problem;

/// One planner run at one budget.
#[derive(Debug, Clone, Serialize)]
pub struct OracleRow {
    pub seed: u64,
    pub config_hash: String,
    pub run: usize,
    pub initial_obs: usize,
    pub budget: usize,
    pub action: usize,
    pub optimal: bool,
    pub root_value: f64,
    pub v_star: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BudgetSummary {
    pub budget: usize,
    pub agreement: f64,
    pub mean_error: f64,
    pub max_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub instance: String,
    pub horizon: usize,
    /// `ε / (1 - γ) + 0.05`.
    pub error_bound: f64,
    pub runs: usize,
    pub budgets: Vec<BudgetSummary>,
    /// Fraction of runs whose error at the largest budget is below the
    /// error at the smallest.
    pub improved_fraction: f64,
    pub oracle: Vec<OracleRecord>,
    /// Largest budget: agreement ≥ 0.99 and every error within the bound.
    pub pass: bool,
}

/// Required agreement with the optimal action set at the largest budget.
pub const REQUIRED_AGREEMENT: f64 = 0.99;

/// Compare the planner's root decision and value with the exact optimum over
/// budgets × seeded runs. Run `r` draws its initial observation from the
/// game with seed `derive_seed(config.seed, r)`.
pub fn oracle_check(problem: &Problem<TinyPosgModel>, config: &RunConfig) -> Result<(OracleReport, Vec<OracleRow>)> {
    let check = config.oracle.clone().unwrap_or_default();
    let OracleCheckConfig { budgets, seeds } = &check;
    let env = problem.env.as_ref();
    let horizon = payoff_horizon(env);
    let records = oracle_records(env, &problem.set, horizon)?;
    let rows_meta = problem.meta_policy(&config.search_policy)?.aligned(&problem.set)?;
    let hash = config.hash();
    let spec = env.spec();
    let gamma = config.planner.gamma.unwrap_or(spec.gamma);
    let epsilon = config.planner.epsilon.unwrap_or(spec.epsilon);
    let bound = epsilon / (1.0 - gamma) + 0.05;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("workers: {e}")))?;
    let per_run: Vec<Vec<OracleRow>> = pool.install(|| {
        (0..*seeds)
            .into_par_iter()
            .map(|r| -> Result<Vec<OracleRow>> {
                let run_seed = derive_seed(config.seed, r as u64);
                let mut rng = rng_from_seed(run_seed);
                let s0 = env.sample_initial_state(&mut rng);
                let o0 = env.sample_initial_obs(&s0, &mut rng)[problem.set.planner().0];
                let rec = records
                    .iter()
                    .find(|x| x.initial_obs == o0)
                    .ok_or_else(|| Error::Validation(format!("no oracle record for initial observation {o0}")))?;
                budgets
                    .iter()
                    .map(|&b| {
                        let mut pc = config.planner.clone();
                        pc.budget = Budget::Simulations(b);
                        let mut planner = Planner::new(problem.env.clone(), problem.set.clone(), rows_meta.clone(), pc)?;
                        let mut prng = rng_from_seed(derive_seed(run_seed, b as u64));
                        planner.reset(Some(o0), &mut prng)?;
                        let action = planner.search(&mut prng)?;
                        let v = planner.root_value();
                        Ok(OracleRow {
                            seed: config.seed,
                            config_hash: hash.clone(),
                            run: r,
                            initial_obs: o0,
                            budget: b,
                            action,
                            optimal: rec.optimal_actions.contains(&action),
                            root_value: v,
                            v_star: rec.v_star,
                            error: (v - rec.v_star).abs(),
                        })
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let summaries: Vec<BudgetSummary> = budgets
        .iter()
        .enumerate()
        .map(|(k, &b)| {
            let rows: Vec<&OracleRow> = per_run.iter().map(|r| &r[k]).collect();
            let n = rows.len() as f64;
            BudgetSummary {
                budget: b,
                agreement: rows.iter().filter(|r| r.optimal).count() as f64 / n,
                mean_error: rows.iter().map(|r| r.error).sum::<f64>() / n,
                max_error: rows.iter().map(|r| r.error).fold(0.0, f64::max),
            }
        })
        .collect();
    let (lo, hi) = (0, budgets.len() - 1);
    let improved = per_run.iter().filter(|r| r[hi].error < r[lo].error).count() as f64 / per_run.len() as f64;
    let top = summaries.last().expect("at least one budget");
    let pass = top.agreement >= REQUIRED_AGREEMENT && top.max_error <= bound;
    let report = OracleReport {
        instance: env.id().to_string(),
        horizon,
        error_bound: bound,
        runs: *seeds,
        budgets: summaries,
        improved_fraction: improved,
        oracle: records,
        pass,
    };
    Ok((report, per_run.into_iter().flatten().collect()))
}
