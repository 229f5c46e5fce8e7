use std::sync::Arc;

use rayon::prelude::*;

use crate::envs::driving::{make_driving, Driving};
use crate::envs::predator_prey::{make_predator_prey, PredatorPrey};
use crate::envs::pursuit_evasion::{make_pursuit_evasion, PursuitEvasion};
use crate::envs::tiny::{make_tiny_posg, TinyPosgModel};
use crate::error::{Error, Result};
use crate::metagame::{compute_payoffs, make_meta_policy, payoff_horizon, MetaPolicy, PayoffTable};
use crate::oracle::with_exact_values;
use crate::policies::manifest::PolicyManifest;
use crate::policies::value::{learn_values, FeatureValues, Valued};
use crate::policies::{driving, predator_prey, pursuit_evasion, tiny, PolicySet, SharedPolicy};
use crate::posg::{derive_seed, stable_hash, Posg};

use super::config::{EnvConfig, RunConfig, SearchPolicy};

/// Everything an evaluation needs besides the planner: the environment, the
/// policy set (candidates carrying value functions) and the payoff table.
pub struct Problem<E: Posg> {
    pub env_id: String,
    pub env: Arc<E>,
    pub set: Arc<PolicySet<E::Memory>>,
    pub table: PayoffTable,
}

impl<E: Posg> Problem<E> {
    pub fn meta_policy(&self, search: &SearchPolicy) -> Result<MetaPolicy> {
        match search {
            SearchPolicy::Meta { tau } => Ok(make_meta_policy(&self.table, *tau)),
            SearchPolicy::Fixed { policy } => {
                let k = self
                    .set
                    .candidate_index(policy)
                    .ok_or_else(|| Error::Config(format!("search_policy.policy: unknown candidate `{policy}`")))?;
                Ok(MetaPolicy::fixed(&self.set, k))
            }
        }
    }
}

pub enum AnyProblem {
    Driving(Problem<Driving>),
    PursuitEvasion(Problem<PursuitEvasion>),
    PredatorPrey(Problem<PredatorPrey>),
    Tiny(Problem<TinyPosgModel>),
}

/// Evaluate `$body` with `$p` bound to the concrete problem.
#[macro_export]
macro_rules! with_problem {
    ($any:expr, $p:ident => $body:expr) => {
        match $any {
            $crate::harness::AnyProblem::Driving($p) => $body,
            $crate::harness::AnyProblem::PursuitEvasion($p) => $body,
            $crate::harness::AnyProblem::PredatorPrey($p) => $body,
            $crate::harness::AnyProblem::Tiny($p) => $body,
        }
    };
}

fn load_manifest(config: &RunConfig, default: impl FnOnce() -> Result<PolicyManifest>) -> Result<PolicyManifest> {
    match &config.manifest {
        Some(p) => PolicyManifest::load(p).map_err(|e| Error::Config(format!("manifest: {e}"))),
        None => default(),
    }
}

fn check_agents<E: Posg>(env: &E, manifest: &PolicyManifest) -> Result<()> {
    if manifest.n_agents != env.n_agents() {
        return Err(Error::Config(format!(
            "manifest.n_agents: {} does not match the environment's {} agents",
            manifest.n_agents,
            env.n_agents()
        )));
    }
    Ok(())
}

fn payoffs<E: Posg>(config: &RunConfig, env: &E, env_id: &str, set: &PolicySet<E::Memory>) -> Result<PayoffTable> {
    let seed = derive_seed(config.seed, stable_hash("payoffs"));
    match &config.payoffs {
        Some(p) => {
            let table = PayoffTable::load(p).map_err(|e| Error::Config(format!("payoffs: {e}")))?;
            let missing = table.missing_cells(set);
            if !missing.is_empty() {
                return Err(Error::Config(format!(
                    "payoffs: table lacks {} cells of the policy set",
                    missing.len()
                )));
            }
            Ok(table)
        }
        None => compute_payoffs(env, env_id, set, config.episodes_per_cell, seed),
    }
}

/// Attach learned feature values to every candidate.
fn with_feature_values<E: Posg + 'static>(
    env: &Arc<E>,
    set: PolicySet<E::Memory>,
    episodes: usize,
    seed: u64,
) -> PolicySet<E::Memory> {
    let planner = set.planner();
    let horizon = payoff_horizon(env.as_ref());
    let tables: Vec<_> = (0..set.candidates().len())
        .into_par_iter()
        .map(|k| {
            let s = derive_seed(seed, stable_hash(&set.candidates()[k].id));
            learn_values(env.as_ref(), &set, k, episodes, horizon, s, |m| env.value_feature(planner, m))
        })
        .collect();
    let mut tables = tables.into_iter();
    set.map_candidates(|_, c| {
        let t = tables.next().expect("one table per candidate");
        let fallback = t.overall_mean();
        let values = FeatureValues::new(env.clone(), planner, t.into_means(), fallback);
        let shared: SharedPolicy<E::Memory> = Valued::shared(c.policy.clone(), Arc::new(values));
        shared
    })
}

fn grid_problem<E: Posg + 'static>(config: &RunConfig, env: Arc<E>, set: PolicySet<E::Memory>) -> Result<Problem<E>> {
    let env_id = config.env.id();
    let table = payoffs(config, env.as_ref(), &env_id, &set)?;
    let seed = derive_seed(config.seed, stable_hash("values"));
    let set = with_feature_values(&env, set, config.value_episodes, seed);
    Ok(Problem {
        env_id,
        env,
        set: Arc::new(set),
        table,
    })
}

/// Build the environment, policy set, value functions and payoff table.
pub fn build_problem(config: &RunConfig) -> Result<AnyProblem> {
    config.validate()?;
    Ok(match &config.env {
        EnvConfig::Driving {
            width,
            height,
            layout,
            n_agents,
        } => {
            let env = Arc::new(make_driving(*width, *height, layout, *n_agents)?);
            let manifest = load_manifest(config, || {
                let mut m = driving::default_manifest();
                m.n_agents = *n_agents;
                m.prior = PolicyManifest::uniform_team_prior(&m.other_policies, n_agents - 1);
                Ok(m)
            })?;
            check_agents(env.as_ref(), &manifest)?;
            let set = manifest.build(|s| driving::build(&env, s))?;
            AnyProblem::Driving(grid_problem(config, env, set)?)
        }
        EnvConfig::PursuitEvasion { layout } => {
            let env = Arc::new(make_pursuit_evasion(layout)?);
            let manifest = load_manifest(config, || Ok(pursuit_evasion::default_manifest()))?;
            check_agents(env.as_ref(), &manifest)?;
            let set = manifest.build(|s| pursuit_evasion::build(&env, s))?;
            AnyProblem::PursuitEvasion(grid_problem(config, env, set)?)
        }
        EnvConfig::PredatorPrey {
            n_predators,
            prey_strength,
            n_prey,
        } => {
            let env = Arc::new(make_predator_prey(*n_predators, *prey_strength, *n_prey)?);
            let manifest = load_manifest(config, || Ok(predator_prey::default_manifest(*n_predators)))?;
            check_agents(env.as_ref(), &manifest)?;
            let set = manifest.build(|s| predator_prey::build(&env, s))?;
            AnyProblem::PredatorPrey(grid_problem(config, env, set)?)
        }
        EnvConfig::Tiny { instance } => {
            let env = Arc::new(make_tiny_posg(instance)?);
            let manifest = load_manifest(config, || tiny::default_manifest(&env))?;
            check_agents(env.as_ref(), &manifest)?;
            let set = tiny::build_set(&env, &manifest)?;
            let env_id = config.env.id();
            let table = payoffs(config, env.as_ref(), &env_id, &set)?;
            let set = with_exact_values(&env, &set, payoff_horizon(env.as_ref()))?;
            AnyProblem::Tiny(Problem {
                env_id,
                env,
                set: Arc::new(set),
                table,
            })
        }
    })
}
