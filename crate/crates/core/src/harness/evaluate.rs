use rayon::prelude::*;
use serde::Serialize;

use crate::belief::belief_metrics;
use crate::error::{Error, Result};
use crate::planner::Planner;
use crate::policies::{dist_of, sample_action, Dist};
use crate::posg::{derive_seed, discounted_return, rng_from_seed, sample_categorical, Action, AgentId, Joint, Posg};

use super::config::{Baseline, RunConfig};
use super::setup::Problem;

/// One decision of the planning agent. Belief columns are NaN when no
/// search tree backs the decision.
#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub t: usize,
    pub action: Action,
    pub reward: f64,
    pub prob_true_type: f64,
    pub action_dist_distance: f64,
    pub max_depth: usize,
    pub simulations: u64,
    pub generative_steps: u64,
    pub meta_queries: u64,
    pub particles: usize,
    /// Root visit counts per action, `;`-separated.
    pub root_visits: String,
}

#[derive(Debug, Clone)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub seed: u64,
    pub true_joint: String,
    /// Discounted return per agent.
    pub returns: Vec<f64>,
    pub undiscounted: Vec<f64>,
    pub trees_built: usize,
    pub meta_queries: u64,
    /// Step at which the planner's belief ran empty; the episode then
    /// continues with a policy drawn from the meta-policy.
    pub depleted_at: Option<usize>,
    pub steps: Vec<StepRecord>,
}

impl EpisodeRecord {
    pub fn planner_return(&self, planner: AgentId) -> f64 {
        self.returns[planner.0]
    }
}

enum Controller<E: Posg> {
    Search(Box<Planner<E>>),
    Fixed(usize),
}

/// Seed of episode `e`; every random stream of the episode derives from it.
pub fn episode_seed(seed: u64, e: usize) -> u64 {
    derive_seed(seed, e as u64)
}

/// Draw a planner policy from the meta-policy marginalised over the prior.
fn meta_draw<E: Posg>(problem: &Problem<E>, rows: &[Vec<f64>], rng: &mut crate::posg::Rng) -> usize {
    let j = problem.set.sample_joint_policy(rng);
    sample_categorical(&rows[j], rng)
}

/// Play episode `e` against a joint type drawn from the prior.
///
/// The true type and start state, the world's transitions and the planner
/// each use their own stream, so methods compared under one seed face the
/// same types and starts.
pub fn run_episode<E: Posg + 'static>(
    problem: &Problem<E>,
    config: &RunConfig,
    rows: &[Vec<f64>],
    e: usize,
) -> Result<EpisodeRecord> {
    let seed = episode_seed(config.seed, e);
    let mut setup_rng = rng_from_seed(derive_seed(seed, 0));
    let mut world_rng = rng_from_seed(derive_seed(seed, 1));
    let mut plan_rng = rng_from_seed(derive_seed(seed, 2));
    let env = problem.env.as_ref();
    let set = problem.set.as_ref();
    let n = env.n_agents();
    let planner = set.planner();
    let gamma = env.gamma();
    let max_steps = config.max_steps.unwrap_or_else(|| crate::metagame::payoff_horizon(env));

    let joint = set.sample_joint_policy(&mut setup_rng);
    let mut state = env.sample_initial_state(&mut setup_rng);
    let obs = env.sample_initial_obs(&state, &mut setup_rng);
    let mut mems: Vec<E::Memory> = (0..n).map(|k| env.initial_memory(AgentId(k), &obs[k])).collect();
    let others: Vec<AgentId> = set.other_agents().collect();

    let mut depleted_at = None;
    let mut trees_built = 0;
    let mut controller = match config.baseline {
        Baseline::Planner => {
            let mut p = Planner::new(problem.env.clone(), problem.set.clone(), rows.to_vec(), config.planner.clone())?;
            trees_built += 1;
            match p.reset(Some(obs[planner.0].clone()), &mut plan_rng) {
                Ok(()) => Controller::Search(Box::new(p)),
                Err(Error::Depletion(_)) => {
                    depleted_at = Some(0);
                    Controller::Fixed(meta_draw(problem, rows, &mut plan_rng))
                }
                Err(err) => return Err(err),
            }
        }
        Baseline::MetapolicyOnly => Controller::Fixed(meta_draw(problem, rows, &mut plan_rng)),
        Baseline::BestResponse => {
            let id = &set.joint_policies()[joint].id;
            let col = problem
                .table
                .cols
                .iter()
                .position(|c| c == id)
                .ok_or_else(|| Error::UnknownPolicy(id.clone()))?;
            let row = &problem.table.rows[problem.table.best_response(col)];
            Controller::Fixed(set.candidate_index(row).ok_or_else(|| Error::UnknownPolicy(row.clone()))?)
        }
    };

    let mut rewards: Vec<Joint<f64>> = Vec::new();
    let mut steps = Vec::new();
    let mut true_dists: Vec<Dist> = Vec::with_capacity(others.len());
    let mut actions: Joint<Action> = Joint::new();
    for t in 0..max_steps {
        if env.is_terminal(&state) {
            break;
        }
        let mut rec = StepRecord {
            t,
            action: 0,
            reward: 0.0,
            prob_true_type: f64::NAN,
            action_dist_distance: f64::NAN,
            max_depth: 0,
            simulations: 0,
            generative_steps: 0,
            meta_queries: 0,
            particles: 0,
            root_visits: String::new(),
        };
        let a_i = match &mut controller {
            Controller::Search(p) => {
                true_dists.clear();
                for (k, a) in others.iter().enumerate() {
                    true_dists.push(dist_of(set.member(joint, k), &mems[a.0]));
                }
                let m = belief_metrics(p.root_particles(), set, joint, &true_dists);
                rec.prob_true_type = m.prob_true_type;
                rec.action_dist_distance = m.action_dist_distance;
                rec.particles = p.root_particle_count();
                let a = p.search(&mut plan_rng)?;
                let s = p.stats();
                rec.max_depth = s.max_depth;
                rec.simulations = s.simulations;
                rec.generative_steps = s.generative_steps;
                rec.meta_queries = s.meta_queries;
                rec.root_visits = p.root_visits().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";");
                a
            }
            Controller::Fixed(c) => sample_action(set.candidates()[*c].policy.as_ref(), &mems[planner.0], &mut plan_rng),
        };
        actions.clear();
        let mut k = 0;
        for a in 0..n {
            if a == planner.0 {
                actions.push(a_i);
            } else {
                actions.push(sample_action(set.member(joint, k), &mems[a], &mut world_rng));
                k += 1;
            }
        }
        let out = env.sample_step(&state, &actions, &mut world_rng);
        for (k, m) in mems.iter_mut().enumerate() {
            env.update_memory(AgentId(k), m, actions[k], &out.joint_obs[k]);
        }
        rec.action = a_i;
        rec.reward = out.joint_reward[planner.0];
        state = out.next_state;
        let o_i = out.joint_obs[planner.0].clone();
        rewards.push(out.joint_reward);
        steps.push(rec);
        if env.is_terminal(&state) || t + 1 == max_steps {
            break;
        }
        if let Controller::Search(p) = &mut controller {
            match p.advance(a_i, o_i, &mut plan_rng) {
                Ok(_) => {}
                Err(Error::Depletion(_)) => {
                    depleted_at = Some(t + 1);
                    controller = Controller::Fixed(meta_draw(problem, rows, &mut plan_rng));
                }
                Err(err) => return Err(err),
            }
        }
    }

    let meta_queries = steps.iter().map(|s| s.meta_queries).sum();
    let returns = (0..n)
        .map(|a| discounted_return(&rewards.iter().map(|r| r[a]).collect::<Vec<_>>(), gamma))
        .collect();
    let undiscounted = (0..n).map(|a| rewards.iter().map(|r| r[a]).sum()).collect();
    Ok(EpisodeRecord {
        episode: e,
        seed,
        true_joint: set.joint_policies()[joint].id.clone(),
        returns,
        undiscounted,
        trees_built,
        meta_queries,
        depleted_at,
        steps,
    })
}

/// Run every episode of `config`, in parallel up to `config.workers`.
/// Records come back in episode order whatever the scheduling.
pub fn run_episodes<E: Posg + 'static>(problem: &Problem<E>, config: &RunConfig) -> Result<Vec<EpisodeRecord>> {
    let meta = problem.meta_policy(&config.search_policy)?;
    let rows = meta.aligned(&problem.set)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("workers: {e}")))?;
    pool.install(|| {
        (0..config.episodes)
            .into_par_iter()
            .map(|e| run_episode(problem, config, &rows, e))
            .collect()
    })
}
