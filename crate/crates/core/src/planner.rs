//! Online planning over history-policy-state beliefs.
//!
//! [`Variant::Potmmcp`] searches with PUCT, priors averaged from planner
//! policies drawn from the meta-policy, and value-function leaf evaluation.
//! [`Variant::IpomcpPf`] is the UCB/rollout baseline on the same tree and
//! belief machinery.
//!
//! The tree is single-threaded by contract: statistics mutate on backup and
//! parallelism belongs across episodes, never inside one search.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::belief::{
    initial_belief, step_particle, update_root_belief, Convention, Particle, ParticleBelief, UpdateStats,
};
use crate::error::{Error, Result};
use crate::policies::{Dist, PolicySet};
use crate::posg::{argmax_random_tie, horizon_for_epsilon, sample_categorical, Action, History, Posg, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Potmmcp,
    IpomcpPf,
}

/// Planner policy used for Monte-Carlo rollouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RolloutPolicy {
    /// The search policy drawn from the meta-policy for this simulation.
    Meta,
    /// Uniform random actions; needs no meta-policy.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "policy")]
pub enum LeafEval {
    /// `V^{π_i}(h)` of the search policy, falling back to a rollout with it
    /// when the policy has no value function.
    ValueFunction,
    /// Depth-limited rollout.
    Rollout(RolloutPolicy),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Budget {
    Simulations(usize),
    Seconds(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub variant: Variant,
    /// Exploration constant.
    pub c: f64,
    /// Uniform mix-in proportion of the PUCT prior.
    pub lambda: f64,
    /// Overrides the environment's discount.
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Overrides the environment's search precision.
    #[serde(default)]
    pub epsilon: Option<f64>,
    pub budget: Budget,
    pub leaf_eval: LeafEval,
    pub q_normalization: bool,
    /// Root belief size; defaults to the simulation budget (1000 for
    /// wall-clock budgets).
    #[serde(default)]
    pub n_particles: Option<usize>,
    pub convention: Convention,
}

impl PlannerConfig {
    pub fn potmmcp(simulations: usize) -> Self {
        Self {
            variant: Variant::Potmmcp,
            c: 1.25,
            lambda: 0.5,
            gamma: None,
            epsilon: None,
            budget: Budget::Simulations(simulations),
            leaf_eval: LeafEval::ValueFunction,
            q_normalization: true,
            n_particles: None,
            convention: Convention::ObservationFirst,
        }
    }

    pub fn ipomcp_pf(simulations: usize, rollout: RolloutPolicy) -> Self {
        Self {
            variant: Variant::IpomcpPf,
            c: std::f64::consts::SQRT_2,
            lambda: 0.0,
            leaf_eval: LeafEval::Rollout(rollout),
            ..Self::potmmcp(simulations)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.c > 0.0) {
            return bad("planner.c must be positive");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("planner.lambda must lie in [0, 1]");
        }
        if let Some(g) = self.gamma {
            if !(0.0..1.0).contains(&g) {
                return bad("planner.gamma must lie in [0, 1)");
            }
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0) {
                return bad("planner.epsilon must be positive");
            }
        }
        match self.budget {
            Budget::Simulations(0) => return bad("planner.budget must allow at least one simulation"),
            Budget::Seconds(s) if !(s > 0.0) => return bad("planner.budget seconds must be positive"),
            _ => {}
        }
        if self.n_particles == Some(0) {
            return bad("planner.n_particles must be at least 1");
        }
        Ok(())
    }

    /// Whether the search draws planner policies from the meta-policy.
    pub fn uses_meta(&self) -> bool {
        self.variant == Variant::Potmmcp || self.leaf_eval != LeafEval::Rollout(RolloutPolicy::Random)
    }

    pub fn particle_target(&self) -> usize {
        self.n_particles.unwrap_or(match self.budget {
            Budget::Simulations(n) => n,
            Budget::Seconds(_) => 1000,
        })
    }
}

/// Statistics of one action edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub n: u64,
    pub p: f64,
    pub w: f64,
    pub q: f64,
}

/// A planner history in the tree. A node exists (holding particles) before
/// it is expanded; expansion creates the edge statistics.
struct Node<E: Posg> {
    mem: E::Memory,
    depth: usize,
    particles: Vec<Particle<E>>,
    edges: Vec<Edge>,
    children: HashMap<(Action, E::Obs), usize>,
    n: u64,
    expanded: bool,
}

impl<E: Posg> Node<E> {
    fn new(mem: E::Memory, depth: usize) -> Self {
        Self {
            mem,
            depth,
            particles: Vec::new(),
            edges: Vec::new(),
            children: HashMap::new(),
            n: 0,
            expanded: false,
        }
    }
}

/// Counters for one call to [`Planner::search`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SearchStats {
    pub simulations: u64,
    pub expansions: u64,
    pub meta_queries: u64,
    /// Deepest tree node visited, relative to the root.
    pub max_depth: usize,
    pub generative_steps: u64,
}

pub struct Planner<E: Posg> {
    env: Arc<E>,
    set: Arc<PolicySet<E::Memory>>,
    /// `meta[j][c] = σ(candidate c | joint j)`, aligned to `set`.
    meta: Vec<Vec<f64>>,
    config: PlannerConfig,
    gamma: f64,
    epsilon: f64,
    horizon: usize,
    nodes: Vec<Node<E>>,
    root: usize,
    history: History<E::Obs>,
    q_range: Option<(f64, f64)>,
    stats: SearchStats,
    total_meta_queries: u64,
    dist: Dist,
}

impl<E: Posg> fmt::Debug for Planner<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Planner")
            .field("variant", &self.config.variant)
            .field("nodes", &self.nodes.len())
            .field("root_particles", &self.nodes.get(self.root).map(|n| n.particles.len()))
            .finish()
    }
}

impl<E: Posg> Planner<E> {
    /// `meta` rows must be aligned to `set` (see
    /// [`crate::metagame::MetaPolicy::aligned`]).
    pub fn new(env: Arc<E>, set: Arc<PolicySet<E::Memory>>, meta: Vec<Vec<f64>>, config: PlannerConfig) -> Result<Self> {
        config.validate()?;
        if meta.len() != set.joint_policies().len() || meta.iter().any(|r| r.len() != set.candidates().len()) {
            return Err(Error::Validation("meta-policy rows do not match the policy set".into()));
        }
        if set.planner_action_count() != env.action_count(set.planner()) {
            return Err(Error::Validation("planner policies and environment disagree on actions".into()));
        }
        let gamma = config.gamma.unwrap_or(env.spec().gamma);
        let epsilon = config.epsilon.unwrap_or(env.spec().epsilon);
        Ok(Self {
            horizon: horizon_for_epsilon(gamma, epsilon),
            env,
            set,
            meta,
            config,
            gamma,
            epsilon,
            nodes: Vec::new(),
            root: 0,
            history: History::empty(),
            q_range: None,
            stats: SearchStats::default(),
            total_meta_queries: 0,
            dist: Dist::new(),
        })
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn stats(&self) -> SearchStats {
        self.stats
    }

    /// Meta-policy queries since construction.
    pub fn total_meta_queries(&self) -> u64 {
        self.total_meta_queries
    }

    pub fn history(&self) -> &History<E::Obs> {
        &self.history
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Start an episode. `initial_obs` is the planner's `o_i,0` under the
    /// observation-first convention and ignored otherwise.
    pub fn reset(&mut self, initial_obs: Option<E::Obs>, rng: &mut Rng) -> Result<()> {
        let planner = self.set.planner();
        let target = self.config.particle_target();
        let (mem, history) = match self.config.convention {
            Convention::ObservationFirst => {
                let o = initial_obs.ok_or_else(|| Error::Validation("observation-first reset needs o_i,0".into()))?;
                (self.env.initial_memory(planner, &o), History::with_initial(o))
            }
            Convention::ActionFirst => (
                self.env
                    .empty_memory(planner)
                    .ok_or_else(|| Error::Unsupported("environment has no action-first convention".into()))?,
                History::empty(),
            ),
        };
        let belief = initial_belief(&*self.env, &self.set, target, self.config.convention, history.initial(), rng)?;
        let mut root = Node::new(mem, 0);
        root.particles = belief.particles;
        self.nodes = vec![root];
        self.root = 0;
        self.history = history;
        self.q_range = None;
        Ok(())
    }

    /// Replace the root belief, e.g. to study search from a fixed belief.
    pub fn set_root_belief(&mut self, belief: ParticleBelief<E>) {
        self.nodes[self.root].particles = belief.particles;
    }

    pub fn root_belief(&self) -> ParticleBelief<E> {
        ParticleBelief {
            particles: self.nodes[self.root].particles.clone(),
        }
    }

    pub fn root_particles(&self) -> &[Particle<E>] {
        &self.nodes[self.root].particles
    }

    pub fn root_particle_count(&self) -> usize {
        self.nodes[self.root].particles.len()
    }

    /// Fraction of root particles per joint policy.
    pub fn root_type_marginal(&self) -> Vec<f64> {
        let n = self.set.joint_policies().len();
        let ps = &self.nodes[self.root].particles;
        let mut out = vec![0.0; n];
        for p in ps {
            out[p.joint] += 1.0 / ps.len() as f64;
        }
        out
    }

    pub fn root_edges(&self) -> &[Edge] {
        &self.nodes[self.root].edges
    }

    pub fn root_visits(&self) -> Vec<u64> {
        self.root_edges().iter().map(|e| e.n).collect()
    }

    /// `Q` of the most visited root action (ties: lowest index), or 0 before
    /// any search.
    pub fn root_value(&self) -> f64 {
        let edges = self.root_edges();
        let mut best: Option<&Edge> = None;
        for e in edges {
            if best.map_or(true, |b| e.n > b.n) {
                best = Some(e);
            }
        }
        best.map_or(0.0, |e| e.q)
    }

    /// Run simulations from the root belief and return the most visited root
    /// action (ties uniform).
    pub fn search(&mut self, rng: &mut Rng) -> Result<Action> {
        if self.nodes.is_empty() {
            return Err(Error::Validation("planner used before reset".into()));
        }
        if self.nodes[self.root].particles.is_empty() {
            return Err(Error::Depletion("root belief is empty".into()));
        }
        self.stats = SearchStats::default();
        let started = Instant::now();
        loop {
            let done = match self.config.budget {
                Budget::Simulations(n) => self.stats.simulations >= n as u64,
                Budget::Seconds(s) => self.stats.simulations > 0 && started.elapsed().as_secs_f64() >= s,
            };
            if done {
                break;
            }
            let root = &self.nodes[self.root];
            let w = root.particles[rng.gen_range(0..root.particles.len())].clone();
            let pi_i = if self.config.uses_meta() {
                self.stats.meta_queries += 1;
                Some(sample_categorical(&self.meta[w.joint], rng))
            } else {
                None
            };
            self.simulate(self.root, &w, pi_i, 0, rng);
            self.stats.simulations += 1;
        }
        self.total_meta_queries += self.stats.meta_queries;
        let visits: Vec<f64> = self.root_edges().iter().map(|e| e.n as f64).collect();
        Ok(argmax_random_tie(&visits, rng))
    }

    fn simulate(&mut self, node: usize, w: &Particle<E>, pi_i: Option<usize>, depth: usize, rng: &mut Rng) -> f64 {
        if self.gamma.powi(depth as i32) < self.epsilon || self.env.is_terminal(&w.state) {
            return 0.0;
        }
        self.stats.max_depth = self.stats.max_depth.max(depth);
        if !self.nodes[node].expanded {
            return self.expand(node, w, pi_i, depth, rng);
        }
        let a = self.select(node, rng);
        let step = step_particle(&*self.env, &self.set, w, a, &mut self.dist, rng);
        self.stats.generative_steps += 1;
        let child = self.child(node, a, step.obs);
        let g = step.reward + self.gamma * self.simulate(child, &step.next, pi_i, depth + 1, rng);
        self.nodes[child].particles.push(step.next);
        self.backup(node, a, g, pi_i);
        g
    }

    fn child(&mut self, node: usize, a: Action, o: E::Obs) -> usize {
        if let Some(&c) = self.nodes[node].children.get(&(a, o)) {
            return c;
        }
        let mut mem = self.nodes[node].mem.clone();
        self.env.update_memory(self.set.planner(), &mut mem, a, &o);
        let id = self.nodes.len();
        let depth = self.nodes[node].depth + 1;
        self.nodes.push(Node::new(mem, depth));
        self.nodes[node].children.insert((a, o), id);
        id
    }

    fn policy_dist(&mut self, c: usize, mem: &E::Memory) -> Dist {
        let pi = &self.set.candidates()[c].policy;
        let mut d: Dist = smallvec::smallvec![0.0; pi.action_count()];
        pi.action_dist(mem, &mut d);
        d
    }

    fn expand(&mut self, node: usize, w: &Particle<E>, pi_i: Option<usize>, depth: usize, rng: &mut Rng) -> f64 {
        self.stats.expansions += 1;
        let n_actions = self.set.planner_action_count();
        let mem = self.nodes[node].mem.clone();
        let prior = match (self.config.variant, pi_i) {
            (Variant::Potmmcp, Some(c)) => self.policy_dist(c, &mem),
            _ => smallvec::smallvec![1.0 / n_actions as f64; n_actions],
        };
        let n = &mut self.nodes[node];
        n.edges = prior.iter().map(|&p| Edge { n: 0, p, w: 0.0, q: 0.0 }).collect();
        n.expanded = true;
        self.note_q(0.0);
        let value = match (self.config.leaf_eval, pi_i) {
            (LeafEval::ValueFunction, Some(c)) => self.set.candidates()[c].policy.value(&mem),
            _ => None,
        };
        match value {
            Some(v) => v,
            None => {
                let rollout_pi = match self.config.leaf_eval {
                    LeafEval::Rollout(RolloutPolicy::Random) => None,
                    _ => pi_i,
                };
                self.rollout(w, mem, rollout_pi, depth, rng)
            }
        }
    }

    /// Discounted return of a rollout from `w` over the remaining
    /// `horizon - depth` steps; `pi_i = None` plays uniformly at random.
    fn rollout(&mut self, w: &Particle<E>, mut mem: E::Memory, pi_i: Option<usize>, depth: usize, rng: &mut Rng) -> f64 {
        let planner = self.set.planner();
        let n_actions = self.set.planner_action_count();
        let mut p = w.clone();
        let (mut ret, mut discount) = (0.0, 1.0);
        for _ in depth..self.horizon {
            if self.env.is_terminal(&p.state) {
                break;
            }
            let a = match pi_i {
                Some(c) => {
                    let d = self.policy_dist(c, &mem);
                    sample_categorical(&d, rng)
                }
                None => rng.gen_range(0..n_actions),
            };
            let step = step_particle(&*self.env, &self.set, &p, a, &mut self.dist, rng);
            self.stats.generative_steps += 1;
            ret += discount * step.reward;
            discount *= self.gamma;
            self.env.update_memory(planner, &mut mem, a, &step.obs);
            p = step.next;
        }
        ret
    }

    fn note_q(&mut self, q: f64) {
        self.q_range = Some(match self.q_range {
            None => (q, q),
            Some((lo, hi)) => (lo.min(q), hi.max(q)),
        });
    }

    fn normalised(&self, q: f64) -> f64 {
        if !self.config.q_normalization {
            return q;
        }
        match self.q_range {
            Some((lo, hi)) if hi > lo => (q - lo) / (hi - lo),
            _ => 0.0,
        }
    }

    fn select(&self, node: usize, rng: &mut Rng) -> Action {
        let n = &self.nodes[node];
        let scores: Vec<f64> = match self.config.variant {
            Variant::Potmmcp => puct_scores(n.edges.iter().map(|e| (self.normalised(e.q), e.n, e.p)), n.n, self.config.c, self.config.lambda),
            Variant::IpomcpPf => ucb_scores(n.edges.iter().map(|e| (self.normalised(e.q), e.n)), n.n, self.config.c),
        };
        argmax_random_tie(&scores, rng)
    }

    fn backup(&mut self, node: usize, a: Action, g: f64, pi_i: Option<usize>) {
        let q = {
            let n = &mut self.nodes[node];
            n.n += 1;
            let e = &mut n.edges[a];
            e.n += 1;
            e.w += g;
            e.q = e.w / e.n as f64;
            e.q
        };
        self.note_q(q);
        if let (Variant::Potmmcp, Some(c)) = (self.config.variant, pi_i) {
            let mem = self.nodes[node].mem.clone();
            let pi = self.policy_dist(c, &mem);
            let n = &mut self.nodes[node];
            let count = n.n as f64;
            for (e, p) in n.edges.iter_mut().zip(&pi) {
                e.p += (p - e.p) / count;
            }
        }
    }

    /// Execute `a` and observe `o`: promote the matching child to the root
    /// (creating it if the search never reached it), drop everything else,
    /// and top up the new root belief.
    pub fn advance(&mut self, a: Action, o: E::Obs, rng: &mut Rng) -> Result<UpdateStats> {
        let old_root = self.root;
        let child = self.nodes[old_root].children.get(&(a, o)).copied();
        let source = std::mem::take(&mut self.nodes[old_root].particles);
        let mut mem = self.nodes[old_root].mem.clone();
        let mut old: Vec<Option<Node<E>>> = std::mem::take(&mut self.nodes).into_iter().map(Some).collect();
        let mut nodes = Vec::new();
        match child {
            Some(c) => {
                let mut map = HashMap::new();
                map.insert(c, 0usize);
                let mut queue = std::collections::VecDeque::from([c]);
                let mut order = Vec::new();
                while let Some(id) = queue.pop_front() {
                    order.push(id);
                    let node = old[id].as_ref().expect("tree is acyclic");
                    let mut kids: Vec<usize> = node.children.values().copied().collect();
                    kids.sort_unstable();
                    for k in kids {
                        let next = map.len();
                        map.insert(k, next);
                        queue.push_back(k);
                    }
                }
                for id in order {
                    let mut node = old[id].take().expect("visited once");
                    for v in node.children.values_mut() {
                        *v = map[v];
                    }
                    node.depth -= 1;
                    nodes.push(node);
                }
            }
            None => {
                self.env.update_memory(self.set.planner(), &mut mem, a, &o);
                nodes.push(Node::new(mem, 0));
            }
        }
        drop(old);
        self.nodes = nodes;
        self.root = 0;
        self.history.push(a, o);
        self.q_range = None;
        let edges: Vec<f64> = self.nodes.iter().flat_map(|n| n.edges.iter().map(|e| e.q)).collect();
        for q in edges {
            self.note_q(q);
        }
        let inherited = std::mem::take(&mut self.nodes[0].particles);
        let (belief, stats) = update_root_belief(
            &*self.env,
            &self.set,
            inherited,
            &source,
            a,
            &o,
            self.config.particle_target(),
            &self.history,
            self.config.convention,
            rng,
        )?;
        self.nodes[0].particles = belief.particles;
        Ok(stats)
    }
}

/// PUCT scores `Q̃ + c·(P(1−λ) + λ/|A|)·√N(h)/(1 + N(ha))` for edges given as
/// `(Q̃, N(ha), P)`.
pub fn puct_scores(edges: impl ExactSizeIterator<Item = (f64, u64, f64)>, n_h: u64, c: f64, lambda: f64) -> Vec<f64> {
    let k = edges.len() as f64;
    let root = (n_h as f64).sqrt();
    edges
        .map(|(q, n, p)| q + c * (p * (1.0 - lambda) + lambda / k) * root / (1.0 + n as f64))
        .collect()
}

/// UCB scores `Q̃ + c·√(ln N(h) / N(ha))`; unvisited edges score `+∞` so they
/// are tried first.
pub fn ucb_scores(edges: impl Iterator<Item = (f64, u64)>, n_h: u64, c: f64) -> Vec<f64> {
    let ln = (n_h.max(1) as f64).ln();
    edges
        .map(|(q, n)| if n == 0 { f64::INFINITY } else { q + c * (ln / n as f64).sqrt() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::tiny::{make_tiny_posg, TinyPosgModel};
    use crate::metagame::MetaPolicy;
    use crate::policies::tiny::{build_set, default_manifest};
    use crate::posg::rng_from_seed;

    fn planner(id: &str, config: PlannerConfig) -> Planner<TinyPosgModel> {
        let m = Arc::new(make_tiny_posg(id).unwrap());
        let set = Arc::new(build_set(&m, &default_manifest(&m).unwrap()).unwrap());
        let meta = MetaPolicy::fixed(&set, 0).aligned(&set).unwrap();
        Planner::new(m, set, meta, config).unwrap()
    }

    #[test]
    fn puct_examples() {
        let s = puct_scores([(0.0, 3, 0.5), (0.0, 1, 0.5)].into_iter(), 4, 1.25, 0.0);
        assert!(s[1] > s[0]);
        let s = puct_scores([(0.0, 0, 0.9), (0.0, 0, 0.1)].into_iter(), 0, 1.25, 0.5);
        assert_eq!(s[0], s[1]);
        let s = puct_scores([(0.0, 1, 0.9), (0.0, 1, 0.1)].into_iter(), 2, 1.25, 1.0);
        assert_eq!(s[0], s[1]);
    }

    #[test]
    fn ucb_examples() {
        let s = ucb_scores([(1.0, 1), (0.0, 1)].into_iter(), 2, std::f64::consts::SQRT_2);
        assert!(s[0] > s[1]);
        let s = ucb_scores([(1.0, 5), (0.0, 0)].into_iter(), 5, std::f64::consts::SQRT_2);
        assert_eq!(argmax_random_tie(&s, &mut rng_from_seed(0)), 1);
    }

    #[test]
    fn single_simulation_expands_once() {
        let mut p = planner("coord", PlannerConfig::potmmcp(1));
        let mut rng = rng_from_seed(1);
        p.reset(Some(0), &mut rng).unwrap();
        p.search(&mut rng).unwrap();
        assert_eq!(p.stats().expansions, 1);
        assert!(p.root_visits().iter().all(|&n| n == 0));
        // The fixed search policy `left` is a point mass on action 0.
        assert_eq!(p.root_edges()[0].p, 1.0);
    }

    #[test]
    fn statistics_are_consistent() {
        let mut p = planner("coord", PlannerConfig::potmmcp(2000));
        let mut rng = rng_from_seed(2);
        p.reset(Some(0), &mut rng).unwrap();
        p.search(&mut rng).unwrap();
        for node in &p.nodes {
            if !node.expanded {
                continue;
            }
            assert_eq!(node.edges.iter().map(|e| e.n).sum::<u64>(), node.n);
            for e in &node.edges {
                assert!((e.w - e.q * e.n as f64).abs() < 1e-6);
            }
            if node.n > 0 {
                assert!((node.edges.iter().map(|e| e.p).sum::<f64>() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn advance_keeps_only_the_subtree() {
        let mut p = planner("reveal", PlannerConfig::potmmcp(500));
        let mut rng = rng_from_seed(3);
        p.reset(Some(0), &mut rng).unwrap();
        let a = p.search(&mut rng).unwrap();
        let before = p.n_nodes();
        let stats = p.advance(a, 1, &mut rng).unwrap();
        assert!(p.n_nodes() < before);
        assert!(p.root_particle_count() >= 532);
        assert!(stats.inherited > 0);
        assert_eq!(p.nodes[0].depth, 0);
        assert!(p.nodes.iter().skip(1).all(|n| n.depth >= 1));
    }

    #[test]
    fn random_baseline_never_queries_meta() {
        let mut p = planner("coord", PlannerConfig::ipomcp_pf(300, RolloutPolicy::Random));
        let mut rng = rng_from_seed(4);
        p.reset(Some(0), &mut rng).unwrap();
        for _ in 0..3 {
            let a = p.search(&mut rng).unwrap();
            p.advance(a, 0, &mut rng).unwrap();
        }
        assert_eq!(p.total_meta_queries(), 0);
    }

    #[test]
    fn search_is_deterministic() {
        let run = || {
            let mut p = planner("coord", PlannerConfig::potmmcp(800));
            let mut rng = rng_from_seed(5);
            p.reset(Some(0), &mut rng).unwrap();
            let a = p.search(&mut rng).unwrap();
            (a, p.root_edges().to_vec())
        };
        assert_eq!(run(), run());
    }
}
