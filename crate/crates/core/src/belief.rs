//! Beliefs over history-policy states `w = <s, π_-i, h_-i>`.
//!
//! Particle beliefs are unweighted multisets; weights are implicit in
//! multiplicity. Updates use rejection sampling on the planner's observation.
//! On explicit-table games the exact posterior is available for checking.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng as _;
use serde::Serialize;

use crate::envs::tiny::TinyPosgModel;
use crate::error::{Error, Result};
use crate::policies::{Dist, PolicySet};
use crate::posg::{sample_categorical, Action, AgentId, History, Joint, Posg, Rng};

/// Rejected attempts allowed per requested particle before falling back.
pub const ATTEMPTS_PER_PARTICLE: usize = 100;

/// Root beliefs are topped up to at least `(1 + 1/16)` times the target.
pub const TOP_UP_FACTOR: f64 = 1.0 + 1.0 / 16.0;

/// Largest number of history-policy states the exact posterior will track.
pub const EXACT_CAP: usize = 200_000;

/// How an episode starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// Agents act first; histories start empty.
    ActionFirst,
    /// Agents receive an initial observation before acting.
    ObservationFirst,
}

/// One history-policy state. `mems[k]` summarises the history of the `k`-th
/// non-planner agent (see [`PolicySet::other_agents`]); `joint` indexes the
/// policy set's joint policies.
pub struct Particle<E: Posg + ?Sized> {
    pub state: E::State,
    pub joint: usize,
    pub mems: Joint<E::Memory>,
}

impl<E: Posg + ?Sized> Clone for Particle<E> {
    fn clone(&self) -> Self {
        Self {
            state: self.state.clone(),
            joint: self.joint,
            mems: self.mems.clone(),
        }
    }
}

impl<E: Posg + ?Sized> fmt::Debug for Particle<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Particle")
            .field("state", &self.state)
            .field("joint", &self.joint)
            .field("mems", &self.mems)
            .finish()
    }
}

pub struct ParticleBelief<E: Posg + ?Sized> {
    pub particles: Vec<Particle<E>>,
}

impl<E: Posg + ?Sized> Clone for ParticleBelief<E> {
    fn clone(&self) -> Self {
        Self {
            particles: self.particles.clone(),
        }
    }
}

impl<E: Posg + ?Sized> fmt::Debug for ParticleBelief<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ParticleBelief({} particles)", self.particles.len())
    }
}

impl<E: Posg + ?Sized> ParticleBelief<E> {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn sample<'a>(&'a self, rng: &mut Rng) -> &'a Particle<E> {
        &self.particles[rng.gen_range(0..self.particles.len())]
    }

    /// Particle count per joint policy.
    pub fn type_counts(&self, n_joint: usize) -> Vec<usize> {
        let mut counts = vec![0; n_joint];
        for p in &self.particles {
            counts[p.joint] += 1;
        }
        counts
    }

    /// Fraction of particles per joint policy.
    pub fn type_marginal(&self, n_joint: usize) -> Vec<f64> {
        let n = self.particles.len().max(1) as f64;
        self.type_counts(n_joint).into_iter().map(|c| c as f64 / n).collect()
    }
}

/// Full joint action: `planner_action` in the planner's seat and actions
/// sampled from `p`'s policies for everyone else.
pub fn joint_action<E: Posg + ?Sized>(
    set: &PolicySet<E::Memory>,
    planner_action: Action,
    p: &Particle<E>,
    dist: &mut Dist,
    rng: &mut Rng,
) -> Joint<Action> {
    let planner = set.planner().0;
    let mut out = Joint::with_capacity(set.n_agents());
    let mut k = 0;
    for a in 0..set.n_agents() {
        if a == planner {
            out.push(planner_action);
        } else {
            let pi = set.member(p.joint, k);
            dist.clear();
            dist.resize(pi.action_count(), 0.0);
            pi.action_dist(&p.mems[k], dist);
            out.push(sample_categorical(dist, rng));
            k += 1;
        }
    }
    out
}

/// Outcome of stepping a particle.
pub struct ParticleStep<E: Posg + ?Sized> {
    pub next: Particle<E>,
    pub obs: E::Obs,
    pub reward: f64,
}

/// Advance `p` one step with the planner playing `a_i`.
pub fn step_particle<E: Posg + ?Sized>(
    env: &E,
    set: &PolicySet<E::Memory>,
    p: &Particle<E>,
    a_i: Action,
    dist: &mut Dist,
    rng: &mut Rng,
) -> ParticleStep<E> {
    let actions = joint_action(set, a_i, p, dist, rng);
    let out = env.sample_step(&p.state, &actions, rng);
    let planner = set.planner().0;
    let mut mems = p.mems.clone();
    for (k, agent) in set.other_agents().enumerate() {
        env.update_memory(agent, &mut mems[k], actions[agent.0], &out.joint_obs[agent.0]);
    }
    ParticleStep {
        obs: out.joint_obs[planner],
        reward: out.joint_reward[planner],
        next: Particle {
            state: out.next_state,
            joint: p.joint,
            mems,
        },
    }
}

/// Draw one particle from the initial belief. Under the observation-first
/// convention the draw is rejected (returns `None`) unless the planner's
/// sampled initial observation equals `planner_obs`.
pub fn sample_initial_particle<E: Posg + ?Sized>(
    env: &E,
    set: &PolicySet<E::Memory>,
    convention: Convention,
    planner_obs: Option<&E::Obs>,
    rng: &mut Rng,
) -> Result<Option<Particle<E>>> {
    let state = env.sample_initial_state(rng);
    let joint = set.sample_joint_policy(rng);
    let mems = match convention {
        Convention::ActionFirst => set
            .other_agents()
            .map(|a| {
                env.empty_memory(a)
                    .ok_or_else(|| Error::Unsupported("environment has no action-first convention".into()))
            })
            .collect::<Result<Joint<_>>>()?,
        Convention::ObservationFirst => {
            let obs = env.sample_initial_obs(&state, rng);
            let o_i = planner_obs.ok_or_else(|| Error::Validation("observation-first belief needs o_i,0".into()))?;
            if obs[set.planner().0] != *o_i {
                return Ok(None);
            }
            set.other_agents().map(|a| env.initial_memory(a, &obs[a.0])).collect()
        }
    };
    Ok(Some(Particle { state, joint, mems }))
}

/// Up to `n` particles from the initial belief. Observation-first beliefs
/// condition on the planner's `o_i,0` by rejection; after `100·n` attempts a
/// short belief is returned, and an empty one is a depletion.
pub fn initial_belief<E: Posg + ?Sized>(
    env: &E,
    set: &PolicySet<E::Memory>,
    n: usize,
    convention: Convention,
    planner_obs: Option<&E::Obs>,
    rng: &mut Rng,
) -> Result<ParticleBelief<E>> {
    if n == 0 {
        return Err(Error::Validation("particle count must be at least 1".into()));
    }
    let mut particles = Vec::with_capacity(n);
    let budget = n * ATTEMPTS_PER_PARTICLE;
    let mut attempts = 0;
    while particles.len() < n && attempts < budget {
        attempts += 1;
        if let Some(p) = sample_initial_particle(env, set, convention, planner_obs, rng)? {
            particles.push(p);
        }
    }
    if particles.is_empty() {
        return Err(Error::Depletion(format!(
            "initial belief accepted no particle in {attempts} attempts"
        )));
    }
    Ok(ParticleBelief { particles })
}

/// Bookkeeping from one root belief update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct UpdateStats {
    /// Particles inherited from the search tree.
    pub inherited: usize,
    /// Particles added by rejection from the previous root belief.
    pub accepted: usize,
    pub attempts: usize,
    /// Particles added by re-filtering the full history from the initial belief.
    pub replayed: usize,
    pub fallback: bool,
}

/// Re-run the rejection filter over the whole planner `history` from a
/// fresh initial belief of `n` particles, stepping particles of the previous
/// step's population until one of them reproduces each observation. Gives up
/// (returning no particles) once a step has rejected `budget` draws without
/// accepting any. `attempts` counts every draw.
#[allow(clippy::too_many_arguments)]
fn refilter<E: Posg + ?Sized>(
    env: &E,
    set: &PolicySet<E::Memory>,
    history: &History<E::Obs>,
    convention: Convention,
    n: usize,
    budget: usize,
    attempts: &mut usize,
    dist: &mut Dist,
    rng: &mut Rng,
) -> Result<Vec<Particle<E>>> {
    let mut pop = Vec::with_capacity(n);
    let mut rejected = 0;
    while pop.len() < n && rejected < budget {
        *attempts += 1;
        match sample_initial_particle(env, set, convention, history.initial(), rng)? {
            Some(p) => pop.push(p),
            None => rejected += 1,
        }
    }
    for (a, o) in history.steps() {
        if pop.is_empty() {
            break;
        }
        let mut next = Vec::with_capacity(n);
        let mut rejected = 0;
        while next.len() < n && rejected < budget {
            *attempts += 1;
            let step = step_particle(env, set, &pop[rng.gen_range(0..pop.len())], *a, dist, rng);
            if step.obs == *o {
                next.push(step.next);
            } else {
                rejected += 1;
            }
        }
        pop = next;
    }
    Ok(pop)
}

/// Root belief after the planner played `a_i` and observed `o_i`.
///
/// Starts from the search tree's particles for that branch (`child`), then
/// tops up to `ceil((1 + 1/16)·target)` by stepping particles drawn from the
/// previous root belief `source` and keeping those that reproduce `o_i`.
/// After `100·target` rejected attempts it falls back to re-running the
/// filter over the whole planner `history` (which already ends with
/// `(a_i, o_i)`) from a fresh initial belief, which restores particle
/// diversity lost to earlier updates. A short but non-empty result is
/// accepted; if nothing reproduces the history the belief is depleted.
#[allow(clippy::too_many_arguments)]
pub fn update_root_belief<E: Posg + ?Sized>(
    env: &E,
    set: &PolicySet<E::Memory>,
    child: Vec<Particle<E>>,
    source: &[Particle<E>],
    a_i: Action,
    o_i: &E::Obs,
    target: usize,
    history: &History<E::Obs>,
    convention: Convention,
    rng: &mut Rng,
) -> Result<(ParticleBelief<E>, UpdateStats)> {
    let want = (TOP_UP_FACTOR * target as f64).ceil() as usize;
    let budget = target.max(1) * ATTEMPTS_PER_PARTICLE;
    let mut stats = UpdateStats {
        inherited: child.len(),
        ..UpdateStats::default()
    };
    let mut particles = child;
    let mut dist = Dist::new();
    let mut rejected = 0;
    while particles.len() < want && !source.is_empty() && rejected < budget {
        stats.attempts += 1;
        let p = &source[rng.gen_range(0..source.len())];
        let step = step_particle(env, set, p, a_i, &mut dist, rng);
        if step.obs == *o_i {
            particles.push(step.next);
            stats.accepted += 1;
        } else {
            rejected += 1;
        }
    }
    if particles.len() < want {
        stats.fallback = true;
        let missing = want - particles.len();
        let fresh = refilter(
            env,
            set,
            history,
            convention,
            target.max(missing),
            budget,
            &mut stats.attempts,
            &mut dist,
            rng,
        )?;
        stats.replayed = fresh.len().min(missing);
        particles.extend(fresh.into_iter().take(missing));
    }
    if particles.is_empty() {
        return Err(Error::Depletion(format!(
            "no particle reproduces the planner history after {} attempts",
            stats.attempts
        )));
    }
    Ok((ParticleBelief { particles }, stats))
}

/// A history-policy state of an explicit-table game: state, joint policy
/// index and the histories of the non-planner agents.
pub type ExactState = (usize, usize, Vec<History<usize>>);

/// Exact distribution over history-policy states given planner history
/// `h_i`, by the recursive Bayes update from the initial belief. The
/// convention follows `h_i`: with an initial observation it is
/// observation-first, otherwise action-first. Sorted by key.
pub fn exact_posterior(
    model: &TinyPosgModel,
    set: &PolicySet<History<usize>>,
    h_i: &History<usize>,
) -> Result<Vec<(ExactState, f64)>> {
    let planner = set.planner();
    let others: Vec<AgentId> = set.other_agents().collect();
    let mut belief: BTreeMap<ExactState, f64> = BTreeMap::new();
    for s in 0..model.n_states() {
        let b = model.b0(s);
        if b == 0.0 {
            continue;
        }
        for (j, &rho) in set.prior().iter().enumerate() {
            if rho == 0.0 {
                continue;
            }
            match h_i.initial() {
                None => {
                    *belief.entry((s, j, vec![History::empty(); others.len()])).or_default() += b * rho;
                }
                Some(&o_i) => {
                    let zi = model.initial_observation(planner, s, o_i);
                    if zi == 0.0 {
                        continue;
                    }
                    let sizes: Vec<usize> = others.iter().map(|&a| model.obs_count(a)).collect();
                    for obs in product(&sizes) {
                        let z: f64 = others
                            .iter()
                            .zip(&obs)
                            .map(|(&a, &o)| model.initial_observation(a, s, o))
                            .product();
                        if z > 0.0 {
                            let hists = obs.iter().map(|&o| History::with_initial(o)).collect();
                            *belief.entry((s, j, hists)).or_default() += b * rho * zi * z;
                        }
                    }
                }
            }
        }
    }
    normalise(&mut belief)?;
    let act_sizes: Vec<usize> = others.iter().map(|&a| model.action_count(a)).collect();
    let obs_sizes: Vec<usize> = others.iter().map(|&a| model.obs_count(a)).collect();
    let act_combos = product(&act_sizes);
    let obs_combos = product(&obs_sizes);
    let mut dist = Vec::new();
    for &(a_i, o_i) in h_i.steps() {
        let mut next: BTreeMap<ExactState, f64> = BTreeMap::new();
        for ((s, j, hists), &p) in &belief {
            let pis: Vec<Vec<f64>> = hists
                .iter()
                .enumerate()
                .map(|(k, h)| {
                    let pi = set.member(*j, k);
                    dist.clear();
                    dist.resize(pi.action_count(), 0.0);
                    pi.action_dist(h, &mut dist);
                    dist.clone()
                })
                .collect();
            for acts in &act_combos {
                let pa: f64 = acts.iter().enumerate().map(|(k, &a)| pis[k][a]).product();
                if pa == 0.0 {
                    continue;
                }
                let joint = full_joint(planner.0, a_i, acts);
                let ja = model.joint_index(&joint);
                for s2 in 0..model.n_states() {
                    let t = model.transition(*s, ja, s2);
                    let zi = model.observation(planner, s2, ja, o_i);
                    if t * zi == 0.0 {
                        continue;
                    }
                    for obs in &obs_combos {
                        let z: f64 = others
                            .iter()
                            .zip(obs)
                            .map(|(&a, &o)| model.observation(a, s2, ja, o))
                            .product();
                        if z == 0.0 {
                            continue;
                        }
                        let h2 = hists
                            .iter()
                            .zip(acts.iter().zip(obs))
                            .map(|(h, (&a, &o))| h.extended(a, o))
                            .collect();
                        *next.entry((s2, *j, h2)).or_default() += p * pa * t * zi * z;
                    }
                }
            }
            if next.len() > EXACT_CAP {
                return Err(Error::CapExceeded {
                    size: next.len(),
                    cap: EXACT_CAP,
                });
            }
        }
        normalise(&mut next)?;
        belief = next;
    }
    Ok(belief.into_iter().collect())
}

fn normalise<K>(m: &mut BTreeMap<K, f64>) -> Result<()> {
    let total: f64 = m.values().sum();
    if total <= 0.0 {
        return Err(Error::Validation("planner history has zero probability".into()));
    }
    for v in m.values_mut() {
        *v /= total;
    }
    Ok(())
}

/// Joint action with `a_i` inserted at the planner's seat.
pub(crate) fn full_joint(planner: usize, a_i: Action, others: &[Action]) -> Joint<Action> {
    let mut out = Joint::with_capacity(others.len() + 1);
    out.extend_from_slice(&others[..planner]);
    out.push(a_i);
    out.extend_from_slice(&others[planner..]);
    out
}

/// Every index vector `v` with `v[k] < sizes[k]`, in lexicographic order.
pub(crate) fn product(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::with_capacity(sizes.len())];
    for &n in sizes {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..n).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    out
}

/// Empirical distribution of a tiny-game particle belief, keyed like
/// [`exact_posterior`].
pub fn empirical(belief: &ParticleBelief<TinyPosgModel>) -> BTreeMap<ExactState, f64> {
    let mut m: BTreeMap<ExactState, f64> = BTreeMap::new();
    let w = 1.0 / belief.len().max(1) as f64;
    for p in &belief.particles {
        *m.entry((p.state, p.joint, p.mems.to_vec())).or_default() += w;
    }
    m
}

/// Total variation distance between two distributions given as sorted maps.
pub fn tv_maps<K: Ord>(p: &BTreeMap<K, f64>, q: &BTreeMap<K, f64>) -> f64 {
    let mut d = 0.0;
    for (k, &a) in p {
        d += (a - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, &b) in q {
        if !p.contains_key(k) {
            d += b.abs();
        }
    }
    d / 2.0
}

/// Total variation distance. Equals the 1-Wasserstein distance under the
/// 0/1 ground metric between actions.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions over different supports");
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeliefMetrics {
    /// Fraction of particles carrying the true joint policy.
    pub prob_true_type: f64,
    /// Distance between the belief's predicted action distribution of the
    /// other agents and their true one, averaged over those agents.
    pub action_dist_distance: f64,
}

/// Belief accuracy against the true joint policy `true_joint`.
/// `true_dists[k]` is the `k`-th other agent's true action distribution at
/// this step; the prediction is the particle mean of `π_-i(· | h_-i)`.
pub fn belief_metrics<E: Posg + ?Sized>(
    particles: &[Particle<E>],
    set: &PolicySet<E::Memory>,
    true_joint: usize,
    true_dists: &[Dist],
) -> BeliefMetrics {
    let n = particles.len().max(1) as f64;
    let correct = particles.iter().filter(|p| p.joint == true_joint).count();
    let mut distance = 0.0;
    let mut buf = Dist::new();
    for (k, truth) in true_dists.iter().enumerate() {
        let mut est = vec![0.0; truth.len()];
        for p in particles {
            let pi = set.member(p.joint, k);
            buf.clear();
            buf.resize(pi.action_count(), 0.0);
            pi.action_dist(&p.mems[k], &mut buf);
            for (e, b) in est.iter_mut().zip(&buf) {
                *e += b / n;
            }
        }
        distance += total_variation(&est, truth);
    }
    BeliefMetrics {
        prob_true_type: correct as f64 / n,
        action_dist_distance: if true_dists.is_empty() {
            0.0
        } else {
            distance / true_dists.len() as f64
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::tiny::make_tiny_posg;
    use crate::policies::tiny::{build_set, default_manifest};
    use crate::posg::rng_from_seed;
    use smallvec::smallvec;

    fn tiny(id: &str) -> (TinyPosgModel, PolicySet<History<usize>>) {
        let m = make_tiny_posg(id).unwrap();
        let set = build_set(&m, &default_manifest(&m).unwrap()).unwrap();
        (m, set)
    }

    #[test]
    fn action_first_point_masses_are_identical() {
        let (m, set) = tiny("noop");
        let set = set.with_point_prior(1);
        let mut rng = rng_from_seed(1);
        let b = initial_belief(&m, &set, 50, Convention::ActionFirst, None, &mut rng).unwrap();
        assert!(b.particles.iter().all(|p| p.state == 0 && p.joint == 1 && p.mems[0].is_empty()));
    }

    #[test]
    fn observation_first_matches_exact_initial_belief() {
        let (m, set) = tiny("tiger");
        let mut rng = rng_from_seed(2);
        let b = initial_belief(&m, &set, 10_000, Convention::ObservationFirst, Some(&1), &mut rng).unwrap();
        let exact: BTreeMap<_, _> = exact_posterior(&m, &set, &History::with_initial(1)).unwrap().into_iter().collect();
        // Hearing right with 0.7 accuracy: P(TR) = 0.7.
        assert!((exact[&(1, 0, vec![History::with_initial(0)])] - 0.7).abs() < 1e-12);
        assert!(tv_maps(&empirical(&b), &exact) <= 0.02);
    }

    #[test]
    fn one_step_update_matches_hand_bayes() {
        // reveal: type-a opens with 1, type-b always plays 0; the planner sees
        // the other's action, so observing 1 identifies type-a.
        let (m, set) = tiny("reveal");
        let h = History::with_initial(0).extended(0, 1);
        let post = exact_posterior(&m, &set, &h).unwrap();
        assert_eq!(post.len(), 1);
        let ((s, j, hs), p) = &post[0];
        assert_eq!((*s, *j, *p), (1, 0, 1.0));
        assert_eq!(hs[0], History::with_initial(0).extended(1, 0));
        // Observing 0 identifies type-b.
        let post = exact_posterior(&m, &set, &History::with_initial(0).extended(1, 0)).unwrap();
        assert!(post.iter().all(|((_, j, _), _)| *j == 1));
    }

    #[test]
    fn uninformative_observation_keeps_prior() {
        let (m, set) = tiny("noop");
        let h = History::with_initial(0).extended(0, 0).extended(0, 0);
        let post = exact_posterior(&m, &set, &h).unwrap();
        let mut marg = [0.0; 2];
        for ((_, j, _), p) in &post {
            marg[*j] += p;
        }
        assert!((marg[0] - 0.5).abs() < 1e-12 && (marg[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn top_up_reaches_target_and_identifies_type() {
        let (m, set) = tiny("reveal");
        let mut rng = rng_from_seed(3);
        let root = initial_belief(&m, &set, 100, Convention::ObservationFirst, Some(&0), &mut rng).unwrap();
        let h = History::with_initial(0).extended(0, 1);
        let (b, stats) = update_root_belief(
            &m,
            &set,
            Vec::new(),
            &root.particles,
            0,
            &1,
            100,
            &h,
            Convention::ObservationFirst,
            &mut rng,
        )
        .unwrap();
        assert!(b.len() >= 107);
        assert!(!stats.fallback);
        assert!(b.particles.iter().all(|p| p.joint == 0));
    }

    #[test]
    fn deterministic_observation_always_accepted() {
        let (m, set) = tiny("noop");
        let mut rng = rng_from_seed(4);
        let root = initial_belief(&m, &set, 64, Convention::ObservationFirst, Some(&0), &mut rng).unwrap();
        let h = History::with_initial(0).extended(0, 0);
        let (b, stats) =
            update_root_belief(&m, &set, Vec::new(), &root.particles, 0, &0, 64, &h, Convention::ObservationFirst, &mut rng)
                .unwrap();
        assert_eq!(stats.accepted, stats.attempts);
        assert_eq!(b.len(), 68);
    }

    #[test]
    fn impossible_history_depletes() {
        let (m, set) = tiny("tiger");
        let mut rng = rng_from_seed(5);
        // Observation 2 never follows a listen from a live tiger state.
        let h = History::with_initial(0).extended(0, 2);
        let root = initial_belief(&m, &set, 10, Convention::ObservationFirst, Some(&0), &mut rng).unwrap();
        let err = update_root_belief(&m, &set, Vec::new(), &root.particles, 0, &2, 10, &h, Convention::ObservationFirst, &mut rng);
        assert!(matches!(err, Err(Error::Depletion(_))));
    }

    #[test]
    fn metrics_examples() {
        let (m, set) = tiny("noop");
        let mut rng = rng_from_seed(6);
        let b = initial_belief(&m, &set.with_point_prior(0), 20, Convention::ObservationFirst, Some(&0), &mut rng).unwrap();
        let truth: Dist = smallvec![0.8, 0.2];
        let got = belief_metrics(&b.particles, &set, 0, &[truth]);
        assert_eq!(got.prob_true_type, 1.0);
        assert!(got.action_dist_distance.abs() < 1e-12);
        assert!((total_variation(&[0.5, 0.5], &[1.0, 0.0]) - 0.5).abs() < 1e-12);
    }
}
