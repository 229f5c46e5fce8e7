//! Exact machinery for explicit-table games.
//!
//! Fixing the other agents' policy set and prior turns the game into a
//! single-agent POMDP over history-policy states `w = <s, π_-i, h_-i>`:
//!
//! - `T̄(w, a_i, w') = π_-i(a_-i | h_-i) · T(s, a, s') · Z_-i(s', a, o_-i)`
//!   when `w'` keeps the policy and extends `h_-i` by `(a_-i, o_-i)`, else 0;
//! - `Z̄(w', a_i, o_i) = Z_i(s', a, o_i)` with `a_-i` read off `w'.h_-i`;
//! - `R̄(w, a_i) = Σ π_-i(a_-i | h_-i) · R_i(s, a)`.
//!
//! Values are finite-horizon and exact: beliefs are keyed by planner history
//! and solved by backward induction. No randomness except in the sampled
//! rollout distribution.

use std::collections::{BTreeMap, HashMap};

use rand::Rng as _;
use serde::Serialize;

use crate::belief::{full_joint, initial_belief, product, step_particle, Convention, ExactState};
use crate::envs::tiny::TinyPosgModel;
use crate::error::{Error, Result};
use crate::policies::{Dist, HistoryValues, Policy, PolicySet, SharedPolicy, Valued};
use crate::posg::{derive_seed, rng_from_seed, AgentId, Action, History, Posg, Rng};

/// Largest number of history-policy states enumerated.
pub const STATE_CAP: usize = 200_000;

/// Sparse belief over derived-POMDP states, sorted by state index.
pub type SparseBelief = Vec<(usize, f64)>;

/// Distribution over planner histories.
pub type HistoryDist = BTreeMap<History<usize>, f64>;

/// The derived POMDP, enumerated up to `horizon` steps.
pub struct DerivedPomdp<'a> {
    model: &'a TinyPosgModel,
    set: &'a PolicySet<History<usize>>,
    convention: Convention,
    horizon: usize,
    pub states: Vec<ExactState>,
    index: HashMap<ExactState, usize>,
    /// `b̄_0` before the planner's initial observation.
    pub b0: SparseBelief,
    /// `trans[w][a_i]`: successors with probabilities (empty for the last layer).
    pub trans: Vec<Vec<Vec<(usize, f64)>>>,
    /// `reward[w][a_i] = R̄(w, a_i)`.
    pub reward: Vec<Vec<f64>>,
}

fn other_dist(set: &PolicySet<History<usize>>, joint: usize, k: usize, h: &History<usize>) -> Dist {
    let pi = set.member(joint, k);
    let mut d: Dist = smallvec::smallvec![0.0; pi.action_count()];
    pi.action_dist(h, &mut d);
    d
}

fn policy_dist(pi: &dyn Policy<History<usize>>, h: &History<usize>) -> Dist {
    let mut d: Dist = smallvec::smallvec![0.0; pi.action_count()];
    pi.action_dist(h, &mut d);
    d
}

impl<'a> DerivedPomdp<'a> {
    pub fn build(
        model: &'a TinyPosgModel,
        set: &'a PolicySet<History<usize>>,
        convention: Convention,
        horizon: usize,
    ) -> Result<Self> {
        let others: Vec<AgentId> = set.other_agents().collect();
        let planner = set.planner();
        let mut me = Self {
            model,
            set,
            convention,
            horizon,
            states: Vec::new(),
            index: HashMap::new(),
            b0: Vec::new(),
            trans: Vec::new(),
            reward: Vec::new(),
        };
        let mut b0: BTreeMap<usize, f64> = BTreeMap::new();
        let obs_sizes: Vec<usize> = others.iter().map(|&a| model.obs_count(a)).collect();
        let obs_combos = product(&obs_sizes);
        for s in 0..model.n_states() {
            for (j, &rho) in set.prior().iter().enumerate() {
                let base = model.b0(s) * rho;
                if base == 0.0 {
                    continue;
                }
                match convention {
                    Convention::ActionFirst => {
                        let w = me.intern((s, j, vec![History::empty(); others.len()]))?;
                        *b0.entry(w).or_default() += base;
                    }
                    Convention::ObservationFirst => {
                        for obs in &obs_combos {
                            let z: f64 = others
                                .iter()
                                .zip(obs)
                                .map(|(&a, &o)| model.initial_observation(a, s, o))
                                .product();
                            if z > 0.0 {
                                let w = me.intern((s, j, obs.iter().map(|&o| History::with_initial(o)).collect()))?;
                                *b0.entry(w).or_default() += base * z;
                            }
                        }
                    }
                }
            }
        }
        me.b0 = b0.into_iter().collect();
        let n_actions = model.action_count(planner);
        let act_sizes: Vec<usize> = others.iter().map(|&a| model.action_count(a)).collect();
        let act_combos = product(&act_sizes);
        let mut layer: Vec<usize> = me.b0.iter().map(|&(w, _)| w).collect();
        for _ in 0..horizon {
            let mut next_layer = Vec::new();
            for &w in &layer {
                let (s, j, hists) = me.states[w].clone();
                let pis: Vec<Dist> = hists.iter().enumerate().map(|(k, h)| other_dist(set, j, k, h)).collect();
                let mut rows = Vec::with_capacity(n_actions);
                let mut rewards = Vec::with_capacity(n_actions);
                for a_i in 0..n_actions {
                    let mut row: BTreeMap<usize, f64> = BTreeMap::new();
                    let mut r = 0.0;
                    for acts in &act_combos {
                        let pa: f64 = acts.iter().enumerate().map(|(k, &a)| pis[k][a]).product();
                        if pa == 0.0 {
                            continue;
                        }
                        let ja = model.joint_index(&full_joint(planner.0, a_i, acts));
                        r += pa * model.reward(planner, s, ja);
                        for s2 in 0..model.n_states() {
                            let t = model.transition(s, ja, s2);
                            if t == 0.0 {
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
                                let before = me.states.len();
                                let w2 = me.intern((s2, j, h2))?;
                                if me.states.len() > before {
                                    next_layer.push(w2);
                                }
                                *row.entry(w2).or_default() += pa * t * z;
                            }
                        }
                    }
                    rows.push(row.into_iter().collect());
                    rewards.push(r);
                }
                me.set_row(w, rows, rewards);
            }
            layer = next_layer;
        }
        me.trans.resize(me.states.len(), Vec::new());
        me.reward.resize(me.states.len(), Vec::new());
        Ok(me)
    }

    fn intern(&mut self, w: ExactState) -> Result<usize> {
        if let Some(&i) = self.index.get(&w) {
            return Ok(i);
        }
        if self.states.len() >= STATE_CAP {
            return Err(Error::CapExceeded {
                size: self.states.len() + 1,
                cap: STATE_CAP,
            });
        }
        let i = self.states.len();
        self.states.push(w.clone());
        self.index.insert(w, i);
        Ok(i)
    }

    fn set_row(&mut self, w: usize, rows: Vec<Vec<(usize, f64)>>, rewards: Vec<f64>) {
        if self.trans.len() <= w {
            self.trans.resize(w + 1, Vec::new());
            self.reward.resize(w + 1, Vec::new());
        }
        self.trans[w] = rows;
        self.reward[w] = rewards;
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_actions(&self) -> usize {
        self.model.action_count(self.set.planner())
    }

    pub fn n_obs(&self) -> usize {
        self.model.obs_count(self.set.planner())
    }

    /// `Z̄(w', a_i, o_i)`; the others' last actions are read off `w'`.
    pub fn obs_prob(&self, w2: usize, a_i: Action, o: usize) -> f64 {
        let (s2, _, hists) = &self.states[w2];
        let acts: Vec<Action> = hists.iter().map(|h| h.last_action().expect("successor state")).collect();
        let ja = self.model.joint_index(&full_joint(self.set.planner().0, a_i, &acts));
        self.model.observation(self.set.planner(), *s2, ja, o)
    }

    /// Probability of the planner's initial observation in state `w`.
    pub fn initial_obs_prob(&self, w: usize, o: usize) -> f64 {
        self.model.initial_observation(self.set.planner(), self.states[w].0, o)
    }

    /// Belief after the planner's initial history element (the prior itself
    /// under the action-first convention), with its probability.
    fn root(&self, h0: &History<usize>) -> Result<(SparseBelief, f64)> {
        match (self.convention, h0.initial()) {
            (Convention::ActionFirst, None) => Ok((self.b0.clone(), 1.0)),
            (Convention::ObservationFirst, Some(&o)) => {
                if o >= self.n_obs() {
                    return Err(Error::Validation(format!("observation {o} out of range")));
                }
                let raw: Vec<(usize, f64)> = self
                    .b0
                    .iter()
                    .map(|&(w, p)| (w, p * self.initial_obs_prob(w, o)))
                    .filter(|&(_, p)| p > 0.0)
                    .collect();
                normalised(raw)
            }
            _ => Err(Error::Validation("history does not match the derived model's convention".into())),
        }
    }

    /// `(P(o | b, a), b'_o)` for every observation with positive probability.
    pub fn successors(&self, b: &[(usize, f64)], a: Action) -> Vec<(usize, f64, SparseBelief)> {
        let mut per_obs: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); self.n_obs()];
        for &(w, p) in b {
            for &(w2, t) in &self.trans[w][a] {
                for (o, m) in per_obs.iter_mut().enumerate() {
                    let z = self.obs_prob(w2, a, o);
                    if z > 0.0 {
                        *m.entry(w2).or_default() += p * t * z;
                    }
                }
            }
        }
        per_obs
            .into_iter()
            .enumerate()
            .filter_map(|(o, m)| {
                let raw: Vec<(usize, f64)> = m.into_iter().collect();
                normalised(raw).ok().map(|(b2, po)| (o, po, b2))
            })
            .collect()
    }

    /// Exact belief over history-policy states after planner history `h`.
    pub fn belief_at(&self, h: &History<usize>) -> Result<SparseBelief> {
        if h.len() > self.horizon {
            return Err(Error::Validation(format!("history longer than horizon {}", self.horizon)));
        }
        let (mut b, _) = self.root(h)?;
        for &(a, o) in h.steps() {
            b = self
                .successors(&b, a)
                .into_iter()
                .find(|(o2, _, _)| *o2 == o)
                .map(|(_, _, b2)| b2)
                .ok_or_else(|| Error::Validation("planner history has zero probability".into()))?;
        }
        Ok(b)
    }

    fn expected_reward(&self, b: &[(usize, f64)], a: Action) -> f64 {
        b.iter().map(|&(w, p)| p * self.reward[w][a]).sum()
    }

    /// `Q*_k(b, a)` for every action and `V*_k(b)`, `k` steps to go.
    fn solve(&self, b: &[(usize, f64)], k: usize) -> (f64, Vec<f64>) {
        if k == 0 {
            return (0.0, vec![0.0; self.n_actions()]);
        }
        let gamma = self.model.spec().gamma;
        let q: Vec<f64> = (0..self.n_actions())
            .map(|a| {
                let future: f64 = self.successors(b, a).iter().map(|(_, po, b2)| po * self.solve(b2, k - 1).0).sum();
                self.expected_reward(b, a) + gamma * future
            })
            .collect();
        (q.iter().cloned().fold(f64::NEG_INFINITY, f64::max), q)
    }

    /// `V^π_k` of planner policy `pi` from belief `b` at history `h`,
    /// recording every visited history's value in `table`.
    fn evaluate(
        &self,
        pi: &dyn Policy<History<usize>>,
        b: &[(usize, f64)],
        h: &History<usize>,
        k: usize,
        table: &mut HashMap<History<usize>, f64>,
    ) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let gamma = self.model.spec().gamma;
        let d = policy_dist(pi, h);
        let mut v = 0.0;
        for (a, &pa) in d.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            let mut q = self.expected_reward(b, a);
            for (o, po, b2) in self.successors(b, a) {
                q += gamma * po * self.evaluate(pi, &b2, &h.extended(a, o), k - 1, table);
            }
            v += pa * q;
        }
        table.insert(h.clone(), v);
        v
    }
}

fn normalised(raw: Vec<(usize, f64)>) -> Result<(SparseBelief, f64)> {
    let total: f64 = raw.iter().map(|p| p.1).sum();
    if total <= 0.0 {
        return Err(Error::Validation("zero-probability observation".into()));
    }
    Ok((raw.into_iter().map(|(w, p)| (w, p / total)).collect(), total))
}

/// Optimal finite-horizon value and action values at a planner history.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalValue {
    pub value: f64,
    pub q: Vec<f64>,
    /// Actions within `1e-9` of the best.
    pub optimal_actions: Vec<Action>,
}

/// `V*` at planner history `h` with `horizon - len(h)` steps to go.
pub fn optimal_value(derived: &DerivedPomdp, h: &History<usize>) -> Result<OptimalValue> {
    let b = derived.belief_at(h)?;
    let (value, q) = derived.solve(&b, derived.horizon() - h.len());
    let optimal_actions = (0..q.len()).filter(|&a| q[a] >= value - 1e-9).collect();
    Ok(OptimalValue {
        value,
        q,
        optimal_actions,
    })
}

/// `V̄^π` at planner history `h`, with `horizon - len(h)` steps to go.
pub fn derived_policy_value(derived: &DerivedPomdp, pi: &dyn Policy<History<usize>>, h: &History<usize>) -> Result<f64> {
    let b = derived.belief_at(h)?;
    Ok(derived.evaluate(pi, &b, h, derived.horizon() - h.len(), &mut HashMap::new()))
}

/// Exact values `V^π(h)` of planner policy `pi` for every planner history
/// reachable within the derived model's horizon.
pub fn exact_policy_values(derived: &DerivedPomdp, pi: &dyn Policy<History<usize>>) -> Result<HistoryValues> {
    let mut table = HashMap::new();
    match derived.convention {
        Convention::ActionFirst => {
            derived.evaluate(pi, &derived.b0, &History::empty(), derived.horizon, &mut table);
        }
        Convention::ObservationFirst => {
            for o in 0..derived.n_obs() {
                let h = History::with_initial(o);
                if let Ok((b, _)) = derived.root(&h) {
                    derived.evaluate(pi, &b, &h, derived.horizon, &mut table);
                }
            }
        }
    }
    Ok(HistoryValues {
        table,
        horizon: derived.horizon,
    })
}

/// The policy set with every planner candidate carrying its exact values.
pub fn with_exact_values(
    model: &TinyPosgModel,
    set: &PolicySet<History<usize>>,
    horizon: usize,
) -> Result<PolicySet<History<usize>>> {
    let derived = DerivedPomdp::build(model, set, Convention::ObservationFirst, horizon)?;
    let values = set
        .candidates()
        .iter()
        .map(|c| exact_policy_values(&derived, c.policy.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let mut values = values.into_iter();
    Ok(set.clone().map_candidates(|_, c| {
        let v = values.next().expect("one table per candidate");
        let shared: SharedPolicy<History<usize>> = Valued::shared(c.policy.clone(), std::sync::Arc::new(v));
        shared
    }))
}

/// Expected discounted return of planner policy `pi` over `horizon` steps,
/// computed directly on the game by enumerating joint trajectories (no
/// derived model). With `initial_obs` the expectation is conditioned on the
/// planner's initial observation (observation-first); with `None` the game
/// starts action-first.
pub fn direct_policy_value(
    model: &TinyPosgModel,
    set: &PolicySet<History<usize>>,
    pi: &dyn Policy<History<usize>>,
    initial_obs: Option<usize>,
    horizon: usize,
) -> Result<f64> {
    let planner = set.planner();
    let others: Vec<AgentId> = set.other_agents().collect();
    let obs_combos = product(&others.iter().map(|&a| model.obs_count(a)).collect::<Vec<_>>());
    let mut total = 0.0;
    let mut mass = 0.0;
    for s in 0..model.n_states() {
        for (j, &rho) in set.prior().iter().enumerate() {
            let base = model.b0(s) * rho;
            if base == 0.0 {
                continue;
            }
            match initial_obs {
                None => {
                    let hists = vec![History::empty(); others.len()];
                    total += base * direct(model, set, pi, s, j, &History::empty(), &hists, horizon);
                    mass += base;
                }
                Some(o_i) => {
                    let zi = model.initial_observation(planner, s, o_i);
                    for obs in &obs_combos {
                        let z: f64 = others
                            .iter()
                            .zip(obs)
                            .map(|(&a, &o)| model.initial_observation(a, s, o))
                            .product::<f64>()
                            * zi;
                        if z == 0.0 {
                            continue;
                        }
                        let hists: Vec<History<usize>> = obs.iter().map(|&o| History::with_initial(o)).collect();
                        total += base * z * direct(model, set, pi, s, j, &History::with_initial(o_i), &hists, horizon);
                        mass += base * z;
                    }
                }
            }
        }
    }
    if mass <= 0.0 {
        return Err(Error::Validation("initial observation has zero probability".into()));
    }
    Ok(total / mass)
}

#[allow(clippy::too_many_arguments)]
fn direct(
    model: &TinyPosgModel,
    set: &PolicySet<History<usize>>,
    pi: &dyn Policy<History<usize>>,
    s: usize,
    j: usize,
    h_i: &History<usize>,
    hists: &[History<usize>],
    k: usize,
) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let planner = set.planner();
    let gamma = model.spec().gamma;
    let others: Vec<AgentId> = set.other_agents().collect();
    let pi_i = policy_dist(pi, h_i);
    let pis: Vec<Dist> = hists.iter().enumerate().map(|(k, h)| other_dist(set, j, k, h)).collect();
    let act_combos = product(&others.iter().map(|&a| model.action_count(a)).collect::<Vec<_>>());
    let obs_combos = product(&others.iter().map(|&a| model.obs_count(a)).collect::<Vec<_>>());
    let mut v = 0.0;
    for (a_i, &pa_i) in pi_i.iter().enumerate() {
        if pa_i == 0.0 {
            continue;
        }
        for acts in &act_combos {
            let pa: f64 = pa_i * acts.iter().enumerate().map(|(k, &a)| pis[k][a]).product::<f64>();
            if pa == 0.0 {
                continue;
            }
            let ja = model.joint_index(&full_joint(planner.0, a_i, acts));
            v += pa * model.reward(planner, s, ja);
            for s2 in 0..model.n_states() {
                let t = model.transition(s, ja, s2);
                if t == 0.0 {
                    continue;
                }
                for o_i in 0..model.obs_count(planner) {
                    let zi = model.observation(planner, s2, ja, o_i);
                    if zi == 0.0 {
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
                        let h2: Vec<History<usize>> = hists
                            .iter()
                            .zip(acts.iter().zip(obs))
                            .map(|(h, (&a, &o))| h.extended(a, o))
                            .collect();
                        v += pa * t * zi * z * gamma * direct(model, set, pi, s2, j, &h_i.extended(a_i, o_i), &h2, k - 1);
                    }
                }
            }
        }
    }
    v
}

/// Exact distribution of the planner's history `depth` steps after `h0`
/// when it follows `pi`, by forward enumeration in the derived model.
pub fn exact_rollout_distribution(
    derived: &DerivedPomdp,
    pi: &dyn Policy<History<usize>>,
    h0: &History<usize>,
    depth: usize,
) -> Result<HistoryDist> {
    let b = derived.belief_at(h0)?;
    let mut frontier = vec![(h0.clone(), 1.0, b)];
    for _ in 0..depth {
        let mut next = Vec::new();
        for (h, p, b) in frontier {
            let d = policy_dist(pi, &h);
            for (a, &pa) in d.iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                for (o, po, b2) in derived.successors(&b, a) {
                    next.push((h.extended(a, o), p * pa * po, b2));
                }
            }
        }
        frontier = next;
    }
    let mut out = HistoryDist::new();
    for (h, p, _) in frontier {
        *out.entry(h).or_default() += p;
    }
    Ok(out)
}

/// Empirical distribution of the planner's history `depth` steps after its
/// initial observation `o0`, from `k` simulations that each sample a
/// history-policy state from the root belief and play `pi` in the game.
pub fn sampled_rollout_distribution(
    model: &TinyPosgModel,
    set: &PolicySet<History<usize>>,
    pi: &dyn Policy<History<usize>>,
    o0: usize,
    depth: usize,
    k: usize,
    seed: u64,
) -> Result<HistoryDist> {
    let mut rng = rng_from_seed(seed);
    let root = initial_belief(model, set, k.min(10_000), Convention::ObservationFirst, Some(&o0), &mut rng)?;
    let mut counts: BTreeMap<History<usize>, usize> = BTreeMap::new();
    let mut dist = Dist::new();
    for sim in 0..k {
        let mut rng: Rng = rng_from_seed(derive_seed(seed, sim as u64 + 1));
        let mut p = root.particles[rng.gen_range(0..root.particles.len())].clone();
        let mut h = History::with_initial(o0);
        for _ in 0..depth {
            let a = crate::policies::sample_action(pi, &h, &mut rng);
            let step = step_particle(model, set, &p, a, &mut dist, &mut rng);
            h.push(a, step.obs);
            p = step.next;
        }
        *counts.entry(h).or_default() += 1;
    }
    Ok(counts.into_iter().map(|(h, c)| (h, c as f64 / k as f64)).collect())
}

/// Oracle summary for one instance, exported as JSON.
#[derive(Debug, Clone, Serialize)]
pub struct OracleRecord {
    pub instance: String,
    pub horizon: usize,
    pub initial_obs: usize,
    pub v_star: f64,
    pub q_star: Vec<f64>,
    pub optimal_actions: Vec<Action>,
}

/// Optimal values at every possible initial planner observation.
pub fn oracle_records(model: &TinyPosgModel, set: &PolicySet<History<usize>>, horizon: usize) -> Result<Vec<OracleRecord>> {
    let derived = DerivedPomdp::build(model, set, Convention::ObservationFirst, horizon)?;
    let mut out = Vec::new();
    for o in 0..derived.n_obs() {
        let h = History::with_initial(o);
        if derived.root(&h).is_err() {
            continue;
        }
        let v = optimal_value(&derived, &h)?;
        out.push(OracleRecord {
            instance: model.id().to_string(),
            horizon,
            initial_obs: o,
            v_star: v.value,
            q_star: v.q,
            optimal_actions: v.optimal_actions,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::tiny::{make_tiny_posg, INSTANCES};
    use crate::policies::tiny::{build_set, default_manifest};

    fn tiny(id: &str) -> (TinyPosgModel, PolicySet<History<usize>>) {
        let m = make_tiny_posg(id).unwrap();
        let set = build_set(&m, &default_manifest(&m).unwrap()).unwrap();
        (m, set)
    }

    #[test]
    fn derived_rows_are_stochastic_and_keep_the_policy() {
        for id in INSTANCES {
            let (m, set) = tiny(id);
            let d = DerivedPomdp::build(&m, &set, Convention::ObservationFirst, 3).unwrap();
            for (w, rows) in d.trans.iter().enumerate() {
                for (a, row) in rows.iter().enumerate() {
                    let sum: f64 = row.iter().map(|p| p.1).sum();
                    assert!((sum - 1.0).abs() < 1e-9, "{id}: T̄ row {w},{a} sums to {sum}");
                    assert!(row.iter().all(|&(w2, _)| d.states[w2].1 == d.states[w].1));
                    for &(w2, _) in row {
                        let z: f64 = (0..d.n_obs()).map(|o| d.obs_prob(w2, a, o)).sum();
                        assert!((z - 1.0).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn horizon_zero_is_worth_nothing() {
        let (m, set) = tiny("coord");
        let d = DerivedPomdp::build(&m, &set, Convention::ObservationFirst, 0).unwrap();
        assert_eq!(optimal_value(&d, &History::with_initial(0)).unwrap().value, 0.0);
    }

    #[test]
    fn noop_value_by_hand() {
        // The planner is paid 1 whenever the other plays 0: 0.55 per step on
        // average over the two types, discounted over five steps.
        let (m, set) = tiny("noop");
        let d = DerivedPomdp::build(&m, &set, Convention::ObservationFirst, 5).unwrap();
        let v = optimal_value(&d, &History::with_initial(0)).unwrap();
        assert!((v.value - 0.55 * 1.9375).abs() < 1e-12);
    }

    #[test]
    fn marginal_reward_by_hand() {
        // coord, calm state, planner L against lefty (0.9 L): 0.9 - 0.1.
        let (m, set) = tiny("coord");
        let d = DerivedPomdp::build(&m, &set, Convention::ObservationFirst, 1).unwrap();
        let w = d.states.iter().position(|(s, j, _)| *s == 0 && *j == 0).unwrap();
        assert!((d.reward[w][0] - 0.8).abs() < 1e-12);
        assert!((d.reward[w][1] + 0.8).abs() < 1e-12);
        assert!((d.reward[w][2] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn derived_and_direct_evaluation_agree() {
        let (m, set) = tiny("reveal");
        let d = DerivedPomdp::build(&m, &set, Convention::ObservationFirst, 4).unwrap();
        for c in set.candidates() {
            let a = derived_policy_value(&d, c.policy.as_ref(), &History::with_initial(0)).unwrap();
            let b = direct_policy_value(&m, &set, c.policy.as_ref(), Some(0), 4).unwrap();
            assert!((a - b).abs() < 1e-9, "{}: {a} vs {b}", c.id);
        }
    }

    #[test]
    fn exact_belief_matches_bayes_module() {
        let (m, set) = tiny("tiger");
        let d = DerivedPomdp::build(&m, &set, Convention::ObservationFirst, 3).unwrap();
        let h = History::with_initial(0).extended(0, 0).extended(0, 1);
        let b = d.belief_at(&h).unwrap();
        let post = crate::belief::exact_posterior(&m, &set, &h).unwrap();
        assert_eq!(b.len(), post.len());
        for (key, q) in &post {
            let idx = d.index[key];
            let pb = b.iter().find(|x| x.0 == idx).unwrap().1;
            assert!((pb - q).abs() < 1e-12);
        }
    }
}
