//! Policy sets: the planner's candidate policies `Π_i`, the other agents'
//! policies, and the prior `ρ` over joint assignments of the other agents.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use super::{Policy, PolicyId, SharedPolicy};
use crate::error::{Error, Result};
use crate::posg::{sample_categorical, AgentId, Rng};

pub struct PolicyEntry<M> {
    pub id: PolicyId,
    pub policy: SharedPolicy<M>,
}

impl<M> Clone for PolicyEntry<M> {
    fn clone(&self) -> Self {
        Self {
            id: self.id.clone(),
            policy: Arc::clone(&self.policy),
        }
    }
}

impl<M> fmt::Debug for PolicyEntry<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id)
    }
}

impl<M> PolicyEntry<M> {
    pub fn new(id: impl Into<PolicyId>, policy: SharedPolicy<M>) -> Self {
        Self { id: id.into(), policy }
    }
}

/// One policy per non-planner agent, in agent order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointPolicy {
    pub id: String,
    pub members: Vec<usize>,
}

pub fn joint_id(member_ids: &[&str]) -> String {
    member_ids.join("+")
}

pub struct PolicySet<M> {
    planner: AgentId,
    n_agents: usize,
    candidates: Vec<PolicyEntry<M>>,
    others: Vec<PolicyEntry<M>>,
    joint: Vec<JointPolicy>,
    prior: Vec<f64>,
    symmetric: bool,
}

impl<M> Clone for PolicySet<M> {
    fn clone(&self) -> Self {
        Self {
            planner: self.planner,
            n_agents: self.n_agents,
            candidates: self.candidates.clone(),
            others: self.others.clone(),
            joint: self.joint.clone(),
            prior: self.prior.clone(),
            symmetric: self.symmetric,
        }
    }
}

impl<M> fmt::Debug for PolicySet<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PolicySet")
            .field("planner", &self.planner)
            .field("candidates", &self.candidates)
            .field("joint", &self.joint.iter().map(|j| &j.id).collect::<Vec<_>>())
            .field("prior", &self.prior)
            .finish()
    }
}

fn check_unique<M>(entries: &[PolicyEntry<M>], what: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for e in entries {
        if !seen.insert(e.id.as_str()) {
            return Err(Error::DuplicatePolicy(format!("{what}: {}", e.id)));
        }
    }
    Ok(())
}

impl<M> PolicySet<M> {
    /// `prior` lists joint assignments of the other agents (ids, in agent
    /// order) with their weights, which must sum to 1.
    pub fn new(
        planner: AgentId,
        n_agents: usize,
        candidates: Vec<PolicyEntry<M>>,
        others: Vec<PolicyEntry<M>>,
        prior: Vec<(Vec<PolicyId>, f64)>,
        symmetric: bool,
    ) -> Result<Self> {
        if n_agents < 2 || planner.0 >= n_agents {
            return Err(Error::Validation(format!("planner {planner} invalid for {n_agents} agents")));
        }
        if candidates.is_empty() || others.is_empty() || prior.is_empty() {
            return Err(Error::Validation("policy set needs candidates, other policies and a prior".into()));
        }
        check_unique(&candidates, "planner policies")?;
        check_unique(&others, "other policies")?;
        let n_act = candidates[0].policy.action_count();
        if candidates.iter().any(|c| c.policy.action_count() != n_act) {
            return Err(Error::Validation("planner policies disagree on the action count".into()));
        }
        let total: f64 = prior.iter().map(|p| p.1).sum();
        if prior.iter().any(|p| !(p.1 >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!("prior weights sum to {total}, expected 1")));
        }
        let mut joint = Vec::with_capacity(prior.len());
        let mut weights = Vec::with_capacity(prior.len());
        let mut ids = HashSet::new();
        for (members, w) in prior {
            if members.len() != n_agents - 1 {
                return Err(Error::Validation(format!(
                    "joint policy {members:?} must name {} policies",
                    n_agents - 1
                )));
            }
            let idx = members
                .iter()
                .map(|m| {
                    others
                        .iter()
                        .position(|e| &e.id == m)
                        .ok_or_else(|| Error::UnknownPolicy(m.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            let id = joint_id(&members.iter().map(String::as_str).collect::<Vec<_>>());
            if !ids.insert(id.clone()) {
                return Err(Error::DuplicatePolicy(id));
            }
            joint.push(JointPolicy { id, members: idx });
            weights.push(w);
        }
        Ok(Self {
            planner,
            n_agents,
            candidates,
            others,
            joint,
            prior: weights,
            symmetric,
        })
    }

    pub fn planner(&self) -> AgentId {
        self.planner
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    /// True when seats are interchangeable (payoffs average over seatings).
    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn candidates(&self) -> &[PolicyEntry<M>] {
        &self.candidates
    }

    pub fn others(&self) -> &[PolicyEntry<M>] {
        &self.others
    }

    pub fn joint_policies(&self) -> &[JointPolicy] {
        &self.joint
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn planner_action_count(&self) -> usize {
        self.candidates[0].policy.action_count()
    }

    /// Non-planner agents in agent order; position `k` pairs with
    /// `JointPolicy::members[k]`.
    pub fn other_agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        (0..self.n_agents).filter(move |&a| a != self.planner.0).map(AgentId)
    }

    pub fn candidate_index(&self, id: &str) -> Option<usize> {
        self.candidates.iter().position(|c| c.id == id)
    }

    pub fn joint_index(&self, id: &str) -> Option<usize> {
        self.joint.iter().position(|j| j.id == id)
    }

    pub fn sample_joint_policy(&self, rng: &mut Rng) -> usize {
        sample_categorical(&self.prior, rng)
    }

    /// Policy of the `k`-th non-planner agent under joint policy `joint`.
    pub fn member(&self, joint: usize, k: usize) -> &dyn Policy<M> {
        self.others[self.joint[joint].members[k]].policy.as_ref()
    }

    /// Policies by agent index: candidate `candidate` for the planner, the
    /// members of `joint` for everyone else.
    pub fn seat_policies(&self, candidate: usize, joint: usize) -> Vec<&dyn Policy<M>> {
        let mut k = 0;
        (0..self.n_agents)
            .map(|a| {
                if a == self.planner.0 {
                    self.candidates[candidate].policy.as_ref()
                } else {
                    k += 1;
                    self.member(joint, k - 1)
                }
            })
            .collect()
    }

    /// Replace the planner candidates' policies, e.g. to attach value
    /// functions. Ids are kept.
    pub fn map_candidates(mut self, mut f: impl FnMut(usize, &PolicyEntry<M>) -> SharedPolicy<M>) -> Self {
        for k in 0..self.candidates.len() {
            let p = f(k, &self.candidates[k]);
            self.candidates[k].policy = p;
        }
        self
    }

    /// Same set with the prior replaced by a point mass on `joint`.
    pub fn with_point_prior(&self, joint: usize) -> Self {
        let mut out = self.clone();
        out.prior = (0..self.joint.len()).map(|j| (j == joint) as u8 as f64).collect();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::UniformRandom;
    use crate::posg::rng_from_seed;

    fn entry(id: &str) -> PolicyEntry<()> {
        PolicyEntry::new(id, Arc::new(UniformRandom { n_actions: 2 }))
    }

    fn set(prior: Vec<(Vec<PolicyId>, f64)>, n_agents: usize) -> Result<PolicySet<()>> {
        PolicySet::new(
            AgentId(0),
            n_agents,
            vec![entry("x")],
            vec![entry("a"), entry("b"), entry("c"), entry("d")],
            prior,
            false,
        )
    }

    #[test]
    fn uniform_prior_frequencies() {
        let s = set(
            ["a", "b", "c", "d"].iter().map(|m| (vec![m.to_string()], 0.25)).collect(),
            2,
        )
        .unwrap();
        let mut rng = rng_from_seed(3);
        let mut hits = [0usize; 4];
        let n = 100_000;
        for _ in 0..n {
            hits[s.sample_joint_policy(&mut rng)] += 1;
        }
        assert!(hits.iter().all(|&h| (h as f64 / n as f64 - 0.25).abs() <= 0.01));
        let point = s.with_point_prior(2);
        assert!((0..1000).all(|_| point.sample_joint_policy(&mut rng) == 2));
    }

    #[test]
    fn team_prior_gives_identical_copies() {
        let s = set(
            ["a", "b"].iter().map(|m| (vec![m.to_string(); 3], 0.5)).collect(),
            4,
        )
        .unwrap();
        let mut rng = rng_from_seed(1);
        for _ in 0..100 {
            let j = s.sample_joint_policy(&mut rng);
            let m = &s.joint_policies()[j].members;
            assert!(m.iter().all(|&x| x == m[0]));
        }
        assert_eq!(s.joint_policies()[0].id, "a+a+a");
        assert_eq!(s.other_agents().map(|a| a.0).collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn invalid_sets_rejected() {
        assert!(matches!(set(vec![(vec!["a".into()], 0.5)], 2), Err(Error::Validation(_))));
        assert!(matches!(set(vec![(vec!["zz".into()], 1.0)], 2), Err(Error::UnknownPolicy(_))));
        assert!(matches!(set(vec![(vec!["a".into()], 1.0)], 3), Err(Error::Validation(_))));
        let dup = PolicySet::new(
            AgentId(0),
            2,
            vec![entry("x"), entry("x")],
            vec![entry("a")],
            vec![(vec!["a".into()], 1.0)],
            false,
        );
        assert!(matches!(dup, Err(Error::DuplicatePolicy(_))));
    }
}
