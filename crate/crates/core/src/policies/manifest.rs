//! JSON policy-set manifests: every policy is `(family, params, seed)`, so a
//! set can be written out and rebuilt exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PolicyEntry, PolicySet, SharedPolicy};
use crate::error::{Error, Result};
use crate::posg::AgentId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub id: String,
    pub family: String,
    #[serde(default)]
    pub params: serde_json::Value,
    #[serde(default)]
    pub seed: u64,
}

impl PolicySpec {
    pub fn new(id: &str, family: &str, params: serde_json::Value) -> Self {
        Self {
            id: id.to_string(),
            family: family.to_string(),
            params,
            seed: 0,
        }
    }

    pub fn param_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| Error::Config(format!("policy `{}`: param `{key}` must be a number", self.id))),
        }
    }

    pub fn param_usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| Error::Config(format!("policy `{}`: param `{key}` must be a non-negative integer", self.id))),
        }
    }

    pub fn param<T: serde::de::DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        self.params
            .get(key)
            .filter(|v| !v.is_null())
            .map(|v| serde_json::from_value(v.clone()))
            .transpose()
            .map_err(|e| Error::Config(format!("policy `{}`: param `{key}`: {e}", self.id)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Planner,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    pub members: Vec<String>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyManifest {
    pub env: String,
    pub n_agents: usize,
    pub planner_agent: usize,
    #[serde(default)]
    pub symmetric: bool,
    pub planner_policies: Vec<PolicySpec>,
    pub other_policies: Vec<PolicySpec>,
    pub prior: Vec<JointSpec>,
}

impl PolicyManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Uniform prior over teams of identical copies of each other-agent policy.
    pub fn uniform_team_prior(other_policies: &[PolicySpec], team_size: usize) -> Vec<JointSpec> {
        let w = 1.0 / other_policies.len() as f64;
        other_policies
            .iter()
            .map(|p| JointSpec {
                members: vec![p.id.clone(); team_size],
                weight: w,
            })
            .collect()
    }

    pub fn build<M>(&self, mut factory: impl FnMut(&PolicySpec) -> Result<SharedPolicy<M>>) -> Result<PolicySet<M>> {
        self.build_with_role(|_, s| factory(s))
    }

    /// Like [`PolicyManifest::build`], telling the factory which role each
    /// policy plays.
    pub fn build_with_role<M>(
        &self,
        mut factory: impl FnMut(Role, &PolicySpec) -> Result<SharedPolicy<M>>,
    ) -> Result<PolicySet<M>> {
        let mut make = |role: Role, specs: &[PolicySpec]| {
            specs
                .iter()
                .map(|s| Ok(PolicyEntry::new(s.id.clone(), factory(role, s)?)))
                .collect::<Result<Vec<_>>>()
        };
        let candidates = make(Role::Planner, &self.planner_policies)?;
        let others = make(Role::Other, &self.other_policies)?;
        PolicySet::new(
            AgentId(self.planner_agent),
            self.n_agents,
            candidates,
            others,
            self.prior.iter().map(|j| (j.members.clone(), j.weight)).collect(),
            self.symmetric,
        )
    }
}
