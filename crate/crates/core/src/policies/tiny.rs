//! Agent types for the explicit-table games: reactive tabular policies keyed
//! by the last observation.

use std::sync::Arc;

use serde_json::json;

use super::manifest::Role;
use super::{PolicyManifest, PolicySpec, SharedPolicy, TabularPolicy};
use crate::envs::tiny::TinyPosgModel;
use crate::error::{Error, Result};
use crate::posg::{AgentId, History, Posg};

pub const FAMILY: &str = "tabular";

/// Params: `rows` (one distribution per last observation) and optionally
/// `first` (distribution before the first action). A single row is reused
/// for every observation.
pub fn build(model: &TinyPosgModel, agent: AgentId, spec: &PolicySpec) -> Result<SharedPolicy<History<usize>>> {
    if spec.family != FAMILY {
        return Err(Error::Config(format!("unknown tiny policy family `{}`", spec.family)));
    }
    let first: Option<Vec<f64>> = spec.param("first")?;
    let mut rows: Vec<Vec<f64>> = spec
        .param("rows")?
        .ok_or_else(|| Error::Config(format!("policy `{}` lacks rows", spec.id)))?;
    let n_obs = model.obs_count(agent);
    if rows.len() == 1 {
        rows = vec![rows[0].clone(); n_obs];
    }
    if rows.len() != n_obs {
        return Err(Error::Config(format!("policy `{}` needs {n_obs} rows", spec.id)));
    }
    Ok(Arc::new(TabularPolicy::new(model.action_count(agent), first, rows)?))
}

fn spec(id: &str, first: Option<Vec<f64>>, rows: Vec<Vec<f64>>) -> PolicySpec {
    let params = match first {
        Some(f) => json!({"first": f, "rows": rows}),
        None => json!({ "rows": rows }),
    };
    PolicySpec::new(id, FAMILY, params)
}

pub fn default_manifest(model: &TinyPosgModel) -> Result<PolicyManifest> {
    let (planner, others, weights): (Vec<PolicySpec>, Vec<PolicySpec>, Vec<f64>) = match model.id() {
        "coord" => (
            vec![
                spec("left", None, vec![vec![1.0, 0.0, 0.0]]),
                spec("right", None, vec![vec![0.0, 1.0, 0.0]]),
                spec("safe", None, vec![vec![0.0, 0.0, 1.0]]),
                spec("follow", Some(vec![0.0, 0.0, 1.0]), vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]),
            ],
            vec![
                spec("lefty", None, vec![vec![0.9, 0.1]]),
                spec("righty", None, vec![vec![0.1, 0.9]]),
                spec(
                    "mimic",
                    Some(vec![0.5, 0.5]),
                    vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]],
                ),
            ],
            vec![1.0 / 3.0; 3],
        ),
        "reveal" => (
            vec![
                spec("zero", None, vec![vec![1.0, 0.0]]),
                spec("one", None, vec![vec![0.0, 1.0]]),
                spec("copy", None, vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
                spec("one-then-copy", Some(vec![0.0, 1.0]), vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
            ],
            vec![
                spec("type-a", Some(vec![0.0, 1.0]), vec![vec![0.5, 0.5]]),
                spec("type-b", None, vec![vec![1.0, 0.0]]),
            ],
            vec![0.6, 0.4],
        ),
        "tiger" => (
            vec![
                spec("greedy-open", None, vec![vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]]),
                spec("hesitant", None, vec![vec![0.5, 0.0, 0.5], vec![0.5, 0.5, 0.0], vec![1.0, 0.0, 0.0]]),
                spec("listener", None, vec![vec![1.0, 0.0, 0.0]]),
                spec("random", None, vec![vec![1.0 / 3.0; 3]]),
            ],
            vec![spec("idle", None, vec![vec![1.0]])],
            vec![1.0],
        ),
        "noop" => (
            vec![spec("only", None, vec![vec![1.0]])],
            vec![
                spec("often-zero", None, vec![vec![0.8, 0.2]]),
                spec("seldom-zero", None, vec![vec![0.3, 0.7]]),
            ],
            vec![0.5, 0.5],
        ),
        other => return Err(Error::Config(format!("no policy set for tiny instance `{other}`"))),
    };
    let prior = others
        .iter()
        .zip(weights)
        .map(|(p, w)| super::manifest::JointSpec {
            members: vec![p.id.clone()],
            weight: w,
        })
        .collect();
    Ok(PolicyManifest {
        env: format!("tiny:{}", model.id()),
        n_agents: model.n_agents(),
        planner_agent: 0,
        symmetric: false,
        planner_policies: planner,
        other_policies: others,
        prior,
    })
}

/// Build a manifest's policies for a two-agent tiny model.
pub fn build_set(model: &TinyPosgModel, manifest: &PolicyManifest) -> Result<super::PolicySet<History<usize>>> {
    let planner = AgentId(manifest.planner_agent);
    let other = AgentId(1 - manifest.planner_agent.min(1));
    manifest.build_with_role(|role, s| match role {
        Role::Planner => build(model, planner, s),
        Role::Other => build(model, other, s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::tiny::{make_tiny_posg, INSTANCES};

    #[test]
    fn every_instance_has_a_set() {
        for id in INSTANCES {
            let m = make_tiny_posg(id).unwrap();
            let manifest = default_manifest(&m).unwrap();
            let set = build_set(&m, &manifest).unwrap();
            assert_eq!(set.planner_action_count(), m.action_count(AgentId(0)));
        }
    }
}
