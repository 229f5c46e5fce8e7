//! Pursuit-Evasion heuristics. Evaders follow shortest paths to their safe
//! cell with different route preferences; pursuers guard a safe cell, patrol
//! between them, or hunt towards the evader's start.

use std::sync::Arc;

use serde_json::json;

use super::{noisy_choice, Policy, PolicyManifest, PolicySpec, SharedPolicy};
use crate::envs::grid::Cell;
use crate::envs::pursuit_evasion::{move_agent, PeMemory, PursuitEvasion, BACKWARD, FORWARD, LEFT, N_ACTIONS, RIGHT};
use crate::error::{Error, Result};
use crate::posg::Action;

/// Penalty for an action that leaves the agent where it is.
const STALL_PENALTY: f64 = 0.5;

fn parse_order(spec: &PolicySpec) -> Result<[Action; 4]> {
    let text: String = spec.param("order")?.unwrap_or_else(|| "FLRB".to_string());
    let mut order = [0; 4];
    if text.len() != 4 {
        return Err(Error::Config(format!("policy `{}`: order must list F, L, R, B", spec.id)));
    }
    for (k, ch) in text.chars().enumerate() {
        order[k] = match ch {
            'F' => FORWARD,
            'B' => BACKWARD,
            'L' => LEFT,
            'R' => RIGHT,
            _ => return Err(Error::Config(format!("policy `{}`: bad order `{text}`", spec.id))),
        };
    }
    let mut sorted = order;
    sorted.sort();
    if sorted != [0, 1, 2, 3] {
        return Err(Error::Config(format!("policy `{}`: order must be a permutation", spec.id)));
    }
    Ok(order)
}

/// Best action by score, ties resolved by `order`; also the runner-up.
fn ranked(scores: &[f64; 4], order: &[Action; 4]) -> (Action, Action) {
    let mut idx = *order;
    idx.sort_by(|a, b| scores[*a].partial_cmp(&scores[*b]).unwrap_or(std::cmp::Ordering::Equal));
    // `sort_by` is stable, so equal scores keep `order`.
    (idx[0], idx[1])
}

#[derive(Debug, Clone)]
pub struct Evader {
    env: Arc<PursuitEvasion>,
    pub avoid: f64,
    pub caution: f64,
    pub noise: f64,
    pub order: [Action; 4],
}

impl Policy<PeMemory> for Evader {
    fn action_count(&self) -> usize {
        N_ACTIONS
    }

    fn action_dist(&self, m: &PeMemory, out: &mut [f64]) {
        let Some(goal) = m.goal else {
            out.fill(0.25);
            return;
        };
        let grid = self.env.grid();
        let dist = self.env.distances();
        let danger = self.env.start(crate::envs::pursuit_evasion::PURSUER);
        let mut scores = [0.0; 4];
        for a in 0..N_ACTIONS {
            let (c, _) = move_agent(grid, m.cell, m.heading, a);
            let near = (3.0 - dist.get(c, danger) as f64).max(0.0);
            scores[a] = self.env.goal_distance(c, goal) as f64
                + self.avoid * near
                + STALL_PENALTY * (c == m.cell) as u8 as f64;
        }
        let (best, second) = ranked(&scores, &self.order);
        noisy_choice(out, best, self.noise);
        if self.caution > 0.0 && (m.heard() || m.seen()) {
            let shift = self.caution * out[best];
            out[best] -= shift;
            out[second] += shift;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PursuerMode {
    Guard(usize),
    Patrol { period: u16 },
    Hunt,
}

#[derive(Debug, Clone)]
pub struct Pursuer {
    env: Arc<PursuitEvasion>,
    pub mode: PursuerMode,
    pub noise: f64,
    pub order: [Action; 4],
}

/// Steps spent walking towards each end of a guard beat.
const GUARD_PACE: u16 = 4;
/// Distance of a guard station from its safe cell.
const STATION_DISTANCE: u16 = 3;

impl Pursuer {
    /// Cell on a shortest path from `goal` towards the pursuer start,
    /// `STATION_DISTANCE` steps from the goal.
    fn station(&self, goal: Cell) -> Cell {
        let dist = self.env.distances();
        let start = self.env.start(crate::envs::pursuit_evasion::PURSUER);
        let total = dist.get(goal, start);
        let want = STATION_DISTANCE.min(total);
        self.env
            .grid()
            .free_cells()
            .filter(|&c| dist.get(goal, c) == want && dist.get(goal, c) + dist.get(c, start) == total)
            .min()
            .unwrap_or(goal)
    }

    fn target(&self, m: &PeMemory) -> Cell {
        let goals = self.env.goals();
        match self.mode {
            // Pace between the safe cell and a station on the way in.
            PursuerMode::Guard(k) => {
                let goal = goals[k % goals.len()];
                if (m.t / GUARD_PACE) % 2 == 0 {
                    goal
                } else {
                    self.station(goal)
                }
            }
            PursuerMode::Patrol { period } => goals[(m.t / period.max(1)) as usize % goals.len()],
            PursuerMode::Hunt => {
                if m.since_contact <= 4 {
                    // Recently heard: hold the closest safe cell.
                    *goals
                        .iter()
                        .min_by_key(|&&g| self.env.distances().get(m.cell, g))
                        .expect("at least two goals")
                } else {
                    self.env.start(crate::envs::pursuit_evasion::EVADER)
                }
            }
        }
    }
}

impl Policy<PeMemory> for Pursuer {
    fn action_count(&self) -> usize {
        N_ACTIONS
    }

    fn action_dist(&self, m: &PeMemory, out: &mut [f64]) {
        let grid = self.env.grid();
        let dist = self.env.distances();
        let target = self.target(m);
        let mut scores = [0.0; 4];
        for a in 0..N_ACTIONS {
            let (c, _) = move_agent(grid, m.cell, m.heading, a);
            scores[a] = dist.get(c, target) as f64 + STALL_PENALTY * (c == m.cell) as u8 as f64;
        }
        let (best, _) = ranked(&scores, &self.order);
        noisy_choice(out, best, self.noise);
    }
}

pub fn build(env: &Arc<PursuitEvasion>, spec: &PolicySpec) -> Result<SharedPolicy<PeMemory>> {
    let noise = spec.param_f64("noise", 0.05)?;
    let order = parse_order(spec)?;
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::Config(format!("policy `{}`: noise out of range", spec.id)));
    }
    match spec.family.as_str() {
        "evader" => Ok(Arc::new(Evader {
            env: Arc::clone(env),
            avoid: spec.param_f64("avoid", 0.0)?,
            caution: spec.param_f64("caution", 0.0)?,
            noise,
            order,
        })),
        "pursuer" => {
            let mode = match spec.param::<String>("mode")?.as_deref().unwrap_or("guard") {
                "guard" => PursuerMode::Guard(spec.param_usize("goal", 0)?),
                "patrol" => PursuerMode::Patrol {
                    period: spec.param_usize("period", 12)? as u16,
                },
                "hunt" => PursuerMode::Hunt,
                other => return Err(Error::Config(format!("policy `{}`: unknown mode `{other}`", spec.id))),
            };
            Ok(Arc::new(Pursuer {
                env: Arc::clone(env),
                mode,
                noise,
                order,
            }))
        }
        other => Err(Error::Config(format!("unknown pursuit-evasion policy family `{other}`"))),
    }
}

pub fn evader_specs() -> Vec<PolicySpec> {
    vec![
        PolicySpec::new("direct", "evader", json!({})),
        PolicySpec::new("direct-right", "evader", json!({"order": "FRLB", "caution": 0.3})),
        PolicySpec::new("wary", "evader", json!({"avoid": 1.0, "caution": 0.5})),
        PolicySpec::new("sneaky", "evader", json!({"avoid": 2.0, "order": "LFRB"})),
        PolicySpec::new("jittery", "evader", json!({"noise": 0.3})),
    ]
}

pub fn pursuer_specs() -> Vec<PolicySpec> {
    vec![
        PolicySpec::new("guard-0", "pursuer", json!({"mode": "guard", "goal": 0})),
        PolicySpec::new("guard-1", "pursuer", json!({"mode": "guard", "goal": 1})),
        PolicySpec::new("patrol", "pursuer", json!({"mode": "patrol", "period": 12})),
        PolicySpec::new("hunter", "pursuer", json!({"mode": "hunt"})),
        PolicySpec::new("sweeper", "pursuer", json!({"mode": "patrol", "period": 6, "noise": 0.2})),
    ]
}

/// The planner is the evader; the pursuer is one of five types, uniformly.
pub fn default_manifest() -> PolicyManifest {
    let pursuers = pursuer_specs();
    PolicyManifest {
        env: "pursuit-evasion".into(),
        n_agents: 2,
        planner_agent: 0,
        symmetric: false,
        prior: PolicyManifest::uniform_team_prior(&pursuers, 1),
        planner_policies: evader_specs(),
        other_policies: pursuers,
    }
}
