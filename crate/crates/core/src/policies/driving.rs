//! Driving heuristics: one-step-lookahead shortest-path drivers that differ in
//! how often they yield when another vehicle is in view and which speed they
//! prefer.

use std::sync::Arc;

use serde_json::json;

use super::{argmin_first, noisy_choice, Policy, PolicyManifest, PolicySpec, SharedPolicy};
use crate::envs::driving::{move_vehicle, Driving, DrivingMemory, Status, DECELERATE, NOOP, N_ACTIONS};
use crate::error::{Error, Result};

/// Weight of the speed preference relative to one cell of progress.
const SPEED_WEIGHT: f64 = 1.5;
const BUMP_PENALTY: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct Driver {
    env: Arc<Driving>,
    pub yield_prob: f64,
    pub preferred_speed: u8,
    pub noise: f64,
}

impl Driver {
    pub fn greedy_action(&self, m: &DrivingMemory) -> usize {
        let grid = self.env.grid();
        let dist = self.env.distances();
        let scores: Vec<f64> = (0..N_ACTIONS)
            .map(|a| {
                let out = move_vehicle(grid, m.cell, m.heading, m.speed, m.dest, a);
                let d = if out.arrived { 0.0 } else { dist.get(out.cell, m.dest) as f64 };
                d + BUMP_PENALTY * out.bumped as u8 as f64
                    + SPEED_WEIGHT * (out.speed as f64 - self.preferred_speed as f64).abs()
            })
            .collect();
        argmin_first(&scores)
    }
}

impl Policy<DrivingMemory> for Driver {
    fn action_count(&self) -> usize {
        N_ACTIONS
    }

    fn action_dist(&self, m: &DrivingMemory, out: &mut [f64]) {
        if m.status != Status::Driving {
            out.fill(1.0 / N_ACTIONS as f64);
            return;
        }
        let greedy = self.greedy_action(m);
        noisy_choice(out, greedy, self.noise);
        if m.vehicle_in_view() && self.yield_prob > 0.0 {
            let yield_action = if m.speed > 0 { DECELERATE } else { NOOP };
            for p in out.iter_mut() {
                *p *= 1.0 - self.yield_prob;
            }
            out[yield_action] += self.yield_prob;
        }
    }
}

pub const FAMILY: &str = "driver";

pub fn build(env: &Arc<Driving>, spec: &PolicySpec) -> Result<SharedPolicy<DrivingMemory>> {
    if spec.family != FAMILY {
        return Err(Error::Config(format!("unknown driving policy family `{}`", spec.family)));
    }
    let yield_prob = spec.param_f64("yield_prob", 0.0)?;
    let noise = spec.param_f64("noise", 0.05)?;
    let speed = spec.param_usize("speed", 1)?;
    if !(0.0..=1.0).contains(&yield_prob) || !(0.0..=1.0).contains(&noise) || !(1..=2).contains(&speed) {
        return Err(Error::Config(format!("policy `{}`: parameters out of range", spec.id)));
    }
    Ok(Arc::new(Driver {
        env: Arc::clone(env),
        yield_prob,
        preferred_speed: speed as u8,
        noise,
    }))
}

pub fn default_specs() -> Vec<PolicySpec> {
    vec![
        PolicySpec::new("cautious", FAMILY, json!({"yield_prob": 0.9, "speed": 1})),
        PolicySpec::new("polite", FAMILY, json!({"yield_prob": 0.6, "speed": 1})),
        PolicySpec::new("normal", FAMILY, json!({"yield_prob": 0.3, "speed": 2})),
        PolicySpec::new("aggressive", FAMILY, json!({"yield_prob": 0.0, "speed": 2})),
        PolicySpec::new("wobbly", FAMILY, json!({"yield_prob": 0.3, "speed": 1, "noise": 0.25})),
    ]
}

/// Both agents draw from the same five drivers; the planner is agent 0.
pub fn default_manifest() -> PolicyManifest {
    let specs = default_specs();
    PolicyManifest {
        env: "driving".into(),
        n_agents: 2,
        planner_agent: 0,
        symmetric: true,
        prior: PolicyManifest::uniform_team_prior(&specs, 1),
        planner_policies: specs.clone(),
        other_policies: specs,
    }
}
