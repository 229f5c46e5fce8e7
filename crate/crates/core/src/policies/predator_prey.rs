//! Predator-Prey heuristics built on the 5x5 local view: chase the nearest
//! prey, flank it opposite a visible teammate, follow teammates, or sweep the
//! arena along a fixed loop of waypoints while nothing is in sight.

use std::sync::Arc;

use serde_json::json;

use super::{noisy_choice, Policy, PolicyManifest, PolicySpec, SharedPolicy};
use crate::envs::grid::{Cell, DistanceTable};
use crate::envs::predator_prey::{action_dir, PpMemory, PredatorPrey, CODE_EMPTY, CODE_PREDATOR, CODE_PREY, N_ACTIONS};
use crate::error::{Error, Result};

/// Steps spent heading for each sweep waypoint.
const SWEEP_PERIOD: u16 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Chase,
    Flank,
    Follow,
    Sweep,
}

#[derive(Debug, Clone)]
pub struct Predator {
    env: Arc<PredatorPrey>,
    dist: Arc<DistanceTable>,
    waypoints: Vec<Cell>,
    pub mode: Mode,
    pub noise: f64,
    pub phase: u16,
}

fn manhattan(a: (i32, i32), b: (i32, i32)) -> i32 {
    (a.0 - b.0).abs() + (a.1 - b.1).abs()
}

impl Predator {
    /// View offset reached by an action (the agent stays if the cell is taken).
    fn landing(&self, m: &PpMemory, a: usize) -> (i32, i32) {
        match action_dir(a) {
            None => (0, 0),
            Some(d) => {
                let off = d.delta();
                if m.at(off.0, off.1) == CODE_EMPTY {
                    off
                } else {
                    (0, 0)
                }
            }
        }
    }

    /// Pick the action whose landing offset minimises `score`; earliest wins ties.
    fn best_by(&self, m: &PpMemory, score: impl Fn((i32, i32)) -> i32) -> usize {
        (0..N_ACTIONS)
            .min_by_key(|&a| (score(self.landing(m, a)), a))
            .expect("actions are nonempty")
    }

    fn towards(&self, m: &PpMemory, target: (i32, i32), stop_at: i32) -> usize {
        self.best_by(m, |off| (manhattan(off, target) - stop_at).abs())
    }

    fn sweep(&self, m: &PpMemory) -> usize {
        let grid = self.env.grid();
        let k = ((m.t / SWEEP_PERIOD + self.phase) as usize) % self.waypoints.len();
        let target = self.waypoints[k];
        let (x, y) = grid.coords(m.cell);
        self.best_by(m, |(dx, dy)| {
            let c = grid.cell_at(x as i32 + dx, y as i32 + dy).unwrap_or(m.cell);
            self.dist.get(c, target) as i32
        })
    }

    fn choose(&self, m: &PpMemory) -> usize {
        let prey = m.offsets(CODE_PREY).min_by_key(|&o| (manhattan(o, (0, 0)), o));
        let mate = m.offsets(CODE_PREDATOR).min_by_key(|&o| (manhattan(o, (0, 0)), o));
        match (self.mode, prey, mate) {
            (Mode::Flank, Some(p), Some(q)) => {
                // Stand on the far side of the prey from the teammate.
                let dx = (p.0 - q.0).signum();
                let dy = (p.1 - q.1).signum();
                let side = if dx.abs() >= dy.abs() && dx != 0 { (p.0 + dx, p.1) } else { (p.0, p.1 + dy.max(-1).min(1)) };
                self.towards(m, side, 0)
            }
            (_, Some(p), _) => self.towards(m, p, 1),
            (Mode::Follow, None, Some(q)) => self.towards(m, q, 1),
            _ => self.sweep(m),
        }
    }
}

impl Policy<PpMemory> for Predator {
    fn action_count(&self) -> usize {
        N_ACTIONS
    }

    fn action_dist(&self, m: &PpMemory, out: &mut [f64]) {
        noisy_choice(out, self.choose(m), self.noise);
    }
}

pub const FAMILY: &str = "predator";

pub fn build(env: &Arc<PredatorPrey>, spec: &PolicySpec) -> Result<SharedPolicy<PpMemory>> {
    if spec.family != FAMILY {
        return Err(Error::Config(format!("unknown predator-prey policy family `{}`", spec.family)));
    }
    let mode = match spec.param::<String>("mode")?.as_deref().unwrap_or("chase") {
        "chase" => Mode::Chase,
        "flank" => Mode::Flank,
        "follow" => Mode::Follow,
        "sweep" => Mode::Sweep,
        other => return Err(Error::Config(format!("policy `{}`: unknown mode `{other}`", spec.id))),
    };
    let noise = spec.param_f64("noise", 0.05)?;
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::Config(format!("policy `{}`: noise out of range", spec.id)));
    }
    let grid = env.grid();
    let (w, h) = (grid.width(), grid.height());
    // Loop through the four quadrant centres of the arena.
    let waypoints: Vec<Cell> = [(w / 4, h / 4), (3 * w / 4, h / 4), (3 * w / 4, 3 * h / 4), (w / 4, 3 * h / 4)]
        .into_iter()
        .map(|(x, y)| {
            grid.free_cells()
                .min_by_key(|&c| {
                    let (cx, cy) = grid.coords(c);
                    (cx as i32 - x as i32).abs() + (cy as i32 - y as i32).abs()
                })
                .expect("arena has free cells")
        })
        .collect();
    Ok(Arc::new(Predator {
        env: Arc::clone(env),
        dist: Arc::new(DistanceTable::new(grid)),
        waypoints,
        mode,
        noise,
        phase: spec.param_usize("phase", 0)? as u16,
    }))
}

pub fn default_specs() -> Vec<PolicySpec> {
    vec![
        PolicySpec::new("chaser", FAMILY, json!({"mode": "chase"})),
        PolicySpec::new("flanker", FAMILY, json!({"mode": "flank", "phase": 1})),
        PolicySpec::new("follower", FAMILY, json!({"mode": "follow", "phase": 2})),
        PolicySpec::new("sweeper", FAMILY, json!({"mode": "sweep", "phase": 3})),
        PolicySpec::new("lazy", FAMILY, json!({"mode": "chase", "noise": 0.4})),
    ]
}

/// Cooperative: every predator draws from the same five heuristics, and the
/// other predators always form a team of identical copies.
pub fn default_manifest(n_predators: usize) -> PolicyManifest {
    let specs = default_specs();
    PolicyManifest {
        env: "predator-prey".into(),
        n_agents: n_predators,
        planner_agent: 0,
        symmetric: true,
        prior: PolicyManifest::uniform_team_prior(&specs, n_predators - 1),
        planner_policies: specs.clone(),
        other_policies: specs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::predator_prey::make_predator_prey;
    use crate::policies::episode::{agent_return, play_episode};
    use crate::posg::{rng_from_seed, AgentId, Posg};

    #[test]
    fn teams_catch_prey() {
        for (n, k) in [(2, 2), (4, 3)] {
            let env = Arc::new(make_predator_prey(n, k, 3).unwrap());
            let set = default_manifest(n).build(|s| build(&env, s)).unwrap();
            let mut rng = rng_from_seed(4);
            let mut total = 0.0;
            for _ in 0..100 {
                let seats = set.seat_policies(0, 0);
                let r = play_episode(env.as_ref(), &seats, 100, &mut rng, |_, _| {});
                total += agent_return(&r, AgentId(0), env.gamma());
            }
            assert!(total > 0.0, "{n} predators caught nothing");
        }
    }
}
