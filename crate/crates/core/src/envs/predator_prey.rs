//! Predator-Prey: a cooperative game. Predators hunt autonomously moving prey;
//! a prey is captured when at least `prey_strength` predators stand next to it
//! (4-neighbourhood), and every predator then receives `1 / n_prey`.
//!
//! Step order: predators move one at a time in index order (a move into an
//! occupied or wall cell is a no-op), captures are resolved, then surviving
//! prey move one at a time. A prey that sees nothing within its 5x5 view
//! stays put; otherwise it picks the feasible move (stay, N, E, S, W) that
//! maximises the smallest squared Euclidean distance to a visible predator,
//! then to a visible prey, keeping the first such move in that order.
//!
//! Observation token: the 5x5 view centred on the agent (2 bits per cell, row
//! major: empty, wall, predator, prey; the centre is always empty) in bits
//! `0..50`, and the agent's own cell in bits `50..58`.

use rand::seq::index::sample;
use smallvec::SmallVec;

use super::grid::{AsciiLayout, Cell, Dir, Grid};
use crate::error::{Error, Result};
use crate::posg::{Action, AgentId, GenerativeStep, Joint, Posg, PosgSpec, Rng};

pub const STAY: Action = 0;
pub const N_ACTIONS: usize = 5;
pub const STEP_LIMIT: u16 = 50;
pub const VIEW_RADIUS: i32 = 2;

pub const CODE_EMPTY: u64 = 0;
pub const CODE_WALL: u64 = 1;
pub const CODE_PREDATOR: u64 = 2;
pub const CODE_PREY: u64 = 3;

pub const LAYOUTS: &[(&str, &str)] = &[("arena-10x10", include_str!("../../layouts/pp_arena_10x10.txt"))];

/// Direction moved by an action; `None` for stay.
pub fn action_dir(a: Action) -> Option<Dir> {
    (a > 0).then(|| Dir::from_index(a - 1))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PpState {
    pub predators: SmallVec<[Cell; 4]>,
    pub prey: SmallVec<[(Cell, bool); 4]>,
    pub step: u16,
}

impl PpState {
    pub fn n_alive(&self) -> usize {
        self.prey.iter().filter(|p| p.1).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PpMemory {
    pub cell: Cell,
    pub view: u64,
    pub t: u16,
}

impl PpMemory {
    /// Code of the view cell at offset `(dx, dy)` from the agent.
    pub fn at(&self, dx: i32, dy: i32) -> u64 {
        view_code(self.view, dx, dy)
    }

    /// Offsets of visible cells holding `code`.
    pub fn offsets(&self, code: u64) -> impl Iterator<Item = (i32, i32)> + '_ {
        (-VIEW_RADIUS..=VIEW_RADIUS)
            .flat_map(|dy| (-VIEW_RADIUS..=VIEW_RADIUS).map(move |dx| (dx, dy)))
            .filter(move |&(dx, dy)| self.at(dx, dy) == code && (dx, dy) != (0, 0))
    }
}

pub fn view_code(view: u64, dx: i32, dy: i32) -> u64 {
    let k = ((dy + VIEW_RADIUS) * (2 * VIEW_RADIUS + 1) + dx + VIEW_RADIUS) as u64;
    view >> (2 * k) & 3
}

#[derive(Debug)]
pub struct PredatorPrey {
    spec: PosgSpec,
    grid: Grid,
    prey_starts: Vec<Cell>,
    edge_cells: Vec<Cell>,
    prey_strength: usize,
}

pub fn make_predator_prey(n_predators: usize, prey_strength: usize, n_prey: usize) -> Result<PredatorPrey> {
    PredatorPrey::from_layout(
        &AsciiLayout::parse(LAYOUTS[0].1)?,
        n_predators,
        prey_strength,
        n_prey,
    )
}

impl PredatorPrey {
    pub fn from_layout(layout: &AsciiLayout, n_predators: usize, prey_strength: usize, n_prey: usize) -> Result<Self> {
        if !(2..=4).contains(&n_predators) {
            return Err(Error::Config(format!("n_predators must be 2..=4, got {n_predators}")));
        }
        if prey_strength == 0 || prey_strength > n_predators || prey_strength > 4 {
            return Err(Error::Config(format!(
                "prey_strength must lie in 1..={}, got {prey_strength}",
                n_predators.min(4)
            )));
        }
        let marked = layout.cells_marked('p');
        if n_prey == 0 || n_prey > marked.len() || n_prey > 4 {
            return Err(Error::Config(format!(
                "n_prey must lie in 1..={}, got {n_prey}",
                marked.len().min(4)
            )));
        }
        let grid = layout.grid.clone();
        if grid.n_cells() > 256 {
            return Err(Error::Config("predator-prey layouts are limited to 256 cells".into()));
        }
        let edge_cells: Vec<Cell> = grid
            .free_cells()
            .filter(|&c| {
                let (x, y) = grid.coords(c);
                x == 1 || y == 1 || x + 2 == grid.width() || y + 2 == grid.height()
            })
            .collect();
        let spec = PosgSpec::new(vec![N_ACTIONS; n_predators], 0.99, 0.01, (0.0, 1.0))?;
        Ok(Self {
            spec,
            grid,
            prey_starts: marked[..n_prey].to_vec(),
            edge_cells,
            prey_strength,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n_prey(&self) -> usize {
        self.prey_starts.len()
    }

    pub fn prey_strength(&self) -> usize {
        self.prey_strength
    }

    /// State with predators at the given cells and prey on their start cells.
    pub fn state_with_predators(&self, predators: &[Cell]) -> PpState {
        PpState {
            predators: predators.iter().copied().collect(),
            prey: self.prey_starts.iter().map(|&c| (c, true)).collect(),
            step: 0,
        }
    }

    fn occupied(&self, s: &PpState, c: Cell) -> bool {
        s.predators.contains(&c) || s.prey.iter().any(|&(p, alive)| alive && p == c)
    }

    fn visible(&self, from: Cell, to: Cell) -> bool {
        let (ax, ay) = self.grid.coords(from);
        let (bx, by) = self.grid.coords(to);
        (ax as i32 - bx as i32).abs() <= VIEW_RADIUS && (ay as i32 - by as i32).abs() <= VIEW_RADIUS
    }

    fn adjacent_predators(&self, s: &PpState, c: Cell) -> usize {
        s.predators.iter().filter(|&&p| self.grid.manhattan(p, c) == 1).count()
    }

    fn prey_move(&self, s: &PpState, k: usize) -> Cell {
        let here = s.prey[k].0;
        let preds: SmallVec<[Cell; 4]> = s.predators.iter().copied().filter(|&p| self.visible(here, p)).collect();
        let others: SmallVec<[Cell; 4]> = s
            .prey
            .iter()
            .enumerate()
            .filter(|&(j, &(c, alive))| j != k && alive && self.visible(here, c))
            .map(|(_, &(c, _))| c)
            .collect();
        if preds.is_empty() && others.is_empty() {
            return here;
        }
        let score = |c: Cell| {
            let p = preds.iter().map(|&q| self.grid.sq_euclid(c, q)).min().unwrap_or(u32::MAX);
            let o = others.iter().map(|&q| self.grid.sq_euclid(c, q)).min().unwrap_or(u32::MAX);
            (p, o)
        };
        let mut best = (here, score(here));
        for d in Dir::ALL {
            if let Some(c) = self.grid.neighbor(here, d) {
                if !self.occupied(s, c) {
                    let sc = score(c);
                    if sc > best.1 {
                        best = (c, sc);
                    }
                }
            }
        }
        best.0
    }

    fn observe_one(&self, s: &PpState, agent: usize) -> u64 {
        let me = s.predators[agent];
        let (x, y) = self.grid.coords(me);
        let mut view = 0u64;
        let mut k = 0;
        for dy in -VIEW_RADIUS..=VIEW_RADIUS {
            for dx in -VIEW_RADIUS..=VIEW_RADIUS {
                let code = if dx == 0 && dy == 0 {
                    CODE_EMPTY
                } else {
                    match self.grid.cell_at(x as i32 + dx, y as i32 + dy) {
                        None => CODE_WALL,
                        Some(c) if self.grid.is_wall(c) => CODE_WALL,
                        Some(c) if s.predators.contains(&c) => CODE_PREDATOR,
                        Some(c) if s.prey.iter().any(|&(p, alive)| alive && p == c) => CODE_PREY,
                        Some(_) => CODE_EMPTY,
                    }
                };
                view |= code << (2 * k);
                k += 1;
            }
        }
        view | (me as u64) << 50
    }

    fn observe(&self, s: &PpState) -> Joint<u64> {
        (0..s.predators.len()).map(|k| self.observe_one(s, k)).collect()
    }
}

impl Posg for PredatorPrey {
    type State = PpState;
    type Obs = u64;
    type Memory = PpMemory;

    fn spec(&self) -> &PosgSpec {
        &self.spec
    }

    fn sample_initial_state(&self, rng: &mut Rng) -> PpState {
        let n = self.spec.n_agents();
        let idx = sample(rng, self.edge_cells.len(), n);
        let cells: Vec<Cell> = idx.iter().map(|i| self.edge_cells[i]).collect();
        self.state_with_predators(&cells)
    }

    fn sample_initial_obs(&self, s: &PpState, _rng: &mut Rng) -> Joint<u64> {
        self.observe(s)
    }

    fn sample_step(&self, s: &PpState, actions: &[Action], _rng: &mut Rng) -> GenerativeStep<PpState, u64> {
        let n = s.predators.len();
        let mut rewards: Joint<f64> = smallvec::smallvec![0.0; n];
        if self.is_terminal(s) {
            return GenerativeStep {
                next_state: s.clone(),
                joint_obs: self.observe(s),
                joint_reward: rewards,
            };
        }
        let mut next = s.clone();
        for k in 0..n {
            if let Some(d) = action_dir(actions[k]) {
                if let Some(c) = self.grid.neighbor(next.predators[k], d) {
                    if !self.occupied(&next, c) {
                        next.predators[k] = c;
                    }
                }
            }
        }
        let share = 1.0 / self.n_prey() as f64;
        let mut captured = 0;
        for j in 0..next.prey.len() {
            let (c, alive) = next.prey[j];
            if alive && self.adjacent_predators(&next, c) >= self.prey_strength {
                next.prey[j].1 = false;
                captured += 1;
            }
        }
        if captured > 0 {
            for r in rewards.iter_mut() {
                *r = captured as f64 * share;
            }
        }
        for j in 0..next.prey.len() {
            if next.prey[j].1 {
                next.prey[j].0 = self.prey_move(&next, j);
            }
        }
        next.step += 1;
        GenerativeStep {
            joint_obs: self.observe(&next),
            next_state: next,
            joint_reward: rewards,
        }
    }

    fn is_terminal(&self, s: &PpState) -> bool {
        s.step >= STEP_LIMIT || s.n_alive() == 0
    }

    fn initial_memory(&self, _agent: AgentId, obs: &u64) -> PpMemory {
        PpMemory {
            cell: (obs >> 50) as Cell,
            view: obs & ((1 << 50) - 1),
            t: 0,
        }
    }

    fn update_memory(&self, _agent: AgentId, m: &mut PpMemory, _action: Action, obs: &u64) {
        m.cell = (obs >> 50) as Cell;
        m.view = obs & ((1 << 50) - 1);
        m.t = m.t.saturating_add(1);
    }

    fn value_feature(&self, _agent: AgentId, m: &PpMemory) -> u64 {
        let nearest = m.offsets(CODE_PREY).map(|(dx, dy)| (dx.abs() + dy.abs()) as u64).min().unwrap_or(7);
        let n_prey = m.offsets(CODE_PREY).count() as u64;
        let mates = m.offsets(CODE_PREDATOR).count().min(3) as u64;
        nearest | n_prey << 3 | mates << 6 | ((m.t / 10) as u64) << 8
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posg::rng_from_seed;
    use rand::Rng as _;

    #[test]
    fn strength_validation() {
        assert!(matches!(make_predator_prey(2, 3, 3), Err(Error::Config(_))));
        assert!(matches!(make_predator_prey(3, 0, 3), Err(Error::Config(_))));
        assert!(matches!(make_predator_prey(5, 2, 3), Err(Error::Config(_))));
        assert!(make_predator_prey(4, 3, 3).is_ok());
    }

    #[test]
    fn lone_predator_does_not_capture_strong_prey() {
        let env = make_predator_prey(2, 2, 1).unwrap();
        let g = env.grid();
        let prey = env.prey_starts[0];
        let (x, y) = g.coords(prey);
        let mut s = env.state_with_predators(&[g.cell(x - 2, y), g.cell(1, 1)]);
        // Predator 0 steps east to become adjacent.
        let out = env.sample_step(&s, &[2, STAY], &mut rng_from_seed(0));
        assert_eq!(out.next_state.predators[0], g.cell(x - 1, y));
        assert!(out.next_state.prey[0].1);
        assert!(out.joint_reward.iter().all(|&r| r == 0.0));
        s = out.next_state;
        assert!(!env.is_terminal(&s));
    }

    #[test]
    fn two_adjacent_predators_capture_and_share() {
        let env = make_predator_prey(2, 2, 3).unwrap();
        let g = env.grid();
        // Prey 2 sits at (5,5); predators arrive at (5,6) and (6,5).
        let target = env.prey_starts[2];
        assert_eq!(g.coords(target), (5, 5));
        let s = env.state_with_predators(&[g.cell(5, 7), g.cell(7, 5)]);
        // North for predator 0, west for predator 1.
        let out = env.sample_step(&s, &[1, 4], &mut rng_from_seed(0));
        assert!(!out.next_state.prey[2].1);
        assert_eq!(out.joint_reward.as_slice(), &[1.0 / 3.0, 1.0 / 3.0]);
    }

    #[test]
    fn capturing_every_prey_pays_one_each() {
        // Random play until all prey are captured in some episode; cumulative reward is exactly 1.
        let env = make_predator_prey(2, 1, 3).unwrap();
        let mut rng = rng_from_seed(2);
        let mut seen_full = false;
        for _ in 0..2000 {
            let mut s = env.sample_initial_state(&mut rng);
            let mut total = [0.0; 2];
            while !env.is_terminal(&s) {
                let a = [rng.gen_range(0..5), rng.gen_range(0..5)];
                let out = env.sample_step(&s, &a, &mut rng);
                total[0] += out.joint_reward[0];
                total[1] += out.joint_reward[1];
                s = out.next_state;
            }
            if s.n_alive() == 0 {
                seen_full = true;
                assert!((total[0] - 1.0).abs() < 1e-12 && (total[1] - 1.0).abs() < 1e-12);
            }
        }
        assert!(seen_full);
    }

    #[test]
    fn prey_flees_from_predator_to_the_north() {
        let env = make_predator_prey(2, 2, 1).unwrap();
        let g = env.grid();
        let prey = env.prey_starts[0];
        let (x, y) = g.coords(prey);
        let mut s = env.state_with_predators(&[g.cell(x, y - 1), g.cell(1, 8)]);
        s.prey[0] = (prey, true);
        // Score moves: stay=1, E=2, S=4, W=2 (north is occupied) -> south.
        assert_eq!(env.prey_move(&s, 0), g.cell(x, y + 1));
    }

    #[test]
    fn prey_ties_keep_move_order() {
        let env = make_predator_prey(2, 2, 1).unwrap();
        let g = env.grid();
        // Predator due west: east is strictly best.
        let prey = env.prey_starts[0];
        let (x, y) = g.coords(prey);
        let mut s = env.state_with_predators(&[g.cell(x - 1, y), g.cell(1, 8)]);
        s.prey[0] = (prey, true);
        assert_eq!(env.prey_move(&s, 0), g.cell(x + 1, y));
        // Predators north and south: E and W both score 2; E comes first in move order.
        let s2 = env.state_with_predators(&[g.cell(x, y - 1), g.cell(x, y + 1)]);
        assert_eq!(env.prey_move(&s2, 0), g.cell(x + 1, y));
    }

    #[test]
    fn observation_round_trips_own_cell() {
        let env = make_predator_prey(4, 3, 3).unwrap();
        let mut rng = rng_from_seed(9);
        let s = env.sample_initial_state(&mut rng);
        let o = env.sample_initial_obs(&s, &mut rng);
        for k in 0..4 {
            let m = env.initial_memory(AgentId(k), &o[k]);
            assert_eq!(m.cell, s.predators[k]);
            assert_eq!(m.at(0, 0), CODE_EMPTY);
        }
    }
}
