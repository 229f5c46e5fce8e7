//! Pursuit-Evasion: a zero-sum two-agent game. The evader (agent 0) tries to
//! reach one of the candidate safe cells, chosen at random each episode and
//! known only to the evader; the pursuer (agent 1) tries to see it first.
//!
//! Both agents move with relative actions (forward, back, left, right: turn,
//! then step one cell if it is free). Sensor bits per agent: four adjacent-wall
//! bits (N, E, S, W), a *seen* bit (opponent inside the vision cone) and a
//! *heard* bit (opponent within Manhattan distance 2). The evader's token also
//! carries the index of its safe cell above the six sensor bits.
//!
//! Vision cone: up to three cells ahead. The cell one ahead, and the three
//! cells across at two and three ahead, are visible while the straight line
//! ahead up to the previous row is free. The evader is caught when it is
//! inside the pursuer's cone, shares its cell, or the two swap cells.
//!
//! Rewards (evader; pursuer gets the negation): +1 on reaching the safe cell,
//! -1 when caught, +0.01 for each step that shortens the path to the safe cell.

use rand::Rng as _;

use super::grid::{AsciiLayout, Cell, Dir, DistanceTable, Grid};
use crate::error::{Error, Result};
use crate::posg::{Action, AgentId, GenerativeStep, Joint, Posg, PosgSpec, Rng};

pub const FORWARD: Action = 0;
pub const BACKWARD: Action = 1;
pub const LEFT: Action = 2;
pub const RIGHT: Action = 3;
pub const N_ACTIONS: usize = 4;
pub const STEP_LIMIT: u16 = 100;

pub const EVADER: AgentId = AgentId(0);
pub const PURSUER: AgentId = AgentId(1);

pub const R_GOAL: f64 = 1.0;
pub const R_CAUGHT: f64 = -1.0;
pub const R_PROGRESS: f64 = 0.01;

pub const SENSOR_BITS: u32 = 6;
const SEEN_BIT: u64 = 1 << 4;
const HEARD_BIT: u64 = 1 << 5;

pub const LAYOUTS: &[(&str, &str)] = &[("corridors-8x8", include_str!("../../layouts/pe_corridors_8x8.txt"))];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Running,
    Caught,
    Escaped,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PeState {
    pub evader: (Cell, Dir),
    pub pursuer: (Cell, Dir),
    pub goal: u8,
    pub outcome: Outcome,
    pub step: u16,
}

/// Agent-side summary: dead-reckoned pose, latest sensor bits, goal (evader).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PeMemory {
    pub cell: Cell,
    pub heading: Dir,
    pub sensors: u8,
    pub goal: Option<u8>,
    /// Steps since the opponent was last heard or seen (saturating).
    pub since_contact: u8,
    pub t: u16,
}

impl PeMemory {
    pub fn heard(&self) -> bool {
        self.sensors as u64 & HEARD_BIT != 0
    }

    pub fn seen(&self) -> bool {
        self.sensors as u64 & SEEN_BIT != 0
    }

    pub fn wall(&self, dir: Dir) -> bool {
        self.sensors >> dir as u8 & 1 == 1
    }
}

#[derive(Debug)]
pub struct PursuitEvasion {
    spec: PosgSpec,
    grid: Grid,
    dist: DistanceTable,
    evader_start: Cell,
    pursuer_start: Cell,
    goals: Vec<Cell>,
    layout_id: String,
}

pub fn make_pursuit_evasion(layout_id: &str) -> Result<PursuitEvasion> {
    let text = LAYOUTS
        .iter()
        .find(|(id, _)| *id == layout_id)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::Config(format!("unknown pursuit-evasion layout `{layout_id}`")))?;
    PursuitEvasion::from_layout(layout_id, &AsciiLayout::parse(text)?)
}

/// Turn according to a relative action.
pub fn turn(heading: Dir, action: Action) -> Dir {
    match action {
        FORWARD => heading,
        BACKWARD => heading.reverse(),
        LEFT => heading.left(),
        _ => heading.right(),
    }
}

/// Pose after a relative action: turn, then step if the cell ahead is free.
pub fn move_agent(grid: &Grid, cell: Cell, heading: Dir, action: Action) -> (Cell, Dir) {
    let h = turn(heading, action);
    (grid.neighbor(cell, h).unwrap_or(cell), h)
}

/// Cells inside the vision cone of an agent at `cell` facing `heading`.
pub fn vision_cone(grid: &Grid, cell: Cell, heading: Dir) -> Vec<Cell> {
    let (x, y) = grid.coords(cell);
    let (fx, fy) = heading.delta();
    let (lx, ly) = heading.right().delta();
    let mut out = Vec::with_capacity(7);
    for depth in 1..=3i32 {
        // The straight line up to the previous row must be clear.
        let centre_prev = grid.cell_at(x as i32 + fx * (depth - 1), y as i32 + fy * (depth - 1));
        if depth > 1 && !centre_prev.is_some_and(|c| !grid.is_wall(c)) {
            break;
        }
        let lateral: &[i32] = if depth == 1 { &[0] } else { &[-1, 0, 1] };
        for &l in lateral {
            if let Some(c) = grid.cell_at(x as i32 + fx * depth + lx * l, y as i32 + fy * depth + ly * l) {
                if !grid.is_wall(c) {
                    out.push(c);
                }
            }
        }
    }
    out
}

impl PursuitEvasion {
    pub fn from_layout(layout_id: &str, layout: &AsciiLayout) -> Result<Self> {
        let evader = layout.cells_marked('E');
        let pursuer = layout.cells_marked('P');
        let goals = layout.cells_marked('G');
        if evader.len() != 1 || pursuer.len() != 1 || goals.len() < 2 || goals.len() > 4 {
            return Err(Error::Config(format!(
                "layout `{layout_id}` needs one E, one P and 2-4 G markers"
            )));
        }
        let grid = layout.grid.clone();
        let dist = DistanceTable::new(&grid);
        let spec = PosgSpec::new(
            vec![N_ACTIONS; 2],
            0.99,
            0.01,
            (R_CAUGHT - R_PROGRESS, R_GOAL + R_PROGRESS),
        )?;
        Ok(Self {
            spec,
            grid,
            dist,
            evader_start: evader[0],
            pursuer_start: pursuer[0],
            goals,
            layout_id: layout_id.to_string(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn distances(&self) -> &DistanceTable {
        &self.dist
    }

    pub fn goals(&self) -> &[Cell] {
        &self.goals
    }

    pub fn layout_id(&self) -> &str {
        &self.layout_id
    }

    pub fn start(&self, agent: AgentId) -> Cell {
        if agent == EVADER {
            self.evader_start
        } else {
            self.pursuer_start
        }
    }

    /// First free direction in N, E, S, W order.
    pub fn start_heading(&self, cell: Cell) -> Dir {
        Dir::ALL
            .into_iter()
            .find(|&d| self.grid.neighbor(cell, d).is_some())
            .unwrap_or(Dir::North)
    }

    pub fn state_with_goal(&self, goal: u8) -> PeState {
        PeState {
            evader: (self.evader_start, self.start_heading(self.evader_start)),
            pursuer: (self.pursuer_start, self.start_heading(self.pursuer_start)),
            goal,
            outcome: Outcome::Running,
            step: 0,
        }
    }

    pub fn sees(&self, watcher: (Cell, Dir), target: Cell) -> bool {
        watcher.0 == target || vision_cone(&self.grid, watcher.0, watcher.1).contains(&target)
    }

    fn sensors(&self, me: (Cell, Dir), other: Cell) -> u64 {
        let mut bits = 0u64;
        for d in Dir::ALL {
            if self.grid.neighbor(me.0, d).is_none() {
                bits |= 1 << d as u64;
            }
        }
        if self.sees(me, other) {
            bits |= SEEN_BIT;
        }
        if self.grid.manhattan(me.0, other) <= 2 {
            bits |= HEARD_BIT;
        }
        bits
    }

    fn observe(&self, s: &PeState) -> Joint<u64> {
        let evader = self.sensors(s.evader, s.pursuer.0) | (s.goal as u64) << SENSOR_BITS;
        let mut pursuer = self.sensors(s.pursuer, s.evader.0);
        if s.outcome == Outcome::Caught {
            pursuer |= SEEN_BIT;
        }
        smallvec::smallvec![evader, pursuer]
    }

    pub fn goal_distance(&self, cell: Cell, goal: u8) -> u16 {
        self.dist.get(cell, self.goals[goal as usize])
    }
}

impl Posg for PursuitEvasion {
    type State = PeState;
    type Obs = u64;
    type Memory = PeMemory;

    fn spec(&self) -> &PosgSpec {
        &self.spec
    }

    fn sample_initial_state(&self, rng: &mut Rng) -> PeState {
        self.state_with_goal(rng.gen_range(0..self.goals.len()) as u8)
    }

    fn sample_initial_obs(&self, state: &PeState, _rng: &mut Rng) -> Joint<u64> {
        self.observe(state)
    }

    fn sample_step(&self, s: &PeState, actions: &[Action], _rng: &mut Rng) -> GenerativeStep<PeState, u64> {
        if self.is_terminal(s) {
            return GenerativeStep {
                next_state: s.clone(),
                joint_obs: self.observe(s),
                joint_reward: smallvec::smallvec![0.0, 0.0],
            };
        }
        let mut next = s.clone();
        next.evader = move_agent(&self.grid, s.evader.0, s.evader.1, actions[0]);
        next.pursuer = move_agent(&self.grid, s.pursuer.0, s.pursuer.1, actions[1]);
        let mut r = 0.0;
        if self.goal_distance(next.evader.0, s.goal) < self.goal_distance(s.evader.0, s.goal) {
            r += R_PROGRESS;
        }
        let swapped = next.evader.0 == s.pursuer.0 && next.pursuer.0 == s.evader.0;
        if swapped || self.sees(next.pursuer, next.evader.0) {
            next.outcome = Outcome::Caught;
            r += R_CAUGHT;
        } else if next.evader.0 == self.goals[s.goal as usize] {
            next.outcome = Outcome::Escaped;
            r += R_GOAL;
        }
        next.step += 1;
        GenerativeStep {
            joint_obs: self.observe(&next),
            next_state: next,
            joint_reward: smallvec::smallvec![r, -r],
        }
    }

    fn is_terminal(&self, s: &PeState) -> bool {
        s.outcome != Outcome::Running || s.step >= STEP_LIMIT
    }

    fn initial_memory(&self, agent: AgentId, obs: &u64) -> PeMemory {
        let cell = self.start(agent);
        let sensors = (obs & 0x3F) as u8;
        PeMemory {
            cell,
            heading: self.start_heading(cell),
            sensors,
            goal: (agent == EVADER).then_some((obs >> SENSOR_BITS) as u8),
            since_contact: if sensors & 0x30 != 0 { 0 } else { u8::MAX },
            t: 0,
        }
    }

    fn update_memory(&self, _agent: AgentId, m: &mut PeMemory, action: Action, obs: &u64) {
        (m.cell, m.heading) = move_agent(&self.grid, m.cell, m.heading, action);
        m.sensors = (obs & 0x3F) as u8;
        m.since_contact = if m.sensors & 0x30 != 0 { 0 } else { m.since_contact.saturating_add(1) };
        m.t = m.t.saturating_add(1);
    }

    fn value_feature(&self, _agent: AgentId, m: &PeMemory) -> u64 {
        let d = match m.goal {
            Some(g) => self.goal_distance(m.cell, g),
            None => self.goals.iter().map(|&g| self.dist.get(m.cell, g)).min().unwrap_or(0),
        };
        let contact = m.since_contact.min(3) as u64;
        (d.min(63) as u64) | contact << 6 | (m.seen() as u64) << 8 | ((m.t / 20) as u64) << 9
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posg::rng_from_seed;

    fn env() -> PursuitEvasion {
        make_pursuit_evasion("corridors-8x8").unwrap()
    }

    #[test]
    fn unknown_layout_rejected() {
        assert!(matches!(make_pursuit_evasion("open-8x8"), Err(Error::Config(_))));
    }

    #[test]
    fn layout_is_connected() {
        let env = env();
        for c in env.grid().free_cells() {
            assert!(env.distances().get(env.evader_start, c) != super::super::grid::UNREACHABLE);
        }
    }

    #[test]
    fn escaping_unseen_is_zero_sum_win() {
        let env = env();
        let g = env.grid();
        let mut s = env.state_with_goal(0);
        s.evader = (g.cell(6, 2), Dir::North);
        assert_eq!(env.goals()[0], g.cell(6, 1));
        let out = env.sample_step(&s, &[FORWARD, FORWARD], &mut rng_from_seed(0));
        assert_eq!(out.next_state.outcome, Outcome::Escaped);
        assert!(out.joint_reward[0] > 0.0);
        assert_eq!(out.joint_reward[0], -out.joint_reward[1]);
        assert!(env.is_terminal(&out.next_state));
    }

    #[test]
    fn entering_cone_is_caught() {
        let env = env();
        let g = env.grid();
        let mut s = env.state_with_goal(1);
        s.pursuer = (g.cell(1, 6), Dir::North);
        s.evader = (g.cell(1, 2), Dir::South);
        // Evader steps to (1,3), which is three cells ahead of the pursuer.
        let out = env.sample_step(&s, &[FORWARD, LEFT], &mut rng_from_seed(0));
        // Pursuer turned west into the wall, so it still stands on (1,6) facing west.
        assert_eq!(out.next_state.outcome, Outcome::Running);
        let out = env.sample_step(&s, &[FORWARD, FORWARD], &mut rng_from_seed(0));
        // Pursuer moves to (1,5); evader at (1,3) is two ahead.
        assert_eq!(out.next_state.outcome, Outcome::Caught);
        assert_eq!(out.joint_reward[0], R_CAUGHT + R_PROGRESS);
        assert_eq!(out.joint_obs[1] & SEEN_BIT, SEEN_BIT);
    }

    #[test]
    fn cone_is_blocked_by_walls() {
        let env = env();
        let g = env.grid();
        let cone = vision_cone(g, g.cell(4, 6), Dir::North);
        // (4,5) is a wall, so nothing is visible northwards.
        assert!(cone.is_empty());
        let cone = vision_cone(g, g.cell(1, 1), Dir::East);
        assert!(cone.contains(&g.cell(2, 1)) && cone.contains(&g.cell(3, 1)) && cone.contains(&g.cell(4, 1)));
        assert!(!cone.contains(&g.cell(5, 1)));
    }

    #[test]
    fn random_play_is_zero_sum_with_six_sensor_bits() {
        let env = env();
        let mut rng = rng_from_seed(11);
        for _ in 0..10_000 {
            let mut s = env.sample_initial_state(&mut rng);
            let o = env.sample_initial_obs(&s, &mut rng);
            assert!(o[1] < 1 << SENSOR_BITS);
            while !env.is_terminal(&s) {
                let a = [rng.gen_range(0..4), rng.gen_range(0..4)];
                let out = env.sample_step(&s, &a, &mut rng);
                assert!((out.joint_reward[0] + out.joint_reward[1]).abs() < 1e-9);
                assert!(out.joint_obs[1] < 1 << SENSOR_BITS);
                assert!(out.joint_obs[0] >> SENSOR_BITS == s.goal as u64);
                let (lo, hi) = (env.spec().reward_min, env.spec().reward_max);
                assert!(out.joint_reward.iter().all(|&r| r >= lo && r <= hi));
                s = out.next_state;
            }
        }
    }

    #[test]
    fn dead_reckoning_matches_state() {
        let env = env();
        let mut rng = rng_from_seed(3);
        for _ in 0..200 {
            let mut s = env.sample_initial_state(&mut rng);
            let o = env.sample_initial_obs(&s, &mut rng);
            let mut m = [env.initial_memory(EVADER, &o[0]), env.initial_memory(PURSUER, &o[1])];
            assert_eq!(m[0].goal, Some(s.goal));
            while !env.is_terminal(&s) {
                let a = [rng.gen_range(0..4), rng.gen_range(0..4)];
                let out = env.sample_step(&s, &a, &mut rng);
                env.update_memory(EVADER, &mut m[0], a[0], &out.joint_obs[0]);
                env.update_memory(PURSUER, &mut m[1], a[1], &out.joint_obs[1]);
                assert_eq!((m[0].cell, m[0].heading), out.next_state.evader);
                assert_eq!((m[1].cell, m[1].heading), out.next_state.pursuer);
                s = out.next_state;
            }
        }
    }
}
