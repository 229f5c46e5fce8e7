//! Driving: general-sum grid navigation. Each agent drives from its start to a
//! destination; arriving pays +1, crashing into another vehicle -1, bumping a
//! wall -0.05 and each step that strictly shortens the shortest-path distance
//! to the destination +0.05. Episodes end when every vehicle has crashed or
//! arrived, or after 50 steps.
//!
//! Observation token layout (bits): `0..16` the 8 surrounding cells in
//! row-major order (2 bits each: empty, wall, vehicle, own destination),
//! `16..18` heading, `18..20` speed, `20` arrived, `21` crashed,
//! `22..30` destination cell.

use std::sync::Arc;

use rand::seq::SliceRandom;
use smallvec::SmallVec;

use super::grid::{AsciiLayout, Cell, Dir, DistanceTable, Grid};
use crate::error::{Error, Result};
use crate::posg::{Action, AgentId, GenerativeStep, Joint, Posg, PosgSpec, Rng};

pub const NOOP: Action = 0;
pub const ACCELERATE: Action = 1;
pub const DECELERATE: Action = 2;
pub const TURN_LEFT: Action = 3;
pub const TURN_RIGHT: Action = 4;
pub const N_ACTIONS: usize = 5;
pub const MAX_SPEED: u8 = 2;
pub const STEP_LIMIT: u16 = 50;

pub const R_ARRIVE: f64 = 1.0;
pub const R_CRASH: f64 = -1.0;
pub const R_BUMP: f64 = -0.05;
pub const R_PROGRESS: f64 = 0.05;

const VIEW_EMPTY: u64 = 0;
const VIEW_WALL: u64 = 1;
const VIEW_VEHICLE: u64 = 2;
const VIEW_DEST: u64 = 3;

pub const LAYOUTS: &[(&str, &str)] = &[(
    "crossroads-7x7",
    include_str!("../../layouts/driving_crossroads_7x7.txt"),
)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Driving,
    Arrived,
    Crashed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Vehicle {
    pub cell: Cell,
    pub heading: Dir,
    pub speed: u8,
    pub dest: Cell,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DrivingState {
    pub vehicles: SmallVec<[Vehicle; 4]>,
    pub step: u16,
}

/// Result of applying one action to a vehicle on an empty road.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MoveOutcome {
    pub cell: Cell,
    pub heading: Dir,
    pub speed: u8,
    pub bumped: bool,
    pub arrived: bool,
}

/// Turn, change speed, then advance one cell at a time up to `speed` cells,
/// stopping at a wall (speed drops to 0) or at the destination.
pub fn move_vehicle(grid: &Grid, cell: Cell, heading: Dir, speed: u8, dest: Cell, action: Action) -> MoveOutcome {
    let heading = match action {
        TURN_LEFT => heading.left(),
        TURN_RIGHT => heading.right(),
        _ => heading,
    };
    let speed = match action {
        ACCELERATE => (speed + 1).min(MAX_SPEED),
        DECELERATE => speed.saturating_sub(1),
        _ => speed,
    };
    let mut out = MoveOutcome {
        cell,
        heading,
        speed,
        bumped: false,
        arrived: false,
    };
    for _ in 0..speed {
        match grid.neighbor(out.cell, heading) {
            Some(next) => {
                out.cell = next;
                if next == dest {
                    out.arrived = true;
                    break;
                }
            }
            None => {
                out.bumped = true;
                out.speed = 0;
                break;
            }
        }
    }
    out
}

#[derive(Debug)]
pub struct Driving {
    spec: PosgSpec,
    grid: Grid,
    dist: DistanceTable,
    starts: Vec<Cell>,
    destinations: Vec<Vec<Cell>>,
    layout_id: String,
}

/// Agent-side summary of a Driving history: dead-reckoned pose plus the last view.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DrivingMemory {
    pub cell: Cell,
    pub heading: Dir,
    pub speed: u8,
    pub dest: Cell,
    pub status: Status,
    pub view: u16,
    pub t: u16,
}

impl DrivingMemory {
    pub fn vehicle_in_view(&self) -> bool {
        (0..8).any(|k| (self.view >> (2 * k)) & 3 == VIEW_VEHICLE as u16)
    }
}

pub fn make_driving(width: usize, height: usize, layout_id: &str, n_agents: usize) -> Result<Driving> {
    let text = LAYOUTS
        .iter()
        .find(|(id, _)| *id == layout_id)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::Config(format!("unknown driving layout `{layout_id}`")))?;
    let driving = Driving::from_layout(layout_id, &AsciiLayout::parse(text)?, n_agents)?;
    if driving.grid.width() != width || driving.grid.height() != height {
        return Err(Error::Config(format!(
            "layout `{layout_id}` is {}x{}, requested {width}x{height}",
            driving.grid.width(),
            driving.grid.height()
        )));
    }
    Ok(driving)
}

impl Driving {
    pub fn from_layout(layout_id: &str, layout: &AsciiLayout, n_agents: usize) -> Result<Self> {
        if n_agents < 2 {
            return Err(Error::Config("driving needs at least 2 agents".into()));
        }
        let mut starts = Vec::new();
        let mut destinations = Vec::new();
        for k in 0..n_agents {
            let digit = char::from_digit(k as u32, 10).ok_or_else(|| Error::Config("too many agents".into()))?;
            let letter = (b'a' + k as u8) as char;
            let start = layout.cells_marked(digit);
            let dests = layout.cells_marked(letter);
            if start.len() != 1 || dests.is_empty() {
                return Err(Error::Config(format!(
                    "layout `{layout_id}` has no start/destination for agent {k}"
                )));
            }
            starts.push(start[0]);
            destinations.push(dests);
        }
        let grid = layout.grid.clone();
        if grid.n_cells() > 256 {
            return Err(Error::Config("driving layouts are limited to 256 cells".into()));
        }
        let dist = DistanceTable::new(&grid);
        let spec = PosgSpec::new(
            vec![N_ACTIONS; n_agents],
            0.99,
            0.01,
            (R_CRASH + R_BUMP, R_ARRIVE + R_PROGRESS),
        )?;
        Ok(Self {
            spec,
            grid,
            dist,
            starts,
            destinations,
            layout_id: layout_id.to_string(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn distances(&self) -> &DistanceTable {
        &self.dist
    }

    pub fn layout_id(&self) -> &str {
        &self.layout_id
    }

    pub fn start(&self, agent: AgentId) -> Cell {
        self.starts[agent.0]
    }

    pub fn destinations(&self, agent: AgentId) -> &[Cell] {
        &self.destinations[agent.0]
    }

    /// Heading at the start: the first direction (N, E, S, W) that shortens the
    /// path to the destination.
    pub fn initial_heading(&self, cell: Cell, dest: Cell) -> Dir {
        let here = self.dist.get(cell, dest);
        Dir::ALL
            .into_iter()
            .find(|&d| self.grid.neighbor(cell, d).is_some_and(|n| self.dist.get(n, dest) < here))
            .unwrap_or(Dir::North)
    }

    /// Build a state directly; used by tests and scenario scripts.
    pub fn state_with_destinations(&self, dests: &[Cell]) -> DrivingState {
        let vehicles = self
            .starts
            .iter()
            .zip(dests)
            .map(|(&cell, &dest)| Vehicle {
                cell,
                heading: self.initial_heading(cell, dest),
                speed: 0,
                dest,
                status: Status::Driving,
            })
            .collect();
        DrivingState { vehicles, step: 0 }
    }

    fn observe(&self, state: &DrivingState, agent: usize) -> u64 {
        let me = &state.vehicles[agent];
        let (x, y) = self.grid.coords(me.cell);
        let mut view = 0u64;
        let mut k = 0;
        for dy in -1..=1i32 {
            for dx in -1..=1i32 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let code = match self.grid.cell_at(x as i32 + dx, y as i32 + dy) {
                    None => VIEW_WALL,
                    Some(c) if self.grid.is_wall(c) => VIEW_WALL,
                    Some(c) => {
                        let occupied = state
                            .vehicles
                            .iter()
                            .enumerate()
                            .any(|(j, v)| j != agent && v.status == Status::Driving && v.cell == c);
                        if occupied {
                            VIEW_VEHICLE
                        } else if c == me.dest {
                            VIEW_DEST
                        } else {
                            VIEW_EMPTY
                        }
                    }
                };
                view |= code << (2 * k);
                k += 1;
            }
        }
        view | (me.heading as u64) << 16
            | (me.speed as u64) << 18
            | ((me.status == Status::Arrived) as u64) << 20
            | ((me.status == Status::Crashed) as u64) << 21
            | (me.dest as u64) << 22
    }

    fn observe_all(&self, state: &DrivingState) -> Joint<u64> {
        (0..state.vehicles.len()).map(|k| self.observe(state, k)).collect()
    }
}

/// Decoded fields of a Driving observation token.
pub fn decode_obs(obs: u64) -> (u16, Dir, u8, bool, bool, Cell) {
    (
        (obs & 0xFFFF) as u16,
        Dir::from_index(((obs >> 16) & 3) as usize),
        ((obs >> 18) & 3) as u8,
        (obs >> 20) & 1 == 1,
        (obs >> 21) & 1 == 1,
        ((obs >> 22) & 0xFF) as Cell,
    )
}

impl Posg for Driving {
    type State = DrivingState;
    type Obs = u64;
    type Memory = DrivingMemory;

    fn spec(&self) -> &PosgSpec {
        &self.spec
    }

    fn sample_initial_state(&self, rng: &mut Rng) -> DrivingState {
        let dests: Vec<Cell> = self
            .destinations
            .iter()
            .map(|d| *d.choose(rng).expect("destinations are nonempty"))
            .collect();
        self.state_with_destinations(&dests)
    }

    fn sample_initial_obs(&self, state: &DrivingState, _rng: &mut Rng) -> Joint<u64> {
        self.observe_all(state)
    }

    fn sample_step(&self, state: &DrivingState, actions: &[Action], _rng: &mut Rng) -> GenerativeStep<DrivingState, u64> {
        let n = state.vehicles.len();
        let mut rewards: Joint<f64> = smallvec::smallvec![0.0; n];
        if self.is_terminal(state) {
            return GenerativeStep {
                next_state: state.clone(),
                joint_obs: self.observe_all(state),
                joint_reward: rewards,
            };
        }
        let mut next = state.clone();
        for (k, v) in next.vehicles.iter_mut().enumerate() {
            if v.status != Status::Driving {
                continue;
            }
            let before = self.dist.get(v.cell, v.dest);
            let out = move_vehicle(&self.grid, v.cell, v.heading, v.speed, v.dest, actions[k]);
            v.cell = out.cell;
            v.heading = out.heading;
            v.speed = out.speed;
            if out.bumped {
                rewards[k] += R_BUMP;
            }
            if self.dist.get(v.cell, v.dest) < before {
                rewards[k] += R_PROGRESS;
            }
            if out.arrived {
                v.status = Status::Arrived;
                v.speed = 0;
                rewards[k] += R_ARRIVE;
            }
        }
        // Crashes: two vehicles still on the road share a cell or swapped cells.
        let mut crashed = [false; 8];
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (&next.vehicles[i], &next.vehicles[j]);
                if a.status != Status::Driving || b.status != Status::Driving {
                    continue;
                }
                let same = a.cell == b.cell;
                let swapped = a.cell == state.vehicles[j].cell && b.cell == state.vehicles[i].cell;
                if same || swapped {
                    crashed[i] = true;
                    crashed[j] = true;
                }
            }
        }
        for k in 0..n {
            if crashed[k] {
                next.vehicles[k].status = Status::Crashed;
                next.vehicles[k].speed = 0;
                rewards[k] += R_CRASH;
            }
        }
        next.step += 1;
        GenerativeStep {
            joint_obs: self.observe_all(&next),
            next_state: next,
            joint_reward: rewards,
        }
    }

    fn is_terminal(&self, state: &DrivingState) -> bool {
        state.step >= STEP_LIMIT || state.vehicles.iter().all(|v| v.status != Status::Driving)
    }

    fn initial_memory(&self, agent: AgentId, obs: &u64) -> DrivingMemory {
        let (view, heading, speed, _, _, dest) = decode_obs(*obs);
        DrivingMemory {
            cell: self.starts[agent.0],
            heading,
            speed,
            dest,
            status: Status::Driving,
            view,
            t: 0,
        }
    }

    fn update_memory(&self, _agent: AgentId, m: &mut DrivingMemory, action: Action, obs: &u64) {
        let (view, heading, speed, arrived, crashed, _) = decode_obs(*obs);
        if m.status == Status::Driving {
            let out = move_vehicle(&self.grid, m.cell, m.heading, m.speed, m.dest, action);
            m.cell = out.cell;
        }
        m.status = if arrived {
            Status::Arrived
        } else if crashed {
            Status::Crashed
        } else {
            Status::Driving
        };
        m.heading = heading;
        m.speed = speed;
        m.view = view;
        m.t = m.t.saturating_add(1);
    }

    fn value_feature(&self, _agent: AgentId, m: &DrivingMemory) -> u64 {
        let status = match m.status {
            Status::Driving => 0,
            Status::Arrived => 1,
            Status::Crashed => 2,
        };
        let d = self.dist.get(m.cell, m.dest).min(63) as u64;
        d | (m.speed as u64) << 6 | (m.vehicle_in_view() as u64) << 8 | status << 9 | ((m.t / 10) as u64) << 11
    }
}

/// Shared handle used by the policy families.
pub type SharedDriving = Arc<Driving>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posg::{discounted_return, rng_from_seed};

    fn env() -> Driving {
        make_driving(7, 7, "crossroads-7x7", 2).unwrap()
    }

    #[test]
    fn unknown_layout_is_config_error() {
        assert!(matches!(make_driving(7, 7, "nope", 2), Err(Error::Config(_))));
        assert!(matches!(make_driving(8, 7, "crossroads-7x7", 2), Err(Error::Config(_))));
    }

    #[test]
    fn shortest_path_drive_collects_progress_and_arrival() {
        let env = env();
        let g = env.grid();
        // Agent 0 at (1,3) heading north toward (1,1); agent 1 parks.
        let mut s = env.state_with_destinations(&[g.cell(1, 1), g.cell(5, 1)]);
        s.vehicles[1].cell = g.cell(5, 5);
        s.vehicles[1].dest = g.cell(5, 1);
        assert_eq!(s.vehicles[0].heading, Dir::North);
        let mut rng = rng_from_seed(0);
        let mut rewards = Vec::new();
        // Accelerate once (moves 1 cell), then keep going (1 more cell) -> arrive.
        for a in [ACCELERATE, NOOP] {
            let out = env.sample_step(&s, &[a, NOOP], &mut rng);
            rewards.push(out.joint_reward[0]);
            s = out.next_state;
        }
        assert_eq!(s.vehicles[0].status, Status::Arrived);
        assert_eq!(rewards, vec![R_PROGRESS, R_PROGRESS + R_ARRIVE]);
        let total: f64 = rewards.iter().sum();
        assert!((total - (1.0 + 2.0 * 0.05)).abs() < 1e-12);
        assert!(discounted_return(&rewards, 0.99) > 1.0);
    }

    #[test]
    fn same_cell_is_a_crash_for_both() {
        let env = env();
        let g = env.grid();
        let mut s = env.state_with_destinations(&[g.cell(5, 5), g.cell(1, 5)]);
        s.vehicles[0].cell = g.cell(2, 3);
        s.vehicles[0].heading = Dir::East;
        s.vehicles[0].speed = 1;
        s.vehicles[1].cell = g.cell(4, 3);
        s.vehicles[1].heading = Dir::West;
        s.vehicles[1].speed = 1;
        let out = env.sample_step(&s, &[NOOP, NOOP], &mut rng_from_seed(0));
        assert_eq!(out.next_state.vehicles[0].cell, g.cell(3, 3));
        assert!(out.next_state.vehicles.iter().all(|v| v.status == Status::Crashed));
        assert!(env.is_terminal(&out.next_state));
        assert!(out.joint_reward.iter().all(|&r| r <= R_CRASH + R_PROGRESS + 1e-12));
        assert!(out.joint_reward.iter().all(|&r| r < 0.0));
    }

    #[test]
    fn swap_is_a_crash() {
        let env = env();
        let g = env.grid();
        let mut s = env.state_with_destinations(&[g.cell(5, 5), g.cell(1, 5)]);
        s.vehicles[0].cell = g.cell(2, 3);
        s.vehicles[0].heading = Dir::East;
        s.vehicles[0].speed = 1;
        s.vehicles[1].cell = g.cell(3, 3);
        s.vehicles[1].heading = Dir::West;
        s.vehicles[1].speed = 1;
        let out = env.sample_step(&s, &[NOOP, NOOP], &mut rng_from_seed(0));
        assert!(out.next_state.vehicles.iter().all(|v| v.status == Status::Crashed));
    }

    #[test]
    fn wall_bump_penalised() {
        let env = env();
        let g = env.grid();
        let mut s = env.state_with_destinations(&[g.cell(1, 1), g.cell(5, 1)]);
        s.vehicles[0].heading = Dir::West;
        s.vehicles[1].cell = g.cell(5, 5);
        let out = env.sample_step(&s, &[ACCELERATE, NOOP], &mut rng_from_seed(0));
        assert_eq!(out.joint_reward[0], R_BUMP);
        assert_eq!(out.next_state.vehicles[0].speed, 0);
    }

    #[test]
    fn step_limit_ends_without_bonus() {
        let env = env();
        let mut rng = rng_from_seed(1);
        let mut s = env.sample_initial_state(&mut rng);
        let mut steps = 0;
        while !env.is_terminal(&s) {
            // Everyone idles at speed 0.
            let out = env.sample_step(&s, &[NOOP, NOOP], &mut rng);
            assert!(out.joint_reward.iter().all(|&r| r == 0.0));
            s = out.next_state;
            steps += 1;
        }
        assert_eq!(steps, STEP_LIMIT as usize);
        let out = env.sample_step(&s, &[ACCELERATE, ACCELERATE], &mut rng);
        assert_eq!(out.next_state, s);
        assert!(out.joint_reward.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn dead_reckoning_tracks_true_pose() {
        use rand::Rng as _;
        let env = env();
        let mut rng = rng_from_seed(5);
        for _ in 0..200 {
            let mut s = env.sample_initial_state(&mut rng);
            let obs = env.sample_initial_obs(&s, &mut rng);
            let mut mems: Vec<_> = (0..2).map(|k| env.initial_memory(AgentId(k), &obs[k])).collect();
            while !env.is_terminal(&s) {
                let acts: Vec<Action> = (0..2).map(|_| rng.gen_range(0..N_ACTIONS)).collect();
                let out = env.sample_step(&s, &acts, &mut rng);
                for k in 0..2 {
                    env.update_memory(AgentId(k), &mut mems[k], acts[k], &out.joint_obs[k]);
                    assert_eq!(mems[k].cell, out.next_state.vehicles[k].cell);
                }
                s = out.next_state;
            }
        }
    }
}
