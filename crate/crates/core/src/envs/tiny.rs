//! TinyPosg: small games given by explicit tables, small enough for the exact
//! oracle. Observations of different agents are conditionally independent
//! given the next state and joint action.
//!
//! Joint actions are flattened with agent 0 most significant:
//! `index = ((a0 * |A1|) + a1) * |A2| + ...`.

use crate::error::{Error, Result};
use crate::posg::{sample_categorical, Action, AgentId, GenerativeStep, History, Joint, Posg, PosgSpec, Rng};

pub const MAX_STATES: usize = 20;
pub const MAX_ACTIONS: usize = 3;
pub const MAX_OBS: usize = 4;
const ROW_TOL: f64 = 1e-9;

/// Shipped instance identifiers.
pub const INSTANCES: &[&str] = &["coord", "reveal", "tiger", "noop"];

/// Raw tables. Indexing: `t[s][ja][s']`, `z[k][s'][ja][o]`, `z0[k][s][o]`,
/// `r[k][s][ja]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyTables {
    pub action_counts: Vec<usize>,
    pub obs_counts: Vec<usize>,
    pub b0: Vec<f64>,
    pub t: Vec<Vec<Vec<f64>>>,
    pub z: Vec<Vec<Vec<Vec<f64>>>>,
    pub z0: Vec<Vec<Vec<f64>>>,
    pub r: Vec<Vec<Vec<f64>>>,
    pub terminal: Vec<bool>,
    pub gamma: f64,
    pub epsilon: f64,
    pub reward_range: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct TinyPosgModel {
    id: String,
    spec: PosgSpec,
    tables: TinyTables,
    strides: Vec<usize>,
}

fn check_row(row: &[f64], what: impl FnOnce() -> String) -> Result<()> {
    let sum: f64 = row.iter().sum();
    if row.iter().any(|p| !(0.0..=1.0 + ROW_TOL).contains(p)) || (sum - 1.0).abs() > ROW_TOL {
        return Err(Error::Validation(format!("{} sums to {sum} (row {row:?})", what())));
    }
    Ok(())
}

impl TinyPosgModel {
    pub fn new(id: &str, tables: TinyTables) -> Result<Self> {
        let n = tables.action_counts.len();
        let spec = PosgSpec::new(
            tables.action_counts.clone(),
            tables.gamma,
            tables.epsilon,
            tables.reward_range,
        )?;
        let n_states = tables.b0.len();
        if n_states == 0 || n_states > MAX_STATES {
            return Err(Error::Validation(format!("|S| = {n_states} outside 1..={MAX_STATES}")));
        }
        if tables.action_counts.iter().any(|&c| c > MAX_ACTIONS) {
            return Err(Error::Validation(format!("action counts {:?} exceed {MAX_ACTIONS}", tables.action_counts)));
        }
        if tables.obs_counts.len() != n || tables.obs_counts.iter().any(|&c| c == 0 || c > MAX_OBS) {
            return Err(Error::Validation(format!("observation counts {:?} invalid", tables.obs_counts)));
        }
        let mut strides = vec![1; n];
        for k in (0..n.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * tables.action_counts[k + 1];
        }
        let n_joint = strides[0] * tables.action_counts[0];
        let shape = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Validation(format!("table {what} has the wrong shape")))
            }
        };
        shape(tables.terminal.len() == n_states, "terminal")?;
        shape(
            tables.t.len() == n_states && tables.t.iter().all(|a| a.len() == n_joint && a.iter().all(|r| r.len() == n_states)),
            "T",
        )?;
        shape(
            tables.z.len() == n
                && tables.z.iter().enumerate().all(|(k, zk)| {
                    zk.len() == n_states
                        && zk.iter().all(|a| a.len() == n_joint && a.iter().all(|r| r.len() == tables.obs_counts[k]))
                }),
            "Z",
        )?;
        shape(
            tables.z0.len() == n
                && tables
                    .z0
                    .iter()
                    .enumerate()
                    .all(|(k, zk)| zk.len() == n_states && zk.iter().all(|r| r.len() == tables.obs_counts[k])),
            "Z0",
        )?;
        shape(
            tables.r.len() == n && tables.r.iter().all(|rk| rk.len() == n_states && rk.iter().all(|r| r.len() == n_joint)),
            "R",
        )?;
        check_row(&tables.b0, || "b0".to_string())?;
        for s in 0..n_states {
            for ja in 0..n_joint {
                check_row(&tables.t[s][ja], || format!("T[s={s}][ja={ja}]"))?;
                if tables.terminal[s] && tables.t[s][ja][s] != 1.0 {
                    return Err(Error::Validation(format!("T[s={s}][ja={ja}]: terminal state is not absorbing")));
                }
                for k in 0..n {
                    check_row(&tables.z[k][s][ja], || format!("Z[agent={k}][s'={s}][ja={ja}]"))?;
                    let r = tables.r[k][s][ja];
                    if !(tables.reward_range.0..=tables.reward_range.1).contains(&r) {
                        return Err(Error::Validation(format!("R[agent={k}][s={s}][ja={ja}] = {r} out of bounds")));
                    }
                    if tables.terminal[s] && r != 0.0 {
                        return Err(Error::Validation(format!("R[agent={k}][s={s}][ja={ja}]: terminal reward must be 0")));
                    }
                }
            }
            for k in 0..n {
                check_row(&tables.z0[k][s], || format!("Z0[agent={k}][s={s}]"))?;
            }
        }
        Ok(Self {
            id: id.to_string(),
            spec,
            tables,
            strides,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tables(&self) -> &TinyTables {
        &self.tables
    }

    pub fn n_states(&self) -> usize {
        self.tables.b0.len()
    }

    pub fn n_joint_actions(&self) -> usize {
        self.strides[0] * self.tables.action_counts[0]
    }

    pub fn obs_count(&self, agent: AgentId) -> usize {
        self.tables.obs_counts[agent.0]
    }

    pub fn joint_index(&self, actions: &[Action]) -> usize {
        actions.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    pub fn joint_actions(&self, index: usize) -> Joint<Action> {
        self.strides
            .iter()
            .zip(&self.tables.action_counts)
            .map(|(s, c)| index / s % c)
            .collect()
    }

    pub fn b0(&self, s: usize) -> f64 {
        self.tables.b0[s]
    }

    pub fn transition(&self, s: usize, ja: usize, s2: usize) -> f64 {
        self.tables.t[s][ja][s2]
    }

    pub fn observation(&self, agent: AgentId, s2: usize, ja: usize, o: usize) -> f64 {
        self.tables.z[agent.0][s2][ja][o]
    }

    pub fn initial_observation(&self, agent: AgentId, s: usize, o: usize) -> f64 {
        self.tables.z0[agent.0][s][o]
    }

    pub fn reward(&self, agent: AgentId, s: usize, ja: usize) -> f64 {
        self.tables.r[agent.0][s][ja]
    }
}

impl Posg for TinyPosgModel {
    type State = usize;
    type Obs = usize;
    type Memory = History<usize>;

    fn spec(&self) -> &PosgSpec {
        &self.spec
    }

    fn sample_initial_state(&self, rng: &mut Rng) -> usize {
        sample_categorical(&self.tables.b0, rng)
    }

    fn sample_initial_obs(&self, s: &usize, rng: &mut Rng) -> Joint<usize> {
        self.tables.z0.iter().map(|zk| sample_categorical(&zk[*s], rng)).collect()
    }

    fn sample_step(&self, s: &usize, actions: &[Action], rng: &mut Rng) -> GenerativeStep<usize, usize> {
        let ja = self.joint_index(actions);
        let next = sample_categorical(&self.tables.t[*s][ja], rng);
        GenerativeStep {
            next_state: next,
            joint_obs: self.tables.z.iter().map(|zk| sample_categorical(&zk[next][ja], rng)).collect(),
            joint_reward: self.tables.r.iter().map(|rk| rk[*s][ja]).collect(),
        }
    }

    fn is_terminal(&self, s: &usize) -> bool {
        self.tables.terminal[*s]
    }

    fn initial_memory(&self, _agent: AgentId, obs: &usize) -> History<usize> {
        History::with_initial(*obs)
    }

    fn empty_memory(&self, _agent: AgentId) -> Option<History<usize>> {
        Some(History::empty())
    }

    fn update_memory(&self, _agent: AgentId, m: &mut History<usize>, action: Action, obs: &usize) {
        m.push(action, *obs);
    }
}

pub fn make_tiny_posg(spec_id: &str) -> Result<TinyPosgModel> {
    let tables = match spec_id {
        "coord" => coord(),
        "reveal" => reveal(),
        "tiger" => tiger(),
        "noop" => noop(),
        _ => return Err(Error::Config(format!("unknown tiny instance `{spec_id}`"))),
    };
    TinyPosgModel::new(spec_id, tables)
}

const GAMMA: f64 = 0.5;
const EPSILON: f64 = 0.06;

/// Fill `z[s'][ja]` from a function of the joint action.
fn obs_table(n_states: usize, acts: &[usize], n_obs: usize, f: impl Fn(usize, &[usize]) -> Vec<f64>) -> Vec<Vec<Vec<f64>>> {
    let n_joint: usize = acts.iter().product();
    (0..n_states)
        .map(|s2| {
            (0..n_joint)
                .map(|ja| {
                    let a = unflatten(ja, acts);
                    let row = f(s2, &a);
                    debug_assert_eq!(row.len(), n_obs);
                    row
                })
                .collect()
        })
        .collect()
}

fn unflatten(mut ja: usize, acts: &[usize]) -> Vec<usize> {
    let mut out = vec![0; acts.len()];
    for k in (0..acts.len()).rev() {
        out[k] = ja % acts[k];
        ja /= acts[k];
    }
    out
}

fn one_hot(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

fn per_joint(n_states: usize, acts: &[usize], f: impl Fn(usize, &[usize]) -> f64) -> Vec<Vec<f64>> {
    let n_joint: usize = acts.iter().product();
    (0..n_states)
        .map(|s| (0..n_joint).map(|ja| f(s, &unflatten(ja, acts))).collect())
        .collect()
}

/// Coordination under noise. The planner picks Left, Right or Safe; the other
/// picks Left or Right. Matching pays +1, mismatching -1. Safe pays
/// [`COORD_SAFE`] in the calm state and [`COORD_SAFE_WINDY`] in the windy one;
/// the weather is redrawn every step (calm with probability 0.7) and never
/// observed. The planner sees the other's action with accuracy 0.8; the other
/// sees the planner's action exactly.
pub const COORD_SAFE: f64 = 0.4;
pub const COORD_SAFE_WINDY: f64 = 0.1;
pub const COORD_CALM: f64 = 0.7;

fn coord() -> TinyTables {
    let acts = [3, 2];
    let weather = vec![COORD_CALM, 1.0 - COORD_CALM];
    let reward = |s: usize, a: &[usize]| match (a[0], a[1]) {
        (2, _) if s == 0 => COORD_SAFE,
        (2, _) => COORD_SAFE_WINDY,
        (x, y) if x == y => 1.0,
        _ => -1.0,
    };
    TinyTables {
        action_counts: acts.to_vec(),
        obs_counts: vec![2, 3],
        b0: weather.clone(),
        t: vec![vec![weather; 6]; 2],
        z: vec![
            obs_table(2, &acts, 2, |_, a| if a[1] == 0 { vec![0.8, 0.2] } else { vec![0.2, 0.8] }),
            obs_table(2, &acts, 3, |_, a| one_hot(3, a[0])),
        ],
        z0: vec![vec![one_hot(2, 0); 2], vec![one_hot(3, 2); 2]],
        r: vec![per_joint(2, &acts, reward), per_joint(2, &acts, reward)],
        terminal: vec![false, false],
        gamma: GAMMA,
        epsilon: EPSILON,
        reward_range: (-1.0, 1.0),
    }
}

/// Matching pennies against a type that gives itself away on the first move.
/// The state records the other's last action, which the planner observes
/// exactly; matching it pays +1.
fn reveal() -> TinyTables {
    let acts = [2, 2];
    let reward = |_s: usize, a: &[usize]| if a[0] == a[1] { 1.0 } else { 0.0 };
    TinyTables {
        action_counts: acts.to_vec(),
        obs_counts: vec![2, 2],
        b0: vec![0.5, 0.5],
        t: (0..2).map(|_| (0..4).map(|ja| one_hot(2, unflatten(ja, &acts)[1])).collect()).collect(),
        z: vec![
            obs_table(2, &acts, 2, |s2, _| one_hot(2, s2)),
            obs_table(2, &acts, 2, |_, a| one_hot(2, a[0])),
        ],
        z0: vec![vec![one_hot(2, 0); 2], vec![one_hot(2, 0); 2]],
        r: vec![per_joint(2, &acts, reward), per_joint(2, &acts, reward)],
        terminal: vec![false, false],
        gamma: GAMMA,
        epsilon: EPSILON,
        reward_range: (0.0, 1.0),
    }
}

/// The tiger problem with an idle second agent. States: tiger left, tiger
/// right, done. Actions: listen (-0.05, 0.85 accurate), open left, open right
/// (+1 for the tiger-free door, -1 otherwise, then done). The first
/// observation is 0.7 accurate.
fn tiger() -> TinyTables {
    let acts = [3, 1];
    let (tl, tr, done) = (0, 1, 2);
    let t = (0..3)
        .map(|s| {
            (0..3)
                .map(|a| if s == done || a != 0 { one_hot(3, done) } else { one_hot(3, s) })
                .collect()
        })
        .collect();
    let r0 = per_joint(3, &acts, |s, a| match (s, a[0]) {
        (2, _) => 0.0,
        (_, 0) => -0.05,
        (s, 1) if s == tr => 1.0,
        (s, 2) if s == tl => 1.0,
        _ => -1.0,
    });
    TinyTables {
        action_counts: acts.to_vec(),
        obs_counts: vec![3, 1],
        b0: vec![0.5, 0.5, 0.0],
        t,
        z: vec![
            obs_table(3, &acts, 3, |s2, a| match (s2, a[0]) {
                (2, _) => one_hot(3, 2),
                (s, 0) if s == tl => vec![0.85, 0.15, 0.0],
                (_, 0) => vec![0.15, 0.85, 0.0],
                _ => one_hot(3, 2),
            }),
            obs_table(3, &acts, 1, |_, _| vec![1.0]),
        ],
        z0: vec![
            vec![vec![0.7, 0.3, 0.0], vec![0.3, 0.7, 0.0], one_hot(3, 2)],
            vec![vec![1.0]; 3],
        ],
        r: vec![r0, per_joint(3, &acts, |_, _| 0.0)],
        terminal: vec![false, false, true],
        gamma: GAMMA,
        epsilon: EPSILON,
        reward_range: (-1.0, 1.0),
    }
}

/// A planner with a single action and nothing to observe; it is paid when the
/// other agent plays action 0.
fn noop() -> TinyTables {
    let acts = [1, 2];
    let reward = |_s: usize, a: &[usize]| if a[1] == 0 { 1.0 } else { 0.0 };
    TinyTables {
        action_counts: acts.to_vec(),
        obs_counts: vec![1, 1],
        b0: vec![1.0],
        t: vec![vec![vec![1.0]; 2]],
        z: vec![obs_table(1, &acts, 1, |_, _| vec![1.0]), obs_table(1, &acts, 1, |_, _| vec![1.0])],
        z0: vec![vec![vec![1.0]], vec![vec![1.0]]],
        r: vec![per_joint(1, &acts, reward), per_joint(1, &acts, |_, _| 0.0)],
        terminal: vec![false],
        gamma: GAMMA,
        epsilon: EPSILON,
        reward_range: (0.0, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posg::{generative_step, rng_from_seed};
    use rand::Rng as _;

    #[test]
    fn shipped_instances_are_stochastic() {
        for id in INSTANCES {
            let m = make_tiny_posg(id).unwrap();
            for s in 0..m.n_states() {
                for ja in 0..m.n_joint_actions() {
                    let sum: f64 = (0..m.n_states()).map(|s2| m.transition(s, ja, s2)).sum();
                    assert!((sum - 1.0).abs() <= 1e-9, "{id}");
                    for k in 0..2 {
                        let (lo, hi) = (m.spec().reward_min, m.spec().reward_max);
                        let r = m.reward(AgentId(k), s, ja);
                        assert!(r >= lo && r <= hi);
                    }
                }
            }
        }
        assert!(matches!(make_tiny_posg("big"), Err(Error::Config(_))));
    }

    #[test]
    fn malformed_row_is_reported() {
        let mut t = coord();
        t.t[0][4] = vec![0.9, 0.05];
        let err = TinyPosgModel::new("bad", t).unwrap_err().to_string();
        assert!(err.contains("T[s=0][ja=4]"), "{err}");
        let mut t = tiger();
        t.z[0][1][0] = vec![0.5, 0.4, 0.0];
        let err = TinyPosgModel::new("bad", t).unwrap_err().to_string();
        assert!(err.contains("Z[agent=0][s'=1][ja=0]"), "{err}");
    }

    #[test]
    fn joint_index_round_trip() {
        let m = make_tiny_posg("coord").unwrap();
        for ja in 0..m.n_joint_actions() {
            assert_eq!(m.joint_index(&m.joint_actions(ja)), ja);
        }
        assert_eq!(m.joint_index(&[2, 1]), 5);
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let m = make_tiny_posg("tiger").unwrap();
        let a = generative_step(&m, &0, &[0, 0], &mut rng_from_seed(4)).unwrap();
        let b = generative_step(&m, &0, &[0, 0], &mut rng_from_seed(4)).unwrap();
        assert_eq!(a, b);
        assert!(generative_step(&m, &0, &[3, 0], &mut rng_from_seed(4)).is_err());
    }

    #[test]
    fn terminal_is_absorbing() {
        let m = make_tiny_posg("tiger").unwrap();
        let mut rng = rng_from_seed(0);
        for a in 0..3 {
            let out = m.sample_step(&2, &[a, 0], &mut rng);
            assert_eq!(out.next_state, 2);
            assert!(out.joint_reward.iter().all(|&r| r == 0.0));
        }
    }

    #[test]
    fn sampling_frequencies_match_tables() {
        let n = 100_000;
        let m = make_tiny_posg("coord").unwrap();
        let mut rng = rng_from_seed(17);
        let mut calm = 0;
        for _ in 0..n {
            calm += (m.sample_step(&1, &[2, 0], &mut rng).next_state == 0) as usize;
        }
        assert!((calm as f64 / n as f64 - m.transition(1, 4, 0)).abs() <= 0.01);
        let m = make_tiny_posg("tiger").unwrap();
        let mut hits = [0usize; 3];
        for _ in 0..n {
            let out = m.sample_step(&0, &[0, 0], &mut rng);
            hits[out.joint_obs[0]] += 1;
        }
        assert!((hits[0] as f64 / n as f64 - 0.85).abs() <= 0.01);
        let m = make_tiny_posg("coord").unwrap();
        let mut agree = 0;
        for _ in 0..n {
            let a1 = rng.gen_range(0..2);
            let out = m.sample_step(&0, &[0, a1], &mut rng);
            agree += (out.joint_obs[0] == a1) as usize;
        }
        assert!((agree as f64 / n as f64 - 0.8).abs() <= 0.01);
        let m = make_tiny_posg("reveal").unwrap();
        let mut ones = 0;
        for _ in 0..n {
            ones += m.sample_initial_state(&mut rng);
        }
        assert!((ones as f64 / n as f64 - 0.5).abs() <= 0.01);
    }
}
