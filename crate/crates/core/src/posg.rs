//! The partially observable stochastic game formalism every other module builds on.
//!
//! Environments implement [`Posg`], a generative model over joint actions. Each
//! agent's interaction history is summarised by an environment-defined
//! [`Posg::Memory`] value which is a deterministic function of that history, so a
//! policy defined over memories is a stationary history-based policy.

use std::fmt::Debug;
use std::hash::Hash;

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// The random number generator used throughout the crate.
pub type Rng = ChaCha8Rng;

/// Index of an action within an agent's action space.
pub type Action = usize;

/// One entry per agent.
pub type Joint<T> = SmallVec<[T; 4]>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub usize);

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "agent{}", self.0)
    }
}

/// Static description of a game: agents, action counts, discount and precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosgSpec {
    pub action_counts: Vec<usize>,
    pub gamma: f64,
    pub epsilon: f64,
    pub reward_min: f64,
    pub reward_max: f64,
}

impl PosgSpec {
    pub fn new(action_counts: Vec<usize>, gamma: f64, epsilon: f64, rewards: (f64, f64)) -> Result<Self> {
        if action_counts.len() < 2 {
            return Err(Error::Validation(format!(
                "a game needs at least 2 agents, got {}",
                action_counts.len()
            )));
        }
        if let Some(agent) = action_counts.iter().position(|&c| c == 0) {
            return Err(Error::Validation(format!("agent {agent} has no actions")));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Validation(format!("gamma must lie in [0, 1), got {gamma}")));
        }
        if !(epsilon > 0.0) {
            return Err(Error::Validation(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(rewards.0 <= rewards.1) {
            return Err(Error::Validation(format!("empty reward range {rewards:?}")));
        }
        Ok(Self {
            action_counts,
            gamma,
            epsilon,
            reward_min: rewards.0,
            reward_max: rewards.1,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.action_counts.len()
    }

    pub fn action_count(&self, agent: AgentId) -> usize {
        self.action_counts[agent.0]
    }

    pub fn validate_joint_action(&self, actions: &[Action]) -> Result<()> {
        if actions.len() != self.n_agents() {
            return Err(Error::JointArity {
                expected: self.n_agents(),
                got: actions.len(),
            });
        }
        for (agent, (&a, &count)) in actions.iter().zip(&self.action_counts).enumerate() {
            if a >= count {
                return Err(Error::InvalidAction { agent, action: a, count });
            }
        }
        Ok(())
    }
}

/// Output of one call to the generative model.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeStep<S, O> {
    pub next_state: S,
    pub joint_obs: Joint<O>,
    pub joint_reward: Joint<f64>,
}

/// A generative multi-agent environment.
///
/// Implementations are immutable after construction; all randomness flows through
/// the caller's RNG. Terminal states are absorbing and yield zero reward.
pub trait Posg: Send + Sync {
    type State: Clone + Debug + Send + Sync;
    type Obs: Copy + Eq + Hash + Debug + Send + Sync;
    /// Deterministic summary of one agent's history.
    type Memory: Clone + Debug + Send + Sync;

    fn spec(&self) -> &PosgSpec;

    fn sample_initial_state(&self, rng: &mut Rng) -> Self::State;

    /// Initial observations (observation-first convention).
    fn sample_initial_obs(&self, state: &Self::State, rng: &mut Rng) -> Joint<Self::Obs>;

    /// Sample `<s', o, r>`. Actions are assumed valid; see [`generative_step`].
    fn sample_step(&self, state: &Self::State, actions: &[Action], rng: &mut Rng) -> GenerativeStep<Self::State, Self::Obs>;

    fn is_terminal(&self, state: &Self::State) -> bool;

    /// Memory after the initial observation.
    fn initial_memory(&self, agent: AgentId, obs: &Self::Obs) -> Self::Memory;

    /// Memory for the empty history (action-first convention), if supported.
    fn empty_memory(&self, _agent: AgentId) -> Option<Self::Memory> {
        None
    }

    fn update_memory(&self, agent: AgentId, memory: &mut Self::Memory, action: Action, obs: &Self::Obs);

    /// Discrete feature of a memory used to key learned value tables.
    fn value_feature(&self, _agent: AgentId, _memory: &Self::Memory) -> u64 {
        0
    }

    fn n_agents(&self) -> usize {
        self.spec().n_agents()
    }

    fn action_count(&self, agent: AgentId) -> usize {
        self.spec().action_count(agent)
    }

    fn gamma(&self) -> f64 {
        self.spec().gamma
    }
}

/// Validated generative step.
pub fn generative_step<E: Posg + ?Sized>(
    model: &E,
    state: &E::State,
    actions: &[Action],
    rng: &mut Rng,
) -> Result<GenerativeStep<E::State, E::Obs>> {
    model.spec().validate_joint_action(actions)?;
    Ok(model.sample_step(state, actions, rng))
}

/// Alternating history `<o0 a0 o1 ... a_{t-1} o_t>` of one agent.
///
/// `initial` is `None` under the action-first convention.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct History<O> {
    initial: Option<O>,
    steps: Vec<(Action, O)>,
}

impl<O: Clone> History<O> {
    pub fn empty() -> Self {
        Self { initial: None, steps: Vec::new() }
    }

    pub fn with_initial(obs: O) -> Self {
        Self { initial: Some(obs), steps: Vec::new() }
    }

    pub fn push(&mut self, action: Action, obs: O) {
        self.steps.push((action, obs));
    }

    pub fn extended(&self, action: Action, obs: O) -> Self {
        let mut h = self.clone();
        h.push(action, obs);
        h
    }

    /// Number of completed (action, observation) steps.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.initial.is_none() && self.steps.is_empty()
    }

    pub fn initial(&self) -> Option<&O> {
        self.initial.as_ref()
    }

    pub fn steps(&self) -> &[(Action, O)] {
        &self.steps
    }

    pub fn last_obs(&self) -> Option<&O> {
        self.steps.last().map(|(_, o)| o).or(self.initial.as_ref())
    }

    pub fn last_action(&self) -> Option<Action> {
        self.steps.last().map(|(a, _)| *a)
    }

    /// Prefix containing the first `len` steps.
    pub fn prefix(&self, len: usize) -> Self {
        Self {
            initial: self.initial.clone(),
            steps: self.steps[..len.min(self.steps.len())].to_vec(),
        }
    }
}

/// `sum_k gamma^k r_k`.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}

/// Smallest depth `d` with `gamma^d < epsilon`; the search cutoff depth.
///
/// `gamma = 0` returns 1 (`gamma^0 = 1` is assumed to be at least `epsilon`).
pub fn horizon_for_epsilon(gamma: f64, epsilon: f64) -> usize {
    assert!((0.0..1.0).contains(&gamma), "gamma must lie in [0, 1)");
    assert!(epsilon > 0.0, "epsilon must be positive");
    if gamma == 0.0 {
        return 1;
    }
    let mut depth = 0;
    let mut discount = 1.0f64;
    while discount >= epsilon {
        discount *= gamma;
        depth += 1;
    }
    depth
}

/// SplitMix64 finaliser; used to derive independent child seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `stream` of `parent`.
///
/// Seeds form a tree: run seed -> episode index -> purpose tag. The same path
/// always yields the same seed, independent of scheduling.
pub fn derive_seed(parent: u64, stream: u64) -> u64 {
    mix64(parent ^ mix64(stream.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// Stable 64-bit FNV-1a hash of a string, used to derive seeds from ids.
pub fn stable_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Draw an index from a probability vector (need not be exactly normalised).
pub fn sample_categorical(probs: &[f64], rng: &mut Rng) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, &p) in probs.iter().enumerate() {
        if u < p {
            return i;
        }
        u -= p;
    }
    // Rounding left a sliver of mass past the end; return the last positive entry.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Index of the maximum score, ties broken uniformly with `rng`.
pub fn argmax_random_tie(scores: &[f64], rng: &mut Rng) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut count = 0u32;
    let mut choice = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > best {
            best = s;
            count = 1;
            choice = i;
        } else if s == best {
            // Reservoir sampling over the maximisers.
            count += 1;
            if rng.gen_range(0..count) == 0 {
                choice = i;
            }
        }
    }
    choice
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discounted_return_examples() {
        assert_eq!(discounted_return(&[], 0.99), 0.0);
        assert!((discounted_return(&[1.0, 1.0, 1.0], 0.5) - 1.75).abs() < 1e-12);
        for &g in &[0.0, 0.3, 0.99] {
            assert_eq!(discounted_return(&[2.5], g), 2.5);
        }
    }

    #[test]
    fn horizon_examples() {
        assert_eq!(horizon_for_epsilon(0.5, 0.06), 5);
        assert_eq!(horizon_for_epsilon(0.99, 1.0), 1);
        assert_eq!(horizon_for_epsilon(0.0, 0.5), 1);
        // Oracle: ceil(ln eps / ln gamma), checked by direct powering.
        let d = horizon_for_epsilon(0.99, 0.01);
        assert_eq!(d, 459);
        assert!(0.99f64.powi(d as i32) < 0.01);
        assert!(0.99f64.powi(d as i32 - 1) >= 0.01);
    }

    #[test]
    fn history_alternation() {
        let mut h = History::with_initial(7u8);
        assert_eq!(h.len(), 0);
        for k in 0..5 {
            h.push(k, k as u8);
            assert_eq!(h.len(), k + 1);
        }
        assert_eq!(h.last_obs(), Some(&4));
        assert_eq!(h.prefix(2).len(), 2);
        let e: History<u8> = History::empty();
        assert!(e.is_empty());
        assert_eq!(e.last_obs(), None);
    }

    #[test]
    fn spec_validation() {
        assert!(PosgSpec::new(vec![2], 0.5, 0.1, (0.0, 1.0)).is_err());
        assert!(PosgSpec::new(vec![2, 0], 0.5, 0.1, (0.0, 1.0)).is_err());
        assert!(PosgSpec::new(vec![2, 2], 1.0, 0.1, (0.0, 1.0)).is_err());
        assert!(PosgSpec::new(vec![2, 2], 0.5, 0.0, (0.0, 1.0)).is_err());
        let spec = PosgSpec::new(vec![2, 3], 0.5, 0.1, (0.0, 1.0)).unwrap();
        assert!(spec.validate_joint_action(&[1, 2]).is_ok());
        assert!(matches!(
            spec.validate_joint_action(&[1, 3]),
            Err(Error::InvalidAction { agent: 1, .. })
        ));
        assert!(matches!(spec.validate_joint_action(&[1]), Err(Error::JointArity { .. })));
    }

    #[test]
    fn categorical_frequencies() {
        let mut rng = rng_from_seed(3);
        let probs = [0.7, 0.3];
        let n = 100_000;
        let hits = (0..n).filter(|_| sample_categorical(&probs, &mut rng) == 0).count();
        assert!((hits as f64 / n as f64 - 0.7).abs() < 0.01);
    }

    #[test]
    fn seeds_are_stable_and_distinct() {
        assert_eq!(derive_seed(1, 2), derive_seed(1, 2));
        assert_ne!(derive_seed(1, 2), derive_seed(1, 3));
        assert_ne!(derive_seed(1, 2), derive_seed(2, 2));
        assert_eq!(stable_hash("abc"), stable_hash("abc"));
    }
}
