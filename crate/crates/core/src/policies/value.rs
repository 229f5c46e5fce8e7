//! Value functions attached to policies, and Monte-Carlo policy evaluation
//! against the prior `ρ` to build them.

use std::collections::HashMap;
use std::fmt::Debug;
use std::hash::Hash;
use std::sync::Arc;

use super::episode::play_episode;
use super::{Policy, PolicySet, SharedPolicy};
use crate::posg::{derive_seed, rng_from_seed, AgentId, History, Posg};

pub trait ValueFn<M>: Send + Sync + Debug {
    fn value(&self, m: &M) -> Option<f64>;
}

/// A policy together with a value function.
pub struct Valued<M> {
    pub inner: SharedPolicy<M>,
    pub values: Arc<dyn ValueFn<M>>,
}

impl<M> Debug for Valued<M> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Valued").field("inner", &self.inner).field("values", &self.values).finish()
    }
}

impl<M: 'static> Valued<M> {
    pub fn shared(inner: SharedPolicy<M>, values: Arc<dyn ValueFn<M>>) -> SharedPolicy<M> {
        Arc::new(Self { inner, values })
    }
}

impl<M> Policy<M> for Valued<M> {
    fn action_count(&self) -> usize {
        self.inner.action_count()
    }

    fn action_dist(&self, m: &M, out: &mut [f64]) {
        self.inner.action_dist(m, out)
    }

    fn value(&self, m: &M) -> Option<f64> {
        self.values.value(m)
    }
}

/// Mean return-to-go keyed by the environment's discretised history feature,
/// falling back to the overall mean for unseen features. An approximation.
pub struct FeatureValues<E: Posg> {
    env: Arc<E>,
    agent: AgentId,
    table: HashMap<u64, f64>,
    fallback: f64,
}

impl<E: Posg> Debug for FeatureValues<E> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FeatureValues")
            .field("agent", &self.agent)
            .field("features", &self.table.len())
            .field("fallback", &self.fallback)
            .finish()
    }
}

impl<E: Posg> FeatureValues<E> {
    pub fn new(env: Arc<E>, agent: AgentId, table: HashMap<u64, f64>, fallback: f64) -> Self {
        Self {
            env,
            agent,
            table,
            fallback,
        }
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl<E: Posg> ValueFn<E::Memory> for FeatureValues<E> {
    fn value(&self, m: &E::Memory) -> Option<f64> {
        let key = self.env.value_feature(self.agent, m);
        Some(self.table.get(&key).copied().unwrap_or(self.fallback))
    }
}

/// Values keyed by the exact history over a finite horizon: histories with
/// `horizon` or more steps are worth 0; unknown histories have no value.
#[derive(Debug, Clone, Default)]
pub struct HistoryValues {
    pub table: HashMap<History<usize>, f64>,
    pub horizon: usize,
}

impl ValueFn<History<usize>> for HistoryValues {
    fn value(&self, h: &History<usize>) -> Option<f64> {
        if h.len() >= self.horizon {
            return Some(0.0);
        }
        self.table.get(h).copied()
    }
}

/// Running means keyed by `K`.
#[derive(Debug, Clone)]
pub struct MeanTable<K> {
    pub cells: HashMap<K, (f64, u64)>,
    pub overall: (f64, u64),
}

impl<K: Hash + Eq> MeanTable<K> {
    pub fn mean(&self, k: &K) -> Option<f64> {
        self.cells.get(k).map(|&(s, n)| s / n as f64)
    }

    pub fn overall_mean(&self) -> f64 {
        if self.overall.1 == 0 {
            0.0
        } else {
            self.overall.0 / self.overall.1 as f64
        }
    }

    pub fn into_means(self) -> HashMap<K, f64> {
        self.cells.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
    }
}

/// Monte-Carlo evaluation of planner candidate `candidate` against joint
/// policies drawn from the prior: for every visited history the discounted
/// return over the remaining `horizon - t` steps is averaged under `key(m)`.
/// Episodes use seeds derived from `seed`, so results are reproducible.
pub fn learn_values<E: Posg, K: Hash + Eq>(
    env: &E,
    set: &PolicySet<E::Memory>,
    candidate: usize,
    episodes: usize,
    horizon: usize,
    seed: u64,
    key: impl Fn(&E::Memory) -> K,
) -> MeanTable<K> {
    let gamma = env.gamma();
    let planner = set.planner();
    let mut table = MeanTable {
        cells: HashMap::new(),
        overall: (0.0, 0),
    };
    let mut keys = Vec::new();
    for e in 0..episodes {
        let mut rng = rng_from_seed(derive_seed(seed, e as u64));
        let joint = set.sample_joint_policy(&mut rng);
        let seats = set.seat_policies(candidate, joint);
        keys.clear();
        let rewards = play_episode(env, &seats, horizon, &mut rng, |_, mems| keys.push(key(&mems[planner.0])));
        let mut rtg = vec![0.0; rewards.len()];
        let mut acc = 0.0;
        for t in (0..rewards.len()).rev() {
            acc = rewards[t][planner.0] + gamma * acc;
            rtg[t] = acc;
        }
        for (k, v) in keys.drain(..).zip(rtg) {
            let cell = table.cells.entry(k).or_insert((0.0, 0));
            cell.0 += v;
            cell.1 += 1;
            table.overall.0 += v;
            table.overall.1 += 1;
        }
    }
    table
}
