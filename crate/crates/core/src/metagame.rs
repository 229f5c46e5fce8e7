//! The empirical game over policies: Monte-Carlo payoff tables `U^Π` and the
//! softmax meta-policy `σ^τ(π_i | π_-i)`.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policies::episode::{agent_return, play_episode};
use crate::policies::{Policy, PolicySet};
use crate::posg::{derive_seed, horizon_for_epsilon, rng_from_seed, sample_categorical, stable_hash, AgentId, Posg, Rng};

/// Default number of sample games per payoff cell.
pub const DEFAULT_EPISODES_PER_CELL: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffCell {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl PayoffCell {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr, count: n }
    }
}

/// Expected discounted returns of each planner policy (rows) against each
/// joint policy of the other agents (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffTable {
    pub env: String,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub cells: Vec<Vec<PayoffCell>>,
    pub gamma: f64,
    pub horizon: usize,
    pub episodes_per_cell: usize,
    pub seed: u64,
}

/// Seed of the cell `(row, col)`; depends only on the ids, so cells can be
/// computed in any order or added later without changing existing ones.
pub fn cell_seed(seed: u64, row: &str, col: &str) -> u64 {
    derive_seed(derive_seed(seed, stable_hash(row)), stable_hash(col))
}

/// Estimate one cell. In symmetric games the planner's policy takes seat
/// `e mod n` in episode `e`, the others fill the remaining seats in order,
/// so the mean averages over seatings.
pub fn estimate_cell<E: Posg>(
    env: &E,
    set: &PolicySet<E::Memory>,
    candidate: usize,
    joint: usize,
    episodes: usize,
    horizon: usize,
    seed: u64,
) -> PayoffCell {
    let n = set.n_agents();
    let gamma = env.gamma();
    let samples: Vec<f64> = (0..episodes)
        .map(|e| {
            let mut rng = rng_from_seed(derive_seed(seed, e as u64));
            let seat = if set.symmetric() { e % n } else { set.planner().0 };
            let mut k = 0;
            let seats: Vec<&dyn Policy<E::Memory>> = (0..n)
                .map(|a| {
                    if a == seat {
                        set.candidates()[candidate].policy.as_ref()
                    } else {
                        k += 1;
                        set.member(joint, k - 1)
                    }
                })
                .collect();
            let rewards = play_episode(env, &seats, horizon, &mut rng, |_, _| {});
            agent_return(&rewards, AgentId(seat), gamma)
        })
        .collect();
    PayoffCell::from_samples(&samples)
}

/// Episode horizon used for payoffs: the search cutoff depth.
pub fn payoff_horizon<E: Posg>(env: &E) -> usize {
    let spec = env.spec();
    horizon_for_epsilon(spec.gamma, spec.epsilon)
}

/// Fill every cell of the game defined by `set`. Cells run in parallel; the
/// result does not depend on scheduling.
pub fn compute_payoffs<E: Posg>(
    env: &E,
    env_id: &str,
    set: &PolicySet<E::Memory>,
    episodes_per_cell: usize,
    seed: u64,
) -> Result<PayoffTable> {
    let mut table = PayoffTable {
        env: env_id.to_string(),
        rows: Vec::new(),
        cols: Vec::new(),
        cells: Vec::new(),
        gamma: env.gamma(),
        horizon: payoff_horizon(env),
        episodes_per_cell,
        seed,
    };
    table.fill(env, set)?;
    Ok(table)
}

impl PayoffTable {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path.as_ref(), text).map_err(|e| Error::io(path.as_ref(), e))
    }

    pub fn n_cells(&self) -> usize {
        self.rows.len() * self.cols.len()
    }

    pub fn cell(&self, row: &str, col: &str) -> Option<&PayoffCell> {
        let r = self.rows.iter().position(|x| x == row)?;
        let c = self.cols.iter().position(|x| x == col)?;
        Some(&self.cells[r][c])
    }

    /// Cells of `set` not yet in the table, as `(candidate, joint)` indices.
    pub fn missing_cells<M>(&self, set: &PolicySet<M>) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (r, cand) in set.candidates().iter().enumerate() {
            for (c, joint) in set.joint_policies().iter().enumerate() {
                if self.cell(&cand.id, &joint.id).is_none() {
                    out.push((r, c));
                }
            }
        }
        out
    }

    /// Reshape to `set`'s rows and columns, simulating only missing cells.
    /// Returns the number of cells simulated.
    fn fill<E: Posg>(&mut self, env: &E, set: &PolicySet<E::Memory>) -> Result<usize> {
        if self.episodes_per_cell == 0 {
            return Err(Error::Validation("episodes per cell must be at least 1".into()));
        }
        let missing = self.missing_cells(set);
        let fresh: HashMap<(usize, usize), PayoffCell> = missing
            .par_iter()
            .map(|&(r, c)| {
                let seed = cell_seed(self.seed, &set.candidates()[r].id, &set.joint_policies()[c].id);
                ((r, c), estimate_cell(env, set, r, c, self.episodes_per_cell, self.horizon, seed))
            })
            .collect();
        let rows: Vec<String> = set.candidates().iter().map(|c| c.id.clone()).collect();
        let cols: Vec<String> = set.joint_policies().iter().map(|j| j.id.clone()).collect();
        let cells = rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                cols.iter()
                    .enumerate()
                    .map(|(c, col)| match fresh.get(&(r, c)) {
                        Some(cell) => *cell,
                        None => *self.cell(row, col).expect("cell present"),
                    })
                    .collect()
            })
            .collect();
        self.rows = rows;
        self.cols = cols;
        self.cells = cells;
        Ok(missing.len())
    }

    fn mentions(&self, id: &str) -> bool {
        self.rows.iter().any(|r| r == id) || self.cols.iter().any(|c| c.split('+').any(|m| m == id))
    }

    /// Extend the table with policy `new_id`, which `set` must contain (as a
    /// planner candidate, a member of some joint policy, or both). Existing
    /// cells are kept bit-identical; returns the number of cells simulated.
    pub fn add_policy<E: Posg>(&mut self, env: &E, set: &PolicySet<E::Memory>, new_id: &str) -> Result<usize> {
        if self.mentions(new_id) {
            return Err(Error::DuplicatePolicy(new_id.to_string()));
        }
        let in_set = set.candidate_index(new_id).is_some() || set.others().iter().any(|o| o.id == new_id);
        if !in_set {
            return Err(Error::UnknownPolicy(new_id.to_string()));
        }
        self.fill(env, set)
    }

    /// Drop the row of `id` and every column it takes part in.
    pub fn remove_policy(&mut self, id: &str) -> Result<()> {
        if !self.mentions(id) {
            return Err(Error::UnknownPolicy(id.to_string()));
        }
        let keep_cols: Vec<usize> = (0..self.cols.len())
            .filter(|&c| !self.cols[c].split('+').any(|m| m == id))
            .collect();
        let keep_rows: Vec<usize> = (0..self.rows.len()).filter(|&r| self.rows[r] != id).collect();
        self.cells = keep_rows
            .iter()
            .map(|&r| keep_cols.iter().map(|&c| self.cells[r][c]).collect())
            .collect();
        self.rows = keep_rows.iter().map(|&r| self.rows[r].clone()).collect();
        self.cols = keep_cols.iter().map(|&c| self.cols[c].clone()).collect();
        Ok(())
    }

    /// Row index of the best response to column `col`; ties keep the first.
    pub fn best_response(&self, col: usize) -> usize {
        let mut best = 0;
        for r in 1..self.rows.len() {
            if self.cells[r][col].mean > self.cells[best][col].mean {
                best = r;
            }
        }
        best
    }
}

/// Softmax temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tau {
    Finite(f64),
    /// Uniform over candidate policies; serialised as `null`.
    Infinite,
}

impl Tau {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Tau::Infinite),
            t => {
                let v: f64 = t.parse().map_err(|_| Error::Config(format!("invalid temperature `{s}`")))?;
                if v.is_infinite() && v > 0.0 {
                    Ok(Tau::Infinite)
                } else if v >= 0.0 {
                    Ok(Tau::Finite(v))
                } else {
                    Err(Error::Config(format!("temperature must be non-negative, got {s}")))
                }
            }
        }
    }
}

impl fmt::Display for Tau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tau::Finite(t) => write!(f, "{t}"),
            Tau::Infinite => write!(f, "inf"),
        }
    }
}

/// `σ^τ(· | payoffs)`: softmax with the row maximum subtracted. `τ = 0` is
/// the greedy limit (uniform over exact ties), `τ = ∞` the uniform one.
pub fn softmax_row(payoffs: &[f64], tau: Tau) -> Vec<f64> {
    let n = payoffs.len();
    let max = payoffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = match tau {
        Tau::Infinite => vec![1.0; n],
        Tau::Finite(t) if t == 0.0 => payoffs.iter().map(|&u| (u == max) as u8 as f64).collect(),
        Tau::Finite(t) => payoffs.iter().map(|&u| ((u - max) / t).exp()).collect(),
    };
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// A distribution over planner policies for every joint policy of the others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaPolicy {
    pub tau: Tau,
    pub candidates: Vec<String>,
    pub joints: Vec<String>,
    /// `rows[j][c] = σ(candidate c | joint j)`.
    pub rows: Vec<Vec<f64>>,
}

pub fn make_meta_policy(table: &PayoffTable, tau: Tau) -> MetaPolicy {
    let rows = (0..table.cols.len())
        .map(|c| softmax_row(&table.cells.iter().map(|r| r[c].mean).collect::<Vec<_>>(), tau))
        .collect();
    MetaPolicy {
        tau,
        candidates: table.rows.clone(),
        joints: table.cols.clone(),
        rows,
    }
}

impl MetaPolicy {
    /// Always use candidate `candidate`, whatever the others play.
    pub fn fixed<M>(set: &PolicySet<M>, candidate: usize) -> Self {
        let n = set.candidates().len();
        Self {
            tau: Tau::Finite(0.0),
            candidates: set.candidates().iter().map(|c| c.id.clone()).collect(),
            joints: set.joint_policies().iter().map(|j| j.id.clone()).collect(),
            rows: vec![(0..n).map(|k| (k == candidate) as u8 as f64).collect(); set.joint_policies().len()],
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path.as_ref(), text).map_err(|e| Error::io(path.as_ref(), e))
    }

    pub fn row(&self, joint_id: &str) -> Result<&[f64]> {
        self.joints
            .iter()
            .position(|j| j == joint_id)
            .map(|j| self.rows[j].as_slice())
            .ok_or_else(|| Error::UnknownPolicy(joint_id.to_string()))
    }

    /// Sample a candidate id for the joint policy `joint_id`.
    pub fn sample_by_id(&self, joint_id: &str, rng: &mut Rng) -> Result<&str> {
        let row = self.row(joint_id)?;
        Ok(&self.candidates[sample_categorical(row, rng)])
    }

    /// Rows re-indexed to `set`'s joint policies and candidates:
    /// `out[j][c] = σ(set candidate c | set joint j)`.
    pub fn aligned<M>(&self, set: &PolicySet<M>) -> Result<Vec<Vec<f64>>> {
        let cand: Vec<usize> = set
            .candidates()
            .iter()
            .map(|c| {
                self.candidates
                    .iter()
                    .position(|x| *x == c.id)
                    .ok_or_else(|| Error::UnknownPolicy(c.id.clone()))
            })
            .collect::<Result<_>>()?;
        if cand.len() != self.candidates.len() {
            return Err(Error::Validation("meta-policy and policy set disagree on candidates".into()));
        }
        set.joint_policies()
            .iter()
            .map(|j| {
                let row = self.row(&j.id)?;
                Ok(cand.iter().map(|&k| row[k]).collect())
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posg::rng_from_seed;

    #[test]
    fn softmax_worked_value() {
        let row = softmax_row(&[1.0, 0.5], Tau::Finite(0.25));
        assert!((row[0] - 0.8808).abs() < 1e-4 && (row[1] - 0.1192).abs() < 1e-4);
        assert_eq!(softmax_row(&[3.0, 3.0, 3.0], Tau::Finite(0.7)), vec![1.0 / 3.0; 3]);
        assert_eq!(softmax_row(&[1.0, 9.0, 2.0, 0.0, -1.0], Tau::Infinite), vec![0.2; 5]);
    }

    #[test]
    fn greedy_limit_and_ties() {
        assert_eq!(softmax_row(&[0.1, 0.7, 0.3], Tau::Finite(0.0)), vec![0.0, 1.0, 0.0]);
        assert_eq!(softmax_row(&[0.7, 0.7, 0.3], Tau::Finite(0.0)), vec![0.5, 0.5, 0.0]);
        // Huge payoffs do not overflow.
        let r = softmax_row(&[1e6, 1e6 - 1.0], Tau::Finite(0.5));
        assert!(r.iter().all(|p| p.is_finite()));
    }

    #[test]
    fn tau_parsing_and_serde() {
        assert_eq!(Tau::parse("inf").unwrap(), Tau::Infinite);
        assert_eq!(Tau::parse("0.25").unwrap(), Tau::Finite(0.25));
        assert!(Tau::parse("-1").is_err());
        let s = serde_json::to_string(&Tau::Infinite).unwrap();
        assert_eq!(serde_json::from_str::<Tau>(&s).unwrap(), Tau::Infinite);
    }

    #[test]
    fn meta_sampling_frequencies() {
        let meta = MetaPolicy {
            tau: Tau::Finite(0.25),
            candidates: vec!["a".into(), "b".into()],
            joints: vec!["x".into()],
            rows: vec![softmax_row(&[1.0, 0.5], Tau::Finite(0.25))],
        };
        let mut rng = rng_from_seed(11);
        let n = 100_000;
        let hits = (0..n).filter(|_| meta.sample_by_id("x", &mut rng).unwrap() == "a").count();
        assert!((hits as f64 / n as f64 - 0.8808).abs() <= 0.01);
        assert!(matches!(meta.sample_by_id("nope", &mut rng), Err(Error::UnknownPolicy(_))));
    }
}
