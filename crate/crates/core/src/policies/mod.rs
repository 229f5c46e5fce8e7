//! Policies `π(a | h)` over an environment's history summaries, optional value
//! functions `V^π(h)`, policy sets `Π` with their prior `ρ`, and the heuristic
//! families used as agent types in the grid worlds.

pub mod driving;
pub mod episode;
pub mod manifest;
pub mod predator_prey;
pub mod pursuit_evasion;
pub mod set;
pub mod tabular;
pub mod tiny;
pub mod value;

use std::fmt::Debug;
use std::sync::Arc;

use smallvec::SmallVec;

use crate::posg::{sample_categorical, Action, Rng};

pub use manifest::{PolicyManifest, PolicySpec, Role};
pub use set::{JointPolicy, PolicyEntry, PolicySet};
pub use tabular::TabularPolicy;
pub use value::{FeatureValues, HistoryValues, ValueFn, Valued};

/// Stable policy identifier, unique within a policy set.
pub type PolicyId = String;

/// Small buffer for action distributions.
pub type Dist = SmallVec<[f64; 8]>;

/// A stationary history-based policy over memories of type `M`.
pub trait Policy<M>: Send + Sync + Debug {
    fn action_count(&self) -> usize;

    /// Write `π(· | m)` into `out` (length [`Policy::action_count`]).
    fn action_dist(&self, m: &M, out: &mut [f64]);

    /// `V^π(m)` if this policy carries a value function.
    fn value(&self, _m: &M) -> Option<f64> {
        None
    }
}

pub type SharedPolicy<M> = Arc<dyn Policy<M>>;

pub fn dist_of<M>(pi: &dyn Policy<M>, m: &M) -> Dist {
    let mut d: Dist = smallvec::smallvec![0.0; pi.action_count()];
    pi.action_dist(m, &mut d);
    d
}

pub fn sample_action<M>(pi: &dyn Policy<M>, m: &M, rng: &mut Rng) -> Action {
    sample_categorical(&dist_of(pi, m), rng)
}

/// `π(a | m) = 1 / |A|`.
#[derive(Debug, Clone)]
pub struct UniformRandom {
    pub n_actions: usize,
}

impl<M> Policy<M> for UniformRandom {
    fn action_count(&self) -> usize {
        self.n_actions
    }

    fn action_dist(&self, _m: &M, out: &mut [f64]) {
        out.fill(1.0 / self.n_actions as f64);
    }
}

/// Mix a deterministic choice with uniform noise: `(1 - ε)·δ(best) + ε/|A|`.
pub(crate) fn noisy_choice(out: &mut [f64], best: Action, noise: f64) {
    let n = out.len() as f64;
    out.fill(noise / n);
    out[best] += 1.0 - noise;
}

/// Index of the smallest score; ties keep the earliest index.
pub(crate) fn argmin_first<T: PartialOrd + Copy>(scores: &[T]) -> usize {
    let mut best = 0;
    for (k, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posg::rng_from_seed;

    #[test]
    fn uniform_random_frequencies() {
        let pi = UniformRandom { n_actions: 4 };
        let mut rng = rng_from_seed(8);
        let mut hits = [0usize; 4];
        let n = 100_000;
        for _ in 0..n {
            hits[sample_action::<()>(&pi, &(), &mut rng)] += 1;
        }
        for h in hits {
            assert!((h as f64 / n as f64 - 0.25).abs() <= 0.01);
        }
        assert!(Policy::<()>::value(&pi, &()).is_none());
    }

    #[test]
    fn noisy_choice_normalised() {
        let mut d = [0.0; 5];
        noisy_choice(&mut d, 3, 0.1);
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((d[3] - 0.92).abs() < 1e-12);
        assert_eq!(argmin_first(&[3, 1, 1, 2]), 1);
    }
}
