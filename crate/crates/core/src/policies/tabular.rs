//! Reactive tabular policies for the explicit-table games.

use super::Policy;
use crate::error::{Error, Result};
use crate::posg::History;

/// Distribution keyed by the most recent observation; optionally a separate
/// distribution before the first action.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    n_actions: usize,
    first: Option<Vec<f64>>,
    by_last_obs: Vec<Vec<f64>>,
}

fn check(row: &[f64], n: usize) -> Result<()> {
    let sum: f64 = row.iter().sum();
    if row.len() != n || row.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Validation(format!("tabular row {row:?} is not a distribution over {n} actions")));
    }
    Ok(())
}

impl TabularPolicy {
    pub fn new(n_actions: usize, first: Option<Vec<f64>>, by_last_obs: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(f) = &first {
            check(f, n_actions)?;
        }
        if by_last_obs.is_empty() {
            return Err(Error::Validation("tabular policy needs at least one observation row".into()));
        }
        for row in &by_last_obs {
            check(row, n_actions)?;
        }
        Ok(Self {
            n_actions,
            first,
            by_last_obs,
        })
    }

    /// The same distribution after every history.
    pub fn constant(dist: Vec<f64>, n_obs: usize) -> Result<Self> {
        Self::new(dist.len(), None, vec![dist; n_obs])
    }

    /// Point mass on `action` after every history.
    pub fn always(action: usize, n_actions: usize, n_obs: usize) -> Result<Self> {
        let mut d = vec![0.0; n_actions];
        d[action] = 1.0;
        Self::constant(d, n_obs)
    }

    pub fn row(&self, h: &History<usize>) -> &[f64] {
        match (&self.first, h.steps().is_empty()) {
            (Some(f), true) => f,
            _ => {
                let o = h.last_obs().copied().unwrap_or(0);
                &self.by_last_obs[o.min(self.by_last_obs.len() - 1)]
            }
        }
    }
}

impl Policy<History<usize>> for TabularPolicy {
    fn action_count(&self) -> usize {
        self.n_actions
    }

    fn action_dist(&self, h: &History<usize>, out: &mut [f64]) {
        out.copy_from_slice(self.row(h));
    }
}
