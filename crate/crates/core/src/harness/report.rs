use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

use super::evaluate::EpisodeRecord;

/// Normal-approximation 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Mean, standard error and 95% half-width of the non-NaN entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanCi {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
    pub ci95: f64,
}

pub fn mean_ci(xs: impl IntoIterator<Item = f64>) -> MeanCi {
    let xs: Vec<f64> = xs.into_iter().filter(|x| !x.is_nan()).collect();
    let n = xs.len();
    if n == 0 {
        return MeanCi {
            n,
            mean: f64::NAN,
            stderr: f64::NAN,
            ci95: f64::NAN,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 / n as f64).sqrt()
    } else {
        0.0
    };
    MeanCi {
        n,
        mean,
        stderr,
        ci95: Z95 * stderr,
    }
}

/// Aggregate row of an evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub seed: u64,
    pub config_hash: String,
    pub method: String,
    pub env: String,
    pub episodes: usize,
    pub mean_return: f64,
    pub stderr: f64,
    pub ci95: f64,
    pub mean_undiscounted: f64,
    pub mean_steps: f64,
    pub mean_max_depth: f64,
    pub mean_simulations: f64,
    pub mean_generative_steps: f64,
    pub mean_prob_true_type: f64,
    pub trees_built: usize,
    pub meta_queries: u64,
    pub depletions: usize,
}

pub fn summarise(records: &[EpisodeRecord], planner: usize, seed: u64, hash: &str, method: &str, env: &str) -> Summary {
    let ret = mean_ci(records.iter().map(|r| r.returns[planner]));
    let steps = || records.iter().flat_map(|r| r.steps.iter());
    let search_steps = || steps().filter(|s| s.simulations > 0);
    Summary {
        seed,
        config_hash: hash.to_string(),
        method: method.to_string(),
        env: env.to_string(),
        episodes: records.len(),
        mean_return: ret.mean,
        stderr: ret.stderr,
        ci95: ret.ci95,
        mean_undiscounted: mean_ci(records.iter().map(|r| r.undiscounted[planner])).mean,
        mean_steps: mean_ci(records.iter().map(|r| r.steps.len() as f64)).mean,
        mean_max_depth: mean_ci(search_steps().map(|s| s.max_depth as f64)).mean,
        mean_simulations: mean_ci(search_steps().map(|s| s.simulations as f64)).mean,
        mean_generative_steps: mean_ci(search_steps().map(|s| s.generative_steps as f64)).mean,
        mean_prob_true_type: mean_ci(steps().map(|s| s.prob_true_type)).mean,
        trees_built: records.iter().map(|r| r.trees_built).sum(),
        meta_queries: records.iter().map(|r| r.meta_queries).sum(),
        depletions: records.iter().filter(|r| r.depleted_at.is_some()).count(),
    }
}

/// Belief accuracy at step `t`, across episodes.
#[derive(Debug, Clone, Serialize)]
pub struct BeliefRow {
    pub seed: u64,
    pub config_hash: String,
    pub t: usize,
    pub n: usize,
    pub prob_true_type: f64,
    pub prob_ci95: f64,
    pub action_dist_distance: f64,
    pub distance_ci95: f64,
}

pub fn belief_rows(records: &[EpisodeRecord], seed: u64, hash: &str) -> Vec<BeliefRow> {
    let len = records.iter().map(|r| r.steps.len()).max().unwrap_or(0);
    (0..len)
        .map(|t| {
            let at = || records.iter().filter_map(move |r| r.steps.get(t));
            let p = mean_ci(at().map(|s| s.prob_true_type));
            let d = mean_ci(at().map(|s| s.action_dist_distance));
            BeliefRow {
                seed,
                config_hash: hash.to_string(),
                t,
                n: p.n,
                prob_true_type: p.mean,
                prob_ci95: p.ci95,
                action_dist_distance: d.mean,
                distance_ci95: d.ci95,
            }
        })
        .collect()
}

/// Mean `prob_true_type` over the first and last quarter of each episode's
/// steps (`⌊4t/L⌋ = 0` and `= 3` for an episode of `L` steps), averaged over
/// episodes with at least four steps and a belief in both quarters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuartileComparison {
    pub episodes: usize,
    pub first: MeanCi,
    pub last: MeanCi,
    /// Per-episode `last - first`.
    pub gain: MeanCi,
}

pub fn quartile_comparison(records: &[EpisodeRecord]) -> QuartileComparison {
    let mut first = Vec::new();
    let mut last = Vec::new();
    for r in records {
        let l = r.steps.len();
        if l < 4 {
            continue;
        }
        let quarter = |q: usize| {
            mean_ci(
                r.steps
                    .iter()
                    .filter(|s| 4 * s.t / l == q)
                    .map(|s| s.prob_true_type),
            )
        };
        let (f, la) = (quarter(0), quarter(3));
        if f.n > 0 && la.n > 0 {
            first.push(f.mean);
            last.push(la.mean);
        }
    }
    QuartileComparison {
        episodes: first.len(),
        first: mean_ci(first.iter().copied()),
        last: mean_ci(last.iter().copied()),
        gain: mean_ci(last.iter().zip(&first).map(|(l, f)| l - f)),
    }
}

#[derive(Serialize)]
struct EpisodeRow<'a> {
    seed: u64,
    config_hash: &'a str,
    episode: usize,
    episode_seed: u64,
    true_joint: &'a str,
    steps: usize,
    planner_return: f64,
    planner_undiscounted: f64,
    returns: String,
    undiscounted: String,
    trees_built: usize,
    meta_queries: u64,
    depleted_at: Option<usize>,
}

#[derive(Serialize)]
struct StepRow<'a> {
    seed: u64,
    config_hash: &'a str,
    episode: usize,
    t: usize,
    action: usize,
    reward: f64,
    prob_true_type: f64,
    action_dist_distance: f64,
    max_depth: usize,
    simulations: u64,
    generative_steps: u64,
    meta_queries: u64,
    particles: usize,
    root_visits: &'a str,
}

fn joined(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Validation(format!("csv {}: {other:?}", path.display())),
    }
}

/// Write `rows` as a CSV file with a header.
pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// `{dir}/{method}_{env}_{kind}.{ext}`.
pub fn output_path(dir: &Path, method: &str, env: &str, kind: &str, ext: &str) -> PathBuf {
    dir.join(format!("{method}_{env}_{kind}.{ext}"))
}

pub fn write_episodes(path: &Path, records: &[EpisodeRecord], planner: usize, seed: u64, hash: &str) -> Result<()> {
    write_csv(
        path,
        records.iter().map(|r| EpisodeRow {
            seed,
            config_hash: hash,
            episode: r.episode,
            episode_seed: r.seed,
            true_joint: &r.true_joint,
            steps: r.steps.len(),
            planner_return: r.returns[planner],
            planner_undiscounted: r.undiscounted[planner],
            returns: joined(&r.returns),
            undiscounted: joined(&r.undiscounted),
            trees_built: r.trees_built,
            meta_queries: r.meta_queries,
            depleted_at: r.depleted_at,
        }),
    )
}

pub fn write_steps(path: &Path, records: &[EpisodeRecord], seed: u64, hash: &str) -> Result<()> {
    write_csv(
        path,
        records.iter().flat_map(|r| {
            r.steps.iter().map(move |s| StepRow {
                seed,
                config_hash: hash,
                episode: r.episode,
                t: s.t,
                action: s.action,
                reward: s.reward,
                prob_true_type: s.prob_true_type,
                action_dist_distance: s.action_dist_distance,
                max_depth: s.max_depth,
                simulations: s.simulations,
                generative_steps: s.generative_steps,
                meta_queries: s.meta_queries,
                particles: s.particles,
                root_visits: &s.root_visits,
            })
        }),
    )
}

/// JSON sidecar describing a run. Wall-clock time lives here, never in CSVs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<'a> {
    pub command: &'a str,
    pub version: &'a str,
    pub config_hash: &'a str,
    pub config: &'a super::RunConfig,
    pub wall_clock_seconds: f64,
    pub files: Vec<String>,
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(manifest)?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::evaluate::StepRecord;

    fn step(t: usize, p: f64) -> StepRecord {
        StepRecord {
            t,
            action: 0,
            reward: 0.0,
            prob_true_type: p,
            action_dist_distance: 0.0,
            max_depth: 0,
            simulations: 0,
            generative_steps: 0,
            meta_queries: 0,
            particles: 0,
            root_visits: String::new(),
        }
    }

    fn episode(ps: &[f64]) -> EpisodeRecord {
        EpisodeRecord {
            episode: 0,
            seed: 0,
            true_joint: "x".into(),
            returns: vec![0.0],
            undiscounted: vec![0.0],
            trees_built: 0,
            meta_queries: 0,
            depleted_at: None,
            steps: ps.iter().enumerate().map(|(t, &p)| step(t, p)).collect(),
        }
    }

    #[test]
    fn mean_ci_skips_nan() {
        let m = mean_ci([1.0, f64::NAN, 3.0]);
        assert_eq!(m.n, 2);
        assert_eq!(m.mean, 2.0);
        assert!((m.stderr - 1.0).abs() < 1e-12);
        assert!((m.ci95 - Z95).abs() < 1e-12);
        assert!(mean_ci([f64::NAN]).mean.is_nan());
    }

    #[test]
    fn quartiles() {
        // L = 8: steps 0,1 are the first quarter, 6,7 the last.
        let q = quartile_comparison(&[
            episode(&[0.2, 0.4, 0.5, 0.5, 0.5, 0.5, 0.8, 1.0]),
            episode(&[0.5, 0.5, 0.5]),
        ]);
        assert_eq!(q.episodes, 1);
        assert!((q.first.mean - 0.3).abs() < 1e-12);
        assert!((q.last.mean - 0.9).abs() < 1e-12);
        assert!((q.gain.mean - 0.6).abs() < 1e-12);
    }

    #[test]
    fn belief_rows_align_steps() {
        let rows = belief_rows(&[episode(&[0.2, 0.4]), episode(&[0.6])], 3, "h");
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].n, 2);
        assert!((rows[0].prob_true_type - 0.4).abs() < 1e-12);
        assert_eq!(rows[1].n, 1);
    }
}
