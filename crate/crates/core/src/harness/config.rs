use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metagame::{Tau, DEFAULT_EPISODES_PER_CELL};
use crate::planner::{LeafEval, PlannerConfig, RolloutPolicy, Variant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EnvConfig {
    Driving {
        #[serde(default = "default_driving_size")]
        width: usize,
        #[serde(default = "default_driving_size")]
        height: usize,
        #[serde(default = "default_driving_layout")]
        layout: String,
        #[serde(default = "default_two")]
        n_agents: usize,
    },
    PursuitEvasion {
        #[serde(default = "default_pe_layout")]
        layout: String,
    },
    PredatorPrey {
        #[serde(default = "default_two")]
        n_predators: usize,
        #[serde(default = "default_two")]
        prey_strength: usize,
        #[serde(default = "default_three")]
        n_prey: usize,
    },
    Tiny {
        instance: String,
    },
}

fn default_driving_size() -> usize {
    7
}
fn default_driving_layout() -> String {
    "crossroads-7x7".into()
}
fn default_pe_layout() -> String {
    "corridors-8x8".into()
}
fn default_two() -> usize {
    2
}
fn default_three() -> usize {
    3
}

impl EnvConfig {
    /// Short id used in file names and CSV rows.
    pub fn id(&self) -> String {
        match self {
            EnvConfig::Driving { n_agents, .. } => format!("driving-{n_agents}"),
            EnvConfig::PursuitEvasion { .. } => "pursuit-evasion".into(),
            EnvConfig::PredatorPrey { n_predators, .. } => format!("predator-prey-{n_predators}"),
            EnvConfig::Tiny { instance } => format!("tiny-{instance}"),
        }
    }
}

/// How the planner's search policy is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SearchPolicy {
    /// `σ^τ` built from the payoff table.
    Meta { tau: Tau },
    /// Always the candidate with this id.
    Fixed { policy: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    Planner,
    /// Draws one planner policy from the meta-policy at episode start and
    /// follows it; no search.
    MetapolicyOnly,
    /// Plays the payoff table's best response to the true joint type.
    BestResponse,
}

/// Budgets and seeds swept by `oracle-check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheckConfig {
    pub budgets: Vec<usize>,
    pub seeds: usize,
}

impl Default for OracleCheckConfig {
    fn default() -> Self {
        Self {
            budgets: vec![100, 1_000, 10_000, 100_000],
            seeds: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub env: EnvConfig,
    /// Policy-set manifest; the environment's default set when absent.
    #[serde(default)]
    pub manifest: Option<PathBuf>,
    /// Precomputed payoff table; computed on the fly when absent.
    #[serde(default)]
    pub payoffs: Option<PathBuf>,
    #[serde(default = "default_cell_episodes")]
    pub episodes_per_cell: usize,
    /// Episodes per candidate used to learn grid-world value tables.
    #[serde(default = "default_value_episodes")]
    pub value_episodes: usize,
    pub baseline: Baseline,
    pub planner: PlannerConfig,
    pub search_policy: SearchPolicy,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default)]
    pub seed: u64,
    /// Step cap per episode; the search horizon when absent.
    #[serde(default)]
    pub max_steps: Option<usize>,
    /// Concurrent episodes; all cores when absent. Does not affect results.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub oracle: Option<OracleCheckConfig>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

fn default_cell_episodes() -> usize {
    DEFAULT_EPISODES_PER_CELL
}
fn default_value_episodes() -> usize {
    2000
}
fn default_episodes() -> usize {
    400
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}

fn field(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{path}: {msg}"))
}

impl RunConfig {
    /// POTMMCP with `σ^{0.25}` on `env`.
    pub fn potmmcp(env: EnvConfig, simulations: usize) -> Self {
        Self {
            env,
            manifest: None,
            payoffs: None,
            episodes_per_cell: DEFAULT_EPISODES_PER_CELL,
            value_episodes: default_value_episodes(),
            baseline: Baseline::Planner,
            planner: PlannerConfig::potmmcp(simulations),
            search_policy: SearchPolicy::Meta { tau: Tau::Finite(0.25) },
            episodes: default_episodes(),
            seed: 0,
            max_steps: None,
            workers: None,
            oracle: None,
            output_dir: default_output(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: RunConfig = serde_json::from_str(&text).map_err(|e| field(&path.display().to_string(), e))?;
        Ok(config)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        match &self.env {
            EnvConfig::Driving {
                width,
                height,
                n_agents,
                ..
            } => {
                if *width < 3 || *height < 3 {
                    return Err(field("env.width", "grid must be at least 3x3"));
                }
                if !(2..=4).contains(n_agents) {
                    return Err(field("env.n_agents", format!("must lie in 2..=4, got {n_agents}")));
                }
            }
            EnvConfig::PursuitEvasion { .. } => {}
            EnvConfig::PredatorPrey {
                n_predators,
                prey_strength,
                n_prey,
            } => {
                if !(2..=4).contains(n_predators) {
                    return Err(field("env.n_predators", format!("must lie in 2..=4, got {n_predators}")));
                }
                if *prey_strength < 1 || prey_strength > n_predators {
                    return Err(field("env.prey_strength", "must lie in 1..=n_predators"));
                }
                if *n_prey < 1 {
                    return Err(field("env.n_prey", "must be at least 1"));
                }
            }
            EnvConfig::Tiny { instance } => {
                if !crate::envs::tiny::INSTANCES.contains(&instance.as_str()) {
                    return Err(field("env.instance", format!("unknown instance `{instance}`")));
                }
            }
        }
        for (name, p) in [("manifest", &self.manifest), ("payoffs", &self.payoffs)] {
            if let Some(p) = p {
                if !p.is_file() {
                    return Err(field(name, format!("file `{}` does not exist", p.display())));
                }
            }
        }
        if self.episodes == 0 {
            return Err(field("episodes", "must be at least 1"));
        }
        if self.episodes_per_cell == 0 {
            return Err(field("episodes_per_cell", "must be at least 1"));
        }
        if self.max_steps == Some(0) {
            return Err(field("max_steps", "must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(field("workers", "must be at least 1"));
        }
        if let SearchPolicy::Meta { tau: Tau::Finite(t) } = self.search_policy {
            if !(t >= 0.0) || t.is_infinite() {
                return Err(field("search_policy.tau", "must be a non-negative number or null (uniform)"));
            }
        }
        if let Some(o) = &self.oracle {
            if o.budgets.is_empty() || o.budgets.contains(&0) {
                return Err(field("oracle.budgets", "must be non-empty and positive"));
            }
            if o.budgets.windows(2).any(|w| w[0] >= w[1]) {
                return Err(field("oracle.budgets", "must be strictly increasing"));
            }
            if o.seeds == 0 {
                return Err(field("oracle.seeds", "must be at least 1"));
            }
        }
        self.planner.validate()
    }

    /// Method label used in file names and CSV rows.
    pub fn method(&self) -> String {
        match self.baseline {
            Baseline::MetapolicyOnly => "metapolicy".into(),
            Baseline::BestResponse => "best-response".into(),
            Baseline::Planner => match (self.planner.variant, self.planner.leaf_eval) {
                (Variant::Potmmcp, _) => "potmmcp".into(),
                (Variant::IpomcpPf, LeafEval::Rollout(RolloutPolicy::Random)) => "ipomcp-pf-random".into(),
                (Variant::IpomcpPf, _) => "ipomcp-pf-meta".into(),
            },
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON of every
    /// field that affects results (output directory and worker count do not).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c.workers = None;
        let json = serde_json::to_string(&c).expect("config serialises");
        let digest = Sha256::digest(json.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> RunConfig {
        RunConfig::potmmcp(
            EnvConfig::Tiny {
                instance: "tiger".into(),
            },
            100,
        )
    }

    #[test]
    fn round_trip_and_hash() {
        let c = tiny();
        let json = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        let mut d = c.clone();
        d.output_dir = "elsewhere".into();
        d.workers = Some(3);
        assert_eq!(d.hash(), c.hash());
        d.seed = 1;
        assert_ne!(d.hash(), c.hash());
    }

    #[test]
    fn errors_name_fields() {
        let mut c = tiny();
        c.episodes = 0;
        assert!(c.validate().unwrap_err().to_string().contains("episodes:"));
        let mut c = tiny();
        c.manifest = Some("/nonexistent/manifest.json".into());
        assert!(c.validate().unwrap_err().to_string().contains("manifest:"));
        let mut c = tiny();
        c.env = EnvConfig::Tiny { instance: "nope".into() };
        assert!(c.validate().unwrap_err().to_string().contains("env.instance"));
        let mut c = tiny();
        c.planner.c = 0.0;
        assert!(c.validate().unwrap_err().to_string().contains("planner.c"));
    }

    #[test]
    fn minimal_json_uses_defaults() {
        let json = r#"{
            "env": {"kind": "pursuit-evasion"},
            "baseline": "planner",
            "planner": {"variant": "potmmcp", "c": 1.25, "lambda": 0.5,
                        "budget": {"simulations": 10}, "leaf_eval": {"kind": "value-function"},
                        "q_normalization": true, "convention": "observation-first"},
            "search_policy": {"kind": "meta", "tau": 0.25}
        }"#;
        let c: RunConfig = serde_json::from_str(json).unwrap();
        c.validate().unwrap();
        assert_eq!(c.episodes, 400);
        assert_eq!(c.method(), "potmmcp");
        assert_eq!(c.env.id(), "pursuit-evasion");
    }
}
