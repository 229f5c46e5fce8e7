//! Type-based online planning in partially observable stochastic games.
//!
//! The planner ([`planner`]) runs Monte-Carlo tree search over the planning
//! agent's histories, with beliefs over history-policy-states ([`belief`]),
//! PUCT action selection, and an empirical-game meta-policy ([`metagame`]) as
//! search policy. An I-POMCP-PF style UCB baseline shares the same machinery.
//! [`oracle`] solves small explicit games exactly for verification.

pub mod belief;
pub mod envs;
pub mod harness;
pub mod error;
pub mod metagame;
pub mod oracle;
pub mod planner;
pub mod policies;
pub mod posg;

pub use error::{Error, Result};
pub use posg::{AgentId, Posg, PosgSpec};
