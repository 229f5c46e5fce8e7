//! Benchmark environments.

pub mod driving;
pub mod grid;
pub mod predator_prey;
pub mod pursuit_evasion;
pub mod tiny;

pub use driving::{make_driving, Driving};
pub use predator_prey::{make_predator_prey, PredatorPrey};
pub use pursuit_evasion::{make_pursuit_evasion, PursuitEvasion};
pub use tiny::{make_tiny_posg, TinyPosgModel};
