//! Seeded multi-agent simulation of a discussion platform under coordinated
//! adversarial amplification, with optional moderation and a counter team.

pub mod cognition;
pub mod config;
pub mod engine;
pub mod error;
pub mod gateway;
pub mod metrics;
pub mod moderation;
pub mod output;
pub mod rng;
pub mod social;
pub mod team;

pub use config::{Ablation, BackendKind, CaseId, ScenarioConfig};
pub use engine::{replay, replay_digest, run_scenario, run_with, RunLog, World};
pub use error::{GatewayError, Result, SimError};
