//! Event-sourced simulation engine.

pub mod events;
pub mod probe;
pub mod replay;
pub mod run;
pub mod state;
pub mod world;

pub use events::{EventKind, EventRecord, Phase, RunLog};
pub use probe::{ProbeRecord, Prober};
pub use replay::{replay, replay_digest};
pub use run::{read_memory, run_scenario, run_with, Inputs, RunOutcome};
pub use state::{estimate_state, observe, MeanFieldState, ObservationSnapshot};
pub use world::World;
