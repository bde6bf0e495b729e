//! Deterministic token interpreter over events and methods.

mod engine;
mod trace;

pub use engine::{
    execute_event, run_method, simulate_sequence, Activation, SimConfig, SimError, SimOutcome,
    SimState, Simulator, StuckToken, Token, DEFAULT_MAX_STEPS,
};
pub use trace::{Action, Location, TokenId, Trace, TraceRecord};
