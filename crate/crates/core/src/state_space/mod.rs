//! Compilation of a SAN into a continuous-time Markov chain.

mod ctmc;
mod erlang;
mod explore;

use thiserror::Error;

use crate::san::SanError;

pub use ctmc::Ctmc;
pub use erlang::expand_erlang;
pub use explore::{generate, generate_with_stats, ExplorationLimits, GenerationStats};

/// Default state bound, a little above the largest chains reported as
/// tractable for this class of model.
pub const DEFAULT_MAX_STATES: usize = 20_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateSpaceError {
    #[error(transparent)]
    San(#[from] SanError),
    #[error("Erlang expansion needs at least one stage")]
    ZeroStages,
    #[error("model still contains deterministic activity `{0}`; expand it first")]
    DeterministicActivity(String),
    #[error("exploration aborted after {states} states ({frontier} still unexplored)")]
    LimitExceeded { states: usize, frontier: usize },
    #[error("place `{place}` exceeds {limit} tokens during exploration")]
    TokenLimit { place: String, limit: u32 },
    #[error("cycle of vanishing markings through `{activity}` at {marking}")]
    VanishingCycle { activity: String, marking: String },
    #[error("activity `{activity}` has invalid rate {rate} at {marking}")]
    InvalidRate {
        activity: String,
        rate: f64,
        marking: String,
    },
    #[error("case probabilities of `{activity}` sum to {sum} at {marking}")]
    CaseProbabilities {
        activity: String,
        sum: f64,
        marking: String,
    },
    #[error("invalid chain: {0}")]
    InvalidChain(String),
}
