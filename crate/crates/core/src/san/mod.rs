//! Stochastic activity networks.
//!
//! A [`SanModel`] is immutable once built. Every operation on it is a pure
//! function of the model and a [`Marking`], so models can be shared freely
//! between threads.

mod builder;
mod marking;
mod model;
mod validate;

use std::fmt;

use thiserror::Error;

pub use builder::{ActivitySpec, SanBuilder};
pub use marking::Marking;
pub use model::{
    Activity, Case, Delay, GateFn, InputGate, MarkingFn, OutputAction, Place, Predicate, SanModel,
    Timing, Value,
};
pub use validate::{Finding, ValidationReport};

/// Default per-place token bound.
pub const DEFAULT_TOKEN_CAP: u32 = 1 << 16;

macro_rules! id_type {
    ($(#[$doc:meta])* $name:ident, $prefix:literal) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub usize);

        impl $name {
            pub fn index(self) -> usize {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(
    /// Index of a place within its model.
    PlaceId,
    "p"
);
id_type!(
    /// Index of an input gate within its model.
    GateId,
    "g"
);
id_type!(
    /// Index of an activity within its model.
    ActivityId,
    "a"
);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SanError {
    #[error("unknown place {0}")]
    UnknownPlace(PlaceId),
    #[error("unknown gate {0}")]
    UnknownGate(GateId),
    #[error("unknown activity {0}")]
    UnknownActivity(ActivityId),
    #[error("marking has {found} places, model has {expected}")]
    MarkingShape { expected: usize, found: usize },
    #[error("activity `{activity}` is not enabled in this marking")]
    NotEnabled { activity: String },
    #[error("activity `{activity}` has {cases} cases, case {case} requested")]
    CaseOutOfRange {
        activity: String,
        case: usize,
        cases: usize,
    },
    #[error("case {case} of `{activity}` has zero probability in this marking")]
    ZeroProbabilityCase { activity: String, case: usize },
    #[error("place {place} holds {have} tokens, {need} requested")]
    TokenUnderflow {
        place: PlaceId,
        have: u32,
        need: u32,
    },
    #[error("place {place} would exceed the token cap of {cap}")]
    TokenOverflow { place: PlaceId, cap: u32 },
    #[error("place `{name}` declared with {requested} initial tokens, already has {existing}")]
    PlaceCollision {
        name: String,
        existing: u32,
        requested: u32,
    },
    #[error("duplicate gate name `{0}`")]
    DuplicateGate(String),
    #[error("activity `{0}` has no cases")]
    NoCases(String),
}
