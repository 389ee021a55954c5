//! Transient analysis of a [`Ctmc`](crate::state_space::Ctmc) by
//! uniformization.
//!
//! `π(t) = Σ_i Pois(i; qt) · π(0)·P^i` with `P = I + Q/q`. The Poisson
//! series is truncated to a window `[l, r]` that leaves at most `eps_left`
//! mass below and `eps_right` above.

mod dense;
mod poisson;
mod reward;
mod transient;
mod uniformize;

use thiserror::Error;

use crate::Scalar;

pub use dense::{transient_grid_by_squaring, DEFAULT_DENSE_LIMIT};
pub use poisson::{poisson_terms, PoissonWindow};
pub use reward::{accumulated_reward, reward_instant, RewardVariable};
pub use transient::{
    transient, transient_from, transient_sweep, transient_sweep_rewards, TransientSolution,
};
pub use uniformize::{uniformize, Uniformized, UNIFORMIZATION_HEADROOM};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("chain has no states")]
    EmptyChain,
    #[error("time {0} is negative or not finite")]
    InvalidTime(f64),
    #[error("time points must be sorted ascending")]
    UnsortedTimes,
    #[error("vector of length {found} does not match {expected} states")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("tolerances must lie in (0, 1), got eps_left={eps_left}, eps_right={eps_right}")]
    InvalidTolerance { eps_left: f64, eps_right: f64 },
    #[error("{states} states exceed the dense limit of {limit}")]
    TooLargeForDense { states: usize, limit: usize },
}

/// Truncation tolerances. Their sum is the total error budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings<T> {
    pub eps_left: T,
    pub eps_right: T,
}

impl<T: Scalar> SolverSettings<T> {
    pub fn new(eps_left: T, eps_right: T) -> Result<Self, SolverError> {
        let ok = |e: T| e > T::zero() && e < T::one();
        if !(ok(eps_left) && ok(eps_right)) {
            return Err(SolverError::InvalidTolerance {
                eps_left: eps_left.to_f64_lossy(),
                eps_right: eps_right.to_f64_lossy(),
            });
        }
        Ok(SolverSettings {
            eps_left,
            eps_right,
        })
    }

    /// Splits a total tolerance evenly between both tails.
    pub fn with_total(eps: T) -> Result<Self, SolverError> {
        let half = eps / T::lit(2.0);
        Self::new(half, half)
    }

    pub fn total(&self) -> T {
        self.eps_left + self.eps_right
    }
}

impl<T: Scalar> Default for SolverSettings<T> {
    /// `ε = 1e-9`, split evenly.
    fn default() -> Self {
        SolverSettings {
            eps_left: T::lit(5e-10),
            eps_right: T::lit(5e-10),
        }
    }
}

fn check_time<T: Scalar>(t: T) -> Result<(), SolverError> {
    if t < T::zero() || !t.is_finite() {
        return Err(SolverError::InvalidTime(t.to_f64_lossy()));
    }
    Ok(())
}
