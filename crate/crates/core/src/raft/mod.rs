//! SAN models of a RAFT controller cluster.
//!
//! Times are in milliseconds and rates per millisecond throughout. The
//! three submodels share places by name and are composed into one
//! [`SanModel`](crate::san::SanModel) by [`compose`].

mod config;
mod failure;
pub mod formulas;
mod measures;
mod places;
mod recovery;
mod response;

use thiserror::Error;

use crate::san::{SanBuilder, SanError, SanModel};
use crate::solver::SolverError;
use crate::state_space::StateSpaceError;
use crate::Scalar;

pub use config::{ClusterConfig, ConfigError, InjectionMix, Mode};
pub use failure::add_failure_model;
pub use formulas::{failure_role_probabilities, majority_delay, merged_failure_rate};
pub use measures::{
    availability_reward, compile, response_time_cdf, sequence_end_reward, unavailability_curve,
    CompiledModel, Curve,
};
pub use places::ClusterPlaces;
pub use recovery::add_recovery_model;
pub use response::{add_response_model, ResponsePlaces};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RaftError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    San(#[from] SanError),
    #[error(transparent)]
    StateSpace(#[from] StateSpaceError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

fn checked(cfg: &ClusterConfig) -> Result<(), RaftError> {
    cfg.validate()?;
    Ok(())
}

/// The event path alone, with the cluster permanently intact.
pub fn build_response_time_model<T: Scalar>(cfg: &ClusterConfig) -> Result<SanModel<T>, RaftError> {
    checked(cfg)?;
    let mut b = SanBuilder::new("raft-response");
    let shared = ClusterPlaces::declare(&mut b, cfg)?;
    add_response_model(&mut b, cfg, &shared)?;
    Ok(b.build())
}

/// Failure arrivals and role selection alone.
pub fn build_failure_model<T: Scalar>(cfg: &ClusterConfig) -> Result<SanModel<T>, RaftError> {
    checked(cfg)?;
    let mut b = SanBuilder::new("raft-failure");
    let shared = ClusterPlaces::declare(&mut b, cfg)?;
    add_failure_model(&mut b, cfg, &shared)?;
    Ok(b.build())
}

/// Repair, re-admission and election alone.
pub fn build_recovery_model<T: Scalar>(cfg: &ClusterConfig) -> Result<SanModel<T>, RaftError> {
    checked(cfg)?;
    let mut b = SanBuilder::new("raft-recovery");
    let shared = ClusterPlaces::declare(&mut b, cfg)?;
    add_recovery_model(&mut b, cfg, &shared)?;
    Ok(b.build())
}

/// All three submodels over shared places.
pub fn compose<T: Scalar>(cfg: &ClusterConfig) -> Result<SanModel<T>, RaftError> {
    checked(cfg)?;
    let mut b = SanBuilder::new(format!("raft-c{}", cfg.c));
    let shared = ClusterPlaces::declare(&mut b, cfg)?;
    add_response_model(&mut b, cfg, &shared)?;
    add_failure_model(&mut b, cfg, &shared)?;
    add_recovery_model(&mut b, cfg, &shared)?;
    Ok(b.build())
}
