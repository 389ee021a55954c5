//! Performability modelling of RAFT-replicated controller clusters.
//!
//! The crate is organised bottom-up:
//!
//! * [`san`]: stochastic activity networks with places, markings, timed and
//!   instantaneous activities, input gates, output actions and cases.
//! * [`state_space`]: Erlang expansion of deterministic delays, breadth-first
//!   reachability with on-the-fly elimination of vanishing markings, and the
//!   resulting [`state_space::Ctmc`].
//! * [`solver`]: transient analysis by uniformization with stable Poisson
//!   truncation, plus reward evaluation.
//! * [`raft`]: the cluster models (response time, failure injection,
//!   recovery) built from a [`raft::ClusterConfig`].
//! * [`des`]: a discrete-event Monte Carlo executor used as an independent
//!   oracle for the analytic pipeline.
//!
//! All numeric code is generic over [`Scalar`]; the aliases below fix the
//! common double-precision instantiation.

pub mod des;
pub mod raft;
pub mod san;
pub mod scalar;
pub mod solver;
pub mod state_space;

pub use scalar::Scalar;

/// Double-precision SAN model.
pub type SanModel64 = san::SanModel<f64>;
/// Single-precision SAN model.
pub type SanModel32 = san::SanModel<f32>;
/// Double-precision CTMC.
pub type Ctmc64 = state_space::Ctmc<f64>;
/// Single-precision CTMC.
pub type Ctmc32 = state_space::Ctmc<f32>;
/// Double-precision transient solution.
pub type TransientSolution64 = solver::TransientSolution<f64>;
/// Double-precision solver settings.
pub type SolverSettings64 = solver::SolverSettings<f64>;
/// Double-precision reward variable.
pub type RewardVariable64 = solver::RewardVariable<f64>;
