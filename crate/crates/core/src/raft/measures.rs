use super::{compose, ClusterConfig, Mode, RaftError};
use crate::san::{Marking, SanModel};
use crate::solver::{
    reward_instant, transient_grid_by_squaring, transient_sweep_rewards, uniformize,
    RewardVariable, SolverSettings, DEFAULT_DENSE_LIMIT,
};
use crate::state_space::{
    expand_erlang, generate_with_stats, Ctmc, ExplorationLimits, GenerationStats,
};
use crate::Scalar;

/// `(time, value)` pairs.
pub type Curve = Vec<(f64, f64)>;

/// Power-sequence length above which a uniform grid switches to the dense
/// step-matrix method when the chain is small enough.
const DENSE_SWITCH_ITERATIONS: f64 = 2e6;

fn place<T: Scalar>(model: &SanModel<T>, name: &str) -> crate::san::PlaceId {
    model
        .place_id(name)
        .unwrap_or_else(|| panic!("cluster model has no place `{name}`"))
}

/// One once the event has been answered.
pub fn sequence_end_reward<T: Scalar>(model: &SanModel<T>) -> RewardVariable<T> {
    let end = place(model, "SequenceEnd");
    RewardVariable::indicator("handled", move |m: &Marking| m.get(end) > 0)
}

/// One while a leader is up together with a follower majority.
pub fn availability_reward<T: Scalar>(model: &SanModel<T>, c: u32) -> RewardVariable<T> {
    let leader = place(model, "LeaderUp");
    let followers = place(model, "FollowersUp");
    RewardVariable::indicator("available", move |m: &Marking| {
        m.get(leader) == 1 && m.get(followers) >= c / 2
    })
}

/// A composed cluster model after Erlang expansion, with its CTMC.
pub struct CompiledModel<T> {
    pub config: ClusterConfig,
    pub model: SanModel<T>,
    pub ctmc: Ctmc<T>,
    pub stats: GenerationStats,
}

pub fn compile<T: Scalar>(
    cfg: &ClusterConfig,
    limits: ExplorationLimits,
) -> Result<CompiledModel<T>, RaftError> {
    let model = expand_erlang(&compose::<T>(cfg)?, cfg.e_s)?;
    let (ctmc, stats) = generate_with_stats(&model, limits)?;
    Ok(CompiledModel {
        config: cfg.clone(),
        model,
        ctmc,
        stats,
    })
}

fn uniform_step(times: &[f64]) -> Option<f64> {
    if times.len() < 2 || times[0] != 0.0 {
        return None;
    }
    let step = times[1];
    let ok = times
        .iter()
        .enumerate()
        .all(|(k, &t)| (t - k as f64 * step).abs() <= 1e-12 * t.max(1.0));
    (ok && step > 0.0).then_some(step)
}

impl<T: Scalar> CompiledModel<T> {
    /// Expected `reward` at each ascending time point (ms).
    pub fn reward_curve(
        &self,
        reward: &RewardVariable<T>,
        times: &[f64],
        settings: &SolverSettings<T>,
    ) -> Result<Curve, RaftError> {
        let last = times.last().copied().unwrap_or(0.0);
        let q = uniformize(&self.ctmc)?.rate().to_f64_lossy();
        if let Some(step) = uniform_step(times) {
            if q * last > DENSE_SWITCH_ITERATIONS && self.ctmc.num_states() <= DEFAULT_DENSE_LIMIT {
                let sol = transient_grid_by_squaring(
                    &self.ctmc,
                    T::lit(step),
                    times.len(),
                    settings,
                    DEFAULT_DENSE_LIMIT,
                )?;
                let values = reward_instant(&sol, &self.ctmc, reward)?;
                return Ok(times
                    .iter()
                    .zip(values)
                    .map(|(&t, (_, v))| (t, v.to_f64_lossy()))
                    .collect());
            }
        }
        let ts: Vec<T> = times.iter().map(|&t| T::lit(t)).collect();
        let values = transient_sweep_rewards(
            &self.ctmc,
            &ts,
            &[reward.state_values(&self.ctmc)],
            settings,
        )?;
        Ok(times
            .iter()
            .zip(&values[0])
            .map(|(&t, v)| (t, v.to_f64_lossy()))
            .collect())
    }

    /// Probability that the event has been answered by each time point.
    pub fn response_cdf(
        &self,
        times: &[f64],
        settings: &SolverSettings<T>,
    ) -> Result<Curve, RaftError> {
        self.reward_curve(&sequence_end_reward(&self.model), times, settings)
    }

    /// Probability that the cluster is unavailable at each time point.
    pub fn unavailability(
        &self,
        times: &[f64],
        settings: &SolverSettings<T>,
    ) -> Result<Curve, RaftError> {
        let avail = self.reward_curve(
            &availability_reward(&self.model, self.config.c),
            times,
            settings,
        )?;
        Ok(avail
            .into_iter()
            .map(|(t, a)| (t, (1.0 - a).max(0.0)))
            .collect())
    }
}

/// `P(event answered by t)` for the composed response-mode model.
pub fn response_time_cdf<T: Scalar>(
    cfg: &ClusterConfig,
    times: &[f64],
    settings: &SolverSettings<T>,
    limits: ExplorationLimits,
) -> Result<Curve, RaftError> {
    let cfg = ClusterConfig {
        mode: Mode::Response,
        ..cfg.clone()
    };
    compile::<T>(&cfg, limits)?.response_cdf(times, settings)
}

/// `P_CU(t) = 1 − P(leader and follower majority up)` for the composed
/// availability-mode model.
pub fn unavailability_curve<T: Scalar>(
    cfg: &ClusterConfig,
    times: &[f64],
    settings: &SolverSettings<T>,
    limits: ExplorationLimits,
) -> Result<Curve, RaftError> {
    let cfg = ClusterConfig {
        mode: Mode::Availability,
        ..cfg.clone()
    };
    compile::<T>(&cfg, limits)?.unavailability(times, settings)
}
