use std::fmt;
use std::sync::Arc;

use super::{
    check_time, poisson_terms, uniformize, SolverError, SolverSettings, TransientSolution,
};
use crate::san::{Marking, MarkingFn};
use crate::state_space::Ctmc;
use crate::Scalar;

/// A named real-valued function of the marking.
#[derive(Clone)]
pub struct RewardVariable<T> {
    pub name: String,
    pub value: MarkingFn<T>,
}

impl<T: Scalar> RewardVariable<T> {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(&Marking) -> T + Send + Sync + 'static,
    ) -> Self {
        RewardVariable {
            name: name.into(),
            value: Arc::new(value),
        }
    }

    /// One where `holds` is true, zero elsewhere.
    pub fn indicator(
        name: impl Into<String>,
        holds: impl Fn(&Marking) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self::new(name, move |m| if holds(m) { T::one() } else { T::zero() })
    }

    pub fn evaluate(&self, m: &Marking) -> T {
        (self.value)(m)
    }

    /// The reward evaluated on every state of `ctmc`.
    pub fn state_values(&self, ctmc: &Ctmc<T>) -> Vec<T> {
        ctmc.states().iter().map(|m| self.evaluate(m)).collect()
    }
}

impl<T> fmt::Debug for RewardVariable<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RewardVariable({})", self.name)
    }
}

/// `(t, Σ_s π_s(t)·reward(s))` for every time point of `solution`.
pub fn reward_instant<T: Scalar>(
    solution: &TransientSolution<T>,
    ctmc: &Ctmc<T>,
    reward: &RewardVariable<T>,
) -> Result<Vec<(T, T)>, SolverError> {
    let values = reward.state_values(ctmc);
    solution
        .times
        .iter()
        .zip(&solution.distributions)
        .map(|(&t, d)| {
            if d.len() != values.len() {
                return Err(SolverError::DimensionMismatch {
                    expected: values.len(),
                    found: d.len(),
                });
            }
            Ok((t, d.iter().zip(&values).map(|(&p, &r)| p * r).sum()))
        })
        .collect()
}

/// Expected reward accumulated over `[0, t]`, `∫ π(u)·r du`.
///
/// Uses `(1/q) Σ_i (v_i·r) P(N(qt) > i)`, truncated once the Poisson tail
/// beyond `i` drops below `eps_right`.
pub fn accumulated_reward<T: Scalar>(
    ctmc: &Ctmc<T>,
    reward: &RewardVariable<T>,
    t: T,
    settings: &SolverSettings<T>,
) -> Result<T, SolverError> {
    check_time(t)?;
    let u = uniformize(ctmc)?;
    let q = u.rate();
    let window = poisson_terms(q * t, settings);
    let values = reward.state_values(ctmc);

    // tail[i] = P(N > i) for left ≤ i ≤ right; below `left` it is the
    // whole window mass.
    let mut tail = vec![T::zero(); window.weights.len()];
    let mut acc = T::zero();
    for k in (0..window.weights.len()).rev() {
        tail[k] = acc;
        acc = acc + window.weights[k];
    }
    let total = acc;

    let mut v = ctmc.initial().to_vec();
    let mut next = vec![T::zero(); v.len()];
    let mut sum = T::zero();
    for i in 0..window.right {
        let above = if i < window.left {
            total
        } else {
            tail[i - window.left]
        };
        let dot: T = v.iter().zip(&values).map(|(&p, &r)| p * r).sum();
        sum = sum + dot * above;
        u.step(&v, &mut next);
        std::mem::swap(&mut v, &mut next);
    }
    Ok(sum / q)
}
