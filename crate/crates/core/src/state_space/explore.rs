use std::collections::{HashMap, HashSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use indexmap::IndexSet;

use super::{Ctmc, StateSpaceError, DEFAULT_MAX_STATES};
use crate::san::{ActivityId, Marking, SanError, SanModel, Timing};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExplorationLimits {
    pub max_states: usize,
    pub max_tokens_per_place: u32,
}

impl Default for ExplorationLimits {
    fn default() -> Self {
        ExplorationLimits {
            max_states: DEFAULT_MAX_STATES,
            max_tokens_per_place: crate::san::DEFAULT_TOKEN_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GenerationStats {
    pub states: usize,
    pub transitions: usize,
    /// Distinct vanishing markings eliminated.
    pub vanishing: usize,
    pub elapsed: Duration,
}

/// Tangible reachability graph of `model` as a CTMC.
///
/// Vanishing markings are eliminated on the fly: each timed firing is
/// followed through the chain of instantaneous firings to a distribution
/// over tangible markings.
pub fn generate<T: Scalar>(
    model: &SanModel<T>,
    limits: ExplorationLimits,
) -> Result<Ctmc<T>, StateSpaceError> {
    generate_with_stats(model, limits).map(|(c, _)| c)
}

pub fn generate_with_stats<T: Scalar>(
    model: &SanModel<T>,
    limits: ExplorationLimits,
) -> Result<(Ctmc<T>, GenerationStats), StateSpaceError> {
    let start = Instant::now();
    if let Some(a) = model
        .activities()
        .iter()
        .find(|a| a.timing.is_deterministic())
    {
        return Err(StateSpaceError::DeterministicActivity(a.name.clone()));
    }
    let timed: Vec<ActivityId> = model
        .activities()
        .iter()
        .enumerate()
        .filter(|(_, a)| matches!(a.timing, Timing::Exponential(_)))
        .map(|(i, _)| ActivityId(i))
        .collect();

    let mut ex = Explorer {
        model,
        limits,
        registry: IndexSet::new(),
        memo: HashMap::new(),
        on_path: HashSet::new(),
    };
    let initial_marking = model.initial_marking();
    ex.check_tokens(&initial_marking)?;
    let initial_support = ex.resolve(initial_marking)?;

    let mut rows: Vec<Vec<(u32, T)>> = Vec::new();
    let mut current = 0;
    while current < ex.registry.len() {
        let m = ex.registry[current].clone();
        let mut row: Vec<(u32, T)> = Vec::new();
        for &id in &timed {
            if !model.is_enabled(id, &m)? {
                continue;
            }
            let act = &model.activities()[id.0];
            let Timing::Exponential(rate) = &act.timing else {
                unreachable!()
            };
            let r = rate.eval(&m);
            if !(r > T::zero() && r.is_finite()) {
                return Err(StateSpaceError::InvalidRate {
                    activity: act.name.clone(),
                    rate: r.to_f64_lossy(),
                    marking: model.describe(&m),
                });
            }
            for (case, p) in ex.checked_cases(id, &m)? {
                let next = ex.fire(&m, id, case)?;
                for &(target, q) in ex.resolve(next)?.iter() {
                    if target as usize == current {
                        continue;
                    }
                    let w = r * p * q;
                    match row.iter_mut().find(|(t, _)| *t == target) {
                        Some(e) => e.1 = e.1 + w,
                        None => row.push((target, w)),
                    }
                }
            }
        }
        rows.push(row);
        current += 1;
        if ex.registry.len() > limits.max_states {
            return Err(StateSpaceError::LimitExceeded {
                states: ex.registry.len(),
                frontier: ex.registry.len() - current,
            });
        }
    }

    let mut initial = vec![T::zero(); ex.registry.len()];
    for &(s, p) in initial_support.iter() {
        initial[s as usize] = initial[s as usize] + p;
    }
    let vanishing = ex.memo.len();
    let states: Vec<Marking> = ex.registry.into_iter().collect();
    let ctmc = Ctmc::from_rows(states, rows, initial);
    let stats = GenerationStats {
        states: ctmc.num_states(),
        transitions: ctmc.num_transitions(),
        vanishing,
        elapsed: start.elapsed(),
    };
    log::debug!(
        "generated {} states, {} transitions, {} vanishing in {:?}",
        stats.states,
        stats.transitions,
        stats.vanishing,
        stats.elapsed
    );
    Ok((ctmc, stats))
}

type Support<T> = Arc<[(u32, T)]>;

struct Explorer<'a, T> {
    model: &'a SanModel<T>,
    limits: ExplorationLimits,
    registry: IndexSet<Marking>,
    memo: HashMap<Marking, Support<T>>,
    on_path: HashSet<Marking>,
}

impl<T: Scalar> Explorer<'_, T> {
    fn check_tokens(&self, m: &Marking) -> Result<(), StateSpaceError> {
        if let Some(p) = m
            .tokens()
            .iter()
            .position(|&t| t > self.limits.max_tokens_per_place)
        {
            return Err(StateSpaceError::TokenLimit {
                place: self.model.places()[p].name.clone(),
                limit: self.limits.max_tokens_per_place,
            });
        }
        Ok(())
    }

    fn fire(&self, m: &Marking, id: ActivityId, case: usize) -> Result<Marking, StateSpaceError> {
        let next = self
            .model
            .fire_unchecked(m, id, case)
            .map_err(|e| match e {
                SanError::TokenOverflow { place, cap } => StateSpaceError::TokenLimit {
                    place: self.model.places()[place.0].name.clone(),
                    limit: cap,
                },
                other => other.into(),
            })?;
        self.check_tokens(&next)?;
        Ok(next)
    }

    /// Cases of `id` with positive probability in `m`, after checking the
    /// probabilities form a distribution.
    fn checked_cases(
        &self,
        id: ActivityId,
        m: &Marking,
    ) -> Result<Vec<(usize, T)>, StateSpaceError> {
        let probs = self.model.case_probabilities(id, m)?;
        let sum: T = probs.iter().copied().sum();
        if (sum - T::one()).abs() > T::probability_tolerance()
            || probs.iter().any(|&p| p < T::zero() || !p.is_finite())
        {
            return Err(StateSpaceError::CaseProbabilities {
                activity: self.model.activities()[id.0].name.clone(),
                sum: sum.to_f64_lossy(),
                marking: self.model.describe(m),
            });
        }
        Ok(probs
            .into_iter()
            .enumerate()
            .filter(|(_, p)| *p > T::zero())
            .collect())
    }

    /// Distribution over tangible state indices reached from `m` in zero
    /// time. Tangible markings are registered on first sight.
    fn resolve(&mut self, m: Marking) -> Result<Support<T>, StateSpaceError> {
        if let Some(i) = self.registry.get_index_of(&m) {
            return Ok(Arc::from([(i as u32, T::one())]));
        }
        if let Some(s) = self.memo.get(&m) {
            return Ok(s.clone());
        }
        let Some(id) = self.model.instantaneous_choice(&m)? else {
            let (i, _) = self.registry.insert_full(m);
            return Ok(Arc::from([(i as u32, T::one())]));
        };
        self.on_path.insert(m.clone());
        let mut out: Vec<(u32, T)> = Vec::new();
        for (case, p) in self.checked_cases(id, &m)? {
            let next = self.fire(&m, id, case)?;
            if self.on_path.contains(&next) {
                return Err(StateSpaceError::VanishingCycle {
                    activity: self.model.activities()[id.0].name.clone(),
                    marking: self.model.describe(&next),
                });
            }
            for &(t, q) in self.resolve(next)?.iter() {
                match out.iter_mut().find(|(s, _)| *s == t) {
                    Some(e) => e.1 = e.1 + p * q,
                    None => out.push((t, p * q)),
                }
            }
        }
        self.on_path.remove(&m);
        let support: Support<T> = out.into();
        self.memo.insert(m, support.clone());
        Ok(support)
    }
}
