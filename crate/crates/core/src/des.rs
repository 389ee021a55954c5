//! Discrete-event Monte Carlo execution of a [`SanModel`].
//!
//! Race semantics: every enabled timed activity competes. Exponential
//! activities are memoryless and resampled after every event. A
//! deterministic activity is scheduled when it becomes enabled, keeps its
//! firing time while it stays enabled and is cancelled once disabled.
//! Instantaneous activities fire immediately, highest priority first.
//!
//! Replication `i` of a study seeded with `s` draws from ChaCha8 seeded with
//! `s` on stream `i`, so estimates do not depend on thread scheduling.

use std::io::{self, Write};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use thiserror::Error;

use crate::san::{ActivityId, Marking, SanError, SanModel, Timing};
use crate::solver::RewardVariable;
use crate::Scalar;

/// Generator used for every replication, recorded in study metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9), stream = replication index";

/// Consecutive instantaneous firings tolerated before giving up.
pub const LIVELOCK_LIMIT: usize = 1_000_000;

/// Two-sided standard normal quantile for 99% confidence.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesError {
    #[error(transparent)]
    San(#[from] SanError),
    #[error("more than {LIVELOCK_LIMIT} consecutive instantaneous firings, last `{activity}`")]
    Livelock { activity: String },
    #[error("activity `{activity}` has invalid rate {rate} at {marking}")]
    InvalidRate {
        activity: String,
        rate: f64,
        marking: String,
    },
    #[error("activity `{activity}` has invalid delay {delay} at {marking}")]
    InvalidDelay {
        activity: String,
        delay: f64,
        marking: String,
    },
    #[error("case probabilities of `{activity}` sum to {sum} at {marking}")]
    CaseProbabilities {
        activity: String,
        sum: f64,
        marking: String,
    },
    #[error("at least two replications are needed, got {0}")]
    TooFewRuns(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub time: f64,
    pub activity: ActivityId,
    /// Fingerprint of the marking after the firing.
    pub marking_hash: u64,
}

/// One replication.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub seed: u64,
    pub horizon: f64,
    pub final_marking: Marking,
    pub trace: Option<Vec<TraceEvent>>,
}

impl SimRun {
    /// Writes `time<TAB>activity_name` lines.
    pub fn write_trace<T: Scalar, W: Write>(
        &self,
        model: &SanModel<T>,
        mut out: W,
    ) -> io::Result<()> {
        for e in self.trace.iter().flatten() {
            writeln!(out, "{}\t{}", e.time, model.activities()[e.activity.0].name)?;
        }
        Ok(())
    }
}

/// Sample mean with a 99% normal-approximation confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub variance: f64,
    pub ci_halfwidth: f64,
    pub runs: usize,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        assert!(n >= 1, "no samples");
        let mean = samples.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 {
            samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Estimate {
            mean,
            variance,
            ci_halfwidth: Z_99 * (variance / n as f64).sqrt(),
            runs: n,
        }
    }

    pub fn std_error(&self) -> f64 {
        (self.variance / self.runs as f64).sqrt()
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.mean).abs() <= self.ci_halfwidth
    }
}

/// Returned by an observer to continue or end a replication early.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Reusable executor for one model.
pub struct Simulator<'a, T> {
    model: &'a SanModel<T>,
    timed: Vec<ActivityId>,
    deterministic: Vec<ActivityId>,
}

impl<'a, T: Scalar> Simulator<'a, T> {
    pub fn new(model: &'a SanModel<T>) -> Self {
        let timed = (0..model.activities().len())
            .map(ActivityId)
            .filter(|&a| matches!(model.activities()[a.0].timing, Timing::Exponential(_)))
            .collect();
        let deterministic = (0..model.activities().len())
            .map(ActivityId)
            .filter(|&a| model.activities()[a.0].timing.is_deterministic())
            .collect();
        Simulator {
            model,
            timed,
            deterministic,
        }
    }

    pub fn rng(seed: u64, replication: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(replication);
        rng
    }

    /// Runs one replication up to `horizon`. `observe` sees every tangible
    /// marking together with the time it was entered.
    pub fn run<R: Rng>(
        &self,
        rng: &mut R,
        horizon: f64,
        mut trace: Option<&mut Vec<TraceEvent>>,
        mut observe: impl FnMut(f64, &Marking) -> Control,
    ) -> Result<Marking, DesError> {
        let model = self.model;
        let mut m = model.initial_marking();
        let mut now = 0.0f64;
        let mut clocks: Vec<Option<f64>> = vec![None; self.deterministic.len()];
        self.update_clocks(&m, now, &mut clocks)?;
        let mut rates: Vec<(ActivityId, f64)> = Vec::new();
        loop {
            let mut streak = 0usize;
            while let Some(id) = model.instantaneous_choice(&m)? {
                streak += 1;
                if streak > LIVELOCK_LIMIT {
                    return Err(DesError::Livelock {
                        activity: model.activities()[id.0].name.clone(),
                    });
                }
                m = self.fire(&m, id, rng, now, trace.as_deref_mut())?;
                self.update_clocks(&m, now, &mut clocks)?;
            }
            if observe(now, &m) == Control::Stop {
                return Ok(m);
            }

            rates.clear();
            let mut total = 0.0;
            for &id in &self.timed {
                if !model.is_enabled(id, &m)? {
                    continue;
                }
                let Timing::Exponential(rate) = &model.activities()[id.0].timing else {
                    unreachable!()
                };
                let r = rate.eval(&m).to_f64_lossy();
                if !(r > 0.0 && r.is_finite()) {
                    return Err(DesError::InvalidRate {
                        activity: model.activities()[id.0].name.clone(),
                        rate: r,
                        marking: model.describe(&m),
                    });
                }
                total += r;
                rates.push((id, r));
            }
            let exp_time = if total > 0.0 {
                now + Exp::new(total).expect("positive rate").sample(rng)
            } else {
                f64::INFINITY
            };
            let det = clocks
                .iter()
                .enumerate()
                .filter_map(|(k, c)| c.map(|t| (k, t)))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            let (next, id) = match det {
                Some((k, t)) if t <= exp_time => (t, self.deterministic[k]),
                _ if exp_time.is_finite() => {
                    let mut u = rng.random::<f64>() * total;
                    let mut pick = rates[rates.len() - 1].0;
                    for &(id, r) in &rates {
                        if u < r {
                            pick = id;
                            break;
                        }
                        u -= r;
                    }
                    (exp_time, pick)
                }
                _ => return Ok(m),
            };
            if next > horizon {
                return Ok(m);
            }
            now = next;
            m = self.fire(&m, id, rng, now, trace.as_deref_mut())?;
            if let Some(k) = self.deterministic.iter().position(|&d| d == id) {
                clocks[k] = None;
            }
            self.update_clocks(&m, now, &mut clocks)?;
        }
    }

    fn update_clocks(
        &self,
        m: &Marking,
        now: f64,
        clocks: &mut [Option<f64>],
    ) -> Result<(), DesError> {
        for (k, &id) in self.deterministic.iter().enumerate() {
            if !self.model.is_enabled(id, m)? {
                clocks[k] = None;
            } else if clocks[k].is_none() {
                let act = &self.model.activities()[id.0];
                let Timing::Deterministic(delay) = &act.timing else {
                    unreachable!()
                };
                let d = delay.eval(m).to_f64_lossy();
                if !(d > 0.0 && d.is_finite()) {
                    return Err(DesError::InvalidDelay {
                        activity: act.name.clone(),
                        delay: d,
                        marking: self.model.describe(m),
                    });
                }
                clocks[k] = Some(now + d);
            }
        }
        Ok(())
    }

    fn fire<R: Rng>(
        &self,
        m: &Marking,
        id: ActivityId,
        rng: &mut R,
        now: f64,
        trace: Option<&mut Vec<TraceEvent>>,
    ) -> Result<Marking, DesError> {
        let probs = self.model.case_probabilities(id, m)?;
        let case = if probs.len() == 1 {
            0
        } else {
            let p: Vec<f64> = probs.iter().map(|p| p.to_f64_lossy()).collect();
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > 1e-9 || p.iter().any(|&x| x < 0.0) {
                return Err(DesError::CaseProbabilities {
                    activity: self.model.activities()[id.0].name.clone(),
                    sum,
                    marking: self.model.describe(m),
                });
            }
            let mut u = rng.random::<f64>() * sum;
            let mut pick = p.iter().rposition(|&x| x > 0.0).unwrap_or(0);
            for (c, &x) in p.iter().enumerate() {
                if x > 0.0 && u < x {
                    pick = c;
                    break;
                }
                u -= x;
            }
            pick
        };
        let next = self.model.fire_unchecked(m, id, case)?;
        if let Some(t) = trace {
            t.push(TraceEvent {
                time: now,
                activity: id,
                marking_hash: next.fingerprint(),
            });
        }
        Ok(next)
    }

    /// Markings at each of the ascending `times` in one replication.
    pub fn markings_at<R: Rng>(
        &self,
        rng: &mut R,
        times: &[f64],
    ) -> Result<Vec<Marking>, DesError> {
        let horizon = times.last().copied().unwrap_or(0.0);
        let mut out: Vec<Marking> = Vec::with_capacity(times.len());
        let mut current: Option<Marking> = None;
        let last = self.run(rng, horizon, None, |t, m| {
            while out.len() < times.len() && times[out.len()] < t {
                out.push(current.clone().expect("initial marking observed at t=0"));
            }
            current = Some(m.clone());
            if out.len() == times.len() {
                Control::Stop
            } else {
                Control::Continue
            }
        })?;
        while out.len() < times.len() {
            out.push(last.clone());
        }
        Ok(out)
    }

    /// Time at which `target` first holds in a tangible marking, or `None`
    /// if it does not happen by `horizon`.
    pub fn first_passage<R: Rng>(
        &self,
        rng: &mut R,
        horizon: f64,
        target: &(dyn Fn(&Marking) -> bool + Sync),
    ) -> Result<Option<f64>, DesError> {
        let mut hit = None;
        self.run(rng, horizon, None, |t, m| {
            if target(m) {
                hit = Some(t);
                Control::Stop
            } else {
                Control::Continue
            }
        })?;
        Ok(hit)
    }
}

/// One replication from the initial marking up to `horizon`, with a trace
/// when requested.
pub fn simulate<T: Scalar>(
    model: &SanModel<T>,
    horizon: f64,
    seed: u64,
    record_trace: bool,
) -> Result<SimRun, DesError> {
    let sim = Simulator::new(model);
    let mut rng = Simulator::<T>::rng(seed, 0);
    let mut trace = record_trace.then(Vec::new);
    let final_marking = sim.run(&mut rng, horizon, trace.as_mut(), |_, _| Control::Continue)?;
    Ok(SimRun {
        seed,
        horizon,
        final_marking,
        trace,
    })
}

/// Estimates of `reward` at each ascending time point from `runs`
/// independent replications.
pub fn estimate_reward_at<T: Scalar>(
    model: &SanModel<T>,
    reward: &RewardVariable<T>,
    times: &[f64],
    runs: usize,
    seed: u64,
) -> Result<Vec<Estimate>, DesError> {
    if runs < 2 {
        return Err(DesError::TooFewRuns(runs));
    }
    let sim = Simulator::new(model);
    let per_run: Vec<Vec<f64>> = (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = Simulator::<T>::rng(seed, i as u64);
            sim.markings_at(&mut rng, times).map(|ms| {
                ms.iter()
                    .map(|m| reward.evaluate(m).to_f64_lossy())
                    .collect()
            })
        })
        .collect::<Result<_, _>>()?;
    Ok((0..times.len())
        .map(|k| {
            let column: Vec<f64> = per_run.iter().map(|r| r[k]).collect();
            Estimate::from_samples(&column)
        })
        .collect())
}

pub fn estimate_reward<T: Scalar>(
    model: &SanModel<T>,
    reward: &RewardVariable<T>,
    t: f64,
    runs: usize,
    seed: u64,
) -> Result<Estimate, DesError> {
    Ok(estimate_reward_at(model, reward, &[t], runs, seed)?[0])
}

/// First-passage times of `target` over `runs` replications, in
/// replication order; `None` where the horizon was reached first.
pub fn sample_first_passage<T: Scalar>(
    model: &SanModel<T>,
    target: &(dyn Fn(&Marking) -> bool + Sync),
    horizon: f64,
    runs: usize,
    seed: u64,
) -> Result<Vec<Option<f64>>, DesError> {
    let sim = Simulator::new(model);
    (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = Simulator::<T>::rng(seed, i as u64);
            sim.first_passage(&mut rng, horizon, target)
        })
        .collect()
}
