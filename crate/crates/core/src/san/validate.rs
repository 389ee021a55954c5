use std::fmt;

use super::{ActivityId, Delay, GateId, PlaceId, SanModel, Timing};
use crate::Scalar;

/// One problem found by [`SanModel::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Finding {
    NoPlaces,
    DanglingPlace {
        activity: String,
        place: PlaceId,
    },
    DanglingGate {
        activity: String,
        gate: GateId,
    },
    NoCases {
        activity: String,
    },
    CaseSum {
        activity: String,
        sum: f64,
    },
    NegativeProbability {
        activity: String,
        case: usize,
    },
    NonPositiveRate {
        activity: String,
        rate: f64,
    },
    NonPositiveDelay {
        activity: String,
        delay: f64,
    },
    InitialAboveCap {
        place: String,
        tokens: u32,
        cap: u32,
    },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::NoPlaces => f.write_str("model has no places"),
            Finding::DanglingPlace { activity, place } => {
                write!(f, "`{activity}` references missing place {place}")
            }
            Finding::DanglingGate { activity, gate } => {
                write!(f, "`{activity}` references missing gate {gate}")
            }
            Finding::NoCases { activity } => write!(f, "`{activity}` has no cases"),
            Finding::CaseSum { activity, sum } => {
                write!(f, "case probabilities of `{activity}` sum to {sum}")
            }
            Finding::NegativeProbability { activity, case } => {
                write!(f, "case {case} of `{activity}` has negative probability")
            }
            Finding::NonPositiveRate { activity, rate } => {
                write!(f, "`{activity}` has non-positive rate {rate}")
            }
            Finding::NonPositiveDelay { activity, delay } => {
                write!(f, "`{activity}` has non-positive delay {delay}")
            }
            Finding::InitialAboveCap { place, tokens, cap } => {
                write!(
                    f,
                    "place `{place}` starts with {tokens} tokens, cap is {cap}"
                )
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for finding in &self.findings {
            writeln!(f, "{finding}")?;
        }
        Ok(())
    }
}

fn positive<T: Scalar>(v: T) -> bool {
    v > T::zero() && v.is_finite()
}

impl<T: Scalar> SanModel<T> {
    /// Structural checks plus probability and rate checks on the initial
    /// marking. Marking-dependent rates and delays are only evaluated when
    /// their activity is enabled initially.
    pub fn validate(&self) -> ValidationReport {
        let mut findings = Vec::new();
        if self.places.is_empty() {
            findings.push(Finding::NoPlaces);
        }
        for p in &self.places {
            if p.initial_tokens > self.token_cap {
                findings.push(Finding::InitialAboveCap {
                    place: p.name.clone(),
                    tokens: p.initial_tokens,
                    cap: self.token_cap,
                });
            }
        }
        let initial = self.initial_marking();
        let tol = T::probability_tolerance();

        for (i, act) in self.activities.iter().enumerate() {
            let mut intact = true;
            let places = act.inputs.iter().map(|(p, _)| *p).chain(
                act.cases
                    .iter()
                    .flat_map(|c| c.actions.iter().filter_map(|a| a.place())),
            );
            for p in places {
                if p.0 >= self.places.len() {
                    intact = false;
                    findings.push(Finding::DanglingPlace {
                        activity: act.name.clone(),
                        place: p,
                    });
                }
            }
            for &g in &act.gates {
                if g.0 >= self.gates.len() {
                    intact = false;
                    findings.push(Finding::DanglingGate {
                        activity: act.name.clone(),
                        gate: g,
                    });
                }
            }
            if act.cases.is_empty() {
                findings.push(Finding::NoCases {
                    activity: act.name.clone(),
                });
                continue;
            }
            if !intact {
                continue;
            }
            let mut sum = T::zero();
            for (ci, case) in act.cases.iter().enumerate() {
                let p = case.probability.eval(&initial);
                if p < T::zero() {
                    findings.push(Finding::NegativeProbability {
                        activity: act.name.clone(),
                        case: ci,
                    });
                }
                sum = sum + p;
            }
            if (sum - T::one()).abs() > tol {
                findings.push(Finding::CaseSum {
                    activity: act.name.clone(),
                    sum: sum.to_f64_lossy(),
                });
            }

            let enabled = self.is_enabled(ActivityId(i), &initial).unwrap_or(false);
            match &act.timing {
                Timing::Exponential(rate) => {
                    if rate.is_const() || enabled {
                        let r = rate.eval(&initial);
                        if !positive(r) {
                            findings.push(Finding::NonPositiveRate {
                                activity: act.name.clone(),
                                rate: r.to_f64_lossy(),
                            });
                        }
                    }
                }
                Timing::Deterministic(delay) => {
                    if matches!(delay, Delay::Fixed(_)) || enabled {
                        let d = delay.eval(&initial);
                        if !positive(d) {
                            findings.push(Finding::NonPositiveDelay {
                                activity: act.name.clone(),
                                delay: d.to_f64_lossy(),
                            });
                        }
                    }
                }
                Timing::Instantaneous { .. } => {}
            }
        }
        ValidationReport { findings }
    }
}
