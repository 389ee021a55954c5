use std::sync::Arc;

use super::StateSpaceError;
use crate::san::{
    Activity, Case, Delay, Marking, OutputAction, PlaceId, Predicate, SanBuilder, SanModel, Timing,
    Value,
};
use crate::Scalar;

/// Replaces every deterministic activity by an Erlang chain of `stages`
/// exponential phases, each with rate `stages / delay`.
///
/// For `stages > 1` an activity `X` becomes:
///
/// * place `X.stage` counting completed phases, and for latched delays a
///   place `X.latch` holding `key + 1` once the delay has started;
/// * `X.start` (latched delays only): instantaneous, records the key;
/// * `X.stage`: advances the phase counter;
/// * `X`: the last phase, consuming the original inputs and applying the
///   original cases;
/// * `X.abort`: instantaneous, clears the progress if the original
///   enabling condition no longer holds.
///
/// A single stage gives a plain exponential with rate `1 / delay`.
/// Exponential and instantaneous activities are copied unchanged.
pub fn expand_erlang<T: Scalar>(
    model: &SanModel<T>,
    stages: u32,
) -> Result<SanModel<T>, StateSpaceError> {
    if stages == 0 {
        return Err(StateSpaceError::ZeroStages);
    }
    if !model.has_deterministic() {
        return Ok(model.clone());
    }
    let mut b = SanBuilder::from_model(model);
    for act in model.activities() {
        match &act.timing {
            Timing::Deterministic(delay) if stages == 1 => {
                let mut single = act.clone();
                single.timing = Timing::Exponential(inverse_rate(delay, T::one()));
                b.push_activity(single);
            }
            Timing::Deterministic(delay) => expand_one(&mut b, model, act, delay, stages)?,
            _ => {
                b.push_activity(act.clone());
            }
        }
    }
    Ok(b.build())
}

fn inverse_rate<T: Scalar>(delay: &Delay<T>, numerator: T) -> Value<T> {
    match delay {
        Delay::Fixed(d) => Value::Const(numerator / *d),
        Delay::MarkingDependent(f) => {
            let f = f.clone();
            Value::from_fn(move |m| numerator / f(m))
        }
        Delay::Latched { key, delay } => {
            let (key, delay) = (key.clone(), delay.clone());
            Value::from_fn(move |m| numerator / delay(key(m)))
        }
    }
}

fn expand_one<T: Scalar>(
    b: &mut SanBuilder<T>,
    model: &SanModel<T>,
    act: &Activity<T>,
    delay: &Delay<T>,
    stages: u32,
) -> Result<(), StateSpaceError> {
    let name = &act.name;
    let k = T::from_u32(stages).expect("stage count representable");
    let last = stages - 1;
    let stage = b.place(&format!("{name}.stage"), 0)?;

    let gates: Vec<Predicate> = act
        .gates
        .iter()
        .map(|g| model.gates()[g.index()].predicate.clone())
        .collect();
    let inputs = act.inputs.clone();
    let enabled: Arc<dyn Fn(&Marking) -> bool + Send + Sync> = Arc::new(move |m: &Marking| {
        inputs.iter().all(|&(p, n)| m.get(p) >= n) && gates.iter().all(|g| g(m))
    });

    let mut resets = vec![OutputAction::Set(stage, 0)];
    let (rate, latch): (Value<T>, Option<PlaceId>) = match delay {
        Delay::Latched { key, delay } => {
            let latch = b.place(&format!("{name}.latch"), 0)?;
            resets.push(OutputAction::Set(latch, 0));

            let en = enabled.clone();
            let start_gate = b.gate(&format!("{name}.unlatched"), move |m| {
                m.get(latch) == 0 && en(m)
            })?;
            let key_at_start = key.clone();
            b.push_activity(Activity {
                name: format!("{name}.start"),
                timing: Timing::Instantaneous {
                    priority: i32::MAX - 1,
                },
                inputs: Vec::new(),
                gates: vec![start_gate],
                cases: vec![Case {
                    probability: Value::Const(T::one()),
                    actions: vec![OutputAction::gate(format!("{name}.latchKey"), move |m| {
                        let key = key_at_start(m);
                        m.set(latch, key + 1);
                        Ok(())
                    })],
                }],
            });

            let (key, delay) = (key.clone(), delay.clone());
            let rate = Value::from_fn(move |m: &Marking| {
                let l = m.get(latch);
                let key = if l == 0 { key(m) } else { l - 1 };
                k / delay(key)
            });
            (rate, Some(latch))
        }
        other => (inverse_rate(other, k), None),
    };

    let en = enabled.clone();
    let advance_gate = b.gate(&format!("{name}.advance"), move |m| {
        m.get(stage) < last && en(m)
    })?;
    b.push_activity(Activity {
        name: format!("{name}.stage"),
        timing: Timing::Exponential(rate.clone()),
        inputs: Vec::new(),
        gates: vec![advance_gate],
        cases: vec![Case {
            probability: Value::Const(T::one()),
            actions: vec![OutputAction::gate(format!("{name}.nextStage"), move |m| {
                m.set(stage, m.get(stage) + 1);
                Ok(())
            })],
        }],
    });

    let complete_gate = b.gate(&format!("{name}.complete"), move |m| m.get(stage) == last)?;
    let mut gates = act.gates.clone();
    gates.push(complete_gate);
    let cases = act
        .cases
        .iter()
        .map(|c| Case {
            probability: c.probability.clone(),
            actions: resets
                .iter()
                .cloned()
                .chain(c.actions.iter().cloned())
                .collect(),
        })
        .collect();
    b.push_activity(Activity {
        name: name.clone(),
        timing: Timing::Exponential(rate),
        inputs: act.inputs.clone(),
        gates,
        cases,
    });

    let en = enabled;
    let abort_gate = b.gate(&format!("{name}.aborted"), move |m| {
        (m.get(stage) > 0 || latch.is_some_and(|l| m.get(l) > 0)) && !en(m)
    })?;
    b.push_activity(Activity {
        name: format!("{name}.abort"),
        timing: Timing::Instantaneous { priority: i32::MAX },
        inputs: Vec::new(),
        gates: vec![abort_gate],
        cases: vec![Case {
            probability: Value::Const(T::one()),
            actions: resets,
        }],
    });
    Ok(())
}
