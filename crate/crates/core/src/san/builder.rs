use std::collections::HashMap;
use std::sync::Arc;

use super::{
    Activity, ActivityId, Case, Delay, GateId, InputGate, Marking, OutputAction, Place, PlaceId,
    SanError, SanModel, Timing, Value, DEFAULT_TOKEN_CAP,
};
use crate::Scalar;

/// Incremental construction of a [`SanModel`].
///
/// Places are keyed by name: declaring an existing name returns the same id,
/// which is how submodels built into one builder share state.
#[derive(Clone)]
pub struct SanBuilder<T> {
    name: String,
    places: Vec<Place>,
    by_name: HashMap<String, PlaceId>,
    gates: Vec<InputGate>,
    gate_names: HashMap<String, GateId>,
    activities: Vec<Activity<T>>,
    token_cap: u32,
}

impl<T: Scalar> SanBuilder<T> {
    pub fn new(name: impl Into<String>) -> Self {
        SanBuilder {
            name: name.into(),
            places: Vec::new(),
            by_name: HashMap::new(),
            gates: Vec::new(),
            gate_names: HashMap::new(),
            activities: Vec::new(),
            token_cap: DEFAULT_TOKEN_CAP,
        }
    }

    /// Seeds a builder with an existing model so further elements can be
    /// appended. Existing ids stay valid.
    pub fn from_model(model: &SanModel<T>) -> Self {
        let by_name = model
            .places
            .iter()
            .enumerate()
            .map(|(i, p)| (p.name.clone(), PlaceId(i)))
            .collect();
        let gate_names = model
            .gates
            .iter()
            .enumerate()
            .map(|(i, g)| (g.name.clone(), GateId(i)))
            .collect();
        SanBuilder {
            name: model.name.clone(),
            places: model.places.clone(),
            by_name,
            gates: model.gates.clone(),
            gate_names,
            activities: Vec::new(),
            token_cap: model.token_cap,
        }
    }

    pub fn token_cap(mut self, cap: u32) -> Self {
        self.token_cap = cap;
        self
    }

    /// Declares a place, or returns the existing one with the same name.
    /// Redeclaring with a different initial count is a collision.
    pub fn place(&mut self, name: &str, initial_tokens: u32) -> Result<PlaceId, SanError> {
        if let Some(&id) = self.by_name.get(name) {
            let existing = self.places[id.0].initial_tokens;
            if existing != initial_tokens {
                return Err(SanError::PlaceCollision {
                    name: name.to_string(),
                    existing,
                    requested: initial_tokens,
                });
            }
            return Ok(id);
        }
        let id = PlaceId(self.places.len());
        self.places.push(Place {
            name: name.to_string(),
            initial_tokens,
        });
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn place_id(&self, name: &str) -> Option<PlaceId> {
        self.by_name.get(name).copied()
    }

    pub fn gate(
        &mut self,
        name: &str,
        predicate: impl Fn(&Marking) -> bool + Send + Sync + 'static,
    ) -> Result<GateId, SanError> {
        if self.gate_names.contains_key(name) {
            return Err(SanError::DuplicateGate(name.to_string()));
        }
        let id = GateId(self.gates.len());
        self.gates.push(InputGate {
            name: name.to_string(),
            predicate: Arc::new(predicate),
        });
        self.gate_names.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn gate_id(&self, name: &str) -> Option<GateId> {
        self.gate_names.get(name).copied()
    }

    pub fn activity(&mut self, spec: ActivitySpec<T>) -> Result<ActivityId, SanError> {
        if spec.cases.is_empty() {
            return Err(SanError::NoCases(spec.name));
        }
        let id = ActivityId(self.activities.len());
        self.activities.push(Activity {
            name: spec.name,
            timing: spec.timing,
            inputs: spec.inputs,
            gates: spec.gates,
            cases: spec.cases,
        });
        Ok(id)
    }

    pub(crate) fn push_activity(&mut self, activity: Activity<T>) -> ActivityId {
        self.activities.push(activity);
        ActivityId(self.activities.len() - 1)
    }

    pub fn build(self) -> SanModel<T> {
        SanModel {
            name: self.name,
            places: self.places,
            gates: self.gates,
            activities: self.activities,
            token_cap: self.token_cap,
        }
    }
}

/// Declarative description of one activity.
#[derive(Clone, Debug)]
pub struct ActivitySpec<T> {
    name: String,
    timing: Timing<T>,
    inputs: Vec<(PlaceId, u32)>,
    gates: Vec<GateId>,
    cases: Vec<Case<T>>,
}

impl<T: Scalar> ActivitySpec<T> {
    pub fn new(name: impl Into<String>, timing: Timing<T>) -> Self {
        ActivitySpec {
            name: name.into(),
            timing,
            inputs: Vec::new(),
            gates: Vec::new(),
            cases: Vec::new(),
        }
    }

    pub fn exponential(name: impl Into<String>, rate: T) -> Self {
        Self::new(name, Timing::Exponential(Value::Const(rate)))
    }

    pub fn exponential_fn(
        name: impl Into<String>,
        rate: impl Fn(&Marking) -> T + Send + Sync + 'static,
    ) -> Self {
        Self::new(name, Timing::Exponential(Value::from_fn(rate)))
    }

    pub fn deterministic(name: impl Into<String>, delay: Delay<T>) -> Self {
        Self::new(name, Timing::Deterministic(delay))
    }

    pub fn instantaneous(name: impl Into<String>, priority: i32) -> Self {
        Self::new(name, Timing::Instantaneous { priority })
    }

    pub fn input(mut self, place: PlaceId, tokens: u32) -> Self {
        self.inputs.push((place, tokens));
        self
    }

    pub fn gate(mut self, gate: GateId) -> Self {
        self.gates.push(gate);
        self
    }

    pub fn case(mut self, probability: Value<T>, actions: Vec<OutputAction>) -> Self {
        self.cases.push(Case {
            probability,
            actions,
        });
        self
    }

    /// Single case taken with probability one.
    pub fn output(self, actions: Vec<OutputAction>) -> Self {
        self.case(Value::Const(T::one()), actions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn places_are_shared_by_name() {
        let mut b = SanBuilder::<f64>::new("m");
        let a = b.place("A", 1).unwrap();
        assert_eq!(b.place("A", 1).unwrap(), a);
        assert!(matches!(
            b.place("A", 2),
            Err(SanError::PlaceCollision { .. })
        ));
    }

    #[test]
    fn activity_requires_a_case() {
        let mut b = SanBuilder::<f64>::new("m");
        let err = b.activity(ActivitySpec::exponential("t", 1.0)).unwrap_err();
        assert_eq!(err, SanError::NoCases("t".into()));
    }
}
