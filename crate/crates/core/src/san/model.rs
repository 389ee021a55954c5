use std::fmt;
use std::sync::Arc;

use super::{ActivityId, GateId, Marking, PlaceId, SanError};
use crate::Scalar;

/// Pure function of a marking.
pub type MarkingFn<T> = Arc<dyn Fn(&Marking) -> T + Send + Sync>;
/// Input-gate predicate.
pub type Predicate = MarkingFn<bool>;
/// Output-gate transformation, applied in place to a copy of the marking.
pub type GateFn = Arc<dyn Fn(&mut Marking) -> Result<(), SanError> + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Place {
    pub name: String,
    pub initial_tokens: u32,
}

/// A constant or marking-dependent quantity.
#[derive(Clone)]
pub enum Value<T> {
    Const(T),
    Marking(MarkingFn<T>),
}

impl<T: Copy> Value<T> {
    pub fn from_fn(f: impl Fn(&Marking) -> T + Send + Sync + 'static) -> Self {
        Value::Marking(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, m: &Marking) -> T {
        match self {
            Value::Const(v) => *v,
            Value::Marking(f) => f(m),
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Value::Const(_))
    }
}

impl<T: fmt::Debug> fmt::Debug for Value<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Const(v) => write!(f, "Const({v:?})"),
            Value::Marking(_) => f.write_str("Marking(<fn>)"),
        }
    }
}

/// Delay of a deterministic activity.
///
/// `Latched` splits the marking dependence into a key computed when the
/// delay starts and a delay looked up from that key. Erlang expansion stores
/// the key in an auxiliary place so the delay stays fixed while in flight.
#[derive(Clone)]
pub enum Delay<T> {
    Fixed(T),
    MarkingDependent(MarkingFn<T>),
    Latched {
        key: MarkingFn<u32>,
        delay: Arc<dyn Fn(u32) -> T + Send + Sync>,
    },
}

impl<T: Copy> Delay<T> {
    pub fn latched(
        key: impl Fn(&Marking) -> u32 + Send + Sync + 'static,
        delay: impl Fn(u32) -> T + Send + Sync + 'static,
    ) -> Self {
        Delay::Latched {
            key: Arc::new(key),
            delay: Arc::new(delay),
        }
    }

    /// Delay that would be sampled if the activity started in `m`.
    pub fn eval(&self, m: &Marking) -> T {
        match self {
            Delay::Fixed(d) => *d,
            Delay::MarkingDependent(f) => f(m),
            Delay::Latched { key, delay } => delay(key(m)),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for Delay<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delay::Fixed(d) => write!(f, "Fixed({d:?})"),
            Delay::MarkingDependent(_) => f.write_str("MarkingDependent(<fn>)"),
            Delay::Latched { .. } => f.write_str("Latched(<fn>)"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Timing<T> {
    /// Exponentially distributed firing time with the given rate.
    Exponential(Value<T>),
    /// Fixed firing delay.
    Deterministic(Delay<T>),
    /// Fires in zero time. Among several enabled instantaneous activities
    /// the highest priority wins, ties going to the earlier declaration.
    Instantaneous { priority: i32 },
}

impl<T> Timing<T> {
    pub fn is_instantaneous(&self) -> bool {
        matches!(self, Timing::Instantaneous { .. })
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Timing::Deterministic(_))
    }
}

#[derive(Clone)]
pub enum OutputAction {
    Add(PlaceId, u32),
    Take(PlaceId, u32),
    Set(PlaceId, u32),
    Gate { name: String, apply: GateFn },
}

impl OutputAction {
    pub fn gate(
        name: impl Into<String>,
        apply: impl Fn(&mut Marking) -> Result<(), SanError> + Send + Sync + 'static,
    ) -> Self {
        OutputAction::Gate {
            name: name.into(),
            apply: Arc::new(apply),
        }
    }

    pub fn apply(&self, m: &mut Marking) -> Result<(), SanError> {
        match self {
            OutputAction::Add(p, n) => m.add(*p, *n),
            OutputAction::Take(p, n) => m.take(*p, *n),
            OutputAction::Set(p, n) => {
                if p.0 >= m.len() {
                    return Err(SanError::UnknownPlace(*p));
                }
                m.set(*p, *n);
                Ok(())
            }
            OutputAction::Gate { apply, .. } => apply(m),
        }
    }

    pub(crate) fn place(&self) -> Option<PlaceId> {
        match self {
            OutputAction::Add(p, _) | OutputAction::Take(p, _) | OutputAction::Set(p, _) => {
                Some(*p)
            }
            OutputAction::Gate { .. } => None,
        }
    }
}

impl fmt::Debug for OutputAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputAction::Add(p, n) => write!(f, "Add({p}, {n})"),
            OutputAction::Take(p, n) => write!(f, "Take({p}, {n})"),
            OutputAction::Set(p, n) => write!(f, "Set({p}, {n})"),
            OutputAction::Gate { name, .. } => write!(f, "Gate({name})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Case<T> {
    pub probability: Value<T>,
    pub actions: Vec<OutputAction>,
}

#[derive(Clone)]
pub struct InputGate {
    pub name: String,
    pub predicate: Predicate,
}

impl fmt::Debug for InputGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "InputGate({})", self.name)
    }
}

#[derive(Clone, Debug)]
pub struct Activity<T> {
    pub name: String,
    pub timing: Timing<T>,
    /// Places and token counts consumed on firing.
    pub inputs: Vec<(PlaceId, u32)>,
    pub gates: Vec<GateId>,
    pub cases: Vec<Case<T>>,
}

/// Structural SAN: places, gates and activities.
#[derive(Clone, Debug)]
pub struct SanModel<T> {
    pub(crate) name: String,
    pub(crate) places: Vec<Place>,
    pub(crate) gates: Vec<InputGate>,
    pub(crate) activities: Vec<Activity<T>>,
    pub(crate) token_cap: u32,
}

impl<T: Scalar> SanModel<T> {
    /// Assembles a model from parts without checking references; run
    /// [`SanModel::validate`] before analysis.
    pub fn from_parts(
        name: impl Into<String>,
        places: Vec<Place>,
        gates: Vec<InputGate>,
        activities: Vec<Activity<T>>,
        token_cap: u32,
    ) -> Self {
        SanModel {
            name: name.into(),
            places,
            gates,
            activities,
            token_cap,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn places(&self) -> &[Place] {
        &self.places
    }

    pub fn gates(&self) -> &[InputGate] {
        &self.gates
    }

    pub fn activities(&self) -> &[Activity<T>] {
        &self.activities
    }

    pub fn token_cap(&self) -> u32 {
        self.token_cap
    }

    pub fn with_token_cap(mut self, cap: u32) -> Self {
        self.token_cap = cap;
        self
    }

    pub fn place_id(&self, name: &str) -> Option<PlaceId> {
        self.places.iter().position(|p| p.name == name).map(PlaceId)
    }

    pub fn activity_id(&self, name: &str) -> Option<ActivityId> {
        self.activities
            .iter()
            .position(|a| a.name == name)
            .map(ActivityId)
    }

    pub fn activity(&self, id: ActivityId) -> Result<&Activity<T>, SanError> {
        self.activities
            .get(id.0)
            .ok_or(SanError::UnknownActivity(id))
    }

    pub fn initial_marking(&self) -> Marking {
        Marking::new(self.places.iter().map(|p| p.initial_tokens).collect())
    }

    pub fn has_deterministic(&self) -> bool {
        self.activities.iter().any(|a| a.timing.is_deterministic())
    }

    fn check_shape(&self, m: &Marking) -> Result<(), SanError> {
        if m.len() != self.places.len() {
            return Err(SanError::MarkingShape {
                expected: self.places.len(),
                found: m.len(),
            });
        }
        Ok(())
    }

    /// Whether `activity` may fire in `m`: every input place holds enough
    /// tokens and every attached gate predicate holds.
    pub fn is_enabled(&self, id: ActivityId, m: &Marking) -> Result<bool, SanError> {
        let act = self.activity(id)?;
        for &(p, n) in &act.inputs {
            if p.0 >= m.len() {
                return Err(SanError::UnknownPlace(p));
            }
            if m.get(p) < n {
                return Ok(false);
            }
        }
        for &g in &act.gates {
            let gate = self.gates.get(g.0).ok_or(SanError::UnknownGate(g))?;
            if !(gate.predicate)(m) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn enabled_activities(&self, m: &Marking) -> Result<Vec<ActivityId>, SanError> {
        self.check_shape(m)?;
        let mut out = Vec::new();
        for i in 0..self.activities.len() {
            if self.is_enabled(ActivityId(i), m)? {
                out.push(ActivityId(i));
            }
        }
        Ok(out)
    }

    /// The instantaneous activity that fires next in `m`, if any.
    pub fn instantaneous_choice(&self, m: &Marking) -> Result<Option<ActivityId>, SanError> {
        let mut best: Option<(i32, ActivityId)> = None;
        for (i, act) in self.activities.iter().enumerate() {
            if let Timing::Instantaneous { priority } = act.timing {
                if best.is_some_and(|(p, _)| p >= priority) {
                    continue;
                }
                if self.is_enabled(ActivityId(i), m)? {
                    best = Some((priority, ActivityId(i)));
                }
            }
        }
        Ok(best.map(|(_, id)| id))
    }

    pub fn is_vanishing(&self, m: &Marking) -> Result<bool, SanError> {
        Ok(self.instantaneous_choice(m)?.is_some())
    }

    /// Case probabilities of `id` evaluated in `m`.
    pub fn case_probabilities(&self, id: ActivityId, m: &Marking) -> Result<Vec<T>, SanError> {
        Ok(self
            .activity(id)?
            .cases
            .iter()
            .map(|c| c.probability.eval(m))
            .collect())
    }

    /// Fires `id` with the given case, returning the successor marking.
    pub fn fire(&self, m: &Marking, id: ActivityId, case: usize) -> Result<Marking, SanError> {
        self.check_shape(m)?;
        let act = self.activity(id)?;
        if case >= act.cases.len() {
            return Err(SanError::CaseOutOfRange {
                activity: act.name.clone(),
                case,
                cases: act.cases.len(),
            });
        }
        if !self.is_enabled(id, m)? {
            return Err(SanError::NotEnabled {
                activity: act.name.clone(),
            });
        }
        if act.cases[case].probability.eval(m) <= T::zero() {
            return Err(SanError::ZeroProbabilityCase {
                activity: act.name.clone(),
                case,
            });
        }
        self.fire_unchecked(m, id, case)
    }

    /// Fires without re-checking enabling or case probability. The caller
    /// guarantees both.
    pub(crate) fn fire_unchecked(
        &self,
        m: &Marking,
        id: ActivityId,
        case: usize,
    ) -> Result<Marking, SanError> {
        let act = &self.activities[id.0];
        let mut next = m.clone();
        for &(p, n) in &act.inputs {
            next.take(p, n)?;
        }
        for action in &act.cases[case].actions {
            action.apply(&mut next)?;
        }
        if let Some(p) = next.tokens().iter().position(|&t| t > self.token_cap) {
            return Err(SanError::TokenOverflow {
                place: PlaceId(p),
                cap: self.token_cap,
            });
        }
        Ok(next)
    }

    /// Renders a marking as `Name=count` pairs for the non-empty places.
    pub fn describe(&self, m: &Marking) -> String {
        let parts: Vec<String> = self
            .places
            .iter()
            .zip(m.tokens())
            .filter(|(_, &t)| t > 0)
            .map(|(p, t)| format!("{}={}", p.name, t))
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}
