use proptest::prelude::*;
use raftsan::san::{
    ActivityId, ActivitySpec, Marking, OutputAction, SanBuilder, SanError, SanModel, Value,
};

/// Three places circulating tokens through mixed input arcs, gates and
/// probabilistic cases.
fn circulating() -> SanModel<f64> {
    let mut b = SanBuilder::new("circ");
    let a = b.place("a", 2).unwrap();
    let c = b.place("c", 0).unwrap();
    let d = b.place("d", 0).unwrap();
    let small = b.gate("dSmall", move |m| m.get(d) < 3).unwrap();
    b.activity(
        ActivitySpec::exponential("ac", 1.0)
            .input(a, 1)
            .case(Value::Const(0.3), vec![OutputAction::Add(c, 1)])
            .case(Value::Const(0.7), vec![OutputAction::Add(d, 1)]),
    )
    .unwrap();
    b.activity(
        ActivitySpec::exponential("cd", 2.0)
            .input(c, 2)
            .gate(small)
            .output(vec![OutputAction::Add(d, 2)]),
    )
    .unwrap();
    b.activity(
        ActivitySpec::exponential("da", 0.5)
            .input(d, 1)
            .output(vec![OutputAction::Add(a, 1)]),
    )
    .unwrap();
    b.activity(
        ActivitySpec::instantaneous("drain", 1)
            .input(d, 4)
            .output(vec![OutputAction::Add(a, 4)]),
    )
    .unwrap();
    b.build()
}

proptest! {
    #[test]
    fn firing_never_underflows_and_is_deterministic(
        tokens in prop::collection::vec(0u32..6, 3),
        act in 0usize..4,
        case in 0usize..2,
    ) {
        let model = circulating();
        let m = Marking::new(tokens);
        let id = ActivityId(act);
        let cases = model.activities()[act].cases.len();
        let enabled = model.is_enabled(id, &m).unwrap();
        match model.fire(&m, id, case) {
            Ok(next) => {
                prop_assert!(enabled && case < cases);
                prop_assert_eq!(model.fire(&m, id, case).unwrap(), next.clone());
                let before: u32 = m.tokens().iter().sum();
                let after: u32 = next.tokens().iter().sum();
                prop_assert_eq!(before, after);
            }
            Err(SanError::NotEnabled { .. }) => prop_assert!(!enabled),
            Err(SanError::CaseOutOfRange { .. }) => prop_assert!(case >= cases),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn adding_tokens_to_inputs_keeps_ungated_activities_enabled(
        tokens in prop::collection::vec(0u32..6, 3),
        extra in prop::collection::vec(0u32..3, 3),
    ) {
        let model = circulating();
        let m = Marking::new(tokens.clone());
        let more = Marking::new(tokens.iter().zip(&extra).map(|(a, b)| a + b).collect());
        for act in [0usize, 2, 3] {
            if model.is_enabled(ActivityId(act), &m).unwrap() {
                prop_assert!(model.is_enabled(ActivityId(act), &more).unwrap());
            }
        }
    }

    #[test]
    fn case_probabilities_form_a_distribution(tokens in prop::collection::vec(0u32..6, 3)) {
        let model = circulating();
        let m = Marking::new(tokens);
        for act in 0..model.activities().len() {
            let p = model.case_probabilities(ActivityId(act), &m).unwrap();
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn taking_more_than_present_is_an_error(held in 0u32..5, want in 0u32..8) {
        let mut m = Marking::new(vec![held]);
        let r = m.take(raftsan::san::PlaceId(0), want);
        prop_assert_eq!(r.is_ok(), want <= held);
        if r.is_err() {
            prop_assert_eq!(m.tokens(), &[held]);
        }
    }
}
