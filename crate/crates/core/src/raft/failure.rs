use super::formulas::{failure_role_probabilities, lagging_threshold, merged_failure_rate};
use super::{ClusterConfig, ClusterPlaces, InjectionMix, Mode};
use crate::san::{ActivitySpec, Marking, OutputAction, PlaceId, SanBuilder, SanError, Value};
use crate::Scalar;

/// Adds failure arrivals and the role selection of the failed node.
///
/// Response mode injects `N_F` failures at rate `N_F / window` with the
/// configured type mix. Availability mode uses the long-term per-node
/// hardware and software failure rates instead, while fewer than `N_F`
/// nodes are down.
pub fn add_failure_model<T: Scalar>(
    b: &mut SanBuilder<T>,
    cfg: &ClusterConfig,
    s: &ClusterPlaces,
) -> Result<PlaceId, SanError> {
    let s = *s;
    let injecting = cfg.mode == Mode::Response && cfg.injection != InjectionMix::None;
    let bursty = b.place("BurstyFailureTokens", if injecting { cfg.n_f } else { 0 })?;
    let counting = cfg.mode == Mode::Response;
    let counter = s.counter_failures;
    let cap = lagging_threshold(cfg.c);
    let failure_actions = move |down: PlaceId, name: &str| {
        let mut actions = vec![
            OutputAction::Add(down, 1),
            OutputAction::Add(s.node_down_select, 1),
        ];
        if counting {
            actions.push(OutputAction::gate(format!("{name}.count"), move |m| {
                m.set(counter, (m.get(counter) + 1).min(cap));
                Ok(())
            }));
        }
        actions
    };

    if injecting {
        let any_live = b.gate("AnyNodeLive", move |m| s.live(m) > 0)?;
        let (hw, pr, bu) = cfg.injection.probabilities();
        let mut spec = ActivitySpec::exponential("selectFailureType", T::lit(cfg.lambda_f_si()))
            .input(bursty, 1)
            .gate(any_live);
        for (p, down, name) in [
            (hw, s.down_hardware, "Inj_Hw_F"),
            (pr, s.down_process, "Inj_Process_F"),
            (bu, s.down_bundle, "Inj_Bundle_F"),
        ] {
            if p > 0.0 {
                spec = spec.case(Value::Const(T::lit(p)), failure_actions(down, name));
            }
        }
        b.activity(spec)?;
    }

    if cfg.mode == Mode::Availability {
        let limit = cfg.n_f;
        let eligible = b.gate("LongTermFailureEligible", move |m| {
            s.live(m) > 0 && s.downs(m) < limit
        })?;
        let per_node =
            |rate: f64| move |m: &Marking| T::lit(rate) * T::from_u32(s.live(m)).unwrap();
        let hw = merged_failure_rate(cfg.lambda_f_h(), cfg.lambda_d());
        for (name, rate, down) in [
            ("Hw_F", hw, s.down_hardware),
            ("Process_F", cfg.lambda_f_s(), s.down_process),
            ("Bundle_F", cfg.lambda_f_s(), s.down_bundle),
        ] {
            b.activity(
                ActivitySpec::exponential_fn(name, per_node(rate))
                    .gate(eligible)
                    .output(failure_actions(down, name)),
            )?;
        }
    }

    let c = cfg.c;
    let role = move |k: usize| {
        Value::from_fn(move |m: &Marking| {
            let (sf, mj, ldr) =
                failure_role_probabilities::<T>(c, m.get(s.followers_up), m.get(s.leader_up));
            [sf, mj, ldr][k]
        })
    };
    let rejoining_order = [
        s.announce_candidate,
        s.candidate_waiting,
        s.init_election_pool,
        s.announce_follower,
    ];
    b.activity(
        ActivitySpec::instantaneous("failureSelectRole", 100)
            .input(s.node_down_select, 1)
            .case(
                role(0),
                vec![
                    OutputAction::Take(s.followers_up, 1),
                    OutputAction::Take(s.nodes_up, 1),
                ],
            )
            .case(
                role(1),
                vec![OutputAction::gate("majorityFailure", move |m| {
                    if m.get(s.followers_up) > 0 {
                        m.take(s.followers_up, 1)?;
                        return m.take(s.nodes_up, 1);
                    }
                    for p in rejoining_order {
                        if m.get(p) > 0 {
                            return m.take(p, 1);
                        }
                    }
                    m.take(s.leader_up, 1)?;
                    m.take(s.nodes_up, 1)
                })],
            )
            .case(
                role(2),
                vec![
                    OutputAction::Take(s.leader_up, 1),
                    OutputAction::Take(s.nodes_up, 1),
                ],
            ),
    )?;
    Ok(bursty)
}
