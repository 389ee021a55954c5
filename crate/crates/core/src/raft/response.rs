use super::formulas::{lagging_threshold, majority_followers};
use super::{ClusterConfig, ClusterPlaces, Mode};
use crate::san::{ActivitySpec, Delay, OutputAction, PlaceId, SanBuilder, SanError};
use crate::Scalar;

/// Places of the client event path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResponsePlaces {
    pub idle: PlaceId,
    pub client_submit: PlaceId,
    pub event_queued: PlaceId,
    pub event_at_leader: PlaceId,
    pub bring_up_to_date: PlaceId,
    pub replicated: PlaceId,
    pub majority_acked: PlaceId,
    pub commit_done: PlaceId,
    pub application_done: PlaceId,
    pub response_at_replica: PlaceId,
    pub sequence_end: PlaceId,
    pub timeout_pending: PlaceId,
}

/// `T_M` for a latched follower count, clamped to the defined range so the
/// value stays finite if it is ever evaluated outside its enabling gate.
pub(crate) fn clamped_majority_delay(c: u32, t_m_best: f64, f_up: u32) -> f64 {
    let f = f_up.max(majority_followers(c)).max(1);
    (c - 1) as f64 / f as f64 * t_m_best
}

/// Adds the event path: client to replica, replica to leader, replication
/// to the follower majority and back, commit, application processing and
/// the response to the client. Every inter-node transfer waits for the
/// leader and a follower majority; a failure of either while the leader is
/// processing sends the event through the client timeout back to the
/// leader queue.
pub fn add_response_model<T: Scalar>(
    b: &mut SanBuilder<T>,
    cfg: &ClusterConfig,
    shared: &ClusterPlaces,
) -> Result<ResponsePlaces, SanError> {
    let pending = u32::from(cfg.mode == Mode::Response);
    let p = ResponsePlaces {
        idle: b.place("IdleState", 1 - pending)?,
        client_submit: b.place("ClientSubmit", pending)?,
        event_queued: b.place("EventQueuedForLeader", 0)?,
        event_at_leader: b.place("EventAtLeader", 0)?,
        bring_up_to_date: b.place("BringFollowersUpToDate", 0)?,
        replicated: b.place("ReplicatedToMajority", 0)?,
        majority_acked: b.place("MajorityAcked", 0)?,
        commit_done: b.place("CommitDone", 0)?,
        application_done: b.place("ApplicationDone", 0)?,
        response_at_replica: b.place("ResponseAtReplica", 0)?,
        sequence_end: b.place("SequenceEnd", 0)?,
        timeout_pending: b.place("ClientTimeoutPending", 0)?,
    };
    let s = *shared;
    let lit = |x: f64| T::lit(x);
    let c = cfg.c;
    let t_m_best = cfg.t_m_best_ms;
    let fu = s.followers_up;

    let mut lamu = Vec::new();
    for k in 1..=5 {
        lamu.push(b.gate(&format!("LeaderAndMajorityUp{k}"), move |m| {
            s.leader_and_majority_up(m)
        })?);
    }
    let lost = b.gate("LeaderOrMajorityLost", move |m| {
        !s.leader_and_majority_up(m)
    })?;
    let (rep, bring) = (p.replicated, p.bring_up_to_date);
    let no_overlap = b.gate("DisableConcurrentUpdates", move |m| {
        m.get(rep) == 0 && m.get(bring) == 0
    })?;

    b.activity(
        ActivitySpec::deterministic("deliverToReplica", Delay::Fixed(lit(cfg.t_cr_ms)))
            .input(p.client_submit, 1)
            .output(vec![OutputAction::Add(p.event_queued, 1)]),
    )?;
    b.activity(
        ActivitySpec::deterministic("delayToLeader", Delay::Fixed(lit(cfg.t_r_ms)))
            .input(p.event_queued, 1)
            .gate(lamu[0])
            .output(vec![OutputAction::Add(p.event_at_leader, 1)]),
    )?;

    if cfg.r_m > 0 {
        let counter = s.counter_failures;
        let threshold = lagging_threshold(c);
        let lagging = b.gate("LaggingFollowerInMajority", move |m| {
            m.get(counter) >= threshold
        })?;
        b.activity(
            ActivitySpec::instantaneous("majorFollowerNotUpToDate", 20)
                .input(p.event_at_leader, 1)
                .gate(lagging)
                .output(vec![OutputAction::Add(p.bring_up_to_date, 1)]),
        )?;
        let rounds = 2.0 * cfg.r_m as f64;
        let at_leader = p.event_at_leader;
        b.activity(
            ActivitySpec::deterministic(
                "lateBringUpToDateNodes",
                Delay::latched(
                    move |m| m.get(fu),
                    move |f| lit(rounds * clamped_majority_delay(c, t_m_best, f)),
                ),
            )
            .input(p.bring_up_to_date, 1)
            .gate(lamu[1])
            .output(vec![OutputAction::gate("resetCounter", move |m| {
                m.set(counter, 0);
                m.add(at_leader, 1)
            })]),
        )?;
    }

    let t_m = move || {
        Delay::latched(
            move |m| m.get(fu),
            move |f| lit(clamped_majority_delay(c, t_m_best, f)),
        )
    };
    b.activity(
        ActivitySpec::deterministic("delayToMajorityFollowers", t_m())
            .input(p.event_at_leader, 1)
            .gate(lamu[2])
            .gate(no_overlap)
            .output(vec![OutputAction::Add(p.replicated, 1)]),
    )?;
    b.activity(
        ActivitySpec::deterministic("delayFromMajorityToLeader", t_m())
            .input(p.replicated, 1)
            .gate(lamu[3])
            .output(vec![OutputAction::Add(p.majority_acked, 1)]),
    )?;
    b.activity(
        ActivitySpec::deterministic("applyCommit", Delay::Fixed(lit(cfg.t_c_ms)))
            .input(p.majority_acked, 1)
            .output(vec![OutputAction::Add(p.commit_done, 1)]),
    )?;
    b.activity(
        ActivitySpec::exponential("applicationProcessing", lit(1.0 / cfg.t_a_ms))
            .input(p.commit_done, 1)
            .output(vec![OutputAction::Add(p.application_done, 1)]),
    )?;
    b.activity(
        ActivitySpec::deterministic("respondToReplica", Delay::Fixed(lit(cfg.t_r_ms)))
            .input(p.application_done, 1)
            .gate(lamu[4])
            .output(vec![OutputAction::Add(p.response_at_replica, 1)]),
    )?;
    b.activity(
        ActivitySpec::deterministic("respondToClient", Delay::Fixed(lit(cfg.t_cr_ms)))
            .input(p.response_at_replica, 1)
            .output(vec![OutputAction::Add(p.sequence_end, 1)]),
    )?;

    let handled = [
        p.event_at_leader,
        p.bring_up_to_date,
        p.replicated,
        p.majority_acked,
        p.commit_done,
        p.application_done,
    ];
    for (k, &place) in handled.iter().enumerate() {
        let pending = p.timeout_pending;
        b.activity(
            ActivitySpec::instantaneous(format!("CH{}", k + 1), 10)
                .input(place, 1)
                .gate(lost)
                .output(vec![OutputAction::gate(
                    format!("OGF{}", k + 1),
                    move |m| m.add(pending, 1),
                )]),
        )?;
    }
    b.activity(
        ActivitySpec::deterministic("clientTimeout", Delay::Fixed(lit(cfg.t_cl_ms)))
            .input(p.timeout_pending, 1)
            .output(vec![OutputAction::Add(p.event_queued, 1)]),
    )?;
    Ok(p)
}
