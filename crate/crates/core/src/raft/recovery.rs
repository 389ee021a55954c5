use super::formulas::majority_followers;
use super::response::clamped_majority_delay;
use super::{ClusterConfig, ClusterPlaces};
use crate::san::{ActivitySpec, Delay, Marking, OutputAction, SanBuilder, SanError, Value};
use crate::Scalar;

/// Adds repair of failed nodes and their re-admission through the election
/// pool, plus leader election after a leader failure.
pub fn add_recovery_model<T: Scalar>(
    b: &mut SanBuilder<T>,
    cfg: &ClusterConfig,
    s: &ClusterPlaces,
) -> Result<(), SanError> {
    let s = *s;
    let c = cfg.c;
    let t_m_best = cfg.t_m_best_ms;
    let majority = majority_followers(c) + 1;
    let scaled =
        |rate: f64, place| move |m: &Marking| T::lit(rate) * T::from_u32(m.get(place)).unwrap();

    for (name, rate, down) in [
        ("Hw_Repair", cfg.lambda_r_h(), s.down_hardware),
        ("Process_Repair", cfg.process_repair_rate(), s.down_process),
        ("Bundle_Repair", cfg.bundle_repair_rate(), s.down_bundle),
    ] {
        b.activity(
            ActivitySpec::exponential_fn(name, scaled(rate, down))
                .input(down, 1)
                .output(vec![OutputAction::Add(s.init_election_pool, 1)]),
        )?;
    }

    let leader = s.leader_up;
    b.activity(
        ActivitySpec::exponential_fn(
            "followerTimeout",
            scaled(cfg.lambda_f(), s.init_election_pool),
        )
        .input(s.init_election_pool, 1)
        .case(
            Value::from_fn(move |m: &Marking| T::from_u32(m.get(leader).min(1)).unwrap()),
            vec![OutputAction::Add(s.announce_follower, 1)],
        )
        .case(
            Value::from_fn(move |m: &Marking| T::from_u32(1 - m.get(leader).min(1)).unwrap()),
            vec![OutputAction::Add(s.announce_candidate, 1)],
        ),
    )?;
    b.activity(
        ActivitySpec::instantaneous("setNewFollowerUp", 50)
            .input(s.announce_follower, 1)
            .output(vec![
                OutputAction::Add(s.followers_up, 1),
                OutputAction::Add(s.nodes_up, 1),
            ]),
    )?;

    let leaderless_quiet = b.gate("NoLeaderNoCandidate", move |m| {
        m.get(s.leader_up) == 0
            && m.get(s.announce_candidate) == 0
            && m.get(s.candidate_waiting) == 0
    })?;
    b.activity(
        ActivitySpec::exponential_fn(
            "followerElectionTimeout",
            scaled(cfg.lambda_f(), s.followers_up),
        )
        .input(s.followers_up, 1)
        .gate(leaderless_quiet)
        .output(vec![
            OutputAction::Take(s.nodes_up, 1),
            OutputAction::Add(s.announce_candidate, 1),
        ]),
    )?;

    let electable = b.gate("MajorityUpNoLeader", move |m| {
        m.get(s.leader_up) == 0 && s.live(m) >= majority
    })?;
    b.activity(
        ActivitySpec::deterministic(
            "electLeader",
            Delay::latched(
                move |m| s.live(m).saturating_sub(1),
                move |f| T::lit(2.0 * clamped_majority_delay(c, t_m_best, f)),
            ),
        )
        .input(s.announce_candidate, 1)
        .gate(electable)
        .output(vec![OutputAction::gate("setLeaderUp", move |m| {
            m.set(s.leader_up, 1);
            m.add(s.nodes_up, 1)
        })]),
    )?;

    let leader_known = b.gate("LeaderKnown", move |m| m.get(s.leader_up) == 1)?;
    b.activity(
        ActivitySpec::instantaneous("candidateDiscoversLeader", 50)
            .input(s.announce_candidate, 1)
            .gate(leader_known)
            .output(vec![OutputAction::Add(s.announce_follower, 1)]),
    )?;
    b.activity(
        ActivitySpec::instantaneous("waitingDiscoversLeader", 50)
            .input(s.candidate_waiting, 1)
            .gate(leader_known)
            .output(vec![OutputAction::Add(s.announce_follower, 1)]),
    )?;
    let no_majority = b.gate("MajorityDown", move |m| {
        m.get(s.leader_up) == 0 && s.live(m) < majority
    })?;
    b.activity(
        ActivitySpec::instantaneous("candidateNoMajority", 40)
            .input(s.announce_candidate, 1)
            .gate(no_majority)
            .output(vec![OutputAction::Add(s.candidate_waiting, 1)]),
    )?;
    b.activity(
        ActivitySpec::exponential_fn(
            "candidateTimeout",
            scaled(cfg.lambda_ca(), s.candidate_waiting),
        )
        .input(s.candidate_waiting, 1)
        .output(vec![OutputAction::Add(s.announce_candidate, 1)]),
    )?;
    Ok(())
}
