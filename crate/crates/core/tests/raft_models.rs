use raftsan::raft::{
    build_response_time_model, compile, compose, failure_role_probabilities, ClusterConfig,
    InjectionMix, Mode,
};
use raftsan::san::Marking;
use raftsan::solver::SolverSettings;
use raftsan::state_space::{expand_erlang, generate, ExplorationLimits};

fn cfg(c: u32, n_f: u32, e_s: u32, mode: Mode, injection: InjectionMix) -> ClusterConfig {
    ClusterConfig {
        c,
        n_f,
        e_s,
        mode,
        injection,
        ..ClusterConfig::table2()
    }
}

fn tokens(model: &raftsan::SanModel64, m: &Marking, name: &str) -> u32 {
    m.get(
        model
            .place_id(name)
            .unwrap_or_else(|| panic!("no place {name}")),
    )
}

#[test]
fn every_reachable_marking_accounts_for_all_nodes() {
    let configs = [
        cfg(3, 1, 3, Mode::Response, InjectionMix::Mixed),
        cfg(3, 2, 2, Mode::Response, InjectionMix::Mixed),
        cfg(5, 3, 2, Mode::Response, InjectionMix::Bundle),
        cfg(3, 3, 3, Mode::Availability, InjectionMix::Mixed),
        ClusterConfig {
            watchdog: true,
            ..cfg(5, 5, 2, Mode::Availability, InjectionMix::Mixed)
        },
    ];
    for c in configs {
        let compiled = compile::<f64>(&c, ExplorationLimits::default()).unwrap();
        let model = &compiled.model;
        for m in compiled.ctmc.states() {
            let l = tokens(model, m, "LeaderUp");
            let f = tokens(model, m, "FollowersUp");
            let downs = tokens(model, m, "NodesDownHardware")
                + tokens(model, m, "NodesDownProcess")
                + tokens(model, m, "NodesDownBundle");
            let rejoining = tokens(model, m, "InitElectionPool")
                + tokens(model, m, "AnnounceCandidateRole")
                + tokens(model, m, "CandidateWaiting")
                + tokens(model, m, "AnnounceFollowerRole");
            assert!(l <= 1, "{}", model.describe(m));
            assert_eq!(l + f + downs + rejoining, c.c, "{}", model.describe(m));
            assert_eq!(tokens(model, m, "NodesUp"), l + f, "{}", model.describe(m));
            assert_eq!(tokens(model, m, "NodeDownSelectFailure"), 0);
            if c.mode == Mode::Availability {
                assert!(downs <= c.n_f);
            }
        }
    }
}

#[test]
fn golden_state_count_for_three_nodes() {
    let c = cfg(3, 1, 5, Mode::Response, InjectionMix::Mixed);
    let compiled = compile::<f64>(&c, ExplorationLimits::default()).unwrap();
    assert_eq!(compiled.stats.states, 1045);
    assert_eq!(compiled.stats.transitions, 2622);
}

#[test]
fn single_failure_structure_is_independent_of_cluster_size() {
    let count = |c| {
        compile::<f64>(
            &cfg(c, 1, 5, Mode::Response, InjectionMix::Mixed),
            ExplorationLimits::default(),
        )
        .unwrap()
        .stats
        .states
    };
    assert_eq!(count(3), count(5));
    assert_eq!(count(5), count(7));
}

#[test]
fn failure_free_model_matches_the_event_path_alone() {
    let c = cfg(3, 1, 4, Mode::Response, InjectionMix::None);
    let times: Vec<f64> = (0..=100).map(f64::from).collect();
    let settings = SolverSettings::default();
    let full = compile::<f64>(&c, ExplorationLimits::default())
        .unwrap()
        .response_cdf(&times, &settings)
        .unwrap();

    let path = expand_erlang(&build_response_time_model::<f64>(&c).unwrap(), c.e_s).unwrap();
    let ctmc = generate(&path, ExplorationLimits::default()).unwrap();
    let reward = raftsan::raft::sequence_end_reward(&path);
    let alone = raftsan::solver::transient_sweep_rewards(
        &ctmc,
        &times,
        &[reward.state_values(&ctmc)],
        &settings,
    )
    .unwrap();
    for ((_, a), b) in full.iter().zip(&alone[0]) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn role_selection_follows_the_closed_form() {
    let c = cfg(5, 3, 1, Mode::Response, InjectionMix::Mixed);
    let model = compose::<f64>(&c).unwrap();
    let select = model.activity_id("failureSelectRole").unwrap();
    let place = |n: &str| model.place_id(n).unwrap();
    for l in 0..=1u32 {
        for f in 0..=4u32 {
            let mut m = model.initial_marking();
            m.set(place("LeaderUp"), l);
            m.set(place("FollowersUp"), f);
            m.set(place("NodesUp"), l + f);
            m.set(place("NodesDownBundle"), 5 - l - f);
            m.set(place("NodeDownSelectFailure"), 1);
            let probs = model.case_probabilities(select, &m).unwrap();
            let (sf, mj, ldr) = failure_role_probabilities::<f64>(5, f, l);
            assert_eq!(probs, vec![sf, mj, ldr], "L={l} F={f}");
        }
    }
}

#[test]
fn cdf_is_nondecreasing_and_bounded() {
    let c = cfg(3, 2, 3, Mode::Response, InjectionMix::Mixed);
    let times: Vec<f64> = (0..=1000).step_by(5).map(f64::from).collect();
    let cdf = compile::<f64>(&c, ExplorationLimits::default())
        .unwrap()
        .response_cdf(&times, &SolverSettings::default())
        .unwrap();
    assert_eq!(cdf[0].1, 0.0);
    for w in cdf.windows(2) {
        assert!(w[1].1 >= w[0].1 - 1e-9, "{:?}", w);
    }
    assert!(cdf.iter().all(|&(_, p)| (0.0..=1.0 + 1e-9).contains(&p)));
}

#[test]
fn more_erlang_stages_tighten_the_response_distribution() {
    let settings = SolverSettings::default();
    let at = |e_s| {
        compile::<f64>(
            &cfg(3, 1, e_s, Mode::Response, InjectionMix::None),
            ExplorationLimits::default(),
        )
        .unwrap()
        .response_cdf(&[30.0, 40.0], &settings)
        .unwrap()
    };
    let (coarse, fine) = (at(2), at(10));
    assert!(fine[0].1 < coarse[0].1);
    assert!(fine[1].1 > coarse[1].1);
}
