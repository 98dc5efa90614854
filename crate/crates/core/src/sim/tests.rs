use std::collections::BTreeMap;
use std::path::PathBuf;

use proptest::prelude::*;

use super::*;
use crate::games::{
    all_committed_profiles, play_rounds, AdaptiveGame, AdaptiveProfile, GameFile, GameSpec,
    LeaderAction, MemberAction, Payoff, Strategy as GameStrategy, UtilityTable,
};
use crate::ledger::{PlayerId, PoolName, Transaction, TxKind};

fn data(path: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(path)
}

fn scenario(name: &str) -> Scenario {
    Scenario::load(&data(&format!("scenarios/{name}"))).unwrap()
}

fn table(name: &str) -> UtilityTable {
    let text = std::fs::read_to_string(data(&format!("games/{name}"))).unwrap();
    match GameFile::from_json(&text).unwrap().spec().unwrap() {
        GameSpec::Single(t) | GameSpec::Multi { table: t, .. } => t,
        GameSpec::Adaptive(g) => g.table,
        GameSpec::TwoPool(_) => panic!("single-pool table expected"),
    }
}

/// A game-shaped scenario for `t`: leader is player 0, members 1..=n.
fn game_scenario(t: &UtilityTable) -> Scenario {
    let n = t.n();
    let mut players = vec![PlayerSpec {
        id: PlayerId(0),
        stake: t.leader_stake(),
    }];
    players.extend((0..n).map(|i| PlayerSpec {
        id: PlayerId(i as u32 + 1),
        stake: t.member_stake(i),
    }));
    let delegations = players
        .iter()
        .map(|p| DelegationSpec {
            author: p.id,
            pool: PoolName::from("incumbent"),
            amount: p.stake,
        })
        .collect();
    Scenario {
        version: SCENARIO_VERSION,
        name: None,
        players,
        pools: vec![PoolSpec {
            name: PoolName::from("incumbent"),
            operator: PlayerId(0),
            params: String::new(),
        }],
        delegations,
        utility: None,
        game: Some(GameBinding {
            pool: PoolName::from("incumbent"),
            members: (1..=n as u32).map(PlayerId).collect(),
            table: t.clone(),
            challenger: PoolName::from("rebels"),
        }),
        production: Production::AuditedLeader,
        audits: true,
        others_block: false,
        byzantine_threshold: None,
        challenger_params: String::new(),
        pending: Vec::new(),
        workload: None,
        pending_ttl: None,
        policies: Policies::default(),
    }
}

fn adaptive_policies(p: &AdaptiveProfile) -> Policies {
    let mut pol = Policies::default();
    pol.operators.insert(
        PlayerId(0),
        OperatorPolicy::RationalIncluder {
            strategy: Some(p.leader.clone()),
        },
    );
    for (i, s) in p.members.iter().enumerate() {
        pol.members
            .insert(PlayerId(i as u32 + 1), MemberPolicy::Strategy(s.clone()));
    }
    pol
}

#[test]
fn zero_rounds_is_an_empty_trace() {
    let s = scenario("cartel_audited.json");
    let t = run_rounds(&s, &s.policies, 0, 7).unwrap();
    assert!(t.rounds.is_empty());
    assert!(t.cumulative.values().all(|v| *v == 0.0));
    assert_eq!(trace_csv(&t).lines().count(), 1);
}

#[test]
fn censoring_cartel_keeps_restoring_the_incumbents() {
    let s = scenario("cartel_audited.json");
    let t = run_rounds(&s, &s.policies, 40, 11).unwrap();
    let stake = s.genesis().unwrap().total_stake();
    for rec in &t.rounds {
        let p = rec.audited_pool.as_ref().expect("an audit every round");
        let snap = rec.pools.iter().find(|x| x.name == *p).unwrap();
        // Dissolved, re-registered and re-delegated within the round.
        assert!(snap.live);
        assert_eq!(snap.delegated, 250);
        assert!(rec.new_pools.is_empty());
        assert_eq!(rec.total_stake, stake);
        assert!(rec.events.iter().all(|e| e.decision != Decision::Rejected));
    }
    // The competitor's registration is visible and censored every round.
    let reg = t.find(&s.pending[0]).unwrap();
    assert_eq!(t.applied_round(reg), None);
    assert!(t.rounds.iter().all(|r| r
        .events
        .iter()
        .any(|e| e.tx_id == reg && e.decision == Decision::Censored)));
}

#[test]
fn g2_theorem4_profile_plays_out_as_a_revolution() {
    let s = scenario("g2_mechanism.json");
    let t = run_rounds(&s, &s.policies, 2, 1).unwrap();
    let r0 = &t.rounds[0];
    let r1 = &t.rounds[1];
    // Round 1: member 1's compound is censored, the rest capitulate.
    let compound: Vec<&TxEvent> = r0
        .events
        .iter()
        .filter(|e| e.kind == TxKind::Compound)
        .collect();
    assert_eq!(compound.len(), 1);
    assert_eq!(compound[0].author, PlayerId(1));
    assert_eq!(compound[0].decision, Decision::Censored);
    assert!(r0.new_pools.is_empty());
    // Round 2: the signal fires and the new pool is registered.
    assert_eq!(r1.new_pools, vec![PoolName::from("rebels")]);
    let g0 = r0.game.as_ref().unwrap();
    let g1 = r1.game.as_ref().unwrap();
    assert_eq!(g0.leader, LeaderAction::Censor);
    assert_eq!(g1.leader, LeaderAction::NotCensor);
    assert!(g1.revolution);
    let u = |r: &RoundRecord, p: u32| r.utilities[&PlayerId(p)];
    assert_eq!((u(r0, 0), u(r0, 1), u(r0, 2)), (8.0, 0.0, 2.5));
    assert_eq!((u(r1, 0), u(r1, 1), u(r1, 3)), (7.0, 7.0, 7.0));
    assert_eq!(t.cumulative[&PlayerId(0)], 15.0);
}

fn assert_layers_agree(t: &UtilityTable, game: &AdaptiveGame, p: &AdaptiveProfile) {
    let s = game_scenario(t);
    let trace = run_rounds(&s, &adaptive_policies(p), game.rounds as u64, 3).unwrap();
    let (realized, _) = game.realize(p);
    let expected = play_rounds(t, &realized.rounds);
    for (k, (rec, exp)) in trace.rounds.iter().zip(&expected).enumerate() {
        let g = rec.game.as_ref().unwrap();
        let mut want = exp.members.clone();
        want.push(exp.leader);
        assert_eq!(g.payoffs, want, "round {k} of {p}");
        assert_eq!(g.members, realized.rounds[k].members, "round {k} of {p}");
        assert_eq!(g.leader, realized.rounds[k].leader, "round {k} of {p}");
        assert_eq!(g.revolution, exp.revolution, "round {k} of {p}");
    }
}

#[test]
fn g2_playback_matches_the_games_module_for_every_profile() {
    let t = table("g2.json");
    let game = AdaptiveGame::two_round(t.clone());
    for p in game.all_profiles() {
        assert_layers_agree(&t, &game, &p);
    }
}

#[test]
fn four_round_playback_matches_on_signal_profiles() {
    let t = table("g2_k4.json");
    let game = AdaptiveGame::new(t.clone(), 4, 1).unwrap();
    let profiles = game.all_profiles();
    for p in profiles.iter().step_by(7) {
        assert_layers_agree(&t, &game, p);
    }
}

#[test]
fn committed_scripts_match_multi_round_play() {
    let t = table("g1.json");
    let s = game_scenario(&t);
    for prof in all_committed_profiles(t.n(), 3) {
        let mut pol = Policies::default();
        pol.operators.insert(
            PlayerId(0),
            OperatorPolicy::Scripted {
                actions: prof.leader_actions().collect(),
            },
        );
        for i in 0..t.n() {
            pol.members.insert(
                PlayerId(i as u32 + 1),
                MemberPolicy::Script(prof.member_actions(i).collect()),
            );
        }
        let trace = run_rounds(&s, &pol, 3, 5).unwrap();
        let expected = play_rounds(&t, &prof.rounds);
        for (rec, exp) in trace.rounds.iter().zip(&expected) {
            let mut want = exp.members.clone();
            want.push(exp.leader);
            assert_eq!(rec.game.as_ref().unwrap().payoffs, want, "{prof}");
        }
    }
}

#[test]
fn game_stakes_must_match_the_table() {
    let t = table("g2.json");
    let mut s = game_scenario(&t);
    assert!(s.validate().is_ok());
    s.players[1].stake = 11;
    assert!(matches!(s.validate(), Err(SimError::Scenario(_))));
}

#[test]
fn runs_are_deterministic_and_seed_dependent() {
    let s = scenario("cartel_audited.json");
    let a = run_rounds(&s, &s.policies, 50, 7).unwrap();
    let b = run_rounds(&s, &s.policies, 50, 7).unwrap();
    let c = run_rounds(&s, &s.policies, 50, 8).unwrap();
    assert_eq!(trace_csv(&a), trace_csv(&b));
    assert_eq!(pools_csv(&a), pools_csv(&b));
    assert_eq!(summary(&a).to_json(), summary(&b).to_json());
    assert_ne!(audits_csv(&a), audits_csv(&c));
}

#[test]
fn csv_header_is_the_documented_one() {
    let s = scenario("g2_mechanism.json");
    let t = run_rounds(&s, &s.policies, 2, 1).unwrap();
    let csv = trace_csv(&t);
    assert_eq!(
        csv.lines().next().unwrap(),
        "round,rho,audited_pool,producer,tx_id,tx_kind,decision,u_0,u_1,u_2,u_3"
    );
}

#[test]
fn cumulative_is_the_sum_of_rounds() {
    let s = scenario("theorem1.json");
    let t = run_rounds(&s, &s.policies, 25, 4).unwrap();
    for (p, total) in &t.cumulative {
        let sum: f64 = t.rounds.iter().map(|r| r.utilities[p]).sum();
        assert!((sum - total).abs() < 1e-9);
    }
    // Applied transactions were submitted and decided by the producer.
    for rec in &t.rounds {
        for e in rec.applied() {
            assert!(t.submissions[&e.tx_id].round <= rec.round);
        }
    }
}

#[test]
fn policy_for_a_non_operator_is_a_mismatch() {
    let s = scenario("cartel_static.json");
    let mut pol = s.policies.clone();
    pol.operators.insert(
        PlayerId(5),
        OperatorPolicy::RationalIncluder { strategy: None },
    );
    assert!(matches!(
        run_rounds(&s, &pol, 1, 0),
        Err(SimError::Policy(_))
    ));
}

#[test]
fn unknown_scenario_version_is_rejected() {
    let text = std::fs::read_to_string(data("scenarios/g2_mechanism.json"))
        .unwrap()
        .replacen("\"version\": 1", "\"version\": 2", 1);
    assert!(matches!(
        Scenario::from_json(&text),
        Err(SimError::Scenario(_))
    ));
}

fn manual_trace(applied_at: Option<u64>) -> (SimTrace, Transaction) {
    let s = scenario("g2_mechanism.json");
    let mut t = run_rounds(&s, &s.policies, 0, 0).unwrap();
    let tx = Transaction::PlainMessage(crate::ledger::PlainMessage {
        author: PlayerId(1),
        body: "hello".into(),
    });
    t.submissions.insert(
        0,
        Submission {
            tx: tx.clone(),
            round: 0,
            class: None,
        },
    );
    for r in 0..6 {
        let decision = match applied_at {
            Some(a) if a == r => Decision::Applied,
            Some(a) if a < r => continue,
            _ => Decision::Censored,
        };
        t.rounds.push(RoundRecord {
            round: r,
            rho: 0,
            audited_pool: None,
            producer: Some(PlayerId(0)),
            events: vec![TxEvent {
                tx_id: 0,
                author: PlayerId(1),
                kind: TxKind::Message,
                decision,
                submitted: 0,
            }],
            new_pools: vec![],
            pools: vec![],
            total_stake: 40,
            utilities: BTreeMap::new(),
            game: None,
        });
    }
    (t, tx)
}

#[test]
fn liveness_monitor_counts_rounds_from_submission() {
    let (now, tx) = manual_trace(Some(0));
    assert!(liveness_monitor(&now, &tx, 1).unwrap());
    let (never, tx) = manual_trace(None);
    assert!(!liveness_monitor(&never, &tx, 1).unwrap());
    assert!(!liveness_monitor(&never, &tx, 1000).unwrap());
    let (late, tx) = manual_trace(Some(3));
    assert!(!liveness_monitor(&late, &tx, 3).unwrap());
    assert!(liveness_monitor(&late, &tx, 4).unwrap());
    let other = Transaction::PlainMessage(crate::ledger::PlainMessage {
        author: PlayerId(2),
        body: "x".into(),
    });
    assert!(matches!(
        liveness_monitor(&late, &other, 4),
        Err(SimError::NotSubmitted)
    ));
}

#[test]
fn honest_operators_include_strongly_consistent_txs_at_once() {
    let s = scenario("theorem1.json");
    let r = theorem1_experiment(&s, 0.0, 40, 9).unwrap();
    assert!(r.byzantine.is_empty());
    assert!(!r.liveness.is_empty());
    assert!(r.liveness.iter().all(|v| v.u == 1 && v.live));
    assert!(r.holds());
}

#[test]
fn byzantine_minority_cannot_stop_strongly_consistent_txs() {
    let s = scenario("theorem1.json");
    let r = theorem1_experiment(&s, 0.3, 60, 21).unwrap();
    assert_eq!(r.byzantine.len(), 3);
    assert!(r.all_live, "{:?}", r.liveness.iter().find(|v| !v.live));
    assert!(r.no_positive_gain, "max gain {}", r.max_gain);
    assert!(!r.deviations.is_empty());
    // The newcomer's registration is never claimed live.
    let reg = 0;
    assert!(r
        .outside_scope
        .iter()
        .any(|(id, class, _)| *id == reg && *class != crate::incentive::IcClass::StronglyIc));
}

#[test]
fn fraction_at_the_threshold_is_refused() {
    let s = scenario("theorem1.json");
    assert!(matches!(
        theorem1_experiment(&s, 0.5, 10, 0),
        Err(SimError::AboveThreshold { .. })
    ));
}

#[test]
fn static_cartel_is_an_equilibrium() {
    let s = scenario("cartel_static.json");
    let r = cartel_equilibrium_check(&s, 12, 3).unwrap();
    assert_eq!(r.path, CartelPath::Static);
    assert!(r.confirmed());
    assert_eq!(r.checks.len(), 3);
    // Including hurts every deviator.
    assert!(r.checks.iter().all(|c| c.gain < 0.0));
}

#[test]
fn harmless_competitor_fails_the_precondition() {
    let s = scenario("cartel_identical.json");
    assert!(matches!(
        cartel_equilibrium_check(&s, 12, 3),
        Err(SimError::Precondition(_))
    ));
}

#[test]
fn audits_and_compounds_break_the_cartel() {
    let s = scenario("g2_mechanism.json");
    let r = cartel_equilibrium_check(&s, 2, 1).unwrap();
    assert_eq!(r.path, CartelPath::Mechanism);
    assert_eq!(r.verdict(), "COUNTEREXAMPLE");
    let w = r.witness.unwrap();
    assert_eq!(w.operator, PlayerId(0));
    assert_eq!(w.deviation, "CENSOR-NOTCENSOR");
    assert_eq!(w.exact, Some((Payoff::int(9), Payoff::int(15))));
}

fn action_strategy() -> impl Strategy<Value = Vec<bool>> {
    proptest::collection::vec(any::<bool>(), 4)
}

/// Commitment form: switch at `s` (or never) from compliant to defiant.
fn committed<A: crate::games::BinaryAction>(switch: Option<usize>, m: usize) -> Vec<A> {
    (0..m)
        .map(|r| A::from_defiant(switch.is_some_and(|s| r >= s)))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stake_is_conserved(seed in any::<u64>(), rebels in action_strategy()) {
        let mut s = scenario("cartel_audited.json");
        for (k, r) in rebels.iter().enumerate() {
            let a = if *r { MemberAction::Rebel } else { MemberAction::Capitulate };
            s.policies.members.insert(PlayerId(3 + k as u32), MemberPolicy::Script(vec![a]));
        }
        let t = run_rounds(&s, &s.policies, 15, seed).unwrap();
        let stake = s.genesis().unwrap().total_stake();
        for rec in &t.rounds {
            prop_assert_eq!(rec.total_stake, stake);
            let delegated: u64 = rec.pools.iter().filter(|p| p.live).map(|p| p.delegated).sum();
            prop_assert!(delegated <= stake);
        }
    }

    #[test]
    fn committed_play_never_reverses(
        seed in any::<u64>(),
        switches in proptest::collection::vec(proptest::option::of(0usize..4), 4),
    ) {
        let t = table("g2.json");
        let s = game_scenario(&t);
        let m = 4;
        let mut pol = Policies::default();
        pol.operators.insert(PlayerId(0), OperatorPolicy::Scripted { actions: committed(switches[3], m) });
        for i in 0..3 {
            pol.members.insert(PlayerId(i as u32 + 1), MemberPolicy::Script(committed(switches[i], m)));
        }
        let trace = run_rounds(&s, &pol, m as u64, seed).unwrap();
        let mut leader_defied = false;
        let mut member_defied = [false; 3];
        for rec in &trace.rounds {
            let g = rec.game.as_ref().unwrap();
            if leader_defied {
                prop_assert_eq!(g.leader, LeaderAction::NotCensor);
            }
            leader_defied |= g.leader == LeaderAction::NotCensor;
            for (i, a) in g.members.iter().enumerate() {
                if member_defied[i] {
                    prop_assert_eq!(*a, MemberAction::Rebel);
                }
                member_defied[i] |= *a == MemberAction::Rebel;
            }
        }
    }

    #[test]
    fn identical_inputs_give_identical_exports(seed in any::<u64>()) {
        let s = scenario("theorem1.json");
        let a = run_rounds(&s, &s.policies, 8, seed).unwrap();
        let b = run_rounds(&s, &s.policies, 8, seed).unwrap();
        prop_assert_eq!(trace_csv(&a), trace_csv(&b));
    }
}

#[test]
fn the_strategy_type_is_shared_with_the_games_module() {
    let p: GameStrategy<MemberAction> =
        serde_json::from_str(r#"{"opening":"CAP","policy":"X"}"#).unwrap();
    let m = MemberPolicy::Strategy(p);
    let text = serde_json::to_string(&m).unwrap();
    assert_eq!(serde_json::from_str::<MemberPolicy>(&text).unwrap(), m);
}
