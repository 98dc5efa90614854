use super::*;
use crate::games::{
    profile_from_json, AdaptiveGame, AdaptiveProfile, FReading, GameFile, GameSpec, LeaderAction,
    MemberAction, MultiRoundProfile, Payoff, Player, Policy, Profile, Strategy, TwoPoolGame,
    TwoPoolProfile, UtilityTable,
};
use LeaderAction::{Censor as CEN, NotCensor as NOT};
use MemberAction::{Capitulate as CAP, Rebel as REB};

const G1: &str = include_str!("../../../../data/games/g1.json");
const G2: &str = include_str!("../../../../data/games/g2.json");
const G2_F_BROKEN: &str = include_str!("../../../../data/games/g2_f_broken.json");
const G2_K4: &str = include_str!("../../../../data/games/g2_k4.json");
const TWO_POOL: &str = include_str!("../../../../data/games/two_pool.json");
const P_T4: &str = include_str!("../../../../data/profiles/g2_t4.json");
const P_T6: &str = include_str!("../../../../data/profiles/two_pool_t6.json");

fn table(text: &str) -> UtilityTable {
    GameFile::from_json(text).unwrap().pool.unwrap()
}

fn adaptive(text: &str) -> AdaptiveGame {
    match GameFile::from_json(text).unwrap().spec().unwrap() {
        GameSpec::Adaptive(g) => g,
        other => panic!("not adaptive: {other:?}"),
    }
}

fn p(members: &[MemberAction], leader: LeaderAction) -> Profile {
    Profile::new(members.to_vec(), leader)
}

fn g1() -> SingleGame {
    SingleGame::new(table(G1))
}

fn summary<P: std::fmt::Display>(scan: &Scan<P>) -> Vec<(Player, String, Payoff)> {
    scan.violations
        .iter()
        .map(|v| (v.player, v.deviation.clone(), v.gain))
        .collect()
}

#[test]
fn equilibrium_b_has_no_violation() {
    let s = best_response_violations(&g1(), &p(&[CAP, CAP], CEN)).unwrap();
    assert!(s.is_nash());
}

#[test]
fn censoring_two_rebels() {
    let s = best_response_violations(&g1(), &p(&[REB, REB], CEN)).unwrap();
    // Besides the leader's NOTCENSOR (6 - 2), each censored rebel gains
    // u^i_20 = 2 by capitulating.
    assert_eq!(
        summary(&s),
        vec![
            (Player::Member(0), "CAPITULATE".into(), Payoff::int(2)),
            (Player::Member(1), "CAPITULATE".into(), Payoff::int(2)),
            (Player::Leader, "NOTCENSOR".into(), Payoff::int(4)),
        ]
    );
}

#[test]
fn open_pool_without_rebels() {
    let s = best_response_violations(&g1(), &p(&[CAP, CAP], NOT)).unwrap();
    assert_eq!(
        summary(&s),
        vec![
            (Player::Member(0), "REBEL".into(), Payoff::int(2)),
            (Player::Member(1), "REBEL".into(), Payoff::int(2)),
        ]
    );
    // Censoring everyone-capitulating pays u^P_y as well.
    assert_eq!(s.indifferent.len(), 1);
    assert_eq!(s.indifferent[0].player, Player::Leader);
}

#[test]
fn g1_has_four_equilibria() {
    let ne = enumerate_pure_nash(&g1(), DEFAULT_SPACE_LIMIT).unwrap();
    let mut expect = vec![
        p(&[CAP, CAP], CEN),
        p(&[REB, REB], NOT),
        p(&[REB, CAP], NOT),
        p(&[CAP, REB], NOT),
    ];
    expect.sort();
    assert_eq!(ne, expect);
}

#[test]
fn space_limit_is_enforced() {
    assert_eq!(
        enumerate_pure_nash(&g1(), 4),
        Err(EngineError::SpaceLimit { size: 8, limit: 4 })
    );
}

fn levels(pairs: &[(u64, i64)]) -> std::collections::BTreeMap<u64, Payoff> {
    pairs.iter().map(|&(x, v)| (x, Payoff::int(v))).collect()
}

#[test]
fn unattractive_revolution_keeps_censorship() {
    let t = UtilityTable::uniform(
        10,
        &[10, 10],
        levels(&[(10, 5), (20, 6), (30, 7)]),
        Payoff::int(1),
        levels(&[(20, 4), (30, 5)]),
        Payoff::int(1),
    )
    .unwrap();
    let ne = enumerate_pure_nash(&SingleGame::new(t), DEFAULT_SPACE_LIMIT).unwrap();
    assert!(ne.contains(&p(&[CAP, CAP], CEN)));
}

#[test]
fn lone_member_revolts() {
    let t = UtilityTable::uniform(
        10,
        &[5],
        levels(&[(10, 3), (15, 4)]),
        Payoff::int(3),
        levels(&[(15, 2)]),
        Payoff::int(5),
    )
    .unwrap();
    let ne = enumerate_pure_nash(&SingleGame::new(t), DEFAULT_SPACE_LIMIT).unwrap();
    assert!(ne.contains(&p(&[REB], NOT)));
}

#[test]
fn theorem2_on_g1() {
    let r = verify_theorem2(&table(G1), DEFAULT_SPACE_LIMIT).unwrap();
    assert!(r.confirmed());
    assert_eq!(r.equilibria.len(), 4);
    assert_eq!(theorem2_characterized(&table(G1)).len(), 4);
}

#[test]
fn theorem2_boundary_keeps_unique_rebel() {
    let mut t = table(G1);
    t.set_member_revolution(0, Payoff::int(3));
    let r = verify_theorem2(&t, DEFAULT_SPACE_LIMIT).unwrap();
    assert!(r.confirmed());
    assert!(r.equilibria.contains(&p(&[REB, CAP], NOT)));
    assert!(theorem2_characterized(&t).contains(&p(&[REB, CAP], NOT)));
}

#[test]
fn theorem2_refuses_without_keen_member() {
    let mut t = table(G1);
    t.set_member_revolution(0, Payoff::int(3));
    t.set_member_revolution(1, Payoff::int(2));
    match verify_theorem2(&t, DEFAULT_SPACE_LIMIT) {
        Err(EngineError::Hypothesis { theorem, checks }) => {
            assert_eq!(theorem, crate::games::TheoremId::T2);
            assert!(checks.iter().any(|c| !c.holds));
        }
        other => panic!("expected a hypothesis failure, got {other:?}"),
    }
}

#[test]
fn spne_single_round_matches_nash() {
    let t = table(G1);
    for prof in crate::games::all_profiles(2) {
        let m = MultiRoundProfile::new(vec![prof.clone()]);
        let nash = best_response_violations(&g1(), &prof).unwrap().is_nash();
        assert_eq!(check_spne(&t, &m).unwrap().holds, nash, "{prof}");
    }
}

#[test]
fn theorem3_profile_is_subgame_perfect() {
    let t = table(G1);
    let prof = theorem3_profile(2, 3, 1, &[0, 1]);
    assert_eq!(
        prof.to_string(),
        "(CAP,CAP,CENSOR) (REB,REB,NOTCENSOR) (REB,REB,NOTCENSOR)"
    );
    assert!(check_spne(&t, &prof).unwrap().holds);
}

#[test]
fn idle_last_round_fails_last_subgame() {
    let t = table(G1);
    let prof = MultiRoundProfile::from_switches(3, &[None, None], Some(3));
    let out = check_spne(&t, &prof).unwrap();
    assert!(!out.holds);
    assert_eq!(out.failing_subgame, Some(2));
    assert!(out.violations.iter().any(|v| v.player == Player::Member(0)));
}

#[test]
fn theorem3_family_on_g1() {
    let t = table(G1);
    let r = verify_theorem3_family(&t, 2, 1, DEFAULT_SPACE_LIMIT).unwrap();
    assert!(r.confirmed());
    // {1}, {2}, {1,2}.
    assert_eq!(r.checked, 3);
    assert!(r.equilibria.contains(&theorem3_profile(2, 2, 1, &[0, 1])));
    let r = verify_theorem3_family(&t, 2, 2, DEFAULT_SPACE_LIMIT).unwrap();
    assert!(r.confirmed());
    assert_eq!(r.equilibria, vec![theorem3_profile(2, 2, 2, &[])]);
}

#[test]
fn theorem3_excludes_reluctant_lone_rebel() {
    let mut t = table(G1);
    t.set_member_revolution(0, Payoff::int(2));
    let family = theorem3_family(&t, 2, 1);
    let lone = theorem3_profile(2, 2, 1, &[0]);
    assert!(!family.contains(&lone));
    assert!(!theorem3_conditions(&t, &[0])[0].holds);
    let out = check_spne(&t, &lone).unwrap();
    assert!(!out.holds);
}

#[test]
fn spne_implies_nash() {
    let t = table(G1);
    let game = MultiGame::new(t.clone(), 2);
    for prof in game.profiles() {
        if check_spne(&t, &prof).unwrap().holds {
            assert!(best_response_violations(&game, &prof).unwrap().is_nash());
        }
    }
}

#[test]
fn theorem4_on_g2() {
    let game = adaptive(G2);
    let prof: AdaptiveProfile = profile_from_json(P_T4).unwrap();
    let r = verify_theorem4(&game, &prof, FReading::Revolution).unwrap();
    assert!(r.confirmed(), "{:?}", r.witnesses());
    assert!(r.conditions.iter().all(|c| c.holds), "{:?}", r.conditions);
}

#[test]
fn theorem4_broken_f() {
    let game = adaptive(G2_F_BROKEN);
    let prof: AdaptiveProfile = profile_from_json(P_T4).unwrap();
    let r = verify_theorem4(&game, &prof, FReading::Revolution).unwrap();
    assert!(!r.confirmed());
    let d = r.conditions.iter().find(|c| c.name == "D").unwrap();
    assert!(!d.holds);
    let v = &r.witnesses()[0].violations;
    let m1 = v
        .iter()
        .find(|v| v.player == Player::Member(0) && v.deviation == "CAP-CAP")
        .unwrap();
    assert_eq!((m1.deviated, m1.current), (Payoff::int(6), Payoff::int(5)));
}

#[test]
fn theorem4_single_follower_goes_to_scan() {
    let game = adaptive(G2);
    let mut prof: AdaptiveProfile = profile_from_json(P_T4).unwrap();
    prof.members[2] = Strategy::two(CAP, Policy::Always(CAP));
    let r = verify_theorem4(&game, &prof, FReading::Revolution).unwrap();
    assert!(!r.conditions.iter().find(|c| c.name == "J").unwrap().holds);
    // With u'_2 = 7 above u^2_y the lone follower still joins: the scan
    // finds no profitable deviation.
    assert!(r.confirmed());
}

#[test]
fn theorem4_wrong_leader_shape() {
    let game = adaptive(G2);
    let mut prof: AdaptiveProfile = profile_from_json(P_T4).unwrap();
    prof.leader = Strategy::two(CEN, Policy::Always(NOT));
    assert!(matches!(
        verify_theorem4(&game, &prof, FReading::Revolution),
        Err(EngineError::Game(GameError::ProfileShape(_)))
    ));
}

#[test]
fn theorem5_part_one_on_g2() {
    let game = adaptive(G2);
    let r = verify_theorem5(&game, DEFAULT_SPACE_LIMIT).unwrap();
    assert!(r.confirmed(), "{:?}", r.witnesses());
    assert!(r.conditions.iter().all(|c| c.holds));
    assert!(!r.equilibria.is_empty());
}

#[test]
fn theorem5_needs_an_applicable_part() {
    let mut t = table(G2);
    // Nobody is keen on the revolution and the leader never is.
    t.set_leader_revolution(Payoff::ZERO);
    for i in 0..3 {
        t.set_member_revolution(i, Payoff::int(5));
    }
    let game = AdaptiveGame::two_round(t);
    assert!(matches!(
        verify_theorem5(&game, DEFAULT_SPACE_LIMIT),
        Err(EngineError::Hypothesis { .. })
    ));
}

#[test]
fn theorem5_part_two_alone() {
    let mut t = table(G2);
    t.set_leader_revolution(Payoff::ZERO);
    let game = AdaptiveGame::two_round(t);
    let r = verify_theorem5(&game, DEFAULT_SPACE_LIMIT).unwrap();
    assert!(r.confirmed(), "{:?}", r.witnesses());
}

#[test]
fn theorem6_on_mirrored_g2() {
    let game = match GameFile::from_json(TWO_POOL).unwrap().spec().unwrap() {
        GameSpec::TwoPool(g) => g,
        _ => unreachable!(),
    };
    let prof: TwoPoolProfile = profile_from_json(P_T6).unwrap();
    let r = verify_theorem6(&game, &prof).unwrap();
    assert!(r.confirmed(), "{:?}", r.witnesses());
    assert!(r.conditions.iter().all(|c| c.holds));
    // P2 switching to ALWAYS_CENSOR: u^P2_y2 + u^P2_(y2-l) at most.
    let scan = best_response_violations(&game, &prof).unwrap();
    let p2 = game.player_index(Player::PoolLeader(1)).unwrap();
    let mut q = prof.clone();
    q.pool2.leader = Policy::Always(CEN);
    let gain = FiniteGame::payoffs(&game, &q)[p2] - FiniteGame::payoffs(&game, &prof)[p2];
    assert!(gain <= Payoff::ZERO);
    assert!(scan.violations.is_empty());
}

#[test]
fn theorem6_without_d() {
    let mut t = table(G2);
    t.set_member_revolution(0, Payoff::int(5));
    let game = TwoPoolGame::new(t, table(G2));
    let prof: TwoPoolProfile = profile_from_json(P_T6).unwrap();
    let r = verify_theorem6(&game, &prof).unwrap();
    assert!(!r.confirmed());
    let v = &r.witnesses()[0].violations;
    assert!(v
        .iter()
        .any(|v| v.player == Player::PoolMember(0, 0) && v.deviation == "CAPITULATE"));
}

#[test]
fn kround_on_g2() {
    let game = adaptive(G2_K4);
    let prof: AdaptiveProfile = profile_from_json(P_T4).unwrap();
    let r = verify_kround_extension(&game, &prof, FReading::Revolution).unwrap();
    assert!(r.confirmed(), "{:?}", r.witnesses());
    // k = 2 reduces to t4.
    let two = adaptive(G2);
    let a = verify_kround_extension(&two, &prof, FReading::Revolution).unwrap();
    let b = verify_theorem4(&two, &prof, FReading::Revolution).unwrap();
    assert_eq!(a.verdict, b.verdict);
    assert_eq!(a.conditions, b.conditions);
}

#[test]
fn kround_between_thresholds() {
    let mut t = table(G2);
    // u^1_y = 3 < 3.5 < (4/3) * 3 = 4.
    t.set_member_revolution(0, Payoff::ratio(7, 2));
    let game = AdaptiveGame::new(t, 4, 1).unwrap();
    let prof: AdaptiveProfile = profile_from_json(P_T4).unwrap();
    let r = verify_kround_extension(&game, &prof, FReading::Revolution).unwrap();
    assert!(!r.confirmed());
    let v = &r.witnesses()[0].violations;
    let always_cap = v
        .iter()
        .find(|v| v.player == Player::Member(0) && v.deviation == "CAP-CAP-CAP-CAP")
        .unwrap();
    assert_eq!(always_cap.deviated, Payoff::int(12));
    assert_eq!(always_cap.current, Payoff::ratio(21, 2));
}

fn oracle_consistency<G: FiniteGame>(game: &G) {
    let ne = enumerate_pure_nash(game, DEFAULT_SPACE_LIMIT).unwrap();
    for prof in game.profiles() {
        let scan = best_response_violations(game, &prof).unwrap();
        assert_eq!(ne.binary_search(&prof).is_ok(), scan.is_nash(), "{prof}");
        let base = game.payoffs(&prof);
        let players = game.players();
        for v in &scan.violations {
            let idx = players.iter().position(|p| *p == v.player).unwrap();
            let replay = game.payoffs(&v.profile)[idx] - base[idx];
            assert_eq!(replay, v.gain);
            assert!(replay > Payoff::ZERO);
        }
    }
}

#[test]
fn oracle_consistency_everywhere() {
    oracle_consistency(&g1());
    oracle_consistency(&MultiGame::new(table(G1), 3));
    oracle_consistency(&adaptive(G2));
    let t = table(G2);
    oracle_consistency(&TwoPoolGame::new(t.clone(), t));
}

#[test]
fn reports_serialize() {
    let r = verify_theorem2(&table(G1), DEFAULT_SPACE_LIMIT).unwrap();
    let rep = EquilibriumReport::theorem("abc", &r);
    let v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
    assert_eq!(v["verdict"]["status"], "CONFIRMED");
    assert_eq!(v["equilibria"].as_array().unwrap().len(), 4);
    assert_eq!(v["alpha_convention"], ALPHA_CONVENTION);
    assert!(v["hypotheses"]["positive_in_pool"]["holds"]
        .as_bool()
        .unwrap());
    assert!(rep.render_text().contains("verdict: CONFIRMED"));
}
