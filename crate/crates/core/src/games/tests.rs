use super::*;
use LeaderAction::{Censor as CEN, NotCensor as NOT};
use MemberAction::{Capitulate as CAP, Rebel as REB};

const G1: &str = include_str!("../../../../data/games/g1.json");
const G2: &str = include_str!("../../../../data/games/g2.json");

fn table(text: &str) -> UtilityTable {
    GameFile::from_json(text).unwrap().pool.unwrap()
}

fn p(members: &[MemberAction], leader: LeaderAction) -> Profile {
    Profile::new(members.to_vec(), leader)
}

#[test]
fn leader_utility_g1() {
    let t = table(G1);
    assert_eq!(
        leader_utility(&t, &p(&[CAP, CAP], CEN)).unwrap(),
        Payoff::int(9)
    );
    assert_eq!(
        leader_utility(&t, &p(&[REB, REB], NOT)).unwrap(),
        Payoff::int(6)
    );
    assert_eq!(
        leader_utility(&t, &p(&[CAP, CAP], NOT)).unwrap(),
        Payoff::int(9)
    );
    // Both rebels censored: alpha = s_P.
    assert_eq!(
        leader_utility(&t, &p(&[REB, REB], CEN)).unwrap(),
        Payoff::int(2)
    );
}

#[test]
fn member_utility_g1() {
    let t = table(G1);
    assert_eq!(
        member_utility(&t, &p(&[REB, CAP], CEN), 0).unwrap(),
        Payoff::ZERO
    );
    assert_eq!(
        member_utility(&t, &p(&[REB, CAP], CEN), 1).unwrap(),
        Payoff::int(2)
    );
    assert_eq!(
        member_utility(&t, &p(&[REB, CAP], NOT), 0).unwrap(),
        Payoff::int(5)
    );
    assert_eq!(
        member_utility(&t, &p(&[REB, CAP], NOT), 2),
        Err(GameError::UnknownMember(3))
    );
    assert!(member_utility(&t, &p(&[REB], NOT), 0).is_err());
}

#[test]
fn exactly_one_branch_per_player() {
    let t = table(G1);
    let y = t.y();
    for prof in all_profiles(2) {
        let r = round_payoffs(&t, &prof.members, prof.leader, false);
        for i in 0..2 {
            let branches = [
                prof.leader == CEN && prof.members[i] == REB,
                prof.leader == CEN && prof.members[i] == CAP,
                prof.leader == NOT && prof.any_rebel(),
                prof.leader == NOT && !prof.any_rebel(),
            ];
            assert_eq!(branches.iter().filter(|b| **b).count(), 1);
            let expect = if branches[0] {
                Payoff::ZERO
            } else if branches[1] {
                t.member_in_pool(i, alpha(&t, &prof.members))
            } else if branches[2] {
                t.member_revolution(i)
            } else {
                t.member_in_pool(i, y)
            };
            assert_eq!(r.members[i], expect);
        }
    }
}

#[test]
fn missing_level_is_rejected() {
    let text = G1.replace("\"20\": 2, \"30\": 3", "\"30\": 3");
    let err = GameFile::from_json(&text).unwrap_err();
    assert!(err.to_string().contains("pool stake 20"), "{err}");
}

#[test]
fn unknown_version_is_rejected() {
    let text = G1.replace("\"version\": 1", "\"version\": 7");
    assert!(matches!(
        GameFile::from_json(&text),
        Err(GameFileError::Game(GameError::Version(7)))
    ));
}

#[test]
fn action_aliases() {
    let a: LeaderAction = serde_json::from_str("\"notcancel\"").unwrap();
    assert_eq!(a, NOT);
    let a: LeaderAction = serde_json::from_str("\"sensor\"").unwrap();
    assert_eq!(a, CEN);
    assert_eq!(
        "(REB, CAP, CENSOR)".parse::<Profile>().unwrap(),
        p(&[REB, CAP], CEN)
    );
    assert_eq!(p(&[REB, CAP], NOT).to_string(), "(REB,CAP,NOTCENSOR)");
}

fn two_rounds(r1: Profile, r2: Profile) -> MultiRoundProfile {
    MultiRoundProfile::new(vec![r1, r2])
}

#[test]
fn multi_round_examples() {
    let t = table(G1);
    let stay = two_rounds(p(&[CAP, CAP], CEN), p(&[CAP, CAP], CEN));
    assert_eq!(
        multi_round_utility(&t, &stay, Player::Member(0)).unwrap(),
        Payoff::int(6)
    );
    let late = two_rounds(p(&[REB, CAP], CEN), p(&[REB, CAP], NOT));
    assert_eq!(
        multi_round_utility(&t, &late, Player::Member(0)).unwrap(),
        Payoff::int(5)
    );
    let early = two_rounds(p(&[REB, CAP], NOT), p(&[REB, CAP], NOT));
    assert_eq!(
        multi_round_utility(&t, &early, Player::Member(0)).unwrap(),
        Payoff::int(10)
    );
    let broken = two_rounds(p(&[REB, CAP], NOT), p(&[CAP, CAP], NOT));
    assert_eq!(
        multi_round_utility(&t, &broken, Player::Member(0)),
        Err(GameError::Commitment {
            player: Player::Member(0),
            round: 2
        })
    );
}

#[test]
fn one_round_equals_single_shot() {
    let t = table(G1);
    for prof in all_profiles(2) {
        let m = MultiRoundProfile::new(vec![prof.clone()]);
        assert_eq!(
            multi_round_utility(&t, &m, Player::Leader).unwrap(),
            leader_utility(&t, &prof).unwrap()
        );
        for i in 0..2 {
            assert_eq!(
                multi_round_utility(&t, &m, Player::Member(i)).unwrap(),
                member_utility(&t, &prof, i).unwrap()
            );
        }
    }
}

#[test]
fn committed_profile_count() {
    // (m + 1)^(n + 1) switch-time choices.
    assert_eq!(all_committed_profiles(2, 2).len(), 27);
    assert!(all_committed_profiles(2, 3)
        .iter()
        .all(|p| p.check_commitment().is_ok()));
}

fn strat_m(a: MemberAction, pol: Policy<MemberAction>) -> Strategy<MemberAction> {
    Strategy::two(a, pol)
}

fn strat_l(a: LeaderAction, pol: Policy<LeaderAction>) -> Strategy<LeaderAction> {
    Strategy::two(a, pol)
}

fn g2_profile(leader_policy: Policy<LeaderAction>) -> AdaptiveProfile {
    AdaptiveProfile {
        members: vec![
            strat_m(REB, Policy::Always(REB)),
            strat_m(CAP, Policy::Signal),
            strat_m(CAP, Policy::Signal),
        ],
        leader: strat_l(CEN, leader_policy),
    }
}

#[test]
fn resolve_adaptive_signal_fires() {
    let t = table(G2);
    let r = resolve_adaptive(&t, &g2_profile(Policy::Signal)).unwrap();
    assert!(r.signal);
    assert_eq!(r.realized.rounds[1], p(&[REB, REB, REB], NOT));
    assert_eq!(r.totals[0], Payoff::int(7));
    assert_eq!(r.totals[3], Payoff::int(15));
}

#[test]
fn resolve_adaptive_no_signal() {
    let t = table(G2);
    let prof = AdaptiveProfile {
        members: vec![strat_m(CAP, Policy::Signal); 3],
        leader: strat_l(CEN, Policy::Signal),
    };
    let r = resolve_adaptive(&t, &prof).unwrap();
    assert!(!r.signal);
    assert_eq!(r.realized.rounds[1], p(&[CAP, CAP, CAP], CEN));
    assert_eq!(r.totals[0], Payoff::int(6));
}

#[test]
fn resolve_adaptive_leader_keeps_censoring() {
    let t = table(G2);
    let r = resolve_adaptive(&t, &g2_profile(Policy::Always(CEN))).unwrap();
    assert_eq!(r.realized.rounds[1], p(&[REB, REB, REB], CEN));
    assert_eq!(r.totals[0], Payoff::ZERO);
    // All three rebels censored in round 2: alpha = s_P = 10, u^P_10 = 1.
    assert_eq!(r.totals[3], Payoff::int(8 + 1));
}

#[test]
fn always_policies_match_committed_play() {
    let t = table(G2);
    let game = AdaptiveGame::two_round(t.clone());
    for prof in game.all_profiles() {
        let all_always = prof
            .members
            .iter()
            .all(|s| matches!(s.policy, Policy::Always(_)))
            && matches!(prof.leader.policy, Policy::Always(_));
        if !all_always {
            continue;
        }
        let r = game.resolve(&prof).unwrap();
        let direct = totals(&play_rounds(&t, &r.realized.rounds), t.n());
        assert_eq!(r.totals, direct);
        if r.realized.check_commitment().is_ok() {
            for i in 0..t.n() {
                assert_eq!(
                    multi_round_utility(&t, &r.realized, Player::Member(i)).unwrap(),
                    r.totals[i]
                );
            }
        }
    }
}

#[test]
fn adaptive_space_size() {
    let game = AdaptiveGame::two_round(table(G2));
    assert_eq!(game.all_profiles().len() as u128, game.space_size());
    assert_eq!(game.space_size(), 6u128.pow(4));
}

#[test]
fn adaptive_profile_file() {
    let text = include_str!("../../../../data/profiles/g2_t4.json");
    let prof: AdaptiveProfile = profile_from_json(text).unwrap();
    assert_eq!(prof, g2_profile(Policy::Signal));
    let json = serde_json::to_string(&prof).unwrap();
    let back: AdaptiveProfile = serde_json::from_str(&json).unwrap();
    assert_eq!(back, prof);
}

#[test]
fn absorbing_revolution() {
    let t = table(G2);
    let game = AdaptiveGame::new(t.clone(), 4, 1).unwrap();
    for prof in game.all_profiles().into_iter().step_by(7) {
        let (realized, _) = game.realize(&prof);
        let rounds = play_rounds(&t, &realized.rounds);
        if let Some(first) = rounds.iter().position(|r| r.revolution) {
            assert!(rounds[first..].iter().all(|r| r.revolution));
        }
    }
}

fn two_pool() -> TwoPoolGame {
    let t = table(G2);
    TwoPoolGame::new(t.clone(), t)
}

fn two_pool_profile(pool1: &[MemberAction], l1: LeaderAction) -> TwoPoolProfile {
    TwoPoolProfile {
        pool1: PoolOneActions {
            members: pool1.to_vec(),
            leader: l1,
        },
        pool2: PoolTwoPolicies {
            members: vec![Policy::Signal, Policy::Signal, Policy::Always(CAP)],
            leader: Policy::Signal,
        },
    }
}

#[test]
fn two_pool_quiet() {
    let g = two_pool();
    let o = g.outcome(&two_pool_profile(&[CAP, CAP, CAP], CEN)).unwrap();
    assert!(!o.signal);
    // Two rounds of in-pool utility for everybody.
    assert_eq!(o.totals[0], Payoff::int(6));
    assert_eq!(o.totals[3], Payoff::int(24));
    assert_eq!(o.totals[4], Payoff::int(6));
    assert_eq!(o.totals[7], Payoff::int(24));
}

#[test]
fn two_pool_signal_propagates() {
    let g = two_pool();
    let o = g.outcome(&two_pool_profile(&[REB, CAP, CAP], CEN)).unwrap();
    assert!(o.signal && o.pool2_revolution && !o.pool1_revolution);
    assert_eq!(o.totals[0], Payoff::int(7));
    // P_2: u_{y_2} then u'.
    assert_eq!(o.totals[7], Payoff::int(12 + 7));
}

#[test]
fn two_pool_revolution_in_pool_one_reaches_pool_two() {
    let g = two_pool();
    let mut prof = two_pool_profile(&[REB, CAP, CAP], NOT);
    prof.pool2.members = vec![Policy::Always(CAP); 3];
    prof.pool2.leader = Policy::Always(CEN);
    let o = g.outcome(&prof).unwrap();
    assert!(o.pool1_revolution);
    for i in 4..7 {
        assert_eq!(o.totals[i], Payoff::int(3 + 7));
    }
}

#[test]
fn two_pool_rejects_fixed_policies() {
    let g = two_pool();
    let mut prof = two_pool_profile(&[CAP, CAP, CAP], CEN);
    prof.pool2.leader = Policy::Fixed(vec![CEN]);
    assert!(g.outcome(&prof).is_err());
}

#[test]
fn enforce_checks_hypotheses_at_load() {
    let text = include_str!("../../../../data/games/g1_multi3.json");
    // u'^P = 6 <= u^P_y = 9 and positive member utilities.
    assert!(GameFile::from_json(text).unwrap().spec().is_ok());
    let bad = text.replace("\"revolution\": 6", "\"revolution\": 10");
    let err = GameFile::from_json(&bad).unwrap().spec().unwrap_err();
    assert!(matches!(err, GameError::Hypothesis { .. }));
}
