//! Theorem verifiers. Each evaluates the theorem's hypotheses (refusing to
//! run when they fail), evaluates its conditions on the profile, and lets
//! an exhaustive deviation scan decide.

use std::collections::BTreeSet;

use crate::games::{
    play_rounds, table_hypotheses, AdaptiveGame, AdaptiveProfile, BinaryAction, Check, FReading,
    GameError, LeaderAction, MemberAction, MultiRoundProfile, Payoff, Policy, Profile, TheoremId,
    TwoPoolGame, TwoPoolProfile, UtilityTable,
};
use crate::ledger::Stake;

use super::instances::SingleGame;
use super::spne::check_spne;
use super::{best_response_violations, enumerate_pure_nash, EngineError, FiniteGame, Violation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness<P> {
    pub profile: P,
    /// Failing subgame, for subgame-perfection checks.
    pub subgame: Option<usize>,
    pub violations: Vec<Violation<P>>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict<P> {
    Confirmed,
    Counterexample(Vec<Witness<P>>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheoremReport<P> {
    pub theorem: TheoremId,
    pub verdict: Verdict<P>,
    pub hypotheses: Vec<Check>,
    /// Conditions of the theorem evaluated on the game or profile.
    pub conditions: Vec<Check>,
    /// Equilibria found, where the verifier enumerates them.
    pub equilibria: Vec<P>,
    /// Number of profiles checked.
    pub checked: usize,
}

impl<P> TheoremReport<P> {
    pub fn confirmed(&self) -> bool {
        matches!(self.verdict, Verdict::Confirmed)
    }

    pub fn witnesses(&self) -> &[Witness<P>] {
        match &self.verdict {
            Verdict::Confirmed => &[],
            Verdict::Counterexample(w) => w,
        }
    }
}

fn gate(theorem: TheoremId, checks: Vec<Check>) -> Result<Vec<Check>, EngineError> {
    if checks.iter().all(|c| c.holds) {
        Ok(checks)
    } else {
        Err(EngineError::Hypothesis { theorem, checks })
    }
}

fn stake_of(table: &UtilityTable, members: impl IntoIterator<Item = usize>) -> Stake {
    members.into_iter().map(|i| table.member_stake(i)).sum()
}

fn member_list(ids: &[usize]) -> String {
    let v: Vec<String> = ids.iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", v.join(","))
}

// t2: equilibria of the single-round game.

/// The characterized equilibrium set: all-capitulate with CENSOR, plus
/// every NOTCENSOR profile with `u'^P >= u^P_alpha` and either two or more
/// rebels (J) or a unique rebel `i` with `u'_i >= u^i_y` (F).
pub fn theorem2_characterized(table: &UtilityTable) -> Vec<Profile> {
    let n = table.n();
    let y = table.y();
    let mut out = vec![Profile::new(
        vec![MemberAction::Capitulate; n],
        LeaderAction::Censor,
    )];
    for p in crate::games::all_profiles(n).filter(|p| p.leader == LeaderAction::NotCensor) {
        let rebels: Vec<usize> = p.rebels().collect();
        let a = crate::games::alpha(table, &p.members);
        let leader_ok = table.leader_revolution() >= table.leader_in_pool(a);
        let j = rebels.len() >= 2;
        let f = rebels.len() == 1
            && table.member_revolution(rebels[0]) >= table.member_in_pool(rebels[0], y);
        if leader_ok && (j || f) {
            out.push(p);
        }
    }
    out.sort();
    out
}

pub fn verify_theorem2(
    table: &UtilityTable,
    limit: u128,
) -> Result<TheoremReport<Profile>, EngineError> {
    let hypotheses = gate(TheoremId::T2, table_hypotheses(TheoremId::T2, table))?;
    let game = SingleGame::new(table.clone());
    let ne = enumerate_pure_nash(&game, limit)?;
    let characterized = theorem2_characterized(table);
    let (a, b): (BTreeSet<&Profile>, BTreeSet<&Profile>) =
        (ne.iter().collect(), characterized.iter().collect());
    let mut witnesses = Vec::new();
    for p in a.difference(&b) {
        witnesses.push(Witness {
            profile: (*p).clone(),
            subgame: None,
            violations: Vec::new(),
            note: "equilibrium outside the characterized set".into(),
        });
    }
    for p in b.difference(&a) {
        witnesses.push(Witness {
            profile: (*p).clone(),
            subgame: None,
            violations: best_response_violations(&game, p)?.violations,
            note: "characterized profile is not an equilibrium".into(),
        });
    }
    witnesses.sort_by(|x, y| x.profile.cmp(&y.profile));
    let conditions = vec![Check::new(
        "set_equality",
        witnesses.is_empty(),
        format!(
            "{} characterized, {} equilibria",
            characterized.len(),
            ne.len()
        ),
    )];
    Ok(TheoremReport {
        theorem: TheoremId::T2,
        verdict: if witnesses.is_empty() {
            Verdict::Confirmed
        } else {
            Verdict::Counterexample(witnesses)
        },
        hypotheses,
        conditions,
        equilibria: ne,
        checked: game.space_size() as usize,
    })
}

// t3: the subgame-perfect family of the multi-round game.

/// All-capitulate under CENSOR through round `l`; from `l + 1` the leader
/// plays NOTCENSOR and exactly the members in `rebels` rebel.
pub fn theorem3_profile(n: usize, m: usize, l: usize, rebels: &[usize]) -> MultiRoundProfile {
    let switch = (l < m).then_some(l + 1);
    let members: Vec<Option<usize>> = (0..n)
        .map(|i| if rebels.contains(&i) { switch } else { None })
        .collect();
    MultiRoundProfile::from_switches(m, &members, switch)
}

/// Conditions on the rebel set entering at round `l + 1`.
pub fn theorem3_conditions(table: &UtilityTable, rebels: &[usize]) -> Vec<Check> {
    let y = table.y();
    let alpha = table.y() - stake_of(table, rebels.iter().copied());
    let (rev, at) = (table.leader_revolution(), table.leader_in_pool(alpha));
    let rebels_ok = match rebels {
        [] => Check::new("rebels", false, "no rebel at round l+1"),
        [i] => {
            let (r, u) = (table.member_revolution(*i), table.member_in_pool(*i, y));
            Check::new(
                "unique_rebel_prefers_revolution",
                r >= u,
                format!("member {}: u' = {r}, u_y = {u}", i + 1),
            )
        }
        _ => Check::new("J", true, format!("rebels {}", member_list(rebels))),
    };
    vec![
        rebels_ok,
        Check::new(
            "leader_threshold",
            rev >= at,
            format!("u'^P = {rev}, u^P_{alpha} = {at}"),
        ),
    ]
}

/// The family for a given `l`; for `l = m` it is the single all-censor
/// profile.
pub fn theorem3_family(table: &UtilityTable, m: usize, l: usize) -> Vec<MultiRoundProfile> {
    let n = table.n();
    if l >= m {
        return vec![theorem3_profile(n, m, m, &[])];
    }
    let mut out: Vec<MultiRoundProfile> = (1u32..1 << n)
        .map(|bits| (0..n).filter(|i| bits >> i & 1 == 1).collect::<Vec<_>>())
        .filter(|r| theorem3_conditions(table, r).iter().all(|c| c.holds))
        .map(|r| theorem3_profile(n, m, l, &r))
        .collect();
    out.sort();
    out
}

pub fn verify_theorem3_family(
    table: &UtilityTable,
    m: usize,
    l: usize,
    limit: u128,
) -> Result<TheoremReport<MultiRoundProfile>, EngineError> {
    let hypotheses = gate(TheoremId::T3, table_hypotheses(TheoremId::T3, table))?;
    if l == 0 || l > m {
        return Err(GameError::Invalid(format!("l must be in 1..={m}, got {l}")).into());
    }
    let size = 1u128 << table.n();
    if size > limit {
        return Err(EngineError::SpaceLimit { size, limit });
    }
    let family = theorem3_family(table, m, l);
    let mut witnesses = Vec::new();
    let mut passed = Vec::new();
    for p in &family {
        let out = check_spne(table, p)?;
        if out.holds {
            passed.push(p.clone());
        } else {
            witnesses.push(Witness {
                profile: p.clone(),
                subgame: out.failing_subgame,
                violations: out.violations,
                note: "family profile is not subgame perfect".into(),
            });
        }
    }
    let conditions = vec![Check::new(
        "family",
        !family.is_empty(),
        format!("{} profiles for m = {m}, l = {l}", family.len()),
    )];
    Ok(TheoremReport {
        theorem: TheoremId::T3,
        verdict: if witnesses.is_empty() {
            Verdict::Confirmed
        } else {
            Verdict::Counterexample(witnesses)
        },
        hypotheses,
        conditions,
        equilibria: passed,
        checked: family.len(),
    })
}

// t4 and its k-round extension.

fn check_leader_shape(game: &AdaptiveGame, profile: &AdaptiveProfile) -> Result<(), GameError> {
    let l = &profile.leader;
    if l.opening.iter().all(|a| *a == LeaderAction::Censor) && l.policy == Policy::Signal {
        Ok(())
    } else {
        Err(GameError::ProfileShape(format!(
            "the leader must play CENSOR for {} round(s) then Y, got {}",
            game.depth, l
        )))
    }
}

/// Conditions of the adaptive theorems on a profile: the leader threshold,
/// L, J and F (including `D_{j,k}`).
pub fn adaptive_conditions(
    game: &AdaptiveGame,
    profile: &AdaptiveProfile,
    reading: FReading,
) -> Vec<Check> {
    let t = &game.table;
    let (k, j) = (game.rounds as i64, game.depth as i64);
    let y = t.y();
    let followers: Vec<usize> = profile.signal_followers().collect();
    let l = stake_of(t, followers.iter().copied());
    let (rev, thr) = (t.leader_revolution(), t.leader_in_pool(y - l));
    let mut out = vec![Check::new(
        "leader_threshold",
        rev >= thr,
        format!("u'^P = {rev}, u^P_(y-l) = {thr}, l = {l}"),
    )];
    let touched: Vec<usize> = profile
        .members
        .iter()
        .enumerate()
        .filter(|(_, s)| s.opening.iter().any(|a| a.is_defiant()))
        .map(|(i, _)| i)
        .collect();
    let sustained: Vec<usize> = profile.sustained_rebels().collect();
    let rebel = (touched.len() == 1 && sustained == touched).then(|| touched[0]);
    out.push(Check::new(
        "L",
        rebel.is_some(),
        format!(
            "opening rebels {}, sustained {}",
            member_list(&touched),
            member_list(&sustained)
        ),
    ));
    out.push(Check::new(
        "J",
        followers.len() >= 2,
        format!("signal followers {}", member_list(&followers)),
    ));
    match rebel {
        Some(i) => {
            let at = t.leader_in_pool(y - t.member_stake(i));
            out.push(Check::new(
                "F_leader",
                rev <= at,
                format!("u'^P = {rev}, u^P_(y-s_{}) = {at}", i + 1),
            ));
            let u_y = t.member_in_pool(i, y);
            let lhs = match reading {
                FReading::Revolution => t.member_revolution(i),
                FReading::OwnStakeLevel => {
                    t.member_in_pool(i, t.leader_stake() + t.member_stake(i))
                }
            };
            let bound = u_y.scale(k, k - j);
            out.push(Check::new(
                "D",
                lhs >= bound,
                format!("member {}: {lhs} vs ({k}/{})*{u_y} = {bound}", i + 1, k - j),
            ));
        }
        None => {
            out.push(Check::new("F_leader", false, "no unique rebel"));
            out.push(Check::new("D", false, "no unique rebel"));
        }
    }
    out
}

fn scan_verdict<G: FiniteGame>(
    game: &G,
    profile: &G::Profile,
    note: &str,
) -> Result<Verdict<G::Profile>, GameError> {
    let scan = best_response_violations(game, profile)?;
    Ok(if scan.is_nash() {
        Verdict::Confirmed
    } else {
        Verdict::Counterexample(vec![Witness {
            profile: profile.clone(),
            subgame: None,
            violations: scan.violations,
            note: note.into(),
        }])
    })
}

fn verify_adaptive(
    theorem: TheoremId,
    game: &AdaptiveGame,
    profile: &AdaptiveProfile,
    reading: FReading,
) -> Result<TheoremReport<AdaptiveProfile>, EngineError> {
    let hypotheses = gate(theorem, table_hypotheses(theorem, &game.table))?;
    game.check_profile(profile)?;
    check_leader_shape(game, profile)?;
    let conditions = adaptive_conditions(game, profile, reading);
    let verdict = scan_verdict(game, profile, "profitable unilateral deviation")?;
    Ok(TheoremReport {
        theorem,
        equilibria: if verdict == Verdict::Confirmed {
            vec![profile.clone()]
        } else {
            Vec::new()
        },
        verdict,
        hypotheses,
        conditions,
        checked: 1,
    })
}

pub fn verify_theorem4(
    game: &AdaptiveGame,
    profile: &AdaptiveProfile,
    reading: FReading,
) -> Result<TheoremReport<AdaptiveProfile>, EngineError> {
    if (game.rounds, game.depth) != (2, 1) {
        return Err(GameError::Invalid("t4 is the two-round game (k = 2, j = 1)".into()).into());
    }
    verify_adaptive(TheoremId::T4, game, profile, reading)
}

pub fn verify_kround_extension(
    game: &AdaptiveGame,
    profile: &AdaptiveProfile,
    reading: FReading,
) -> Result<TheoremReport<AdaptiveProfile>, EngineError> {
    verify_adaptive(TheoremId::Kround, game, profile, reading)
}

// t5: what no equilibrium of the two-round game looks like.

pub fn verify_theorem5(
    game: &AdaptiveGame,
    limit: u128,
) -> Result<TheoremReport<AdaptiveProfile>, EngineError> {
    if (game.rounds, game.depth) != (2, 1) {
        return Err(GameError::Invalid("t5 is the two-round game (k = 2, j = 1)".into()).into());
    }
    let t = &game.table;
    let y = t.y();
    let mut hypotheses = table_hypotheses(TheoremId::T5, t);
    let rev = t.leader_revolution();
    let lowest = t
        .leader_levels()
        .values()
        .min()
        .copied()
        .unwrap_or(Payoff::ZERO);
    let part1 = Check::new(
        "part_I_applicable",
        rev > lowest,
        format!("u'^P = {rev}, smallest u^P_x = {lowest}"),
    );
    let keen: Vec<usize> = (0..t.n())
        .filter(|&i| t.member_revolution(i) > t.member_in_pool(i, y).scale(2, 1))
        .collect();
    let part2 = Check::new(
        "part_II_applicable",
        !keen.is_empty(),
        format!("members with u'_i > 2u^i_y: {}", member_list(&keen)),
    );
    if !(part1.holds || part2.holds) {
        hypotheses.extend([part1, part2]);
        return Err(EngineError::Hypothesis {
            theorem: TheoremId::T5,
            checks: hypotheses,
        });
    }
    let hypotheses = gate(TheoremId::T5, hypotheses)?;

    let ne = enumerate_pure_nash(game, limit)?;
    let mut witnesses = Vec::new();
    let (mut applied1, mut applied2) = (0usize, 0usize);
    for eq in &ne {
        let (realized, _) = game.realize(eq);
        let (r1, r2) = (&realized.rounds[0], &realized.rounds[1]);
        let pays = play_rounds(t, &realized.rounds);
        let followers: Vec<usize> = eq.signal_followers().collect();
        let l = stake_of(t, followers.iter().copied());
        if part1.holds
            && r1.any_rebel()
            && r1.leader == LeaderAction::Censor
            && rev > t.leader_in_pool(y - l)
        {
            applied1 += 1;
            if r2.leader == LeaderAction::Censor {
                witnesses.push(Witness {
                    profile: eq.clone(),
                    subgame: None,
                    violations: Vec::new(),
                    note: format!(
                        "part I: the leader still censors in round 2 (l = {l}, u^P_(y-l) = {})",
                        t.leader_in_pool(y - l)
                    ),
                });
            }
        }
        if !followers.is_empty() && r2.leader == LeaderAction::NotCensor {
            for &i in &keen {
                applied2 += 1;
                let got = pays[1].members[i];
                if got != t.member_revolution(i) {
                    witnesses.push(Witness {
                        profile: eq.clone(),
                        subgame: None,
                        violations: Vec::new(),
                        note: format!(
                            "part II: member {} gets {got} in round 2, not u' = {}",
                            i + 1,
                            t.member_revolution(i)
                        ),
                    });
                }
            }
        }
    }
    let conditions = vec![
        Check::new(
            part1.name,
            part1.holds,
            format!("{}; applied to {applied1} equilibria", part1.detail),
        ),
        Check::new(
            part2.name,
            part2.holds,
            format!("{}; applied {applied2} times", part2.detail),
        ),
    ];
    Ok(TheoremReport {
        theorem: TheoremId::T5,
        verdict: if witnesses.is_empty() {
            Verdict::Confirmed
        } else {
            Verdict::Counterexample(witnesses)
        },
        hypotheses,
        conditions,
        checked: ne.len(),
        equilibria: ne,
    })
}

// t6: the two-pool game.

pub fn theorem6_conditions(game: &TwoPoolGame, profile: &TwoPoolProfile) -> Vec<Check> {
    let [t1, t2] = &game.pools;
    let followers: Vec<usize> = profile
        .pool2
        .members
        .iter()
        .enumerate()
        .filter(|(_, p)| **p == Policy::Signal)
        .map(|(i, _)| i)
        .collect();
    let l = stake_of(t2, followers.iter().copied());
    let (rev2, at2) = (t2.leader_revolution(), t2.leader_in_pool(t2.y() - l));
    let rebels: Vec<usize> = profile
        .pool1
        .members
        .iter()
        .enumerate()
        .filter(|(_, a)| a.is_defiant())
        .map(|(i, _)| i)
        .collect();
    let mut out = vec![
        Check::new(
            "K",
            rev2 >= at2,
            format!("u'^P2 = {rev2}, u^P2_(y2-l) = {at2}, l = {l}"),
        ),
        Check::new(
            "L",
            rebels.len() == 1,
            format!("pool-1 rebels {}", member_list(&rebels)),
        ),
        Check::new(
            "J",
            followers.len() >= 2,
            format!("pool-2 signal followers {}", member_list(&followers)),
        ),
    ];
    if let [i] = rebels[..] {
        let (rev1, at1) = (
            t1.leader_revolution(),
            t1.leader_in_pool(t1.y() - t1.member_stake(i)),
        );
        out.push(Check::new(
            "F_leader",
            rev1 <= at1,
            format!("u'^P1 = {rev1}, u^P1_(y1-s_{}) = {at1}", i + 1),
        ));
        let (r, u) = (t1.member_revolution(i), t1.member_in_pool(i, t1.y()));
        out.push(Check::new(
            "D",
            game.event_d(i),
            format!("member {}: u' = {r} vs 2*u_y1 = {}", i + 1, u.scale(2, 1)),
        ));
    } else {
        out.push(Check::new("F_leader", false, "no unique rebel"));
        out.push(Check::new("D", false, "no unique rebel"));
    }
    out
}

pub fn verify_theorem6(
    game: &TwoPoolGame,
    profile: &TwoPoolProfile,
) -> Result<TheoremReport<TwoPoolProfile>, EngineError> {
    let checks: Vec<Check> = game
        .pools
        .iter()
        .enumerate()
        .flat_map(|(k, t)| {
            table_hypotheses(TheoremId::T6, t)
                .into_iter()
                .map(move |c| Check {
                    name: format!("pool{}_{}", k + 1, c.name),
                    ..c
                })
        })
        .collect();
    let hypotheses = gate(TheoremId::T6, checks)?;
    game.check_profile(profile)?;
    if profile.pool1.leader != LeaderAction::Censor || profile.pool2.leader != Policy::Signal {
        return Err(GameError::ProfileShape(format!(
            "P1 must play CENSOR and P2 must play Y, got {}",
            profile
        ))
        .into());
    }
    let conditions = theorem6_conditions(game, profile);
    let verdict = scan_verdict(game, profile, "profitable unilateral deviation")?;
    Ok(TheoremReport {
        theorem: TheoremId::T6,
        equilibria: if verdict == Verdict::Confirmed {
            vec![profile.clone()]
        } else {
            Vec::new()
        },
        verdict,
        hypotheses,
        conditions,
        checked: 1,
    })
}
