use std::fmt;

use serde::{Deserialize, Serialize};

use super::payoff::Payoff;
use super::single::{
    round_payoffs, BinaryAction, LeaderAction, MemberAction, Profile, RoundPayoffs,
};
use super::table::UtilityTable;
use super::{GameError, Player};

/// Per-round joint actions of an `m`-round game.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiRoundProfile {
    pub rounds: Vec<Profile>,
}

impl fmt::Display for MultiRoundProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, r) in self.rounds.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

/// First round (one-based) at which a player turns defiant, `None` if never.
pub fn switch_round<A: BinaryAction>(actions: impl IntoIterator<Item = A>) -> Option<usize> {
    actions
        .into_iter()
        .position(|a| a.is_defiant())
        .map(|k| k + 1)
}

fn committed<A: BinaryAction>(actions: impl IntoIterator<Item = A>) -> Result<(), usize> {
    let mut defiant = false;
    for (k, a) in actions.into_iter().enumerate() {
        if defiant && !a.is_defiant() {
            return Err(k + 1);
        }
        defiant |= a.is_defiant();
    }
    Ok(())
}

/// Actions of length `m` that are compliant before `switch` and defiant from
/// it on (`switch` one-based; `None` never switches).
pub fn switch_actions<A: BinaryAction>(m: usize, switch: Option<usize>) -> Vec<A> {
    (1..=m)
        .map(|r| A::from_defiant(switch.is_some_and(|s| r >= s)))
        .collect()
}

impl MultiRoundProfile {
    pub fn new(rounds: Vec<Profile>) -> Self {
        MultiRoundProfile { rounds }
    }

    pub fn m(&self) -> usize {
        self.rounds.len()
    }

    /// Builds a committed profile from per-player switch rounds.
    pub fn from_switches(m: usize, members: &[Option<usize>], leader: Option<usize>) -> Self {
        let member_rows: Vec<Vec<MemberAction>> =
            members.iter().map(|s| switch_actions(m, *s)).collect();
        let leader_row: Vec<LeaderAction> = switch_actions(m, leader);
        MultiRoundProfile {
            rounds: (0..m)
                .map(|r| Profile {
                    members: member_rows.iter().map(|row| row[r]).collect(),
                    leader: leader_row[r],
                })
                .collect(),
        }
    }

    pub fn member_actions(&self, i: usize) -> impl Iterator<Item = MemberAction> + '_ {
        self.rounds.iter().map(move |r| r.members[i])
    }

    pub fn leader_actions(&self) -> impl Iterator<Item = LeaderAction> + '_ {
        self.rounds.iter().map(|r| r.leader)
    }

    pub fn check_shape(&self, table: &UtilityTable) -> Result<(), GameError> {
        if self.rounds.is_empty() {
            return Err(GameError::ProfileShape("no rounds".into()));
        }
        for (k, r) in self.rounds.iter().enumerate() {
            if r.members.len() != table.n() {
                return Err(GameError::ProfileShape(format!(
                    "round {} has {} member actions for {} members",
                    k + 1,
                    r.members.len(),
                    table.n()
                )));
            }
        }
        Ok(())
    }

    /// Once NOTCENSOR or REBEL, always.
    pub fn check_commitment(&self) -> Result<(), GameError> {
        if let Err(round) = committed(self.leader_actions()) {
            return Err(GameError::Commitment {
                player: Player::Leader,
                round,
            });
        }
        let n = self.rounds.first().map_or(0, |r| r.members.len());
        for i in 0..n {
            if let Err(round) = committed(self.member_actions(i)) {
                return Err(GameError::Commitment {
                    player: Player::Member(i),
                    round,
                });
            }
        }
        Ok(())
    }
}

/// Round-by-round payoffs of a realized play. A revolution is absorbing:
/// every later round pays `u'` whatever is played. Commitment is not
/// required here, so adaptive plays can use it too.
pub fn play_rounds(table: &UtilityTable, rounds: &[Profile]) -> Vec<RoundPayoffs> {
    let mut absorbed = false;
    rounds
        .iter()
        .map(|r| {
            let p = round_payoffs(table, &r.members, r.leader, absorbed);
            absorbed = p.revolution;
            p
        })
        .collect()
}

/// Total payoff per player; members first, then the leader.
pub fn totals(rounds: &[RoundPayoffs], n: usize) -> Vec<Payoff> {
    let mut out = vec![Payoff::ZERO; n + 1];
    for r in rounds {
        for (i, v) in r.members.iter().enumerate() {
            out[i] += *v;
        }
        out[n] += r.leader;
    }
    out
}

pub fn multi_round_utility(
    table: &UtilityTable,
    profile: &MultiRoundProfile,
    player: Player,
) -> Result<Payoff, GameError> {
    profile.check_shape(table)?;
    profile.check_commitment()?;
    let t = totals(&play_rounds(table, &profile.rounds), table.n());
    match player {
        Player::Leader => Ok(t[table.n()]),
        Player::Member(i) if i < table.n() => Ok(t[i]),
        other => Err(GameError::UnknownPlayer(other)),
    }
}

/// Every committed profile of an `m`-round game, in canonical order.
pub fn all_committed_profiles(n: usize, m: usize) -> Vec<MultiRoundProfile> {
    let options: Vec<Option<usize>> = (1..=m).map(Some).chain([None]).collect();
    let k = options.len();
    let total = k.pow(n as u32 + 1);
    let mut out: Vec<MultiRoundProfile> = (0..total)
        .map(|mut code| {
            let mut pick = || {
                let o = options[code % k];
                code /= k;
                o
            };
            let leader = pick();
            let members: Vec<Option<usize>> = (0..n).map(|_| pick()).collect();
            MultiRoundProfile::from_switches(m, &members, leader)
        })
        .collect();
    out.sort();
    out
}
