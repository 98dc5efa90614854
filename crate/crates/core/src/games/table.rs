use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::payoff::Payoff;
use super::GameError;
use crate::ledger::Stake;

/// Utility parameters of one pool's censorship game.
///
/// Pool stake levels always include the leader's own stake: a member who
/// capitulates alongside capitulators `C` is paid `u^i` at
/// `s_P + sum(s_j, j in C)`. Tables must list every level reachable in the
/// game (see [`UtilityTable::required_leader_levels`]); extra levels are
/// allowed and ignored by the game rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct UtilityTable {
    leader_stake: Stake,
    leader_in_pool: BTreeMap<Stake, Payoff>,
    leader_revolution: Payoff,
    members: Vec<MemberParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberParams {
    pub stake: Stake,
    pub in_pool: BTreeMap<Stake, Payoff>,
    pub revolution: Payoff,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLeader {
    in_pool: BTreeMap<Stake, Payoff>,
    revolution: Payoff,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMember {
    stake: Stake,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    in_pool: Option<BTreeMap<Stake, Payoff>>,
    revolution: Payoff,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    leader_stake: Stake,
    leader: RawLeader,
    /// Shared `u^i_x` for members without their own `in_pool`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    member_in_pool: Option<BTreeMap<Stake, Payoff>>,
    members: Vec<RawMember>,
}

impl TryFrom<RawTable> for UtilityTable {
    type Error = GameError;

    fn try_from(raw: RawTable) -> Result<Self, GameError> {
        if let Some(n) = raw.n {
            if n != raw.members.len() {
                return Err(GameError::Invalid(format!(
                    "n = {n} but {} members are listed",
                    raw.members.len()
                )));
            }
        }
        let members = raw
            .members
            .into_iter()
            .enumerate()
            .map(|(i, m)| {
                let in_pool = m
                    .in_pool
                    .or_else(|| raw.member_in_pool.clone())
                    .ok_or_else(|| {
                        GameError::Invalid(format!("member {} has no in_pool table", i + 1))
                    })?;
                Ok(MemberParams {
                    stake: m.stake,
                    in_pool,
                    revolution: m.revolution,
                })
            })
            .collect::<Result<Vec<_>, GameError>>()?;
        UtilityTable::new(
            raw.leader_stake,
            raw.leader.in_pool,
            raw.leader.revolution,
            members,
        )
    }
}

impl From<UtilityTable> for RawTable {
    fn from(t: UtilityTable) -> Self {
        RawTable {
            n: Some(t.members.len()),
            leader_stake: t.leader_stake,
            leader: RawLeader {
                in_pool: t.leader_in_pool,
                revolution: t.leader_revolution,
            },
            member_in_pool: None,
            members: t
                .members
                .into_iter()
                .map(|m| RawMember {
                    stake: m.stake,
                    in_pool: Some(m.in_pool),
                    revolution: m.revolution,
                })
                .collect(),
        }
    }
}

/// All subset sums of `stakes`.
pub fn subset_sums(stakes: impl IntoIterator<Item = Stake>) -> BTreeSet<Stake> {
    let mut sums = BTreeSet::from([0]);
    for s in stakes {
        let shifted: Vec<Stake> = sums.iter().map(|x| x + s).collect();
        sums.extend(shifted);
    }
    sums
}

/// One evaluated hypothesis or condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, holds: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            holds,
            detail: detail.into(),
        }
    }
}

impl UtilityTable {
    pub fn new(
        leader_stake: Stake,
        leader_in_pool: BTreeMap<Stake, Payoff>,
        leader_revolution: Payoff,
        members: Vec<MemberParams>,
    ) -> Result<Self, GameError> {
        if members.is_empty() {
            return Err(GameError::Invalid(
                "a pool needs at least one member".into(),
            ));
        }
        if members.len() > 24 {
            return Err(GameError::Invalid(
                "at most 24 members are supported".into(),
            ));
        }
        let t = UtilityTable {
            leader_stake,
            leader_in_pool,
            leader_revolution,
            members,
        };
        for x in t.required_leader_levels() {
            if !t.leader_in_pool.contains_key(&x) {
                return Err(GameError::MissingLevel {
                    who: "leader".into(),
                    level: x,
                });
            }
        }
        for i in 0..t.n() {
            for x in t.required_member_levels(i) {
                if !t.members[i].in_pool.contains_key(&x) {
                    return Err(GameError::MissingLevel {
                        who: format!("member {}", i + 1),
                        level: x,
                    });
                }
            }
        }
        Ok(t)
    }

    /// Same table shape for every member: `member_in_pool` and `u'` shared.
    pub fn uniform(
        leader_stake: Stake,
        member_stakes: &[Stake],
        leader_in_pool: BTreeMap<Stake, Payoff>,
        leader_revolution: Payoff,
        member_in_pool: BTreeMap<Stake, Payoff>,
        member_revolution: Payoff,
    ) -> Result<Self, GameError> {
        let members = member_stakes
            .iter()
            .map(|&stake| MemberParams {
                stake,
                in_pool: member_in_pool.clone(),
                revolution: member_revolution,
            })
            .collect();
        UtilityTable::new(leader_stake, leader_in_pool, leader_revolution, members)
    }

    pub fn n(&self) -> usize {
        self.members.len()
    }

    pub fn leader_stake(&self) -> Stake {
        self.leader_stake
    }

    pub fn member_stake(&self, i: usize) -> Stake {
        self.members[i].stake
    }

    pub fn members(&self) -> &[MemberParams] {
        &self.members
    }

    /// `y`: all member stake plus the leader's.
    pub fn y(&self) -> Stake {
        self.leader_stake + self.members.iter().map(|m| m.stake).sum::<Stake>()
    }

    pub fn required_leader_levels(&self) -> BTreeSet<Stake> {
        subset_sums(self.members.iter().map(|m| m.stake))
            .into_iter()
            .map(|x| x + self.leader_stake)
            .collect()
    }

    pub fn required_member_levels(&self, i: usize) -> BTreeSet<Stake> {
        let base = self.leader_stake + self.members[i].stake;
        subset_sums(
            self.members
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, m)| m.stake),
        )
        .into_iter()
        .map(|x| x + base)
        .collect()
    }

    /// `u^P_x`. Panics on a level outside the validated set.
    pub fn leader_in_pool(&self, x: Stake) -> Payoff {
        *self
            .leader_in_pool
            .get(&x)
            .unwrap_or_else(|| panic!("leader level {x} is not reachable in this game"))
    }

    pub fn leader_levels(&self) -> &BTreeMap<Stake, Payoff> {
        &self.leader_in_pool
    }

    pub fn try_leader_in_pool(&self, x: Stake) -> Option<Payoff> {
        self.leader_in_pool.get(&x).copied()
    }

    /// `u'^P`.
    pub fn leader_revolution(&self) -> Payoff {
        self.leader_revolution
    }

    /// `u^i_x`. Panics on a level outside the validated set.
    pub fn member_in_pool(&self, i: usize, x: Stake) -> Payoff {
        *self.members[i]
            .in_pool
            .get(&x)
            .unwrap_or_else(|| panic!("member {} level {x} is not reachable", i + 1))
    }

    pub fn try_member_in_pool(&self, i: usize, x: Stake) -> Option<Payoff> {
        self.members[i].in_pool.get(&x).copied()
    }

    /// `u'_i`.
    pub fn member_revolution(&self, i: usize) -> Payoff {
        self.members[i].revolution
    }

    pub fn set_member_revolution(&mut self, i: usize, v: Payoff) {
        self.members[i].revolution = v;
    }

    pub fn set_leader_revolution(&mut self, v: Payoff) {
        self.leader_revolution = v;
    }

    /// Overwrites an existing level; adding unreachable levels is allowed.
    pub fn set_member_in_pool(&mut self, i: usize, x: Stake, v: Payoff) {
        self.members[i].in_pool.insert(x, v);
    }

    pub fn set_leader_in_pool(&mut self, x: Stake, v: Payoff) {
        self.leader_in_pool.insert(x, v);
    }

    // Hypotheses used by the theorems. Each returns a named check.

    /// `u^i_x > 0` for every listed level `x >= s_i + s_P`.
    pub fn check_positive_in_pool(&self) -> Check {
        let bad: Vec<String> = self
            .members
            .iter()
            .enumerate()
            .flat_map(|(i, m)| {
                let floor = m.stake + self.leader_stake;
                m.in_pool
                    .iter()
                    .filter(move |(x, v)| **x >= floor && **v <= Payoff::ZERO)
                    .map(move |(x, v)| format!("u^{}_{x} = {v}", i + 1))
            })
            .collect();
        Check::new(
            "positive_in_pool",
            bad.is_empty(),
            if bad.is_empty() {
                "every member has positive utility in the old pool".into()
            } else {
                bad.join(", ")
            },
        )
    }

    /// Some member strictly prefers the revolution: `u'_i > u^i_y`.
    pub fn check_some_member_prefers_revolution(&self) -> Check {
        let y = self.y();
        let who: Vec<String> = (0..self.n())
            .filter(|&i| self.member_revolution(i) > self.member_in_pool(i, y))
            .map(|i| format!("member {}", i + 1))
            .collect();
        Check::new(
            "some_member_prefers_revolution",
            !who.is_empty(),
            if who.is_empty() {
                "no member has u'_i > u^i_y".into()
            } else {
                who.join(", ")
            },
        )
    }

    /// `u'^P <= u^P_y`.
    pub fn check_leader_prefers_intact(&self) -> Check {
        let (rev, intact) = (self.leader_revolution, self.leader_in_pool(self.y()));
        Check::new(
            "leader_prefers_intact_pool",
            rev <= intact,
            format!("u'^P = {rev}, u^P_y = {intact}"),
        )
    }

    /// `u^P_x` and every `u^i_x` non-decreasing in `x`.
    pub fn check_monotone(&self) -> Check {
        fn drops(m: &BTreeMap<Stake, Payoff>) -> Option<(Stake, Stake)> {
            m.iter()
                .zip(m.iter().skip(1))
                .find(|((_, a), (_, b))| b < a)
                .map(|((x, _), (x2, _))| (*x, *x2))
        }
        let mut bad = Vec::new();
        if let Some((a, b)) = drops(&self.leader_in_pool) {
            bad.push(format!("u^P drops from {a} to {b}"));
        }
        for (i, m) in self.members.iter().enumerate() {
            if let Some((a, b)) = drops(&m.in_pool) {
                bad.push(format!("u^{} drops from {a} to {b}", i + 1));
            }
        }
        Check::new(
            "monotone_in_stake",
            bad.is_empty(),
            if bad.is_empty() {
                "non-decreasing".into()
            } else {
                bad.join(", ")
            },
        )
    }

    /// `u^i_x >= 0` everywhere.
    pub fn check_nonnegative(&self) -> Check {
        let bad: Vec<String> = self
            .members
            .iter()
            .enumerate()
            .flat_map(|(i, m)| {
                m.in_pool
                    .iter()
                    .filter(|(_, v)| **v < Payoff::ZERO)
                    .map(move |(x, v)| format!("u^{}_{x} = {v}", i + 1))
            })
            .collect();
        Check::new(
            "nonnegative_in_pool",
            bad.is_empty(),
            if bad.is_empty() {
                "all member utilities are non-negative".into()
            } else {
                bad.join(", ")
            },
        )
    }
}
