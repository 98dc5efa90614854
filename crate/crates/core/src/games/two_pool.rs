//! Two pools over two rounds: pool 1 plays in round 1, pool 2 in round 2.
//!
//! Pool-2 players pick a round-2 policy. The signal they follow fires when
//! some pool-1 member rebelled in round 1 and, for that member, the
//! revolution is worth twice the intact pool (`u'_i >= 2 u^i_{y_1}`, the
//! event D).

use std::fmt;

use serde::{Deserialize, Serialize};

use super::adaptive::Policy;
use super::payoff::Payoff;
use super::single::{round_payoffs, BinaryAction, LeaderAction, MemberAction};
use super::table::UtilityTable;
use super::{GameError, Player};

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPoolGame {
    pub pools: [UtilityTable; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PoolOneActions {
    pub members: Vec<MemberAction>,
    pub leader: LeaderAction,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PoolTwoPolicies {
    pub members: Vec<Policy<MemberAction>>,
    pub leader: Policy<LeaderAction>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TwoPoolProfile {
    pub pool1: PoolOneActions,
    pub pool2: PoolTwoPolicies,
}

impl fmt::Display for TwoPoolProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for m in &self.pool1.members {
            write!(f, "{m},")?;
        }
        write!(f, "{} | ", self.pool1.leader)?;
        for m in &self.pool2.members {
            write!(f, "{m},")?;
        }
        write!(f, "{}]", self.pool2.leader)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoPoolOutcome {
    pub signal: bool,
    pub pool1_revolution: bool,
    pub pool2_revolution: bool,
    pub pool2_actions: (Vec<MemberAction>, LeaderAction),
    /// Order of [`TwoPoolGame::players`].
    pub totals: Vec<Payoff>,
}

impl TwoPoolGame {
    pub fn new(pool1: UtilityTable, pool2: UtilityTable) -> Self {
        TwoPoolGame {
            pools: [pool1, pool2],
        }
    }

    /// Pool-1 members, P_1, pool-2 members, P_2.
    pub fn players(&self) -> Vec<Player> {
        let mut out = Vec::new();
        for (k, t) in self.pools.iter().enumerate() {
            out.extend((0..t.n()).map(|i| Player::PoolMember(k, i)));
            out.push(Player::PoolLeader(k));
        }
        out
    }

    pub fn player_index(&self, p: Player) -> Option<usize> {
        self.players().iter().position(|q| *q == p)
    }

    /// Event D for pool-1 member `i`.
    pub fn event_d(&self, i: usize) -> bool {
        let t = &self.pools[0];
        t.member_revolution(i) >= t.member_in_pool(i, t.y()).scale(2, 1)
    }

    pub fn check_profile(&self, p: &TwoPoolProfile) -> Result<(), GameError> {
        if p.pool1.members.len() != self.pools[0].n() || p.pool2.members.len() != self.pools[1].n()
        {
            return Err(GameError::ProfileShape(
                "member count does not match the pools".into(),
            ));
        }
        let fixed = p
            .pool2
            .members
            .iter()
            .any(|m| matches!(m, Policy::Fixed(_)))
            || matches!(p.pool2.leader, Policy::Fixed(_));
        if fixed {
            return Err(GameError::ProfileShape(
                "pool-2 policies are ALWAYS_* or the signal".into(),
            ));
        }
        Ok(())
    }

    pub fn signal(&self, p: &TwoPoolProfile) -> bool {
        p.pool1
            .members
            .iter()
            .enumerate()
            .any(|(i, a)| a.is_defiant() && self.event_d(i))
    }

    pub fn outcome_unchecked(&self, p: &TwoPoolProfile) -> TwoPoolOutcome {
        let [t1, t2] = &self.pools;
        let signal = self.signal(p);
        let r1 = round_payoffs(t1, &p.pool1.members, p.pool1.leader, false);
        let a2: Vec<MemberAction> = p
            .pool2
            .members
            .iter()
            .map(|m| m.resolve(signal, 0))
            .collect();
        let l2 = p.pool2.leader.resolve(signal, 0);
        // A pool-1 revolution reaches pool 2 in round 2.
        let r2 = round_payoffs(t2, &a2, l2, r1.revolution);
        let pool2_revolution = !r1.revolution && r2.revolution;

        let mut totals = Vec::with_capacity(t1.n() + t2.n() + 2);
        let pool1_round2 = |i: Option<usize>| -> Payoff {
            let revolted = r1.revolution || pool2_revolution;
            match (i, revolted) {
                (Some(i), true) => t1.member_revolution(i),
                (Some(i), false) => t1.member_in_pool(i, t1.y()),
                (None, true) => t1.leader_revolution(),
                (None, false) => t1.leader_in_pool(t1.y()),
            }
        };
        for i in 0..t1.n() {
            totals.push(r1.members[i] + pool1_round2(Some(i)));
        }
        totals.push(r1.leader + pool1_round2(None));
        for i in 0..t2.n() {
            totals.push(t2.member_in_pool(i, t2.y()) + r2.members[i]);
        }
        totals.push(t2.leader_in_pool(t2.y()) + r2.leader);
        TwoPoolOutcome {
            signal,
            pool1_revolution: r1.revolution,
            pool2_revolution,
            pool2_actions: (a2, l2),
            totals,
        }
    }

    pub fn outcome(&self, p: &TwoPoolProfile) -> Result<TwoPoolOutcome, GameError> {
        self.check_profile(p)?;
        Ok(self.outcome_unchecked(p))
    }

    /// Every profile: pool-1 actions times pool-2 policies from
    /// `{ALWAYS_C, ALWAYS_R, signal}`.
    pub fn all_profiles(&self) -> Vec<TwoPoolProfile> {
        let (n1, n2) = (self.pools[0].n(), self.pools[1].n());
        let pool1: Vec<PoolOneActions> = super::single::all_profiles(n1)
            .map(|p| PoolOneActions {
                members: p.members,
                leader: p.leader,
            })
            .collect();
        let mp = Policy::<MemberAction>::alphabet();
        let lp = Policy::<LeaderAction>::alphabet();
        let total2 = 3usize.pow(n2 as u32 + 1);
        let mut out = Vec::with_capacity(pool1.len() * total2);
        for a in &pool1 {
            for mut code in 0..total2 {
                let leader = lp[code % 3].clone();
                code /= 3;
                let members = (0..n2)
                    .map(|_| {
                        let m = mp[code % 3].clone();
                        code /= 3;
                        m
                    })
                    .collect();
                out.push(TwoPoolProfile {
                    pool1: a.clone(),
                    pool2: PoolTwoPolicies { members, leader },
                });
            }
        }
        out.sort();
        out
    }
}

pub fn two_pool_utility(
    game: &TwoPoolGame,
    profile: &TwoPoolProfile,
) -> Result<Vec<(Player, Payoff)>, GameError> {
    let o = game.outcome(profile)?;
    Ok(game.players().into_iter().zip(o.totals).collect())
}
