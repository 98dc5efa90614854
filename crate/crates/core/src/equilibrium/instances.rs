//! [`FiniteGame`] views of the censorship games.

use crate::games::{
    all_committed_profiles, all_profiles, literal_sequences, play_rounds, round_payoffs,
    switch_actions, totals, AdaptiveGame, AdaptiveProfile, BinaryAction, GameError, LeaderAction,
    MemberAction, MultiRoundProfile, Payoff, Player, Policy, Profile, Strategy, TwoPoolGame,
    TwoPoolProfile, UtilityTable,
};

use super::FiniteGame;

fn row_label<A: BinaryAction>(row: &[A]) -> String {
    row.iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join("-")
}

fn members_then_leader(n: usize) -> Vec<Player> {
    (0..n).map(Player::Member).chain([Player::Leader]).collect()
}

/// The single-round game.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleGame {
    pub table: UtilityTable,
}

impl SingleGame {
    pub fn new(table: UtilityTable) -> Self {
        SingleGame { table }
    }
}

impl FiniteGame for SingleGame {
    type Profile = Profile;

    fn players(&self) -> Vec<Player> {
        members_then_leader(self.table.n())
    }

    fn check(&self, p: &Profile) -> Result<(), GameError> {
        if p.members.len() != self.table.n() {
            return Err(GameError::ProfileShape(format!(
                "{} member actions for {} members",
                p.members.len(),
                self.table.n()
            )));
        }
        Ok(())
    }

    fn payoffs(&self, p: &Profile) -> Vec<Payoff> {
        let r = round_payoffs(&self.table, &p.members, p.leader, false);
        let mut out = r.members;
        out.push(r.leader);
        out
    }

    fn deviations(&self, p: &Profile, idx: usize) -> Vec<(String, Profile)> {
        let mut q = p.clone();
        let label = if idx < p.members.len() {
            let a = MemberAction::from_defiant(!p.members[idx].is_defiant());
            q.members[idx] = a;
            a.name()
        } else {
            let a = LeaderAction::from_defiant(!p.leader.is_defiant());
            q.leader = a;
            a.name()
        };
        vec![(label.to_string(), q)]
    }

    fn space_size(&self) -> u128 {
        1u128 << (self.table.n() + 1)
    }

    fn profiles(&self) -> Vec<Profile> {
        let mut v: Vec<Profile> = all_profiles(self.table.n()).collect();
        v.sort();
        v
    }
}

/// The `m`-round game under the commitment rule. With `prefix = r` the
/// first `r` rounds are frozen as played and only later rounds may be
/// changed: this is subgame `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiGame {
    pub table: UtilityTable,
    pub rounds: usize,
    pub prefix: usize,
}

impl MultiGame {
    pub fn new(table: UtilityTable, rounds: usize) -> Self {
        MultiGame {
            table,
            rounds,
            prefix: 0,
        }
    }

    pub fn subgame(&self, r: usize) -> Self {
        MultiGame {
            prefix: r,
            ..self.clone()
        }
    }

    fn continuations<A: BinaryAction>(&self, row: &[A]) -> Vec<Vec<A>> {
        if row[..self.prefix].iter().any(|a| a.is_defiant()) {
            return Vec::new();
        }
        (self.prefix + 1..=self.rounds)
            .map(Some)
            .chain([None])
            .map(|s| switch_actions::<A>(self.rounds, s))
            .filter(|alt| alt.as_slice() != row)
            .collect()
    }
}

impl FiniteGame for MultiGame {
    type Profile = MultiRoundProfile;

    fn players(&self) -> Vec<Player> {
        members_then_leader(self.table.n())
    }

    fn check(&self, p: &MultiRoundProfile) -> Result<(), GameError> {
        if p.m() != self.rounds {
            return Err(GameError::ProfileShape(format!(
                "{} rounds given, the game has {}",
                p.m(),
                self.rounds
            )));
        }
        p.check_shape(&self.table)?;
        p.check_commitment()
    }

    fn payoffs(&self, p: &MultiRoundProfile) -> Vec<Payoff> {
        totals(&play_rounds(&self.table, &p.rounds), self.table.n())
    }

    fn deviations(&self, p: &MultiRoundProfile, idx: usize) -> Vec<(String, MultiRoundProfile)> {
        let n = self.table.n();
        if idx < n {
            let row: Vec<MemberAction> = p.member_actions(idx).collect();
            self.continuations(&row)
                .into_iter()
                .map(|alt| {
                    let mut q = p.clone();
                    for (r, a) in alt.iter().enumerate() {
                        q.rounds[r].members[idx] = *a;
                    }
                    (row_label(&alt), q)
                })
                .collect()
        } else {
            let row: Vec<LeaderAction> = p.leader_actions().collect();
            self.continuations(&row)
                .into_iter()
                .map(|alt| {
                    let mut q = p.clone();
                    for (r, a) in alt.iter().enumerate() {
                        q.rounds[r].leader = *a;
                    }
                    (row_label(&alt), q)
                })
                .collect()
        }
    }

    fn space_size(&self) -> u128 {
        (self.rounds as u128 + 1).saturating_pow(self.table.n() as u32 + 1)
    }

    fn profiles(&self) -> Vec<MultiRoundProfile> {
        all_committed_profiles(self.table.n(), self.rounds)
    }
}

/// Deviations are literal action sequences: with everyone else's policy
/// fixed, a deviator faces a single history, so its choice reduces to what
/// it plays in each round.
impl FiniteGame for AdaptiveGame {
    type Profile = AdaptiveProfile;

    fn players(&self) -> Vec<Player> {
        members_then_leader(self.table.n())
    }

    fn check(&self, p: &AdaptiveProfile) -> Result<(), GameError> {
        self.check_profile(p)
    }

    fn payoffs(&self, p: &AdaptiveProfile) -> Vec<Payoff> {
        self.payoffs_unchecked(p)
    }

    fn deviations(&self, p: &AdaptiveProfile, idx: usize) -> Vec<(String, AdaptiveProfile)> {
        let (realized, _) = self.realize(p);
        let n = self.table.n();
        if idx < n {
            let row: Vec<MemberAction> = realized.member_actions(idx).collect();
            literal_sequences::<MemberAction>(self.rounds)
                .into_iter()
                .filter(|seq| *seq != row)
                .map(|seq| {
                    let mut q = p.clone();
                    q.members[idx] = Strategy::literal(&seq, self.depth);
                    (row_label(&seq), q)
                })
                .collect()
        } else {
            let row: Vec<LeaderAction> = realized.leader_actions().collect();
            literal_sequences::<LeaderAction>(self.rounds)
                .into_iter()
                .filter(|seq| *seq != row)
                .map(|seq| {
                    let mut q = p.clone();
                    q.leader = Strategy::literal(&seq, self.depth);
                    (row_label(&seq), q)
                })
                .collect()
        }
    }

    fn space_size(&self) -> u128 {
        AdaptiveGame::space_size(self)
    }

    fn profiles(&self) -> Vec<AdaptiveProfile> {
        self.all_profiles()
    }
}

/// Pool-1 players flip their round-1 action; pool-2 players, who move once
/// at a single history, switch to the other constant policy.
impl FiniteGame for TwoPoolGame {
    type Profile = TwoPoolProfile;

    fn players(&self) -> Vec<Player> {
        TwoPoolGame::players(self)
    }

    fn check(&self, p: &TwoPoolProfile) -> Result<(), GameError> {
        self.check_profile(p)
    }

    fn payoffs(&self, p: &TwoPoolProfile) -> Vec<Payoff> {
        self.outcome_unchecked(p).totals
    }

    fn deviations(&self, p: &TwoPoolProfile, idx: usize) -> Vec<(String, TwoPoolProfile)> {
        let n1 = self.pools[0].n();
        let mut q = p.clone();
        if idx < n1 {
            let a = MemberAction::from_defiant(!p.pool1.members[idx].is_defiant());
            q.pool1.members[idx] = a;
            return vec![(a.name().to_string(), q)];
        }
        if idx == n1 {
            let a = LeaderAction::from_defiant(!p.pool1.leader.is_defiant());
            q.pool1.leader = a;
            return vec![(a.name().to_string(), q)];
        }
        let o = self.outcome_unchecked(p);
        let i2 = idx - n1 - 1;
        if i2 < self.pools[1].n() {
            let a = MemberAction::from_defiant(!o.pool2_actions.0[i2].is_defiant());
            q.pool2.members[i2] = Policy::Always(a);
            vec![(q.pool2.members[i2].to_string(), q)]
        } else {
            let a = LeaderAction::from_defiant(!o.pool2_actions.1.is_defiant());
            q.pool2.leader = Policy::Always(a);
            vec![(q.pool2.leader.to_string(), q)]
        }
    }

    fn space_size(&self) -> u128 {
        let (n1, n2) = (self.pools[0].n() as u32, self.pools[1].n() as u32);
        (1u128 << (n1 + 1)).saturating_mul(3u128.saturating_pow(n2 + 1))
    }

    fn profiles(&self) -> Vec<TwoPoolProfile> {
        self.all_profiles()
    }
}
