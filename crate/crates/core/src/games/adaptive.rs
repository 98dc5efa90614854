//! Adaptive play with signalling.
//!
//! A `k`-round game with signal depth `j` has every player commit to an
//! opening of `j` actions and a policy for the remaining `k - j` rounds.
//! The signal fires when some member rebelled in every one of the first
//! `j` rounds; `X_j` (members) rebels and `Y_j` (leader) stops censoring
//! exactly when it fires. Censored rebels count: they are seen off-chain.
//! The two-round game is `k = 2`, `j = 1`.

use std::fmt;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use super::multi::{play_rounds, totals, MultiRoundProfile};
use super::payoff::Payoff;
use super::single::{BinaryAction, LeaderAction, MemberAction, Profile};
use super::table::UtilityTable;
use super::GameError;

/// Policy for the rounds after the opening.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Policy<A> {
    Always(A),
    /// `X_j` for members, `Y_j` for the leader.
    Signal,
    /// A literal action per remaining round; used for deviations.
    Fixed(Vec<A>),
}

impl<A: BinaryAction> Policy<A> {
    pub fn resolve(&self, fired: bool, offset: usize) -> A {
        match self {
            Policy::Always(a) => *a,
            Policy::Signal => A::from_defiant(fired),
            Policy::Fixed(v) => v[offset],
        }
    }

    /// The policy alphabet used for enumeration.
    pub fn alphabet() -> [Policy<A>; 3] {
        [
            Policy::Always(A::COMPLIANT),
            Policy::Always(A::DEFIANT),
            Policy::Signal,
        ]
    }
}

impl<A: BinaryAction> fmt::Display for Policy<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Always(a) => write!(f, "ALWAYS_{}", a.name()),
            Policy::Signal => f.write_str(A::SIGNAL),
            Policy::Fixed(v) => {
                f.write_str("[")?;
                for (k, a) in v.iter().enumerate() {
                    if k > 0 {
                        f.write_str("-")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str("]")
            }
        }
    }
}

impl<A: BinaryAction> Serialize for Policy<A> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Policy::Fixed(v) => s.collect_seq(v.iter().map(|a| a.name())),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawPolicy {
    Name(String),
    Fixed(Vec<String>),
}

impl<'de, A: BinaryAction> Deserialize<'de> for Policy<A> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match RawPolicy::deserialize(d)? {
            RawPolicy::Name(s) => parse_policy(&s).map_err(de::Error::custom),
            RawPolicy::Fixed(v) => v
                .iter()
                .map(|s| {
                    A::parse(s).ok_or_else(|| de::Error::custom(format!("unknown action `{s}`")))
                })
                .collect::<Result<Vec<A>, _>>()
                .map(Policy::Fixed),
        }
    }
}

pub fn parse_policy<A: BinaryAction>(s: &str) -> Result<Policy<A>, GameError> {
    let t = s.trim().to_ascii_uppercase();
    if t == A::SIGNAL || t == "SIGNAL" || t.starts_with(&format!("{}_", A::SIGNAL)) {
        return Ok(Policy::Signal);
    }
    if let Some(rest) = t.strip_prefix("ALWAYS_") {
        if let Some(a) = A::parse(rest) {
            return Ok(Policy::Always(a));
        }
    }
    Err(GameError::Invalid(format!("unknown policy `{s}`")))
}

/// Opening actions followed by a policy.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Strategy<A: BinaryAction> {
    #[serde(deserialize_with = "one_or_many")]
    pub opening: Vec<A>,
    pub policy: Policy<A>,
}

fn one_or_many<'de, D: Deserializer<'de>, A: BinaryAction>(d: D) -> Result<Vec<A>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        One(String),
        Many(Vec<String>),
    }
    let names = match Raw::deserialize(d)? {
        Raw::One(s) => vec![s],
        Raw::Many(v) => v,
    };
    names
        .iter()
        .map(|s| A::parse(s).ok_or_else(|| de::Error::custom(format!("unknown action `{s}`"))))
        .collect()
}

impl<A: BinaryAction> Strategy<A> {
    pub fn new(opening: Vec<A>, policy: Policy<A>) -> Self {
        Strategy { opening, policy }
    }

    /// Two-round shorthand.
    pub fn two(first: A, policy: Policy<A>) -> Self {
        Strategy {
            opening: vec![first],
            policy,
        }
    }

    /// A strategy that plays `actions` whatever happens.
    pub fn literal(actions: &[A], j: usize) -> Self {
        Strategy {
            opening: actions[..j].to_vec(),
            policy: Policy::Fixed(actions[j..].to_vec()),
        }
    }

    fn check(&self, k: usize, j: usize, who: &str) -> Result<(), GameError> {
        if self.opening.len() != j {
            return Err(GameError::ProfileShape(format!(
                "{who}: opening has {} actions, signal depth is {j}",
                self.opening.len()
            )));
        }
        if let Policy::Fixed(v) = &self.policy {
            if v.len() != k - j {
                return Err(GameError::ProfileShape(format!(
                    "{who}: fixed policy has {} actions for {} rounds",
                    v.len(),
                    k - j
                )));
            }
        }
        Ok(())
    }
}

impl<A: BinaryAction> fmt::Display for Strategy<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, a) in self.opening.iter().enumerate() {
            if k > 0 {
                f.write_str("-")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ", {})", self.policy)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AdaptiveProfile {
    pub members: Vec<Strategy<MemberAction>>,
    pub leader: Strategy<LeaderAction>,
}

impl fmt::Display for AdaptiveProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for m in &self.members {
            write!(f, "{m} ")?;
        }
        write!(f, "| {}]", self.leader)
    }
}

impl AdaptiveProfile {
    /// Members whose policy follows the signal.
    pub fn signal_followers(&self) -> impl Iterator<Item = usize> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, s)| s.policy == Policy::Signal)
            .map(|(i, _)| i)
    }

    /// Members who rebel in every opening round.
    pub fn sustained_rebels(&self) -> impl Iterator<Item = usize> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.opening.is_empty() && s.opening.iter().all(|a| a.is_defiant()))
            .map(|(i, _)| i)
    }
}

/// A `k`-round adaptive game with signal depth `j` (`1 <= j < k`).
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveGame {
    pub table: UtilityTable,
    pub rounds: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolution {
    pub realized: MultiRoundProfile,
    pub signal: bool,
    /// Members first, then the leader.
    pub totals: Vec<Payoff>,
}

impl AdaptiveGame {
    pub fn new(table: UtilityTable, rounds: usize, depth: usize) -> Result<Self, GameError> {
        if rounds < 2 || depth < 1 || depth >= rounds {
            return Err(GameError::Invalid(format!(
                "adaptive games need k >= 2 and 1 <= j < k (k = {rounds}, j = {depth})"
            )));
        }
        Ok(AdaptiveGame {
            table,
            rounds,
            depth,
        })
    }

    pub fn two_round(table: UtilityTable) -> Self {
        AdaptiveGame {
            table,
            rounds: 2,
            depth: 1,
        }
    }

    pub fn check_profile(&self, p: &AdaptiveProfile) -> Result<(), GameError> {
        if p.members.len() != self.table.n() {
            return Err(GameError::ProfileShape(format!(
                "{} member strategies for {} members",
                p.members.len(),
                self.table.n()
            )));
        }
        for (i, s) in p.members.iter().enumerate() {
            s.check(self.rounds, self.depth, &format!("member {}", i + 1))?;
        }
        p.leader.check(self.rounds, self.depth, "leader")
    }

    /// Realized play; the profile must already be checked.
    pub fn realize(&self, p: &AdaptiveProfile) -> (MultiRoundProfile, bool) {
        let (k, j) = (self.rounds, self.depth);
        let fired = p.sustained_rebels().next().is_some();
        let rounds = (0..k)
            .map(|r| {
                let pick_m = |s: &Strategy<MemberAction>| {
                    if r < j {
                        s.opening[r]
                    } else {
                        s.policy.resolve(fired, r - j)
                    }
                };
                Profile {
                    members: p.members.iter().map(pick_m).collect(),
                    leader: if r < j {
                        p.leader.opening[r]
                    } else {
                        p.leader.policy.resolve(fired, r - j)
                    },
                }
            })
            .collect();
        (MultiRoundProfile { rounds }, fired)
    }

    pub fn payoffs_unchecked(&self, p: &AdaptiveProfile) -> Vec<Payoff> {
        let (realized, _) = self.realize(p);
        totals(&play_rounds(&self.table, &realized.rounds), self.table.n())
    }

    pub fn resolve(&self, p: &AdaptiveProfile) -> Result<Resolution, GameError> {
        self.check_profile(p)?;
        let (realized, signal) = self.realize(p);
        let totals = totals(&play_rounds(&self.table, &realized.rounds), self.table.n());
        Ok(Resolution {
            realized,
            signal,
            totals,
        })
    }

    /// Every profile over the alphabet `{C,R}^j x {ALWAYS_C, ALWAYS_R, signal}`.
    pub fn all_profiles(&self) -> Vec<AdaptiveProfile> {
        let members = strategy_alphabet::<MemberAction>(self.depth);
        let leaders = strategy_alphabet::<LeaderAction>(self.depth);
        let n = self.table.n();
        let (km, kl) = (members.len(), leaders.len());
        let total = kl * km.pow(n as u32);
        let mut out: Vec<AdaptiveProfile> = (0..total)
            .map(|mut code| {
                let leader = leaders[code % kl].clone();
                code /= kl;
                let ms = (0..n)
                    .map(|_| {
                        let s = members[code % km].clone();
                        code /= km;
                        s
                    })
                    .collect();
                AdaptiveProfile {
                    members: ms,
                    leader,
                }
            })
            .collect();
        out.sort();
        out
    }

    pub fn space_size(&self) -> u128 {
        let per = 3u128 << self.depth;
        per.saturating_pow(self.table.n() as u32 + 1)
    }
}

pub fn strategy_alphabet<A: BinaryAction>(j: usize) -> Vec<Strategy<A>> {
    let mut out = Vec::new();
    for bits in 0u32..1 << j {
        let opening: Vec<A> = (0..j)
            .map(|r| A::from_defiant(bits >> (j - 1 - r) & 1 == 1))
            .collect();
        for policy in Policy::alphabet() {
            out.push(Strategy {
                opening: opening.clone(),
                policy,
            });
        }
    }
    out
}

/// All `2^k` literal action sequences.
pub fn literal_sequences<A: BinaryAction>(k: usize) -> Vec<Vec<A>> {
    (0u32..1 << k)
        .map(|bits| {
            (0..k)
                .map(|r| A::from_defiant(bits >> (k - 1 - r) & 1 == 1))
                .collect()
        })
        .collect()
}

/// Two-round realized play and totals.
pub fn resolve_adaptive(
    table: &UtilityTable,
    profile: &AdaptiveProfile,
) -> Result<Resolution, GameError> {
    let k = profile.leader.opening.len()
        + match &profile.leader.policy {
            Policy::Fixed(v) => v.len(),
            _ => 1,
        };
    let game = AdaptiveGame::new(table.clone(), k.max(2), profile.leader.opening.len())?;
    game.resolve(profile)
}
