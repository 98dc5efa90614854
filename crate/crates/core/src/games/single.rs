use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::payoff::Payoff;
use super::table::UtilityTable;
use super::GameError;
use crate::ledger::Stake;

/// A binary action: the compliant choice and the defiant one.
pub trait BinaryAction: Copy + Eq + Ord + fmt::Debug + fmt::Display + 'static {
    const COMPLIANT: Self;
    const DEFIANT: Self;
    /// Name of the signal-following policy (`X` for members, `Y` for leaders).
    const SIGNAL: &'static str;

    fn is_defiant(self) -> bool {
        self == Self::DEFIANT
    }

    fn from_defiant(defiant: bool) -> Self {
        if defiant {
            Self::DEFIANT
        } else {
            Self::COMPLIANT
        }
    }

    /// Long upper-case name, as used in files.
    fn name(self) -> &'static str;

    fn parse(s: &str) -> Option<Self>;
}

/// Pool member action. Alternative spellings are accepted as aliases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MemberAction {
    #[serde(rename = "CAPITULATE", alias = "CAP", alias = "capitulate")]
    Capitulate,
    #[serde(rename = "REBEL", alias = "REB", alias = "rebel")]
    Rebel,
}

/// Pool leader action. `cancel`/`notcancel` and `sensor` are aliases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LeaderAction {
    #[serde(
        rename = "CENSOR",
        alias = "censor",
        alias = "CANCEL",
        alias = "cancel",
        alias = "sensor"
    )]
    Censor,
    #[serde(
        rename = "NOTCENSOR",
        alias = "notcensor",
        alias = "NOTCANCEL",
        alias = "notcancel"
    )]
    NotCensor,
}

impl BinaryAction for MemberAction {
    const COMPLIANT: Self = MemberAction::Capitulate;
    const DEFIANT: Self = MemberAction::Rebel;
    const SIGNAL: &'static str = "X";

    fn name(self) -> &'static str {
        match self {
            MemberAction::Capitulate => "CAPITULATE",
            MemberAction::Rebel => "REBEL",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CAP" | "CAPITULATE" => Some(MemberAction::Capitulate),
            "REB" | "REBEL" => Some(MemberAction::Rebel),
            _ => None,
        }
    }
}

impl BinaryAction for LeaderAction {
    const COMPLIANT: Self = LeaderAction::Censor;
    const DEFIANT: Self = LeaderAction::NotCensor;
    const SIGNAL: &'static str = "Y";

    fn name(self) -> &'static str {
        match self {
            LeaderAction::Censor => "CENSOR",
            LeaderAction::NotCensor => "NOTCENSOR",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CENSOR" | "CANCEL" | "SENSOR" | "CEN" => Some(LeaderAction::Censor),
            "NOTCENSOR" | "NOTCANCEL" | "NOT" => Some(LeaderAction::NotCensor),
            _ => None,
        }
    }
}

impl fmt::Display for MemberAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MemberAction::Capitulate => "CAP",
            MemberAction::Rebel => "REB",
        })
    }
}

impl fmt::Display for LeaderAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One joint action of a single-pool round.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Profile {
    pub members: Vec<MemberAction>,
    pub leader: LeaderAction,
}

impl Profile {
    pub fn new(members: Vec<MemberAction>, leader: LeaderAction) -> Self {
        Profile { members, leader }
    }

    pub fn rebels(&self) -> impl Iterator<Item = usize> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, a)| a.is_defiant())
            .map(|(i, _)| i)
    }

    pub fn any_rebel(&self) -> bool {
        self.members.iter().any(|a| a.is_defiant())
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for m in &self.members {
            write!(f, "{m},")?;
        }
        write!(f, "{})", self.leader)
    }
}

impl FromStr for Profile {
    type Err = GameError;

    /// `"(REB,CAP,CENSOR)"`: member actions then the leader's.
    fn from_str(s: &str) -> Result<Self, GameError> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        let bad = || GameError::Invalid(format!("cannot parse profile `{s}`"));
        let (leader, members) = parts.split_last().ok_or_else(bad)?;
        let leader = LeaderAction::parse(leader).ok_or_else(bad)?;
        let members = members
            .iter()
            .map(|m| MemberAction::parse(m).ok_or_else(bad))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Profile { members, leader })
    }
}

/// Per-player payoffs of one round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundPayoffs {
    pub members: Vec<Payoff>,
    pub leader: Payoff,
    /// The new pool got registered this round (or earlier).
    pub revolution: bool,
}

/// `alpha = s_P + stake of capitulating members`.
pub fn alpha(table: &UtilityTable, members: &[MemberAction]) -> Stake {
    table.leader_stake()
        + members
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_defiant())
            .map(|(i, _)| table.member_stake(i))
            .sum::<Stake>()
}

/// Payoffs of one round of the single-pool game. With `absorbed` set a
/// revolution has already happened and everyone is paid `u'`.
pub fn round_payoffs(
    table: &UtilityTable,
    members: &[MemberAction],
    leader: LeaderAction,
    absorbed: bool,
) -> RoundPayoffs {
    let n = table.n();
    let any_rebel = members.iter().any(|a| a.is_defiant());
    let revolution = absorbed || (leader == LeaderAction::NotCensor && any_rebel);
    if revolution {
        return RoundPayoffs {
            members: (0..n).map(|i| table.member_revolution(i)).collect(),
            leader: table.leader_revolution(),
            revolution: true,
        };
    }
    let x = match leader {
        LeaderAction::Censor => alpha(table, members),
        // No rebel: nobody is censored.
        LeaderAction::NotCensor => table.y(),
    };
    RoundPayoffs {
        members: members
            .iter()
            .enumerate()
            .map(|(i, a)| match a {
                MemberAction::Rebel => Payoff::ZERO,
                MemberAction::Capitulate => table.member_in_pool(i, x),
            })
            .collect(),
        leader: table.leader_in_pool(x),
        revolution: false,
    }
}

fn check_shape(table: &UtilityTable, profile: &Profile) -> Result<(), GameError> {
    if profile.members.len() != table.n() {
        return Err(GameError::ProfileShape(format!(
            "{} member actions for {} members",
            profile.members.len(),
            table.n()
        )));
    }
    Ok(())
}

pub fn leader_utility(table: &UtilityTable, profile: &Profile) -> Result<Payoff, GameError> {
    check_shape(table, profile)?;
    Ok(round_payoffs(table, &profile.members, profile.leader, false).leader)
}

/// `i` is zero-based.
pub fn member_utility(
    table: &UtilityTable,
    profile: &Profile,
    i: usize,
) -> Result<Payoff, GameError> {
    check_shape(table, profile)?;
    if i >= table.n() {
        return Err(GameError::UnknownMember(i + 1));
    }
    Ok(round_payoffs(table, &profile.members, profile.leader, false).members[i])
}

/// All `2^(n+1)` profiles, in canonical order.
pub fn all_profiles(n: usize) -> impl Iterator<Item = Profile> {
    (0u64..1 << (n + 1)).map(move |bits| Profile {
        members: (0..n)
            .map(|i| MemberAction::from_defiant(bits >> (n - i) & 1 == 1))
            .collect(),
        leader: LeaderAction::from_defiant(bits & 1 == 1),
    })
}
