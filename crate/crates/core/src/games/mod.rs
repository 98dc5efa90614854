//! Censorship games between a pool leader and its members.
//!
//! Naming: the leader's actions are CENSOR / NOTCENSOR throughout; the
//! spellings cancel / notcancel / sensor are read as aliases.

mod adaptive;
mod multi;
mod payoff;
mod single;
mod table;
mod two_pool;

use std::fmt;

use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use adaptive::{
    literal_sequences, parse_policy, resolve_adaptive, strategy_alphabet, AdaptiveGame,
    AdaptiveProfile, Policy, Resolution, Strategy,
};
pub use multi::{
    all_committed_profiles, multi_round_utility, play_rounds, switch_actions, switch_round, totals,
    MultiRoundProfile,
};
pub use payoff::{Payoff, PayoffParseError};
pub use single::{
    all_profiles, alpha, leader_utility, member_utility, round_payoffs, BinaryAction, LeaderAction,
    MemberAction, Profile, RoundPayoffs,
};
pub use table::{subset_sums, Check, MemberParams, UtilityTable};
pub use two_pool::{
    two_pool_utility, PoolOneActions, PoolTwoPolicies, TwoPoolGame, TwoPoolOutcome, TwoPoolProfile,
};

use crate::ledger::Stake;

/// Schema version of game and profile files.
pub const GAME_FILE_VERSION: u32 = 1;

/// A player of a game. Member indices are zero-based and printed one-based;
/// pool indices likewise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Player {
    Member(usize),
    Leader,
    PoolMember(usize, usize),
    PoolLeader(usize),
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::Member(i) => write!(f, "member {}", i + 1),
            Player::Leader => f.write_str("leader"),
            Player::PoolMember(p, i) => write!(f, "pool {} member {}", p + 1, i + 1),
            Player::PoolLeader(p) => write!(f, "pool {} leader", p + 1),
        }
    }
}

impl Serialize for Player {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("invalid game: {0}")]
    Invalid(String),
    #[error("{who} has no utility for pool stake {level}")]
    MissingLevel { who: String, level: Stake },
    #[error("malformed profile: {0}")]
    ProfileShape(String),
    #[error("{player} breaks the commitment rule in round {round}")]
    Commitment { player: Player, round: usize },
    #[error("unknown member {0}")]
    UnknownMember(usize),
    #[error("unknown player {0}")]
    UnknownPlayer(Player),
    #[error("unsupported file version {0}")]
    Version(u32),
    #[error("hypotheses of {theorem} not met: {failed}")]
    Hypothesis { theorem: String, failed: String },
}

/// Theorem selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TheoremId {
    T2,
    T3,
    T4,
    T5,
    T6,
    Kround,
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TheoremId::T2 => "t2",
            TheoremId::T3 => "t3",
            TheoremId::T4 => "t4",
            TheoremId::T5 => "t5",
            TheoremId::T6 => "t6",
            TheoremId::Kround => "kround",
        })
    }
}

/// Table-level hypotheses of a theorem, evaluated.
pub fn table_hypotheses(theorem: TheoremId, table: &UtilityTable) -> Vec<Check> {
    match theorem {
        TheoremId::T2 => vec![
            table.check_positive_in_pool(),
            table.check_some_member_prefers_revolution(),
        ],
        TheoremId::T3 => vec![
            table.check_positive_in_pool(),
            table.check_leader_prefers_intact(),
        ],
        TheoremId::T4 | TheoremId::T6 | TheoremId::Kround => {
            vec![table.check_monotone(), table.check_nonnegative()]
        }
        TheoremId::T5 => vec![table.check_monotone()],
    }
}

/// Which quantity the second half of the t4 event F compares with
/// `2 u^i_y`: the revolution payoff `u'_i` by default, or the member's
/// utility at its own smallest pool level `s_P + s_i`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FReading {
    #[default]
    Revolution,
    OwnStakeLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    Single,
    Multi,
    Adaptive,
    TwoPool,
}

/// A game file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: GameKind,
    /// `m` for multi-round games, `k` for adaptive ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    /// `j` for adaptive games.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal_depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool: Option<UtilityTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pools: Option<Vec<UtilityTable>>,
    /// Theorems whose table hypotheses must hold at load time.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub enforce: Vec<TheoremId>,
    #[serde(default)]
    pub f_reading: FReading,
}

/// A loaded game.
#[derive(Debug, Clone, PartialEq)]
pub enum GameSpec {
    Single(UtilityTable),
    Multi { table: UtilityTable, rounds: usize },
    Adaptive(AdaptiveGame),
    TwoPool(TwoPoolGame),
}

impl GameFile {
    pub fn single(table: UtilityTable) -> Self {
        GameFile {
            version: GAME_FILE_VERSION,
            name: None,
            kind: GameKind::Single,
            rounds: None,
            signal_depth: None,
            pool: Some(table),
            pools: None,
            enforce: Vec::new(),
            f_reading: FReading::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, GameFileError> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let version = v.get("version").and_then(|x| x.as_u64());
        match version {
            Some(1) => {}
            Some(other) => return Err(GameError::Version(other as u32).into()),
            None => return Err(GameError::Invalid("missing `version`".into()).into()),
        }
        Ok(serde_json::from_value(v)?)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let text = serde_json::to_string(self).expect("game files serialize");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    fn table(&self) -> Result<&UtilityTable, GameError> {
        self.pool
            .as_ref()
            .ok_or_else(|| GameError::Invalid(format!("{:?} games need `pool`", self.kind)))
    }

    pub fn spec(&self) -> Result<GameSpec, GameError> {
        if self.version != GAME_FILE_VERSION {
            return Err(GameError::Version(self.version));
        }
        let spec = match self.kind {
            GameKind::Single => GameSpec::Single(self.table()?.clone()),
            GameKind::Multi => {
                let rounds = self.rounds.unwrap_or(1);
                if rounds == 0 {
                    return Err(GameError::Invalid("rounds must be positive".into()));
                }
                GameSpec::Multi {
                    table: self.table()?.clone(),
                    rounds,
                }
            }
            GameKind::Adaptive => GameSpec::Adaptive(AdaptiveGame::new(
                self.table()?.clone(),
                self.rounds.unwrap_or(2),
                self.signal_depth.unwrap_or(1),
            )?),
            GameKind::TwoPool => {
                let pools = self
                    .pools
                    .as_ref()
                    .filter(|p| p.len() == 2)
                    .ok_or_else(|| GameError::Invalid("two-pool games need two `pools`".into()))?;
                GameSpec::TwoPool(TwoPoolGame::new(pools[0].clone(), pools[1].clone()))
            }
        };
        for &t in &self.enforce {
            let tables: Vec<&UtilityTable> = match &spec {
                GameSpec::TwoPool(g) => g.pools.iter().collect(),
                GameSpec::Single(t) | GameSpec::Multi { table: t, .. } => vec![t],
                GameSpec::Adaptive(g) => vec![&g.table],
            };
            let failed: Vec<String> = tables
                .iter()
                .flat_map(|tb| table_hypotheses(t, tb))
                .filter(|c| !c.holds)
                .map(|c| format!("{} ({})", c.name, c.detail))
                .collect();
            if !failed.is_empty() {
                return Err(GameError::Hypothesis {
                    theorem: t.to_string(),
                    failed: failed.join("; "),
                });
            }
        }
        Ok(spec)
    }
}

#[derive(Debug, Error)]
pub enum GameFileError {
    #[error("malformed game file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Reads a versioned profile file (`{"version": 1, ...}`) into `T`.
pub fn profile_from_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, GameFileError> {
    let mut v: serde_json::Value = serde_json::from_str(text)?;
    let obj = v
        .as_object_mut()
        .ok_or_else(|| GameError::Invalid("a profile file is a JSON object".into()))?;
    match obj.remove("version").and_then(|x| x.as_u64()) {
        Some(1) => {}
        Some(other) => return Err(GameError::Version(other as u32).into()),
        None => return Err(GameError::Invalid("missing `version`".into()).into()),
    }
    Ok(serde_json::from_value(v)?)
}

#[cfg(test)]
mod tests;
