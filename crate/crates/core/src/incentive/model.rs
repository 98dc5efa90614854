use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::{history_digest, LedgerState, PlayerId, PoolName, Stake};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UtilityError {
    #[error("no table entry for player {player} at state {digest}")]
    TableMiss { player: PlayerId, digest: String },
    #[error("pool {pool}: {reason}")]
    BadPoolParams { pool: PoolName, reason: String },
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// Pool parameters as read by the reward model from a registration's opaque
/// parameter string, e.g. `"margin=0.05 cost=1"`. Keys may be separated by
/// whitespace, `,` or `;`; unknown keys are ignored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PoolParams {
    pub margin: Option<f64>,
    pub cost: Option<f64>,
}

impl PoolParams {
    pub fn parse(s: &str) -> Result<Self, String> {
        let mut params = PoolParams::default();
        for item in s
            .split(|c: char| c.is_whitespace() || c == ',' || c == ';')
            .filter(|t| !t.is_empty())
        {
            let Some((k, v)) = item.split_once('=') else {
                continue;
            };
            let slot = match k {
                "margin" => &mut params.margin,
                "cost" => &mut params.cost,
                _ => continue,
            };
            let v: f64 = v.parse().map_err(|_| format!("bad value in `{item}`"))?;
            *slot = Some(v);
        }
        if let Some(m) = params.margin {
            if !(0.0..=1.0).contains(&m) {
                return Err(format!("margin {m} outside [0, 1]"));
            }
        }
        if let Some(c) = params.cost {
            if !(c >= 0.0) {
                return Err(format!("negative cost {c}"));
            }
        }
        Ok(params)
    }

    pub fn render(&self) -> String {
        let mut parts = Vec::new();
        if let Some(m) = self.margin {
            parts.push(format!("margin={m}"));
        }
        if let Some(c) = self.cost {
            parts.push(format!("cost={c}"));
        }
        parts.join(" ")
    }
}

/// Per-round rewards linear in delegated stake.
///
/// A live pool with delegated stake `d` out of total stake `S` earns
/// `R * d / S` per round. The operator keeps the margin `m` of it and pays
/// the fixed cost `c`; the rest is split among the pool's delegations
/// pro rata. Dissolved pools earn nothing and cost nothing. Undelegated
/// stake earns nothing.
///
/// With `migration` set, the utility of a state anticipates competition:
/// every non-operator delegation is valued as if it sat in the live pool
/// with the lowest margin, when that margin is strictly below its current
/// pool's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRewardModel {
    #[serde(rename = "R")]
    pub reward: f64,
    #[serde(default)]
    pub margin: f64,
    #[serde(default)]
    pub cost: f64,
    #[serde(default)]
    pub migration: bool,
}

/// What one live pool pays out in a round.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolPayout {
    pub pool: PoolName,
    pub operator: PlayerId,
    pub reward: f64,
    pub margin_payment: f64,
    pub cost: f64,
    pub member_payments: BTreeMap<PlayerId, f64>,
}

impl LinearRewardModel {
    pub fn new(reward: f64, margin: f64, cost: f64) -> Result<Self, UtilityError> {
        let m = LinearRewardModel {
            reward,
            margin,
            cost,
            migration: false,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_migration(mut self, on: bool) -> Self {
        self.migration = on;
        self
    }

    pub fn validate(&self) -> Result<(), UtilityError> {
        if !(self.reward >= 0.0) {
            return Err(UtilityError::InvalidModel(format!("R = {}", self.reward)));
        }
        if !(0.0..=1.0).contains(&self.margin) {
            return Err(UtilityError::InvalidModel(format!(
                "margin {} outside [0, 1]",
                self.margin
            )));
        }
        if !(self.cost >= 0.0) {
            return Err(UtilityError::InvalidModel(format!("cost {}", self.cost)));
        }
        Ok(())
    }

    /// Margin and cost of each live pool.
    fn pool_terms(
        &self,
        state: &LedgerState,
    ) -> Result<BTreeMap<PoolName, (PlayerId, f64, f64)>, UtilityError> {
        let mut out = BTreeMap::new();
        for (name, rec) in state.tables().pools.iter().filter(|(_, p)| !p.dissolved) {
            let params =
                PoolParams::parse(&rec.params).map_err(|reason| UtilityError::BadPoolParams {
                    pool: name.clone(),
                    reason,
                })?;
            out.insert(
                name.clone(),
                (
                    rec.operator,
                    params.margin.unwrap_or(self.margin),
                    params.cost.unwrap_or(self.cost),
                ),
            );
        }
        Ok(out)
    }

    pub fn payouts(&self, state: &LedgerState) -> Result<Vec<PoolPayout>, UtilityError> {
        let terms = self.pool_terms(state)?;
        let best = terms
            .iter()
            .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then_with(|| a.0.cmp(b.0)))
            .map(|(n, t)| (n.clone(), t.1));

        // (pool -> member -> stake) after optional migration.
        let mut placed: BTreeMap<&PoolName, BTreeMap<PlayerId, Stake>> = BTreeMap::new();
        for rec in state.tables().delegations.values().filter(|d| d.active) {
            let Some((operator, margin, _)) = terms.get(&rec.pool) else {
                continue;
            };
            let mut target = &rec.pool;
            if self.migration && rec.author != *operator {
                if let Some((best_pool, best_margin)) = &best {
                    if *best_margin < *margin {
                        target = best_pool;
                    }
                }
            }
            let target = terms
                .get_key_value(target)
                .map(|(k, _)| k)
                .unwrap_or(&rec.pool);
            *placed
                .entry(target)
                .or_default()
                .entry(rec.author)
                .or_default() += rec.amount;
        }

        let total = state.total_stake() as f64;
        let mut out = Vec::with_capacity(terms.len());
        for (name, (operator, margin, cost)) in &terms {
            let members = placed.remove(name).unwrap_or_default();
            let pool_stake: Stake = members.values().sum();
            let reward = if total > 0.0 {
                self.reward * pool_stake as f64 / total
            } else {
                0.0
            };
            let distributable = reward * (1.0 - margin);
            let member_payments = members
                .iter()
                .map(|(p, s)| (*p, distributable * *s as f64 / pool_stake as f64))
                .collect();
            out.push(PoolPayout {
                pool: name.clone(),
                operator: *operator,
                reward,
                margin_payment: reward * margin,
                cost: *cost,
                member_payments,
            });
        }
        Ok(out)
    }

    /// Round utility of every player at `state`.
    pub fn utilities(&self, state: &LedgerState) -> Result<BTreeMap<PlayerId, f64>, UtilityError> {
        let mut u: BTreeMap<PlayerId, f64> = state.players().map(|p| (p, 0.0)).collect();
        for pay in self.payouts(state)? {
            *u.entry(pay.operator).or_default() += pay.margin_payment - pay.cost;
            for (p, v) in pay.member_payments {
                *u.entry(p).or_default() += v;
            }
        }
        Ok(u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub player: PlayerId,
    pub digest: String,
    pub value: f64,
}

/// Explicit utilities keyed by player and history digest, for toy state
/// spaces that are enumerated in full.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "TableEntries", into = "TableEntries")]
pub struct TableModel {
    entries: BTreeMap<(PlayerId, String), f64>,
}

#[derive(Serialize, Deserialize)]
struct TableEntries {
    entries: Vec<TableEntry>,
}

impl From<TableEntries> for TableModel {
    fn from(t: TableEntries) -> Self {
        TableModel {
            entries: t
                .entries
                .into_iter()
                .map(|e| ((e.player, e.digest), e.value))
                .collect(),
        }
    }
}

impl From<TableModel> for TableEntries {
    fn from(t: TableModel) -> Self {
        TableEntries {
            entries: t
                .entries
                .into_iter()
                .map(|((player, digest), value)| TableEntry {
                    player,
                    digest,
                    value,
                })
                .collect(),
        }
    }
}

impl TableModel {
    pub fn insert(&mut self, player: PlayerId, state: &LedgerState, value: f64) {
        self.entries.insert((player, state_digest(state)), value);
    }

    pub fn get(&self, player: PlayerId, state: &LedgerState) -> Result<f64, UtilityError> {
        let digest = state_digest(state);
        self.entries
            .get(&(player, digest.clone()))
            .copied()
            .ok_or(UtilityError::TableMiss { player, digest })
    }
}

/// Digest identifying a ledger state for [`TableModel`] lookups: SHA-256 of
/// the canonical history text.
pub fn state_digest(state: &LedgerState) -> String {
    history_digest(state.history())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum UtilityModel {
    Linear(LinearRewardModel),
    Table(TableModel),
}

impl UtilityModel {
    pub fn evaluate(&self, player: PlayerId, state: &LedgerState) -> Result<f64, UtilityError> {
        evaluate_utility(self, player, state)
    }

    /// Utilities of all players of the state, in player order.
    pub fn evaluate_all(
        &self,
        state: &LedgerState,
    ) -> Result<BTreeMap<PlayerId, f64>, UtilityError> {
        match self {
            UtilityModel::Linear(m) => m.utilities(state),
            UtilityModel::Table(t) => state
                .players()
                .map(|p| t.get(p, state).map(|v| (p, v)))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<(), UtilityError> {
        match self {
            UtilityModel::Linear(m) => m.validate(),
            UtilityModel::Table(_) => Ok(()),
        }
    }
}

pub fn evaluate_utility(
    model: &UtilityModel,
    player: PlayerId,
    state: &LedgerState,
) -> Result<f64, UtilityError> {
    match model {
        UtilityModel::Linear(m) => Ok(m.utilities(state)?.get(&player).copied().unwrap_or(0.0)),
        UtilityModel::Table(t) => t.get(player, state),
    }
}
