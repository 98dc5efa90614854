use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::tx::{Delegate, Nonce, PlayerId, PoolName, Register, Revoke, Stake, Transaction};

/// Why a transaction leaves the ledger unchanged.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Inadmissible {
    #[error("unknown player {0}")]
    UnknownPlayer(PlayerId),
    #[error("unknown pool {0}")]
    UnknownPool(PoolName),
    #[error("pool {0} is dissolved")]
    DissolvedPool(PoolName),
    #[error("duplicate pool {0}")]
    DuplicatePool(PoolName),
    #[error("zero delegation amount")]
    ZeroAmount,
    #[error("nonce {0} already used")]
    DuplicateNonce(Nonce),
    #[error("unknown nonce {0}")]
    UnknownNonce(Nonce),
    #[error("inactive nonce {0}")]
    InactiveNonce(Nonce),
    #[error("nonce {nonce} belongs to player {owner}")]
    NotOwner { nonce: Nonce, owner: PlayerId },
    #[error("over-delegation: {requested} requested, {owned} owned")]
    OverDelegation { requested: Stake, owned: Stake },
    #[error("stake already delegated: {requested} requested, {available} undelegated")]
    AlreadyDelegated { requested: Stake, available: Stake },
    #[error("compound {step} step: {reason}")]
    Compound {
        step: CompoundStep,
        reason: Box<Inadmissible>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompoundStep {
    Revoke,
    Register,
    Delegate,
}

impl std::fmt::Display for CompoundStep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CompoundStep::Revoke => "revoke",
            CompoundStep::Register => "register",
            CompoundStep::Delegate => "delegate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DissolveError {
    #[error("cannot dissolve unknown pool {0}")]
    UnknownPool(PoolName),
    #[error("pool {0} is already dissolved")]
    AlreadyDissolved(PoolName),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DelegationRecord {
    pub author: PlayerId,
    pub amount: Stake,
    pub pool: PoolName,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PoolRecord {
    pub operator: PlayerId,
    pub params: String,
    pub dissolved: bool,
    /// Number of times this name has been registered.
    pub registrations: u32,
}

/// One step of ledger history. Audits are recorded alongside transactions so
/// that the derived tables are always the replay of `history`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "entry", rename_all = "snake_case")]
pub enum HistoryEntry {
    Applied { tx: Transaction },
    Dissolved { pool: PoolName },
}

/// Everything derived from history: the stake distribution and the
/// delegation and pool registries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Tables {
    pub stake: BTreeMap<PlayerId, Stake>,
    pub delegations: BTreeMap<Nonce, DelegationRecord>,
    pub pools: BTreeMap<PoolName, PoolRecord>,
}

impl Tables {
    pub fn total_stake(&self) -> Stake {
        self.stake.values().sum()
    }

    pub fn delegated_by(&self, player: PlayerId) -> Stake {
        self.delegations
            .values()
            .filter(|d| d.active && d.author == player)
            .map(|d| d.amount)
            .sum()
    }

    pub fn undelegated(&self, player: PlayerId) -> Stake {
        self.stake
            .get(&player)
            .map_or(0, |s| s.saturating_sub(self.delegated_by(player)))
    }

    pub fn is_live_pool(&self, pool: &PoolName) -> bool {
        self.pools.get(pool).is_some_and(|p| !p.dissolved)
    }

    fn check_author(&self, author: PlayerId) -> Result<(), Inadmissible> {
        if self.stake.contains_key(&author) {
            Ok(())
        } else {
            Err(Inadmissible::UnknownPlayer(author))
        }
    }

    fn check_delegate(&self, d: &Delegate) -> Result<(), Inadmissible> {
        self.check_author(d.author)?;
        if d.amount == 0 {
            return Err(Inadmissible::ZeroAmount);
        }
        match self.pools.get(&d.pool) {
            None => return Err(Inadmissible::UnknownPool(d.pool.clone())),
            Some(p) if p.dissolved => return Err(Inadmissible::DissolvedPool(d.pool.clone())),
            Some(_) => {}
        }
        if self.delegations.contains_key(&d.nonce) {
            return Err(Inadmissible::DuplicateNonce(d.nonce));
        }
        let owned = self.stake[&d.author];
        if d.amount > owned {
            return Err(Inadmissible::OverDelegation {
                requested: d.amount,
                owned,
            });
        }
        let available = self.undelegated(d.author);
        if d.amount > available {
            return Err(Inadmissible::AlreadyDelegated {
                requested: d.amount,
                available,
            });
        }
        Ok(())
    }

    fn check_revoke(&self, r: &Revoke) -> Result<(), Inadmissible> {
        self.check_author(r.author)?;
        let rec = self
            .delegations
            .get(&r.nonce)
            .ok_or(Inadmissible::UnknownNonce(r.nonce))?;
        if rec.author != r.author {
            return Err(Inadmissible::NotOwner {
                nonce: r.nonce,
                owner: rec.author,
            });
        }
        if !rec.active {
            return Err(Inadmissible::InactiveNonce(r.nonce));
        }
        Ok(())
    }

    fn check_register(&self, g: &Register) -> Result<(), Inadmissible> {
        self.check_author(g.author)?;
        if self.is_live_pool(&g.pool) {
            return Err(Inadmissible::DuplicatePool(g.pool.clone()));
        }
        Ok(())
    }

    fn delegate(&mut self, d: &Delegate) -> Result<(), Inadmissible> {
        self.check_delegate(d)?;
        self.delegations.insert(
            d.nonce,
            DelegationRecord {
                author: d.author,
                amount: d.amount,
                pool: d.pool.clone(),
                active: true,
            },
        );
        Ok(())
    }

    fn revoke(&mut self, r: &Revoke) -> Result<(), Inadmissible> {
        self.check_revoke(r)?;
        if let Some(rec) = self.delegations.get_mut(&r.nonce) {
            rec.active = false;
        }
        Ok(())
    }

    fn register(&mut self, g: &Register) -> Result<(), Inadmissible> {
        self.check_register(g)?;
        let registrations = self.pools.get(&g.pool).map_or(0, |p| p.registrations) + 1;
        self.pools.insert(
            g.pool.clone(),
            PoolRecord {
                operator: g.author,
                params: g.params.clone(),
                dissolved: false,
                registrations,
            },
        );
        Ok(())
    }

    /// Applies `tx` in place. On error the tables are untouched.
    fn apply(&mut self, tx: &Transaction) -> Result<(), Inadmissible> {
        match tx {
            Transaction::Delegate(d) => self.delegate(d),
            Transaction::Revoke(r) => self.revoke(r),
            Transaction::Register(g) => self.register(g),
            Transaction::PlainMessage(m) => self.check_author(m.author),
            Transaction::Compound(c) => {
                let wrap = |step| {
                    move |e: Inadmissible| Inadmissible::Compound {
                        step,
                        reason: Box::new(e),
                    }
                };
                let mut scratch = self.clone();
                if let Some(r) = c.revoke() {
                    scratch.revoke(r).map_err(wrap(CompoundStep::Revoke))?;
                }
                if let Some(g) = c.register() {
                    scratch.register(g).map_err(wrap(CompoundStep::Register))?;
                }
                scratch
                    .delegate(c.delegate())
                    .map_err(wrap(CompoundStep::Delegate))?;
                *self = scratch;
                Ok(())
            }
        }
    }

    fn dissolve(&mut self, pool: &PoolName) -> Result<(), DissolveError> {
        let rec = self
            .pools
            .get_mut(pool)
            .ok_or_else(|| DissolveError::UnknownPool(pool.clone()))?;
        if rec.dissolved {
            return Err(DissolveError::AlreadyDissolved(pool.clone()));
        }
        rec.dissolved = true;
        for d in self.delegations.values_mut() {
            if d.active && &d.pool == pool {
                d.active = false;
            }
        }
        Ok(())
    }
}

/// Ledger state: settled history plus the tables derived from it.
///
/// Every operation is a pure function returning a new state; the in-place
/// variants exist for the simulation loop and have the same semantics.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LedgerState {
    history: Vec<HistoryEntry>,
    tables: Tables,
    round: u64,
}

impl LedgerState {
    /// A fresh ledger: the given stake distribution, no pools, no delegations.
    pub fn genesis(stake: impl IntoIterator<Item = (PlayerId, Stake)>) -> Self {
        LedgerState {
            history: Vec::new(),
            tables: Tables {
                stake: stake.into_iter().collect(),
                ..Tables::default()
            },
            round: 0,
        }
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    /// Same tables and round, empty history. Cheap to clone; only suitable
    /// where nothing downstream reads the history.
    pub fn snapshot(&self) -> LedgerState {
        LedgerState {
            history: Vec::new(),
            tables: self.tables.clone(),
            round: self.round,
        }
    }

    pub fn tables(&self) -> &Tables {
        &self.tables
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn advance_round(&mut self) {
        self.round += 1;
    }

    pub fn players(&self) -> impl Iterator<Item = PlayerId> + '_ {
        self.tables.stake.keys().copied()
    }

    pub fn stake_of(&self, player: PlayerId) -> Stake {
        self.tables.stake.get(&player).copied().unwrap_or(0)
    }

    pub fn total_stake(&self) -> Stake {
        self.tables.total_stake()
    }

    pub fn undelegated(&self, player: PlayerId) -> Stake {
        self.tables.undelegated(player)
    }

    pub fn pool(&self, name: &PoolName) -> Option<&PoolRecord> {
        self.tables.pools.get(name)
    }

    pub fn delegation(&self, nonce: Nonce) -> Option<&DelegationRecord> {
        self.tables.delegations.get(&nonce)
    }

    /// Registered, non-dissolved pools in canonical (name) order.
    pub fn live_pools(&self) -> Vec<PoolName> {
        self.tables
            .pools
            .iter()
            .filter(|(_, p)| !p.dissolved)
            .map(|(n, _)| n.clone())
            .collect()
    }

    /// Smallest nonce strictly greater than every nonce in use.
    pub fn next_nonce(&self) -> Nonce {
        Nonce(
            self.tables
                .delegations
                .keys()
                .next_back()
                .map_or(0, |n| n.0 + 1),
        )
    }

    /// `Ok` iff applying `tx` would change the state.
    pub fn admissible(&self, tx: &Transaction) -> Result<(), Inadmissible> {
        match tx {
            Transaction::Delegate(d) => self.tables.check_delegate(d),
            Transaction::Revoke(r) => self.tables.check_revoke(r),
            Transaction::Register(g) => self.tables.check_register(g),
            Transaction::PlainMessage(m) => self.tables.check_author(m.author),
            Transaction::Compound(_) => self.tables.clone().apply(tx),
        }
    }

    /// The transition function. Inadmissible transactions are the identity.
    pub fn apply_transaction(&self, tx: &Transaction) -> LedgerState {
        self.try_apply(tx).unwrap_or_else(|_| self.clone())
    }

    /// Like [`apply_transaction`](Self::apply_transaction) but reports why a
    /// transaction was rejected.
    pub fn try_apply(&self, tx: &Transaction) -> Result<LedgerState, Inadmissible> {
        let mut next = self.clone();
        next.apply_in_place(tx)?;
        Ok(next)
    }

    pub fn apply_in_place(&mut self, tx: &Transaction) -> Result<(), Inadmissible> {
        self.tables.apply(tx)?;
        self.history.push(HistoryEntry::Applied { tx: tx.clone() });
        Ok(())
    }

    /// Dissolves `pool` for an audit: the pool is marked dissolved and all of
    /// its delegations become inactive.
    pub fn dissolve(&self, pool: &PoolName) -> Result<LedgerState, DissolveError> {
        let mut next = self.clone();
        next.dissolve_in_place(pool)?;
        Ok(next)
    }

    pub fn dissolve_in_place(&mut self, pool: &PoolName) -> Result<(), DissolveError> {
        self.tables.dissolve(pool)?;
        self.history
            .push(HistoryEntry::Dissolved { pool: pool.clone() });
        Ok(())
    }

    /// Rebuilds the state by replaying `history` over the genesis stake.
    pub fn replay(&self) -> LedgerState {
        let mut state = LedgerState::genesis(self.tables.stake.clone());
        state.round = self.round;
        for entry in &self.history {
            match entry {
                HistoryEntry::Applied { tx } => {
                    let _ = state.apply_in_place(tx);
                }
                HistoryEntry::Dissolved { pool } => {
                    let _ = state.dissolve_in_place(pool);
                }
            }
        }
        state
    }

    pub fn pool_table(&self) -> PoolTable {
        build_pool_table(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub operator: PlayerId,
    pub delegated_stake: Stake,
    pub members: BTreeSet<PlayerId>,
    pub dissolved: bool,
    pub params: String,
}

/// The stake-pool lookup table.
pub type PoolTable = BTreeMap<PoolName, PoolEntry>;

pub fn build_pool_table(state: &LedgerState) -> PoolTable {
    let tables = state.tables();
    let mut table: PoolTable = tables
        .pools
        .iter()
        .map(|(name, p)| {
            (
                name.clone(),
                PoolEntry {
                    operator: p.operator,
                    delegated_stake: 0,
                    members: BTreeSet::new(),
                    dissolved: p.dissolved,
                    params: p.params.clone(),
                },
            )
        })
        .collect();
    for d in tables.delegations.values().filter(|d| d.active) {
        if let Some(entry) = table.get_mut(&d.pool) {
            entry.delegated_stake += d.amount;
            entry.members.insert(d.author);
        }
    }
    table
}

/// `true` iff replaying `witness` from `from`, with each step admissible in
/// turn, yields exactly `to`.
pub fn check_extension(from: &LedgerState, to: &LedgerState, witness: &[Transaction]) -> bool {
    let mut state = from.clone();
    for tx in witness {
        if state.apply_in_place(tx).is_err() {
            return false;
        }
    }
    &state == to
}
