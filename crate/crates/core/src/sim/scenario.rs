//! Scenario files: the genesis ledger, the utility source, production and
//! audit settings, and the agents' policies.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::games::{LeaderAction, MemberAction, Strategy, UtilityTable};
use crate::incentive::UtilityModel;
use crate::ledger::{
    Delegate, LedgerState, Nonce, PlayerId, PoolName, Register, Stake, Transaction, TxKind,
};

use super::SimError;

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerSpec {
    pub id: PlayerId,
    pub stake: Stake,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolSpec {
    pub name: PoolName,
    pub operator: PlayerId,
    #[serde(default)]
    pub params: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelegationSpec {
    pub author: PlayerId,
    pub pool: PoolName,
    pub amount: Stake,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Production {
    /// Live pools take turns in name order.
    #[default]
    RoundRobin,
    /// The operator of the pool audited this round produces; rounds without
    /// an audit fall back to the rotation.
    AuditedLeader,
}

/// Which transactions a censor suppresses.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxFilter {
    /// Registrations of pool names the ledger has never seen, and
    /// delegations into pools that were not live when the round began.
    #[default]
    NewPools,
    All,
    Kinds(Vec<TxKind>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorPolicy {
    /// Includes what the classifier finds incentive-consistent. When a
    /// strategy is given it decides challenger and revocation transactions
    /// instead: CENSOR suppresses them, NOTCENSOR lets them through.
    RationalIncluder {
        #[serde(default)]
        strategy: Option<Strategy<LeaderAction>>,
    },
    ByzantineCensor {
        #[serde(default)]
        target: TxFilter,
    },
    /// One action per round for challenger transactions, the last one
    /// repeating; everything else is included.
    Scripted { actions: Vec<LeaderAction> },
}

impl Default for OperatorPolicy {
    fn default() -> Self {
        OperatorPolicy::RationalIncluder { strategy: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberPolicy {
    /// One action per decision, the last one repeating.
    Script(Vec<MemberAction>),
    Strategy(Strategy<MemberAction>),
}

impl Default for MemberPolicy {
    fn default() -> Self {
        MemberPolicy::Script(vec![MemberAction::Capitulate])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Policies {
    #[serde(default)]
    pub operators: BTreeMap<PlayerId, OperatorPolicy>,
    #[serde(default)]
    pub members: BTreeMap<PlayerId, MemberPolicy>,
}

impl Policies {
    pub fn operator(&self, p: PlayerId) -> OperatorPolicy {
        self.operators.get(&p).cloned().unwrap_or_default()
    }

    pub fn member(&self, p: PlayerId) -> MemberPolicy {
        self.members.get(&p).cloned().unwrap_or_default()
    }
}

/// Binds a single-pool censorship game to the ledger. Utilities then come
/// from the table: the leader and members earn their in-pool level at the
/// pool's delegated stake, undelegated members earn zero, and once the
/// challenger pool exists everyone earns their revolution utility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameBinding {
    pub pool: PoolName,
    /// Member players in table order.
    pub members: Vec<PlayerId>,
    pub table: UtilityTable,
    #[serde(default = "default_challenger")]
    pub challenger: PoolName,
}

fn default_challenger() -> PoolName {
    PoolName::from("challenger")
}

/// Random background traffic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workload {
    #[serde(default = "default_per_round")]
    pub per_round: u32,
    #[serde(default = "default_delegate_weight")]
    pub delegate: u32,
    #[serde(default = "one")]
    pub message: u32,
    #[serde(default = "one")]
    pub redelegate: u32,
    #[serde(default = "default_max_amount")]
    pub max_amount: Stake,
}

fn default_per_round() -> u32 {
    2
}
fn default_delegate_weight() -> u32 {
    6
}
fn one() -> u32 {
    1
}
fn default_max_amount() -> Stake {
    10
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub players: Vec<PlayerSpec>,
    #[serde(default)]
    pub pools: Vec<PoolSpec>,
    #[serde(default)]
    pub delegations: Vec<DelegationSpec>,
    #[serde(default)]
    pub utility: Option<UtilityModel>,
    #[serde(default)]
    pub game: Option<GameBinding>,
    #[serde(default)]
    pub production: Production,
    #[serde(default = "yes")]
    pub audits: bool,
    /// Non-producing operators refuse challenger transactions outright.
    #[serde(default)]
    pub others_block: bool,
    #[serde(default)]
    pub byzantine_threshold: Option<f64>,
    /// Parameters of pools registered by rebels.
    #[serde(default)]
    pub challenger_params: String,
    /// Submitted in the first round.
    #[serde(default)]
    pub pending: Vec<Transaction>,
    #[serde(default)]
    pub workload: Option<Workload>,
    /// Authors give up on a transaction still pending this many rounds
    /// after submission. Unset: never.
    #[serde(default)]
    pub pending_ttl: Option<u64>,
    #[serde(default)]
    pub policies: Policies,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let v: serde_json::Value =
            serde_json::from_str(text).map_err(|e| SimError::Scenario(e.to_string()))?;
        match v.get("version").and_then(|v| v.as_u64()) {
            Some(n) if n == SCENARIO_VERSION as u64 => {}
            Some(n) => return Err(SimError::Scenario(format!("unsupported version {n}"))),
            None => return Err(SimError::Scenario("missing version".into())),
        }
        let s: Scenario =
            serde_json::from_value(v).map_err(|e| SimError::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Scenario(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenarios serialize")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let canon = serde_json::to_string(self).expect("scenarios serialize");
        hex::encode(Sha256::digest(canon.as_bytes()))
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Scenario(m));
        let mut ids = BTreeSet::new();
        for p in &self.players {
            if !ids.insert(p.id) {
                return bad(format!("player {} listed twice", p.id));
            }
        }
        for pool in &self.pools {
            if !ids.contains(&pool.operator) {
                return bad(format!(
                    "pool {} has unknown operator {}",
                    pool.name, pool.operator
                ));
            }
        }
        if let Some(m) = &self.utility {
            m.validate()
                .map_err(|e| SimError::Scenario(e.to_string()))?;
        }
        if let Some(t) = self.byzantine_threshold {
            if !(0.0..=1.0).contains(&t) {
                return bad(format!("byzantine threshold {t} outside [0, 1]"));
            }
        }
        if let Some(g) = &self.game {
            if self.pools.len() != 1 || self.pools[0].name != g.pool {
                return bad(format!(
                    "a game scenario has exactly one pool, `{}`",
                    g.pool
                ));
            }
            if g.members.len() != g.table.n() {
                return bad(format!(
                    "{} game members for a table of {}",
                    g.members.len(),
                    g.table.n()
                ));
            }
            let stake: BTreeMap<PlayerId, Stake> =
                self.players.iter().map(|p| (p.id, p.stake)).collect();
            let leader = self.pools[0].operator;
            if stake.get(&leader) != Some(&g.table.leader_stake()) {
                return bad(format!(
                    "leader {leader} stake differs from the table's s_P"
                ));
            }
            for (i, m) in g.members.iter().enumerate() {
                if *m == leader {
                    return bad(format!("player {m} is both leader and member"));
                }
                if stake.get(m) != Some(&g.table.member_stake(i)) {
                    return bad(format!("member {m} stake differs from the table"));
                }
            }
        }
        // Genesis must build.
        self.genesis().map(|_| ())
    }

    pub fn operators(&self) -> Vec<PlayerId> {
        let set: BTreeSet<PlayerId> = self.pools.iter().map(|p| p.operator).collect();
        set.into_iter().collect()
    }

    /// The initial ledger: stakes, then registrations, then delegations.
    pub fn genesis(&self) -> Result<LedgerState, SimError> {
        let mut state = LedgerState::genesis(self.players.iter().map(|p| (p.id, p.stake)));
        for pool in &self.pools {
            let tx = Transaction::Register(Register {
                author: pool.operator,
                pool: pool.name.clone(),
                params: pool.params.clone(),
            });
            state
                .apply_in_place(&tx)
                .map_err(|e| SimError::Scenario(format!("pool {}: {e}", pool.name)))?;
        }
        for d in &self.delegations {
            let tx = Transaction::Delegate(Delegate {
                author: d.author,
                amount: d.amount,
                pool: d.pool.clone(),
                nonce: state.next_nonce(),
            });
            state.apply_in_place(&tx).map_err(|e| {
                SimError::Scenario(format!("delegation of {} to {}: {e}", d.author, d.pool))
            })?;
        }
        Ok(state)
    }

    /// Nonces of the pending transactions must not collide with genesis.
    pub(crate) fn first_free_nonce(&self, state: &LedgerState) -> Nonce {
        let used = self
            .pending
            .iter()
            .filter_map(|t| t.delegation().map(|d| d.nonce.0 + 1))
            .max()
            .unwrap_or(0);
        Nonce(state.next_nonce().0.max(used))
    }
}
