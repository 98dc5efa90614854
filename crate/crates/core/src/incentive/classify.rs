//! Bounded incentive-consistency check.
//!
//! Executions are enumerated as sequences over the distinct pending
//! transactions plus an empty step (a round in which nothing is included),
//! up to the horizon. Two sequences of equal length are *matched* when they
//! end in the same state (same applied transactions, same tables). For a
//! matched pair where the first sequence includes `tx` at position `a` and
//! the second at position `b < a`, every prefix length `k` in `b+1..=a`
//! gives an intermediate pair: the first sequence has not yet applied `tx`,
//! the second has. Strong consistency asks that every affected player is
//! strictly better off at the second intermediate state.
//!
//! Only players whose utility some application of `tx` changes count as
//! affected; the others (moved only by other pending transactions, or not
//! at all) are left out of the strict test.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::{UtilityError, UtilityModel};
use crate::ledger::{LedgerState, PlayerId, Tables, Transaction};

pub const DEFAULT_NODE_LIMIT: usize = 200_000;
const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IcClass {
    StronglyIc,
    Ic,
    NotIc,
    Indeterminate,
}

impl IcClass {
    pub fn as_str(self) -> &'static str {
        match self {
            IcClass::StronglyIc => "STRONGLY_IC",
            IcClass::Ic => "IC",
            IcClass::NotIc => "NOT_IC",
            IcClass::Indeterminate => "INDETERMINATE",
        }
    }
}

impl std::fmt::Display for IcClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("the transaction is not in the pending set")]
    NotPending,
    #[error("at most 64 distinct pending transactions are supported")]
    TooManyPending,
    #[error(transparent)]
    Utility(#[from] UtilityError),
}

/// A single-step application of `tx` that lowers a player's utility.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dissent {
    pub player: PlayerId,
    /// Indices into the deduplicated pending list applied before `tx`;
    /// `None` is an empty step.
    pub prefix: Vec<Option<usize>>,
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub class: IcClass,
    pub nodes: usize,
    pub matched_pairs: usize,
    pub affected: Vec<PlayerId>,
    /// Players with at least one utility-lowering application, in id order.
    pub dissenting: Vec<PlayerId>,
    pub first_dissent: Option<Dissent>,
    /// A matched pair where some affected player is not strictly better off
    /// with the earlier inclusion.
    pub weak_pair: Option<(PlayerId, f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassifyConfig {
    pub horizon: usize,
    pub node_limit: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            horizon: 3,
            node_limit: DEFAULT_NODE_LIMIT,
        }
    }
}

struct Node {
    parent: Option<usize>,
    step: Option<usize>,
    depth: usize,
    state: LedgerState,
    /// Pending indices that were used (admissible or not) on this path.
    used: u64,
    /// Pending indices actually applied.
    applied: u64,
    /// Position at which `tx` was used on the path.
    tx_pos: Option<usize>,
    tx_applied: bool,
    utilities: Vec<f64>,
}

fn endpoint_key(n: &Node) -> (usize, u64, &Tables) {
    (n.depth, n.applied, n.state.tables())
}

pub fn classify_transaction(
    model: &UtilityModel,
    state: &LedgerState,
    tx: &Transaction,
    pending: &[Transaction],
    config: ClassifyConfig,
) -> Result<Classification, ClassifyError> {
    if config.horizon == 0 {
        return Err(ClassifyError::ZeroHorizon);
    }
    let mut distinct: Vec<&Transaction> = Vec::new();
    for p in pending {
        if !distinct.contains(&p) {
            distinct.push(p);
        }
    }
    let tx_idx = distinct
        .iter()
        .position(|p| *p == tx)
        .ok_or(ClassifyError::NotPending)?;
    if distinct.len() > 64 {
        return Err(ClassifyError::TooManyPending);
    }
    let players: Vec<PlayerId> = state.players().collect();
    let utilities = |s: &LedgerState| -> Result<Vec<f64>, ClassifyError> {
        let all = model.evaluate_all(s)?;
        Ok(players
            .iter()
            .map(|p| all.get(p).copied().unwrap_or(0.0))
            .collect())
    };

    let mut nodes = vec![Node {
        parent: None,
        step: None,
        depth: 0,
        state: state.clone(),
        used: 0,
        applied: 0,
        tx_pos: None,
        tx_applied: false,
        utilities: utilities(state)?,
    }];
    let mut truncated = false;
    let mut frontier = vec![0usize];
    'grow: for _ in 0..config.horizon {
        let mut next = Vec::new();
        for &id in &frontier {
            let used = nodes[id].used;
            let steps: Vec<Option<usize>> = (0..distinct.len())
                .filter(|i| used & (1 << i) == 0)
                .map(Some)
                .chain(std::iter::once(None))
                .collect();
            for step in steps {
                if nodes.len() >= config.node_limit {
                    truncated = true;
                    break 'grow;
                }
                let parent = &nodes[id];
                let (child_state, ok) = match step {
                    Some(i) => match parent.state.try_apply(distinct[i]) {
                        Ok(s) => (s, true),
                        Err(_) => (parent.state.clone(), false),
                    },
                    None => (parent.state.clone(), false),
                };
                let bit = step.map_or(0, |i| 1u64 << i);
                let is_tx = step == Some(tx_idx);
                let node = Node {
                    parent: Some(id),
                    step,
                    depth: parent.depth + 1,
                    used: parent.used | bit,
                    applied: if ok {
                        parent.applied | bit
                    } else {
                        parent.applied
                    },
                    tx_pos: if is_tx {
                        Some(parent.depth)
                    } else {
                        parent.tx_pos
                    },
                    tx_applied: parent.tx_applied || (is_tx && ok),
                    utilities: utilities(&child_state)?,
                    state: child_state,
                };
                next.push(nodes.len());
                nodes.push(node);
            }
        }
        frontier = next;
    }

    let mut affected = Vec::new();
    for (k, p) in players.iter().enumerate() {
        let moved = nodes.iter().skip(1).any(|n| {
            n.step == Some(tx_idx)
                && (n.utilities[k] - nodes[n.parent.expect("non-root")].utilities[k]).abs() > EPS
        });
        if moved {
            affected.push(*p);
        }
    }

    // Weak condition: every application of tx, from every enumerated state.
    let mut dissenting = BTreeSet::new();
    let mut first_dissent = None;
    for n in nodes.iter().skip(1) {
        if n.step != Some(tx_idx) {
            continue;
        }
        let parent = &nodes[n.parent.expect("non-root")];
        for (k, p) in players.iter().enumerate() {
            if parent.utilities[k] > n.utilities[k] + EPS {
                dissenting.insert(*p);
                if first_dissent.is_none() {
                    first_dissent = Some(Dissent {
                        player: *p,
                        prefix: path_steps(&nodes, parent),
                        before: parent.utilities[k],
                        after: n.utilities[k],
                    });
                }
            }
        }
    }

    // Strong condition over matched pairs.
    let mut groups: BTreeMap<(usize, u64), Vec<usize>> = BTreeMap::new();
    for (id, n) in nodes.iter().enumerate() {
        if n.tx_applied {
            groups.entry((n.depth, n.applied)).or_default().push(id);
        }
    }
    let affected_idx: Vec<usize> = players
        .iter()
        .enumerate()
        .filter(|(_, p)| affected.contains(p))
        .map(|(k, _)| k)
        .collect();
    let mut matched_pairs = 0usize;
    let mut weak_pair = None;
    for members in groups.values() {
        for &a in members {
            for &b in members {
                let (na, nb) = (&nodes[a], &nodes[b]);
                let (Some(pa), Some(pb)) = (na.tx_pos, nb.tx_pos) else {
                    continue;
                };
                if pb >= pa || endpoint_key(na) != endpoint_key(nb) {
                    continue;
                }
                let chain_a = ancestors(&nodes, a);
                let chain_b = ancestors(&nodes, b);
                for k in pb + 1..=pa {
                    matched_pairs += 1;
                    let (x1, x2) = (&nodes[chain_a[k]], &nodes[chain_b[k]]);
                    if weak_pair.is_some() {
                        continue;
                    }
                    for &i in &affected_idx {
                        if x1.utilities[i] + EPS >= x2.utilities[i] {
                            weak_pair = Some((players[i], x1.utilities[i], x2.utilities[i]));
                            break;
                        }
                    }
                }
            }
        }
    }

    let class = if !dissenting.is_empty() {
        IcClass::NotIc
    } else if truncated {
        IcClass::Indeterminate
    } else if !affected.is_empty() && matched_pairs > 0 && weak_pair.is_none() {
        IcClass::StronglyIc
    } else {
        IcClass::Ic
    };
    Ok(Classification {
        class,
        nodes: nodes.len(),
        matched_pairs,
        affected,
        dissenting: dissenting.into_iter().collect(),
        first_dissent,
        weak_pair,
    })
}

/// Node ids from the root (index 0) to `id` (index depth).
fn ancestors(nodes: &[Node], id: usize) -> Vec<usize> {
    let mut chain = vec![id];
    let mut cur = id;
    while let Some(p) = nodes[cur].parent {
        chain.push(p);
        cur = p;
    }
    chain.reverse();
    chain
}

fn path_steps(nodes: &[Node], node: &Node) -> Vec<Option<usize>> {
    let mut steps = Vec::with_capacity(node.depth);
    let mut cur = node;
    while let Some(p) = cur.parent {
        steps.push(cur.step);
        cur = &nodes[p];
    }
    steps.reverse();
    steps
}
