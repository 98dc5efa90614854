use serde::{Deserialize, Serialize};

use super::model::{LinearRewardModel, PoolParams, UtilityError, UtilityModel};
use crate::ledger::{LedgerState, PlayerId, PoolName, Register, Revoke, Transaction};

/// The competing pool offered by the Register candidate. Unset fields are
/// filled in from the state: the author is the first player who operates no
/// live pool, the name is `competitor` (suffixed until fresh), the margin is
/// half the lowest live margin, and the cost is the model's default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CompetitorSpec {
    pub author: Option<PlayerId>,
    pub pool: Option<PoolName>,
    pub margin: Option<f64>,
    pub cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncumbencyWitness {
    pub operator: PlayerId,
    pub tx: Transaction,
    pub before: f64,
    pub after: f64,
}

fn live_margin(model: &UtilityModel, state: &LedgerState, pool: &PoolName) -> f64 {
    let default = match model {
        UtilityModel::Linear(m) => m.margin,
        UtilityModel::Table(_) => 0.0,
    };
    state
        .pool(pool)
        .and_then(|r| PoolParams::parse(&r.params).ok())
        .and_then(|p| p.margin)
        .unwrap_or(default)
}

/// Builds the Register transaction for a competitor, or `None` when there is
/// no eligible author.
pub fn competitor_registration(
    model: &UtilityModel,
    state: &LedgerState,
    spec: &CompetitorSpec,
) -> Option<Register> {
    let live = state.live_pools();
    let operators: Vec<PlayerId> = live
        .iter()
        .filter_map(|p| state.pool(p).map(|r| r.operator))
        .collect();
    let author = spec
        .author
        .or_else(|| state.players().find(|p| !operators.contains(p)))?;
    let pool = spec.pool.clone().unwrap_or_else(|| {
        let mut name = PoolName::from("competitor");
        let mut n = 1;
        while state.pool(&name).is_some() {
            n += 1;
            name = PoolName(format!("competitor{n}"));
        }
        name
    });
    let margin = spec.margin.unwrap_or_else(|| {
        live.iter()
            .map(|p| live_margin(model, state, p))
            .fold(f64::INFINITY, f64::min)
            .min(1.0)
            / 2.0
    });
    let cost = spec.cost.or(match model {
        UtilityModel::Linear(LinearRewardModel { cost, .. }) => Some(*cost),
        UtilityModel::Table(_) => None,
    });
    let params = PoolParams {
        margin: Some(margin),
        cost,
    };
    Some(Register {
        author,
        pool,
        params: params.render(),
    })
}

/// Every candidate witness, in candidate order: revokes of non-operator
/// delegations into live pools (by nonce), then the competitor registration
/// against each live pool's operator.
pub fn incumbency_witnesses(
    model: &UtilityModel,
    state: &LedgerState,
    competitor: &CompetitorSpec,
) -> Result<Vec<IncumbencyWitness>, UtilityError> {
    let before = model.evaluate_all(state)?;
    let mut out = Vec::new();
    for (nonce, rec) in state.tables().delegations.iter().filter(|(_, d)| d.active) {
        let Some(pool) = state.pool(&rec.pool).filter(|p| !p.dissolved) else {
            continue;
        };
        if pool.operator == rec.author {
            continue;
        }
        let tx = Transaction::Revoke(Revoke {
            author: rec.author,
            nonce: *nonce,
        });
        let after = model.evaluate(pool.operator, &state.apply_transaction(&tx))?;
        let b = before.get(&pool.operator).copied().unwrap_or(0.0);
        if b > after {
            out.push(IncumbencyWitness {
                operator: pool.operator,
                tx,
                before: b,
                after,
            });
        }
    }
    if let Some(reg) = competitor_registration(model, state, competitor) {
        let tx = Transaction::Register(reg);
        let next = state.apply_transaction(&tx);
        if next != *state {
            let after_all = model.evaluate_all(&next)?;
            let mut seen = Vec::new();
            for pool in state.live_pools() {
                let op = state.pool(&pool).expect("live").operator;
                if seen.contains(&op) {
                    continue;
                }
                seen.push(op);
                let b = before.get(&op).copied().unwrap_or(0.0);
                let a = after_all.get(&op).copied().unwrap_or(0.0);
                if b > a {
                    out.push(IncumbencyWitness {
                        operator: op,
                        tx: tx.clone(),
                        before: b,
                        after: a,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// First witness that some incumbent operator is hurt by a revocation
/// or by a competing registration.
pub fn check_incumbency(
    model: &UtilityModel,
    state: &LedgerState,
    competitor: &CompetitorSpec,
) -> Result<Option<IncumbencyWitness>, UtilityError> {
    Ok(incumbency_witnesses(model, state, competitor)?
        .into_iter()
        .next())
}
