//! Random ledger histories and the invariants every prefix must satisfy.

use poolcensor_core::ledger::{
    parse_canonical, to_canonical, Compound, Delegate, LedgerState, Nonce, PlainMessage, PlayerId,
    PoolName, Register, Revoke, Stake, Transaction,
};
use proptest::prelude::*;

const POOLS: [&str; 4] = ["a", "b", "c", "d"];

#[derive(Debug, Clone)]
pub enum Op {
    Tx(Transaction),
    Dissolve(PoolName),
}

fn player() -> impl Strategy<Value = PlayerId> {
    // 5 is never in genesis.
    prop_oneof![9 => 0u32..5, 1 => Just(5u32)].prop_map(PlayerId)
}

fn pool() -> impl Strategy<Value = PoolName> {
    prop::sample::select(&POOLS[..]).prop_map(PoolName::from)
}

fn delegate() -> impl Strategy<Value = Delegate> {
    (player(), 0u64..15, pool(), 0u64..12).prop_map(|(author, amount, pool, n)| Delegate {
        author,
        amount,
        pool,
        nonce: Nonce(n),
    })
}

fn register() -> impl Strategy<Value = Register> {
    (
        player(),
        pool(),
        prop::sample::select(vec!["", "margin=0.1", "margin=0.05 cost=2"]),
    )
        .prop_map(|(author, pool, params)| Register {
            author,
            pool,
            params: params.to_string(),
        })
}

fn revoke() -> impl Strategy<Value = Revoke> {
    (player(), 0u64..12).prop_map(|(author, n)| Revoke {
        author,
        nonce: Nonce(n),
    })
}

fn compound() -> impl Strategy<Value = Transaction> {
    (
        delegate(),
        prop::option::of(0u64..12),
        prop::option::of(register()),
    )
        .prop_map(|(d, r, g)| {
            let revoke = r.map(|n| Revoke {
                author: d.author,
                nonce: Nonce(n),
            });
            Transaction::Compound(Compound::new(d, revoke, g).expect("same author"))
        })
}

fn transaction() -> impl Strategy<Value = Transaction> {
    prop_oneof![
        5 => delegate().prop_map(Transaction::Delegate),
        2 => revoke().prop_map(Transaction::Revoke),
        3 => register().prop_map(Transaction::Register),
        3 => compound(),
        1 => (player(), "[a-z ]{0,6}").prop_map(|(author, body)| {
            Transaction::PlainMessage(PlainMessage { author, body })
        }),
    ]
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![12 => transaction().prop_map(Op::Tx), 1 => pool().prop_map(Op::Dissolve)]
}

/// Genesis stakes for players 0..5 and a history of up to 40 steps.
pub fn history() -> impl Strategy<Value = (Vec<Stake>, Vec<Op>)> {
    (
        prop::collection::vec(0u64..20, 5),
        prop::collection::vec(op(), 1..40),
    )
}

fn parts(c: &Compound) -> Vec<Transaction> {
    let mut out = Vec::new();
    if let Some(r) = c.revoke() {
        out.push(Transaction::Revoke(r.clone()));
    }
    if let Some(g) = c.register() {
        out.push(Transaction::Register(g.clone()));
    }
    out.push(Transaction::Delegate(c.delegate().clone()));
    out
}

/// Stake conservation, inadmissible identity, compound atomicity, replay
/// equivalence and canonical round trips, checked after every step.
pub fn check_history(stakes: &[Stake], ops: &[Op]) -> Result<(), String> {
    let mut state = LedgerState::genesis(
        stakes
            .iter()
            .enumerate()
            .map(|(i, s)| (PlayerId(i as u32), *s)),
    );
    let total = state.total_stake();
    for (k, op) in ops.iter().enumerate() {
        match op {
            Op::Dissolve(p) => {
                let _ = state.dissolve_in_place(p);
            }
            Op::Tx(tx) => {
                let line = to_canonical(tx);
                if parse_canonical(&line).as_ref() != Ok(tx) {
                    return Err(format!(
                        "step {k}: canonical form does not round-trip: {line}"
                    ));
                }
                let result = state.try_apply(tx);
                if state.admissible(tx).is_ok() != result.is_ok() {
                    return Err(format!(
                        "step {k}: admissible disagrees with apply for {line}"
                    ));
                }
                if let Transaction::Compound(c) = tx {
                    let mut seq = state.clone();
                    let all = parts(c).iter().all(|p| seq.apply_in_place(p).is_ok());
                    match (&result, all) {
                        (Ok(next), true) if next.tables() == seq.tables() => {}
                        (Err(_), false) => {}
                        _ => {
                            return Err(format!("step {k}: compound is not all-or-nothing: {line}"))
                        }
                    }
                }
                match result {
                    Ok(next) => state = next,
                    Err(_) => {
                        if state.apply_transaction(tx) != state {
                            return Err(format!("step {k}: inadmissible {line} changed the state"));
                        }
                    }
                }
            }
        }
        let t = state.tables();
        if t.total_stake() != total {
            return Err(format!(
                "step {k}: total stake {} != {total}",
                t.total_stake()
            ));
        }
        for (p, s) in &t.stake {
            if t.delegated_by(*p) > *s {
                return Err(format!("step {k}: player {p} delegates more than {s}"));
            }
        }
        if let Some((n, _)) = t
            .delegations
            .iter()
            .find(|(_, d)| d.active && !t.is_live_pool(&d.pool))
        {
            return Err(format!("step {k}: delegation {n} active in a dead pool"));
        }
        if state.replay() != state {
            return Err(format!("step {k}: replay differs from the state"));
        }
    }
    Ok(())
}
