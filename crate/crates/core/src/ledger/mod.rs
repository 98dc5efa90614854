//! Deterministic ledger state machine.
//!
//! Inadmissible transactions are not errors: they leave the state as it was,
//! and [`LedgerState::admissible`] reports the reason.

mod canonical;
mod state;
mod tx;

pub use canonical::{
    entry_to_canonical, history_digest, history_to_canonical, parse_canonical, to_canonical,
    ParseError,
};
pub use state::{
    build_pool_table, check_extension, CompoundStep, DelegationRecord, DissolveError, HistoryEntry,
    Inadmissible, LedgerState, PoolEntry, PoolRecord, PoolTable, Tables,
};
pub use tx::{
    compose_compound, decompose_compound, ComposeError, Compound, Delegate, Nonce, PlainMessage,
    PlayerId, PoolName, Register, Revoke, Stake, Transaction, TxKind,
};

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;

    fn p(i: u32) -> PlayerId {
        PlayerId(i)
    }

    fn delegate(author: u32, amount: Stake, pool: &str, nonce: u64) -> Delegate {
        Delegate {
            author: p(author),
            amount,
            pool: pool.into(),
            nonce: Nonce(nonce),
        }
    }

    fn register(author: u32, pool: &str) -> Register {
        Register {
            author: p(author),
            pool: pool.into(),
            params: String::new(),
        }
    }

    fn revoke(author: u32, nonce: u64) -> Revoke {
        Revoke {
            author: p(author),
            nonce: Nonce(nonce),
        }
    }

    fn genesis() -> LedgerState {
        LedgerState::genesis([(p(1), 10), (p(2), 5), (p(3), 7)])
    }

    #[test]
    fn delegate_to_unregistered_pool_is_identity() {
        let s = LedgerState::genesis([(p(1), 10)]);
        let tx = Transaction::Delegate(delegate(1, 10, "A", 1));
        assert_eq!(s.apply_transaction(&tx), s);
        assert_eq!(
            s.admissible(&tx),
            Err(Inadmissible::UnknownPool("A".into()))
        );
    }

    #[test]
    fn delegate_updates_pool_table() {
        let s = genesis().apply_transaction(&register(1, "A").into());
        let s = s.apply_transaction(&delegate(1, 10, "A", 1).into());
        let rec = s.delegation(Nonce(1)).unwrap();
        assert_eq!(
            rec,
            &DelegationRecord {
                author: p(1),
                amount: 10,
                pool: "A".into(),
                active: true
            }
        );
        assert_eq!(s.pool_table()[&PoolName::from("A")].delegated_stake, 10);
    }

    #[test]
    fn compound_revokes_registers_and_delegates_atomically() {
        let s = genesis()
            .apply_transaction(&register(3, "A").into())
            .apply_transaction(&delegate(1, 10, "A", 1).into());
        let c = compose_compound(
            delegate(1, 10, "B", 2),
            Some(revoke(1, 1)),
            Some(register(2, "B")),
        )
        .unwrap();
        assert_eq!(s.admissible(&c), Ok(()));
        let t = s.apply_transaction(&c);
        assert!(!t.delegation(Nonce(1)).unwrap().active);
        assert!(t.delegation(Nonce(2)).unwrap().active);
        assert_eq!(t.pool(&"B".into()).unwrap().operator, p(2));
        let table = t.pool_table();
        assert_eq!(table[&PoolName::from("A")].delegated_stake, 0);
        assert_eq!(table[&PoolName::from("B")].delegated_stake, 10);
        assert_eq!(t.history().len(), s.history().len() + 1);
    }

    #[test]
    fn compound_failure_is_all_or_nothing() {
        let s = genesis().apply_transaction(&register(3, "A").into());
        // The register step is fine but the delegation over-spends.
        let c = compose_compound(delegate(2, 6, "B", 2), None, Some(register(2, "B"))).unwrap();
        let err = s.admissible(&c).unwrap_err();
        assert!(matches!(
            err,
            Inadmissible::Compound {
                step: CompoundStep::Delegate,
                ..
            }
        ));
        assert_eq!(s.apply_transaction(&c), s);
        assert!(s.apply_transaction(&c).pool(&"B".into()).is_none());
    }

    #[test]
    fn revoke_of_inactive_nonce() {
        let s = genesis()
            .apply_transaction(&register(3, "A").into())
            .apply_transaction(&delegate(1, 10, "A", 1).into())
            .apply_transaction(&revoke(1, 1).into());
        assert_eq!(
            s.admissible(&revoke(1, 1).into()),
            Err(Inadmissible::InactiveNonce(Nonce(1)))
        );
    }

    #[test]
    fn revoke_of_foreign_and_unknown_nonce() {
        let s = genesis()
            .apply_transaction(&register(3, "A").into())
            .apply_transaction(&delegate(1, 10, "A", 1).into());
        assert_eq!(
            s.admissible(&revoke(2, 1).into()),
            Err(Inadmissible::NotOwner {
                nonce: Nonce(1),
                owner: p(1)
            })
        );
        assert_eq!(
            s.admissible(&revoke(1, 9).into()),
            Err(Inadmissible::UnknownNonce(Nonce(9)))
        );
    }

    #[test]
    fn duplicate_pool_registration() {
        let s = genesis().apply_transaction(&register(1, "A").into());
        assert_eq!(
            s.admissible(&register(2, "A").into()),
            Err(Inadmissible::DuplicatePool("A".into()))
        );
    }

    #[test]
    fn compound_may_delegate_into_the_pool_it_registers() {
        let s = genesis();
        let c = compose_compound(delegate(1, 4, "N", 1), None, Some(register(2, "N"))).unwrap();
        assert_eq!(s.admissible(&c), Ok(()));
        // Same outcome as replaying the parts in order.
        let stepwise = s
            .apply_transaction(&register(2, "N").into())
            .apply_transaction(&delegate(1, 4, "N", 1).into());
        assert_eq!(s.apply_transaction(&c).tables(), stepwise.tables());
    }

    #[test]
    fn over_delegation_and_double_spend() {
        let s = genesis().apply_transaction(&register(1, "A").into());
        assert_eq!(
            s.admissible(&delegate(2, 6, "A", 1).into()),
            Err(Inadmissible::OverDelegation {
                requested: 6,
                owned: 5
            })
        );
        let s = s.apply_transaction(&delegate(2, 4, "A", 1).into());
        assert_eq!(
            s.admissible(&delegate(2, 2, "A", 2).into()),
            Err(Inadmissible::AlreadyDelegated {
                requested: 2,
                available: 1
            })
        );
        assert_eq!(
            s.admissible(&delegate(1, 2, "A", 1).into()),
            Err(Inadmissible::DuplicateNonce(Nonce(1)))
        );
        assert_eq!(
            s.admissible(&delegate(1, 0, "A", 5).into()),
            Err(Inadmissible::ZeroAmount)
        );
        assert_eq!(
            s.admissible(&delegate(9, 1, "A", 5).into()),
            Err(Inadmissible::UnknownPlayer(p(9)))
        );
    }

    #[test]
    fn pool_table_examples() {
        assert!(genesis().pool_table().is_empty());
        let s = genesis()
            .apply_transaction(&register(1, "A").into())
            .apply_transaction(&delegate(1, 10, "A", 1).into())
            .apply_transaction(&delegate(2, 5, "A", 2).into());
        let a = &s.pool_table()[&PoolName::from("A")];
        assert_eq!(a.operator, p(1));
        assert_eq!(a.delegated_stake, 15);
        assert_eq!(a.members, BTreeSet::from([p(1), p(2)]));

        let d = s.dissolve(&"A".into()).unwrap();
        let a = &d.pool_table()[&PoolName::from("A")];
        assert!(a.dissolved);
        assert_eq!(a.delegated_stake, 0);
        assert!(a.members.is_empty());
        assert_eq!(d.pool_table(), d.replay().pool_table());
    }

    #[test]
    fn degenerate_compound_matches_plain_delegate() {
        let s = genesis().apply_transaction(&register(1, "A").into());
        let plain = s.apply_transaction(&delegate(2, 5, "A", 1).into());
        let c = compose_compound(delegate(2, 5, "A", 1), None, None).unwrap();
        assert_eq!(s.apply_transaction(&c).tables(), plain.tables());
    }

    #[test]
    fn extension_witness() {
        let x = genesis();
        assert!(check_extension(&x, &x, &[]));
        let tx: Transaction = register(1, "A").into();
        let y = x.apply_transaction(&tx);
        assert!(check_extension(&x, &y, std::slice::from_ref(&tx)));
        let bad: Transaction = delegate(1, 1, "Z", 1).into();
        assert!(!check_extension(&x, &y, &[bad]));
        assert!(!check_extension(&x, &x, std::slice::from_ref(&tx)));
    }

    #[test]
    fn dissolved_name_can_be_registered_again() {
        let s = genesis()
            .apply_transaction(&register(1, "A").into())
            .dissolve(&"A".into())
            .unwrap();
        assert_eq!(
            s.dissolve(&"A".into()),
            Err(DissolveError::AlreadyDissolved("A".into()))
        );
        assert_eq!(
            genesis().dissolve(&"A".into()),
            Err(DissolveError::UnknownPool("A".into()))
        );
        let t = s.apply_transaction(&register(1, "A").into());
        let rec = t.pool(&"A".into()).unwrap();
        assert!(!rec.dissolved);
        assert_eq!(rec.registrations, 2);
    }
}
