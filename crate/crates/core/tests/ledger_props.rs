mod common;

use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn ledger_invariants_hold_on_random_histories((stakes, ops) in common::history()) {
        if let Err(e) = common::check_history(&stakes, &ops) {
            return Err(TestCaseError::fail(e));
        }
    }
}
