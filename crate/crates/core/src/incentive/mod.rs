//! Utilities over ledger states, incentive-consistency classification and
//! the incumbency check.

mod classify;
mod incumbency;
mod model;

pub use classify::{
    classify_transaction, Classification, ClassifyConfig, ClassifyError, Dissent, IcClass,
    DEFAULT_NODE_LIMIT,
};
pub use incumbency::{
    check_incumbency, competitor_registration, incumbency_witnesses, CompetitorSpec,
    IncumbencyWitness,
};
pub use model::{
    evaluate_utility, state_digest, LinearRewardModel, PoolParams, PoolPayout, TableEntry,
    TableModel, UtilityError, UtilityModel,
};
