//! Multi-round agent-based simulation over the ledger, the audit beacon
//! and the utility models.

mod engine;
mod experiments;
mod export;
mod scenario;

#[cfg(test)]
mod tests;

use thiserror::Error;

use crate::games::GameError;
use crate::incentive::UtilityError;

pub use engine::{
    run_rounds, run_with, Decision, GameRound, PoolSnapshot, RoundRecord, SimOptions, SimTrace,
    Simulator, Submission, TxEvent,
};
pub use experiments::{
    cartel_equilibrium_check, liveness_by_id, liveness_monitor, theorem1_experiment, CartelCheck,
    CartelPath, CartelReport, DeviationCheck, LivenessVerdict, Theorem1Report,
};
pub use export::{audits_csv, pools_csv, summary, trace_csv, TraceSummary};
pub use scenario::{
    DelegationSpec, GameBinding, MemberPolicy, OperatorPolicy, PlayerSpec, Policies, PoolSpec,
    Production, Scenario, TxFilter, Workload, SCENARIO_VERSION,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("policy mismatch: {0}")]
    Policy(String),
    #[error(transparent)]
    Utility(#[from] UtilityError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("transaction was never submitted")]
    NotSubmitted,
    #[error("byzantine fraction {fraction} is not below the threshold {threshold}")]
    AboveThreshold { fraction: f64, threshold: f64 },
    #[error("precondition unmet: {0}")]
    Precondition(String),
}
