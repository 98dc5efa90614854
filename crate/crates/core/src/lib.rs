//! Simulation and equilibrium analysis of transaction censorship in pooled
//! proof-of-stake ledgers.

pub mod beacon;
pub mod equilibrium;
pub mod games;
pub mod incentive;
pub mod ledger;
pub mod sim;
