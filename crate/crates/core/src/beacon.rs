//! Per-round randomness and the randomized pool-dissolution audit.
//!
//! The randomness for round `r` is output `r + 1` of a SplitMix64 stream
//! (Steele, Lea and Flood, 2014) whose initial state is the seed: the state
//! advances by the golden-gamma constant `0x9E3779B97F4A7C15` and each state
//! is passed through the standard SplitMix64 finalizer. Any implementation
//! of that generator reproduces the same audit schedule.
//!
//! Audit selection is `rho mod k` over the live pools in name order. For
//! `k <= 1000` the modulo bias is below `2^-54`.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::ledger::{DissolveError, LedgerState, PoolName};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BeaconError {
    #[error("no pools to audit")]
    EmptyPoolList,
    #[error("a uniformity test needs at least two bins")]
    TooFewBins,
}

fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Beacon {
    pub seed: u64,
}

impl Beacon {
    pub fn new(seed: u64) -> Self {
        Beacon { seed }
    }

    /// Randomness `rho` for `round`.
    pub fn draw(&self, round: u64) -> u64 {
        draw_randomness(*self, round)
    }
}

pub fn draw_randomness(beacon: Beacon, round: u64) -> u64 {
    let state = beacon
        .seed
        .wrapping_add(round.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    splitmix64_mix(state)
}

/// `pools[rho mod |pools|]`. The caller passes pools in canonical order.
pub fn select_pool_for_audit(rho: u64, pools: &[PoolName]) -> Result<&PoolName, BeaconError> {
    if pools.is_empty() {
        return Err(BeaconError::EmptyPoolList);
    }
    let idx = (rho % pools.len() as u64) as usize;
    Ok(&pools[idx])
}

pub fn dissolve_pool(state: &LedgerState, pool: &PoolName) -> Result<LedgerState, DissolveError> {
    state.dissolve(pool)
}

/// Outcome of one audit round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditEvent {
    pub round: u64,
    pub rho: u64,
    /// `None` when there was no live pool to audit.
    pub pool: Option<PoolName>,
}

/// Draws `rho` for the state's current round and dissolves the selected pool.
/// Rounds without live pools skip the audit.
pub fn run_audit(beacon: Beacon, state: &mut LedgerState) -> AuditEvent {
    let round = state.round();
    let rho = beacon.draw(round);
    let live = state.live_pools();
    let pool = select_pool_for_audit(rho, &live).ok().cloned();
    if let Some(p) = &pool {
        state
            .dissolve_in_place(p)
            .expect("live pools can always be dissolved");
    }
    AuditEvent { round, rho, pool }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ChiSquareReport {
    pub bins: usize,
    pub draws: u64,
    pub counts: Vec<u64>,
    pub statistic: f64,
    pub p_value: f64,
}

/// Pearson chi-square goodness of fit of `counts` against the uniform law.
pub fn chi_square_uniform(counts: &[u64]) -> Result<ChiSquareReport, BeaconError> {
    if counts.len() < 2 {
        return Err(BeaconError::TooFewBins);
    }
    let draws: u64 = counts.iter().sum();
    let expected = draws as f64 / counts.len() as f64;
    let statistic = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum::<f64>();
    let dist = ChiSquared::new((counts.len() - 1) as f64).expect("positive degrees of freedom");
    Ok(ChiSquareReport {
        bins: counts.len(),
        draws,
        counts: counts.to_vec(),
        statistic,
        p_value: dist.sf(statistic),
    })
}

/// Audit-selection frequencies over `draws` consecutive rounds with `pools`
/// equally eligible pools, tested for uniformity.
pub fn audit_uniformity(
    seed: u64,
    pools: usize,
    draws: u64,
) -> Result<ChiSquareReport, BeaconError> {
    let names: Vec<PoolName> = (0..pools)
        .map(|i| PoolName(format!("pool{i:04}")))
        .collect();
    let mut counts = vec![0u64; pools.max(1)];
    let beacon = Beacon::new(seed);
    for round in 0..draws {
        let chosen = select_pool_for_audit(beacon.draw(round), &names)?;
        let idx = names.binary_search(chosen).expect("selected from the list");
        counts[idx] += 1;
    }
    chi_square_uniform(&counts)
}
