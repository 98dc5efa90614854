//! Pure-strategy equilibrium search by exhaustive deviation scans.

mod instances;
mod report;
mod spne;
mod verify;

use std::fmt;

use thiserror::Error;

use crate::games::{Check, GameError, Payoff, Player, TheoremId};

pub use instances::{MultiGame, SingleGame};
pub use report::{
    CheckRecord, EquilibriumReport, VerdictRecord, ViolationRecord, ALPHA_CONVENTION,
};
pub use spne::{check_spne, SpneOutcome};
pub use verify::{
    adaptive_conditions, theorem2_characterized, theorem3_conditions, theorem3_family,
    theorem3_profile, theorem6_conditions, verify_kround_extension, verify_theorem2,
    verify_theorem3_family, verify_theorem4, verify_theorem5, verify_theorem6, TheoremReport,
    Verdict, Witness,
};

/// Default cap on the number of profiles an enumeration may visit.
pub const DEFAULT_SPACE_LIMIT: u128 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("profile space has {size} profiles, limit is {limit}")]
    SpaceLimit { size: u128, limit: u128 },
    #[error("hypotheses of {theorem} not met")]
    Hypothesis {
        theorem: TheoremId,
        checks: Vec<Check>,
    },
}

/// A finite normal-form view of a game: a profile space, payoffs, and each
/// player's unilateral deviations from a profile.
pub trait FiniteGame {
    type Profile: Clone + Ord + fmt::Display;

    fn players(&self) -> Vec<Player>;

    fn check(&self, p: &Self::Profile) -> Result<(), GameError>;

    /// Payoffs in the order of [`FiniteGame::players`]. The profile must be
    /// checked.
    fn payoffs(&self, p: &Self::Profile) -> Vec<Payoff>;

    /// Every deviation of player `idx` that changes what it plays, labelled.
    fn deviations(&self, p: &Self::Profile, idx: usize) -> Vec<(String, Self::Profile)>;

    fn space_size(&self) -> u128;

    /// The whole profile space in canonical order.
    fn profiles(&self) -> Vec<Self::Profile>;
}

/// A unilateral deviation and what it changes for the deviator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation<P> {
    pub player: Player,
    pub deviation: String,
    pub profile: P,
    pub current: Payoff,
    pub deviated: Payoff,
    pub gain: Payoff,
}

impl<P: fmt::Display> fmt::Display for Violation<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} -> {}: {} vs {} (gain {})",
            self.player, self.deviation, self.deviated, self.current, self.gain
        )
    }
}

/// Result of scanning every unilateral deviation from one profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scan<P> {
    /// Strictly improving deviations.
    pub violations: Vec<Violation<P>>,
    /// Deviations with zero gain. Diagnostic only.
    pub indifferent: Vec<Violation<P>>,
}

impl<P> Scan<P> {
    pub fn is_nash(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn best_response_violations<G: FiniteGame>(
    game: &G,
    profile: &G::Profile,
) -> Result<Scan<G::Profile>, GameError> {
    game.check(profile)?;
    Ok(scan_unchecked(game, profile))
}

fn scan_unchecked<G: FiniteGame>(game: &G, profile: &G::Profile) -> Scan<G::Profile> {
    let players = game.players();
    let base = game.payoffs(profile);
    let mut scan = Scan {
        violations: Vec::new(),
        indifferent: Vec::new(),
    };
    for (idx, &player) in players.iter().enumerate() {
        for (label, q) in game.deviations(profile, idx) {
            let deviated = game.payoffs(&q)[idx];
            let gain = deviated - base[idx];
            let v = Violation {
                player,
                deviation: label,
                profile: q,
                current: base[idx],
                deviated,
                gain,
            };
            if gain > Payoff::ZERO {
                scan.violations.push(v);
            } else if gain == Payoff::ZERO {
                scan.indifferent.push(v);
            }
        }
    }
    scan
}

/// Stops at the first improving deviation.
pub fn is_pure_nash<G: FiniteGame>(game: &G, profile: &G::Profile) -> bool {
    let base = game.payoffs(profile);
    (0..base.len()).all(|idx| {
        game.deviations(profile, idx)
            .iter()
            .all(|(_, q)| game.payoffs(q)[idx] <= base[idx])
    })
}

/// Every pure Nash equilibrium, canonically sorted.
pub fn enumerate_pure_nash<G: FiniteGame>(
    game: &G,
    limit: u128,
) -> Result<Vec<G::Profile>, EngineError> {
    let size = game.space_size();
    if size > limit {
        return Err(EngineError::SpaceLimit { size, limit });
    }
    let mut out: Vec<G::Profile> = game
        .profiles()
        .into_iter()
        .filter(|p| is_pure_nash(game, p))
        .collect();
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests;
