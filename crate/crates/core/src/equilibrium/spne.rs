use crate::games::{GameError, MultiRoundProfile, UtilityTable};

use super::instances::MultiGame;
use super::{best_response_violations, Violation};

/// Outcome of a subgame-perfection check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpneOutcome {
    pub holds: bool,
    /// Subgame `r` (rounds `r+1..m`) where the first failure was found.
    /// Subgames are scanned from the last one back to the whole game.
    pub failing_subgame: Option<usize>,
    pub violations: Vec<Violation<MultiRoundProfile>>,
}

/// Checks every subgame `r = m-1, ..., 0`: with rounds `1..=r` frozen as
/// played, no player gains by changing its committed continuation.
pub fn check_spne(
    table: &UtilityTable,
    profile: &MultiRoundProfile,
) -> Result<SpneOutcome, GameError> {
    let game = MultiGame::new(table.clone(), profile.m());
    for r in (0..profile.m()).rev() {
        let scan = best_response_violations(&game.subgame(r), profile)?;
        if !scan.is_nash() {
            return Ok(SpneOutcome {
                holds: false,
                failing_subgame: Some(r),
                violations: scan.violations,
            });
        }
    }
    Ok(SpneOutcome {
        holds: true,
        failing_subgame: None,
        violations: Vec::new(),
    })
}
