//! Serializable reports.

use std::collections::BTreeMap;
use std::fmt::{self, Display, Write as _};

use serde::Serialize;

use crate::games::{Check, MultiRoundProfile, Payoff, TheoremId};

use super::spne::SpneOutcome;
use super::verify::{TheoremReport, Verdict, Witness};
use super::{Scan, Violation};

/// Recorded in every report: how the censored pool stake is measured.
pub const ALPHA_CONVENTION: &str = "alpha = s_P + stake of capitulating members";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ViolationRecord {
    pub player: String,
    pub deviation: String,
    pub profile: String,
    pub current: Payoff,
    pub deviated: Payoff,
    pub gain: Payoff,
}

impl<P: Display> From<&Violation<P>> for ViolationRecord {
    fn from(v: &Violation<P>) -> Self {
        ViolationRecord {
            player: v.player.to_string(),
            deviation: v.deviation.clone(),
            profile: v.profile.to_string(),
            current: v.current,
            deviated: v.deviated,
            gain: v.gain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckRecord {
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WitnessRecord {
    pub profile: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subgame: Option<usize>,
    pub violations: Vec<ViolationRecord>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status")]
pub enum VerdictRecord {
    #[serde(rename = "CONFIRMED")]
    Confirmed,
    #[serde(rename = "COUNTEREXAMPLE")]
    Counterexample { witness: Vec<WitnessRecord> },
}

impl fmt::Display for VerdictRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictRecord::Confirmed => "CONFIRMED",
            VerdictRecord::Counterexample { .. } => "COUNTEREXAMPLE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquilibriumReport {
    /// Digest of the game file.
    pub game: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorem: Option<TheoremId>,
    pub alpha_convention: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    pub equilibria: Vec<String>,
    pub violations: Vec<ViolationRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub indifferent: Vec<ViolationRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subgame: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<VerdictRecord>,
    pub hypotheses: BTreeMap<String, CheckRecord>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub conditions: BTreeMap<String, CheckRecord>,
}

fn checks(list: &[Check]) -> BTreeMap<String, CheckRecord> {
    list.iter()
        .map(|c| {
            (
                c.name.clone(),
                CheckRecord {
                    holds: c.holds,
                    detail: c.detail.clone(),
                },
            )
        })
        .collect()
}

fn witness<P: Display>(w: &Witness<P>) -> WitnessRecord {
    WitnessRecord {
        profile: w.profile.to_string(),
        subgame: w.subgame,
        violations: w.violations.iter().map(ViolationRecord::from).collect(),
        note: w.note.clone(),
    }
}

impl EquilibriumReport {
    fn empty(game: &str, command: &str) -> Self {
        EquilibriumReport {
            game: game.to_string(),
            command: command.to_string(),
            theorem: None,
            alpha_convention: ALPHA_CONVENTION,
            profile: None,
            equilibria: Vec::new(),
            violations: Vec::new(),
            indifferent: Vec::new(),
            subgame: None,
            verdict: None,
            hypotheses: BTreeMap::new(),
            conditions: BTreeMap::new(),
        }
    }

    pub fn nash<P: Display>(game: &str, equilibria: &[P]) -> Self {
        EquilibriumReport {
            equilibria: equilibria.iter().map(|p| p.to_string()).collect(),
            ..Self::empty(game, "nash")
        }
    }

    pub fn scan<P: Display>(game: &str, profile: &P, scan: &Scan<P>) -> Self {
        EquilibriumReport {
            profile: Some(profile.to_string()),
            equilibria: if scan.is_nash() {
                vec![profile.to_string()]
            } else {
                Vec::new()
            },
            violations: scan.violations.iter().map(ViolationRecord::from).collect(),
            indifferent: scan.indifferent.iter().map(ViolationRecord::from).collect(),
            ..Self::empty(game, "nash")
        }
    }

    pub fn spne(game: &str, profile: &MultiRoundProfile, outcome: &SpneOutcome) -> Self {
        EquilibriumReport {
            profile: Some(profile.to_string()),
            equilibria: if outcome.holds {
                vec![profile.to_string()]
            } else {
                Vec::new()
            },
            violations: outcome
                .violations
                .iter()
                .map(ViolationRecord::from)
                .collect(),
            subgame: outcome.failing_subgame,
            ..Self::empty(game, "spne")
        }
    }

    pub fn theorem<P: Display>(game: &str, report: &TheoremReport<P>) -> Self {
        let verdict = match &report.verdict {
            Verdict::Confirmed => VerdictRecord::Confirmed,
            Verdict::Counterexample(ws) => VerdictRecord::Counterexample {
                witness: ws.iter().map(witness).collect(),
            },
        };
        EquilibriumReport {
            theorem: Some(report.theorem),
            equilibria: report.equilibria.iter().map(|p| p.to_string()).collect(),
            violations: report
                .witnesses()
                .iter()
                .flat_map(|w| w.violations.iter().map(ViolationRecord::from))
                .collect(),
            verdict: Some(verdict),
            hypotheses: checks(&report.hypotheses),
            conditions: checks(&report.conditions),
            ..Self::empty(game, "verify")
        }
    }

    /// A verifier that refused to run.
    pub fn hypothesis_failure(game: &str, theorem: TheoremId, list: &[Check]) -> Self {
        EquilibriumReport {
            theorem: Some(theorem),
            hypotheses: checks(list),
            ..Self::empty(game, "verify")
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// Human-readable summary.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "game {}", &self.game[..self.game.len().min(16)]);
        if let Some(t) = self.theorem {
            let _ = writeln!(out, "theorem {t}");
        }
        if let Some(p) = &self.profile {
            let _ = writeln!(out, "profile {p}");
        }
        for (name, c) in &self.hypotheses {
            let _ = writeln!(out, "  hypothesis {:<32} {:<5} {}", name, c.holds, c.detail);
        }
        for (name, c) in &self.conditions {
            let _ = writeln!(out, "  condition  {:<32} {:<5} {}", name, c.holds, c.detail);
        }
        let _ = writeln!(out, "equilibria: {}", self.equilibria.len());
        for e in &self.equilibria {
            let _ = writeln!(out, "  {e}");
        }
        if let Some(r) = self.subgame {
            let _ = writeln!(out, "first failing subgame: {r}");
        }
        if !self.violations.is_empty() {
            let _ = writeln!(out, "violations:");
            let _ = writeln!(out, "  {:<20} {:<24} {:>10}", "player", "deviation", "gain");
            for v in &self.violations {
                let _ = writeln!(
                    out,
                    "  {:<20} {:<24} {:>10}",
                    v.player,
                    v.deviation,
                    v.gain.to_string()
                );
            }
        }
        if let Some(v) = &self.verdict {
            let _ = writeln!(out, "verdict: {v}");
            if let VerdictRecord::Counterexample { witness } = v {
                for w in witness {
                    let _ = writeln!(out, "  witness {} ({})", w.profile, w.note);
                }
            }
        }
        out
    }
}
