//! Trace export: CSV tables for plotting and a structured summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::ledger::{PlayerId, PoolName, Stake};

use super::engine::{Decision, SimTrace};

fn num(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

/// One row per decided transaction; rounds without any get a single row
/// with the transaction columns empty. Utility columns repeat the round's
/// value on every row of that round.
pub fn trace_csv(trace: &SimTrace) -> String {
    let mut out = String::from("round,rho,audited_pool,producer,tx_id,tx_kind,decision");
    for p in &trace.players {
        let _ = write!(out, ",u_{p}");
    }
    out.push('\n');
    for rec in &trace.rounds {
        let utils: String = trace
            .players
            .iter()
            .map(|p| format!(",{}", num(rec.utilities.get(p).copied().unwrap_or(0.0))))
            .collect();
        let head = format!(
            "{},{},{},{}",
            rec.round,
            rec.rho,
            opt(&rec.audited_pool),
            opt(&rec.producer)
        );
        if rec.events.is_empty() {
            let _ = writeln!(out, "{head},,,{utils}");
        }
        for e in &rec.events {
            let _ = writeln!(
                out,
                "{head},{},{},{}{utils}",
                e.tx_id,
                e.kind.as_str(),
                e.decision.as_str()
            );
        }
    }
    out
}

pub fn pools_csv(trace: &SimTrace) -> String {
    let mut out = String::from("round,pool,operator,delegated_stake,live\n");
    for rec in &trace.rounds {
        for p in &rec.pools {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                rec.round, p.name, p.operator, p.delegated, p.live
            );
        }
    }
    out
}

pub fn audits_csv(trace: &SimTrace) -> String {
    let mut out = String::from("round,rho,audited_pool,producer,new_pools\n");
    for rec in &trace.rounds {
        let fresh: Vec<&str> = rec.new_pools.iter().map(|p| p.as_str()).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            rec.round,
            rec.rho,
            opt(&rec.audited_pool),
            opt(&rec.producer),
            fresh.join(";")
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSummary {
    pub scenario: String,
    pub seed: u64,
    pub rounds: usize,
    pub submitted: usize,
    pub decisions: BTreeMap<&'static str, usize>,
    pub audits: usize,
    pub new_pools: Vec<(u64, PoolName)>,
    pub total_stake: Option<Stake>,
    pub cumulative: BTreeMap<PlayerId, f64>,
}

impl TraceSummary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summaries serialize");
        s.push('\n');
        s
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "scenario   {}",
            &self.scenario[..self.scenario.len().min(16)]
        );
        let _ = writeln!(out, "seed       {}", self.seed);
        let _ = writeln!(out, "rounds     {}", self.rounds);
        let _ = writeln!(out, "submitted  {}", self.submitted);
        for (d, n) in &self.decisions {
            let _ = writeln!(out, "  {d:<10} {n}");
        }
        let _ = writeln!(out, "audits     {}", self.audits);
        for (r, p) in &self.new_pools {
            let _ = writeln!(out, "new pool   {p} (round {r})");
        }
        if let Some(s) = self.total_stake {
            let _ = writeln!(out, "stake      {s}");
        }
        let _ = writeln!(out, "cumulative utilities:");
        for (p, v) in &self.cumulative {
            let _ = writeln!(out, "  {p:>6} {}", num(*v));
        }
        out
    }
}

pub fn summary(trace: &SimTrace) -> TraceSummary {
    let mut decisions: BTreeMap<&'static str, usize> = [
        Decision::Applied,
        Decision::Censored,
        Decision::Rejected,
        Decision::Withdrawn,
    ]
    .into_iter()
    .map(|d| (d.as_str(), 0))
    .collect();
    for rec in &trace.rounds {
        for e in &rec.events {
            *decisions.entry(e.decision.as_str()).or_default() += 1;
        }
    }
    TraceSummary {
        scenario: trace.scenario.clone(),
        seed: trace.seed,
        rounds: trace.rounds.len(),
        submitted: trace.submissions.len(),
        decisions,
        audits: trace
            .rounds
            .iter()
            .filter(|r| r.audited_pool.is_some())
            .count(),
        new_pools: trace
            .rounds
            .iter()
            .flat_map(|r| r.new_pools.iter().map(move |p| (r.round, p.clone())))
            .collect(),
        total_stake: trace.rounds.last().map(|r| r.total_stake),
        cumulative: trace.cumulative.clone(),
    }
}
