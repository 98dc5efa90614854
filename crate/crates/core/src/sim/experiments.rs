//! Liveness monitoring, the Byzantine-operator liveness experiment and the
//! cartel equilibrium check.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::games::{literal_sequences, LeaderAction, Payoff};
use crate::incentive::{evaluate_utility, IcClass};
use crate::ledger::{PlayerId, PoolName, Transaction};

use super::engine::{run_rounds, SimOptions, SimTrace, Simulator};
use super::scenario::{OperatorPolicy, Policies, Scenario, TxFilter};
use super::SimError;

/// Gains at or below this are treated as zero for float utilities.
const GAIN_TOLERANCE: f64 = 1e-9;

/// `true` iff `tx` was applied within `u` rounds of its first submission:
/// submitted in round `s`, it must be applied by round `s + u - 1`.
pub fn liveness_monitor(trace: &SimTrace, tx: &Transaction, u: u64) -> Result<bool, SimError> {
    let id = trace.find(tx).ok_or(SimError::NotSubmitted)?;
    liveness_by_id(trace, id, u)
}

pub fn liveness_by_id(trace: &SimTrace, tx_id: u64, u: u64) -> Result<bool, SimError> {
    let sub = trace
        .submissions
        .get(&tx_id)
        .ok_or(SimError::NotSubmitted)?;
    Ok(trace
        .applied_round(tx_id)
        .is_some_and(|a| a - sub.round < u))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LivenessVerdict {
    pub tx_id: u64,
    pub submitted: u64,
    /// Rounds up to and including the first one produced by a rational
    /// operator.
    pub u: u64,
    pub applied: Option<u64>,
    pub live: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationCheck {
    pub operator: PlayerId,
    pub tx_id: u64,
    pub gain: f64,
    /// Rounds replayed before the deviating run rejoined the base run.
    pub replayed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Report {
    pub fraction: f64,
    pub threshold: f64,
    pub rounds: u64,
    pub byzantine: Vec<PlayerId>,
    pub rational: Vec<PlayerId>,
    pub liveness: Vec<LivenessVerdict>,
    /// Strongly consistent submissions whose window runs past the end.
    pub window_open: Vec<u64>,
    /// Everything else, with its class: no liveness is claimed for these.
    pub outside_scope: Vec<(u64, IcClass, bool)>,
    pub deviations: Vec<DeviationCheck>,
    pub max_gain: f64,
    pub all_live: bool,
    pub no_positive_gain: bool,
}

impl Theorem1Report {
    pub fn holds(&self) -> bool {
        self.all_live && self.no_positive_gain
    }
}

/// Runs the scenario with a seeded choice of Byzantine operators (who
/// censor everything) and rational includers for the rest, then checks
/// liveness of every strongly incentive-consistent submission and replays
/// each inclusion with its includer postponing it.
pub fn theorem1_experiment(
    scenario: &Scenario,
    fraction: f64,
    rounds: u64,
    seed: u64,
) -> Result<Theorem1Report, SimError> {
    let threshold = scenario
        .byzantine_threshold
        .ok_or_else(|| SimError::Scenario("no byzantine threshold declared".into()))?;
    if !(0.0..threshold).contains(&fraction) {
        return Err(SimError::AboveThreshold {
            fraction,
            threshold,
        });
    }
    if scenario.utility.is_none() {
        return Err(SimError::Scenario(
            "the experiment needs a utility model".into(),
        ));
    }
    let mut operators = scenario.operators();
    let count = (fraction * operators.len() as f64 + 1e-9).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    operators.shuffle(&mut rng);
    let mut byzantine: Vec<PlayerId> = operators[..count].to_vec();
    let mut rational: Vec<PlayerId> = operators[count..].to_vec();
    byzantine.sort();
    rational.sort();

    let mut policies = scenario.policies.clone();
    for op in &byzantine {
        policies.operators.insert(
            *op,
            OperatorPolicy::ByzantineCensor {
                target: TxFilter::All,
            },
        );
    }
    for op in &rational {
        policies
            .operators
            .insert(*op, OperatorPolicy::RationalIncluder { strategy: None });
    }

    let options = SimOptions {
        classify_submissions: true,
        ..SimOptions::default()
    };
    let mut sim = Simulator::new(
        Arc::new(scenario.clone()),
        Arc::new(policies),
        seed,
        options,
    )?;
    let mut snapshots = Vec::with_capacity(rounds as usize + 1);
    let mut trace = SimTrace {
        scenario: scenario.digest(),
        seed,
        players: sim.state().players().collect(),
        rounds: Vec::new(),
        submissions: Default::default(),
        cumulative: sim.state().players().map(|p| (p, 0.0)).collect(),
    };
    for _ in 0..rounds {
        snapshots.push(sim.clone());
        let (rec, subs) = sim.step()?;
        for (p, v) in &rec.utilities {
            *trace.cumulative.entry(*p).or_default() += v;
        }
        trace.submissions.extend(subs);
        trace.rounds.push(rec);
    }
    snapshots.push(sim);

    let rational_set: BTreeSet<PlayerId> = rational.iter().copied().collect();
    let mut liveness = Vec::new();
    let mut window_open = Vec::new();
    let mut outside_scope = Vec::new();
    for (id, sub) in &trace.submissions {
        let class = sub.class.unwrap_or(IcClass::Indeterminate);
        let applied = trace.applied_round(*id);
        if class != IcClass::StronglyIc {
            outside_scope.push((*id, class, applied.is_some()));
            continue;
        }
        let slot = trace.rounds[sub.round as usize..]
            .iter()
            .find(|r| r.producer.is_some_and(|p| rational_set.contains(&p)))
            .map(|r| r.round);
        match slot {
            None => window_open.push(*id),
            Some(s) => {
                let u = s - sub.round + 1;
                liveness.push(LivenessVerdict {
                    tx_id: *id,
                    submitted: sub.round,
                    u,
                    applied,
                    live: liveness_by_id(&trace, *id, u)?,
                });
            }
        }
    }

    let mut deviations = Vec::new();
    for v in &liveness {
        let Some(a) = v.applied else { continue };
        let Some(op) = trace.rounds[a as usize].producer else {
            continue;
        };
        if !rational_set.contains(&op) {
            continue;
        }
        let mut dev = snapshots[a as usize].clone();
        dev.set_postpone(Some((op, v.tx_id)));
        let mut gain = 0.0;
        let mut replayed = 0;
        for r in a..rounds {
            let (rec, _) = dev.step()?;
            replayed += 1;
            let base = trace.rounds[r as usize]
                .utilities
                .get(&op)
                .copied()
                .unwrap_or(0.0);
            gain += rec.utilities.get(&op).copied().unwrap_or(0.0) - base;
            if dev.converged_with(&snapshots[r as usize + 1]) {
                break;
            }
        }
        deviations.push(DeviationCheck {
            operator: op,
            tx_id: v.tx_id,
            gain,
            replayed,
        });
    }
    let max_gain = deviations.iter().map(|d| d.gain).fold(0.0, f64::max);
    Ok(Theorem1Report {
        fraction,
        threshold,
        rounds,
        byzantine,
        rational,
        all_live: liveness.iter().all(|v| v.live),
        liveness,
        window_open,
        outside_scope,
        no_positive_gain: deviations.iter().all(|d| d.gain <= GAIN_TOLERANCE),
        deviations,
        max_gain,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CartelPath {
    /// Pool registrations against incumbents, no audits.
    Static,
    /// A game-shaped scenario: audits, compounds and table utilities.
    Mechanism,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CartelCheck {
    pub operator: PlayerId,
    pub deviation: String,
    pub base: f64,
    pub deviated: f64,
    pub gain: f64,
    /// Exact totals, for game-shaped scenarios.
    pub exact: Option<(Payoff, Payoff)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CartelReport {
    pub path: CartelPath,
    pub audited_pool: Option<PoolName>,
    pub checks: Vec<CartelCheck>,
    pub witness: Option<CartelCheck>,
}

impl CartelReport {
    pub fn confirmed(&self) -> bool {
        self.witness.is_none()
    }

    pub fn verdict(&self) -> &'static str {
        if self.confirmed() {
            "CONFIRMED"
        } else {
            "COUNTEREXAMPLE"
        }
    }
}

fn best_witness(checks: &[CartelCheck]) -> Option<CartelCheck> {
    checks
        .iter()
        .filter(|c| match c.exact {
            Some((b, d)) => d > b,
            None => c.gain > GAIN_TOLERANCE,
        })
        .max_by(|a, b| a.gain.total_cmp(&b.gain))
        .cloned()
}

fn leader_total(trace: &SimTrace) -> Payoff {
    trace
        .rounds
        .iter()
        .filter_map(|r| r.game.as_ref().and_then(|g| g.payoffs.last().copied()))
        .sum()
}

/// Checks that every operator censoring competitor registrations is a Nash
/// equilibrium over `rounds` rounds: no single operator gains by letting
/// them through.
pub fn cartel_equilibrium_check(
    scenario: &Scenario,
    rounds: u64,
    seed: u64,
) -> Result<CartelReport, SimError> {
    if let Some(g) = &scenario.game {
        if rounds == 0 || rounds > 16 {
            return Err(SimError::Scenario(format!(
                "mechanism check enumerates leader sequences; {rounds} rounds is out of range"
            )));
        }
        let leader = scenario.pools[0].operator;
        let mut policies = scenario.policies.clone();
        policies.operators.insert(
            leader,
            OperatorPolicy::Scripted {
                actions: vec![LeaderAction::Censor],
            },
        );
        let base = run_rounds(scenario, &policies, rounds, seed)?;
        let base_total = leader_total(&base);
        let mut checks = Vec::new();
        for seq in literal_sequences::<LeaderAction>(rounds as usize) {
            if seq.iter().all(|a| *a == LeaderAction::Censor) {
                continue;
            }
            let mut dev = policies.clone();
            dev.operators.insert(
                leader,
                OperatorPolicy::Scripted {
                    actions: seq.clone(),
                },
            );
            let total = leader_total(&run_rounds(scenario, &dev, rounds, seed)?);
            let label: Vec<String> = seq.iter().map(|a| a.to_string()).collect();
            checks.push(CartelCheck {
                operator: leader,
                deviation: label.join("-"),
                base: base_total.to_f64(),
                deviated: total.to_f64(),
                gain: (total - base_total).to_f64(),
                exact: Some((base_total, total)),
            });
        }
        return Ok(CartelReport {
            path: CartelPath::Mechanism,
            audited_pool: Some(g.pool.clone()),
            witness: best_witness(&checks),
            checks,
        });
    }

    let model = scenario
        .utility
        .as_ref()
        .ok_or_else(|| SimError::Scenario("the cartel check needs a utility model".into()))?;
    let genesis = scenario.genesis()?;
    let registrations: Vec<&Transaction> = scenario
        .pending
        .iter()
        .filter(|t| {
            t.registration()
                .is_some_and(|g| genesis.pool(&g.pool).is_none())
        })
        .collect();
    if registrations.is_empty() {
        return Err(SimError::Precondition(
            "no pending competitor registration".into(),
        ));
    }
    let mut after = genesis.clone();
    for tx in &registrations {
        after
            .apply_in_place(tx)
            .map_err(|e| SimError::Precondition(format!("registration inadmissible: {e}")))?;
    }
    let incumbents: BTreeSet<PlayerId> = genesis
        .live_pools()
        .iter()
        .filter_map(|p| genesis.pool(p).map(|r| r.operator))
        .collect();
    if incumbents.is_empty() {
        return Err(SimError::Precondition("no incumbent pool".into()));
    }
    for op in &incumbents {
        let before = evaluate_utility(model, *op, &genesis)?;
        let with = evaluate_utility(model, *op, &after)?;
        if with >= before {
            return Err(SimError::Precondition(format!(
                "the competitor does not harm operator {op} ({before} before, {with} after)"
            )));
        }
    }

    let mut cartel: Policies = scenario.policies.clone();
    for op in &incumbents {
        cartel.operators.insert(
            *op,
            OperatorPolicy::ByzantineCensor {
                target: TxFilter::NewPools,
            },
        );
    }
    let base = run_rounds(scenario, &cartel, rounds, seed)?;
    let mut checks = Vec::new();
    for op in &incumbents {
        let mut dev = cartel.clone();
        dev.operators.insert(
            *op,
            OperatorPolicy::Scripted {
                actions: vec![LeaderAction::NotCensor],
            },
        );
        let trace = run_rounds(scenario, &dev, rounds, seed)?;
        let b = base.cumulative.get(op).copied().unwrap_or(0.0);
        let d = trace.cumulative.get(op).copied().unwrap_or(0.0);
        checks.push(CartelCheck {
            operator: *op,
            deviation: "INCLUDE".into(),
            base: b,
            deviated: d,
            gain: d - b,
            exact: None,
        });
    }
    Ok(CartelReport {
        path: CartelPath::Static,
        audited_pool: None,
        witness: best_witness(&checks),
        checks,
    })
}
