use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use thiserror::Error;

use poolcensor_core::beacon::audit_uniformity;
use poolcensor_core::equilibrium::{
    best_response_violations, check_spne, enumerate_pure_nash, verify_kround_extension,
    verify_theorem2, verify_theorem3_family, verify_theorem4, verify_theorem5, verify_theorem6,
    EngineError, EquilibriumReport, FiniteGame, MultiGame, SingleGame, TheoremReport, Verdict,
};
use poolcensor_core::games::{
    profile_from_json, AdaptiveGame, Check, GameError, GameFile, GameFileError, GameSpec,
    MultiRoundProfile, Profile, TheoremId,
};
use poolcensor_core::incentive::{classify_transaction, ClassifyConfig, IcClass};
use poolcensor_core::sim::{
    audits_csv, cartel_equilibrium_check, pools_csv, run_rounds, summary, theorem1_experiment,
    trace_csv, Scenario, SimError,
};

use crate::output::{write_all_atomic, write_atomic};
use crate::{
    AuditArgs, ClassifyArgs, GameArgs, ReportFormat, SimulateArgs, Theorem, TraceFormat, VerifyArgs,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Outcome {
    Ok = 0,
    Counterexample = 1,
}

#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Load(String),
    #[error("hypotheses not met\n{0}")]
    Hypothesis(String),
}

fn checklist(checks: &[Check]) -> String {
    let mut out = String::new();
    for c in checks {
        let mark = if c.holds { "ok  " } else { "FAIL" };
        let _ = writeln!(out, "  [{mark}] {:<32} {}", c.name, c.detail);
    }
    out
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Hypothesis { theorem, checks } => {
                Failure::Hypothesis(format!("{theorem}\n{}", checklist(&checks)))
            }
            EngineError::SpaceLimit { .. } => Failure::Usage(e.to_string()),
            EngineError::Game(g) => g.into(),
        }
    }
}

impl From<GameError> for Failure {
    fn from(e: GameError) -> Self {
        match e {
            GameError::Hypothesis { .. } => Failure::Hypothesis(e.to_string()),
            other => Failure::Load(other.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::AboveThreshold { .. } => Failure::Usage(e.to_string()),
            SimError::Precondition(_) => Failure::Hypothesis(e.to_string()),
            other => Failure::Load(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Load(format!("{}: {e}", path.display())))
}

fn load_file_err(path: &Path, e: GameFileError) -> Failure {
    match e {
        GameFileError::Game(g @ GameError::Hypothesis { .. }) => g.into(),
        other => Failure::Load(format!("{}: {other}", path.display())),
    }
}

fn load_game(path: &Path) -> Result<(GameFile, GameSpec), Failure> {
    let file = GameFile::from_json(&read(path)?).map_err(|e| load_file_err(path, e))?;
    let spec = file.spec()?;
    Ok((file, spec))
}

fn load_profile<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    profile_from_json(&read(path)?).map_err(|e| load_file_err(path, e))
}

/// Multi-round profiles are stored as `{"version": 1, "rounds": [...]}`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MultiProfileFile {
    rounds: Vec<Profile>,
}

fn load_multi_profile(path: &Path) -> Result<MultiRoundProfile, Failure> {
    let f: MultiProfileFile = load_profile(path)?;
    Ok(MultiRoundProfile { rounds: f.rounds })
}

fn required<'a>(profile: &'a Option<PathBuf>, what: &str) -> Result<&'a Path, Failure> {
    profile
        .as_deref()
        .ok_or_else(|| Failure::Usage(format!("{what} needs --profile")))
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    Scenario::from_json(&read(path)?).map_err(|e| Failure::Load(format!("{}: {e}", path.display())))
}

fn emit(report: &EquilibriumReport, args: &GameArgs) -> Result<(), Failure> {
    if let Some(out) = &args.out {
        write_atomic(out, &report.to_json())
            .map_err(|e| Failure::Usage(format!("{}: {e}", out.display())))?;
    }
    match args.format {
        ReportFormat::Text => print!("{}", report.render_text()),
        ReportFormat::Json => print!("{}", report.to_json()),
    }
    Ok(())
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("reports serialize")
    );
}

pub fn simulate(args: &SimulateArgs, verbose: u8) -> Result<Outcome, Failure> {
    let scenario = load_scenario(&args.scenario)?;
    if verbose > 0 {
        eprintln!("simulating {} rounds, seed {}", args.rounds, args.seed);
    }
    let trace = run_rounds(&scenario, &scenario.policies, args.rounds, args.seed)?;
    let csv = trace_csv(&trace);
    let sum = summary(&trace);
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
        let files = vec![
            (dir.join("trace.csv"), csv.clone()),
            (dir.join("pools.csv"), pools_csv(&trace)),
            (dir.join("audits.csv"), audits_csv(&trace)),
            (dir.join("summary.json"), sum.to_json()),
        ];
        write_all_atomic(&files).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
        if verbose > 0 {
            eprintln!("wrote {}", dir.display());
        }
    }
    match args.format {
        TraceFormat::Csv => print!("{csv}"),
        TraceFormat::Text => print!("{}", sum.render_text()),
    }
    Ok(Outcome::Ok)
}

fn nash_on<G: FiniteGame>(
    game: &G,
    name: &str,
    profile: Option<G::Profile>,
    limit: u128,
) -> Result<(EquilibriumReport, Outcome), Failure> {
    match profile {
        None => {
            let eq = enumerate_pure_nash(game, limit)?;
            Ok((EquilibriumReport::nash(name, &eq), Outcome::Ok))
        }
        Some(p) => {
            let scan = best_response_violations(game, &p)?;
            let outcome = if scan.is_nash() {
                Outcome::Ok
            } else {
                Outcome::Counterexample
            };
            Ok((EquilibriumReport::scan(name, &p, &scan), outcome))
        }
    }
}

pub fn nash(args: &GameArgs) -> Result<Outcome, Failure> {
    let (file, spec) = load_game(&args.game)?;
    let name = file.digest();
    let path = args.profile.as_deref();
    let (report, outcome) = match spec {
        GameSpec::Single(t) => {
            let p = path.map(load_profile).transpose()?;
            nash_on(&SingleGame::new(t), &name, p, args.limit)?
        }
        GameSpec::Multi { table, rounds } => {
            let p = path.map(load_multi_profile).transpose()?;
            nash_on(&MultiGame::new(table, rounds), &name, p, args.limit)?
        }
        GameSpec::Adaptive(g) => {
            let p = path.map(load_profile).transpose()?;
            nash_on(&g, &name, p, args.limit)?
        }
        GameSpec::TwoPool(g) => {
            let p = path.map(load_profile).transpose()?;
            nash_on(&g, &name, p, args.limit)?
        }
    };
    emit(&report, args)?;
    Ok(outcome)
}

pub fn spne(args: &GameArgs) -> Result<Outcome, Failure> {
    let (file, spec) = load_game(&args.game)?;
    let (table, rounds) = match spec {
        GameSpec::Multi { table, rounds } => (table, rounds),
        GameSpec::Single(table) => (table, 1),
        _ => {
            return Err(Failure::Usage(
                "spne takes a single or multi-round game".into(),
            ))
        }
    };
    let profile = load_multi_profile(required(&args.profile, "spne")?)?;
    if profile.rounds.len() != rounds {
        return Err(Failure::Load(format!(
            "profile has {} rounds, the game has {rounds}",
            profile.rounds.len()
        )));
    }
    let out = check_spne(&table, &profile)?;
    emit(
        &EquilibriumReport::spne(&file.digest(), &profile, &out),
        args,
    )?;
    Ok(if out.holds {
        Outcome::Ok
    } else {
        Outcome::Counterexample
    })
}

fn theorem_id(t: Theorem) -> TheoremId {
    match t {
        Theorem::T2 => TheoremId::T2,
        Theorem::T3 => TheoremId::T3,
        Theorem::T4 => TheoremId::T4,
        Theorem::T5 => TheoremId::T5,
        Theorem::T6 => TheoremId::T6,
        Theorem::Kround => TheoremId::Kround,
    }
}

fn finish<P: std::fmt::Display>(
    name: &str,
    result: Result<TheoremReport<P>, EngineError>,
    theorem: TheoremId,
    args: &GameArgs,
) -> Result<Outcome, Failure> {
    let report = match result {
        Ok(r) => r,
        Err(EngineError::Hypothesis { theorem: t, checks }) => {
            // The checklist goes into the report as well as to stderr.
            let rep = EquilibriumReport::hypothesis_failure(name, t, &checks);
            emit(&rep, args)?;
            return Err(EngineError::Hypothesis { theorem: t, checks }.into());
        }
        Err(e) => return Err(e.into()),
    };
    debug_assert_eq!(report.theorem, theorem);
    emit(&EquilibriumReport::theorem(name, &report), args)?;
    Ok(match report.verdict {
        Verdict::Confirmed => Outcome::Ok,
        Verdict::Counterexample(_) => Outcome::Counterexample,
    })
}

fn wrong_kind(t: Theorem, want: &str) -> Failure {
    Failure::Usage(format!("{} needs a {want} game", theorem_id(t)))
}

pub fn verify(args: &VerifyArgs) -> Result<Outcome, Failure> {
    let g = &args.game;
    let (file, spec) = load_game(&g.game)?;
    let name = file.digest();
    let id = theorem_id(args.theorem);
    if args.l.is_some() && args.theorem != Theorem::T3 {
        return Err(Failure::Usage("--l applies to t3 only".into()));
    }
    if (args.j.is_some() || args.k.is_some()) && args.theorem != Theorem::Kround {
        return Err(Failure::Usage("--j and --k apply to kround only".into()));
    }
    match (args.theorem, spec) {
        (Theorem::T2, GameSpec::Single(t)) => finish(&name, verify_theorem2(&t, g.limit), id, g),
        (Theorem::T3, GameSpec::Multi { table, rounds }) => {
            let l = args
                .l
                .ok_or_else(|| Failure::Usage("t3 needs --l".into()))?;
            if l == 0 || l > rounds {
                return Err(Failure::Usage(format!("--l must be in 1..={rounds}")));
            }
            finish(
                &name,
                verify_theorem3_family(&table, rounds, l, g.limit),
                id,
                g,
            )
        }
        (Theorem::T4, GameSpec::Adaptive(game)) => {
            let p = load_profile(required(&g.profile, "t4")?)?;
            finish(&name, verify_theorem4(&game, &p, file.f_reading), id, g)
        }
        (Theorem::T5, GameSpec::Adaptive(game)) => {
            finish(&name, verify_theorem5(&game, g.limit), id, g)
        }
        (Theorem::T6, GameSpec::TwoPool(game)) => {
            let p = load_profile(required(&g.profile, "t6")?)?;
            finish(&name, verify_theorem6(&game, &p), id, g)
        }
        (Theorem::Kround, GameSpec::Adaptive(game)) => {
            let k = args.k.unwrap_or(game.rounds);
            let j = args.j.unwrap_or(game.depth);
            let game = AdaptiveGame::new(game.table, k, j)?;
            let p = load_profile(required(&g.profile, "kround")?)?;
            finish(
                &name,
                verify_kround_extension(&game, &p, file.f_reading),
                id,
                g,
            )
        }
        (t @ Theorem::T2, _) => Err(wrong_kind(t, "single")),
        (t @ Theorem::T3, _) => Err(wrong_kind(t, "multi")),
        (t @ Theorem::T6, _) => Err(wrong_kind(t, "two_pool")),
        (t, _) => Err(wrong_kind(t, "adaptive")),
    }
}

#[derive(serde::Serialize)]
struct SeedResult {
    seed: u64,
    statistic: f64,
    p_value: f64,
    pass: bool,
}

pub fn audit_stats(args: &AuditArgs) -> Result<Outcome, Failure> {
    if args.pools < 2 {
        return Err(Failure::Usage("--pools must be at least 2".into()));
    }
    if args.seeds == 0 || !(0.0..1.0).contains(&args.alpha) {
        return Err(Failure::Usage(
            "need --seeds >= 1 and 0 <= --alpha < 1".into(),
        ));
    }
    let mut results = Vec::new();
    for seed in args.seed..args.seed + args.seeds {
        let r = audit_uniformity(seed, args.pools, args.draws)
            .map_err(|e| Failure::Usage(e.to_string()))?;
        results.push(SeedResult {
            seed,
            statistic: r.statistic,
            p_value: r.p_value,
            pass: r.p_value >= args.alpha,
        });
    }
    let passed = results.iter().filter(|r| r.pass).count();
    let rate = passed as f64 / results.len() as f64;
    let ok = rate >= args.min_pass;
    match args.format {
        ReportFormat::Json => print_json(&serde_json::json!({
            "pools": args.pools,
            "draws": args.draws,
            "alpha": args.alpha,
            "seeds": results,
            "pass_rate": rate,
            "pass": ok,
        })),
        ReportFormat::Text => {
            println!(
                "pools {} draws {} alpha {}",
                args.pools, args.draws, args.alpha
            );
            for r in &results {
                println!(
                    "  seed {:<8} chi2 {:>10.4} p {:.4} {}",
                    r.seed,
                    r.statistic,
                    r.p_value,
                    if r.pass { "pass" } else { "FAIL" }
                );
            }
            println!("passed {passed}/{} ({:.1}%)", results.len(), rate * 100.0);
        }
    }
    Ok(if ok {
        Outcome::Ok
    } else {
        Outcome::Counterexample
    })
}

fn ids(list: &[poolcensor_core::ledger::PlayerId]) -> String {
    list.iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn classify(args: &ClassifyArgs) -> Result<Outcome, Failure> {
    let scenario = load_scenario(&args.scenario)?;
    let model = scenario
        .utility
        .as_ref()
        .ok_or_else(|| Failure::Load("the scenario has no utility model".into()))?;
    let tx = scenario.pending.get(args.tx).ok_or_else(|| {
        Failure::Usage(format!(
            "--tx {} but the scenario has {} pending",
            args.tx,
            scenario.pending.len()
        ))
    })?;
    let state = scenario.genesis()?;
    let config = ClassifyConfig {
        horizon: args.horizon,
        node_limit: args.node_limit,
    };
    let c = classify_transaction(model, &state, tx, &scenario.pending, config)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    match args.format {
        ReportFormat::Json => print_json(&c),
        ReportFormat::Text => {
            println!(
                "tx         {}",
                serde_json::to_string(tx).expect("transactions serialize")
            );
            println!("class      {}", c.class);
            println!("nodes      {}", c.nodes);
            println!("matched    {}", c.matched_pairs);
            println!("affected   {}", ids(&c.affected));
            println!("dissenting {}", ids(&c.dissenting));
            if let Some(d) = &c.first_dissent {
                println!("  player {} drops {} -> {}", d.player, d.before, d.after);
            }
            if c.class == IcClass::Indeterminate {
                println!("node limit reached; raise --node-limit or lower --horizon");
            }
        }
    }
    Ok(Outcome::Ok)
}

pub fn liveness(
    path: &Path,
    fraction: f64,
    rounds: u64,
    seed: u64,
    format: ReportFormat,
) -> Result<Outcome, Failure> {
    let scenario = load_scenario(path)?;
    let r = theorem1_experiment(&scenario, fraction, rounds, seed)?;
    match format {
        ReportFormat::Json => print_json(&r),
        ReportFormat::Text => {
            println!(
                "fraction {} threshold {} rounds {}",
                r.fraction, r.threshold, r.rounds
            );
            println!("byzantine {:?}", r.byzantine);
            let live = r.liveness.iter().filter(|l| l.live).count();
            println!(
                "strongly consistent: {live}/{} live, {} window open",
                r.liveness.len(),
                r.window_open.len()
            );
            println!("outside scope: {}", r.outside_scope.len());
            println!(
                "postponements replayed: {}, max gain {}",
                r.deviations.len(),
                r.max_gain
            );
            println!(
                "verdict: {}",
                if r.holds() {
                    "CONFIRMED"
                } else {
                    "COUNTEREXAMPLE"
                }
            );
        }
    }
    Ok(if r.holds() {
        Outcome::Ok
    } else {
        Outcome::Counterexample
    })
}

pub fn cartel(
    path: &Path,
    rounds: u64,
    seed: u64,
    format: ReportFormat,
) -> Result<Outcome, Failure> {
    let scenario = load_scenario(path)?;
    let r = cartel_equilibrium_check(&scenario, rounds, seed)?;
    match format {
        ReportFormat::Json => print_json(&r),
        ReportFormat::Text => {
            if let Some(p) = &r.audited_pool {
                println!("audited pool {p}");
            }
            for c in &r.checks {
                println!(
                    "  operator {:<6} {:<28} base {:<10} deviated {:<10} gain {}",
                    c.operator, c.deviation, c.base, c.deviated, c.gain
                );
            }
            println!("verdict: {}", r.verdict());
            if let Some(w) = &r.witness {
                println!("  witness operator {} via {}", w.operator, w.deviation);
            }
        }
    }
    Ok(if r.confirmed() {
        Outcome::Ok
    } else {
        Outcome::Counterexample
    })
}
