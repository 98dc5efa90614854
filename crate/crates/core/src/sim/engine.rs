use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::beacon::{select_pool_for_audit, Beacon};
use crate::games::{BinaryAction, LeaderAction, MemberAction, Payoff, Policy, Strategy};
use crate::incentive::{classify_transaction, ClassifyConfig, IcClass, UtilityModel};
use crate::ledger::{
    Compound, Delegate, LedgerState, Nonce, PlainMessage, PlayerId, PoolName, Register, Revoke,
    Stake, Transaction, TxKind,
};

use super::scenario::{MemberPolicy, OperatorPolicy, Policies, Production, Scenario, TxFilter};
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Applied,
    Censored,
    /// Included by the producer but inadmissible; dropped.
    Rejected,
    /// Taken back by its author before the producer saw it.
    Withdrawn,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Applied => "applied",
            Decision::Censored => "censored",
            Decision::Rejected => "rejected",
            Decision::Withdrawn => "withdrawn",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TxEvent {
    pub tx_id: u64,
    pub author: PlayerId,
    pub kind: TxKind,
    pub decision: Decision,
    /// Round of first submission.
    pub submitted: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PoolSnapshot {
    pub name: PoolName,
    pub operator: PlayerId,
    pub delegated: Stake,
    pub live: bool,
}

/// Realized play of a game-shaped scenario in one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GameRound {
    pub members: Vec<MemberAction>,
    pub leader: LeaderAction,
    pub revolution: bool,
    /// Members in table order, then the leader.
    pub payoffs: Vec<Payoff>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: u64,
    pub rho: u64,
    pub audited_pool: Option<PoolName>,
    pub producer: Option<PlayerId>,
    pub events: Vec<TxEvent>,
    /// Pool names registered for the first time this round.
    pub new_pools: Vec<PoolName>,
    pub pools: Vec<PoolSnapshot>,
    pub total_stake: Stake,
    pub utilities: BTreeMap<PlayerId, f64>,
    pub game: Option<GameRound>,
}

impl RoundRecord {
    pub fn applied(&self) -> impl Iterator<Item = &TxEvent> {
        self.events
            .iter()
            .filter(|e| e.decision == Decision::Applied)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Submission {
    pub tx: Transaction,
    pub round: u64,
    /// Classification at submission, when requested.
    pub class: Option<IcClass>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimTrace {
    pub scenario: String,
    pub seed: u64,
    pub players: Vec<PlayerId>,
    pub rounds: Vec<RoundRecord>,
    pub submissions: BTreeMap<u64, Submission>,
    pub cumulative: BTreeMap<PlayerId, f64>,
}

impl SimTrace {
    /// Round in which the transaction was applied, if it was.
    pub fn applied_round(&self, tx_id: u64) -> Option<u64> {
        self.rounds
            .iter()
            .find_map(|r| r.applied().any(|e| e.tx_id == tx_id).then_some(r.round))
    }

    pub fn find(&self, tx: &Transaction) -> Option<u64> {
        self.submissions
            .iter()
            .find(|(_, s)| s.tx == *tx)
            .map(|(id, _)| *id)
    }
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    /// Classify every new submission on arrival.
    pub classify_submissions: bool,
    pub classify: ClassifyConfig,
    /// `(operator, tx_id)`: that operator censors that transaction whenever
    /// it produces.
    pub postpone: Option<(PlayerId, u64)>,
    /// Pending transactions (the classified one included) a classification
    /// looks at.
    pub context: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            classify_submissions: false,
            classify: ClassifyConfig {
                horizon: 2,
                ..ClassifyConfig::default()
            },
            postpone: None,
            context: 4,
        }
    }
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn name_key(p: &PoolName) -> u64 {
    p.as_str().bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
    })
}

#[derive(Debug, Clone, PartialEq)]
struct Pending {
    id: u64,
    tx: Transaction,
    submitted: u64,
    /// Set for transactions a member submitted under its policy.
    intent: Option<MemberAction>,
    challenge: bool,
}

/// Round-by-round driver. Cloning it forks the simulation.
#[derive(Debug, Clone)]
pub struct Simulator {
    scenario: Arc<Scenario>,
    policies: Arc<Policies>,
    options: SimOptions,
    beacon: Beacon,
    seed: u64,
    state: LedgerState,
    pending: Vec<Pending>,
    next_id: u64,
    next_nonce: u64,
    /// Authors of challenger transactions seen in each past round.
    rebels: Vec<BTreeSet<PlayerId>>,
    decisions: BTreeMap<PlayerId, usize>,
}

fn check_policies(scenario: &Scenario, policies: &Policies) -> Result<(), SimError> {
    let operators = scenario.operators();
    for p in policies.operators.keys() {
        if !operators.contains(p) {
            return Err(SimError::Policy(format!("player {p} operates no pool")));
        }
    }
    let players: BTreeSet<PlayerId> = scenario.players.iter().map(|p| p.id).collect();
    for p in policies.members.keys() {
        if !players.contains(p) {
            return Err(SimError::Policy(format!("unknown member {p}")));
        }
    }
    if scenario.pools.is_empty() && !scenario.pending.iter().any(|t| t.registration().is_some()) {
        return Err(SimError::Scenario(
            "no pool and no pending registration".into(),
        ));
    }
    Ok(())
}

/// Action at decision `d` of an opening-plus-policy strategy.
fn strategy_action<A: BinaryAction>(s: &Strategy<A>, d: usize, rebels: &[BTreeSet<PlayerId>]) -> A {
    let j = s.opening.len();
    if d < j {
        return s.opening[d];
    }
    let fired = j > 0
        && rebels.len() >= j
        && rebels[0]
            .iter()
            .any(|p| rebels[1..j].iter().all(|set| set.contains(p)));
    match &s.policy {
        Policy::Fixed(v) if v.is_empty() => A::COMPLIANT,
        Policy::Fixed(v) => v[(d - j).min(v.len() - 1)],
        other => other.resolve(fired, d - j),
    }
}

fn script_action<A: BinaryAction>(v: &[A], d: usize) -> A {
    v.get(d).or(v.last()).copied().unwrap_or(A::COMPLIANT)
}

fn member_action(p: &MemberPolicy, d: usize, rebels: &[BTreeSet<PlayerId>]) -> MemberAction {
    match p {
        MemberPolicy::Script(v) => script_action(v, d),
        MemberPolicy::Strategy(s) => strategy_action(s, d, rebels),
    }
}

/// What an operator plays against challenger transactions this round, if
/// its policy says.
fn intended_leader_action(
    p: &OperatorPolicy,
    r: usize,
    rebels: &[BTreeSet<PlayerId>],
) -> Option<LeaderAction> {
    match p {
        OperatorPolicy::Scripted { actions } => Some(script_action(actions, r)),
        OperatorPolicy::RationalIncluder { strategy: Some(s) } => {
            Some(strategy_action(s, r, rebels))
        }
        OperatorPolicy::RationalIncluder { strategy: None } => None,
        OperatorPolicy::ByzantineCensor { .. } => Some(LeaderAction::Censor),
    }
}

fn matches(filter: &TxFilter, tx: &Transaction, challenge: bool) -> bool {
    match filter {
        TxFilter::NewPools => challenge,
        TxFilter::All => true,
        TxFilter::Kinds(k) => k.contains(&tx.kind()),
    }
}

impl Simulator {
    pub fn new(
        scenario: Arc<Scenario>,
        policies: Arc<Policies>,
        seed: u64,
        options: SimOptions,
    ) -> Result<Self, SimError> {
        check_policies(&scenario, &policies)?;
        let state = scenario.genesis()?;
        let next_nonce = scenario.first_free_nonce(&state).0;
        Ok(Simulator {
            scenario,
            policies,
            options,
            beacon: Beacon::new(seed),
            seed,
            state,
            pending: Vec::new(),
            next_id: 0,
            next_nonce,
            rebels: Vec::new(),
            decisions: BTreeMap::new(),
        })
    }

    pub fn state(&self) -> &LedgerState {
        &self.state
    }

    pub fn round(&self) -> u64 {
        self.state.round()
    }

    /// Turns the simulator into a replay that postpones one transaction.
    pub fn set_postpone(&mut self, postpone: Option<(PlayerId, u64)>) {
        self.options.postpone = postpone;
        self.options.classify_submissions = false;
    }

    /// `true` when both simulations will evolve identically from here on,
    /// ignoring ledger history (which no history-free utility reads).
    pub fn converged_with(&self, other: &Simulator) -> bool {
        self.state.round() == other.state.round()
            && self.state.tables() == other.state.tables()
            && self.pending == other.pending
            && self.next_id == other.next_id
            && self.next_nonce == other.next_nonce
            && self.rebels == other.rebels
            && self.decisions == other.decisions
            && !matches!(self.scenario.utility, Some(UtilityModel::Table(_)))
    }

    fn fresh_nonce(&mut self) -> Nonce {
        self.next_nonce = self.next_nonce.max(self.state.next_nonce().0);
        let n = Nonce(self.next_nonce);
        self.next_nonce += 1;
        n
    }

    fn is_challenge(&self, tx: &Transaction, live_start: &[PoolName]) -> bool {
        if let Some(g) = tx.registration() {
            match self.state.pool(&g.pool) {
                None => return true,
                Some(rec) if rec.operator != g.author => return true,
                _ => {}
            }
        }
        tx.delegation()
            .is_some_and(|d| !live_start.contains(&d.pool))
    }

    fn challenger_for(&self, pool: &PoolName) -> PoolName {
        match &self.scenario.game {
            Some(g) => g.challenger.clone(),
            None => PoolName(format!("{pool}-challenger")),
        }
    }

    /// Takes back a member's pending transactions of the other intent.
    /// Returns `true` when one of the same intent is still pending.
    fn withdraw(
        member: PlayerId,
        action: MemberAction,
        carried: &mut Vec<Pending>,
        events: &mut Vec<TxEvent>,
    ) -> bool {
        let mut keep = false;
        carried.retain(|p| {
            if p.tx.author() != member || p.intent.is_none() {
                return true;
            }
            if p.intent == Some(action) {
                keep = true;
                return true;
            }
            events.push(TxEvent {
                tx_id: p.id,
                author: member,
                kind: p.tx.kind(),
                decision: Decision::Withdrawn,
                submitted: p.submitted,
            });
            false
        });
        keep
    }

    /// Members act in two passes so that every withdrawal is known before
    /// anyone decides whether its rebel delegation must carry the
    /// registration.
    fn members_act(
        &mut self,
        moves: Vec<(PlayerId, MemberAction, Stake)>,
        incumbent: &PoolName,
        carried: &mut Vec<Pending>,
        fresh: &mut Vec<(Transaction, Option<MemberAction>)>,
        events: &mut Vec<TxEvent>,
    ) {
        let mut moves: Vec<_> = moves
            .into_iter()
            .filter(|(m, a, _)| !Self::withdraw(*m, *a, carried, events))
            .collect();
        // A kept rebel delegation whose registration was just withdrawn
        // would be inadmissible: file it again.
        let challenger = self.challenger_for(incumbent);
        let carried_reg = carried
            .iter()
            .any(|p| p.tx.registration().is_some_and(|g| g.pool == challenger));
        if !carried_reg && self.state.pool(&challenger).is_none() {
            carried.retain(|p| {
                let orphan = p.intent == Some(MemberAction::Rebel) && p.tx.registration().is_none();
                if orphan {
                    let amount = p.tx.delegation().map_or(0, |d| d.amount);
                    events.push(TxEvent {
                        tx_id: p.id,
                        author: p.tx.author(),
                        kind: p.tx.kind(),
                        decision: Decision::Withdrawn,
                        submitted: p.submitted,
                    });
                    moves.push((p.tx.author(), MemberAction::Rebel, amount));
                }
                !orphan
            });
            moves.sort_by_key(|m| m.0);
        }
        for (m, a, amount) in moves {
            self.submit_move(m, a, amount, incumbent, carried, fresh);
        }
    }

    fn submit_move(
        &mut self,
        member: PlayerId,
        action: MemberAction,
        amount: Stake,
        incumbent: &PoolName,
        carried: &[Pending],
        fresh: &mut Vec<(Transaction, Option<MemberAction>)>,
    ) {
        if amount == 0 {
            return;
        }
        let tx = match action {
            MemberAction::Capitulate => Transaction::Delegate(Delegate {
                author: member,
                amount,
                pool: incumbent.clone(),
                nonce: self.fresh_nonce(),
            }),
            MemberAction::Rebel => {
                let challenger = self.challenger_for(incumbent);
                let carries =
                    |t: &Transaction| t.registration().is_some_and(|g| g.pool == challenger);
                let registered = self.state.pool(&challenger).is_some()
                    || carried.iter().any(|p| carries(&p.tx))
                    || fresh.iter().any(|(t, _)| carries(t));
                let delegate = Delegate {
                    author: member,
                    amount,
                    pool: challenger.clone(),
                    nonce: self.fresh_nonce(),
                };
                if registered {
                    Transaction::Delegate(delegate)
                } else {
                    let register = Register {
                        author: member,
                        pool: challenger,
                        params: self.scenario.challenger_params.clone(),
                    };
                    Transaction::Compound(
                        Compound::new(delegate, None, Some(register))
                            .expect("delegate and register share an author"),
                    )
                }
            }
        };
        fresh.push((tx, Some(action)));
    }

    /// Background traffic for round `r`. The random draws are made up front
    /// and candidates are picked by hashed rank, so two runs whose ledgers
    /// differ in a few entries still make the same picks wherever those
    /// entries are not involved.
    fn workload(&mut self, r: u64, queued: &[Transaction]) -> Vec<Transaction> {
        let Some(w) = self.scenario.workload.clone() else {
            return Vec::new();
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(r + 1);
        let total = w.delegate + w.message + w.redelegate;
        if total == 0 {
            return Vec::new();
        }
        let draws: Vec<(u32, f64, u64)> = (0..w.per_round)
            .map(|_| {
                (
                    rng.random_range(0..total),
                    rng.random::<f64>(),
                    rng.random::<u64>(),
                )
            })
            .collect();

        let operators = self.scenario.operators();
        let players: Vec<PlayerId> = self.state.players().collect();
        let mut reserved: BTreeMap<PlayerId, Stake> = BTreeMap::new();
        let mut revoking: BTreeSet<Nonce> = BTreeSet::new();
        for tx in queued {
            if let Some(v) = tx.revocation() {
                revoking.insert(v.nonce);
            } else if let Some(d) = tx.delegation() {
                *reserved.entry(d.author).or_default() += d.amount;
            }
        }
        let live = self.state.live_pools();
        let mut out: Vec<Transaction> = Vec::new();
        for (k, (pick, frac, salt)) in draws.into_iter().enumerate() {
            let rank = |key: u64| mix(salt ^ mix(key));
            if pick < w.delegate {
                let author = players
                    .iter()
                    .filter(|p| !operators.contains(p))
                    .map(|p| {
                        let held = reserved.get(p).copied().unwrap_or(0);
                        (*p, self.state.undelegated(*p).saturating_sub(held))
                    })
                    .filter(|(_, a)| *a > 0)
                    .min_by_key(|(p, _)| rank(p.0 as u64));
                let Some((author, avail)) = author else {
                    continue;
                };
                let Some(pool) = live.iter().min_by_key(|p| rank(name_key(p) ^ 1)).cloned() else {
                    continue;
                };
                let cap = avail.min(w.max_amount.max(1));
                let amount = 1 + ((frac * cap as f64) as Stake).min(cap - 1);
                *reserved.entry(author).or_default() += amount;
                let nonce = self.fresh_nonce();
                out.push(Transaction::Delegate(Delegate {
                    author,
                    amount,
                    pool,
                    nonce,
                }));
            } else if pick < w.delegate + w.message {
                let author =
                    players[((frac * players.len() as f64) as usize).min(players.len() - 1)];
                out.push(Transaction::PlainMessage(PlainMessage {
                    author,
                    body: format!("r{r}-{k}"),
                }));
            } else {
                let old = self
                    .state
                    .tables()
                    .delegations
                    .iter()
                    .filter(|(n, d)| {
                        d.active
                            && !operators.contains(&d.author)
                            && !revoking.contains(n)
                            && live.contains(&d.pool)
                    })
                    .min_by_key(|(n, _)| rank(n.0))
                    .map(|(n, d)| (*n, d.author, d.amount, d.pool.clone()));
                let Some((old, author, amount, from)) = old else {
                    continue;
                };
                let Some(pool) = live
                    .iter()
                    .filter(|p| **p != from)
                    .min_by_key(|p| rank(name_key(p) ^ 2))
                    .cloned()
                else {
                    continue;
                };
                revoking.insert(old);
                let nonce = self.fresh_nonce();
                let c = Compound::new(
                    Delegate {
                        author,
                        amount,
                        pool,
                        nonce,
                    },
                    Some(Revoke { author, nonce: old }),
                    None,
                )
                .expect("same author");
                out.push(Transaction::Compound(c));
            }
        }
        out
    }

    /// Classifies `tx` against itself and at most `context - 1` other
    /// pending transactions, taken in queue order.
    fn classify(&self, model: &UtilityModel, tx: &Transaction, pending: &[Transaction]) -> IcClass {
        let limit = self.options.context.max(1);
        let window: Vec<Transaction> = std::iter::once(tx.clone())
            .chain(pending.iter().filter(|p| *p != tx).take(limit - 1).cloned())
            .collect();
        let owned;
        let state = match model {
            UtilityModel::Linear(_) => {
                owned = self.state.snapshot();
                &owned
            }
            UtilityModel::Table(_) => &self.state,
        };
        classify_transaction(model, state, tx, &window, self.options.classify)
            .map(|c| c.class)
            .unwrap_or(IcClass::Indeterminate)
    }

    fn include(
        &self,
        producer: PlayerId,
        audited_operator: Option<PlayerId>,
        item: &Pending,
        pending: &[Transaction],
        r: usize,
    ) -> bool {
        if self.options.postpone == Some((producer, item.id)) {
            return false;
        }
        if self.scenario.others_block && item.challenge && audited_operator != Some(producer) {
            return false;
        }
        match self.policies.operator(producer) {
            OperatorPolicy::ByzantineCensor { target } => {
                !matches(&target, &item.tx, item.challenge)
            }
            OperatorPolicy::Scripted { actions } => {
                !item.challenge || script_action(&actions, r).is_defiant()
            }
            OperatorPolicy::RationalIncluder { strategy } => {
                if let Some(s) = &strategy {
                    if item.challenge || item.tx.revocation().is_some() {
                        return strategy_action(s, r, &self.rebels).is_defiant();
                    }
                }
                match &self.scenario.utility {
                    Some(model) => matches!(
                        self.classify(model, &item.tx, pending),
                        IcClass::StronglyIc | IcClass::Ic
                    ),
                    None => true,
                }
            }
        }
    }

    /// Plays one round.
    pub fn step(&mut self) -> Result<(RoundRecord, BTreeMap<u64, Submission>), SimError> {
        let r = self.state.round();
        let ri = r as usize;
        let rho = self.beacon.draw(r);
        let live_start = self.state.live_pools();
        let audited = if self.scenario.audits {
            select_pool_for_audit(rho, &live_start).ok().cloned()
        } else {
            None
        };

        let mut events: Vec<TxEvent> = Vec::new();
        let mut fresh: Vec<(Transaction, Option<MemberAction>)> = Vec::new();
        let mut former: BTreeMap<PlayerId, Stake> = BTreeMap::new();
        let mut audited_operator = None;
        if let Some(p) = &audited {
            let rec = self.state.pool(p).cloned().expect("audited pools exist");
            audited_operator = Some(rec.operator);
            let mut own = 0;
            for d in self.state.tables().delegations.values() {
                if d.active && d.pool == *p {
                    if d.author == rec.operator {
                        own += d.amount;
                    } else {
                        *former.entry(d.author).or_default() += d.amount;
                    }
                }
            }
            self.state
                .dissolve_in_place(p)
                .expect("live pools can always be dissolved");
            fresh.push((
                Transaction::Register(Register {
                    author: rec.operator,
                    pool: p.clone(),
                    params: rec.params.clone(),
                }),
                None,
            ));
            if own > 0 {
                let nonce = self.fresh_nonce();
                fresh.push((
                    Transaction::Delegate(Delegate {
                        author: rec.operator,
                        amount: own,
                        pool: p.clone(),
                        nonce,
                    }),
                    None,
                ));
            }
        }

        let mut carried = std::mem::take(&mut self.pending);
        if let Some(ttl) = self.scenario.pending_ttl {
            carried.retain(|p| {
                let alive = r - p.submitted < ttl;
                if !alive {
                    events.push(TxEvent {
                        tx_id: p.id,
                        author: p.tx.author(),
                        kind: p.tx.kind(),
                        decision: Decision::Withdrawn,
                        submitted: p.submitted,
                    });
                }
                alive
            });
        }
        let mut game_actions = None;
        if let Some(g) = self.scenario.game.clone() {
            let actions: Vec<MemberAction> = g
                .members
                .iter()
                .map(|m| member_action(&self.policies.member(*m), ri, &self.rebels))
                .collect();
            if self.state.pool(&g.challenger).is_none() {
                let moves = g
                    .members
                    .iter()
                    .zip(&actions)
                    .map(|(m, a)| (*m, *a, self.state.undelegated(*m)))
                    .collect();
                self.members_act(moves, &g.pool, &mut carried, &mut fresh, &mut events);
            }
            game_actions = Some(actions);
        } else if let Some(p) = &audited {
            let mut moves = Vec::new();
            for (m, amount) in former {
                let d = self.decisions.entry(m).or_default();
                let idx = *d;
                *d += 1;
                moves.push((
                    m,
                    member_action(&self.policies.member(m), idx, &self.rebels),
                    amount,
                ));
            }
            self.members_act(moves, p, &mut carried, &mut fresh, &mut events);
        }
        if r == 0 {
            for tx in self.scenario.pending.clone() {
                fresh.push((tx, None));
            }
        }
        let queued: Vec<Transaction> = carried
            .iter()
            .map(|p| p.tx.clone())
            .chain(fresh.iter().map(|(t, _)| t.clone()))
            .collect();
        for tx in self.workload(r, &queued) {
            fresh.push((tx, None));
        }

        // Maintenance by the audited operator goes first so that
        // re-delegations find the pool registered.
        let maintenance = fresh
            .iter()
            .take_while(|(t, i)| i.is_none() && Some(t.author()) == audited_operator)
            .count()
            .min(2);
        let mut new_items: Vec<Pending> = Vec::new();
        for (tx, intent) in fresh {
            let challenge = self.is_challenge(&tx, &live_start);
            new_items.push(Pending {
                id: self.next_id,
                tx,
                submitted: r,
                intent,
                challenge,
            });
            self.next_id += 1;
        }
        let mut queue: Vec<Pending> = Vec::new();
        queue.extend(new_items[..maintenance].iter().cloned());
        queue.extend(carried);
        queue.extend(new_items[maintenance..].iter().cloned());

        let mut submissions = BTreeMap::new();
        let all: Vec<Transaction> = queue.iter().map(|p| p.tx.clone()).collect();
        for item in &new_items {
            let class = match (&self.scenario.utility, self.options.classify_submissions) {
                (Some(model), true) => Some(self.classify(model, &item.tx, &all)),
                _ => None,
            };
            submissions.insert(
                item.id,
                Submission {
                    tx: item.tx.clone(),
                    round: r,
                    class,
                },
            );
        }

        let producer_pool = match (self.scenario.production, &audited) {
            (Production::AuditedLeader, Some(p)) => Some(p.clone()),
            _ if live_start.is_empty() => None,
            _ => Some(live_start[ri % live_start.len()].clone()),
        };
        let producer = producer_pool
            .as_ref()
            .and_then(|p| self.state.pool(p))
            .map(|rec| rec.operator);

        let mut round_rebels = BTreeSet::new();
        let mut new_pools = Vec::new();
        let mut still = Vec::new();
        let mut leader_realized: Option<LeaderAction> = None;
        for k in 0..queue.len() {
            let item = &queue[k];
            if item.challenge {
                round_rebels.insert(item.tx.author());
            }
            let rest: Vec<Transaction> = queue[k..].iter().map(|p| p.tx.clone()).collect();
            let include = match producer {
                None => true,
                Some(op) => self.include(op, audited_operator, item, &rest, ri),
            };
            if item.challenge {
                leader_realized.get_or_insert(LeaderAction::from_defiant(include));
            }
            let decision = if include {
                let fresh_name = item
                    .tx
                    .registration()
                    .filter(|g| self.state.pool(&g.pool).is_none())
                    .map(|g| g.pool.clone());
                match self.state.apply_in_place(&item.tx) {
                    Ok(()) => {
                        new_pools.extend(fresh_name);
                        Decision::Applied
                    }
                    Err(_) => Decision::Rejected,
                }
            } else {
                still.push(item.clone());
                Decision::Censored
            };
            events.push(TxEvent {
                tx_id: item.id,
                author: item.tx.author(),
                kind: item.tx.kind(),
                decision,
                submitted: item.submitted,
            });
        }
        self.pending = still;

        let (utilities, game) = self.accrue(ri, audited_operator, game_actions, leader_realized)?;
        let pools = self
            .state
            .pool_table()
            .into_iter()
            .map(|(name, e)| PoolSnapshot {
                name,
                operator: e.operator,
                delegated: e.delegated_stake,
                live: !e.dissolved,
            })
            .collect();
        let record = RoundRecord {
            round: r,
            rho,
            audited_pool: audited,
            producer,
            events,
            new_pools,
            pools,
            total_stake: self.state.total_stake(),
            utilities,
            game,
        };
        self.rebels.push(round_rebels);
        self.state.advance_round();
        Ok((record, submissions))
    }

    fn accrue(
        &self,
        r: usize,
        audited_operator: Option<PlayerId>,
        actions: Option<Vec<MemberAction>>,
        realized: Option<LeaderAction>,
    ) -> Result<(BTreeMap<PlayerId, f64>, Option<GameRound>), SimError> {
        let mut u: BTreeMap<PlayerId, f64> = self.state.players().map(|p| (p, 0.0)).collect();
        if let (Some(g), Some(actions)) = (&self.scenario.game, actions) {
            let leader = self.scenario.pools[0].operator;
            let revolution = self.state.pool(&g.challenger).is_some();
            let t = &g.table;
            let mut payoffs = Vec::with_capacity(t.n() + 1);
            if revolution {
                payoffs.extend((0..t.n()).map(|i| t.member_revolution(i)));
                payoffs.push(t.leader_revolution());
            } else {
                let table = self.state.pool_table();
                let entry = table.get(&g.pool);
                let x = entry.map(|e| e.delegated_stake).unwrap_or(0);
                let level = |v: Option<Payoff>, who: String| {
                    v.ok_or_else(|| {
                        SimError::Scenario(format!("no utility for {who} at stake {x}"))
                    })
                };
                for (i, m) in g.members.iter().enumerate() {
                    let inside = entry.is_some_and(|e| !e.dissolved && e.members.contains(m));
                    payoffs.push(if inside {
                        level(t.try_member_in_pool(i, x), format!("member {m}"))?
                    } else {
                        Payoff::int(0)
                    });
                }
                let live = entry.is_some_and(|e| !e.dissolved);
                payoffs.push(if live {
                    level(t.try_leader_in_pool(x), "the leader".into())?
                } else {
                    Payoff::int(0)
                });
            }
            for (m, v) in g.members.iter().zip(&payoffs) {
                u.insert(*m, v.to_f64());
            }
            u.insert(leader, payoffs[t.n()].to_f64());
            let intended = intended_leader_action(&self.policies.operator(leader), r, &self.rebels);
            let leader_action = realized
                .filter(|_| audited_operator == Some(leader))
                .or(intended)
                .unwrap_or(LeaderAction::Censor);
            return Ok((
                u,
                Some(GameRound {
                    members: actions,
                    leader: leader_action,
                    revolution,
                    payoffs,
                }),
            ));
        }
        if let Some(model) = &self.scenario.utility {
            for (p, v) in model.evaluate_all(&self.state)? {
                u.insert(p, v);
            }
        }
        Ok((u, None))
    }
}

/// Runs `rounds` rounds from the scenario's genesis.
pub fn run_rounds(
    scenario: &Scenario,
    policies: &Policies,
    rounds: u64,
    seed: u64,
) -> Result<SimTrace, SimError> {
    run_with(scenario, policies, rounds, seed, SimOptions::default())
}

pub fn run_with(
    scenario: &Scenario,
    policies: &Policies,
    rounds: u64,
    seed: u64,
    options: SimOptions,
) -> Result<SimTrace, SimError> {
    let mut sim = Simulator::new(
        Arc::new(scenario.clone()),
        Arc::new(policies.clone()),
        seed,
        options,
    )?;
    let mut trace = SimTrace {
        scenario: scenario.digest(),
        seed,
        players: sim.state().players().collect(),
        rounds: Vec::with_capacity(rounds as usize),
        submissions: BTreeMap::new(),
        cumulative: sim.state().players().map(|p| (p, 0.0)).collect(),
    };
    for _ in 0..rounds {
        let (rec, subs) = sim.step()?;
        for (p, v) in &rec.utilities {
            *trace.cumulative.entry(*p).or_default() += v;
        }
        trace.submissions.extend(subs);
        trace.rounds.push(rec);
    }
    Ok(trace)
}
