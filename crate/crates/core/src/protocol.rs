//! Distributed search among self-interested agents, enforced by random audits.
//!
//! A round splits one search phase into contiguous index ranges, hands them
//! to the agents in random order, collects each agent's claimed best
//! structure, and lets one randomly chosen agent re-search another agent's
//! share. A target caught shirking or lying pays the penalty `P` to the
//! auditor.
//!
//! Incentives follow a declared 2x2 inspection game. Target: searching costs
//! `c_search`; shirking saves it but loses `P` when audited. Auditor:
//! auditing costs `c_audit` and wins `P` on a catch. The mixed equilibrium
//! has the target search with probability `1 - c_audit / P` and the auditor
//! audit with probability `c_search / P`.
//!
//! Randomness comes from ChaCha8 seeded once per simulation, with round `r`
//! drawing from stream `r`, so rounds are reproducible in isolation.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{AgentCount, CoalitionStructure, Game};
use crate::partition::{bottom_two_count, bottom_two_node, chunk_ranges, enumerate_level, level_size};

/// The node set being distributed: one phase of the bottom-two-then-top-down search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchPhase {
    /// Index 0 is the grand coalition, index `i` the level-2 node splitting off mask `i`.
    BottomTwo,
    /// Level `l` in enumeration order.
    Level(usize),
}

impl SearchPhase {
    pub fn node_count(self, a: AgentCount) -> Result<u64> {
        match self {
            SearchPhase::BottomTwo => Ok(bottom_two_count(a)),
            SearchPhase::Level(l) => level_size(a, l),
        }
    }

    pub fn nodes(self, a: AgentCount, range: Range<u64>) -> Result<Box<dyn Iterator<Item = CoalitionStructure>>> {
        let count = self.node_count(a)?;
        if range.end > count || range.start > range.end {
            return Err(Error::InvalidParameter(format!("range {range:?} outside the {count} nodes of the phase")));
        }
        Ok(match self {
            SearchPhase::BottomTwo => Box::new(range.map(move |i| bottom_two_node(a, i).expect("index in range"))),
            SearchPhase::Level(l) => {
                let len = (range.end - range.start) as usize;
                Box::new(enumerate_level(a, l)?.skip(range.start as usize).take(len))
            }
        })
    }
}

/// Equal-split contiguous ranges of `0..node_count`, dealt to agents in a
/// seeded random order. `result[agent]` is that agent's share.
pub fn partition_space(node_count: u64, num_agents: usize, seed: u64) -> Result<Vec<Range<u64>>> {
    partition_space_with(node_count, num_agents, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn partition_space_with(node_count: u64, num_agents: usize, rng: &mut impl RngCore) -> Result<Vec<Range<u64>>> {
    if num_agents == 0 {
        return Err(Error::InvalidParameter("at least one agent is needed".into()));
    }
    if node_count < num_agents as u64 {
        return Err(Error::InvalidParameter(format!("{node_count} nodes cannot be shared among {num_agents} agents")));
    }
    let mut shares = chunk_ranges(node_count, num_agents);
    shares.shuffle(rng);
    Ok(shares)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub phase: SearchPhase,
    pub shares: Vec<Range<u64>>,
}

impl Assignment {
    pub fn new(a: AgentCount, phase: SearchPhase, num_agents: usize, seed: u64) -> Result<Self> {
        let shares = partition_space(phase.node_count(a)?, num_agents, seed)?;
        Ok(Self { phase, shares })
    }

    pub fn num_agents(&self) -> usize {
        self.shares.len()
    }
}

/// A pure search behaviour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    Truthful,
    /// Searches only the first `floor(f * |share|)` nodes (at least the first
    /// node is reported) and claims that prefix's best.
    Shirk(f64),
    /// Claims a structure from outside the share.
    Fabricate,
}

impl Strategy {
    fn validate(self) -> Result<Self> {
        if let Strategy::Shirk(f) = self {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidParameter(format!("shirk fraction {f} outside [0, 1]")));
            }
        }
        Ok(self)
    }
}

/// How an agent picks a strategy each round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AgentPolicy {
    Pure(Strategy),
    /// Search truthfully with probability `search_prob`, otherwise play `deviation`.
    Mixed {
        search_prob: f64,
        deviation: Strategy,
    },
}

impl AgentPolicy {
    fn validate(self) -> Result<Self> {
        match self {
            AgentPolicy::Pure(s) => s.validate().map(AgentPolicy::Pure),
            AgentPolicy::Mixed { search_prob, deviation } => {
                if !(0.0..=1.0).contains(&search_prob) {
                    return Err(Error::InvalidParameter(format!("probability {search_prob} outside [0, 1]")));
                }
                deviation.validate()?;
                Ok(self)
            }
        }
    }

    fn resolve(self, rng: &mut impl RngCore) -> Strategy {
        match self {
            AgentPolicy::Pure(s) => s,
            AgentPolicy::Mixed { search_prob, deviation } => {
                if rng.random::<f64>() < search_prob {
                    Strategy::Truthful
                } else {
                    deviation
                }
            }
        }
    }
}

/// What an agent tells the others after searching.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub agent: usize,
    pub structure: CoalitionStructure,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub report: Report,
    /// Nodes actually evaluated; drives the search cost.
    pub nodes_searched: u64,
}

fn share_best(game: &Game, phase: SearchPhase, range: Range<u64>) -> Result<(CoalitionStructure, f64)> {
    let mut best: Option<(CoalitionStructure, f64)> = None;
    for cs in phase.nodes(game.agents(), range)? {
        let v = game.welfare(&cs);
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((cs, v));
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("empty share".into()))
}

fn outside_structure(a: AgentCount, phase: SearchPhase, share: &Range<u64>) -> Result<Option<CoalitionStructure>> {
    let count = phase.node_count(a)?;
    if share.end < count {
        return Ok(phase.nodes(a, share.end..share.end + 1)?.next());
    }
    if share.start > 0 {
        return Ok(phase.nodes(a, 0..1)?.next());
    }
    // The share is the whole phase: borrow a node from another level.
    Ok(match phase {
        SearchPhase::BottomTwo if a.get() >= 3 => Some(CoalitionStructure::singletons(a)),
        SearchPhase::Level(l) if l != 1 => Some(CoalitionStructure::grand(a)),
        _ => None,
    })
}

/// Searches `share` of `phase` the way `strategy` prescribes.
pub fn agent_search(
    game: &Game,
    phase: SearchPhase,
    share: Range<u64>,
    agent: usize,
    strategy: Strategy,
) -> Result<SearchOutcome> {
    let len = share.end.saturating_sub(share.start);
    if len == 0 {
        return Err(Error::InvalidParameter("empty share".into()));
    }
    let a = game.agents();
    let (structure, value, nodes_searched) = match strategy.validate()? {
        Strategy::Truthful => {
            let (cs, v) = share_best(game, phase, share)?;
            (cs, v, len)
        }
        Strategy::Shirk(f) => {
            let searched = ((f * len as f64).floor() as u64).min(len);
            let prefix = share.start..share.start + searched.max(1);
            let (cs, v) = share_best(game, phase, prefix)?;
            (cs, v, searched)
        }
        Strategy::Fabricate => match outside_structure(a, phase, &share)? {
            Some(cs) => {
                let v = game.welfare(&cs);
                (cs, v, 0)
            }
            None => {
                let (cs, v) = share_best(game, phase, share.start..share.start + 1)?;
                (cs, v, 0)
            }
        },
    };
    Ok(SearchOutcome { report: Report { agent, structure, value }, nodes_searched })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditOutcome {
    pub auditor: usize,
    pub target: usize,
    pub caught: bool,
    /// Paid by the target to the auditor.
    pub transfer: f64,
}

/// Auditor `auditor` re-searches the share of `target`. The target is caught
/// when the share holds a strictly better structure than claimed, or when the
/// claimed structure is not in the share at all.
pub fn audit_pair(
    game: &Game,
    assignment: &Assignment,
    report: &Report,
    auditor: usize,
    target: usize,
    penalty: f64,
) -> Result<AuditOutcome> {
    if auditor == target {
        return Err(Error::InvalidParameter("an agent cannot audit itself".into()));
    }
    let share =
        assignment.shares.get(target).cloned().ok_or_else(|| Error::InvalidParameter(format!("no agent {target}")))?;
    let mut member = false;
    let mut best = f64::NEG_INFINITY;
    for cs in assignment.phase.nodes(game.agents(), share)? {
        member |= cs == report.structure;
        best = best.max(game.welfare(&cs));
    }
    let caught = !member || best > report.value;
    Ok(AuditOutcome { auditor, target, caught, transfer: if caught { penalty } else { 0.0 } })
}

fn select_pair(rng: &mut impl RngCore, n: usize) -> (usize, usize) {
    let auditor = rng.random_range(0..n);
    let mut target = rng.random_range(0..n - 1);
    if target >= auditor {
        target += 1;
    }
    (auditor, target)
}

/// Picks an auditor and a distinct target uniformly at random and audits.
pub fn audit(
    game: &Game,
    assignment: &Assignment,
    reports: &[Report],
    seed: u64,
    penalty: f64,
) -> Result<AuditOutcome> {
    let n = assignment.num_agents();
    if n < 2 || reports.len() != n {
        return Err(Error::InvalidParameter("audits need at least two agents, one report each".into()));
    }
    let (i, j) = select_pair(&mut ChaCha8Rng::seed_from_u64(seed), n);
    audit_pair(game, assignment, &reports[j], i, j, penalty)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InspectionParams {
    pub penalty: f64,
    /// Cost of searching one's whole share.
    pub c_search: f64,
    /// Cost of re-searching one share.
    pub c_audit: f64,
}

impl InspectionParams {
    pub fn new(penalty: f64, c_search: f64, c_audit: f64) -> Result<Self> {
        for (name, v) in [("penalty", penalty), ("search cost", c_search), ("audit cost", c_audit)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { penalty, c_search, c_audit })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub p_audit: f64,
    pub q_search: f64,
}

/// Mixed equilibrium of the declared inspection game, from the two
/// indifference conditions `p * P = c_search` and `(1 - q) * P = c_audit`.
pub fn inspection_equilibrium(params: &InspectionParams) -> Equilibrium {
    let p = params.penalty;
    Equilibrium { p_audit: (params.c_search / p).clamp(0.0, 1.0), q_search: (1.0 - params.c_audit / p).clamp(0.0, 1.0) }
}

/// Exact expected payoff of a target playing `strategy`, averaged over the
/// shares of `assignment` (each equally likely under the random deal), when
/// its share is audited with probability `audit_prob`. Payoff division is
/// left out; it can only matter when `P` is small against coalition values.
pub fn expected_target_payoff(
    game: &Game,
    assignment: &Assignment,
    strategy: Strategy,
    params: &InspectionParams,
    audit_prob: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for share in &assignment.shares {
        let len = share.end - share.start;
        let out = agent_search(game, assignment.phase, share.clone(), 0, strategy)?;
        let caught = caught_on(game, assignment.phase, share, &out.report)?;
        let cost = params.c_search * out.nodes_searched as f64 / len as f64;
        total += -cost - params.penalty * audit_prob * f64::from(u8::from(caught));
    }
    Ok(total / assignment.shares.len() as f64)
}

fn caught_on(game: &Game, phase: SearchPhase, share: &Range<u64>, report: &Report) -> Result<bool> {
    let mut member = false;
    let mut best = f64::NEG_INFINITY;
    for cs in phase.nodes(game.agents(), share.clone())? {
        member |= cs == report.structure;
        best = best.max(game.welfare(&cs));
    }
    Ok(!member || best > report.value)
}

/// Whether the selected auditor re-searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AuditPolicy {
    Always,
    Never,
    Probability(f64),
}

impl AuditPolicy {
    pub fn probability(self) -> f64 {
        match self {
            AuditPolicy::Always => 1.0,
            AuditPolicy::Never => 0.0,
            AuditPolicy::Probability(p) => p,
        }
    }
}

/// Exact per-round catch probability: the target is uniform over agents and
/// its share uniform over the dealt ranges.
pub fn exact_catch_probability(
    game: &Game,
    assignment: &Assignment,
    policies: &[AgentPolicy],
    audit: AuditPolicy,
) -> Result<f64> {
    let n = assignment.num_agents();
    if policies.len() != n {
        return Err(Error::InvalidParameter(format!("{} policies for {n} agents", policies.len())));
    }
    let mut total = 0.0;
    for policy in policies {
        let (deviate_prob, deviation) = match policy.validate()? {
            AgentPolicy::Pure(s) => (1.0, s),
            AgentPolicy::Mixed { search_prob, deviation } => (1.0 - search_prob, deviation),
        };
        if deviation == Strategy::Truthful {
            continue;
        }
        for share in &assignment.shares {
            let out = agent_search(game, assignment.phase, share.clone(), 0, deviation)?;
            if caught_on(game, assignment.phase, share, &out.report)? {
                total += deviate_prob;
            }
        }
    }
    Ok(audit.probability() * total / (n * n) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayoffScheme {
    /// Each member of `S` receives `v_S / |S|`.
    EqualWithinCoalition,
    /// Members of `S` split `v_S` in proportion to their singleton values,
    /// equally when those are all zero.
    SingletonProportional,
}

impl PayoffScheme {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "equal" => Ok(PayoffScheme::EqualWithinCoalition),
            "singleton-proportional" => Ok(PayoffScheme::SingletonProportional),
            other => Err(Error::InvalidParameter(format!("unknown payoff scheme `{other}`"))),
        }
    }
}

/// Per-agent payoffs (index `i` is agent `i + 1`) summing to `V(cs)`. An
/// agent alone in its coalition always receives exactly `v_S`.
pub fn payoff_division(game: &Game, cs: &CoalitionStructure, scheme: PayoffScheme) -> Result<Vec<f64>> {
    game.structure_value(cs)?;
    let mut pay = vec![0.0; game.agents().get()];
    for c in cs.coalitions() {
        let v = game.welfare_of_masks(&[c.mask()]);
        let members: Vec<usize> = c.members().collect();
        let weights: Vec<f64> = match scheme {
            PayoffScheme::EqualWithinCoalition => vec![1.0; members.len()],
            PayoffScheme::SingletonProportional => {
                members.iter().map(|&m| game.welfare_of_masks(&[1 << (m - 1)])).collect()
            }
        };
        let sum: f64 = weights.iter().sum();
        for (k, &m) in members.iter().enumerate() {
            pay[m - 1] = if members.len() == 1 {
                v
            } else if sum > 0.0 {
                v * weights[k] / sum
            } else {
                v / members.len() as f64
            };
        }
    }
    Ok(pay)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub phase: SearchPhase,
    /// One policy per searching agent; agent `i` is game agent `i + 1`.
    pub policies: Vec<AgentPolicy>,
    pub audit: AuditPolicy,
    pub params: InspectionParams,
    pub scheme: PayoffScheme,
    pub rounds: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: u64,
    pub adopted_value: f64,
    /// `(auditor, target)` when an audit took place.
    pub audit: Option<(usize, usize)>,
    pub caught: bool,
    pub transfer: f64,
    /// Every agent's division payoff plus transfers minus costs.
    pub net_payoffs: Vec<f64>,
    pub costs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationStats {
    pub rounds: Vec<RoundRecord>,
    /// Summed over rounds, per game agent.
    pub net_payoff: Vec<f64>,
    pub audits: u64,
    pub catches: u64,
    pub mean_welfare: f64,
}

impl SimulationStats {
    pub fn audit_frequency(&self) -> f64 {
        self.audits as f64 / self.rounds.len() as f64
    }

    pub fn catch_frequency(&self) -> f64 {
        self.catches as f64 / self.rounds.len() as f64
    }
}

/// Repeats partition, search, report, audit and payoff division.
pub fn simulate_rounds(game: &Game, config: &SimulationConfig) -> Result<SimulationStats> {
    let a = game.agents();
    let n = config.policies.len();
    if n < 2 || n > a.get() {
        return Err(Error::InvalidParameter(format!("{n} searching agents; need between 2 and the game's {a} agents")));
    }
    if config.rounds == 0 {
        return Err(Error::InvalidParameter("at least one round".into()));
    }
    let policies: Vec<AgentPolicy> = config.policies.iter().map(|p| p.validate()).collect::<Result<_>>()?;
    let p_audit = config.audit.probability();
    if !(0.0..=1.0).contains(&p_audit) {
        return Err(Error::InvalidParameter(format!("audit probability {p_audit} outside [0, 1]")));
    }
    let node_count = config.phase.node_count(a)?;
    let params = config.params;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut records = Vec::with_capacity(config.rounds as usize);
    let mut net_payoff = vec![0.0; a.get()];
    let (mut audits, mut catches, mut welfare) = (0u64, 0u64, 0.0);
    for round in 0..config.rounds {
        rng.set_stream(round);
        rng.set_word_pos(0);
        let shares = partition_space_with(node_count, n, &mut rng)?;
        let assignment = Assignment { phase: config.phase, shares };

        let mut costs = vec![0.0; a.get()];
        let mut reports = Vec::with_capacity(n);
        for (agent, policy) in policies.iter().enumerate() {
            let strategy = policy.resolve(&mut rng);
            let share = assignment.shares[agent].clone();
            let len = share.end - share.start;
            let out = agent_search(game, config.phase, share, agent, strategy)?;
            costs[agent] += params.c_search * out.nodes_searched as f64 / len as f64;
            reports.push(out.report);
        }
        let adopted = reports
            .iter()
            .fold(None::<&Report>, |best, r| match best {
                Some(b) if b.value >= r.value => Some(b),
                _ => Some(r),
            })
            .expect("at least two reports");

        let (auditor, target) = select_pair(&mut rng, n);
        let audited = rng.random::<f64>() < p_audit;
        let mut transfer = 0.0;
        let mut caught = false;
        if audited {
            audits += 1;
            costs[auditor] += params.c_audit;
            let outcome = audit_pair(game, &assignment, &reports[target], auditor, target, params.penalty)?;
            caught = outcome.caught;
            transfer = outcome.transfer;
            catches += u64::from(caught);
        }

        let mut net = payoff_division(game, &adopted.structure, config.scheme)?;
        net[target] -= transfer;
        net[auditor] += transfer;
        for (x, c) in net.iter_mut().zip(&costs) {
            *x -= c;
        }
        for (acc, x) in net_payoff.iter_mut().zip(&net) {
            *acc += x;
        }
        welfare += adopted.value;
        records.push(RoundRecord {
            round,
            adopted_value: adopted.value,
            audit: audited.then_some((auditor, target)),
            caught,
            transfer,
            net_payoffs: net,
            costs: costs.iter().sum(),
        });
    }
    Ok(SimulationStats { mean_welfare: welfare / config.rounds as f64, rounds: records, net_payoff, audits, catches })
}
