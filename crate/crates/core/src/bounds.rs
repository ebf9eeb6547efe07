//! Worst-case bounds for searches over the coalition structure graph.
//!
//! The closed forms give the guarantee `k` with `V(CS*) <= k * V(best seen)`
//! after each checkpoint of the bottom-two-then-top-down search. The oracle
//! in [`worst_case_ratio`] computes the same quantity by brute force over the
//! 0/1 disjoint-family adversaries, for cross-checking at small `a`.

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::game::{AgentCount, CoalitionStructure};
use crate::partition::{self, bottom_two_count, enumerate_all, enumerate_level, level_size};

/// `floor((a - l) / 2) + 2`: the coalition size that cannot yet have been
/// seen paired after the top-down sweep completes level `l`.
pub fn h_value(a: usize, l: usize) -> Result<u64> {
    if l == 0 || l > a {
        return Err(Error::LevelOutOfRange { level: l, agents: a });
    }
    Ok(((a - l) / 2 + 2) as u64)
}

/// Which congruence selects the ceiling case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModulusVariant {
    /// `a = h - 1 (mod h)`, the default.
    ModH,
    /// `a = h - 1 (mod h - 1)`, i.e. `h - 1` divides `a`.
    ModHMinusOne,
}

pub fn is_ceil_case(a: usize, l: usize, variant: ModulusVariant) -> Result<bool> {
    let h = h_value(a, l)?;
    let a64 = a as u64;
    let congruent = match variant {
        ModulusVariant::ModH => a64 % h == h - 1,
        ModulusVariant::ModHMinusOne => a64.is_multiple_of(h - 1),
    };
    Ok(congruent && (a - l).is_multiple_of(2))
}

pub fn bound_after_level_variant(a: usize, l: usize, variant: ModulusVariant) -> Result<u64> {
    if l < 3 || l > a {
        return Err(Error::LevelOutOfRange { level: l, agents: a });
    }
    let h = h_value(a, l)?;
    let a64 = a as u64;
    Ok(if is_ceil_case(a, l, variant)? { a64.div_ceil(h) } else { a64 / h })
}

/// Bound after the top-down sweep has completed level `l`, `3 <= l <= a`.
pub fn bound_after_level(a: usize, l: usize) -> Result<u64> {
    bound_after_level_variant(a, l, ModulusVariant::ModH)
}

/// Signature shared by the level formulas, so checks can be run against an
/// alternative (or deliberately broken) formula.
pub type BoundFormula = fn(usize, usize, ModulusVariant) -> Result<u64>;

/// The checkpoints at which the bottom-two-then-top-down search reports a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Css1Checkpoint {
    BottomTwo,
    /// The top-down sweep has completed level `l` (level `a` is the top node).
    AfterLevel(usize),
}

/// One step of the `k(n)` staircase: `k` holds from `n` until the next step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaircaseStep {
    pub n: u64,
    pub k: Option<u64>,
    pub checkpoint: Option<Css1Checkpoint>,
}

/// Nodes visited once `checkpoint` is reached.
pub fn css1_nodes_at(a: AgentCount, checkpoint: Css1Checkpoint) -> Result<u64> {
    let mut n = bottom_two_count(a);
    if let Css1Checkpoint::AfterLevel(l) = checkpoint {
        if l < 3 || l > a.get() {
            return Err(Error::LevelOutOfRange { level: l, agents: a.get() });
        }
        for j in l..=a.get() {
            n += level_size(a, j)?;
        }
    }
    Ok(n)
}

pub fn css1_bound_staircase(a: AgentCount) -> Result<Vec<StaircaseStep>> {
    css1_bound_staircase_with(a, bound_after_level_variant)
}

/// The full step function of the bound for the bottom-two-then-top-down search.
/// Completing level 3 exhausts the graph, which pins `k` to 1 there.
pub fn css1_bound_staircase_with(a: AgentCount, formula: BoundFormula) -> Result<Vec<StaircaseStep>> {
    let n_agents = a.get();
    if n_agents < 2 {
        return Err(Error::AgentCount(n_agents));
    }
    let total = partition::graph_size(a);
    let n_min = bottom_two_count(a);
    let mut steps = Vec::new();
    if n_min > 1 {
        steps.push(StaircaseStep { n: 1, k: None, checkpoint: None });
    }
    let k_min = if n_min == total { 1 } else { n_agents as u64 };
    steps.push(StaircaseStep { n: n_min, k: Some(k_min), checkpoint: Some(Css1Checkpoint::BottomTwo) });
    let mut n = n_min;
    for l in (3..=n_agents).rev() {
        n += level_size(a, l)?;
        let k = if n == total { 1 } else { formula(n_agents, l, ModulusVariant::ModH)? };
        steps.push(StaircaseStep { n, k: Some(k), checkpoint: Some(Css1Checkpoint::AfterLevel(l)) });
    }
    Ok(steps)
}

/// Realized ratio of the bottom-up (splitting) search on the singleton game
/// after it completes level `l`, for `l = 2 ..= a`: `a / (l - 1)`, or 1 once
/// the top level is done.
pub fn splitting_bad_case_curve(a: AgentCount) -> Result<Vec<(u64, usize, Ratio<u64>)>> {
    let n_agents = a.get();
    if n_agents < 2 {
        return Err(Error::AgentCount(n_agents));
    }
    let mut n = 1u64;
    let mut out = Vec::new();
    for l in 2..=n_agents {
        n += level_size(a, l)?;
        let ratio = if l == n_agents { Ratio::from_integer(1) } else { Ratio::new(n_agents as u64, (l - 1) as u64) };
        out.push((n, l, ratio));
    }
    Ok(out)
}

/// A symbolic set of visited structures, expanded only when iterated.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeSet {
    BottomTwo,
    /// Everything the bottom-two-then-top-down search has seen at a checkpoint.
    Css1(Css1Checkpoint),
    All,
    Explicit(Vec<CoalitionStructure>),
}

impl NodeSet {
    pub fn structures(&self, a: AgentCount) -> Result<Box<dyn Iterator<Item = CoalitionStructure> + '_>> {
        Ok(match self {
            NodeSet::BottomTwo | NodeSet::Css1(Css1Checkpoint::BottomTwo) => Box::new(partition::bottom_two(a)),
            NodeSet::Css1(Css1Checkpoint::AfterLevel(l)) => {
                let l = *l;
                if l < 3 || l > a.get() {
                    return Err(Error::LevelOutOfRange { level: l, agents: a.get() });
                }
                let top = (l..=a.get()).rev().flat_map(move |j| enumerate_level(a, j).expect("level in range"));
                Box::new(partition::bottom_two(a).chain(top))
            }
            NodeSet::All => Box::new(enumerate_all(a)),
            NodeSet::Explicit(v) => Box::new(v.iter().cloned()),
        })
    }
}

/// Outcome of the worst-case oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WorstCase {
    Bounded {
        ratio: Ratio<u64>,
        /// Coalitions valued 1 in a game attaining the ratio.
        witness: Vec<u32>,
    },
    /// Some coalition never appears in the visited set, so no bound holds.
    Unbounded { witness: Vec<u32> },
}

impl WorstCase {
    pub fn ratio(&self) -> Option<Ratio<u64>> {
        match self {
            WorstCase::Bounded { ratio, .. } => Some(*ratio),
            WorstCase::Unbounded { .. } => None,
        }
    }
}

/// Largest agent count the oracle accepts; coalition sets fit in a `u128`.
pub const ORACLE_MAX_AGENTS: usize = 7;

/// Exact supremum of `|T| / max_{CS' in N} |T ∩ CS'|` over every structure
/// `CS` and nonempty `T ⊆ CS`: the ratio forced by valuing the coalitions of
/// `T` at 1 and everything else at 0.
pub fn worst_case_ratio(a: AgentCount, visited: &NodeSet) -> Result<WorstCase> {
    if a.get() > ORACLE_MAX_AGENTS {
        return Err(Error::Refused { what: "worst-case oracle", agents: a.get(), limit: ORACLE_MAX_AGENTS });
    }
    // One bitset of member masks per visited structure.
    let mut seen: Vec<u128> =
        visited.structures(a)?.map(|cs| cs.masks().iter().fold(0u128, |acc, &m| acc | 1u128 << m)).collect();
    seen.sort_unstable();
    seen.dedup();

    let mut best: Option<(Ratio<u64>, Vec<u32>)> = None;
    let mut patterns = [false; 1 << ORACLE_MAX_AGENTS];
    for cs in enumerate_all(a) {
        let blocks = cs.masks();
        let level = blocks.len();
        let subsets = 1usize << level;
        patterns[..subsets].iter_mut().for_each(|p| *p = false);
        for &set in &seen {
            let mut pat = 0usize;
            for (b, &m) in blocks.iter().enumerate() {
                if set >> m & 1 == 1 {
                    pat |= 1 << b;
                }
            }
            patterns[pat] = true;
        }
        let distinct: Vec<usize> = (0..subsets).filter(|&p| patterns[p] && p != 0).collect();
        for t in 1..subsets {
            let covered = distinct.iter().map(|&p| (p & t).count_ones()).max().unwrap_or(0);
            let family = || -> Vec<u32> { (0..level).filter(|b| t >> b & 1 == 1).map(|b| blocks[b]).collect() };
            if covered == 0 {
                return Ok(WorstCase::Unbounded { witness: family() });
            }
            let r = Ratio::new(t.count_ones() as u64, covered as u64);
            if best.as_ref().is_none_or(|(b, _)| r > *b) {
                best = Some((r, family()));
            }
        }
    }
    let (ratio, witness) = best.expect("every graph has a node");
    Ok(WorstCase::Bounded { ratio, witness })
}

/// How an oracle value compares with the closed-form staircase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Agreement {
    Match,
    /// The staircase disagrees but the formula under the other modulus
    /// variant agrees.
    Adjudicated(ModulusVariant),
    Unexplained,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementRow {
    pub checkpoint: Css1Checkpoint,
    pub n: u64,
    pub oracle: WorstCase,
    pub closed_form: Option<u64>,
    pub mod_h: Option<u64>,
    pub mod_h_minus_one: Option<u64>,
    pub agreement: Agreement,
}

/// Runs the oracle on every checkpoint of the staircase built from `formula`.
pub fn oracle_agreement(a: AgentCount, formula: BoundFormula) -> Result<Vec<AgreementRow>> {
    let mut rows = Vec::new();
    for step in css1_bound_staircase_with(a, formula)? {
        let Some(checkpoint) = step.checkpoint else { continue };
        let oracle = worst_case_ratio(a, &NodeSet::Css1(checkpoint))?;
        let (mod_h, mod_h_minus_one) = match checkpoint {
            Css1Checkpoint::AfterLevel(l) => (
                Some(formula(a.get(), l, ModulusVariant::ModH)?),
                Some(formula(a.get(), l, ModulusVariant::ModHMinusOne)?),
            ),
            Css1Checkpoint::BottomTwo => (None, None),
        };
        let found = oracle.ratio();
        let as_ratio = |k: Option<u64>| k.map(Ratio::from_integer);
        let agreement = if found == as_ratio(step.k) {
            Agreement::Match
        } else if found.is_some() && found == as_ratio(mod_h_minus_one) {
            Agreement::Adjudicated(ModulusVariant::ModHMinusOne)
        } else {
            Agreement::Unexplained
        };
        rows.push(AgreementRow {
            checkpoint,
            n: step.n,
            oracle,
            closed_form: step.k,
            mod_h,
            mod_h_minus_one,
            agreement,
        });
    }
    Ok(rows)
}

fn coalition_bitset(cs: &CoalitionStructure) -> u64 {
    cs.masks().iter().fold(0u64, |acc, &m| acc | 1 << (m - 1))
}

/// Result of the exhaustive minimality scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinimalityVerdict {
    /// Node subsets examined, of every size up to `2^(a-1)`.
    pub subsets_scanned: u64,
    /// Of those, subsets of size exactly `2^(a-1)`.
    pub full_size_subsets_scanned: u64,
    /// Subsets of size at most `2^(a-1)` containing every coalition.
    pub covering: Vec<Vec<CoalitionStructure>>,
    pub unique_is_bottom_two: bool,
}

/// Scans every node subset of size at most `2^(a-1)` for `a = 4` and reports
/// those that observe every coalition.
pub fn minimality_check(a: AgentCount) -> Result<MinimalityVerdict> {
    if a.get() != 4 {
        return Err(Error::Refused { what: "exhaustive minimality scan", agents: a.get(), limit: 4 });
    }
    let nodes: Vec<CoalitionStructure> = enumerate_all(a).collect();
    let sets: Vec<u64> = nodes.iter().map(coalition_bitset).collect();
    let everything = (1u64 << a.coalition_count()) - 1;
    let cap = bottom_two_count(a) as u32;
    let mut subsets_scanned = 0;
    let mut full_size = 0;
    let mut covering = Vec::new();
    for pick in 1u32..(1 << nodes.len()) {
        let size = pick.count_ones();
        if size > cap {
            continue;
        }
        subsets_scanned += 1;
        full_size += u64::from(size == cap);
        let seen = (0..nodes.len()).filter(|i| pick >> i & 1 == 1).fold(0u64, |acc, i| acc | sets[i]);
        if seen == everything {
            covering
                .push((0..nodes.len()).filter(|i| pick >> i & 1 == 1).map(|i| nodes[i].clone()).collect::<Vec<_>>());
        }
    }
    let mut bottom: Vec<CoalitionStructure> = partition::bottom_two(a).collect();
    bottom.sort();
    let unique_is_bottom_two = covering.len() == 1 && {
        let mut c = covering[0].clone();
        c.sort();
        c == bottom
    };
    Ok(MinimalityVerdict { subsets_scanned, full_size_subsets_scanned: full_size, covering, unique_is_bottom_two })
}

/// For one omitted level-2 node `{P, Q}`: the fewest other nodes that
/// together contain both `P` and `Q`, with an example. `None` means no set of
/// other nodes does, which happens when `P` or `Q` has `a - 1` members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replacement {
    pub omitted: CoalitionStructure,
    pub min_replacements: Option<usize>,
    pub example: Vec<CoalitionStructure>,
}

impl Replacement {
    pub fn needs_at_least(&self, k: usize) -> bool {
        self.min_replacements.is_none_or(|m| m >= k)
    }
}

pub const SPOT_MAX_AGENTS: usize = 10;

/// Replacement search for every level-2 node, over the whole graph.
pub fn minimality_spot_check(a: AgentCount) -> Result<Vec<Replacement>> {
    if a.get() < 3 || a.get() > SPOT_MAX_AGENTS {
        return Err(Error::Refused { what: "minimality spot check", agents: a.get(), limit: SPOT_MAX_AGENTS });
    }
    let mut out = Vec::new();
    for omitted in enumerate_level(a, 2)? {
        let (p, q) = (omitted.masks()[0], omitted.masks()[1]);
        let mut with_p = None;
        let mut with_q = None;
        let mut with_both = None;
        for cs in enumerate_all(a).filter(|cs| *cs != omitted) {
            let (hp, hq) = (cs.contains(p), cs.contains(q));
            if hp && hq && with_both.is_none() {
                with_both = Some(cs.clone());
            }
            if hp && with_p.is_none() {
                with_p = Some(cs.clone());
            }
            if hq && with_q.is_none() {
                with_q = Some(cs);
            }
        }
        let (min_replacements, example) = match (with_both, with_p, with_q) {
            (Some(b), _, _) => (Some(1), vec![b]),
            (None, Some(x), Some(y)) => (Some(2), vec![x, y]),
            _ => (None, Vec::new()),
        };
        out.push(Replacement { omitted, min_replacements, example });
    }
    Ok(out)
}

/// Which size-`h` coalitions have been seen together, and with which partners,
/// once the sweep completes level `l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairingReport {
    pub h: u64,
    /// Largest partner size that every size-`h` coalition must have been seen with.
    pub partner_limit: u64,
    /// Pairs of size-`h` coalitions that did appear together.
    pub size_h_pairs_seen: Vec<(u32, u32)>,
    /// `(size-h coalition, disjoint partner within the limit)` never seen together.
    pub missing_partners: Vec<(u32, u32)>,
}

pub const PAIRING_MAX_AGENTS: usize = 8;

pub fn pairing_check(a: AgentCount, l: usize) -> Result<PairingReport> {
    let n = a.get();
    if n > PAIRING_MAX_AGENTS {
        return Err(Error::Refused { what: "pairing check", agents: n, limit: PAIRING_MAX_AGENTS });
    }
    if l < 3 || l > n {
        return Err(Error::LevelOutOfRange { level: l, agents: n });
    }
    let h = h_value(n, l)?;
    let partner_limit = if (n - l).is_multiple_of(2) { h.saturating_sub(2) } else { h - 1 };
    let size = 1usize << n;
    let mut together = vec![false; size * size];
    for cs in NodeSet::Css1(Css1Checkpoint::AfterLevel(l)).structures(a)? {
        let m = cs.masks();
        for i in 0..m.len() {
            for j in 0..m.len() {
                if i != j {
                    together[m[i] as usize * size + m[j] as usize] = true;
                }
            }
        }
    }
    let mut size_h_pairs_seen = Vec::new();
    let mut missing_partners = Vec::new();
    for x in 1..size as u32 {
        if u64::from(x.count_ones()) != h {
            continue;
        }
        for y in 1..size as u32 {
            if x & y != 0 {
                continue;
            }
            let seen = together[x as usize * size + y as usize];
            let ys = u64::from(y.count_ones());
            if ys == h && x < y && seen {
                size_h_pairs_seen.push((x, y));
            }
            if ys <= partner_limit && !seen {
                missing_partners.push((x, y));
            }
        }
    }
    Ok(PairingReport { h, partner_limit, size_h_pairs_seen, missing_partners })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: usize) -> AgentCount {
        AgentCount::new(n).unwrap()
    }

    #[test]
    fn h_values() {
        assert_eq!(h_value(10, 10).unwrap(), 2);
        assert_eq!(h_value(10, 8).unwrap(), 3);
        assert_eq!(h_value(10, 3).unwrap(), 5);
        assert!(h_value(10, 11).is_err());
        assert!(h_value(10, 0).is_err());
    }

    #[test]
    fn level_bounds() {
        assert_eq!(bound_after_level(10, 10).unwrap(), 5);
        assert_eq!(bound_after_level(5, 5).unwrap(), 3);
        assert_eq!(bound_after_level(10, 8).unwrap(), 3);
        assert!(bound_after_level(10, 2).is_err());
        assert!(bound_after_level(10, 11).is_err());
    }

    #[test]
    fn staircase_small() {
        let s = css1_bound_staircase(a(4)).unwrap();
        let pairs: Vec<_> = s.iter().map(|st| (st.n, st.k)).collect();
        assert_eq!(pairs, vec![(1, None), (8, Some(4)), (9, Some(2)), (15, Some(1))]);
        let s2 = css1_bound_staircase(a(2)).unwrap();
        assert_eq!(s2.iter().map(|st| (st.n, st.k)).collect::<Vec<_>>(), vec![(1, None), (2, Some(1))]);
        assert!(css1_bound_staircase(a(1)).is_err());
    }

    #[test]
    fn staircase_is_monotone_and_ends_at_one() {
        for n in 2..=20 {
            let s = css1_bound_staircase(a(n)).unwrap();
            let ks: Vec<u64> = s.iter().filter_map(|st| st.k).collect();
            assert!(ks.windows(2).all(|w| w[0] >= w[1]), "a={n}: {ks:?}");
            assert_eq!(*ks.last().unwrap(), 1);
            assert_eq!(s.last().unwrap().n, partition::graph_size(a(n)));
        }
    }

    #[test]
    fn halving_after_top_node() {
        for n in 3..=20 {
            let s = css1_bound_staircase(a(n)).unwrap();
            let after_top = s.iter().find(|st| st.n == bottom_two_count(a(n)) + 1).unwrap();
            let expected = if n == 3 {
                1
            } else if n % 2 == 0 {
                n / 2
            } else {
                n.div_ceil(2)
            } as u64;
            assert_eq!(after_top.k, Some(expected), "a={n}");
        }
    }

    #[test]
    fn divisor_grows_every_two_levels() {
        for n in 4..=20usize {
            let mut prev = None;
            for l in (3..=n).rev().filter(|l| (n - l) % 2 == 0) {
                let h = h_value(n, l).unwrap();
                if let Some(p) = prev {
                    assert_eq!(h, p + 1);
                }
                prev = Some(h);
            }
        }
    }

    #[test]
    fn oracle_small_cases() {
        let bt = worst_case_ratio(a(4), &NodeSet::BottomTwo).unwrap();
        assert_eq!(bt.ratio(), Some(Ratio::from_integer(4)));
        let all = worst_case_ratio(a(4), &NodeSet::All).unwrap();
        assert_eq!(all.ratio(), Some(Ratio::from_integer(1)));
        let mut nodes: Vec<_> = partition::bottom_two(a(4)).collect();
        let dropped = nodes.remove(3);
        let partial = worst_case_ratio(a(4), &NodeSet::Explicit(nodes)).unwrap();
        match partial {
            WorstCase::Unbounded { witness } => {
                assert_eq!(witness.len(), 1);
                assert!(dropped.contains(witness[0]));
            }
            other => panic!("expected unbounded, got {other:?}"),
        }
        assert!(worst_case_ratio(a(8), &NodeSet::All).is_err());
    }

    #[test]
    fn oracle_matches_closed_form_at_five() {
        for row in oracle_agreement(a(5), bound_after_level_variant).unwrap() {
            assert_eq!(row.agreement, Agreement::Match, "{row:?}");
        }
    }

    #[test]
    fn corrupted_formula_is_not_matched() {
        fn off_by_one(a: usize, l: usize, v: ModulusVariant) -> Result<u64> {
            bound_after_level_variant(a, l, v).map(|k| k + 1)
        }
        let rows = oracle_agreement(a(5), off_by_one).unwrap();
        let bad: Vec<_> = rows.iter().filter(|r| r.agreement == Agreement::Unexplained).collect();
        // Level 3 exhausts the graph and is pinned to 1 whatever the formula says.
        assert_eq!(bad.len(), 2);
        assert!(bad.iter().all(|r| matches!(r.checkpoint, Css1Checkpoint::AfterLevel(5 | 4))));
    }

    #[test]
    fn minimality_four() {
        let v = minimality_check(a(4)).unwrap();
        assert_eq!(v.full_size_subsets_scanned, 6435);
        assert_eq!(v.covering.len(), 1);
        assert!(v.unique_is_bottom_two);
        assert!(minimality_check(a(5)).is_err());
    }

    #[test]
    fn spot_check_five() {
        let r = minimality_spot_check(a(5)).unwrap();
        assert_eq!(r.len(), 15);
        assert!(r.iter().all(|x| x.needs_at_least(2)));
        // {i} | rest: the (a-1)-coalition appears nowhere else.
        assert_eq!(r.iter().filter(|x| x.min_replacements.is_none()).count(), 5);
        assert_eq!(r.iter().filter(|x| x.min_replacements == Some(2)).count(), 10);
    }

    #[test]
    fn pairing_small() {
        let rep = pairing_check(a(5), 5).unwrap();
        assert!(rep.size_h_pairs_seen.is_empty());
        assert!(rep.missing_partners.is_empty());
        // a = 2h: the two halves of each even split sit together at level 2.
        let rep = pairing_check(a(4), 4).unwrap();
        assert_eq!(rep.size_h_pairs_seen.len(), 3);
        assert!(rep.size_h_pairs_seen.iter().all(|&(x, y)| x | y == 0b1111));
    }

    #[test]
    fn splitting_curve() {
        let c = splitting_bad_case_curve(a(10)).unwrap();
        let at4 = c.iter().find(|(_, l, _)| *l == 4).unwrap();
        assert_eq!(at4.2, Ratio::new(10, 3));
        assert_eq!(c.last().unwrap().2, Ratio::from_integer(1));
        assert_eq!(c.last().unwrap().0, 115_975);
        assert_eq!(c[0].0, 512);
    }
}
