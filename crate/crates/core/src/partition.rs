//! The coalition structure graph, level by level.
//!
//! Level `l` holds the partitions of the agents into exactly `l` blocks; level 1
//! is the grand coalition and level `a` the all-singletons structure. General
//! levels are enumerated as restricted-growth strings with agent 1 fixed in the
//! first block, so every yielded structure is already canonical. Level 2 is the
//! hot path of the minimal search and gets a direct mask iterator.

use std::ops::Range;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::game::{AgentCount, Coalition, CoalitionStructure};

fn check_level(a: AgentCount, l: usize) -> Result<()> {
    if l == 0 || l > a.get() {
        return Err(Error::LevelOutOfRange { level: l, agents: a.get() });
    }
    Ok(())
}

/// Number of level-2 structures, `2^(a-1) - 1`.
#[inline]
pub fn pair_count(a: AgentCount) -> u64 {
    (1u64 << (a.get() - 1)) - 1
}

/// Number of structures on the bottom two levels, `2^(a-1)`.
#[inline]
pub fn bottom_two_count(a: AgentCount) -> u64 {
    1u64 << (a.get() - 1)
}

/// The `index`-th node of [`bottom_two`]: index 0 is the grand coalition,
/// index `i >= 1` splits off the agents of mask `i` (which never contains
/// agent `a`) from the rest.
pub fn bottom_two_node(a: AgentCount, index: u64) -> Option<CoalitionStructure> {
    if index >= bottom_two_count(a) {
        return None;
    }
    if index == 0 {
        return Some(CoalitionStructure::grand(a));
    }
    let part = index as u32;
    Some(CoalitionStructure::from_blocks(a, vec![part, a.full_mask() ^ part]))
}

/// Level-2 structures in mask order of the block without agent `a`.
#[derive(Debug, Clone)]
pub struct PairIter {
    agents: AgentCount,
    next: u32,
    end: u32,
}

impl Iterator for PairIter {
    type Item = CoalitionStructure;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.end {
            return None;
        }
        let part = self.next;
        self.next += 1;
        let full = self.agents.full_mask();
        Some(CoalitionStructure::from_blocks(self.agents, vec![part, full ^ part]))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.next) as usize;
        (n, Some(n))
    }
}

/// Restricted-growth strings with exactly `blocks` distinct values, in
/// lexicographic order.
#[derive(Debug, Clone)]
pub struct RgsIter {
    agents: AgentCount,
    blocks: usize,
    rgs: Vec<usize>,
    // used[i] = number of blocks among rgs[0..=i]
    used: Vec<usize>,
    started: bool,
    done: bool,
}

impl RgsIter {
    fn new(agents: AgentCount, blocks: usize) -> Self {
        let a = agents.get();
        let mut it = Self { agents, blocks, rgs: vec![0; a], used: vec![1; a], started: false, done: false };
        it.fill_from(0);
        it
    }

    // Lexicographically smallest completion of rgs[..=pos]: zeros, then the
    // missing block labels in ascending order at the very end.
    fn fill_from(&mut self, pos: usize) {
        let a = self.rgs.len();
        let have = self.used[pos];
        let need = self.blocks - have;
        for j in pos + 1..a {
            let from_end = a - j;
            if from_end <= need {
                self.rgs[j] = self.blocks - from_end;
            } else {
                self.rgs[j] = 0;
            }
            self.used[j] = self.used[j - 1].max(self.rgs[j] + 1);
        }
    }

    fn advance(&mut self) -> bool {
        let a = self.rgs.len();
        for i in (1..a).rev() {
            let prev = self.used[i - 1];
            let hi = prev.min(self.blocks - 1);
            let remaining = a - 1 - i;
            let mut c = self.rgs[i] + 1;
            while c <= hi {
                let have = prev.max(c + 1);
                if self.blocks - have <= remaining {
                    self.rgs[i] = c;
                    self.used[i] = have;
                    self.fill_from(i);
                    return true;
                }
                c += 1;
            }
        }
        false
    }

    fn current(&self) -> CoalitionStructure {
        let mut masks = vec![0u32; self.blocks];
        for (agent, &b) in self.rgs.iter().enumerate() {
            masks[b] |= 1 << agent;
        }
        CoalitionStructure::from_blocks(self.agents, masks)
    }
}

impl Iterator for RgsIter {
    type Item = CoalitionStructure;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if self.started && !self.advance() {
            self.done = true;
            return None;
        }
        self.started = true;
        Some(self.current())
    }
}

/// Lazy iterator over one level of the graph.
#[derive(Debug, Clone)]
pub enum LevelIter {
    Grand(Option<CoalitionStructure>),
    Pairs(PairIter),
    General(RgsIter),
}

impl Iterator for LevelIter {
    type Item = CoalitionStructure;

    fn next(&mut self) -> Option<Self::Item> {
        match self {
            LevelIter::Grand(g) => g.take(),
            LevelIter::Pairs(p) => p.next(),
            LevelIter::General(r) => r.next(),
        }
    }
}

/// Every partition of the agents into exactly `l` blocks, once each, in a
/// deterministic order.
pub fn enumerate_level(a: AgentCount, l: usize) -> Result<LevelIter> {
    check_level(a, l)?;
    Ok(match l {
        1 => LevelIter::Grand(Some(CoalitionStructure::grand(a))),
        2 => LevelIter::Pairs(PairIter { agents: a, next: 1, end: 1 << (a.get() - 1) }),
        _ => LevelIter::General(RgsIter::new(a, l)),
    })
}

/// Restricted-growth-string enumeration of level `l` regardless of `l`; used
/// to cross-check the specialized level-1 and level-2 iterators.
pub fn enumerate_level_rgs(a: AgentCount, l: usize) -> Result<RgsIter> {
    check_level(a, l)?;
    Ok(RgsIter::new(a, l))
}

/// Every structure of the graph, level 1 upward.
pub fn enumerate_all(a: AgentCount) -> impl Iterator<Item = CoalitionStructure> {
    (1..=a.get()).flat_map(move |l| enumerate_level(a, l).expect("level in range"))
}

/// The grand coalition followed by every level-2 structure; `2^(a-1)` nodes
/// that together contain every nonempty coalition.
pub fn bottom_two(a: AgentCount) -> impl Iterator<Item = CoalitionStructure> {
    let pairs = enumerate_level(a, 2.min(a.get())).ok().filter(|_| a.get() >= 2);
    std::iter::once(CoalitionStructure::grand(a)).chain(pairs.into_iter().flatten())
}

/// Unordered splits of a coalition into two nonempty parts. The first part
/// always holds the lowest-indexed member.
#[derive(Debug, Clone)]
pub struct Splits {
    low: u32,
    rest: u32,
    sub: u32,
    done: bool,
}

impl Iterator for Splits {
    type Item = (Coalition, Coalition);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done || self.sub == self.rest {
            self.done = true;
            return None;
        }
        let left = self.low | self.sub;
        let right = self.rest ^ self.sub;
        self.sub = self.sub.wrapping_sub(self.rest) & self.rest;
        Some((Coalition::new_unchecked(left), Coalition::new_unchecked(right)))
    }
}

pub fn splits(s: Coalition) -> Result<Splits> {
    if s.size() < 2 {
        return Err(Error::SingletonSplit);
    }
    let mask = s.mask();
    let low = mask & mask.wrapping_neg();
    Ok(Splits { low, rest: mask ^ low, sub: 0, done: false })
}

/// Structures obtained by merging exactly one unordered pair of coalitions.
pub fn mergers(cs: &CoalitionStructure) -> Result<impl Iterator<Item = CoalitionStructure> + '_> {
    let level = cs.level();
    if level < 2 {
        return Err(Error::NoMergers);
    }
    let masks = cs.masks();
    Ok((0..level).flat_map(move |i| {
        (i + 1..level).map(move |j| {
            let mut merged: Vec<u32> =
                masks.iter().enumerate().filter(|&(k, _)| k != i && k != j).map(|(_, &m)| m).collect();
            merged.push(masks[i] | masks[j]);
            CoalitionStructure::from_blocks(cs.agents(), merged)
        })
    }))
}

/// Exact Stirling numbers of the second kind and Bell numbers for
/// `1 <= a <= max`.
#[derive(Debug, Clone)]
pub struct CountTable {
    // stirling[a][l], zero-padded at l = 0
    stirling: Vec<Vec<BigUint>>,
    bell: Vec<BigUint>,
}

impl CountTable {
    pub fn new(max: usize) -> Self {
        let mut stirling: Vec<Vec<BigUint>> = vec![vec![BigUint::one()]];
        for a in 1..=max {
            let prev = &stirling[a - 1];
            let mut row = vec![BigUint::zero(); a + 1];
            for (l, cell) in row.iter_mut().enumerate().skip(1) {
                let keep = prev.get(l).map(|s| s * BigUint::from(l)).unwrap_or_default();
                let open = prev.get(l - 1).cloned().unwrap_or_default();
                *cell = keep + open;
            }
            stirling.push(row);
        }
        let bell = stirling.iter().map(|row| row.iter().sum()).collect();
        Self { stirling, bell }
    }

    pub fn max_agents(&self) -> usize {
        self.stirling.len() - 1
    }

    pub fn stirling(&self, a: usize, l: usize) -> Result<&BigUint> {
        if a == 0 || a > self.max_agents() {
            return Err(Error::AgentCount(a));
        }
        if l == 0 || l > a {
            return Err(Error::LevelOutOfRange { level: l, agents: a });
        }
        Ok(&self.stirling[a][l])
    }

    pub fn bell(&self, a: usize) -> Result<&BigUint> {
        if a == 0 || a > self.max_agents() {
            return Err(Error::AgentCount(a));
        }
        Ok(&self.bell[a])
    }
}

pub fn stirling(a: usize, l: usize) -> Result<BigUint> {
    CountTable::new(a).stirling(a, l).cloned()
}

pub fn bell(a: usize) -> Result<BigUint> {
    CountTable::new(a).bell(a).cloned()
}

/// Size of level `l` as a machine integer; exact for every supported `a`.
pub fn level_size(a: AgentCount, l: usize) -> Result<u64> {
    check_level(a, l)?;
    Ok(stirling(a.get(), l)?.to_u64().expect("S(a, l) < 2^64 for a <= 25"))
}

/// Total node count of the graph as a machine integer.
pub fn graph_size(a: AgentCount) -> u64 {
    bell(a.get()).expect("a >= 1").to_u64().expect("Bell(a) < 2^64 for a <= 25")
}

/// Splits `0..len` into `chunks` contiguous ranges whose sizes differ by at
/// most one; the first `len % chunks` ranges are the longer ones.
pub fn chunk_ranges(len: u64, chunks: usize) -> Vec<Range<u64>> {
    let chunks = chunks.max(1) as u64;
    let base = len / chunks;
    let extra = len % chunks;
    let mut start = 0;
    (0..chunks)
        .map(|i| {
            let size = base + u64::from(i < extra);
            let r = start..start + size;
            start += size;
            r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeSet, HashSet};

    use super::*;

    fn a(n: usize) -> AgentCount {
        AgentCount::new(n).unwrap()
    }

    fn masks(it: impl Iterator<Item = CoalitionStructure>) -> Vec<Vec<u32>> {
        it.map(|cs| cs.masks().to_vec()).collect()
    }

    #[test]
    fn three_agent_levels() {
        assert_eq!(masks(enumerate_level(a(3), 1).unwrap()), vec![vec![7]]);
        let l2: BTreeSet<_> = masks(enumerate_level(a(3), 2).unwrap()).into_iter().collect();
        let expected: BTreeSet<_> = [vec![1, 6], vec![2, 5], vec![3, 4]].into_iter().collect();
        assert_eq!(l2, expected);
        assert_eq!(masks(enumerate_level(a(3), 3).unwrap()), vec![vec![1, 2, 4]]);
        assert_eq!(enumerate_level(a(4), 2).unwrap().count(), 7);
        assert!(enumerate_level(a(3), 0).is_err());
        assert!(enumerate_level(a(3), 4).is_err());
    }

    #[test]
    fn all_levels_count_bell() {
        assert_eq!(enumerate_all(a(1)).count(), 1);
        assert_eq!(enumerate_all(a(3)).count(), 5);
        assert_eq!(enumerate_all(a(4)).count(), 15);
    }

    #[test]
    fn specialized_levels_match_rgs() {
        for n in 1..=9 {
            for l in 1..=2.min(n) {
                let fast: HashSet<_> = masks(enumerate_level(a(n), l).unwrap()).into_iter().collect();
                let slow: HashSet<_> = masks(enumerate_level_rgs(a(n), l).unwrap()).into_iter().collect();
                assert_eq!(fast, slow, "a={n} l={l}");
            }
        }
    }

    #[test]
    fn rgs_yields_distinct_valid_structures() {
        for n in 1..=8 {
            for l in 1..=n {
                let all = masks(enumerate_level_rgs(a(n), l).unwrap());
                let set: HashSet<_> = all.iter().cloned().collect();
                assert_eq!(set.len(), all.len(), "duplicates at a={n} l={l}");
                for cs in &all {
                    assert_eq!(cs.len(), l);
                    CoalitionStructure::validate(a(n), cs).unwrap();
                }
                assert_eq!(all.len() as u64, level_size(a(n), l).unwrap());
            }
        }
    }

    #[test]
    fn bottom_two_nodes() {
        assert_eq!(bottom_two(a(1)).count(), 1);
        assert_eq!(bottom_two(a(4)).count(), 8);
        assert_eq!(bottom_two(a(10)).count(), 512);
        let three = masks(bottom_two(a(3)));
        assert_eq!(three, vec![vec![7], vec![1, 6], vec![2, 5], vec![3, 4]]);
        for (i, cs) in bottom_two(a(6)).enumerate() {
            assert_eq!(bottom_two_node(a(6), i as u64).unwrap(), cs);
        }
        assert!(bottom_two_node(a(6), 32).is_none());
    }

    #[test]
    fn bottom_two_sees_every_coalition() {
        for n in 1..=12 {
            let mut seen = vec![false; 1 << n];
            for cs in bottom_two(a(n)) {
                for &m in cs.masks() {
                    seen[m as usize] = true;
                }
            }
            assert!(seen[1..].iter().all(|&s| s), "a={n}");
        }
    }

    #[test]
    fn split_counts() {
        let c = |m: &[usize], n| Coalition::from_members(m, a(n)).unwrap();
        let pair: Vec<_> = splits(c(&[1, 2], 2)).unwrap().collect();
        assert_eq!(pair, vec![(c(&[1], 2), c(&[2], 2))]);
        assert_eq!(splits(c(&[1, 2, 3], 3)).unwrap().count(), 3);
        assert_eq!(splits(c(&[1, 2, 3, 4], 4)).unwrap().count(), 7);
        assert_eq!(splits(c(&[2], 3)).err(), Some(Error::SingletonSplit));
        for mask in 1u32..64 {
            let s = Coalition::new(mask, a(6)).unwrap();
            if s.size() < 2 {
                continue;
            }
            let parts: Vec<_> = splits(s).unwrap().collect();
            assert_eq!(parts.len(), (1 << (s.size() - 1)) - 1);
            let uniq: HashSet<_> = parts.iter().collect();
            assert_eq!(uniq.len(), parts.len());
            for (p, q) in parts {
                assert_eq!(p.mask() & q.mask(), 0);
                assert_eq!(p.mask() | q.mask(), mask);
            }
        }
    }

    #[test]
    fn merger_counts() {
        let top = CoalitionStructure::singletons(a(3));
        assert_eq!(mergers(&top).unwrap().count(), 3);
        let two = CoalitionStructure::validate(a(4), &[0b0011, 0b1100]).unwrap();
        let children: Vec<_> = mergers(&two).unwrap().collect();
        assert_eq!(children, vec![CoalitionStructure::grand(a(4))]);
        assert_eq!(mergers(&CoalitionStructure::singletons(a(4))).unwrap().count(), 6);
        assert!(mergers(&CoalitionStructure::grand(a(4))).is_err());
    }

    #[test]
    fn split_then_merge_restores_coalition() {
        let n = a(5);
        for cs in enumerate_all(n) {
            for c in cs.coalitions().filter(|c| c.size() >= 2) {
                for (p, q) in splits(c).unwrap() {
                    let mut up: Vec<u32> = cs.masks().iter().copied().filter(|&m| m != c.mask()).collect();
                    up.extend([p.mask(), q.mask()]);
                    let up = CoalitionStructure::validate(n, &up).unwrap();
                    assert!(mergers(&up).unwrap().any(|down| down == cs));
                }
            }
        }
    }

    #[test]
    fn counts() {
        assert_eq!(stirling(3, 2).unwrap(), BigUint::from(3u32));
        for n in 1..=12 {
            assert_eq!(stirling(n, 1).unwrap(), BigUint::one());
            assert_eq!(stirling(n, n).unwrap(), BigUint::one());
        }
        assert_eq!(bell(10).unwrap(), BigUint::from(115_975u32));
        assert_eq!(graph_size(a(25)), 4_638_590_332_229_999_353);
        assert!(stirling(3, 4).is_err());
        assert!(stirling(3, 0).is_err());
        assert!(bell(0).is_err());
    }

    #[test]
    fn chunking() {
        let sizes: Vec<u64> = chunk_ranges(10, 4).iter().map(|r| r.end - r.start).collect();
        assert_eq!(sizes, vec![3, 3, 2, 2]);
        let r = chunk_ranges(8, 4);
        assert_eq!(r, vec![0..2, 2..4, 4..6, 6..8]);
    }
}
