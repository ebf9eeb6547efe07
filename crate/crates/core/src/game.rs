//! Characteristic function games over at most [`MAX_AGENTS`] agents.
//!
//! Coalitions are bitmasks: bit `i - 1` is set when agent `i` is a member.
//! A [`Game`] stores one value per nonempty coalition in a dense table indexed
//! by mask, so a value lookup is a single array access.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest supported agent count. A dense table of `2^25 - 1` doubles is 256 MiB.
pub const MAX_AGENTS: usize = 25;

/// Number of agents in a game, `1 ..= MAX_AGENTS`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentCount(u8);

impl AgentCount {
    pub fn new(agents: usize) -> Result<Self> {
        if agents == 0 || agents > MAX_AGENTS {
            return Err(Error::AgentCount(agents));
        }
        Ok(Self(agents as u8))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0 as usize
    }

    /// Mask of the grand coalition.
    #[inline]
    pub fn full_mask(self) -> u32 {
        (1u32 << self.0) - 1
    }

    /// Number of nonempty coalitions, `2^a - 1`.
    #[inline]
    pub fn coalition_count(self) -> usize {
        self.full_mask() as usize
    }
}

impl fmt::Display for AgentCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A nonempty set of agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coalition(u32);

impl Coalition {
    pub fn new(mask: u32, agents: AgentCount) -> Result<Self> {
        if mask == 0 {
            return Err(Error::EmptyCoalition);
        }
        if mask > agents.full_mask() {
            return Err(Error::MaskOutOfRange { mask, agents: agents.get() });
        }
        Ok(Self(mask))
    }

    /// Builds a coalition from 1-based agent ids.
    pub fn from_members(members: &[usize], agents: AgentCount) -> Result<Self> {
        let mut mask = 0u32;
        for &m in members {
            if m == 0 || m > agents.get() {
                return Err(Error::InvalidParameter(format!("agent {m} outside 1..={agents}")));
            }
            mask |= 1 << (m - 1);
        }
        Self::new(mask, agents)
    }

    #[inline]
    pub(crate) fn new_unchecked(mask: u32) -> Self {
        debug_assert_ne!(mask, 0);
        Self(mask)
    }

    #[inline]
    pub fn mask(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn size(self) -> usize {
        self.0.count_ones() as usize
    }

    /// 1-based member ids, ascending.
    pub fn members(self) -> impl Iterator<Item = usize> {
        let mask = self.0;
        (0..32).filter(move |i| mask >> i & 1 == 1).map(|i| i + 1)
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, m) in self.members().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{m}")?;
        }
        f.write_str("}")
    }
}

/// A normalized characteristic function game: every coalition value is
/// finite and nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    agents: AgentCount,
    // values[mask - 1] = v_S
    values: Vec<f64>,
}

impl Game {
    /// `values[mask - 1]` is the value of the coalition with that mask.
    pub fn new(agents: AgentCount, values: Vec<f64>) -> Result<Self> {
        if values.len() != agents.coalition_count() {
            return Err(Error::TableLength { expected: agents.coalition_count(), found: values.len() });
        }
        for (i, &v) in values.iter().enumerate() {
            let mask = i as u32 + 1;
            if !v.is_finite() {
                return Err(Error::NonFinite { mask });
            }
            if v < 0.0 {
                return Err(Error::Negative { mask, value: v });
            }
        }
        Ok(Self { agents, values })
    }

    pub fn from_fn(agents: AgentCount, mut f: impl FnMut(Coalition) -> f64) -> Result<Self> {
        let values = (1..=agents.full_mask()).map(|m| f(Coalition(m))).collect();
        Self::new(agents, values)
    }

    #[inline]
    pub fn agents(&self) -> AgentCount {
        self.agents
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn coalition_value(&self, s: Coalition) -> Result<f64> {
        self.value_of_mask(s.mask())
    }

    pub fn value_of_mask(&self, mask: u32) -> Result<f64> {
        if mask == 0 || mask > self.agents.full_mask() {
            return Err(Error::MaskOutOfRange { mask, agents: self.agents.get() });
        }
        Ok(self.values[mask as usize - 1])
    }

    /// `V(CS)`: the sum of the member coalition values.
    pub fn structure_value(&self, cs: &CoalitionStructure) -> Result<f64> {
        if cs.agents != self.agents {
            return Err(Error::AgentMismatch { expected: self.agents.get(), found: cs.agents.get() });
        }
        Ok(self.welfare(cs))
    }

    /// Unchecked `V(CS)` for the search inner loops. The structure must have
    /// been built for this game's agent count.
    #[inline]
    pub(crate) fn welfare(&self, cs: &CoalitionStructure) -> f64 {
        self.welfare_of_masks(&cs.coalitions)
    }

    #[inline]
    pub(crate) fn welfare_of_masks(&self, masks: &[u32]) -> f64 {
        masks.iter().map(|&m| self.values[m as usize - 1]).sum()
    }

    /// I.i.d. values uniform on `[0, 1)` from a ChaCha8 stream seeded with `seed`.
    pub fn uniform_random(agents: AgentCount, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..agents.coalition_count()).map(|_| rng.random::<f64>()).collect();
        Self { agents, values }
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// A partition of the agents into disjoint, exhaustive coalitions. Members
/// are kept in ascending mask order so equal partitions compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoalitionStructure {
    agents: AgentCount,
    coalitions: Vec<u32>,
}

impl CoalitionStructure {
    /// Checks that `masks` partition the agents and returns the canonical form.
    pub fn validate(agents: AgentCount, masks: &[u32]) -> Result<Self> {
        let mut seen = 0u32;
        for &mask in masks {
            if mask == 0 {
                return Err(Error::EmptyCoalition);
            }
            if mask > agents.full_mask() {
                return Err(Error::MaskOutOfRange { mask, agents: agents.get() });
            }
            if seen & mask != 0 {
                return Err(Error::Overlap { shared: seen & mask });
            }
            seen |= mask;
        }
        if seen != agents.full_mask() {
            return Err(Error::NonExhaustive { missing: agents.full_mask() & !seen });
        }
        Ok(Self::from_blocks(agents, masks.to_vec()))
    }

    pub fn from_coalitions(agents: AgentCount, coalitions: &[Coalition]) -> Result<Self> {
        let masks: Vec<u32> = coalitions.iter().map(|c| c.mask()).collect();
        Self::validate(agents, &masks)
    }

    /// Trusted constructor for generators that produce valid partitions.
    pub(crate) fn from_blocks(agents: AgentCount, mut coalitions: Vec<u32>) -> Self {
        coalitions.sort_unstable();
        debug_assert_eq!(coalitions.iter().fold(0, |acc, m| acc | m), agents.full_mask());
        Self { agents, coalitions }
    }

    pub fn grand(agents: AgentCount) -> Self {
        Self { agents, coalitions: vec![agents.full_mask()] }
    }

    pub fn singletons(agents: AgentCount) -> Self {
        Self { agents, coalitions: (0..agents.get()).map(|i| 1 << i).collect() }
    }

    pub fn agents(&self) -> AgentCount {
        self.agents
    }

    /// Number of coalitions, which is the structure's level in the graph.
    pub fn level(&self) -> usize {
        self.coalitions.len()
    }

    pub fn masks(&self) -> &[u32] {
        &self.coalitions
    }

    pub fn coalitions(&self) -> impl Iterator<Item = Coalition> + '_ {
        self.coalitions.iter().map(|&m| Coalition(m))
    }

    pub fn contains(&self, mask: u32) -> bool {
        self.coalitions.binary_search(&mask).is_ok()
    }
}

impl fmt::Display for CoalitionStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.coalitions().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// A value table that may still contain negative entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub agents: AgentCount,
    pub values: Vec<f64>,
}

/// Result of [`shift_values`].
#[derive(Debug, Clone, PartialEq)]
pub struct Shifted {
    pub game: Game,
    /// Constant added to every entry; zero when the table was already nonnegative.
    pub offset: f64,
    /// Set whenever `offset > 0`. Adding a constant to every coalition adds
    /// `offset * level` to each structure, which can move the welfare argmax.
    pub warning: bool,
}

/// Normalizes a table to nonnegative values by subtracting its minimum entry
/// when that minimum is negative.
pub fn shift_values(table: ValueTable) -> Result<Shifted> {
    if table.values.len() != table.agents.coalition_count() {
        return Err(Error::TableLength { expected: table.agents.coalition_count(), found: table.values.len() });
    }
    if let Some(i) = table.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { mask: i as u32 + 1 });
    }
    let min = table.values.iter().copied().fold(f64::INFINITY, f64::min);
    if min >= 0.0 {
        return Ok(Shifted { game: Game::new(table.agents, table.values)?, offset: 0.0, warning: false });
    }
    let offset = -min;
    let values = table.values.iter().map(|v| (v + offset).max(0.0)).collect();
    Ok(Shifted { game: Game::new(table.agents, values)?, offset, warning: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: usize) -> AgentCount {
        AgentCount::new(n).unwrap()
    }

    fn singleton_values(n: usize) -> Game {
        Game::from_fn(a(n), |c| if c.size() == 1 { 1.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn agent_count_bounds() {
        assert!(AgentCount::new(0).is_err());
        assert!(AgentCount::new(26).is_err());
        assert_eq!(AgentCount::new(25).unwrap().full_mask(), (1 << 25) - 1);
    }

    #[test]
    fn coalition_lookup() {
        let g = singleton_values(3);
        let one = Coalition::from_members(&[1], a(3)).unwrap();
        let pair = Coalition::from_members(&[1, 2], a(3)).unwrap();
        assert_eq!(g.coalition_value(one).unwrap(), 1.0);
        assert_eq!(g.coalition_value(pair).unwrap(), 0.0);
        assert_eq!(g.value_of_mask(7).unwrap(), *g.values().last().unwrap());
        assert_eq!(g.value_of_mask(8), Err(Error::MaskOutOfRange { mask: 8, agents: 3 }));
        assert_eq!(g.value_of_mask(0), Err(Error::MaskOutOfRange { mask: 0, agents: 3 }));
        assert!(Coalition::new(9, a(3)).is_err());
    }

    #[test]
    fn structure_values() {
        let g = singleton_values(3);
        let all = CoalitionStructure::singletons(a(3));
        assert_eq!(g.structure_value(&all).unwrap(), 3.0);
        let split = CoalitionStructure::validate(a(3), &[0b001, 0b110]).unwrap();
        assert_eq!(g.structure_value(&split).unwrap(), 1.0);
        let grand = CoalitionStructure::grand(a(3));
        assert_eq!(g.structure_value(&grand).unwrap(), g.value_of_mask(7).unwrap());
        let other = CoalitionStructure::grand(a(4));
        assert!(matches!(g.structure_value(&other), Err(Error::AgentMismatch { .. })));
    }

    #[test]
    fn validation_errors() {
        let cs = CoalitionStructure::validate(a(3), &[0b100, 0b001, 0b010]).unwrap();
        assert_eq!(cs.level(), 3);
        assert_eq!(cs.masks(), &[1, 2, 4]);
        assert_eq!(CoalitionStructure::validate(a(3), &[0b011, 0b110]), Err(Error::Overlap { shared: 0b010 }));
        assert_eq!(CoalitionStructure::validate(a(4), &[0b011, 0b100]), Err(Error::NonExhaustive { missing: 0b1000 }));
        assert_eq!(CoalitionStructure::validate(a(2), &[0, 3]), Err(Error::EmptyCoalition));
        assert!(matches!(CoalitionStructure::validate(a(2), &[1, 2, 4]), Err(Error::MaskOutOfRange { mask: 4, .. })));
    }

    #[test]
    fn display_uses_pipes() {
        let cs = CoalitionStructure::validate(a(4), &[0b1000, 0b0011, 0b0100]).unwrap();
        assert_eq!(cs.to_string(), "{1,2}|{3}|{4}");
    }

    #[test]
    fn game_rejects_bad_tables() {
        assert!(matches!(Game::new(a(2), vec![1.0]), Err(Error::TableLength { .. })));
        assert_eq!(Game::new(a(2), vec![1.0, f64::NAN, 0.0]), Err(Error::NonFinite { mask: 2 }));
        assert!(matches!(Game::new(a(2), vec![1.0, -1.0, 0.0]), Err(Error::Negative { .. })));
    }

    #[test]
    fn shift_identity_when_nonnegative() {
        let t = ValueTable { agents: a(2), values: vec![0.0, 2.0, 1.0] };
        let s = shift_values(t.clone()).unwrap();
        assert!(!s.warning);
        assert_eq!(s.offset, 0.0);
        assert_eq!(s.game.values(), &t.values[..]);
    }

    #[test]
    fn shift_adds_min() {
        let t = ValueTable { agents: a(2), values: vec![-2.0, 0.5, 3.0] };
        let s = shift_values(t).unwrap();
        assert!(s.warning);
        assert_eq!(s.offset, 2.0);
        assert_eq!(s.game.values(), &[0.0, 2.5, 5.0]);
        let bad = ValueTable { agents: a(2), values: vec![-2.0, f64::INFINITY, 3.0] };
        assert_eq!(shift_values(bad), Err(Error::NonFinite { mask: 2 }));
    }

    // Hand enumeration of the five 3-agent structures, independent of the
    // partition module.
    fn argmax_3(values: &[f64]) -> Vec<u32> {
        let structures: [&[u32]; 5] = [&[7], &[1, 6], &[2, 5], &[3, 4], &[1, 2, 4]];
        let mut best = (f64::NEG_INFINITY, structures[0]);
        for s in structures {
            let v: f64 = s.iter().map(|&m| values[m as usize - 1]).sum();
            if v > best.0 {
                best = (v, s);
            }
        }
        best.1.to_vec()
    }

    #[test]
    fn shift_can_move_the_argmax() {
        // singletons -1, pairs -1, grand -2.5: before shift {1}|{2,3} wins
        // with -2; after +2.5 the singleton partition wins with 4.5.
        let raw = vec![-1.0, -1.0, -1.0, -1.0, -1.0, -1.0, -2.5];
        let before = argmax_3(&raw);
        let shifted = shift_values(ValueTable { agents: a(3), values: raw }).unwrap();
        let after = argmax_3(shifted.game.values());
        assert_eq!(before, vec![1, 6]);
        assert_eq!(after, vec![1, 2, 4]);
        assert!(shifted.warning);
    }
}
