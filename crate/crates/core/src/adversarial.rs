//! Games that make the worst-case bounds hold with equality.

use crate::bounds::{bound_after_level, h_value};
use crate::error::{Error, Result};
use crate::game::{AgentCount, Game};
use crate::partition::{self, bottom_two_count, level_size};

/// `v_S = 1` for singletons, 0 otherwise. Optimal welfare is `a` (all
/// singletons) while every bottom-two node is worth at most 1.
pub fn singleton_game(a: AgentCount) -> Game {
    Game::from_fn(a, |c| if c.size() == 1 { 1.0 } else { 0.0 }).expect("0/1 table is a valid game")
}

/// The bad case for the bottom-up search: after completing level `l` it has
/// seen at most `l - 1` singletons together.
pub fn splitting_adversary(a: AgentCount) -> Game {
    singleton_game(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessKind {
    Singleton,
    LevelTight(usize),
}

/// Which construction produced a level-tight witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessCase {
    /// `floor(a/h)` coalitions of size `h` and one of size `h - 1`, all valued 1.
    Ceil,
    /// `floor(a/h)` coalitions of size `h` valued 1, any remainder valued 0.
    Floor,
    /// `a = 2h`: the two halves would sit together on level 2, so one of them
    /// gives up an agent to a zero-valued singleton.
    EvenSplit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelTight {
    pub game: Game,
    /// Ratio the bottom-two-then-top-down search realizes on `game` right
    /// after completing level `l`.
    pub expected_ratio: u64,
    pub case: WitnessCase,
    /// Coalitions valued 1, pairwise disjoint, agents packed in ascending order.
    pub designated: Vec<u32>,
    /// Agents left over, in one zero-valued coalition.
    pub remainder: Option<u32>,
}

fn block(start: usize, len: usize) -> u32 {
    ((1u32 << len) - 1) << start
}

/// Witness for the bound after the top-down sweep completes level `l`.
pub fn level_tight_game(a: AgentCount, l: usize) -> Result<LevelTight> {
    let n = a.get();
    if l < 3 || l > n {
        return Err(Error::LevelOutOfRange { level: l, agents: n });
    }
    let h = h_value(n, l)? as usize;
    let q = n / h;
    let ceil = n % h == h - 1 && (n - l).is_multiple_of(2);

    let mut designated: Vec<u32> = (0..q).map(|i| block(i * h, h)).collect();
    let mut used = q * h;
    let case = if ceil {
        designated.push(block(used, h - 1));
        used += h - 1;
        WitnessCase::Ceil
    } else if q == 2 && used == n && l > 3 {
        designated[1] = block(h, h - 1);
        used -= 1;
        WitnessCase::EvenSplit
    } else {
        WitnessCase::Floor
    };
    let remainder = (used < n).then(|| block(used, n - used));

    let game = Game::from_fn(a, |c| if designated.contains(&c.mask()) { 1.0 } else { 0.0 })?;

    let seen: u64 = bottom_two_count(a) + (l..=n).map(|j| level_size(a, j)).sum::<Result<u64>>()?;
    let expected_ratio = if seen == partition::graph_size(a) { 1 } else { bound_after_level(n, l)? };
    Ok(LevelTight { game, expected_ratio, case, designated, remainder })
}

pub fn witness(kind: WitnessKind, a: AgentCount) -> Result<Game> {
    match kind {
        WitnessKind::Singleton => Ok(singleton_game(a)),
        WitnessKind::LevelTight(l) => level_tight_game(a, l).map(|w| w.game),
    }
}
