//! Searches over the coalition structure graph.
//!
//! Every algorithm is a fixed visit plan: an ordered list of node segments,
//! each tagged with the phase it completes and the bound that holds once it is
//! done. The runner walks the plan under a node budget, keeps only the
//! incumbent and a counter, and emits a [`Checkpoint`] after each segment and
//! when the budget runs out.
//!
//! Ties on value never replace the incumbent, so the first structure reached
//! in plan order wins. Segments can be scanned by several threads; the chunk
//! reduction breaks ties by position, which keeps traces identical for any
//! thread count.

use std::fmt;

use rayon::prelude::*;

use crate::bounds::bound_after_level;
use crate::error::{Error, Result};
use crate::game::{CoalitionStructure, Game};
use crate::partition::{self, bottom_two_count, enumerate_all, enumerate_level, level_size};

/// Node budget; `None` means unlimited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Budget {
    max_nodes: Option<u64>,
}

impl Budget {
    pub fn unlimited() -> Self {
        Self { max_nodes: None }
    }

    pub fn nodes(max_nodes: u64) -> Result<Self> {
        if max_nodes == 0 {
            return Err(Error::InvalidParameter("budget must be at least one node".into()));
        }
        Ok(Self { max_nodes: Some(max_nodes) })
    }

    pub fn max_nodes(self) -> Option<u64> {
        self.max_nodes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    PreBound,
    BottomTwoComplete,
    /// A whole level has been searched; level `a` is the top node.
    LevelComplete(usize),
    Exhausted,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::PreBound => f.write_str("pre-bound"),
            Phase::BottomTwoComplete => f.write_str("bottom-two-complete"),
            Phase::LevelComplete(l) => write!(f, "level-{l}-complete"),
            Phase::Exhausted => f.write_str("exhausted"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Nodes visited so far.
    pub n: u64,
    pub best_value: f64,
    pub best_cs: CoalitionStructure,
    /// `k` with `V(CS*) <= k * best_value`, once one can be guaranteed.
    pub bound: Option<u64>,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnytimeResult {
    pub checkpoints: Vec<Checkpoint>,
}

impl AnytimeResult {
    pub fn last(&self) -> &Checkpoint {
        self.checkpoints.last().expect("a run visits at least one node")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Whole graph, levels 1 upward.
    Exhaustive,
    /// Grand coalition and level 2 only.
    BottomTwo,
    /// Bottom two levels, then breadth-first from the top down to level 3.
    Css1,
    /// Breadth-first from the bottom.
    Splitting,
    /// Breadth-first from the top.
    Merging,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] =
        [Algorithm::Exhaustive, Algorithm::BottomTwo, Algorithm::Css1, Algorithm::Splitting, Algorithm::Merging];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Exhaustive => "exhaustive",
            Algorithm::BottomTwo => "bottom-two",
            Algorithm::Css1 => "css1",
            Algorithm::Splitting => "splitting",
            Algorithm::Merging => "merging",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    pub budget: Budget,
    /// Worker threads; 0 and 1 both scan sequentially.
    pub threads: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { budget: Budget::unlimited(), threads: 1 }
    }
}

impl SearchConfig {
    pub fn with_budget(budget: Budget) -> Self {
        Self { budget, ..Self::default() }
    }
}

/// Largest agent count for which the exhaustive search runs at all.
pub const EXHAUSTIVE_MAX_AGENTS: usize = 18;

struct Segment {
    nodes: Box<dyn Iterator<Item = CoalitionStructure> + Send>,
    len: u64,
    phase: Phase,
    bound: Option<u64>,
}

fn level_segment(game: &Game, l: usize, phase: Phase, bound: Option<u64>) -> Result<Segment> {
    let a = game.agents();
    Ok(Segment { nodes: Box::new(enumerate_level(a, l)?), len: level_size(a, l)?, phase, bound })
}

fn bottom_segment(game: &Game, total: u64) -> Segment {
    let a = game.agents();
    let len = bottom_two_count(a);
    let (phase, bound) =
        if len == total { (Phase::Exhausted, Some(1)) } else { (Phase::BottomTwoComplete, Some(a.get() as u64)) };
    Segment { nodes: Box::new(partition::bottom_two(a)), len, phase, bound }
}

fn plan(game: &Game, algorithm: Algorithm) -> Result<Vec<Segment>> {
    let a = game.agents();
    let n_agents = a.get();
    if n_agents < 2 && algorithm != Algorithm::Exhaustive {
        return Err(Error::InvalidParameter(format!("{} needs at least 2 agents", algorithm.name())));
    }
    let total = partition::graph_size(a);
    let mut segs = Vec::new();
    match algorithm {
        Algorithm::Exhaustive => {
            if n_agents > EXHAUSTIVE_MAX_AGENTS {
                return Err(Error::Refused {
                    what: "exhaustive search",
                    agents: n_agents,
                    limit: EXHAUSTIVE_MAX_AGENTS,
                });
            }
            segs.push(Segment {
                nodes: Box::new(enumerate_all(a)),
                len: total,
                phase: Phase::Exhausted,
                bound: Some(1),
            });
        }
        Algorithm::BottomTwo => segs.push(bottom_segment(game, total)),
        Algorithm::Css1 => {
            segs.push(bottom_segment(game, total));
            let mut n = bottom_two_count(a);
            for l in (3..=n_agents).rev() {
                n += level_size(a, l)?;
                let seg = if n == total {
                    level_segment(game, l, Phase::Exhausted, Some(1))?
                } else {
                    level_segment(game, l, Phase::LevelComplete(l), Some(bound_after_level(n_agents, l)?))?
                };
                segs.push(seg);
            }
        }
        Algorithm::Splitting => {
            segs.push(bottom_segment(game, total));
            for l in 3..=n_agents {
                let seg = if l == n_agents {
                    level_segment(game, l, Phase::Exhausted, Some(1))?
                } else {
                    level_segment(game, l, Phase::LevelComplete(l), Some(n_agents as u64))?
                };
                segs.push(seg);
            }
        }
        Algorithm::Merging => {
            for l in (1..=n_agents).rev() {
                let seg = if l == 1 {
                    level_segment(game, l, Phase::Exhausted, Some(1))?
                } else {
                    level_segment(game, l, Phase::LevelComplete(l), None)?
                };
                segs.push(seg);
            }
        }
    }
    Ok(segs)
}

const CHUNK: usize = 1 << 14;

type Best = Option<(f64, CoalitionStructure)>;

fn offer(best: &mut Best, value: f64, cs: CoalitionStructure) {
    if best.as_ref().is_none_or(|(v, _)| value > *v) {
        *best = Some((value, cs));
    }
}

fn scan_sequential(game: &Game, nodes: impl Iterator<Item = CoalitionStructure>, best: &mut Best) -> u64 {
    let mut count = 0;
    for cs in nodes {
        count += 1;
        let v = game.welfare(&cs);
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            *best = Some((v, cs));
        }
    }
    count
}

fn scan_parallel(
    game: &Game,
    mut nodes: impl Iterator<Item = CoalitionStructure>,
    best: &mut Best,
    pool: &rayon::ThreadPool,
) -> u64 {
    let mut count = 0;
    let mut buf: Vec<CoalitionStructure> = Vec::with_capacity(CHUNK);
    loop {
        buf.clear();
        buf.extend(nodes.by_ref().take(CHUNK));
        if buf.is_empty() {
            return count;
        }
        count += buf.len() as u64;
        let top = pool.install(|| {
            buf.par_iter().enumerate().map(|(i, cs)| (game.welfare(cs), i)).reduce_with(|x, y| {
                if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) {
                    y
                } else {
                    x
                }
            })
        });
        if let Some((v, i)) = top {
            offer(best, v, buf.swap_remove(i));
        }
    }
}

/// Runs `algorithm` on `game` and returns its checkpoint trace.
pub fn run(game: &Game, algorithm: Algorithm, config: &SearchConfig) -> Result<AnytimeResult> {
    let segments = plan(game, algorithm)?;
    let pool = if config.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.threads)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };
    let budget = config.budget.max_nodes();
    let mut n = 0u64;
    let mut best: Best = None;
    let mut phase = Phase::PreBound;
    let mut bound = None;
    let mut checkpoints: Vec<Checkpoint> = Vec::new();
    let mut push = |n: u64, best: &Best, phase: Phase, bound: Option<u64>| {
        let (v, cs) = best.as_ref().expect("checkpoint after at least one node");
        checkpoints.push(Checkpoint { n, best_value: *v, best_cs: cs.clone(), bound, phase });
    };
    for seg in segments {
        let limit = match budget {
            Some(b) if b <= n => break,
            Some(b) => seg.len.min(b - n),
            None => seg.len,
        };
        let nodes = seg.nodes.take(limit as usize);
        let count = match &pool {
            Some(p) => scan_parallel(game, nodes, &mut best, p),
            None => scan_sequential(game, nodes, &mut best),
        };
        debug_assert_eq!(count, limit);
        n += count;
        if count == seg.len {
            phase = seg.phase;
            bound = seg.bound;
            push(n, &best, phase, bound);
        } else {
            push(n, &best, phase, bound);
            break;
        }
    }
    Ok(AnytimeResult { checkpoints })
}

/// A welfare-maximizing structure and its value, first in enumeration order
/// among ties.
pub fn exhaustive_search(game: &Game) -> Result<(CoalitionStructure, f64)> {
    let r = run(game, Algorithm::Exhaustive, &SearchConfig::default())?;
    let last = r.last();
    Ok((last.best_cs.clone(), last.best_value))
}

pub fn search_bottom_two(game: &Game) -> Result<AnytimeResult> {
    run(game, Algorithm::BottomTwo, &SearchConfig::default())
}

pub fn css1(game: &Game, budget: Budget) -> Result<AnytimeResult> {
    run(game, Algorithm::Css1, &SearchConfig::with_budget(budget))
}

pub fn splitting_search(game: &Game, budget: Budget) -> Result<AnytimeResult> {
    run(game, Algorithm::Splitting, &SearchConfig::with_budget(budget))
}

pub fn merging_search(game: &Game, budget: Budget) -> Result<AnytimeResult> {
    run(game, Algorithm::Merging, &SearchConfig::with_budget(budget))
}

/// `V(CS*) / best`, with `best = 0` reported as infinity.
pub fn realized_ratio(optimum: f64, best: f64) -> f64 {
    if best == 0.0 {
        if optimum == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        optimum / best
    }
}
