use proptest::prelude::*;

use csg_core::io::{parse_game, parse_structure, write_game};
use csg_core::partition::{enumerate_level, level_size, mergers, splits};
use csg_core::search::{css1, exhaustive_search, merging_search, splitting_search, Budget};
use csg_core::{AgentCount, Coalition, CoalitionStructure, Game};

fn agents(n: usize) -> AgentCount {
    AgentCount::new(n).unwrap()
}

/// A random partition of `a` agents: each agent picks a block label.
fn structure(a: usize) -> impl Strategy<Value = CoalitionStructure> {
    prop::collection::vec(0..a, a).prop_map(move |labels| {
        let mut blocks = vec![0u32; a];
        for (i, &b) in labels.iter().enumerate() {
            blocks[b] |= 1 << i;
        }
        let masks: Vec<u32> = blocks.into_iter().filter(|&m| m != 0).collect();
        CoalitionStructure::validate(agents(a), &masks).unwrap()
    })
}

fn game(a: usize) -> impl Strategy<Value = Game> {
    prop::collection::vec(0.0..10.0f64, (1usize << a) - 1).prop_map(move |v| Game::new(agents(a), v).unwrap())
}

fn game_and_structure() -> impl Strategy<Value = (Game, CoalitionStructure)> {
    (1usize..=7).prop_flat_map(|a| (game(a), structure(a)))
}

proptest! {
    #[test]
    fn structure_value_within_level_times_max((g, cs) in game_and_structure()) {
        let v = g.structure_value(&cs).unwrap();
        prop_assert!(v >= 0.0);
        prop_assert!(v <= cs.level() as f64 * g.max_value() + 1e-9);
    }

    #[test]
    fn validation_is_idempotent((_, cs) in game_and_structure()) {
        let again = CoalitionStructure::validate(cs.agents(), cs.masks()).unwrap();
        prop_assert_eq!(&again, &cs);
        prop_assert_eq!(parse_structure(&cs.to_string(), cs.agents()).unwrap(), cs);
    }

    #[test]
    fn permuted_input_gives_same_structure((_, cs) in game_and_structure(), seed in any::<u64>()) {
        let mut masks = cs.masks().to_vec();
        let n = masks.len();
        if n > 1 {
            masks.rotate_left(seed as usize % n);
        }
        prop_assert_eq!(CoalitionStructure::validate(cs.agents(), &masks).unwrap(), cs);
    }

    #[test]
    fn game_files_round_trip(g in (1usize..=6).prop_flat_map(game)) {
        prop_assert_eq!(parse_game(&write_game(&g)).unwrap(), g);
    }

    #[test]
    fn bounds_are_sound(a in 3usize..=7, seed in any::<u64>(), budget in 1u64..1000) {
        let g = Game::uniform_random(agents(a), seed);
        let (_, opt) = exhaustive_search(&g).unwrap();
        let b = Budget::nodes(budget).unwrap();
        for trace in [css1(&g, b).unwrap(), splitting_search(&g, b).unwrap(), merging_search(&g, b).unwrap()] {
            let mut prev = f64::NEG_INFINITY;
            let mut prev_n = 0;
            for c in &trace.checkpoints {
                prop_assert!(c.best_value >= prev);
                prop_assert!(c.n >= prev_n && c.n <= budget);
                prop_assert_eq!(g.structure_value(&c.best_cs).unwrap(), c.best_value);
                if let Some(k) = c.bound {
                    prop_assert!(opt <= k as f64 * c.best_value + 1e-9);
                }
                prev = c.best_value;
                prev_n = c.n;
            }
        }
    }

    #[test]
    fn css1_bound_never_increases(a in 3usize..=8, seed in any::<u64>()) {
        let g = Game::uniform_random(agents(a), seed);
        let trace = css1(&g, Budget::unlimited()).unwrap();
        let bounds: Vec<u64> = trace.checkpoints.iter().filter_map(|c| c.bound).collect();
        prop_assert!(bounds.windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(bounds.last().copied(), Some(1));
    }

    #[test]
    fn splits_and_mergers_change_level_by_one((_, cs) in game_and_structure()) {
        let a = cs.agents();
        for m in mergers(&cs).into_iter().flatten() {
            prop_assert_eq!(m.level() + 1, cs.level());
        }
        for c in cs.coalitions().filter(|c| c.size() > 1) {
            let count = splits(c).unwrap().count();
            prop_assert_eq!(count, (1usize << (c.size() - 1)) - 1);
            for (p, q) in splits(c).unwrap() {
                prop_assert_eq!(p.mask() | q.mask(), c.mask());
                prop_assert_eq!(p.mask() & q.mask(), 0);
            }
        }
        prop_assert!(Coalition::new(a.full_mask(), a).is_ok());
    }
}

#[test]
fn levels_are_distinct_and_canonical() {
    for a in 1..=7 {
        for l in 1..=a {
            let all: Vec<CoalitionStructure> = enumerate_level(agents(a), l).unwrap().collect();
            assert_eq!(all.len() as u64, level_size(agents(a), l).unwrap());
            let mut sorted = all.clone();
            sorted.sort_by(|x, y| x.masks().cmp(y.masks()));
            sorted.dedup();
            assert_eq!(sorted.len(), all.len());
            assert!(all.iter().all(|cs| cs.level() == l));
        }
    }
}
