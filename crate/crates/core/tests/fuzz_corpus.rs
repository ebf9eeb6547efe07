//! Replays the checked-in fuzz corpus through the parsers with the same
//! properties the fuzz targets assert.

use std::fs;
use std::path::PathBuf;

use csg_core::io::{
    parse_audit_policy, parse_game, parse_game_raw, parse_generator, parse_policy, parse_strategy, parse_structure,
    write_game,
};
use csg_core::AgentCount;

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<PathBuf> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert!(!files.is_empty(), "no seeds in {}", dir.display());
    files.iter().map(|f| fs::read(f).unwrap()).collect()
}

#[test]
fn game_seeds() {
    let mut parsed = 0;
    for data in seeds("parse_game") {
        let Ok(text) = std::str::from_utf8(&data) else { continue };
        if let Ok(game) = parse_game(text) {
            assert_eq!(parse_game(&write_game(&game)).unwrap(), game);
            parsed += 1;
        }
        if let Ok(raw) = parse_game_raw(text) {
            if let Ok(shifted) = raw.into_shifted() {
                assert!(shifted.game.values().iter().all(|v| *v >= 0.0));
            }
        }
    }
    assert!(parsed >= 3);
}

#[test]
fn structure_seeds() {
    let mut parsed = 0;
    for data in seeds("parse_structure") {
        let (&n, rest) = data.split_first().unwrap();
        let agents = AgentCount::new(usize::from(n % 25) + 1).unwrap();
        let Ok(text) = std::str::from_utf8(rest) else { continue };
        if let Ok(cs) = parse_structure(text, agents) {
            assert_eq!(cs.masks().iter().fold(0, |acc, m| acc | m), agents.full_mask());
            assert_eq!(parse_structure(&cs.to_string(), agents).unwrap(), cs);
            parsed += 1;
        }
    }
    assert!(parsed >= 3);
}

#[test]
fn generator_seeds() {
    for data in seeds("parse_generator") {
        let (&n, rest) = data.split_first().unwrap();
        let Ok(text) = std::str::from_utf8(rest) else { continue };
        if let Ok(generator) = parse_generator(text) {
            let agents = AgentCount::new(usize::from(n % 10) + 1).unwrap();
            if let Ok(game) = generator.build(agents) {
                assert_eq!(game.values().len(), agents.coalition_count());
            }
        }
    }
}

#[test]
fn policy_seeds() {
    for data in seeds("parse_policy") {
        let Ok(text) = std::str::from_utf8(&data) else { continue };
        let _ = parse_strategy(text);
        let _ = parse_policy(text);
        if let Ok(audit) = parse_audit_policy(text) {
            assert!((0.0..=1.0).contains(&audit.probability()));
        }
    }
}
