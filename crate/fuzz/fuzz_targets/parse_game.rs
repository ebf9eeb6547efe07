#![no_main]

use csg_core::io::{parse_game, parse_game_raw, write_game};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(game) = parse_game(text) {
        assert_eq!(parse_game(&write_game(&game)).unwrap(), game);
    }
    if let Ok(raw) = parse_game_raw(text) {
        if let Ok(shifted) = raw.into_shifted() {
            assert!(shifted.game.values().iter().all(|v| *v >= 0.0));
        }
    }
});
