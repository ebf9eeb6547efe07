#![no_main]

use csg_core::io::parse_generator;
use csg_core::AgentCount;
use libfuzzer_sys::fuzz_target;

// First byte picks a small agent count so building stays cheap.
fuzz_target!(|data: &[u8]| {
    let Some((&n, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    if let Ok(generator) = parse_generator(text) {
        let agents = AgentCount::new(usize::from(n % 10) + 1).unwrap();
        if let Ok(game) = generator.build(agents) {
            assert_eq!(game.values().len(), agents.coalition_count());
        }
    }
});
