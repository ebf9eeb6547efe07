#![no_main]

use csg_core::io::parse_structure;
use csg_core::AgentCount;
use libfuzzer_sys::fuzz_target;

// First byte picks the agent count, the rest is the structure text.
fuzz_target!(|data: &[u8]| {
    let Some((&n, rest)) = data.split_first() else { return };
    let Ok(agents) = AgentCount::new(usize::from(n % 25) + 1) else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    if let Ok(cs) = parse_structure(text, agents) {
        assert_eq!(cs.masks().iter().fold(0, |acc, m| acc | m), agents.full_mask());
        assert_eq!(parse_structure(&cs.to_string(), agents).unwrap(), cs);
    }
});
