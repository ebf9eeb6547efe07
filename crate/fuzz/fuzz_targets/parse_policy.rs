#![no_main]

use csg_core::io::{parse_audit_policy, parse_policy, parse_strategy};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_strategy(text);
    let _ = parse_policy(text);
    if let Ok(audit) = parse_audit_policy(text) {
        assert!((0.0..=1.0).contains(&audit.probability()));
    }
});
