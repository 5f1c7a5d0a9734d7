#![no_main]

use binmarket::SweepRange;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(range) = text.parse::<SweepRange>() else { return };
    assert!(range.values().iter().all(|l| (0.0..1.0).contains(l)));
});
