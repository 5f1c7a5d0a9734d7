#![no_main]

use binmarket::Measure;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(q) = serde_json::from_slice::<Measure>(data) else { return };
    assert!(q.coords().iter().all(|p| (0.0..=1.0).contains(p)));
    let text = serde_json::to_string(&q).expect("measure serializes");
    let back: Measure = serde_json::from_str(&text).expect("serialized measure parses");
    assert_eq!(back.d_infinity(&q).unwrap(), 0.0);
});
