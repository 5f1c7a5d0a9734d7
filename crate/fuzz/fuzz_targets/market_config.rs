#![no_main]

use binmarket::MarketConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(config) = MarketConfig::from_json(text) else { return };
    let again = MarketConfig::from_json(&config.to_json()).expect("serialized config parses");
    assert_eq!(again.horizon(), config.horizon());
    if let Ok(tree) = config.to_tree() {
        assert_eq!(tree.horizon(), config.horizon());
        assert!(tree.validate().is_empty());
    }
});
