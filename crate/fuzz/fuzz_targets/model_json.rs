#![no_main]

use compsketch_cli::files::parse_model;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(doc) = parse_model(text) {
        let again = serde_json::to_string(&doc).unwrap();
        assert!(parse_model(&again).is_ok());
    }
});
