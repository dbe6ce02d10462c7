#![no_main]

use compsketch::sketch::{deserialize_json, serialize_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(sketch) = deserialize_json(text) {
        let again = deserialize_json(&serialize_json(&sketch)).expect("re-encoded sketch parses");
        assert_eq!(again.fingerprint(), sketch.fingerprint());
        assert_eq!(again.n(), sketch.n());
    }
});
