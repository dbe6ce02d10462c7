#![no_main]

use compsketch::sketch::{deserialize, serialize};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(sketch) = deserialize(data) {
        // Anything accepted must re-encode to the same bytes.
        assert_eq!(serialize(&sketch), data);
    }
});
