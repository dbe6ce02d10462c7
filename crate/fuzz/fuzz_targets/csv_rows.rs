#![no_main]

use compsketch::data::CsvRows;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(mut rows) = CsvRows::new(data) else { return };
    let d = rows.d();
    while let Some(row) = rows.next() {
        match row {
            Ok(r) => assert!(r.len() == d && r.iter().all(|v| v.is_finite())),
            Err(_) => break,
        }
    }
});
