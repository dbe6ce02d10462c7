#![no_main]

use compsketch_cli::config::{Config, Resolver};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(config) = Config::parse(text) else { return };
    // Resolved settings re-serialize to an equivalent file.
    let mut r = Resolver::new(Config::default());
    for (k, v) in config.entries() {
        r.record(k, v);
    }
    assert_eq!(Config::parse(&r.to_config_text()).ok().as_ref(), Some(&config));
});
