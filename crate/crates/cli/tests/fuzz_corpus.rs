//! Replays the checked-in fuzz corpus through the same entry points and
//! invariants as the fuzz targets, so they run on stable toolchains too.

use std::path::PathBuf;

use compsketch::data::CsvRows;
use compsketch::sketch::{deserialize, deserialize_json, serialize, serialize_json};
use compsketch_cli::config::{Config, Resolver};
use compsketch_cli::files::parse_model;

fn corpus(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty(), "empty corpus for {target}");
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

/// Every prefix and every single-byte flip of each seed.
fn variants(seed: &[u8]) -> impl Iterator<Item = Vec<u8>> + '_ {
    let prefixes = (0..=seed.len()).map(|n| seed[..n].to_vec());
    let flips = (0..seed.len()).flat_map(move |i| {
        [0x01u8, 0x80, 0xFF].into_iter().map(move |mask| {
            let mut v = seed.to_vec();
            v[i] ^= mask;
            v
        })
    });
    prefixes.chain(flips)
}

#[test]
fn binary_sketch_seeds() {
    for (name, seed) in corpus("sketch_binary") {
        assert!(deserialize(&seed).is_ok(), "{name} should decode");
        for v in variants(&seed) {
            if let Ok(s) = deserialize(&v) {
                assert_eq!(serialize(&s), v, "{name}: accepted input must re-encode identically");
            }
        }
    }
}

#[test]
fn json_sketch_seeds() {
    for (name, seed) in corpus("sketch_json") {
        let text = String::from_utf8(seed.clone()).unwrap();
        let s = deserialize_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(deserialize_json(&serialize_json(&s)).unwrap(), s);
        for v in variants(&seed).step_by(7) {
            if let Ok(text) = std::str::from_utf8(&v) {
                if let Ok(s) = deserialize_json(text) {
                    assert_eq!(deserialize_json(&serialize_json(&s)).unwrap().fingerprint(), s.fingerprint());
                }
            }
        }
    }
}

#[test]
fn csv_seeds() {
    for (_, seed) in corpus("csv_rows") {
        for v in variants(&seed) {
            let Ok(mut rows) = CsvRows::new(v.as_slice()) else { continue };
            let d = rows.d();
            while let Some(row) = rows.next() {
                match row {
                    Ok(r) => assert!(r.len() == d && r.iter().all(|x| x.is_finite())),
                    Err(_) => break,
                }
            }
        }
    }
}

#[test]
fn config_seeds() {
    for (_, seed) in corpus("config") {
        for v in variants(&seed) {
            let Ok(text) = std::str::from_utf8(&v) else { continue };
            let Ok(config) = Config::parse(text) else { continue };
            let mut r = Resolver::new(Config::default());
            for (k, val) in config.entries() {
                r.record(k, val);
            }
            assert_eq!(Config::parse(&r.to_config_text()).unwrap(), config);
        }
    }
}

#[test]
fn model_seeds() {
    for (name, seed) in corpus("model_json") {
        let text = String::from_utf8(seed.clone()).unwrap();
        assert!(parse_model(&text).is_ok(), "{name} should parse");
        for v in variants(&seed).step_by(5) {
            let Ok(text) = std::str::from_utf8(&v) else { continue };
            if let Ok(doc) = parse_model(text) {
                assert!(parse_model(&serde_json::to_string(&doc).unwrap()).is_ok());
            }
        }
    }
}
