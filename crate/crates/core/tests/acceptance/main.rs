//! End-to-end quality checks. Each check prints one PASS/FAIL line; the
//! process exits nonzero if any check fails. Select a subset with
//! `cargo test --test acceptance -- 5 7`.

use std::time::{Duration, Instant};

mod checks;

type Outcome = Result<String, String>;

struct Check {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let checks: Vec<Check> = checks::all()
        .into_iter()
        .filter(|c| selected.is_empty() || selected.contains(&c.id))
        .collect();
    let results: Vec<(u32, &str, bool, String)> = std::thread::scope(|scope| {
        let handles: Vec<_> = checks
            .iter()
            .map(|c| {
                scope.spawn(move || {
                    let start = Instant::now();
                    let outcome = std::panic::catch_unwind(c.run).unwrap_or_else(|e| {
                        let msg = e
                            .downcast_ref::<String>()
                            .cloned()
                            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                            .unwrap_or_default();
                        Err(format!("panicked: {msg}"))
                    });
                    let elapsed = start.elapsed();
                    let (ok, detail) = match outcome {
                        Ok(d) if elapsed <= c.budget => (true, d),
                        Ok(d) => (false, format!("{d}; over time budget of {:?}", c.budget)),
                        Err(d) => (false, d),
                    };
                    (c.id, c.name, ok, format!("{detail} [{:.1}s]", elapsed.as_secs_f64()))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("check thread")).collect()
    });
    let mut failed = 0;
    for (id, name, ok, detail) in &results {
        println!("[{id:02}] {name}: {} {detail}", if *ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    }
    println!("{} of {} checks passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
