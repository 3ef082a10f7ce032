//! Acceptance criteria 1-12, one report line each.
//!
//! Runs as a plain binary so the lines are always shown; exits nonzero when
//! any criterion fails or exceeds its runtime budget.

use std::process::Command;
use std::time::{Duration, Instant};

use fraclab::verify;

const SEED: u64 = 0;

/// Runtime budget per criterion, in seconds.
const BUDGET: [(u8, u64); 11] =
    [(1, 1), (2, 10), (3, 120), (4, 300), (5, 60), (6, 120), (7, 120), (8, 300), (9, 120), (10, 300), (11, 300)];

fn run_verify_all() -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_frac-lab"))
        .args(["verify", "--suite", "all", "--seed", &SEED.to_string()])
        .output()
        .expect("spawn frac-lab");
    assert!(out.status.code().is_some(), "frac-lab terminated by signal");
    out.stdout
}

fn main() {
    let mut failed = Vec::new();
    for (id, secs) in BUDGET {
        let start = Instant::now();
        let outcome = verify::run_criterion(id, SEED);
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(secs);
        println!("{} | runtime={:.2}s budget={secs}s{}", outcome.line(), elapsed.as_secs_f64(), if in_time { "" } else { " OVER" });
        if !(outcome.passed && in_time) {
            failed.push(id);
        }
    }

    let first = run_verify_all();
    let second = run_verify_all();
    let same = !first.is_empty() && first == second;
    println!(
        "[12] {:<5} determinism | report_bytes={} | byte_identical={}",
        if same { "PASS" } else { "FAIL" },
        first.len(),
        if same { "ok" } else { "FAIL" }
    );
    if !same {
        failed.push(12);
    }

    let total = BUDGET.len() + 1;
    println!("acceptance: {}/{total} passed", total - failed.len());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
