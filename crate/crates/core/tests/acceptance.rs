//! Reproduction gate: one line per criterion, then a single verdict.

use std::io::Write;
use std::time::{Duration, Instant};

use ks_core::experiments;

const BUDGETS_S: [u64; 9] = [30, 10, 1, 5, 60, 120, 600, 1, 120];

#[test]
fn acceptance_suite() {
    let mut failures = Vec::new();
    let _ = writeln!(std::io::stdout());
    for (id, budget) in experiments::ALL.iter().zip(BUDGETS_S) {
        let start = Instant::now();
        let line = match experiments::run(id) {
            Ok(outcome) => {
                let elapsed = start.elapsed();
                let in_budget = elapsed <= Duration::from_secs(budget);
                if !outcome.passed || !in_budget {
                    failures.push(id.to_string());
                }
                let budget_note = if in_budget { "" } else { " [over time budget]" };
                format!("{} ({:.2}s of {budget}s){budget_note}", outcome.line(), elapsed.as_secs_f64())
            }
            Err(e) => {
                failures.push(id.to_string());
                format!("{} FAIL  error: {e}", id.to_uppercase())
            }
        };
        // Straight to the process stdout so the lines survive the harness capture.
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "{line}");
        let _ = out.flush();
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
