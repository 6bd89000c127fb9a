//! Runs every acceptance criterion at its stated size and tolerance and
//! prints one PASS/FAIL line per criterion.

use std::io::Write;

use bohrlab_core::suite::{run_criterion, CRITERIA};
use bohrlab_core::RunConfig;

#[test]
fn acceptance_criteria() {
    let cfg = RunConfig::default();
    let mut failed = Vec::new();
    for (id, _, _) in CRITERIA {
        let r = run_criterion(id, &cfg, true);
        // written to the raw handle so the lines show without --nocapture
        let _ = writeln!(
            std::io::stderr(),
            "acceptance {:>2} {:<30} {} {:>7.2}s  {}",
            r.id,
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.seconds.unwrap_or(0.0),
            r.detail
        );
        if !r.passed {
            failed.push(r.id);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
