//! Runs every acceptance criterion and formats one line per criterion.
//!
//! Kept in its own package so that its test target runs after the unit and
//! integration tests of the other crates.

use rmtlab::verify::{determinism_check, run_verify, CriterionOutcome, Profile};
use rmtlab::Result;

/// Worker counts compared by the determinism criterion.
pub const DETERMINISM_WORKERS: [usize; 2] = [1, 8];

/// Full profile with `workers` threads, then the determinism comparison.
pub fn run_all(workers: usize) -> Result<Vec<CriterionOutcome>> {
    let mut report = run_verify(Profile::Full, workers, None)?;
    let c17 = determinism_check(&DETERMINISM_WORKERS, None)?;
    if let Some(slot) = report.criteria.iter_mut().find(|c| c.id == c17.id) {
        *slot = c17;
    }
    Ok(report.criteria)
}

pub fn format_line(c: &CriterionOutcome) -> String {
    let verdict = if c.pass { "pass" } else { "FAIL" };
    format!(
        "criterion {:>2} {verdict}  {}  [{}]",
        c.id, c.title, c.detail
    )
}
