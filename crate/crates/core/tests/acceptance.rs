//! End-to-end acceptance run: every closed-form benchmark in the
//! built-in suite must pass at its pinned tolerance. One line is
//! printed per criterion (visible with `--nocapture`).

use specdet_core::selfcheck;

#[test]
fn acceptance_suite() {
    let rows = selfcheck::run_all();
    let mut failures = Vec::new();
    for row in &rows {
        let status = if row.pass { "PASS" } else { "FAIL" };
        println!(
            "{status}  {:>3}  {:<44} measured {:>14.8e}  expected {:>14.8e}  tol {:>9.2e}",
            row.id, row.name, row.measured, row.expected, row.tolerance
        );
        // re-assert the comparison from the raw numbers, independently of
        // the pass flag computed inside the library
        let ok = row.measured.is_finite() && (row.measured - row.expected).abs() <= row.tolerance;
        if !(ok && row.pass) {
            failures.push(format!(
                "{} {}: measured {} expected {} tol {} ({})",
                row.id, row.name, row.measured, row.expected, row.tolerance, row.detail
            ));
        }
    }
    assert!(
        failures.is_empty(),
        "acceptance criteria failed:\n{}",
        failures.join("\n")
    );
}
