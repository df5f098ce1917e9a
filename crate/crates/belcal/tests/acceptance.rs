//! The pinned-result acceptance table as one test target. Every row must
//! pass, and the whole table must finish inside its one-minute budget.

use std::time::Instant;

#[test]
fn acceptance_table() {
    let start = Instant::now();
    let rows = belcal::acceptance::run_all();
    let elapsed = start.elapsed();

    assert_eq!(rows.len(), 14, "the table has 14 criteria");
    let mut failed = 0usize;
    for row in &rows {
        let verdict = if row.pass { "PASS" } else { "FAIL" };
        println!("[{:2}/14] {verdict}  {} — {}", row.index, row.name, row.detail);
        if !row.pass {
            failed += 1;
        }
    }
    println!("table finished in {:.1} s", elapsed.as_secs_f64());
    assert_eq!(failed, 0, "{failed} acceptance criteria failed (see lines above)");
    assert!(elapsed.as_secs_f64() < 60.0, "table took {elapsed:?}, budget is 60 s");
}
