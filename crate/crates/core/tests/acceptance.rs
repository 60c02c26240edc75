//! Runs the nine acceptance criteria and prints one line per criterion.
//!
//! `cargo test --release -p loxodrome --test acceptance -- --nocapture`

use loxodrome::acceptance;

#[test]
fn acceptance_suite() {
    let results = acceptance::run_all();
    for r in &results {
        println!("{}", r.report());
    }
    let failed: Vec<String> = results.iter().filter(|r| !r.passed()).map(|r| r.summary_line()).collect();
    assert_eq!(results.len(), acceptance::CRITERIA);
    assert!(failed.is_empty(), "failing criteria:\n{}", failed.join("\n"));
}
