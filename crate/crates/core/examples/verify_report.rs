//! Runs the fast verification criteria and prints one line per criterion.
//!
//! Run with `cargo run --release --example verify_report`; the Monte Carlo
//! criteria (8, 9) are left to `bivex verify`.

use bivex::verify::{run_criterion, VerifyOptions};

fn main() -> bivex::Result<()> {
    let opts = VerifyOptions::default();
    for id in [1, 2, 3, 4, 5, 6, 7, 10] {
        let report = run_criterion(id, &opts)?;
        println!("{}", report.summary());
        for row in report.rows.iter().filter(|r| !r.pass).take(3) {
            println!("    {}: expected {:.6}, observed {:.6}", row.parameters, row.expected, row.observed);
        }
    }
    Ok(())
}
