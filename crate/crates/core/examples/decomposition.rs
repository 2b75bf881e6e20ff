//! Inclusion-exclusion view of the tail: union sums, second Bonferroni term
//! and which index structure dominates.
//!
//! Run with `cargo run --example decomposition`.

use bivex::oracle::error_term_cases;
use bivex::{union_sum, SampleSize, ScalingSequence, Threshold};

fn main() -> bivex::Result<()> {
    let s = ScalingSequence::large(SampleSize::new(1000)?, 6.0)?;
    for (rho, u) in [(0.5, Threshold::new(2.0, 2.0)), (-0.5, Threshold::new(2.0, 1.0))] {
        let d = union_sum(&s, u, rho)?;
        println!("rho {rho}, u ({}, {}), a_n = {}:", u.u1, u.u2, s.a_n);
        println!("  ln T          {:.10}", d.log_t.ln());
        println!("  ln S(i != j)  {:.10}", d.log_s_unequal);
        println!("  ln S(i == j)  {:.10}", d.log_s_equal);
        println!("  ln e_n        {:.10}", d.log_e_n);
        println!("  lower bound   {:.10}", d.log_lower());
        println!("  dominant      {}", d.dominant().as_str());
        let mut cases = error_term_cases(&s, u, rho)?;
        cases.sort_by(|a, b| b.log_term.total_cmp(&a.log_term));
        for c in cases.iter().take(3) {
            println!("    {:<10} ln term {:.4}", c.pattern, c.log_term);
        }
    }
    Ok(())
}
