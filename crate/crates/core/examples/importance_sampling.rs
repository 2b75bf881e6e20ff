//! Naive and importance-sampling estimates against the exact tail.
//!
//! Run with `cargo run --release --example importance_sampling`.
//! `BIVEX_THREADS` caps the worker count; results do not depend on it.

use bivex::{estimate_tail_is, estimate_tail_naive, exact_max_tail, McSettings, SampleSize, Threshold};

fn main() -> bivex::Result<()> {
    let (n, rho) = (100, 0.5);
    for a in [2.0, 4.0, 6.0, 8.0] {
        let v = Threshold::new(a, 0.9 * a);
        let exact = exact_max_tail(SampleSize::new(n)?, v, rho)?.ln();
        let settings = McSettings::new(5000, 7);
        let naive = estimate_tail_naive(n, v, rho, settings)?;
        let is = estimate_tail_is(n, v, rho, settings)?;
        println!("a = {a}: exact {exact:.5}");
        println!("   naive {:>10.5} ± {:.4} ({} hits)", naive.log_p.ln(), naive.std_err_log, naive.hits);
        println!(
            "   IS    {:>10.5} ± {:.4} (ess {:.0}, z {:+.2})",
            is.log_p.ln(),
            is.std_err_log,
            is.ess,
            is.z_score(exact)
        );
    }
    Ok(())
}
