//! Exact finite-n tail of the component-wise maximum, including sample sizes
//! given only through log n.
//!
//! Run with `cargo run --example exact_oracle`.

use bivex::oracle::exact_max_tail_checked;
use bivex::{exists_single_index_tail, SampleSize, Threshold};

fn main() -> bivex::Result<()> {
    let cases = [
        (SampleSize::new(10)?, Threshold::new(3.0, 3.2), 0.3),
        (SampleSize::new(1000)?, Threshold::new(10.0, 10.0), 0.5),
        (SampleSize::new(1_000_000)?, Threshold::new(5.0, 4.5), 0.0),
        (SampleSize::from_log10(20.0)?, Threshold::new(13.6, 13.6), 0.5),
    ];
    for (n, v, rho) in cases {
        let t = exact_max_tail_checked(n, v, rho)?;
        let single = exists_single_index_tail(n, v, rho)?;
        println!(
            "log n {:>7.3}, v ({}, {}), rho {rho}: ln T = {:.12}, ln P(single) = {:.12}, branch {:?}",
            n.log_n(),
            v.u1,
            v.u2,
            t.log_p.ln(),
            single.ln(),
            t.branch
        );
    }
    Ok(())
}
