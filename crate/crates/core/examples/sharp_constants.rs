//! Sharp constants (b, c, K) and the finite-n ratio converging to K.
//!
//! Run with `cargo run --release --example sharp_constants`.

use bivex::oracle::sharp_ratio_detailed;
use bivex::{sharp_constants, SampleSize, ScalingSequence, Threshold};

fn main() -> bivex::Result<()> {
    let n = SampleSize::new(1000)?;
    let cases = [
        (-0.5, Threshold::new(2.0, 1.0)),
        (-0.5, Threshold::new(2.0, 2.0)),
        (0.5, Threshold::new(2.0, 0.5)),
        (0.5, Threshold::new(2.0, 1.0)),
        (0.5, Threshold::new(2.0, 2.0)),
    ];
    for (rho, u) in cases {
        let k = sharp_constants(u, rho)?;
        println!(
            "rho {rho:>4}, u ({}, {}): row {}, b = {}, c = {}, K = {:.6e}",
            u.u1,
            u.u2,
            k.row.as_str(),
            k.b,
            k.c,
            k.k
        );
        for a in [8.0, 16.0, 32.0, 64.0] {
            let r = sharp_ratio_detailed(&ScalingSequence::large(n, a)?, u, rho)?;
            println!("    a_n = {a:>4}: ratio / K = {:.6}", r.ratio / k.k);
        }
    }
    Ok(())
}
