//! Univariate and bivariate normal tails far below double-precision
//! underflow, carried in log space.
//!
//! Run with `cargo run --example normal_tails`.

use bivex::{bvn_upper_tail, std_normal_tail};

fn main() -> bivex::Result<()> {
    for x in [1.0, 5.0, 10.0, 38.0, 100.0] {
        println!("ln P(Z > {x:>5}) = {:.15e}", std_normal_tail(x).ln());
    }
    println!();
    for (a, b, rho) in [(0.0, 0.0, 0.5), (3.0, 2.5, 0.9), (12.0, 12.0, 0.5), (30.0, 30.0, 0.2), (20.0, 15.0, -0.6)] {
        let p = bvn_upper_tail(a, b, rho)?;
        println!("ln P(Z1 > {a:>4}, Z2 > {b:>4}; rho {rho:>4}) = {:.15e}", p.ln());
    }
    Ok(())
}
