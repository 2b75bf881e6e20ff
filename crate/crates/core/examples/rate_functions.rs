//! Right-scale and large-scale rate functions over a small grid.
//!
//! Run with `cargo run --example rate_functions`.

use bivex::rate::right_scale_terms;
use bivex::{rate_i, rate_j, regime_classify, CorrelationStructure, Scale, Threshold};

fn main() -> bivex::Result<()> {
    println!("{:>5} {:>11} {:>9} {:>9} {:>9} {:>18} {:>17}", "rho", "u", "J1", "J2", "J", "case", "regime");
    for rho in [-0.5, 0.0, 0.5, 0.9] {
        let corr = CorrelationStructure::standard(rho)?;
        for u in [Threshold::new(1.6, 1.6), Threshold::new(2.0, 1.5), Threshold::new(2.5, 1.6)] {
            let t = right_scale_terms(u, &corr)?;
            let j = rate_j(u, &corr)?;
            let regime = regime_classify(u, &corr, Scale::Right)?;
            println!(
                "{rho:>5} ({:>4},{:>4}) {:>9.4} {:>9.4} {:>9.4} {:>18} {:>17}",
                u.u1,
                u.u2,
                t.j1,
                t.j2,
                j.value,
                j.case_label.as_str(),
                regime.as_str()
            );
        }
    }

    println!("\nlarge scale, u = (2, 1):");
    for rho in [-0.5, 0.0, 0.5, 0.8] {
        let i = rate_i(Threshold::new(2.0, 1.0), rho)?;
        println!("  rho {rho:>4}: I = {:.6} ({}), minimizer {:?}", i.value, i.case_label.as_str(), i.minimizer);
    }
    Ok(())
}
