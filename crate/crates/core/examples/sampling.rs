//! Reproducible streams: the component-wise maximum of one trial depends
//! only on (seed, trial index).
//!
//! Run with `cargo run --example sampling`.

use bivex::rng::StreamFactory;
use bivex::sample_componentwise_max;

fn main() {
    let streams = StreamFactory::new(42);
    for t in [0, 1, 2, 1] {
        let m = sample_componentwise_max(1000, 0.5, &mut streams.trial(t));
        println!("trial {t}: max = ({:.5}, {:.5}) at samples ({}, {})", m.max1, m.max2, m.argmax1, m.argmax2);
    }
}
