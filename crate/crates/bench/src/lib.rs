//! Shared inputs for the benchmarks.

use pushasep::{RateVector, RngContract};
use rand_chacha::ChaCha8Rng;

pub fn rates(s: &str) -> RateVector {
    RateVector::parse(s).expect("benchmark rates are valid")
}

pub fn rng(stream: u64) -> ChaCha8Rng {
    RngContract::new(7, stream).rng()
}
