//! Shared fixtures for the criterion benchmarks.

use ssts_core::experiment::{table1, Table1Row};
use ssts_core::{example, BlockSystem};

/// Grid sides benchmarked by default; the larger published grids take
/// minutes per sample.
pub const BENCH_GRIDS: [usize; 3] = [16, 32, 64];

pub struct Fixture {
    pub m: usize,
    pub sys: BlockSystem,
    pub alpha: f64,
    pub omega: f64,
}

/// Example 1 at grid side `m` with the published optimal SSTS parameters.
pub fn fixture(m: usize) -> Fixture {
    let sys = example(1, m).expect("example 1 is defined for every m >= 1");
    let p = table1(1, m, Table1Row::SstsOpt).expect("benchmarked grids are tabulated");
    Fixture {
        m,
        sys,
        alpha: p.alpha,
        omega: p.omega.expect("SSTS rows carry omega"),
    }
}
