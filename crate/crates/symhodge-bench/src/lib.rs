//! Fixtures shared by the benchmarks.

use symhodge::{make_grid, Grid, SymplecticModel};

/// Benchmark cases: (label, n, shape).
pub const CASES: &[(&str, usize, &[usize])] = &[("n1_33x32", 1, &[33, 32]), ("n2_5x4x4x4", 2, &[5, 4, 4, 4]), ("n2_9x8x8x8", 2, &[9, 8, 8, 8])];

pub fn setup(n: usize, shape: &[usize]) -> (Grid, SymplecticModel) {
    let grid = make_grid(n, shape, 2).expect("benchmark shapes are valid");
    let md = SymplecticModel::new(n).expect("n is 1 or 2");
    (grid, md)
}
