//! Independent checks of the optimizer and the rate formulas: a brute-force
//! grid scan and a Monte-Carlo pair-counting simulation.

mod montecarlo;
mod naive;

pub use montecarlo::{mc_rate, McConfig, McRateEstimate};
pub use naive::{naive_grid_optimum, NAIVE_GRID_LIMIT};

/// Fixed seed set for statistical agreement checks of [`mc_rate`].
pub const MC_SEEDS: [u64; 12] = [1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233];
