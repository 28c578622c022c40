//! Shared inputs for the benchmarks.

use specdens_core::operators::{families, SpectralOperator};

/// `count` equally spaced points in `]0, hi]`.
pub fn lambda_grid(hi: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|i| hi * i as f64 / count as f64).collect()
}

/// Square torus graph with `side^2` vertices.
pub fn torus_2d(side: usize) -> SpectralOperator {
    families::torus(side, 2).expect("valid torus")
}
