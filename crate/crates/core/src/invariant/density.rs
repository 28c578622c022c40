use rayon::prelude::*;
use std::f64::consts::PI;

use super::symbol::{Outer, TorusSymbol};
use crate::error::{Error, Result};
use crate::operators::{DEFAULT_KERNEL_THRESHOLD, TIE_ABS, TIE_REL};
use crate::profiles::MonotoneProfile;

/// Tabulated integrated density of states with its refinement error.
#[derive(Clone, Debug, PartialEq)]
pub struct GridProfile {
    pub profile: MonotoneProfile,
    /// `max_i |F_r(lambda_i) - F_{r/2}(lambda_i)|`.
    pub error_estimate: f64,
    pub resolution: usize,
}

/// Midpoints `2 pi (k + 1/2) / r` of a uniform grid on `[0, 2 pi)`.
pub fn midpoints(r: usize) -> Vec<f64> {
    (0..r).map(|k| 2.0 * PI * (k as f64 + 0.5) / r as f64).collect()
}

/// `counts[i] = #{(xi, mu) : mu eigenvalue at xi, mu <= thresholds[i]}` over
/// the midpoint grid with `r` points per axis; `thresholds` ascending.
pub fn grid_counts<E>(d: usize, r: usize, thresholds: &[f64], eigenvalues: E) -> Vec<u64>
where
    E: Fn(&[f64], &mut Vec<f64>) + Sync,
{
    let pts = midpoints(r);
    let m = thresholds.len();
    let slabs: Vec<Vec<u64>> = (0..r)
        .into_par_iter()
        .map(|first| {
            let mut hist = vec![0u64; m + 1];
            let mut idx = vec![0usize; d];
            idx[0] = first;
            let mut xi = vec![0.0; d];
            let mut eig = Vec::new();
            loop {
                for (x, &k) in xi.iter_mut().zip(&idx) {
                    *x = pts[k];
                }
                eig.clear();
                eigenvalues(&xi, &mut eig);
                for &mu in &eig {
                    hist[thresholds.partition_point(|&t| t < mu)] += 1;
                }
                // Odometer over axes 1..d.
                let mut axis = d;
                loop {
                    if axis == 1 {
                        return hist;
                    }
                    axis -= 1;
                    idx[axis] += 1;
                    if idx[axis] < r {
                        break;
                    }
                    idx[axis] = 0;
                }
            }
        })
        .collect();
    let mut total = vec![0u64; m + 1];
    for h in slabs {
        for (t, v) in total.iter_mut().zip(h) {
            *t += v;
        }
    }
    let mut acc = 0;
    total[..m]
        .iter()
        .map(|c| {
            acc += c;
            acc
        })
        .collect()
}

/// Same counts as [`grid_counts`] for `sigma = phi(sum_i g_i(xi_i))`, by
/// sorting the partial sums over half of the axes.
fn separable_counts(tables: &[Vec<f64>], outer: Outer, thresholds: &[f64]) -> Vec<u64> {
    let d = tables.len();
    let limits: Vec<f64> = thresholds
        .iter()
        .map(|&t| match outer {
            Outer::Identity => t,
            Outer::Square if t < 0.0 => f64::NEG_INFINITY,
            Outer::Square => t.sqrt(),
        })
        .collect();
    let sums = |axes: &[Vec<f64>]| {
        let mut out = vec![0.0];
        for table in axes {
            out = out.iter().flat_map(|s| table.iter().map(move |v| s + v)).collect();
        }
        out
    };
    let left = sums(&tables[..d / 2]);
    let mut right = sums(&tables[d / 2..]);
    right.sort_by(f64::total_cmp);
    let partial: Vec<Vec<u64>> = left
        .par_chunks(64)
        .map(|chunk| {
            let mut c = vec![0u64; limits.len()];
            for l in chunk {
                for (slot, t) in c.iter_mut().zip(&limits) {
                    *slot += right.partition_point(|&s| l + s <= *t) as u64;
                }
            }
            c
        })
        .collect();
    let mut total = vec![0u64; limits.len()];
    for c in partial {
        for (t, v) in total.iter_mut().zip(c) {
            *t += v;
        }
    }
    total
}

pub(crate) fn check_grid(lambda_grid: &[f64]) -> Result<()> {
    if lambda_grid.is_empty() {
        return Err(Error::InvalidProfile("empty lambda grid".into()));
    }
    if lambda_grid[0] <= 0.0 || lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidProfile("lambda grid must be positive and increasing".into()));
    }
    Ok(())
}

/// Counting thresholds: the kernel cutoff followed by the tie-tolerant grid.
pub(crate) fn thresholds(lambda_grid: &[f64], scale: f64) -> Vec<f64> {
    let mut t = vec![DEFAULT_KERNEL_THRESHOLD * scale];
    t.extend(lambda_grid.iter().map(|l| l * (1.0 + TIE_REL) + TIE_ABS));
    t
}

/// Turns cumulative counts (kernel cutoff first) into profile values.
pub(crate) fn normalize(counts: &[u64], cells: f64) -> Vec<f64> {
    counts[1..].iter().map(|&c| (c - counts[0]) as f64 / cells).collect()
}

/// Assembles a [`GridProfile`] from values at two resolutions.
pub(crate) fn assemble(
    lambda_grid: &[f64],
    fine: Vec<f64>,
    coarse: Vec<f64>,
    resolution: usize,
    tolerance: Option<f64>,
) -> Result<GridProfile> {
    let error_estimate = fine.iter().zip(&coarse).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if let Some(tol) = tolerance {
        if error_estimate > tol {
            return Err(Error::GridTooCoarse {
                estimate: error_estimate,
                tolerance: tol,
            });
        }
    }
    let samples: Vec<(f64, f64)> = lambda_grid.iter().copied().zip(fine).collect();
    Ok(GridProfile {
        profile: MonotoneProfile::tabulated(0.0, &samples)?,
        error_estimate,
        resolution,
    })
}

fn symbol_values(sym: &TorusSymbol, r: usize, thresholds: &[f64]) -> Vec<f64> {
    let counts = match sym.separable(&midpoints(r)) {
        Some((tables, outer)) => separable_counts(&tables, outer, thresholds),
        None => grid_counts(sym.dim(), r, thresholds, |xi, out| sym.eigenvalues_into(xi, out)),
    };
    normalize(&counts, (r as f64).powi(sym.dim() as i32))
}

/// `F(lambda) = (2 pi)^{-d} int #{eigenvalues of sigma(xi) in ]0, lambda]} dxi`
/// by the midpoint rule with `resolution` points per axis, sampled on
/// `lambda_grid`, with the difference to resolution `resolution / 2` as
/// error estimate.
pub fn symbol_density_profile(
    sym: &TorusSymbol,
    lambda_grid: &[f64],
    resolution: usize,
    tolerance: Option<f64>,
) -> Result<GridProfile> {
    check_grid(lambda_grid)?;
    if resolution < 4 || resolution % 2 != 0 {
        return Err(Error::InvalidProfile(format!("resolution must be even and >= 4, got {resolution}")));
    }
    let t = thresholds(lambda_grid, sym.bound());
    let fine = symbol_values(sym, resolution, &t);
    let coarse = symbol_values(sym, resolution / 2, &t);
    assemble(lambda_grid, fine, coarse, resolution, tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_matches_brute_force() {
        let grid = [0.05, 0.3, 1.0, 2.0, 3.5, 6.0];
        for sym in [
            TorusSymbol::lattice_laplacian(2).unwrap(),
            TorusSymbol::discrete_bilaplacian(3).unwrap(),
            TorusSymbol::parse("3 - cos(xi1) - 2*cos(xi2)", None).unwrap(),
        ] {
            let t = thresholds(&grid, sym.bound());
            let r = 12;
            let (tables, outer) = sym.separable(&midpoints(r)).unwrap();
            let fast = separable_counts(&tables, outer, &t);
            let slow = grid_counts(sym.dim(), r, &t, |xi, out| sym.eigenvalues_into(xi, out));
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn one_dimensional_laplacian() {
        let sym = TorusSymbol::lattice_laplacian(1).unwrap();
        let g = symbol_density_profile(&sym, &[1.0, 2.0, 4.0], 4096, Some(1e-3)).unwrap();
        assert!((g.profile.evaluate(2.0).unwrap() - 0.5).abs() < 1e-3);
        assert_eq!(g.profile.evaluate(4.0).unwrap(), 1.0);
        let want = (1.0f64 - 0.5).acos() / PI;
        assert!((g.profile.evaluate(1.0).unwrap() - want).abs() < 1e-3);
    }

    #[test]
    fn coarse_grid_is_reported() {
        let sym = TorusSymbol::lattice_laplacian(2).unwrap();
        let err = symbol_density_profile(&sym, &[0.5, 1.0], 8, Some(1e-6)).unwrap_err();
        assert!(matches!(err, Error::GridTooCoarse { .. }));
    }

    #[test]
    fn matrix_symbol_counts_every_band() {
        let sym = TorusSymbol::matrix(1, 2, 5.0, |xi| {
            let a = 2.0 - 2.0 * xi[0].cos();
            nalgebra::DMatrix::from_row_slice(2, 2, &[a, 0.0, 0.0, 1.0])
        })
        .unwrap();
        let g = symbol_density_profile(&sym, &[0.5, 1.0, 5.0], 64, None).unwrap();
        assert_eq!(g.profile.evaluate(5.0).unwrap(), 2.0);
        assert!(g.profile.evaluate(1.0).unwrap() > 1.0);
    }
}
