use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite measure space `(X, mu)` with a fiber `H = R^h` over each point.
///
/// Vectors on the space are stored point-major: component `a` of `f(x)`
/// sits at index `x * h + a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpace {
    points: Vec<String>,
    weights: Vec<f64>,
    fiber_dim: usize,
}

impl MeasureSpace {
    pub fn new(points: Vec<String>, weights: Vec<f64>, fiber_dim: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidSpace("no points".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: weights.len(),
            });
        }
        if fiber_dim == 0 {
            return Err(Error::InvalidSpace("fiber dimension must be positive".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidSpace(format!("weights must be positive, got {w}")));
        }
        Ok(MeasureSpace {
            points,
            weights,
            fiber_dim,
        })
    }

    /// Points `0..n` with unit weights.
    pub fn counting(n: usize, fiber_dim: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()).collect(), vec![1.0; n], fiber_dim)
    }

    pub fn weighted(weights: Vec<f64>, fiber_dim: usize) -> Result<Self> {
        Self::new((0..weights.len()).map(|i| i.to_string()).collect(), weights, fiber_dim)
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Total dimension `h |X|`.
    pub fn dim(&self) -> usize {
        self.fiber_dim * self.points.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.points.iter().position(|p| p == name)
    }

    /// Weight of every coordinate, `mu(x)` repeated `h` times.
    pub fn coordinate_weights(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.weights.iter().flat_map(|&w| std::iter::repeat_n(w, self.fiber_dim)),
        )
    }

    pub fn measure(&self, region: &[usize]) -> f64 {
        region.iter().map(|&x| self.weights[x]).sum()
    }

    pub fn total_measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Sorted, deduplicated, range-checked copy of a nonempty region.
    pub fn check_region(&self, region: &[usize]) -> Result<Vec<usize>> {
        if region.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let mut out = region.to_vec();
        out.sort_unstable();
        out.dedup();
        if let Some(&x) = out.last() {
            if x >= self.len() {
                return Err(Error::InvalidSpace(format!("point {x} out of range")));
            }
        }
        Ok(out)
    }

    /// Coordinates of the points of a region.
    pub fn coordinates(&self, region: &[usize]) -> Vec<usize> {
        let h = self.fiber_dim;
        region.iter().flat_map(|&x| x * h..(x + 1) * h).collect()
    }

    pub fn check_vector(&self, f: &DVector<f64>) -> Result<()> {
        if f.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: f.len(),
            });
        }
        Ok(())
    }

    /// `|f(x)|_H` per point.
    pub fn fiber_norms(&self, f: &DVector<f64>) -> Vec<f64> {
        let h = self.fiber_dim;
        (0..self.len()).map(|x| f.rows(x * h, h).norm()).collect()
    }

    /// `sum_x |f(x)|_H^2 mu(x)`.
    pub fn norm2_squared(&self, f: &DVector<f64>) -> f64 {
        self.fiber_norms(f).iter().zip(&self.weights).map(|(n, w)| n * n * w).sum()
    }

    /// `sum_x |f(x)|_H mu(x)`.
    pub fn norm1(&self, f: &DVector<f64>) -> f64 {
        self.fiber_norms(f).iter().zip(&self.weights).map(|(n, w)| n * w).sum()
    }

    /// `(sum_x |f(x)|_H^p mu(x))^{1/p}`.
    pub fn norm_p(&self, f: &DVector<f64>, p: f64) -> f64 {
        self.fiber_norms(f)
            .iter()
            .zip(&self.weights)
            .map(|(n, w)| n.powf(p) * w)
            .sum::<f64>()
            .powf(1.0 / p)
    }

    pub fn inner(&self, f: &DVector<f64>, g: &DVector<f64>) -> f64 {
        let h = self.fiber_dim;
        f.iter()
            .zip(g.iter())
            .enumerate()
            .map(|(i, (a, b))| a * b * self.weights[i / h])
            .sum()
    }

    /// Partition of the point set given as a list of regions.
    pub fn check_partition(&self, parts: &[Vec<usize>]) -> Result<()> {
        let mut seen = vec![false; self.len()];
        for part in parts {
            if part.is_empty() {
                return Err(Error::InvalidPartition("empty part".into()));
            }
            for &x in part {
                if x >= self.len() {
                    return Err(Error::InvalidPartition(format!("point {x} out of range")));
                }
                if std::mem::replace(&mut seen[x], true) {
                    return Err(Error::InvalidPartition(format!("point {x} appears twice")));
                }
            }
        }
        if let Some(x) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("point {x} is not covered")));
        }
        Ok(())
    }

    pub(crate) fn digest_into(&self, hasher: &mut impl sha2::Digest) {
        hasher.update((self.fiber_dim as u64).to_le_bytes());
        for w in &self.weights {
            hasher.update(w.to_le_bytes());
        }
    }
}
