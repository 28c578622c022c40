//! Exact heat decays of finite eigensystems and their tail integrals.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operators::spectral::sym_eigenvalues;

/// `max_x N_x(sum_j e^{-t lambda_j} psi_j(x) psi_j(x)^*)` for a finite
/// eigensystem, where `N_x` is the fiber trace or the fiber operator norm.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatEnvelope {
    rates: Vec<f64>,
    fiber_dim: usize,
    /// `points x modes` matrix of squared fiber norms `|psi_j(x)|^2`.
    squared: DMatrix<f64>,
    /// Per point, the `fiber_dim x modes` matrix of eigenvector values; only
    /// kept when the operator norm of a nontrivial fiber is required.
    vectors: Option<Vec<DMatrix<f64>>>,
}

impl HeatEnvelope {
    /// `values[x]` holds, column by column, the fiber vectors `psi_j(x)`.
    pub fn new(rates: Vec<f64>, fiber_dim: usize, values: Vec<DMatrix<f64>>, operator_norm: bool) -> Result<Self> {
        if rates.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::InvalidProfile("heat envelope rates must be positive".into()));
        }
        let n = values.len();
        let m = rates.len();
        let mut squared = DMatrix::zeros(n, m);
        for (x, block) in values.iter().enumerate() {
            if block.nrows() != fiber_dim || block.ncols() != m {
                return Err(Error::DimensionMismatch {
                    expected: fiber_dim * m,
                    got: block.nrows() * block.ncols(),
                });
            }
            for j in 0..m {
                squared[(x, j)] = block.column(j).norm_squared();
            }
        }
        let vectors = (operator_norm && fiber_dim > 1).then_some(values);
        Ok(HeatEnvelope {
            rates,
            fiber_dim,
            squared,
            vectors,
        })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn min_rate(&self) -> Option<f64> {
        self.rates.iter().copied().reduce(f64::min)
    }

    pub fn max_rate(&self) -> Option<f64> {
        self.rates.iter().copied().reduce(f64::max)
    }

    /// True when every point contributes a plain sum of exponentials.
    pub fn is_scalar(&self) -> bool {
        self.vectors.is_none()
    }

    fn row_value(&self, x: usize, t: f64) -> f64 {
        self.squared
            .row(x)
            .iter()
            .zip(&self.rates)
            .map(|(c, r)| c * (-t * r).exp())
            .sum()
    }

    fn argmax(&self, t: f64) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for x in 0..self.squared.nrows() {
            let v = self.row_value(x, t);
            if v > best.1 {
                best = (x, v);
            }
        }
        best
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.vectors {
            None => self.argmax(t).1.max(0.0),
            Some(blocks) => {
                let decay: Vec<f64> = self.rates.iter().map(|r| (-t * r).exp()).collect();
                let mut best: f64 = 0.0;
                for block in blocks {
                    let mut acc = DMatrix::<f64>::zeros(self.fiber_dim, self.fiber_dim);
                    for (j, e) in decay.iter().enumerate() {
                        let col = block.column(j);
                        acc += *e * &col * col.transpose();
                    }
                    best = best.max(sym_eigenvalues(acc).max());
                }
                best
            }
        }
    }

    /// Upper envelope of the per-point sums as `(start, point)` pieces.
    ///
    /// The maximizing point is sampled on a geometric grid; wherever it
    /// changes, crossing times are located by bisection and checked for a
    /// third point overtaking both.
    fn pieces(&self) -> Vec<(f64, usize)> {
        let (lo, hi) = match (self.min_rate(), self.max_rate()) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => return vec![(0.0, 0)],
        };
        let t_min = 1e-3 / hi;
        let t_max = (200.0 / lo).max(t_min);
        let per_decade = 16.0;
        let count = ((t_max / t_min).log10() * per_decade).ceil() as usize;
        let mut grid = vec![0.0];
        grid.extend((0..=count).map(|k| t_min * 10f64.powf(k as f64 / per_decade)));
        let winners: Vec<usize> = grid.iter().map(|&t| self.argmax(t).0).collect();
        let mut pieces = vec![(0.0, winners[0])];
        for i in 0..grid.len() - 1 {
            if winners[i] != winners[i + 1] {
                self.split(grid[i], winners[i], grid[i + 1], winners[i + 1], 0, &mut pieces);
            }
        }
        pieces.dedup_by(|b, a| a.1 == b.1);
        pieces
    }

    fn split(&self, a: f64, xa: usize, b: f64, xb: usize, depth: usize, out: &mut Vec<(f64, usize)>) {
        let diff = |t: f64| self.row_value(xa, t) - self.row_value(xb, t);
        let (mut lo, mut hi) = (a, b);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if diff(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let cross = hi;
        let (xm, vm) = self.argmax(cross);
        let level = self.row_value(xa, cross).max(self.row_value(xb, cross));
        if depth < 40 && xm != xa && xm != xb && vm > level * (1.0 + 1e-13) {
            self.split(a, xa, cross, xm, depth + 1, out);
            self.split(cross, xm, b, xb, depth + 1, out);
        } else {
            out.push((cross, xb));
        }
    }

    /// `t -> int_t^inf` of the envelope, exact on each piece.
    pub(crate) fn integrate(&self) -> PiecewiseExp {
        let pieces = self.pieces();
        let m = self.rates.len();
        let k = pieces.len();
        let mut integrand = DMatrix::zeros(k, m);
        for (row, &(_, x)) in pieces.iter().enumerate() {
            integrand.row_mut(row).copy_from(&self.squared.row(x));
        }
        PiecewiseExp::new(self.rates.clone(), pieces.iter().map(|p| p.0).collect(), integrand)
    }
}

/// Tail integral of a piecewise sum of exponentials: on `[b_k, b_{k+1})`
/// the integrand is `sum_j c_kj e^{-t r_j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseExp {
    rates: Vec<f64>,
    breaks: Vec<f64>,
    integrand: DMatrix<f64>,
    offsets: Vec<f64>,
    values_at_breaks: Vec<f64>,
}

impl PiecewiseExp {
    fn new(rates: Vec<f64>, breaks: Vec<f64>, integrand: DMatrix<f64>) -> Self {
        let k = breaks.len();
        let mut out = PiecewiseExp {
            rates,
            breaks,
            integrand,
            offsets: vec![0.0; k],
            values_at_breaks: vec![0.0; k],
        };
        for piece in (0..k).rev() {
            if piece + 1 < k {
                let b = out.breaks[piece + 1];
                out.offsets[piece] = out.values_at_breaks[piece + 1] - out.antiderivative(piece, b);
            }
            let start = out.breaks[piece];
            out.values_at_breaks[piece] = out.antiderivative(piece, start) + out.offsets[piece];
        }
        out
    }

    fn antiderivative(&self, piece: usize, t: f64) -> f64 {
        self.integrand
            .row(piece)
            .iter()
            .zip(&self.rates)
            .map(|(c, r)| c * (-t * r).exp() / r)
            .sum()
    }

    fn piece(&self, t: f64) -> usize {
        self.breaks.partition_point(|&b| b <= t).saturating_sub(1)
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values_at_breaks(&self) -> &[f64] {
        &self.values_at_breaks
    }

    pub(crate) fn eval(&self, t: f64) -> f64 {
        let k = self.piece(t);
        (self.antiderivative(k, t) + self.offsets[k]).max(0.0)
    }

    pub(crate) fn integrand_at(&self, t: f64) -> f64 {
        let k = self.piece(t);
        self.integrand
            .row(k)
            .iter()
            .zip(&self.rates)
            .map(|(c, r)| c * (-t * r).exp())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(rates: Vec<f64>, rows: &[&[f64]]) -> HeatEnvelope {
        let values = rows
            .iter()
            .map(|r| DMatrix::from_row_slice(1, r.len(), &r.iter().map(|v| v.sqrt()).collect::<Vec<_>>()))
            .collect();
        HeatEnvelope::new(rates, 1, values, true).unwrap()
    }

    #[test]
    fn single_point_integral_is_closed_form() {
        let env = scalar(vec![1.0, 4.0], &[&[1.0, 1.0]]);
        let m = env.integrate();
        for t in [0.0f64, 0.3, 2.0, 50.0] {
            let want = (-t).exp() + 0.25 * (-4.0 * t).exp();
            assert!((m.eval(t) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn crossing_envelope() {
        // Point 0 dominates early, point 1 late; they cross where
        // 2 e^{-3t} = e^{-t}, i.e. t = ln 2 / 2.
        let env = scalar(vec![1.0, 3.0], &[&[0.0, 2.0], &[1.0, 0.0]]);
        let pieces = env.pieces();
        assert_eq!(pieces.len(), 2);
        let cross = 2f64.ln() / 2.0;
        assert!((pieces[1].0 - cross).abs() < 1e-12);
        let m = env.integrate();
        let want_zero = 2.0 / 3.0 * (1.0 - (-3.0 * cross).exp()) + (-cross).exp();
        assert!((m.eval(0.0) - want_zero).abs() < 1e-12);
        assert!((m.eval(1.0) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn third_point_between_crossings() {
        let env = scalar(
            vec![1.0, 2.0, 3.0],
            &[&[0.0, 0.0, 4.0], &[1.0, 0.0, 0.0], &[0.0, 2.5, 0.0]],
        );
        let pieces: Vec<usize> = env.pieces().iter().map(|p| p.1).collect();
        assert_eq!(pieces, vec![0, 2, 1]);
    }
}
