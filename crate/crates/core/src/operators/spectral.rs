use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::kernel::KernelMatrix;
use super::space::MeasureSpace;
use crate::error::{Error, Result};

/// Relative slack when deciding `lambda_j <= lambda`.
pub const TIE_REL: f64 = 1e-12;
/// Absolute slack when deciding `lambda_j <= lambda`.
pub const TIE_ABS: f64 = 1e-14;
/// Default relative kernel detection threshold.
pub const DEFAULT_KERNEL_THRESHOLD: f64 = 1e-10;
/// Relative asymmetry tolerated in the weighted form `W A`.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Entries below this fraction of the largest one are dropped before an
/// eigensolve. Tiny and denormal entries can break the QR iteration.
const EIGEN_FLUSH: f64 = 1e-100;

/// Scaled, flushed block on the rows that survive flushing.
fn active_block(mut m: DMatrix<f64>) -> Option<(DMatrix<f64>, Vec<usize>, f64)> {
    let scale = m.amax();
    if !(scale > 0.0 && scale.is_finite()) {
        return None;
    }
    m.apply(|v| *v = if v.abs() < EIGEN_FLUSH * scale { 0.0 } else { *v / scale });
    let active: Vec<usize> = (0..m.nrows()).filter(|&i| m.row(i).iter().any(|v| *v != 0.0)).collect();
    let sub = DMatrix::from_fn(active.len(), active.len(), |i, j| m[(active[i], active[j])]);
    Some((sub, active, scale))
}

/// Symmetric eigendecomposition, robust to entries of widely varying size.
/// Rows that vanish after flushing are split off with eigenvalue zero.
pub(crate) fn sym_eigen(m: DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let n = m.nrows();
    let Some((sub, active, scale)) = active_block(m.clone()) else {
        return SymmetricEigen::new(m);
    };
    let eig = SymmetricEigen::new(sub);
    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &v) in eig.eigenvalues.iter().enumerate() {
        values[k] = v * scale;
        for (i, &row) in active.iter().enumerate() {
            vectors[(row, k)] = eig.eigenvectors[(i, k)];
        }
    }
    let mut k = active.len();
    for i in (0..n).filter(|i| active.binary_search(i).is_err()) {
        vectors[(i, k)] = 1.0;
        k += 1;
    }
    SymmetricEigen {
        eigenvectors: vectors,
        eigenvalues: values,
    }
}

pub(crate) fn sym_eigenvalues(m: DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    let Some((sub, _, scale)) = active_block(m.clone()) else {
        return m.symmetric_eigenvalues();
    };
    let mut values = DVector::zeros(n);
    values.rows_mut(0, sub.nrows()).copy_from(&(sub.symmetric_eigenvalues() * scale));
    values
}


/// `lambda_j <= lambda` up to eigensolver jitter.
pub fn within(lambda_j: f64, lambda: f64) -> bool {
    lambda_j <= lambda * (1.0 + TIE_REL) + TIE_ABS
}

/// Spectral interval of a projector: `]0, lambda]` or `[0, lambda]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    HalfOpen,
    Closed,
}

impl std::str::FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half_open" | "half-open" => Ok(Flavor::HalfOpen),
            "closed" => Ok(Flavor::Closed),
            other => Err(Error::Parse {
                line: 0,
                column: 0,
                message: format!("unknown flavor {other:?}"),
            }),
        }
    }
}

impl std::fmt::Display for Flavor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Flavor::HalfOpen => "half_open",
            Flavor::Closed => "closed",
        })
    }
}

/// Positive self-adjoint operator on a weighted space, fully diagonalized.
///
/// With `W` the diagonal of coordinate weights the operator is stored through
/// the symmetric matrix `S = W^{1/2} A W^{-1/2}` and its eigenvectors `phi_j`;
/// the weighted-orthonormal eigenvectors are `psi_j = W^{-1/2} phi_j`.
#[derive(Clone, Debug)]
pub struct SpectralOperator {
    space: MeasureSpace,
    sym: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    phi: DMatrix<f64>,
    psi: DMatrix<f64>,
    kernel_dim: usize,
    kernel_threshold: f64,
    norm: f64,
}

impl SpectralOperator {
    /// Diagonalizes `A` given in matrix convention `(Af)_i = sum_j A_ij f_j`.
    pub fn diagonalize(matrix: &DMatrix<f64>, space: MeasureSpace, kernel_threshold: f64) -> Result<Self> {
        Self::check_dims(matrix, &space)?;
        let w = space.coordinate_weights();
        let form = DMatrix::from_fn(matrix.nrows(), matrix.ncols(), |i, j| w[i] * matrix[(i, j)]);
        Self::from_form(&form, space, kernel_threshold)
    }

    /// Diagonalizes the operator with quadratic form `<Af, f> = f^T Q f`,
    /// that is `A = W^{-1} Q`.
    pub fn from_form(form: &DMatrix<f64>, space: MeasureSpace, kernel_threshold: f64) -> Result<Self> {
        Self::check_dims(form, &space)?;
        if !(kernel_threshold >= 0.0) {
            return Err(Error::InvalidSpace(format!("kernel threshold must be nonnegative, got {kernel_threshold}")));
        }
        let n = space.dim();
        let scale = form.amax().max(1.0);
        let mut asym: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                asym = asym.max((form[(i, j)] - form[(j, i)]).abs());
            }
        }
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::NotSelfAdjoint(asym));
        }
        let root: Vec<f64> = space.coordinate_weights().iter().map(|w| w.sqrt()).collect();
        let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (form[(i, j)] + form[(j, i)]) / (root[i] * root[j]));
        let eig = sym_eigen(sym.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let norm = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cutoff = kernel_threshold * norm;
        let lowest = order.first().map(|&j| eig.eigenvalues[j]).unwrap_or(0.0);
        if lowest < -cutoff {
            return Err(Error::NotPositive(lowest));
        }
        let mut eigenvalues = Vec::with_capacity(n);
        let mut phi = DMatrix::zeros(n, n);
        let mut kernel_dim = 0;
        for (col, &j) in order.iter().enumerate() {
            let mut v = eig.eigenvectors.column(j).into_owned();
            let big = v.amax();
            if let Some(first) = v.iter().find(|c| c.abs() > 1e-10 * big) {
                if *first < 0.0 {
                    v.neg_mut();
                }
            }
            phi.set_column(col, &v);
            let lambda = eig.eigenvalues[j];
            if lambda <= cutoff {
                kernel_dim += 1;
                eigenvalues.push(0.0);
            } else {
                eigenvalues.push(lambda);
            }
        }
        let psi = DMatrix::from_fn(n, n, |i, j| phi[(i, j)] / root[i]);
        Ok(SpectralOperator {
            space,
            sym,
            eigenvalues,
            phi,
            psi,
            kernel_dim,
            kernel_threshold,
            norm,
        })
    }

    fn check_dims(m: &DMatrix<f64>, space: &MeasureSpace) -> Result<()> {
        let n = space.dim();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: if m.nrows() != n { m.nrows() } else { m.ncols() },
            });
        }
        Ok(())
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Eigenvalues in ascending order; kernel modes are exactly zero.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Number of modes flagged as kernel; they come first.
    pub fn kernel_dim(&self) -> usize {
        self.kernel_dim
    }

    pub fn is_kernel(&self, j: usize) -> bool {
        j < self.kernel_dim
    }

    pub fn kernel_threshold(&self) -> f64 {
        self.kernel_threshold
    }

    /// Operator norm `max_j lambda_j`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Weighted-orthonormal eigenvectors as columns.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.psi
    }

    /// Eigenvectors of the symmetric matrix `W^{1/2} A W^{-1/2}`.
    pub fn sym_vectors(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn sym_matrix(&self) -> &DMatrix<f64> {
        &self.sym
    }

    /// `A` in matrix convention.
    pub fn matrix(&self) -> DMatrix<f64> {
        let w = self.space.coordinate_weights();
        DMatrix::from_fn(self.dim(), self.dim(), |i, j| self.sym[(i, j)] * (w[j] / w[i]).sqrt())
    }

    /// `W A`, the matrix of the quadratic form.
    pub fn form(&self) -> DMatrix<f64> {
        let w = self.space.coordinate_weights();
        DMatrix::from_fn(self.dim(), self.dim(), |i, j| self.sym[(i, j)] * (w[i] * w[j]).sqrt())
    }

    pub fn lambda_min_positive(&self) -> Option<f64> {
        self.eigenvalues.get(self.kernel_dim).copied()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Modes in `]0, lambda]` or `[0, lambda]`.
    pub fn selected(&self, flavor: Flavor, lambda: f64) -> Vec<usize> {
        let start = match flavor {
            Flavor::HalfOpen => self.kernel_dim,
            Flavor::Closed => 0,
        };
        let end = self.kernel_dim + self.eigenvalues[self.kernel_dim..].partition_point(|&l| within(l, lambda));
        (start..end).collect()
    }

    /// Distinct positive eigenvalues with the index one past their cluster.
    pub fn clusters(&self) -> Vec<(f64, usize)> {
        let mut out = Vec::new();
        let mut j = self.kernel_dim;
        while j < self.eigenvalues.len() {
            let lambda = self.eigenvalues[j];
            let end = j + self.eigenvalues[j..].partition_point(|&l| within(l, lambda));
            out.push((lambda, end));
            j = end;
        }
        out
    }

    /// `sum_j w_j psi_j psi_j^*` over the listed modes, as a kernel.
    pub fn spectral_sum(&self, modes: &[usize], weight: impl Fn(usize) -> f64) -> KernelMatrix {
        let n = self.dim();
        let mut scaled = DMatrix::zeros(n, modes.len());
        let mut plain = DMatrix::zeros(n, modes.len());
        for (c, &j) in modes.iter().enumerate() {
            let col = self.psi.column(j);
            plain.set_column(c, &col);
            scaled.set_column(c, &(col * weight(j)));
        }
        KernelMatrix::new_unchecked(self.space.clone(), scaled * plain.transpose())
    }

    pub fn projector(&self, flavor: Flavor, lambda: f64) -> KernelMatrix {
        self.spectral_sum(&self.selected(flavor, lambda), |_| 1.0)
    }

    /// Kernel of `e^{-tA}`, restricted to `(ker A)^perp` when `exclude_kernel`.
    pub fn heat(&self, t: f64, exclude_kernel: bool) -> KernelMatrix {
        let start = if exclude_kernel { self.kernel_dim } else { 0 };
        let modes: Vec<usize> = (start..self.dim()).collect();
        self.spectral_sum(&modes, |j| (-t * self.eigenvalues[j]).exp())
    }

    /// Kernel of `A^{-1} Pi_lambda` on `]0, lambda]`.
    pub fn inverse_projector(&self, lambda: f64) -> KernelMatrix {
        self.spectral_sum(&self.selected(Flavor::HalfOpen, lambda), |j| 1.0 / self.eigenvalues[j])
    }

    /// `<psi_j, f>` for every mode.
    pub fn coefficients(&self, f: &DVector<f64>) -> Result<DVector<f64>> {
        self.space.check_vector(f)?;
        let w = self.space.coordinate_weights();
        let g = DVector::from_fn(f.len(), |i, _| f[i] * w[i].sqrt());
        Ok(self.phi.transpose() * g)
    }

    /// Removes the kernel component of `f`; returns the projection and the
    /// norm of the removed part relative to `|f|`.
    pub fn project_out_kernel(&self, f: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
        let c = self.coefficients(f)?;
        let mut removed = DVector::zeros(f.len());
        for j in 0..self.kernel_dim {
            removed += self.psi.column(j) * c[j];
        }
        let total = self.space.norm2_squared(f).sqrt();
        let residual = if total > 0.0 {
            self.space.norm2_squared(&removed).sqrt() / total
        } else {
            0.0
        };
        Ok((f - removed, residual))
    }

    /// `max |Psi^T W Psi - I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let g = self.phi.transpose() * &self.phi;
        (g - DMatrix::identity(self.dim(), self.dim())).amax()
    }

    /// `|A - sum_j lambda_j psi_j psi_j^* W|` in the symmetric frame, max norm.
    pub fn reconstruction_residual(&self) -> f64 {
        let lambda = DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues));
        (&self.phi * lambda * self.phi.transpose() - &self.sym).amax()
    }

    /// Hex SHA-256 of the weights, fiber dimension and symmetric matrix.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        self.space.digest_into(&mut h);
        for v in self.sym.iter() {
            h.update(v.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::families;

    #[test]
    fn k2_eigenvalues() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let op = SpectralOperator::diagonalize(&m, MeasureSpace::counting(2, 1).unwrap(), DEFAULT_KERNEL_THRESHOLD).unwrap();
        assert_eq!(op.kernel_dim(), 1);
        assert_eq!(op.eigenvalues()[0], 0.0);
        assert!((op.eigenvalues()[1] - 2.0).abs() < 1e-14);
        assert!(op.orthonormality_residual() < 1e-12);
    }

    #[test]
    fn c4_eigenvalues() {
        let op = families::cycle(4).unwrap();
        let want = [0.0, 2.0, 2.0, 4.0];
        for (a, b) in op.eigenvalues().iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(op.clusters().len(), 2);
    }

    #[test]
    fn zero_matrix_is_all_kernel() {
        let op = SpectralOperator::diagonalize(&DMatrix::zeros(3, 3), MeasureSpace::counting(3, 1).unwrap(), 1e-10).unwrap();
        assert_eq!(op.kernel_dim(), 3);
        assert!(op.eigenvalues().iter().all(|&l| l == 0.0));
    }

    #[test]
    fn rejects_asymmetric_and_negative() {
        let space = MeasureSpace::counting(2, 1).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(SpectralOperator::diagonalize(&m, space.clone(), 1e-10), Err(Error::NotSelfAdjoint(_))));
        let m = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(SpectralOperator::diagonalize(&m, space, 1e-10), Err(Error::NotPositive(_))));
    }

    #[test]
    fn weighted_self_adjointness() {
        // A = W^{-1} L for the weighted path is not symmetric but W A is.
        let space = MeasureSpace::weighted(vec![1.0, 2.0], 1).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -0.5, 0.5]);
        let op = SpectralOperator::diagonalize(&a, space, 1e-10).unwrap();
        assert!((op.eigenvalues()[1] - 1.5).abs() < 1e-14);
        assert!((op.matrix() - a).amax() < 1e-14);
        assert!(op.reconstruction_residual() < 1e-14);
    }

    #[test]
    fn k2_projectors() {
        let op = families::complete(2).unwrap();
        let p = op.projector(Flavor::HalfOpen, 2.0);
        assert!((p.matrix()[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((p.matrix()[(0, 1)] + 0.5).abs() < 1e-15);
        assert_eq!(op.projector(Flavor::HalfOpen, 1.9).matrix().amax(), 0.0);
        let c = op.projector(Flavor::Closed, 0.0);
        assert!((c.matrix()[(0, 1)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn heat_kernels() {
        let op = families::complete(2).unwrap();
        let h0 = op.heat(0.0, true);
        assert!((h0.matrix() - op.projector(Flavor::HalfOpen, f64::INFINITY).matrix()).amax() < 1e-15);
        let h1 = op.heat(1.0, true);
        assert!((h1.matrix()[(0, 1)] + 0.5 * (-2.0f64).exp()).abs() < 1e-15);
        assert!(op.heat(50.0, true).matrix().amax() <= (-100.0f64).exp());
    }
}
