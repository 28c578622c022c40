use nalgebra::{DMatrix, DMatrixView};

use super::space::MeasureSpace;
use super::spectral::sym_eigenvalues;
use crate::error::{Error, Result};

/// Relative tolerance on negative eigenvalues of diagonal blocks.
const PSD_TOL: f64 = 1e-10;

/// Kernel of an operator in the convention `(Pf)(x) = sum_y K(x,y) f(y) mu(y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    space: MeasureSpace,
    matrix: DMatrix<f64>,
}

impl KernelMatrix {
    pub fn new(space: MeasureSpace, matrix: DMatrix<f64>) -> Result<Self> {
        let n = space.dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: matrix.nrows(),
            });
        }
        Ok(KernelMatrix { space, matrix })
    }

    pub(crate) fn new_unchecked(space: MeasureSpace, matrix: DMatrix<f64>) -> Self {
        KernelMatrix { space, matrix }
    }

    /// Converts a matrix `P` acting as `(Pf)_i = sum_j P_ij f_j` by dividing
    /// columns by the weights.
    pub fn from_matrix_convention(space: MeasureSpace, p: &DMatrix<f64>) -> Result<Self> {
        let mut k = Self::new(space, p.clone())?;
        let w = k.space.coordinate_weights();
        for (j, mut col) in k.matrix.column_iter_mut().enumerate() {
            col /= w[j];
        }
        Ok(k)
    }

    pub fn identity(space: MeasureSpace) -> Self {
        let w = space.coordinate_weights();
        let n = space.dim();
        KernelMatrix {
            matrix: DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 / w[i] } else { 0.0 }),
            space,
        }
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `P` in matrix convention, `K W`.
    pub fn to_matrix_convention(&self) -> DMatrix<f64> {
        let w = self.space.coordinate_weights();
        DMatrix::from_fn(self.matrix.nrows(), self.matrix.ncols(), |i, j| self.matrix[(i, j)] * w[j])
    }

    pub fn block(&self, x: usize, y: usize) -> DMatrixView<'_, f64> {
        let h = self.space.fiber_dim();
        self.matrix.view((x * h, y * h), (h, h))
    }

    /// `max_{x,y} |K(x,y)|_op`, the `L^1 -> L^inf` norm.
    pub fn ultra_norm(&self) -> f64 {
        let n = self.space.len();
        let h = self.space.fiber_dim();
        let mut best: f64 = 0.0;
        for x in 0..n {
            for y in 0..n {
                let b = self.block(x, y);
                let v = if h == 1 {
                    b[(0, 0)].abs()
                } else {
                    sym_eigenvalues(b.transpose() * b).max().max(0.0).sqrt()
                };
                best = best.max(v);
            }
        }
        best
    }

    /// `max_x |K(x,x)|_op`; equals [`Self::ultra_norm`] for positive kernels.
    pub fn ultra_norm_psd(&self) -> f64 {
        (0..self.space.len())
            .map(|x| block_top(self.block(x, x)))
            .fold(0.0, f64::max)
    }

    /// Density `Dnu(x) = tr K(x,x)`.
    pub fn density_vector(&self) -> Result<Vec<f64>> {
        let scale = self.matrix.amax();
        let mut out = Vec::with_capacity(self.space.len());
        for x in 0..self.space.len() {
            let b = self.block(x, x);
            let low = if b.nrows() == 1 {
                b[(0, 0)]
            } else {
                sym_eigenvalues(b.into_owned()).min()
            };
            if low < -PSD_TOL * scale {
                return Err(Error::NotPositive(low));
            }
            out.push(b.trace().max(0.0));
        }
        Ok(out)
    }

    /// `D(P) = max_x Dnu(x)`.
    pub fn density_sup(&self) -> Result<f64> {
        Ok(self.density_vector()?.into_iter().fold(0.0, f64::max))
    }

    /// `nu_P(Omega) = sum_{x in Omega} Dnu(x) mu(x)`.
    pub fn region_measure(&self, region: &[usize]) -> Result<f64> {
        let region = self.space.check_region(region)?;
        let d = self.density_vector()?;
        Ok(region.iter().map(|&x| d[x] * self.space.weights()[x]).sum())
    }

    /// `tau(chi_Omega P chi_Omega)` from the matrix convention diagonal.
    pub fn compressed_trace(&self, region: &[usize]) -> Result<f64> {
        let region = self.space.check_region(region)?;
        let p = self.to_matrix_convention();
        Ok(self.space.coordinates(&region).iter().map(|&i| p[(i, i)]).sum())
    }

    /// `tau(P) = sum_x tr K(x,x) mu(x)`.
    pub fn trace(&self) -> f64 {
        let w = self.space.coordinate_weights();
        (0..self.matrix.nrows()).map(|i| self.matrix[(i, i)] * w[i]).sum()
    }
}

pub(crate) fn block_top(b: DMatrixView<'_, f64>) -> f64 {
    if b.nrows() == 1 {
        b[(0, 0)].max(0.0)
    } else {
        sym_eigenvalues(b.into_owned()).max().max(0.0)
    }
}
