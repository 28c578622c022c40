use nalgebra::{DMatrix, DVector};
use sha2::{Digest, Sha256};

use super::kernel::KernelMatrix;
use super::space::MeasureSpace;
use super::spectral::{sym_eigenvalues, SpectralOperator};
use crate::error::{Error, Result};

/// Relative tolerance for negative eigenvalues of a state.
const STATE_PSD_TOL: f64 = 1e-12;

/// Positive operator `rho` on a weighted space, stored as its kernel `R`:
/// `(rho f)(x) = sum_y R(x,y) f(y) mu(y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityState {
    space: MeasureSpace,
    kernel: DMatrix<f64>,
}

impl DensityState {
    /// Validates symmetry and positivity of `R`.
    pub fn from_kernel_matrix(space: MeasureSpace, kernel: DMatrix<f64>) -> Result<Self> {
        let n = space.dim();
        if kernel.nrows() != n || kernel.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: kernel.nrows(),
            });
        }
        let scale = kernel.amax();
        let asym = (&kernel - kernel.transpose()).amax();
        if asym > 1e-10 * scale.max(1e-300) && asym > 0.0 {
            return Err(Error::NotSelfAdjoint(asym));
        }
        let state = DensityState {
            kernel: 0.5 * (&kernel + kernel.transpose()),
            space,
        };
        let eig = sym_eigenvalues(state.sym());
        let top = eig.max().max(0.0);
        let low = eig.min();
        if low < -STATE_PSD_TOL * top.max(1e-300) && low < 0.0 {
            return Err(Error::NotPositive(low));
        }
        Ok(state)
    }

    pub fn from_kernel(k: &KernelMatrix) -> Result<Self> {
        Self::from_kernel_matrix(k.space().clone(), k.matrix().clone())
    }

    /// Pure state `|f><f|`.
    pub fn pure(space: MeasureSpace, f: &DVector<f64>) -> Result<Self> {
        space.check_vector(f)?;
        Ok(DensityState {
            kernel: f * f.transpose(),
            space,
        })
    }

    /// `sum_i p_i |f_i><f_i|` with `p_i >= 0`.
    pub fn mixture(space: MeasureSpace, parts: &[(f64, DVector<f64>)]) -> Result<Self> {
        let n = space.dim();
        let mut kernel = DMatrix::zeros(n, n);
        for (p, f) in parts {
            space.check_vector(f)?;
            if !(*p >= 0.0) {
                return Err(Error::NotPositive(*p));
            }
            kernel += *p * f * f.transpose();
        }
        Ok(DensityState { space, kernel })
    }

    pub fn zero(space: MeasureSpace) -> Self {
        let n = space.dim();
        DensityState {
            space,
            kernel: DMatrix::zeros(n, n),
        }
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn scaled(&self, c: f64) -> Self {
        DensityState {
            space: self.space.clone(),
            kernel: &self.kernel * c,
        }
    }

    /// `W^{1/2} R W^{1/2}`, unitarily equivalent to `rho`.
    pub fn sym(&self) -> DMatrix<f64> {
        let root: Vec<f64> = self.space.coordinate_weights().iter().map(|w| w.sqrt()).collect();
        DMatrix::from_fn(self.kernel.nrows(), self.kernel.ncols(), |i, j| {
            self.kernel[(i, j)] * root[i] * root[j]
        })
    }

    fn from_sym(space: &MeasureSpace, sym: &DMatrix<f64>) -> Self {
        let root: Vec<f64> = space.coordinate_weights().iter().map(|w| w.sqrt()).collect();
        DensityState {
            space: space.clone(),
            kernel: DMatrix::from_fn(sym.nrows(), sym.ncols(), |i, j| sym[(i, j)] / (root[i] * root[j])),
        }
    }

    /// `tau(rho)`.
    pub fn trace(&self) -> f64 {
        let w = self.space.coordinate_weights();
        (0..self.kernel.nrows()).map(|i| self.kernel[(i, i)] * w[i]).sum()
    }

    /// `Dnu_rho(x) = tr R(x,x)`.
    pub fn density(&self) -> Vec<f64> {
        let h = self.space.fiber_dim();
        (0..self.space.len())
            .map(|x| (0..h).map(|a| self.kernel[(x * h + a, x * h + a)]).sum::<f64>().max(0.0))
            .collect()
    }

    /// `nu_rho(Omega)`.
    pub fn region_measure(&self, region: &[usize]) -> Result<f64> {
        let region = self.space.check_region(region)?;
        let d = self.density();
        Ok(region.iter().map(|&x| d[x] * self.space.weights()[x]).sum())
    }

    /// `|rho|_{2,2}`.
    pub fn norm(&self) -> f64 {
        if self.kernel.is_empty() {
            return 0.0;
        }
        sym_eigenvalues(self.sym()).max().max(0.0)
    }

    /// Largest `|R(x,y)|` with `x` or `y` outside the region, relative to `max |R|`.
    pub fn support_residual(&self, region: &[usize]) -> Result<f64> {
        let region = self.space.check_region(region)?;
        let inside: Vec<bool> = {
            let mut v = vec![false; self.space.len()];
            region.iter().for_each(|&x| v[x] = true);
            v
        };
        let h = self.space.fiber_dim();
        let scale = self.kernel.amax();
        if scale == 0.0 {
            return Ok(0.0);
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.kernel.nrows() {
            for j in 0..self.kernel.ncols() {
                if !(inside[i / h] && inside[j / h]) {
                    worst = worst.max(self.kernel[(i, j)].abs());
                }
            }
        }
        Ok(worst / scale)
    }

    /// `Pi_V rho Pi_V` with `V = (ker A)^perp`, and the Frobenius norm of the
    /// removed part relative to the state (symmetric frame).
    pub fn project_out_kernel(&self, op: &SpectralOperator) -> Result<(DensityState, f64)> {
        if op.space() != &self.space {
            return Err(Error::DimensionMismatch {
                expected: op.dim(),
                got: self.space.dim(),
            });
        }
        let sym = self.sym();
        let k = op.kernel_dim();
        if k == 0 {
            return Ok((self.clone(), 0.0));
        }
        let n = op.dim();
        let phi_k = op.sym_vectors().columns(0, k);
        let proj = DMatrix::identity(n, n) - &phi_k * phi_k.transpose();
        let projected = &proj * &sym * &proj;
        let total = sym.norm();
        let residual = if total > 0.0 { (&sym - &projected).norm() / total } else { 0.0 };
        let out = Self::from_sym(&self.space, &(0.5 * (&projected + projected.transpose())));
        if total > 0.0 && out.trace() <= 1e-12 * self.trace() {
            return Err(Error::StateInKernel);
        }
        Ok((out, residual))
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        self.space.digest_into(&mut h);
        for v in self.kernel.iter() {
            h.update(v.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Hex SHA-256 of a state vector.
pub fn vector_digest(f: &DVector<f64>) -> String {
    let mut h = Sha256::new();
    for v in f.iter() {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

fn check_space(op: &SpectralOperator, rho: &DensityState) -> Result<()> {
    if op.space() != rho.space() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: rho.space().dim(),
        });
    }
    Ok(())
}

/// `E(f) = <Af, f> = sum_j lambda_j <psi_j, f>^2`.
pub fn energy(op: &SpectralOperator, f: &DVector<f64>) -> Result<f64> {
    let c = op.coefficients(f)?;
    Ok(op.eigenvalues().iter().zip(c.iter()).map(|(l, c)| l * c * c).sum())
}

/// `|Pi_{>lambda} f|^2`.
pub fn tail_mass(op: &SpectralOperator, f: &DVector<f64>, lambda: f64) -> Result<f64> {
    let c = op.coefficients(f)?;
    Ok(op
        .eigenvalues()
        .iter()
        .zip(c.iter())
        .filter(|(l, _)| **l > lambda)
        .map(|(_, c)| c * c)
        .sum())
}

/// `Phi^T rho~ Phi`: the state in the eigenbasis.
fn in_eigenbasis(op: &SpectralOperator, rho: &DensityState) -> DMatrix<f64> {
    let phi = op.sym_vectors();
    phi.transpose() * rho.sym() * phi
}

/// `E(rho) = tau(rho^{1/2} A rho^{1/2}) = sum_j lambda_j <psi_j, rho psi_j>`.
pub fn rho_energy(op: &SpectralOperator, rho: &DensityState) -> Result<f64> {
    check_space(op, rho)?;
    let b = in_eigenbasis(op, rho);
    Ok(op.eigenvalues().iter().enumerate().map(|(j, l)| l * b[(j, j)]).sum::<f64>().max(0.0))
}

/// `<A>_rho = E(rho) / tau(rho)`.
pub fn rho_expectation(op: &SpectralOperator, rho: &DensityState) -> Result<f64> {
    let tau = rho.trace();
    if !(tau > 0.0) {
        return Err(Error::ZeroState);
    }
    Ok(rho_energy(op, rho)? / tau)
}

/// `|rho^{1/2} A rho^{1/2}|_{2,2}`, computed as the top eigenvalue of
/// `Lambda^{1/2} Phi^T rho~ Phi Lambda^{1/2}`.
pub fn sandwich_norm(op: &SpectralOperator, rho: &DensityState) -> Result<f64> {
    check_space(op, rho)?;
    let b = in_eigenbasis(op, rho);
    let root: Vec<f64> = op.eigenvalues().iter().map(|l| l.sqrt()).collect();
    let n = b.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let c = DMatrix::from_fn(n, n, |i, j| root[i] * b[(i, j)] * root[j]);
    Ok(sym_eigenvalues(0.5 * (&c + c.transpose())).max().max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{families, Flavor};

    #[test]
    fn k2_energies() {
        let op = families::complete(2).unwrap();
        let f = DVector::from_vec(vec![1.0, -1.0]);
        assert!((energy(&op, &f).unwrap() - 4.0).abs() < 1e-14);
        let rho = DensityState::from_kernel(&op.projector(Flavor::HalfOpen, 2.0)).unwrap();
        assert!((rho_energy(&op, &rho).unwrap() - 2.0).abs() < 1e-14);
        assert!((rho_expectation(&op, &rho).unwrap() - 2.0).abs() < 1e-14);
        assert!((sandwich_norm(&op, &rho).unwrap() - 2.0).abs() < 1e-14);
        let zero = DensityState::zero(op.space().clone());
        assert_eq!(rho_energy(&op, &zero).unwrap(), 0.0);
        assert!(matches!(rho_expectation(&op, &zero), Err(Error::ZeroState)));
    }

    #[test]
    fn pure_state_matches_vector() {
        let op = families::path(4).unwrap();
        let f = DVector::from_vec(vec![0.3, -1.0, 0.2, 0.7]);
        let rho = DensityState::pure(op.space().clone(), &f).unwrap();
        assert!((rho.trace() - f.norm_squared()).abs() < 1e-14);
        assert!((rho.norm() - f.norm_squared()).abs() < 1e-12);
        assert!((rho_energy(&op, &rho).unwrap() - energy(&op, &f).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn kernel_projection() {
        let op = families::complete(2).unwrap();
        let f = DVector::from_vec(vec![1.0, 0.0]);
        let rho = DensityState::pure(op.space().clone(), &f).unwrap();
        let (p, residual) = rho.project_out_kernel(&op).unwrap();
        assert!((p.trace() - 0.5).abs() < 1e-14);
        assert!(residual > 0.5);
        let constants = DensityState::from_kernel(&op.projector(Flavor::Closed, 0.0)).unwrap();
        assert!(matches!(constants.project_out_kernel(&op), Err(Error::StateInKernel)));
    }

    #[test]
    fn rejects_non_positive() {
        let space = MeasureSpace::counting(2, 1).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(DensityState::from_kernel_matrix(space, m), Err(Error::NotPositive(_))));
    }
}
