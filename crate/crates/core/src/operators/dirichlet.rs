use nalgebra::{DMatrix, DVector};

use super::spectral::{sym_eigen, within, SpectralOperator};
use crate::error::Result;
use crate::profiles::MonotoneProfile;

/// Admissible test space for Dirichlet counting on a region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DirichletSpace {
    /// All vectors supported in the region.
    Supported,
    /// Vectors supported in the region and orthogonal to `ker A`.
    KernelFree,
}

/// Eigenvalues of the energy form compressed to vectors supported in
/// `region`, against the weighted mass; ascending, with values below the
/// kernel threshold set to zero.
pub fn dirichlet_eigenvalues(op: &SpectralOperator, region: &[usize], space: DirichletSpace) -> Result<Vec<f64>> {
    Ok(dirichlet_modes(op, region, space)?.0)
}

/// Dirichlet eigenvalues with eigenvectors, as columns in the original
/// coordinates (supported in the region, orthonormal for the weighted mass).
pub fn dirichlet_modes(
    op: &SpectralOperator,
    region: &[usize],
    space: DirichletSpace,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let region = op.space().check_region(region)?;
    let coords = op.space().coordinates(&region);
    let m = coords.len();
    // In the symmetric frame the generalized problem is the principal submatrix.
    let s = op.sym_matrix();
    let compressed = DMatrix::from_fn(m, m, |i, j| s[(coords[i], coords[j])]);
    let basis = match space {
        DirichletSpace::Supported => DMatrix::identity(m, m),
        DirichletSpace::KernelFree => {
            let k = op.kernel_dim();
            if k == 0 {
                DMatrix::identity(m, m)
            } else {
                let phi = op.sym_vectors();
                let b = DMatrix::from_fn(m, k, |i, j| phi[(coords[i], j)]);
                orthogonal_complement(&b)
            }
        }
    };
    let n = op.dim();
    if basis.ncols() == 0 {
        return Ok((Vec::new(), DMatrix::zeros(n, 0)));
    }
    let reduced = basis.transpose() * compressed * &basis;
    let eig = sym_eigen(0.5 * (&reduced + reduced.transpose()));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let cutoff = op.kernel_threshold() * op.norm();
    let values = order
        .iter()
        .map(|&c| {
            let v = eig.eigenvalues[c];
            if v <= cutoff {
                0.0
            } else {
                v
            }
        })
        .collect();
    let local = &basis * &eig.eigenvectors;
    let w = op.space().coordinate_weights();
    let mut vectors = DMatrix::zeros(n, order.len());
    for (c, &k) in order.iter().enumerate() {
        for (i, &x) in coords.iter().enumerate() {
            vectors[(x, c)] = local[(i, k)] / w[x].sqrt();
        }
    }
    Ok((values, vectors))
}

/// Orthonormal basis of the orthogonal complement of the column span of `b`.
fn orthogonal_complement(b: &DMatrix<f64>) -> DMatrix<f64> {
    let m = b.nrows();
    // Gram-Schmidt with reorthogonalization; columns whose residual falls
    // below a relative floor are already in the span.
    let scale = (0..b.ncols()).map(|c| b.column(c).norm()).fold(0.0, f64::max);
    let mut span: Vec<DVector<f64>> = Vec::new();
    for c in 0..b.ncols() {
        let mut v = b.column(c).into_owned();
        for _ in 0..2 {
            for u in &span {
                let d = u.dot(&v);
                v.axpy(-d, u, 1.0);
            }
        }
        let n = v.norm();
        if n > 1e-12 * scale {
            span.push(v / n);
        }
    }
    let mut proj = DMatrix::identity(m, m);
    for u in &span {
        proj -= u * u.transpose();
    }
    let eig = sym_eigen(proj);
    let keep: Vec<usize> = (0..m).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    DMatrix::from_fn(m, keep.len(), |i, c| eig.eigenvectors[(i, keep[c])])
}

/// `F_Omega^dim(lambda)`: number of Dirichlet eigenvalues `<= lambda`.
pub fn dirichlet_counting(op: &SpectralOperator, region: &[usize], lambda: f64, space: DirichletSpace) -> Result<usize> {
    let eig = dirichlet_eigenvalues(op, region, space)?;
    Ok(eig.iter().filter(|&&l| within(l, lambda)).count())
}

/// `F_Omega^dim` as a step profile.
pub fn dirichlet_profile(op: &SpectralOperator, region: &[usize], space: DirichletSpace) -> Result<MonotoneProfile> {
    let eig = dirichlet_eigenvalues(op, region, space)?;
    let zeros = eig.iter().filter(|&&l| l == 0.0).count();
    let mut values = Vec::new();
    let mut j = zeros;
    while j < eig.len() {
        let lambda = eig[j];
        let end = j + eig[j..].partition_point(|&l| within(l, lambda));
        values.push((lambda, end as f64));
        j = end;
    }
    MonotoneProfile::step_from_values(zeros as f64, &values)
}
