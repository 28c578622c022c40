use std::collections::{BTreeSet, HashMap};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operators::spectral::sym_eigenvalues;
use crate::operators::{MeasureSpace, SpectralOperator, DEFAULT_KERNEL_THRESHOLD};
use crate::profiles::MonotoneProfile;

/// Finite abstract simplicial complex. Simplices are sorted vertex tuples,
/// oriented by increasing vertex order.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplicialComplex {
    simplices: Vec<Vec<Vec<usize>>>,
    index: Vec<HashMap<Vec<usize>, usize>>,
}

fn normalize(mut s: Vec<usize>) -> Result<Vec<usize>> {
    if s.is_empty() {
        return Err(Error::InvalidComplex("empty simplex".into()));
    }
    s.sort_unstable();
    if s.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidComplex(format!("repeated vertex in simplex {s:?}")));
    }
    Ok(s)
}

/// Faces `s \ s[i]` with their incidence signs `(-1)^i`.
pub(crate) fn faces(s: &[usize]) -> impl Iterator<Item = (Vec<usize>, i64)> + '_ {
    (0..s.len()).map(move |i| {
        let mut f = s.to_vec();
        f.remove(i);
        (f, if i % 2 == 0 { 1 } else { -1 })
    })
}

impl SimplicialComplex {
    /// Complex from a face-closed list of simplices.
    pub fn new(simplices: impl IntoIterator<Item = Vec<usize>>) -> Result<Self> {
        let mut by_degree: Vec<BTreeSet<Vec<usize>>> = Vec::new();
        for s in simplices {
            let s = normalize(s)?;
            let k = s.len() - 1;
            if by_degree.len() <= k {
                by_degree.resize(k + 1, BTreeSet::new());
            }
            by_degree[k].insert(s);
        }
        if by_degree.is_empty() {
            return Err(Error::InvalidComplex("no simplices".into()));
        }
        for k in 1..by_degree.len() {
            for s in &by_degree[k] {
                for (f, _) in faces(s) {
                    if !by_degree[k - 1].contains(&f) {
                        return Err(Error::InvalidComplex(format!("face {f:?} of {s:?} is missing")));
                    }
                }
            }
        }
        let simplices: Vec<Vec<Vec<usize>>> = by_degree.into_iter().map(|d| d.into_iter().collect()).collect();
        let index = simplices
            .iter()
            .map(|d| d.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect())
            .collect();
        Ok(SimplicialComplex { simplices, index })
    }

    /// Smallest complex containing the given simplices.
    pub fn closure(simplices: impl IntoIterator<Item = Vec<usize>>) -> Result<Self> {
        let mut all = BTreeSet::new();
        for s in simplices {
            let s = normalize(s)?;
            let n = s.len();
            for mask in 1u64..(1u64 << n) {
                all.insert((0..n).filter(|i| mask >> i & 1 == 1).map(|i| s[i]).collect::<Vec<_>>());
            }
        }
        Self::new(all)
    }

    /// Top degree.
    pub fn dim(&self) -> usize {
        self.simplices.len() - 1
    }

    /// Number of `k`-simplices (zero above the top degree).
    pub fn count(&self, k: usize) -> usize {
        self.simplices.get(k).map_or(0, Vec::len)
    }

    pub fn simplices(&self, k: usize) -> &[Vec<usize>] {
        self.simplices.get(k).map_or(&[], Vec::as_slice)
    }

    pub fn position(&self, s: &[usize]) -> Option<usize> {
        self.index.get(s.len().checked_sub(1)?)?.get(s).copied()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.simplices
            .iter()
            .enumerate()
            .map(|(k, d)| if k % 2 == 0 { d.len() as i64 } else { -(d.len() as i64) })
            .sum()
    }

    fn check_degree(&self, k: usize) -> Result<()> {
        if k >= self.simplices.len() {
            return Err(Error::InvalidComplex(format!("no simplices of degree {k}")));
        }
        Ok(())
    }

    /// Integer coboundary `d_k`, rows indexed by `(k+1)`-simplices and
    /// columns by `k`-simplices; empty above the top degree.
    pub fn coboundary_integer(&self, k: usize) -> Result<DMatrix<i64>> {
        self.check_degree(k)?;
        let rows = self.simplices(k + 1);
        let mut d = DMatrix::zeros(rows.len(), self.count(k));
        for (r, s) in rows.iter().enumerate() {
            for (f, sign) in faces(s) {
                d[(r, self.index[k][&f])] = sign;
            }
        }
        Ok(d)
    }

    pub fn coboundary(&self, k: usize) -> Result<DMatrix<f64>> {
        Ok(self.coboundary_integer(k)?.map(|v| v as f64))
    }

    /// Errors unless `d_{k+1} d_k = 0` exactly.
    pub fn check_nilpotent(&self, k: usize) -> Result<()> {
        self.check_degree(k)?;
        if k + 1 >= self.simplices.len() {
            return Ok(());
        }
        let product = self.coboundary_integer(k + 1)? * self.coboundary_integer(k)?;
        if product.iter().any(|&v| v != 0) {
            return Err(Error::InvalidComplex(format!("d_{} d_{k} is not zero", k + 1)));
        }
        Ok(())
    }

    /// `A = d_k^* d_k` on `k`-cochains with the counting measure; its kernel
    /// is `ker d_k` and the operator is positive on the complement.
    pub fn up_laplacian(&self, k: usize) -> Result<SpectralOperator> {
        self.check_nilpotent(k)?;
        let d = self.coboundary(k)?;
        let names = self.simplices(k).iter().map(|s| simplex_name(s)).collect();
        let space = MeasureSpace::new(names, vec![1.0; self.count(k)], 1)?;
        SpectralOperator::diagonalize(&(d.transpose() * &d), space, DEFAULT_KERNEL_THRESHOLD)
    }

    /// Hodge Laplacian `d_{k-1} d_{k-1}^* + d_k^* d_k`.
    pub fn hodge_laplacian(&self, k: usize) -> Result<DMatrix<f64>> {
        let up = self.coboundary(k)?;
        let mut l = up.transpose() * &up;
        if k > 0 {
            let down = self.coboundary(k - 1)?;
            l += &down * down.transpose();
        }
        Ok(l)
    }

    /// Dimension of the harmonic `k`-cochains, the `k`-th Betti number.
    pub fn harmonic_dim(&self, k: usize) -> Result<usize> {
        let n = self.count(k);
        if n == 0 {
            return Ok(0);
        }
        let eig = sym_eigenvalues(self.hodge_laplacian(k)?);
        let cutoff = DEFAULT_KERNEL_THRESHOLD * eig.amax();
        Ok(eig.iter().filter(|&&l| l <= cutoff).count())
    }

    /// `lambda -> #{eigenvalues of d_k^* d_k in ]0, lambda]} / cells`, the
    /// trace per fundamental domain when the complex has `cells` of them.
    pub fn spectral_profile(&self, k: usize, cells: f64) -> Result<MonotoneProfile> {
        if !(cells > 0.0) {
            return Err(Error::NonPositiveArgument(cells));
        }
        let op = self.up_laplacian(k)?;
        let mut start = op.kernel_dim();
        let steps: Vec<(f64, f64)> = op
            .clusters()
            .into_iter()
            .map(|(lambda, end)| {
                let inc = (end - start) as f64 / cells;
                start = end;
                (lambda, inc)
            })
            .collect();
        MonotoneProfile::step(0.0, &steps)
    }
}

pub(crate) fn simplex_name(s: &[usize]) -> String {
    s.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
}

/// Cycle graph on `n` vertices as a 1-complex.
pub fn circle(n: usize) -> Result<SimplicialComplex> {
    if n < 3 {
        return Err(Error::InvalidComplex(format!("a circle needs at least 3 vertices, got {n}")));
    }
    SimplicialComplex::closure((0..n).map(|i| vec![i, (i + 1) % n]))
}

/// Triangulated torus from an `n x n` grid, `n >= 3`.
pub fn torus(n: usize) -> Result<SimplicialComplex> {
    if n < 3 {
        return Err(Error::InvalidComplex(format!("torus grid needs n >= 3, got {n}")));
    }
    let v = |i: usize, j: usize| (i % n) * n + j % n;
    let mut tri = Vec::new();
    for i in 0..n {
        for j in 0..n {
            tri.push(vec![v(i, j), v(i + 1, j), v(i + 1, j + 1)]);
            tri.push(vec![v(i, j), v(i, j + 1), v(i + 1, j + 1)]);
        }
    }
    SimplicialComplex::closure(tri)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_boundary() {
        let cx = circle(3).unwrap();
        let d0 = cx.coboundary(0).unwrap();
        assert_eq!(d0.rank(1e-10), 2);
        let op = cx.up_laplacian(0).unwrap();
        let eig = op.eigenvalues();
        assert_eq!(eig[0], 0.0);
        assert!((eig[1] - 3.0).abs() < 1e-12 && (eig[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_edge() {
        let cx = SimplicialComplex::closure([vec![0, 1]]).unwrap();
        let op = cx.up_laplacian(0).unwrap();
        assert_eq!(op.eigenvalues()[0], 0.0);
        assert!((op.eigenvalues()[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn betti_numbers() {
        assert_eq!(circle(6).unwrap().harmonic_dim(1).unwrap(), 1);
        let tree = SimplicialComplex::closure([vec![0, 1], vec![1, 2], vec![1, 3], vec![3, 4]]).unwrap();
        assert_eq!(tree.harmonic_dim(1).unwrap(), 0);
        assert_eq!(tree.harmonic_dim(0).unwrap(), 1);
        let t = torus(3).unwrap();
        assert_eq!(t.euler_characteristic(), 0);
        assert_eq!(t.harmonic_dim(0).unwrap(), 1);
        assert_eq!(t.harmonic_dim(1).unwrap(), 2);
        assert_eq!(t.harmonic_dim(2).unwrap(), 1);
    }

    #[test]
    fn coboundary_squares_to_zero() {
        let t = torus(4).unwrap();
        for k in 0..=t.dim() {
            t.check_nilpotent(k).unwrap();
        }
        let solid = SimplicialComplex::closure([vec![0, 1, 2, 3]]).unwrap();
        let d = solid.coboundary_integer(1).unwrap() * solid.coboundary_integer(0).unwrap();
        assert!(d.iter().all(|&v| v == 0));
        assert_eq!(solid.harmonic_dim(2).unwrap(), 0);
    }

    #[test]
    fn missing_face_is_rejected() {
        let err = SimplicialComplex::new([vec![0], vec![1], vec![0, 1, 2]]).unwrap_err();
        assert!(matches!(err, Error::InvalidComplex(_)));
        assert!(SimplicialComplex::new([vec![0, 0]]).is_err());
    }

    #[test]
    fn cycle_profile_counts_modes() {
        let f = circle(4).unwrap().spectral_profile(0, 4.0).unwrap();
        assert_eq!(f.evaluate(2.0).unwrap(), 0.5);
        assert_eq!(f.evaluate(4.0).unwrap(), 0.75);
    }
}
