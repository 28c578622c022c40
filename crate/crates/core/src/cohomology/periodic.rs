use std::collections::{BTreeMap, BTreeSet, HashMap};

use nalgebra::{Complex, DMatrix};

use super::simplicial::{faces, SimplicialComplex};
use crate::error::{Error, Result};
use crate::invariant::density::{assemble, check_grid, normalize, thresholds};
use crate::invariant::{grid_counts, GridProfile};

/// Vertex of the covering: a vertex of the quotient and a lattice translate.
pub type Lift = (usize, Vec<i64>);

/// Nonzero entry of a twisted coboundary: `d(xi)[row, col] += sign e^{i xi.shift}`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct TwistEntry {
    col: usize,
    shift: Vec<i64>,
    sign: i64,
}

/// Simplicial complex with a free cocompact action of `Z^d` by
/// translations, stored as one representative per orbit of simplices.
///
/// Representatives list their lifted vertices sorted by `(vertex, shift)`
/// with the first shift equal to zero. Translations preserve that order, so
/// orientations are translation invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicComplex {
    lattice_dim: usize,
    cells: Vec<Vec<Vec<Lift>>>,
    index: Vec<HashMap<Vec<Lift>, usize>>,
    /// `entries[k][row]` for `d_k`.
    entries: Vec<Vec<Vec<TwistEntry>>>,
}

/// Representative of the orbit of a lifted simplex and the translation
/// carrying it back to the simplex.
fn orbit_rep(mut s: Vec<Lift>) -> (Vec<Lift>, Vec<i64>) {
    s.sort();
    let base = s[0].1.clone();
    for (_, shift) in s.iter_mut() {
        shift.iter_mut().zip(&base).for_each(|(a, b)| *a -= b);
    }
    (s, base)
}

impl PeriodicComplex {
    /// Closes the given lifted simplices under faces and translations.
    pub fn new(lattice_dim: usize, simplices: impl IntoIterator<Item = Vec<Lift>>) -> Result<Self> {
        if lattice_dim == 0 {
            return Err(Error::InvalidComplex("lattice dimension must be positive".into()));
        }
        let mut by_degree: Vec<BTreeSet<Vec<Lift>>> = Vec::new();
        for s in simplices {
            if s.is_empty() {
                return Err(Error::InvalidComplex("empty simplex".into()));
            }
            if let Some((_, v)) = s.iter().find(|(_, v)| v.len() != lattice_dim) {
                return Err(Error::InvalidComplex(format!(
                    "lattice vector {v:?} does not have dimension {lattice_dim}"
                )));
            }
            let (rep, _) = orbit_rep(s);
            if rep.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidComplex(format!("repeated vertex in simplex {rep:?}")));
            }
            let n = rep.len();
            for mask in 1u64..(1u64 << n) {
                let face: Vec<Lift> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| rep[i].clone()).collect();
                let k = face.len() - 1;
                if by_degree.len() <= k {
                    by_degree.resize(k + 1, BTreeSet::new());
                }
                by_degree[k].insert(orbit_rep(face).0);
            }
        }
        if by_degree.is_empty() {
            return Err(Error::InvalidComplex("no simplices".into()));
        }
        let cells: Vec<Vec<Vec<Lift>>> = by_degree.into_iter().map(|d| d.into_iter().collect()).collect();
        let index: Vec<HashMap<Vec<Lift>, usize>> = cells
            .iter()
            .map(|d| d.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect())
            .collect();
        let entries = (0..cells.len())
            .map(|k| {
                cells
                    .get(k + 1)
                    .map(|rows| {
                        rows.iter()
                            .map(|s| {
                                faces_of(s)
                                    .map(|(f, sign)| {
                                        let (rep, shift) = orbit_rep(f);
                                        TwistEntry {
                                            col: index[k][&rep],
                                            shift,
                                            sign,
                                        }
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .unwrap_or_default()
            })
            .collect();
        let out = PeriodicComplex {
            lattice_dim,
            cells,
            index,
            entries,
        };
        for k in 0..out.cells.len() {
            out.check_nilpotent(k)?;
        }
        Ok(out)
    }

    /// The line `Z` with one vertex and one edge per cell.
    pub fn line() -> Self {
        Self::grid(1).expect("valid grid")
    }

    /// The square lattice graph `Z^d` as a 1-complex.
    pub fn grid(d: usize) -> Result<Self> {
        let edges = (0..d).map(|i| {
            let mut e = vec![0; d];
            e[i] = 1;
            vec![(0, vec![0; d]), (0, e)]
        });
        Self::new(d, edges)
    }

    pub fn lattice_dim(&self) -> usize {
        self.lattice_dim
    }

    pub fn dim(&self) -> usize {
        self.cells.len() - 1
    }

    /// Number of orbits of `k`-simplices.
    pub fn count(&self, k: usize) -> usize {
        self.cells.get(k).map_or(0, Vec::len)
    }

    pub fn representatives(&self, k: usize) -> &[Vec<Lift>] {
        self.cells.get(k).map_or(&[], Vec::as_slice)
    }

    pub fn position(&self, s: &[Lift]) -> Option<usize> {
        self.index.get(s.len().checked_sub(1)?)?.get(&orbit_rep(s.to_vec()).0).copied()
    }

    fn check_degree(&self, k: usize) -> Result<()> {
        if k >= self.cells.len() {
            return Err(Error::InvalidComplex(format!("no simplices of degree {k}")));
        }
        Ok(())
    }

    /// Exact check of `d_{k+1}(xi) d_k(xi) = 0` for all `xi` at once, in the
    /// integer group ring of the lattice.
    pub fn check_nilpotent(&self, k: usize) -> Result<()> {
        self.check_degree(k)?;
        let Some(outer) = self.entries.get(k + 1) else {
            return Ok(());
        };
        for (row, first) in outer.iter().enumerate() {
            let mut acc: BTreeMap<(usize, Vec<i64>), i64> = BTreeMap::new();
            for a in first {
                for b in &self.entries[k][a.col] {
                    let shift: Vec<i64> = a.shift.iter().zip(&b.shift).map(|(x, y)| x + y).collect();
                    *acc.entry((b.col, shift)).or_default() += a.sign * b.sign;
                }
            }
            if acc.values().any(|&v| v != 0) {
                return Err(Error::InvalidComplex(format!(
                    "twisted d_{} d_{k} is not zero at row {row}",
                    k + 1
                )));
            }
        }
        Ok(())
    }

    fn check_xi(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.lattice_dim {
            return Err(Error::DimensionMismatch {
                expected: self.lattice_dim,
                got: xi.len(),
            });
        }
        Ok(())
    }

    /// Twisted coboundary `d_k(xi)` acting on Bloch cochains
    /// `f(s + gamma) = e^{i xi.gamma} f(s)`.
    pub fn twisted_coboundary(&self, k: usize, xi: &[f64]) -> Result<DMatrix<Complex<f64>>> {
        self.check_degree(k)?;
        self.check_xi(xi)?;
        Ok(self.twisted(k, xi))
    }

    fn twisted(&self, k: usize, xi: &[f64]) -> DMatrix<Complex<f64>> {
        let rows = &self.entries[k];
        let mut d = DMatrix::zeros(rows.len(), self.count(k));
        for (r, row) in rows.iter().enumerate() {
            for e in row {
                let phase: f64 = e.shift.iter().zip(xi).map(|(&s, x)| s as f64 * x).sum();
                d[(r, e.col)] += Complex::from_polar(e.sign as f64, phase);
            }
        }
        d
    }

    /// `A(xi) = d_k(xi)^* d_k(xi)`.
    pub fn twisted_laplacian(&self, k: usize, xi: &[f64]) -> Result<DMatrix<Complex<f64>>> {
        let d = self.twisted_coboundary(k, xi)?;
        Ok(d.adjoint() * d)
    }

    /// Eigenvalues of `A(xi)` appended to `out`.
    fn eigenvalues_into(&self, k: usize, xi: &[f64], out: &mut Vec<f64>) {
        let d = self.twisted(k, xi);
        if d.ncols() == 1 {
            out.push(d.iter().map(|z| z.norm_sqr()).sum());
        } else {
            out.extend((d.adjoint() * d).symmetric_eigenvalues().iter());
        }
    }

    /// Bound on `|A(xi)|` for every `xi`: the largest row sum of `|D|^T |D|`
    /// with `|D|` the entrywise absolute incidence counts.
    pub fn laplacian_bound(&self, k: usize) -> Result<f64> {
        self.check_degree(k)?;
        let n = self.count(k);
        let mut abs = DMatrix::<f64>::zeros(self.entries[k].len(), n);
        for (r, row) in self.entries[k].iter().enumerate() {
            for e in row {
                abs[(r, e.col)] += e.sign.abs() as f64;
            }
        }
        let gram = abs.transpose() * abs;
        Ok(gram.row_iter().map(|r| r.sum()).fold(0.0, f64::max))
    }

    /// Quotient by the sublattice `n Z^d`: a finite complex with `n^d`
    /// fundamental domains. Errors when `n` is too small for the quotient
    /// to stay simplicial.
    pub fn truncation(&self, n: usize) -> Result<SimplicialComplex> {
        if n == 0 {
            return Err(Error::NonPositiveArgument(0.0));
        }
        let d = self.lattice_dim;
        let copies = n.checked_pow(d as u32).ok_or_else(|| Error::InvalidComplex("truncation too large".into()))?;
        let vertex = |(v, shift): &Lift, base: &[i64]| {
            let mut id = 0usize;
            for (s, b) in shift.iter().zip(base) {
                id = id * n + (s + b).rem_euclid(n as i64) as usize;
            }
            v * copies + id
        };
        let mut all = Vec::new();
        for reps in &self.cells {
            for rep in reps {
                for c in 0..copies {
                    let mut base = vec![0i64; d];
                    let mut rest = c;
                    for slot in base.iter_mut().rev() {
                        *slot = (rest % n) as i64;
                        rest /= n;
                    }
                    all.push(rep.iter().map(|l| vertex(l, &base)).collect::<Vec<_>>());
                }
            }
        }
        let cx = SimplicialComplex::new(all).map_err(|e| match e {
            Error::InvalidComplex(m) => Error::InvalidComplex(format!("truncation size {n} is too small: {m}")),
            e => e,
        })?;
        for k in 0..self.cells.len() {
            if cx.count(k) != self.count(k) * copies {
                return Err(Error::InvalidComplex(format!(
                    "truncation size {n} is too small: {k}-simplices collapse"
                )));
            }
        }
        Ok(cx)
    }

    /// `F(lambda) = (2 pi)^{-d} int #{eigenvalues of A(xi) in ]0, lambda]} dxi`
    /// for `A = d_k^* d_k`, the trace of the spectral projector per
    /// fundamental domain, by the midpoint rule with `resolution` points per
    /// axis. The error estimate compares with half the resolution.
    pub fn floquet_density_profile(
        &self,
        k: usize,
        resolution: usize,
        lambda_grid: &[f64],
        tolerance: Option<f64>,
    ) -> Result<GridProfile> {
        self.check_degree(k)?;
        check_grid(lambda_grid)?;
        if resolution < 8 || resolution % 2 != 0 {
            return Err(Error::InvalidProfile(format!("resolution must be even and >= 8, got {resolution}")));
        }
        let t = thresholds(lambda_grid, self.laplacian_bound(k)?.max(1.0));
        let values = |r: usize| {
            let counts = grid_counts(self.lattice_dim, r, &t, |xi, out| self.eigenvalues_into(k, xi, out));
            normalize(&counts, (r as f64).powi(self.lattice_dim as i32))
        };
        assemble(lambda_grid, values(resolution), values(resolution / 2), resolution, tolerance)
    }
}

fn faces_of(s: &[Lift]) -> impl Iterator<Item = (Vec<Lift>, i64)> + '_ {
    let ids: Vec<usize> = (0..s.len()).collect();
    faces(&ids)
        .map(|(f, sign)| (f.into_iter().map(|i| s[i].clone()).collect(), sign))
        .collect::<Vec<_>>()
        .into_iter()
}

/// Largest grid value below which the profile vanishes, if any: a lower
/// bound on the spectral gap above zero. `None` means zero is not isolated
/// at the resolution of the grid.
pub fn gap_below(profile: &GridProfile, lambda_grid: &[f64]) -> Result<Option<f64>> {
    let mut gap = None;
    for &l in lambda_grid {
        if profile.profile.evaluate(l)? > 0.0 {
            break;
        }
        gap = Some(l);
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariant::{fit_grid, ns_exponent_fit};
    use std::f64::consts::PI;

    #[test]
    fn line_symbol() {
        let line = PeriodicComplex::line();
        assert_eq!((line.count(0), line.count(1)), (1, 1));
        let a = line.twisted_laplacian(0, &[0.7]).unwrap();
        assert!((a[(0, 0)].re - (2.0 - 2.0 * 0.7f64.cos())).abs() < 1e-14);
        assert_eq!(line.laplacian_bound(0).unwrap(), 4.0);
    }

    #[test]
    fn line_density_matches_arccos() {
        let grid: Vec<f64> = (1..=39).map(|i| 0.1 * i as f64).collect();
        let g = PeriodicComplex::line().floquet_density_profile(0, 4096, &grid, Some(1e-3)).unwrap();
        for &l in &grid {
            let want = (1.0 - l / 2.0).acos() / PI;
            assert!((g.profile.evaluate(l).unwrap() - want).abs() < 1e-3, "{l}");
        }
        assert!((g.profile.evaluate(2.0).unwrap() - 0.5).abs() < 1e-3);
    }

    #[test]
    fn square_grid_exponent() {
        let window = (1e-2, 1e-1);
        let grid = fit_grid(window);
        let g = PeriodicComplex::grid(2).unwrap().floquet_density_profile(0, 512, &grid, None).unwrap();
        let fit = ns_exponent_fit(&g.profile, window).unwrap();
        assert!((fit.exponent - 1.0).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn full_count_above_spectrum() {
        // Without triangles d_1 vanishes and every edge cochain is in the kernel.
        let g = PeriodicComplex::grid(2).unwrap().floquet_density_profile(1, 16, &[1.0, 9.0], None).unwrap();
        assert_eq!(g.profile.evaluate(9.0).unwrap(), 0.0);
        let e = |a: i64, b: i64| (0usize, vec![a, b]);
        let plane = PeriodicComplex::new(2, [vec![e(0, 0), e(1, 0), e(1, 1)], vec![e(0, 0), e(0, 1), e(1, 1)]]).unwrap();
        let top = plane.laplacian_bound(1).unwrap();
        let g = plane.floquet_density_profile(1, 16, &[top], None).unwrap();
        assert_eq!(g.profile.evaluate(top).unwrap(), 2.0);
        let g = PeriodicComplex::grid(2).unwrap().floquet_density_profile(0, 16, &[9.0], None).unwrap();
        assert_eq!(g.profile.evaluate(9.0).unwrap(), 1.0);
    }

    #[test]
    fn triangulated_plane_is_nilpotent() {
        let e = |a: i64, b: i64| (0usize, vec![a, b]);
        let plane = PeriodicComplex::new(
            2,
            [vec![e(0, 0), e(1, 0), e(1, 1)], vec![e(0, 0), e(0, 1), e(1, 1)]],
        )
        .unwrap();
        assert_eq!((plane.count(0), plane.count(1), plane.count(2)), (1, 3, 2));
        for k in 0..=2 {
            plane.check_nilpotent(k).unwrap();
        }
        let xi = [0.3, -1.1];
        let d0 = plane.twisted_coboundary(0, &xi).unwrap();
        let d1 = plane.twisted_coboundary(1, &xi).unwrap();
        assert!((d1 * d0).iter().all(|z| z.norm() < 1e-14));
        let torus = plane.truncation(3).unwrap();
        assert_eq!(torus.harmonic_dim(1).unwrap(), 2);
    }

    #[test]
    fn truncation_of_line_is_cycle() {
        let c = PeriodicComplex::line().truncation(5).unwrap();
        assert_eq!((c.count(0), c.count(1)), (5, 5));
        assert_eq!(c.harmonic_dim(1).unwrap(), 1);
        assert!(PeriodicComplex::line().truncation(2).is_err());
    }

    #[test]
    fn finite_quotients_converge() {
        let grid = [0.3, 1.0, 2.5];
        let limit = PeriodicComplex::line().floquet_density_profile(0, 4096, &grid, None).unwrap();
        let mut last = f64::INFINITY;
        for n in [16, 64, 256] {
            let f = PeriodicComplex::line().truncation(n).unwrap().spectral_profile(0, n as f64).unwrap();
            let gap = grid
                .iter()
                .map(|&l| (f.evaluate(l).unwrap() - limit.profile.evaluate(l).unwrap()).abs())
                .fold(0.0, f64::max);
            assert!(gap < last, "{n}: {gap} >= {last}");
            last = gap;
        }
        assert!(last < 1e-2);
    }

    #[test]
    fn gap_detection() {
        let line = PeriodicComplex::line();
        let grid = [0.01, 0.1, 1.0];
        let g = line.floquet_density_profile(0, 64, &grid, None).unwrap();
        assert_eq!(gap_below(&g, &grid).unwrap(), None);
        // Disjoint translates of one edge: the spectrum is {0, 2} at every xi.
        let edges = PeriodicComplex::new(1, [vec![(0, vec![0]), (1, vec![0])]]).unwrap();
        let g = edges.floquet_density_profile(0, 64, &grid, None).unwrap();
        assert_eq!(gap_below(&g, &grid).unwrap(), Some(1.0));
    }
}
