use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::expr::TrigPolynomial;
use crate::error::{Error, Result};

type MatrixFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
enum SymbolKind {
    /// `sum_i 2 (1 - cos xi_i)`.
    LatticeLaplacian,
    /// `(sum_i 2 (1 - cos xi_i))^2`.
    DiscreteBilaplacian,
    Trig(TrigPolynomial),
    /// Hermitian (real symmetric) matrix-valued symbol with an upper bound
    /// on its operator norm.
    Matrix { eval: MatrixFn, bound: f64 },
}

/// Symbol `xi -> sigma(xi)` of a translation-invariant operator on `Z^d`
/// with fiber `R^h`, a positive semidefinite `h x h` matrix for every `xi`
/// in the torus `[0, 2 pi)^d`.
#[derive(Clone)]
pub struct TorusSymbol {
    dim: usize,
    fiber_dim: usize,
    kind: SymbolKind,
}

impl fmt::Debug for TorusSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            SymbolKind::LatticeLaplacian => "lattice_laplacian".to_string(),
            SymbolKind::DiscreteBilaplacian => "discrete_bilaplacian".to_string(),
            SymbolKind::Trig(p) => format!("{p:?}"),
            SymbolKind::Matrix { .. } => "matrix".to_string(),
        };
        f.debug_struct("TorusSymbol")
            .field("dim", &self.dim)
            .field("fiber_dim", &self.fiber_dim)
            .field("kind", &kind)
            .finish()
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidSpace("symbol dimension must be positive".into()));
    }
    Ok(())
}

impl TorusSymbol {
    pub fn lattice_laplacian(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(TorusSymbol {
            dim: d,
            fiber_dim: 1,
            kind: SymbolKind::LatticeLaplacian,
        })
    }

    pub fn discrete_bilaplacian(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(TorusSymbol {
            dim: d,
            fiber_dim: 1,
            kind: SymbolKind::DiscreteBilaplacian,
        })
    }

    pub fn trig(p: TrigPolynomial) -> Self {
        TorusSymbol {
            dim: p.dim(),
            fiber_dim: 1,
            kind: SymbolKind::Trig(p),
        }
    }

    /// Parses a trigonometric expression (see [`TrigPolynomial::parse`]).
    pub fn parse(text: &str, dim: Option<usize>) -> Result<Self> {
        Ok(Self::trig(TrigPolynomial::parse(text, dim)?))
    }

    /// Builtin by name: `lattice_laplacian d` or `discrete_bilaplacian d`
    /// (also `d=<n>`).
    pub fn builtin(spec: &str) -> Result<Self> {
        let mut words = spec.split_whitespace();
        let name = words.next().unwrap_or("");
        let arg = words.next().map(|w| w.trim_start_matches("d="));
        let d = arg.and_then(|w| w.parse::<usize>().ok()).ok_or_else(|| Error::Parse {
            line: 1,
            column: name.len() + 2,
            message: "expected a dimension".into(),
        })?;
        match name {
            "lattice_laplacian" => Self::lattice_laplacian(d),
            "discrete_bilaplacian" => Self::discrete_bilaplacian(d),
            other => Err(Error::Parse {
                line: 1,
                column: 1,
                message: format!("unknown symbol {other:?}"),
            }),
        }
    }

    /// Matrix-valued symbol; `bound` must dominate `|sigma(xi)|`.
    pub fn matrix<F>(dim: usize, fiber_dim: usize, bound: f64, eval: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        check_dim(dim)?;
        Ok(TorusSymbol {
            dim,
            fiber_dim,
            kind: SymbolKind::Matrix {
                eval: Arc::new(eval),
                bound,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    /// Upper bound on the spectrum of `sigma(xi)` over the torus.
    pub fn bound(&self) -> f64 {
        let d = self.dim as f64;
        match &self.kind {
            SymbolKind::LatticeLaplacian => 4.0 * d,
            SymbolKind::DiscreteBilaplacian => 16.0 * d * d,
            SymbolKind::Trig(p) => p.bound(),
            SymbolKind::Matrix { bound, .. } => *bound,
        }
    }

    /// `sigma(xi)`.
    pub fn evaluate(&self, xi: &[f64]) -> Result<DMatrix<f64>> {
        if xi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: xi.len(),
            });
        }
        Ok(match &self.kind {
            SymbolKind::Matrix { eval, .. } => eval(xi),
            _ => DMatrix::from_element(1, 1, self.scalar(xi)),
        })
    }

    fn scalar(&self, xi: &[f64]) -> f64 {
        let lap = || xi.iter().map(|x| 2.0 * (1.0 - x.cos())).sum::<f64>();
        match &self.kind {
            SymbolKind::LatticeLaplacian => lap(),
            SymbolKind::DiscreteBilaplacian => lap().powi(2),
            SymbolKind::Trig(p) => p.eval(xi),
            SymbolKind::Matrix { .. } => unreachable!(),
        }
    }

    /// Eigenvalues of `sigma(xi)` appended to `out`.
    pub(crate) fn eigenvalues_into(&self, xi: &[f64], out: &mut Vec<f64>) {
        match &self.kind {
            SymbolKind::Matrix { eval, .. } => out.extend(eval(xi).symmetric_eigenvalues().iter()),
            _ => out.push(self.scalar(xi)),
        }
    }

    /// Per-axis tables `g_i` and a monotone map `phi` with
    /// `sigma(xi) = phi(sum_i g_i(xi_i))`, when the symbol has that form.
    pub(crate) fn separable(&self, points: &[f64]) -> Option<(Vec<Vec<f64>>, Outer)> {
        match &self.kind {
            SymbolKind::LatticeLaplacian | SymbolKind::DiscreteBilaplacian => {
                let table: Vec<f64> = points.iter().map(|x| 2.0 * (1.0 - x.cos())).collect();
                let outer = if matches!(self.kind, SymbolKind::LatticeLaplacian) {
                    Outer::Identity
                } else {
                    Outer::Square
                };
                Some((vec![table; self.dim], outer))
            }
            SymbolKind::Trig(p) => p.axis_tables(points).map(|t| (t, Outer::Identity)),
            SymbolKind::Matrix { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Outer {
    Identity,
    /// `s -> s^2` on `s >= 0`.
    Square,
}
