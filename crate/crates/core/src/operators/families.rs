//! Named operator families, random instances and input formats.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Deserialize;

use super::space::MeasureSpace;
use super::spectral::{SpectralOperator, DEFAULT_KERNEL_THRESHOLD};
use crate::error::{Error, Result};

/// Weighted edge `(u, v, w)`.
pub type Edge = (usize, usize, f64);

/// Form `f^T Q f = sum_edges w |f(u) - f(v)|^2` tensored with `I_h`.
pub fn laplacian_form(n: usize, fiber_dim: usize, edges: &[Edge]) -> Result<DMatrix<f64>> {
    let h = fiber_dim;
    let mut q = DMatrix::zeros(n * h, n * h);
    for &(u, v, w) in edges {
        if u >= n || v >= n {
            return Err(Error::InvalidSpace(format!("edge ({u}, {v}) out of range")));
        }
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::InvalidSpace(format!("edge weight must be nonnegative, got {w}")));
        }
        if u == v {
            continue;
        }
        for a in 0..h {
            let (i, j) = (u * h + a, v * h + a);
            q[(i, i)] += w;
            q[(j, j)] += w;
            q[(i, j)] -= w;
            q[(j, i)] -= w;
        }
    }
    Ok(q)
}

/// Graph Laplacian `(Af)(x) = mu(x)^{-1} sum_y w_xy (f(x) - f(y))`.
pub fn graph_laplacian(space: MeasureSpace, edges: &[Edge]) -> Result<SpectralOperator> {
    let q = laplacian_form(space.len(), space.fiber_dim(), edges)?;
    SpectralOperator::from_form(&q, space, DEFAULT_KERNEL_THRESHOLD)
}

fn unit_graph(n: usize, edges: Vec<Edge>) -> Result<SpectralOperator> {
    graph_laplacian(MeasureSpace::counting(n, 1)?, &edges)
}

pub fn cycle_edges(n: usize) -> Vec<Edge> {
    match n {
        0 | 1 => Vec::new(),
        2 => vec![(0, 1, 1.0)],
        _ => (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect(),
    }
}

/// Laplacian of the cycle `C_n`.
pub fn cycle(n: usize) -> Result<SpectralOperator> {
    unit_graph(n, cycle_edges(n))
}

/// Laplacian of the path on `n` vertices.
pub fn path(n: usize) -> Result<SpectralOperator> {
    unit_graph(n, (1..n).map(|i| (i - 1, i, 1.0)).collect())
}

/// Laplacian of the complete graph `K_n`.
pub fn complete(n: usize) -> Result<SpectralOperator> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            edges.push((i, j, 1.0));
        }
    }
    unit_graph(n, edges)
}

/// Laplacian of the discrete torus `(Z/n)^d`, vertices in lexicographic order.
pub fn torus(n: usize, d: usize) -> Result<SpectralOperator> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidSpace("torus needs n >= 1 and d >= 1".into()));
    }
    let total = n.pow(d as u32);
    let mut edges = Vec::new();
    for v in 0..total {
        let mut stride = 1;
        for _ in 0..d {
            let coord = (v / stride) % n;
            let next = v - coord * stride + ((coord + 1) % n) * stride;
            if n > 2 || (n == 2 && coord == 0) {
                edges.push((v, next, 1.0));
            }
            stride *= n;
        }
    }
    unit_graph(total, edges)
}

/// Circulant Laplacian on `Z/n` with edge weight `c_s` between `i` and `i + s`.
pub fn circulant(n: usize, coefficients: &[f64]) -> Result<SpectralOperator> {
    let mut edges = Vec::new();
    for (k, &c) in coefficients.iter().enumerate() {
        let s = k + 1;
        if 2 * s > n {
            break;
        }
        for i in 0..n {
            if 2 * s == n && i >= s {
                continue;
            }
            edges.push((i, (i + s) % n, c));
        }
    }
    unit_graph(n, edges)
}

/// Parses a family such as `cycle 4`, `path 6`, `complete 3`, `torus 4^2`
/// or `torus 4 2`.
pub fn family(spec: &str) -> Result<SpectralOperator> {
    let mut words = spec.split_whitespace();
    let name = words.next().ok_or_else(|| family_error(spec, 1, "empty family"))?;
    let arg_col = spec.find(|c: char| c.is_ascii_digit()).map(|i| i + 1).unwrap_or(spec.len() + 1);
    let parse = |s: Option<&str>| -> Result<usize> {
        s.and_then(|v| v.trim_start_matches("n=").parse().ok())
            .ok_or_else(|| family_error(spec, arg_col, "expected a positive integer"))
    };
    let rest: Vec<&str> = words.collect();
    match name {
        "cycle" => cycle(parse(rest.first().copied())?),
        "path" => path(parse(rest.first().copied())?),
        "complete" => complete(parse(rest.first().copied())?),
        "torus" => {
            let (n, d) = match rest.as_slice() {
                [nd] if nd.contains('^') => {
                    let (a, b) = nd.split_once('^').unwrap();
                    (parse(Some(a))?, parse(Some(b))?)
                }
                [n, d] => (parse(Some(n))?, parse(Some(d.trim_start_matches("d=")))?),
                _ => return Err(family_error(spec, arg_col, "expected torus N^d")),
            };
            torus(n, d)
        }
        other => Err(family_error(spec, 1, &format!("unknown family {other:?}"))),
    }
}

fn family_error(_spec: &str, column: usize, message: &str) -> Error {
    Error::Parse {
        line: 1,
        column,
        message: message.to_string(),
    }
}

/// Edge list with one `u v weight` triple per line; `#` starts a comment.
/// Vertex labels are kept in order of first appearance, unless all labels
/// are integers, in which case they are sorted numerically.
pub fn parse_edge_list(text: &str) -> Result<SpectralOperator> {
    let mut raw = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let fields: Vec<(usize, &str)> = content
            .split_whitespace()
            .map(|f| (f.as_ptr() as usize - line.as_ptr() as usize + 1, f))
            .collect();
        if fields.len() != 3 {
            let column = fields.get(3).map(|f| f.0).unwrap_or(content.len() + 1);
            return Err(Error::Parse {
                line: i + 1,
                column,
                message: "expected `u v weight`".into(),
            });
        }
        let w: f64 = fields[2].1.parse().map_err(|_| Error::Parse {
            line: i + 1,
            column: fields[2].0,
            message: "weight is not a number".into(),
        })?;
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::Parse {
                line: i + 1,
                column: fields[2].0,
                message: "weight must be finite and nonnegative".into(),
            });
        }
        raw.push((fields[0].1.to_string(), fields[1].1.to_string(), w));
    }
    let mut labels: Vec<String> = Vec::new();
    for (u, v, _) in &raw {
        for l in [u, v] {
            if !labels.contains(l) {
                labels.push(l.clone());
            }
        }
    }
    if labels.iter().all(|l| l.parse::<i64>().is_ok()) {
        labels.sort_by_key(|l| l.parse::<i64>().unwrap());
    }
    let index = |l: &str| labels.iter().position(|x| x == l).unwrap();
    let edges: Vec<Edge> = raw.iter().map(|(u, v, w)| (index(u), index(v), *w)).collect();
    let n = labels.len();
    graph_laplacian(MeasureSpace::new(labels, vec![1.0; n], 1)?, &edges)
}

#[derive(Deserialize)]
struct DenseJson {
    n: usize,
    h: usize,
    weights: Vec<f64>,
    entries: Vec<Vec<f64>>,
}

/// Dense matrix `{n, h, weights, entries}` with `entries` the `nh x nh`
/// matrix of `A` in matrix convention.
pub fn parse_dense_json(text: &str) -> Result<SpectralOperator> {
    let raw: DenseJson = serde_json::from_str(text)?;
    let dim = raw.n * raw.h;
    if raw.entries.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: raw.entries.len(),
        });
    }
    if let Some(row) = raw.entries.iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: row.len(),
        });
    }
    let space = MeasureSpace::weighted(raw.weights, raw.h)?;
    if space.len() != raw.n {
        return Err(Error::DimensionMismatch {
            expected: raw.n,
            got: space.len(),
        });
    }
    let a = DMatrix::from_fn(dim, dim, |i, j| raw.entries[i][j]);
    SpectralOperator::diagonalize(&a, space, DEFAULT_KERNEL_THRESHOLD)
}

/// Erdos-Renyi edges with probability `p` and weights uniform in `[0.2, 2]`.
pub fn random_edges<R: Rng>(rng: &mut R, n: usize, p: f64) -> Vec<Edge> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j, rng.random_range(0.2..2.0)));
            }
        }
    }
    edges
}

/// Weights uniform in `[0.5, 2]`.
pub fn random_weights<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.5..2.0)).collect()
}

/// Random weighted graph Laplacian on a weighted space.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64, weighted: bool) -> Result<SpectralOperator> {
    let weights = if weighted { random_weights(rng, n) } else { vec![1.0; n] };
    let edges = random_edges(rng, n, p);
    graph_laplacian(MeasureSpace::weighted(weights, 1)?, &edges)
}

/// Random connection Laplacian with fiber `R^h`: the form is
/// `sum_edges w |f(u) - T_e f(v)|^2 + sum_x |V_x f(x)|^2` with Gaussian
/// transports `T_e` and potentials `V_x` present with probability 1/2.
pub fn random_block_operator<R: Rng>(rng: &mut R, n: usize, h: usize, p: f64) -> Result<SpectralOperator> {
    let space = MeasureSpace::weighted(random_weights(rng, n), h)?;
    let gauss = |rows: usize, cols: usize, rng: &mut R| {
        DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng)) * (1.0 / (h as f64).sqrt())
    };
    let dim = n * h;
    let mut q = DMatrix::<f64>::zeros(dim, dim);
    for (u, v, w) in random_edges(rng, n, p) {
        let t = gauss(h, h, rng);
        let mut b = DMatrix::zeros(h, dim);
        b.view_mut((0, u * h), (h, h)).copy_from(&DMatrix::identity(h, h));
        b.view_mut((0, v * h), (h, h)).copy_from(&(-t));
        q += w * b.transpose() * b;
    }
    for x in 0..n {
        if rng.random::<bool>() {
            let v = gauss(h, h, rng);
            let mut block = q.view_mut((x * h, x * h), (h, h));
            block += v.transpose() * v;
        }
    }
    SpectralOperator::from_form(&q, space, DEFAULT_KERNEL_THRESHOLD)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn named_families() {
        assert!(close(complete(3).unwrap().eigenvalues(), &[0.0, 3.0, 3.0]));
        assert!(close(cycle(4).unwrap().eigenvalues(), &[0.0, 2.0, 2.0, 4.0]));
        assert!(close(family("cycle 4").unwrap().eigenvalues(), &[0.0, 2.0, 2.0, 4.0]));
        let t = family("torus 3^2").unwrap();
        assert_eq!(t.dim(), 9);
        assert!((t.lambda_max() - 6.0).abs() < 1e-12);
        assert_eq!(family("torus 3 2").unwrap().eigenvalues(), t.eigenvalues());
        assert!(close(circulant(4, &[1.0]).unwrap().eigenvalues(), &[0.0, 2.0, 2.0, 4.0]));
        assert!(close(torus(2, 1).unwrap().eigenvalues(), &[0.0, 2.0]));
    }

    #[test]
    fn family_errors_are_positional() {
        assert_eq!(
            family("cycle x").unwrap_err(),
            Error::Parse { line: 1, column: 8, message: "expected a positive integer".into() }
        );
        assert!(matches!(family("blob 3"), Err(Error::Parse { column: 1, .. })));
    }

    #[test]
    fn edge_list() {
        let op = parse_edge_list("# triangle\n1 2 1\n2 3 1\n3 1 1\n").unwrap();
        assert!(close(op.eigenvalues(), &[0.0, 3.0, 3.0]));
        let err = parse_edge_list("1 2 1\n2 3 x\n").unwrap_err();
        assert_eq!(err, Error::Parse { line: 2, column: 5, message: "weight is not a number".into() });
    }

    #[test]
    fn dense_json() {
        let op = parse_dense_json(r#"{"n": 2, "h": 1, "weights": [1, 1], "entries": [[1, -1], [-1, 1]]}"#).unwrap();
        assert!(close(op.eigenvalues(), &[0.0, 2.0]));
        assert!(parse_dense_json(r#"{"n": 2, "h": 1, "weights": [1, 1], "entries": [[1, -1]]}"#).is_err());
    }

    #[test]
    fn random_block_is_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for h in [1, 2, 3] {
            let op = random_block_operator(&mut rng, 6, h, 0.5).unwrap();
            assert!(op.eigenvalues().iter().all(|&l| l >= 0.0));
            assert!(op.reconstruction_residual() < 1e-8 * op.norm().max(1.0));
        }
    }
}
