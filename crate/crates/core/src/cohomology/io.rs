//! Text format for complexes.
//!
//! ```text
//! # the line Z: one edge between a vertex and its translate
//! 0 1
//! 1 -> 0 + (1)
//! ```
//!
//! Each line is either a simplex, given by its vertices, or an
//! identification `v -> w + (n_1, ..., n_d)` declaring vertex `v` to be the
//! translate of `w` by a lattice vector. `→` may replace `->`; the vector's
//! parentheses and commas are optional. Faces of listed simplices are added
//! automatically. Without identifications the complex is finite.

use std::collections::BTreeMap;

use super::periodic::{Lift, PeriodicComplex};
use super::simplicial::SimplicialComplex;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum ComplexFile {
    Finite(SimplicialComplex),
    Periodic(PeriodicComplex),
}

fn err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Integer tokens of a whitespace or comma separated list, with columns.
fn integers<T: std::str::FromStr>(text: &str, line: usize, offset: usize) -> Result<Vec<T>> {
    let mut out = Vec::new();
    let mut start = None;
    let bytes = text.as_bytes();
    for i in 0..=bytes.len() {
        let sep = i == bytes.len() || bytes[i].is_ascii_whitespace() || bytes[i] == b',';
        match (sep, start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                let token = &text[s..i];
                out.push(
                    token
                        .parse()
                        .map_err(|_| err(line, offset + s + 1, format!("expected an integer, found {token:?}")))?,
                );
                start = None;
            }
            _ => {}
        }
    }
    Ok(out)
}

struct Identification {
    target: usize,
    shift: Vec<i64>,
    line: usize,
}

pub fn parse_complex(text: &str) -> Result<ComplexFile> {
    let mut simplices: Vec<(Vec<usize>, usize)> = Vec::new();
    let mut ids: BTreeMap<usize, Identification> = BTreeMap::new();
    let mut lattice_dim: Option<usize> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let arrow = body.find("->").map(|p| (p, 2)).or_else(|| body.find('→').map(|p| (p, '→'.len_utf8())));
        let Some((pos, width)) = arrow else {
            let vertices = integers::<usize>(body, line, 0)?;
            simplices.push((vertices, line));
            continue;
        };
        let source = integers::<usize>(&body[..pos], line, 0)?;
        let [source] = source[..] else {
            return Err(err(line, 1, "expected one vertex before the arrow"));
        };
        let rhs_at = pos + width;
        let rhs = &body[rhs_at..];
        let Some(plus) = rhs.find('+') else {
            return Err(err(line, rhs_at + 1, "expected `vertex + lattice-vector`"));
        };
        let target = integers::<usize>(&rhs[..plus], line, rhs_at)?;
        let [target] = target[..] else {
            return Err(err(line, rhs_at + 1, "expected one vertex after the arrow"));
        };
        let vector_at = rhs_at + plus + 1;
        let vector = rhs[plus + 1..].replace(['(', ')', '[', ']'], " ");
        let shift = integers::<i64>(&vector, line, vector_at)?;
        if shift.is_empty() {
            return Err(err(line, vector_at + 1, "empty lattice vector"));
        }
        match lattice_dim {
            None => lattice_dim = Some(shift.len()),
            Some(d) if d != shift.len() => {
                return Err(err(
                    line,
                    vector_at + 1,
                    format!("lattice vector has dimension {}, expected {d}", shift.len()),
                ));
            }
            _ => {}
        }
        if ids.insert(source, Identification { target, shift, line }).is_some() {
            return Err(err(line, 1, format!("vertex {source} is identified twice")));
        }
    }
    let Some(d) = lattice_dim else {
        return Ok(ComplexFile::Finite(SimplicialComplex::closure(
            simplices.into_iter().map(|(s, _)| s),
        )?));
    };
    let resolve = |v: usize| -> Result<Lift> {
        let mut at = v;
        let mut shift = vec![0i64; d];
        let mut steps = 0;
        while let Some(id) = ids.get(&at) {
            steps += 1;
            if steps > ids.len() {
                return Err(err(id.line, 1, format!("identifications of vertex {v} form a cycle")));
            }
            shift.iter_mut().zip(&id.shift).for_each(|(a, b)| *a += b);
            at = id.target;
        }
        Ok((at, shift))
    };
    let mut lifted = Vec::with_capacity(simplices.len());
    for (s, line) in simplices {
        let lift: Vec<Lift> = s.iter().map(|&v| resolve(v)).collect::<Result<_>>()?;
        let mut sorted = lift.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(err(line, 1, "simplex has two vertices identified with each other"));
        }
        lifted.push(lift);
    }
    Ok(ComplexFile::Periodic(PeriodicComplex::new(d, lifted)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_file() {
        let ComplexFile::Periodic(p) = parse_complex("# line\n0 1\n1 -> 0 + (1)\n").unwrap() else {
            panic!("expected a periodic complex")
        };
        assert_eq!(p, PeriodicComplex::line());
        let ComplexFile::Periodic(q) = parse_complex("0 1\n1 → 0 + 1").unwrap() else {
            panic!("expected a periodic complex")
        };
        assert_eq!(p, q);
    }

    #[test]
    fn square_grid_file() {
        let text = "0 1\n0 2\n1 -> 0 + (1, 0)\n2 -> 0 + (0, 1)\n";
        let ComplexFile::Periodic(p) = parse_complex(text).unwrap() else {
            panic!("expected a periodic complex")
        };
        assert_eq!(p, PeriodicComplex::grid(2).unwrap());
    }

    #[test]
    fn chained_identifications() {
        let ComplexFile::Periodic(p) = parse_complex("0 1\n1 2\n2 -> 1 + 1\n1 -> 0 + 1\n").unwrap() else {
            panic!("expected a periodic complex")
        };
        assert_eq!(p, PeriodicComplex::line());
    }

    #[test]
    fn finite_file() {
        let ComplexFile::Finite(cx) = parse_complex("0 1 2\n2 3\n").unwrap() else {
            panic!("expected a finite complex")
        };
        assert_eq!((cx.count(0), cx.count(1), cx.count(2)), (4, 4, 1));
    }

    #[test]
    fn positional_errors() {
        let e = parse_complex("0 1\n0 x\n").unwrap_err();
        assert_eq!(
            e,
            Error::Parse {
                line: 2,
                column: 3,
                message: "expected an integer, found \"x\"".into()
            }
        );
        assert!(matches!(parse_complex("0 1\n1 -> 0\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(
            parse_complex("0 1\n1 -> 0 + 1\n1 -> 0 + 2\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_complex("0 1\n1 -> 0 + 1\n2 -> 0 + (1, 1)\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(parse_complex("0 1\n1 -> 0 + 0\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_complex("0 1\n0 -> 1 + 1\n1 -> 0 + 1\n"), Err(Error::Parse { .. })));
    }
}
