//! Trigonometric polynomial symbols `sum c cos(k . xi) + sum c sin(k . xi) + c0`.
//!
//! Grammar (whitespace is free):
//!
//! ```text
//! expr  := ['+' | '-'] term (('+' | '-') term)*
//! term  := number ['*' func] | func
//! func  := ('cos' | 'sin') '(' wave ')'
//! wave  := ['+' | '-'] mono (('+' | '-') mono)*
//! mono  := [integer ['*']] var
//! var   := 'xi' [index] | 'ξ' [index]          (index starts at 1)
//! ```

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrigFunction {
    Const,
    Cos,
    Sin,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrigTerm {
    pub coefficient: f64,
    pub function: TrigFunction,
    /// Integer frequency vector `k`.
    pub wave: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrigPolynomial {
    dim: usize,
    terms: Vec<TrigTerm>,
}

impl TrigPolynomial {
    pub fn new(dim: usize, terms: Vec<TrigTerm>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpace("symbol dimension must be positive".into()));
        }
        let mut terms = terms;
        for t in &mut terms {
            if t.wave.len() > dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: t.wave.len(),
                });
            }
            t.wave.resize(dim, 0);
        }
        Ok(TrigPolynomial { dim, terms })
    }

    /// Parses an expression; the dimension is the largest variable index
    /// unless given.
    pub fn parse(text: &str, dim: Option<usize>) -> Result<Self> {
        let mut p = Parser { text, pos: 0 };
        let terms = p.expr()?;
        let used = terms.iter().map(|t| t.wave.len()).max().unwrap_or(0).max(1);
        let dim = match dim {
            Some(d) if d < used => {
                return Err(Error::Parse {
                    line: 1,
                    column: 1,
                    message: format!("expression uses {used} variables but dimension is {d}"),
                })
            }
            Some(d) => d,
            None => used,
        };
        Self::new(dim, terms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let phase: f64 = t.wave.iter().zip(xi).map(|(k, x)| *k as f64 * x).sum();
                t.coefficient
                    * match t.function {
                        TrigFunction::Const => 1.0,
                        TrigFunction::Cos => phase.cos(),
                        TrigFunction::Sin => phase.sin(),
                    }
            })
            .sum()
    }

    /// Upper bound for `|sigma|`.
    pub fn bound(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.abs()).sum()
    }

    /// Per-axis tables when every term depends on a single coordinate.
    pub(crate) fn axis_tables(&self, points: &[f64]) -> Option<Vec<Vec<f64>>> {
        let mut tables = vec![vec![0.0; points.len()]; self.dim];
        for t in &self.terms {
            let axes: Vec<usize> = (0..self.dim).filter(|&i| t.wave[i] != 0).collect();
            let (axis, k) = match axes.as_slice() {
                [] => (0, 0),
                [a] => (*a, t.wave[*a]),
                _ => return None,
            };
            for (v, &x) in tables[axis].iter_mut().zip(points) {
                let phase = k as f64 * x;
                *v += t.coefficient
                    * match t.function {
                        TrigFunction::Const => 1.0,
                        TrigFunction::Cos if k == 0 => 1.0,
                        TrigFunction::Cos => phase.cos(),
                        TrigFunction::Sin => phase.sin(),
                    };
            }
        }
        Some(tables)
    }
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: 1,
            column: self.text[..self.pos].chars().count() + 1,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn sign(&mut self) -> Option<f64> {
        if self.eat('+') {
            Some(1.0)
        } else if self.eat('-') {
            Some(-1.0)
        } else {
            None
        }
    }

    fn number(&mut self) -> Option<f64> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let mut end = 0;
        let mut seen_digit = false;
        let bytes = rest.as_bytes();
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            seen_digit |= bytes[end].is_ascii_digit();
            end += 1;
        }
        if seen_digit && end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut k = end + 1;
            if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                k += 1;
            }
            if k < bytes.len() && bytes[k].is_ascii_digit() {
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        if !seen_digit {
            return None;
        }
        let value = rest[..end].parse().ok()?;
        self.pos += end;
        Some(value)
    }

    fn keyword(&mut self, word: &str) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(word) {
            self.pos += word.len();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Vec<TrigTerm>> {
        let mut terms = Vec::new();
        let mut sign = self.sign().unwrap_or(1.0);
        loop {
            let mut term = self.term()?;
            term.coefficient *= sign;
            terms.push(term);
            self.skip_ws();
            if self.pos == self.text.len() {
                return Ok(terms);
            }
            sign = self.sign().ok_or_else(|| self.error("expected '+' or '-'"))?;
        }
    }

    fn term(&mut self) -> Result<TrigTerm> {
        self.skip_ws();
        if let Some(c) = self.number() {
            if self.eat('*') {
                let (function, wave) = self.func()?;
                return Ok(TrigTerm {
                    coefficient: c,
                    function,
                    wave,
                });
            }
            return Ok(TrigTerm {
                coefficient: c,
                function: TrigFunction::Const,
                wave: Vec::new(),
            });
        }
        let (function, wave) = self.func()?;
        Ok(TrigTerm {
            coefficient: 1.0,
            function,
            wave,
        })
    }

    fn func(&mut self) -> Result<(TrigFunction, Vec<i64>)> {
        let function = if self.keyword("cos") {
            TrigFunction::Cos
        } else if self.keyword("sin") {
            TrigFunction::Sin
        } else {
            self.skip_ws();
            return Err(self.error("expected a number, 'cos' or 'sin'"));
        };
        if !self.eat('(') {
            return Err(self.error("expected '('"));
        }
        let wave = self.wave()?;
        if !self.eat(')') {
            return Err(self.error("expected ')'"));
        }
        Ok((function, wave))
    }

    fn wave(&mut self) -> Result<Vec<i64>> {
        let mut wave: Vec<i64> = Vec::new();
        let mut sign = self.sign().unwrap_or(1.0) as i64;
        loop {
            self.skip_ws();
            let start = self.pos;
            let k = match self.number() {
                Some(v) if v.fract() == 0.0 => {
                    self.eat('*');
                    v as i64
                }
                Some(_) => {
                    self.pos = start;
                    return Err(self.error("frequencies must be integers"));
                }
                None => 1,
            };
            let axis = self.var()?;
            if wave.len() <= axis {
                wave.resize(axis + 1, 0);
            }
            wave[axis] += sign * k;
            match self.sign() {
                Some(s) => sign = s as i64,
                None => return Ok(wave),
            }
        }
    }

    fn var(&mut self) -> Result<usize> {
        if !(self.keyword("xi") || self.keyword("ξ")) {
            self.skip_ws();
            return Err(self.error("expected a variable 'xi<k>'"));
        }
        let rest = &self.text[self.pos..];
        let digits = rest.bytes().take_while(|b| b.is_ascii_digit()).count();
        if digits == 0 {
            return Ok(0);
        }
        let index: usize = rest[..digits].parse().map_err(|_| self.error("bad variable index"))?;
        if index == 0 {
            return Err(self.error("variable indices start at 1"));
        }
        self.pos += digits;
        Ok(index - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn parses_lattice_laplacian() {
        let p = TrigPolynomial::parse("4 - 2*cos(xi1) - 2 * cos(xi2)", None).unwrap();
        assert_eq!(p.dim(), 2);
        assert!((p.eval(&[PI, PI]) - 8.0).abs() < 1e-14);
        assert!(p.eval(&[0.0, 0.0]).abs() < 1e-14);
        assert!(p.axis_tables(&[0.0, PI]).is_some());
    }

    #[test]
    fn mixed_waves_and_sines() {
        let p = TrigPolynomial::parse("1 - cos(2*xi1 - xi2) + 0.5*sin(xi)", Some(3)).unwrap();
        assert_eq!(p.dim(), 3);
        assert_eq!(p.terms()[1].wave, vec![2, -1, 0]);
        assert!((p.eval(&[PI / 2.0, 0.0, 0.0]) - 2.5).abs() < 1e-14);
        assert!(p.axis_tables(&[0.0]).is_none());
    }

    #[test]
    fn positional_errors() {
        let err = TrigPolynomial::parse("2 - 2*cos(xi", None).unwrap_err();
        assert_eq!(err, Error::Parse { line: 1, column: 13, message: "expected ')'".into() });
        let err = TrigPolynomial::parse("2 - tan(xi)", None).unwrap_err();
        assert_eq!(err, Error::Parse { line: 1, column: 5, message: "expected a number, 'cos' or 'sin'".into() });
        let err = TrigPolynomial::parse("cos(1.5*xi)", None).unwrap_err();
        assert!(matches!(err, Error::Parse { column: 5, .. }));
        let err = TrigPolynomial::parse("1 2", None).unwrap_err();
        assert!(matches!(err, Error::Parse { column: 3, .. }));
        assert!(TrigPolynomial::parse("cos(xi1)", Some(0)).is_err());
    }
}
