//! Parser for polynomial strings such as `1 - 2.5*x1^2*x2 + x2`.

use sobolev_core::{MultiIndex, Polynomial};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("cannot parse polynomial {input:?}: {reason}")]
pub struct PolyError {
    input: String,
    reason: String,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
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

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while self.peek().is_some_and(&f) {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn number(&mut self) -> Option<f64> {
        self.skip_ws();
        let start = self.pos;
        self.take_while(|c| c.is_ascii_digit() || c == '.');
        if self.peek().is_some_and(|c| c == 'e' || c == 'E') {
            let save = self.pos;
            self.pos += 1;
            if self.peek().is_some_and(|c| c == '+' || c == '-') {
                self.pos += 1;
            }
            if self.take_while(|c| c.is_ascii_digit()).is_empty() {
                self.pos = save;
            }
        }
        let s = &self.src[start..self.pos];
        if s.is_empty() {
            return None;
        }
        s.parse().ok()
    }
}

/// Parses a polynomial in `x1..x<dim>`; exponents with `^`, products with `*`.
pub fn parse_polynomial(input: &str, dim: usize) -> Result<Polynomial, PolyError> {
    let fail = |reason: String| PolyError {
        input: input.to_string(),
        reason,
    };
    let mut cur = Cursor { src: input, pos: 0 };
    let mut terms: Vec<(MultiIndex, f64)> = Vec::new();
    let mut first = true;
    loop {
        cur.skip_ws();
        if cur.peek().is_none() {
            if first {
                return Err(fail("empty input".into()));
            }
            break;
        }
        let mut sign = 1.0;
        if cur.eat('-') {
            sign = -1.0;
        } else if !cur.eat('+') && !first {
            return Err(fail(format!("expected + or - at offset {}", cur.pos)));
        }
        first = false;
        let mut coeff = sign;
        let mut exps = vec![0u32; dim];
        loop {
            cur.skip_ws();
            match cur.peek() {
                Some('x') => {
                    cur.pos += 1;
                    let idx = cur.take_while(|c| c.is_ascii_digit());
                    let i: usize = idx
                        .parse()
                        .map_err(|_| fail(format!("missing variable index at offset {}", cur.pos)))?;
                    if i == 0 || i > dim {
                        return Err(fail(format!("variable x{i} outside x1..x{dim}")));
                    }
                    let mut e = 1;
                    if cur.eat('^') {
                        cur.skip_ws();
                        e = cur
                            .take_while(|c| c.is_ascii_digit())
                            .parse()
                            .map_err(|_| fail(format!("bad exponent at offset {}", cur.pos)))?;
                    }
                    exps[i - 1] += e;
                }
                Some(c) if c.is_ascii_digit() || c == '.' => {
                    coeff *= cur
                        .number()
                        .ok_or_else(|| fail(format!("bad number at offset {}", cur.pos)))?;
                }
                _ => return Err(fail(format!("expected a factor at offset {}", cur.pos))),
            }
            if !cur.eat('*') {
                break;
            }
        }
        let beta = MultiIndex::new(exps).map_err(|e| fail(e.to_string()))?;
        terms.push((beta, coeff));
    }
    Polynomial::from_terms(dim, terms).map_err(|e| fail(e.to_string()))
}
