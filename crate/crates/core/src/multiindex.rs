//! Multi-index bookkeeping and real polynomials in monomial form.
//!
//! Enumeration order is graded: indices come sorted by total order, and
//! within one order in descending lexicographic order, so `(1,0)` precedes
//! `(0,1)`. Report columns rely on this order staying fixed.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An exponent vector `alpha` in `N_0^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::InvalidParameter(
                "multi-index dimension must be at least 1".into(),
            ));
        }
        Ok(MultiIndex(exponents))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "multi-index dimension must be at least 1");
        MultiIndex(vec![0; dim])
    }

    /// The unit index `e_j`.
    pub fn unit(dim: usize, j: usize) -> Self {
        let mut e = Self::zeros(dim);
        e.0[j] = 1;
        e
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    /// `|alpha|`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// `alpha! = prod_i alpha_i!`, exact with overflow detection.
    pub fn factorial(&self) -> Result<u64> {
        self.0.iter().try_fold(1u64, |acc, &a| {
            acc.checked_mul(factorial_u64(a)?)
                .ok_or(Error::Overflow("multi-index factorial"))
        })
    }

    /// `binom(self, alpha)` where `self` plays the role of `beta`; zero
    /// unless `alpha <= beta` componentwise.
    pub fn binom(&self, alpha: &MultiIndex) -> Result<u64> {
        self.check_dim(alpha)?;
        if !alpha.le(self) {
            return Ok(0);
        }
        self.0
            .iter()
            .zip(&alpha.0)
            .try_fold(1u64, |acc, (&b, &a)| {
                acc.checked_mul(binomial_u64(b, a)?)
                    .ok_or(Error::Overflow("multi-index binomial"))
            })
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if !other.le(self) {
            return None;
        }
        Some(MultiIndex(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn add(&self, other: &MultiIndex) -> Result<MultiIndex> {
        self.check_dim(other)?;
        Ok(MultiIndex(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    /// `x^alpha`.
    pub fn pow(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        self.0
            .iter()
            .zip(x)
            .map(|(&a, &xi)| xi.powi(a as i32))
            .product()
    }

    /// The multinomial weight `|alpha|! / alpha!`.
    pub fn multinomial(&self) -> Result<u64> {
        let top = factorial_u64(self.order())?;
        Ok(top / self.factorial()?)
    }

    /// Expands the index into an ordered list of axis directions, e.g.
    /// `(2,1)` becomes `[0, 0, 1]`.
    pub fn directions(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(j, &a)| std::iter::repeat_n(j, a as usize))
            .collect()
    }

    fn check_dim(&self, other: &MultiIndex) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

fn factorial_u64(n: u32) -> Result<u64> {
    (1..=n as u64).try_fold(1u64, |acc, i| {
        acc.checked_mul(i).ok_or(Error::Overflow("factorial"))
    })
}

fn binomial_u64(n: u32, k: u32) -> Result<u64> {
    let k = k.min(n - k) as u64;
    let n = n as u64;
    let mut acc: u64 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1)
        acc = acc
            .checked_mul(n - i)
            .ok_or(Error::Overflow("binomial"))?
            / (i + 1);
    }
    Ok(acc)
}

/// `|alpha|` for a multi-index.
pub fn order(alpha: &MultiIndex) -> u32 {
    alpha.order()
}

/// `d^alpha x^beta = alpha! binom(beta, alpha) x^(beta - alpha)`.
///
/// When `alpha` is not below `beta` the coefficient is zero and the returned
/// exponent is the zero index.
pub fn monomial_derivative(alpha: &MultiIndex, beta: &MultiIndex) -> Result<(f64, MultiIndex)> {
    alpha.check_dim(beta)?;
    match beta.checked_sub(alpha) {
        Some(rest) => {
            let c = alpha.factorial()? as f64 * beta.binom(alpha)? as f64;
            Ok((c, rest))
        }
        None => Ok((0.0, MultiIndex::zeros(alpha.dim()))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnumerationMode {
    /// `{|alpha| = k}`
    Exact,
    /// `{|alpha| <= k}`
    UpTo,
}

/// Enumerates multi-indices of dimension `d` in graded, descending
/// lexicographic order.
pub fn enumerate(d: usize, k: u32, mode: EnumerationMode) -> Vec<MultiIndex> {
    assert!(d >= 1, "dimension must be at least 1");
    match mode {
        EnumerationMode::Exact => {
            let mut out = Vec::new();
            let mut buf = vec![0u32; d];
            fill_exact(&mut buf, 0, k, &mut out);
            out
        }
        EnumerationMode::UpTo => (0..=k)
            .flat_map(|j| enumerate(d, j, EnumerationMode::Exact))
            .collect(),
    }
}

fn fill_exact(buf: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == buf.len() {
        buf[pos] = remaining;
        out.push(MultiIndex(buf.to_vec()));
        return;
    }
    for a in (0..=remaining).rev() {
        buf[pos] = a;
        fill_exact(buf, pos + 1, remaining - a, out);
    }
}

/// A real polynomial `sum_beta c_beta x^beta` with a declared degree bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    dim: usize,
    degree_bound: u32,
    #[serde(with = "term_list")]
    coeffs: BTreeMap<MultiIndex, f64>,
}

/// Coefficients as `[[exponents, coefficient], ...]`; JSON maps need string keys.
mod term_list {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serializer};

    use super::MultiIndex;

    pub fn serialize<S: Serializer>(m: &BTreeMap<MultiIndex, f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<MultiIndex, f64>, D::Error> {
        Ok(Vec::<(MultiIndex, f64)>::deserialize(d)?.into_iter().collect())
    }
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Polynomial {
            dim,
            degree_bound: 0,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        if c != 0.0 {
            p.coeffs.insert(MultiIndex::zeros(dim), c);
        }
        p
    }

    /// Builds a polynomial whose degree bound is the largest order present.
    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut coeffs = BTreeMap::new();
        for (beta, c) in terms {
            if beta.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: beta.dim(),
                });
            }
            *coeffs.entry(beta).or_insert(0.0) += c;
        }
        coeffs.retain(|_, c| *c != 0.0);
        let degree_bound = coeffs.keys().map(|b| b.order()).max().unwrap_or(0);
        Ok(Polynomial {
            dim,
            degree_bound,
            coeffs,
        })
    }

    /// Like [`Polynomial::from_terms`] but with an explicit bound that every
    /// term must respect.
    pub fn with_bound<I>(dim: usize, degree_bound: u32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut p = Self::from_terms(dim, terms)?;
        if p.degree() > degree_bound {
            return Err(Error::InvalidParameter(format!(
                "term of degree {} exceeds bound {degree_bound}",
                p.degree()
            )));
        }
        p.degree_bound = degree_bound;
        Ok(p)
    }

    /// The single monomial `c x^beta`.
    pub fn monomial(beta: MultiIndex, c: f64) -> Self {
        let dim = beta.dim();
        Self::from_terms(dim, [(beta, c)]).expect("dimension is consistent")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree_bound(&self) -> u32 {
        self.degree_bound
    }

    /// Actual degree of the nonzero terms (0 for the zero polynomial).
    pub fn degree(&self) -> u32 {
        self.coeffs.keys().map(|b| b.order()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, beta: &MultiIndex) -> f64 {
        self.coeffs.get(beta).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.coeffs.iter().map(|(b, &c)| (b, c))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.coeffs.iter().map(|(b, &c)| c * b.pow(x)).sum()
    }

    /// Coefficientwise application of [`monomial_derivative`].
    pub fn derivative(&self, alpha: &MultiIndex) -> Result<Polynomial> {
        if alpha.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: alpha.dim(),
            });
        }
        let mut coeffs = BTreeMap::new();
        for (beta, &c) in &self.coeffs {
            let (factor, rest) = monomial_derivative(alpha, beta)?;
            if factor != 0.0 {
                *coeffs.entry(rest).or_insert(0.0) += c * factor;
            }
        }
        coeffs.retain(|_, c: &mut f64| *c != 0.0);
        Ok(Polynomial {
            dim: self.dim,
            degree_bound: self.degree_bound.saturating_sub(alpha.order()),
            coeffs,
        })
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut out = self.clone();
        out.coeffs.values_mut().for_each(|c| *c *= s);
        out.coeffs.retain(|_, c| *c != 0.0);
        out
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut out = Self::from_terms(
            self.dim,
            self.terms()
                .chain(other.terms())
                .map(|(b, c)| (b.clone(), c)),
        )?;
        out.degree_bound = self.degree_bound.max(other.degree_bound).max(out.degree());
        Ok(out)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        // highest order first reads more naturally
        for beta in enumerate(self.dim, self.degree(), EnumerationMode::UpTo)
            .iter()
            .rev()
        {
            let Some(&c) = self.coeffs.get(beta) else {
                continue;
            };
            if !first {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            first = false;
            let mag = c.abs();
            let mono: Vec<String> = beta
                .exponents()
                .iter()
                .enumerate()
                .filter(|(_, &a)| a > 0)
                .map(|(i, &a)| {
                    if a == 1 {
                        format!("x{}", i + 1)
                    } else {
                        format!("x{}^{a}", i + 1)
                    }
                })
                .collect();
            if mono.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == 1.0 {
                write!(f, "{}", mono.join("*"))?;
            } else {
                write!(f, "{mag}*{}", mono.join("*"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    #[test]
    fn polynomial_json_round_trip() {
        let p = Polynomial::from_terms(2, vec![(mi(&[1, 0]), 1.0), (mi(&[0, 2]), -0.5)]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("[[1,0],1.0]"), "{s}");
        let q: Polynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn order_examples() {
        assert_eq!(order(&mi(&[0, 0])), 0);
        assert_eq!(order(&mi(&[2, 1])), 3);
        assert_eq!(order(&mi(&[1, 0, 0, 0, 0])), 1);
    }

    #[test]
    fn factorial_examples() {
        assert_eq!(mi(&[0, 0]).factorial().unwrap(), 1);
        assert_eq!(mi(&[2, 1]).factorial().unwrap(), 2);
        assert_eq!(mi(&[3, 3]).factorial().unwrap(), 36);
        assert!(matches!(mi(&[30, 30]).factorial(), Err(Error::Overflow(_))));
        assert!(matches!(mi(&[15, 15]).factorial(), Err(Error::Overflow(_))));
        assert!(mi(&[21]).factorial().is_err());
        assert!(mi(&[20]).factorial().is_ok());
    }

    #[test]
    fn binom_examples() {
        assert_eq!(mi(&[2, 1]).binom(&mi(&[1, 0])).unwrap(), 2);
        assert_eq!(mi(&[2, 1]).binom(&mi(&[0, 2])).unwrap(), 0);
        assert_eq!(mi(&[3, 2]).binom(&mi(&[3, 2])).unwrap(), 1);
        assert!(matches!(
            mi(&[3, 2]).binom(&mi(&[1])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn monomial_derivative_examples() {
        let (c, e) = monomial_derivative(&mi(&[1, 1]), &mi(&[1, 1])).unwrap();
        assert_eq!((c, e), (1.0, mi(&[0, 0])));
        let (c, _) = monomial_derivative(&mi(&[2, 0]), &mi(&[1, 1])).unwrap();
        assert_eq!(c, 0.0);
        let (c, e) = monomial_derivative(&mi(&[1, 0]), &mi(&[2, 1])).unwrap();
        assert_eq!((c, e), (2.0, mi(&[1, 1])));
        let (c, e) = monomial_derivative(&mi(&[3, 2]), &mi(&[3, 2])).unwrap();
        assert_eq!((c, e), (12.0, mi(&[0, 0])));
    }

    #[test]
    fn enumerate_examples() {
        assert_eq!(
            enumerate(2, 1, EnumerationMode::Exact),
            vec![mi(&[1, 0]), mi(&[0, 1])]
        );
        assert_eq!(enumerate(2, 2, EnumerationMode::Exact).len(), 3);
        assert_eq!(
            enumerate(1, 3, EnumerationMode::UpTo),
            vec![mi(&[0]), mi(&[1]), mi(&[2]), mi(&[3])]
        );
        assert_eq!(
            enumerate(2, 2, EnumerationMode::Exact),
            vec![mi(&[2, 0]), mi(&[1, 1]), mi(&[0, 2])]
        );
    }

    #[test]
    fn polynomial_derivative_examples() {
        let v = Polynomial::monomial(mi(&[2, 1]), 1.0);
        let dv = v.derivative(&mi(&[1, 0])).unwrap();
        assert_eq!(dv, Polynomial::monomial(mi(&[1, 1]), 2.0));

        let c = Polynomial::constant(2, 3.5);
        assert_eq!(c.derivative(&mi(&[0, 0])).unwrap().eval(&[0.3, 0.7]), 3.5);

        // any v of degree <= k-1 is annihilated by every |alpha| = k
        let v = Polynomial::from_terms(
            2,
            [(mi(&[0, 0]), 1.0), (mi(&[1, 0]), -2.0), (mi(&[0, 1]), 0.5)],
        )
        .unwrap();
        for alpha in enumerate(2, 2, EnumerationMode::Exact) {
            assert!(v.derivative(&alpha).unwrap().is_zero());
        }
    }

    #[test]
    fn derivative_degree_bound_saturates() {
        let v = Polynomial::with_bound(1, 2, [(mi(&[2]), 1.0)]).unwrap();
        assert_eq!(v.derivative(&mi(&[3])).unwrap().degree_bound(), 0);
        assert_eq!(v.derivative(&mi(&[1])).unwrap().degree_bound(), 1);
        assert!(Polynomial::with_bound(1, 1, [(mi(&[2]), 1.0)]).is_err());
    }

    #[test]
    fn display_is_readable() {
        let v = Polynomial::from_terms(2, [(mi(&[2, 1]), 1.0), (mi(&[0, 0]), -2.0)]).unwrap();
        assert_eq!(v.to_string(), "x1^2*x2 - 2");
    }

    fn small_index(d: usize) -> impl Strategy<Value = MultiIndex> {
        prop::collection::vec(0u32..4, d).prop_map(|v| MultiIndex::new(v).unwrap())
    }

    fn small_poly(d: usize) -> impl Strategy<Value = Polynomial> {
        prop::collection::vec((small_index(d), -4i32..5), 0..6).prop_map(move |terms| {
            Polynomial::from_terms(d, terms.into_iter().map(|(b, c)| (b, c as f64))).unwrap()
        })
    }

    proptest! {
        #[test]
        fn coefficient_zero_iff_not_below(a in small_index(3), b in small_index(3)) {
            let (c, _) = monomial_derivative(&a, &b).unwrap();
            prop_assert_eq!(c == 0.0, !a.le(&b));
        }

        #[test]
        fn equal_order_is_kronecker((n, i, j) in (0u32..7).prop_flat_map(|n| (Just(n), 0..=n, 0..=n))) {
            let a = MultiIndex::new(vec![i, n - i]).unwrap();
            let b = MultiIndex::new(vec![j, n - j]).unwrap();
            let (c, _) = monomial_derivative(&a, &b).unwrap();
            let expected = if a == b { a.factorial().unwrap() as f64 } else { 0.0 };
            prop_assert_eq!(c, expected);
        }

        #[test]
        fn differentiation_composes(v in small_poly(2), a in small_index(2), b in small_index(2)) {
            let stepwise = v.derivative(&a).unwrap().derivative(&b).unwrap();
            let direct = v.derivative(&a.add(&b).unwrap()).unwrap();
            // integer coefficients stay exact in f64
            prop_assert_eq!(stepwise.terms().collect::<Vec<_>>(), direct.terms().collect::<Vec<_>>());
        }

        #[test]
        fn exact_count_is_stars_and_bars(d in 1usize..5, k in 0u32..6) {
            let n = enumerate(d, k, EnumerationMode::Exact).len() as u64;
            let expected = binomial_u64(k + d as u32 - 1, d as u32 - 1).unwrap();
            prop_assert_eq!(n, expected);
        }
    }
}
