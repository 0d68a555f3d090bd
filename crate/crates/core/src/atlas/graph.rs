//! Graph functions `a_r : [-a, a]^(d-1) -> R` describing one boundary patch.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiindex::{MultiIndex, Polynomial};

/// User-supplied graph function with derivative oracles.
///
/// Oracles must be pure. `partial` is only queried for `|alpha| <=
/// oracle_order()` and may return [`Error::NotDifferentiable`] on a
/// measure-zero kink set.
pub trait GraphOracle: Send + Sync + fmt::Debug {
    fn value(&self, x: &[f64]) -> f64;
    fn partial(&self, alpha: &MultiIndex, x: &[f64]) -> Result<f64>;
    fn oracle_order(&self) -> u32;
    /// True when second and higher derivatives vanish wherever defined.
    fn is_piecewise_affine(&self) -> bool {
        false
    }
}

/// Built-in graph families plus an escape hatch for closures.
#[derive(Clone, Debug)]
pub enum GraphFn {
    /// `sum_beta c_beta x^beta`; the zero polynomial is the flat graph.
    Polynomial(Polynomial),
    /// `slope * sum_i |x_i|`, a Lipschitz wedge with kinks on the axes.
    Wedge { slope: f64 },
    /// `-sqrt(R^2 - |x|^2)`, the lower cap of a sphere of radius `R`.
    Circle { radius: f64 },
    /// `c * sqrt(|x_1|)`, Hölder-1/2 but not Lipschitz at the origin.
    Root { coefficient: f64 },
    Custom(Arc<dyn GraphOracle>),
}

impl GraphFn {
    pub fn flat(dim: usize) -> Self {
        GraphFn::Polynomial(Polynomial::zero(dim))
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            GraphFn::Polynomial(p) => p.eval(x),
            GraphFn::Wedge { slope } => slope * x.iter().map(|v| v.abs()).sum::<f64>(),
            GraphFn::Circle { radius } => {
                let s2 = radius * radius - norm2(x);
                -s2.max(0.0).sqrt()
            }
            GraphFn::Root { coefficient } => coefficient * x[0].abs().sqrt(),
            GraphFn::Custom(g) => g.value(x),
        }
    }

    /// Highest derivative order with an exact oracle.
    pub fn oracle_order(&self) -> u32 {
        match self {
            GraphFn::Polynomial(_) | GraphFn::Wedge { .. } => u32::MAX,
            GraphFn::Circle { .. } => 3,
            GraphFn::Root { .. } => 1,
            GraphFn::Custom(g) => g.oracle_order(),
        }
    }

    pub fn is_piecewise_affine(&self) -> bool {
        match self {
            GraphFn::Polynomial(p) => p.degree() <= 1,
            GraphFn::Wedge { .. } => true,
            GraphFn::Circle { .. } | GraphFn::Root { .. } => false,
            GraphFn::Custom(g) => g.is_piecewise_affine(),
        }
    }

    pub fn partial(&self, alpha: &MultiIndex, x: &[f64]) -> Result<f64> {
        let n = alpha.order();
        if n == 0 {
            return Ok(self.value(x));
        }
        if n > self.oracle_order() {
            return Err(Error::OrderTooHigh {
                requested: n,
                available: self.oracle_order(),
            });
        }
        match self {
            GraphFn::Polynomial(p) => Ok(p.derivative(alpha)?.eval(x)),
            GraphFn::Wedge { slope } => {
                let dirs = alpha.directions();
                if dirs.iter().any(|&j| x[j] == 0.0) {
                    return Err(Error::NotDifferentiable { point: x.to_vec() });
                }
                if n == 1 {
                    Ok(slope * x[dirs[0]].signum())
                } else {
                    Ok(0.0)
                }
            }
            GraphFn::Circle { radius } => circle_partial(*radius, &alpha.directions(), x),
            GraphFn::Root { coefficient } => {
                let dirs = alpha.directions();
                if dirs[0] != 0 {
                    return Ok(0.0);
                }
                let t = x[0];
                if t == 0.0 {
                    return Err(Error::NotDifferentiable { point: x.to_vec() });
                }
                Ok(coefficient * t.signum() / (2.0 * t.abs().sqrt()))
            }
            GraphFn::Custom(g) => g.partial(alpha, x),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        (0..x.len())
            .map(|j| self.partial(&MultiIndex::unit(x.len(), j), x))
            .collect()
    }

    /// Row-major Hessian.
    pub fn hessian(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let m = x.len();
        let mut h = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in i..m {
                let mut e = MultiIndex::unit(m, i);
                e = e.add(&MultiIndex::unit(m, j))?;
                let v = self.partial(&e, x)?;
                h[i][j] = v;
                h[j][i] = v;
            }
        }
        Ok(h)
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        match self {
            GraphFn::Polynomial(p) if p.dim() != dim => Err(Error::DimensionMismatch {
                expected: dim,
                found: p.dim(),
            }),
            GraphFn::Circle { radius } if *radius <= 0.0 => {
                Err(Error::InvalidParameter("circle radius must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn circle_partial(radius: f64, dirs: &[usize], x: &[f64]) -> Result<f64> {
    let s2 = radius * radius - norm2(x);
    if s2 <= 0.0 {
        return Err(Error::NotDifferentiable { point: x.to_vec() });
    }
    let s = s2.sqrt();
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    Ok(match *dirs {
        [i] => x[i] / s,
        [i, j] => delta(i, j) / s + x[i] * x[j] / (s2 * s),
        [i, j, k] => {
            (delta(i, j) * x[k] + delta(i, k) * x[j] + delta(j, k) * x[i]) / (s2 * s)
                + 3.0 * x[i] * x[j] * x[k] / (s2 * s2 * s)
        }
        _ => unreachable!("order checked against oracle_order"),
    })
}

/// Serializable description of a built-in graph family, used by the atlas
/// file format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GraphSpec {
    Flat,
    Polynomial { terms: Vec<PolyTerm> },
    Wedge { slope: f64 },
    Circle { radius: f64 },
    Root { coefficient: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub exponent: Vec<u32>,
    pub coefficient: f64,
}

impl GraphSpec {
    pub fn build(&self, dim: usize) -> Result<GraphFn> {
        Ok(match self {
            GraphSpec::Flat => GraphFn::flat(dim),
            GraphSpec::Polynomial { terms } => {
                let terms = terms
                    .iter()
                    .map(|t| Ok((MultiIndex::new(t.exponent.clone())?, t.coefficient)))
                    .collect::<Result<Vec<_>>>()?;
                GraphFn::Polynomial(Polynomial::from_terms(dim, terms)?)
            }
            GraphSpec::Wedge { slope } => GraphFn::Wedge { slope: *slope },
            GraphSpec::Circle { radius } => GraphFn::Circle { radius: *radius },
            GraphSpec::Root { coefficient } => GraphFn::Root {
                coefficient: *coefficient,
            },
        })
    }

    /// Inverse of [`GraphSpec::build`]; `None` for custom oracles.
    pub fn describe(graph: &GraphFn) -> Option<GraphSpec> {
        Some(match graph {
            GraphFn::Polynomial(p) if p.is_zero() => GraphSpec::Flat,
            GraphFn::Polynomial(p) => GraphSpec::Polynomial {
                terms: p
                    .terms()
                    .map(|(b, c)| PolyTerm {
                        exponent: b.exponents().to_vec(),
                        coefficient: c,
                    })
                    .collect(),
            },
            GraphFn::Wedge { slope } => GraphSpec::Wedge { slope: *slope },
            GraphFn::Circle { radius } => GraphSpec::Circle { radius: *radius },
            GraphFn::Root { coefficient } => GraphSpec::Root {
                coefficient: *coefficient,
            },
            GraphFn::Custom(_) => return None,
        })
    }
}
