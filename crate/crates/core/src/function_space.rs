//! Test functions with exact derivative oracles and seeded families of them.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::atlas::{Atlas, Chart};
use crate::domain::BoundarySubset;
use crate::error::{Error, Result};
use crate::multiindex::{enumerate, EnumerationMode, MultiIndex, Polynomial};
use crate::quadrature::Cuboid;

/// Marker for "derivatives of every order".
pub const UNBOUNDED: u32 = u32::MAX;

/// Where a function may be nonzero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    Whole,
    Ball { center: Vec<f64>, radius: f64 },
    /// Closed box containing the support.
    CompactIn(Cuboid),
}

impl Support {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Support::Whole => true,
            Support::Ball { center, radius } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                r2 <= radius * radius
            }
            Support::CompactIn(b) => x
                .iter()
                .zip(b.lower.iter().zip(&b.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u),
        }
    }

    /// Smallest box that contains the support, if bounded.
    pub fn bounding_box(&self) -> Option<Cuboid> {
        match self {
            Support::Whole => None,
            Support::Ball { center, radius } => Some(Cuboid {
                lower: center.iter().map(|c| c - radius).collect(),
                upper: center.iter().map(|c| c + radius).collect(),
            }),
            Support::CompactIn(b) => Some(b.clone()),
        }
    }

    fn intersect(&self, other: &Support) -> Support {
        match (self.bounding_box(), other.bounding_box()) {
            (None, _) => other.clone(),
            (_, None) => self.clone(),
            (Some(a), Some(b)) => {
                let lower: Vec<f64> = a.lower.iter().zip(&b.lower).map(|(x, y)| x.max(*y)).collect();
                let upper: Vec<f64> = a.upper.iter().zip(&b.upper).map(|(x, y)| x.min(*y)).collect();
                let upper = upper.iter().zip(&lower).map(|(u, l)| u.max(*l)).collect();
                Support::CompactIn(Cuboid { lower, upper })
            }
        }
    }

    fn union(&self, other: &Support) -> Support {
        match (self.bounding_box(), other.bounding_box()) {
            (Some(a), Some(b)) => Support::CompactIn(Cuboid {
                lower: a.lower.iter().zip(&b.lower).map(|(x, y)| x.min(*y)).collect(),
                upper: a.upper.iter().zip(&b.upper).map(|(x, y)| x.max(*y)).collect(),
            }),
            _ => Support::Whole,
        }
    }
}

/// A scalar field on `R^d` with exact partial-derivative oracles.
///
/// `deriv` is only called with `|alpha| <= max_order()`; values at points
/// where a derivative does not exist are NaN.
pub trait Field: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn max_order(&self) -> u32;
    fn deriv(&self, alpha: &MultiIndex, x: &[f64]) -> Complex64;
    fn support(&self) -> Support {
        Support::Whole
    }
    fn is_real(&self) -> bool {
        true
    }
}

#[derive(Clone, Debug)]
pub struct TestFunction {
    field: Arc<dyn Field>,
    id: String,
}

impl TestFunction {
    pub fn new(field: Arc<dyn Field>, id: impl Into<String>) -> Self {
        TestFunction {
            field,
            id: id.into(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn max_order(&self) -> u32 {
        self.field.max_order()
    }

    pub fn support(&self) -> Support {
        self.field.support()
    }

    pub fn is_real(&self) -> bool {
        self.field.is_real()
    }

    pub fn field(&self) -> &Arc<dyn Field> {
        &self.field
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.field.deriv(&MultiIndex::zeros(self.dim()), x)
    }

    /// `d^alpha u (x)`.
    pub fn deriv(&self, alpha: &MultiIndex, x: &[f64]) -> Result<Complex64> {
        self.check(alpha)?;
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self.field.deriv(alpha, x))
    }

    /// Unchecked oracle access for hot loops that validated `alpha` already.
    pub(crate) fn deriv_unchecked(&self, alpha: &MultiIndex, x: &[f64]) -> Complex64 {
        self.field.deriv(alpha, x)
    }

    pub fn check(&self, alpha: &MultiIndex) -> Result<()> {
        if alpha.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: alpha.dim(),
            });
        }
        self.check_order(alpha.order())
    }

    pub fn check_order(&self, order: u32) -> Result<()> {
        if order > self.max_order() {
            return Err(Error::OrderTooHigh {
                requested: order,
                available: self.max_order(),
            });
        }
        Ok(())
    }

    /// The function `d^alpha u`.
    pub fn derive(&self, alpha: &MultiIndex) -> Result<TestFunction> {
        self.check(alpha)?;
        if alpha.is_zero() {
            return Ok(self.clone());
        }
        Ok(TestFunction::new(
            Arc::new(DerivativeField {
                inner: self.field.clone(),
                alpha: alpha.clone(),
            }),
            format!("d{alpha}[{}]", self.id),
        ))
    }

    pub fn laplacian(&self) -> Result<TestFunction> {
        self.check_order(2)?;
        Ok(TestFunction::new(
            Arc::new(LaplacianField {
                inner: self.field.clone(),
            }),
            format!("lap[{}]", self.id),
        ))
    }

    pub fn scale(&self, c: Complex64) -> TestFunction {
        TestFunction::new(
            Arc::new(SumField::new(vec![(c, self.field.clone())])),
            self.id.clone(),
        )
    }

    pub fn scale_real(&self, c: f64) -> TestFunction {
        self.scale(Complex64::new(c, 0.0))
    }

    pub fn add(&self, other: &TestFunction) -> Result<TestFunction> {
        self.linear_combination(Complex64::ONE, other, Complex64::ONE)
    }

    /// `a * self + b * other`.
    pub fn linear_combination(
        &self,
        a: Complex64,
        other: &TestFunction,
        b: Complex64,
    ) -> Result<TestFunction> {
        same_dim(self, other)?;
        Ok(TestFunction::new(
            Arc::new(SumField::new(vec![
                (a, self.field.clone()),
                (b, other.field.clone()),
            ])),
            format!("{}+{}", self.id, other.id),
        ))
    }

    pub fn mul(&self, other: &TestFunction) -> Result<TestFunction> {
        same_dim(self, other)?;
        Ok(TestFunction::new(
            Arc::new(ProductField {
                left: self.field.clone(),
                right: other.field.clone(),
            }),
            format!("{}*{}", self.id, other.id),
        ))
    }

    pub fn polynomial(p: Polynomial) -> Self {
        let id = p.to_string();
        TestFunction::new(Arc::new(PolynomialField(p)), id)
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::polynomial(Polynomial::constant(dim, c))
    }

    pub fn zero(dim: usize) -> Self {
        Self::polynomial(Polynomial::zero(dim))
    }

    /// `x_j` (0-based axis).
    pub fn coordinate(dim: usize, j: usize) -> Self {
        Self::polynomial(Polynomial::monomial(MultiIndex::unit(dim, j), 1.0))
    }

    /// `amplitude * prod_i sin(omega_i x_i + phase_i)`.
    pub fn trig(amplitude: f64, omega: Vec<f64>, phase: Vec<f64>) -> Result<Self> {
        if omega.len() != phase.len() || omega.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: omega.len(),
                found: phase.len(),
            });
        }
        let id = format!("trig{omega:?}");
        Ok(TestFunction::new(
            Arc::new(TrigField {
                amplitude,
                omega,
                phase,
            }),
            id,
        ))
    }

    /// `amplitude * exp(-|x - center|^2 / (2 sigma^2))`.
    pub fn gaussian(amplitude: f64, center: Vec<f64>, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || center.is_empty() {
            return Err(Error::InvalidParameter("gaussian needs sigma > 0".into()));
        }
        Ok(TestFunction::new(
            Arc::new(GaussianField {
                amplitude,
                center,
                sigma,
            }),
            "gaussian",
        ))
    }

    /// `amplitude * prod_i eta((x_i - c_i) / rho_i)` with
    /// `eta(t) = exp(1 / (t^2 - 1))` on `(-1, 1)`.
    pub fn product_bump(amplitude: f64, center: Vec<f64>, radii: Vec<f64>) -> Result<Self> {
        if center.len() != radii.len() || center.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: center.len(),
                found: radii.len(),
            });
        }
        if radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::InvalidParameter("bump radii must be positive".into()));
        }
        Ok(TestFunction::new(
            Arc::new(BumpField {
                amplitude,
                center,
                radii,
            }),
            "bump",
        ))
    }

    /// Signed height `e_d . (x - o) - a_r(y')` above the graph of `chart`.
    pub fn chart_height(chart: &Chart) -> Self {
        TestFunction::new(Arc::new(ChartHeightField::new(chart)), "height")
    }

    pub fn custom(field: Arc<dyn Field>, id: impl Into<String>) -> Self {
        TestFunction::new(field, id)
    }
}

fn same_dim(a: &TestFunction, b: &TestFunction) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

#[derive(Debug)]
struct PolynomialField(Polynomial);

impl Field for PolynomialField {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn max_order(&self) -> u32 {
        UNBOUNDED
    }
    fn deriv(&self, alpha: &MultiIndex, x: &[f64]) -> Complex64 {
        if alpha.is_zero() {
            return real(self.0.eval(x));
        }
        let a = alpha.exponents();
        let mut acc = 0.0;
        'terms: for (beta, c) in self.0.terms() {
            let mut v = c;
            for ((&b, &ai), &xi) in beta.exponents().iter().zip(a).zip(x) {
                if ai > b {
                    continue 'terms;
                }
                for j in 0..ai {
                    v *= (b - j) as f64;
                }
                v *= xi.powi((b - ai) as i32);
            }
            acc += v;
        }
        real(acc)
    }
}

#[derive(Debug)]
struct TrigField {
    amplitude: f64,
    omega: Vec<f64>,
    phase: Vec<f64>,
}

impl Field for TrigField {
    fn dim(&self) -> usize {
        self.omega.len()
    }
    fn max_order(&self) -> u32 {
        UNBOUNDED
    }
    fn deriv(&self, alpha: &MultiIndex, x: &[f64]) -> Complex64 {
        let mut v = self.amplitude;
        for (i, &n) in alpha.exponents().iter().enumerate() {
            let w = self.omega[i];
            // d^n/dt^n sin(wt + phi) = w^n sin(wt + phi + n pi/2)
            let arg = w * x[i] + self.phase[i];
            let s = match n % 4 {
                0 => arg.sin(),
                1 => arg.cos(),
                2 => -arg.sin(),
                _ => -arg.cos(),
            };
            v *= w.powi(n as i32) * s;
        }
        real(v)
    }
}

#[derive(Debug)]
struct GaussianField {
    amplitude: f64,
    center: Vec<f64>,
    sigma: f64,
}

/// Probabilists' Hermite polynomial `He_n(z)`.
fn hermite(n: u32, z: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, z);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = z * h1 - k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

impl Field for GaussianField {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn max_order(&self) -> u32 {
        UNBOUNDED
    }
    fn deriv(&self, alpha: &MultiIndex, x: &[f64]) -> Complex64 {
        let mut v = self.amplitude;
        for (i, &n) in alpha.exponents().iter().enumerate() {
            let z = (x[i] - self.center[i]) / self.sigma;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            v *= sign * hermite(n, z) * self.sigma.powi(-(n as i32)) * (-0.5 * z * z).exp();
        }
        real(v)
    }
}

/// Highest derivative order of the product bump.
pub const BUMP_MAX_ORDER: u32 = 8;

/// Coefficients (ascending powers) of `Q_n` in
/// `eta^(n)(t) = Q_n(t) / (1 - t^2)^(2n) * eta(t)`.
fn bump_numerators() -> &'static [Vec<f64>] {
    static Q: std::sync::OnceLock<Vec<Vec<f64>>> = std::sync::OnceLock::new();
    Q.get_or_init(|| {
        let mut out = vec![vec![1.0]];
        for n in 0..BUMP_MAX_ORDER as usize {
            let q = &out[n];
            let mut next = vec![0.0; q.len() + 4];
            // Q' (1 - t^2)^2
            for (k, &c) in q.iter().enumerate().skip(1) {
                let d = k as f64 * c;
                next[k - 1] += d;
                next[k + 1] -= 2.0 * d;
                next[k + 3] += d;
            }
            // 4 n t Q (1 - t^2) - 2 t Q
            for (k, &c) in q.iter().enumerate() {
                next[k + 1] += (4.0 * n as f64 - 2.0) * c;
                next[k + 3] -= 4.0 * n as f64 * c;
            }
            while next.len() > 1 && *next.last().unwrap() == 0.0 {
                next.pop();
            }
            out.push(next);
        }
        out
    })
}

/// `eta^(n)(t)` for the bump `eta(t) = exp(1/(t^2 - 1))`.
pub fn bump_derivative(n: u32, t: f64) -> f64 {
    if t.abs() >= 1.0 {
        return 0.0;
    }
    let s = 1.0 - t * t;
    let eta = (-1.0 / s).exp();
    if eta == 0.0 {
        return 0.0;
    }
    let q = &bump_numerators()[n as usize];
    let poly = q.iter().rev().fold(0.0, |acc, c| acc * t + c);
    poly / s.powi(2 * n as i32) * eta
}

#[derive(Debug)]
struct BumpField {
    amplitude: f64,
    center: Vec<f64>,
    radii: Vec<f64>,
}

impl Field for BumpField {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn max_order(&self) -> u32 {
        BUMP_MAX_ORDER
    }
    fn deriv(&self, alpha: &MultiIndex, x: &[f64]) -> Complex64 {
        let mut v = self.amplitude;
        for (i, &n) in alpha.exponents().iter().enumerate() {
            let t = (x[i] - self.center[i]) / self.radii[i];
            v *= bump_derivative(n, t) / self.radii[i].powi(n as i32);
            if v == 0.0 {
                break;
            }
        }
        real(v)
    }
    fn support(&self) -> Support {
        Support::CompactIn(Cuboid {
            lower: self.center.iter().zip(&self.radii).map(|(c, r)| c - r).collect(),
            upper: self.center.iter().zip(&self.radii).map(|(c, r)| c + r).collect(),
        })
    }
}

#[derive(Debug)]
struct SumField {
    terms: Vec<(Complex64, Arc<dyn Field>)>,
}

impl SumField {
    fn new(terms: Vec<(Complex64, Arc<dyn Field>)>) -> Self {
        SumField { terms }
    }
}

impl Field for SumField {
    fn dim(&self) -> usize {
        self.terms[0].1.dim()
    }
    fn max_order(&self) -> u32 {
        self.terms.iter().map(|t| t.1.max_order()).min().unwrap_or(UNBOUNDED)
    }
    fn deriv(&self, alpha: &MultiIndex, x: &[f64]) -> Complex64 {
        self.terms.iter().map(|(c, f)| c * f.deriv(alpha, x)).sum()
    }
    fn support(&self) -> Support {
        let mut it = self.terms.iter().filter(|(c, _)| *c != Complex64::ZERO);
        let Some(first) = it.next() else {
            return Support::CompactIn(Cuboid {
                lower: vec![0.0; self.dim()],
                upper: vec![0.0; self.dim()],
            });
        };
        it.fold(first.1.support(), |acc, (_, f)| acc.union(&f.support()))
    }
    fn is_real(&self) -> bool {
        self.terms.iter().all(|(c, f)| c.im == 0.0 && f.is_real())
    }
}

#[derive(Debug)]
struct ProductField {
    left: Arc<dyn Field>,
    right: Arc<dyn Field>,
}

/// Calls `visit(beta, binom(alpha, beta))` for every `beta <= alpha`.
fn for_each_below(alpha: &MultiIndex, mut visit: impl FnMut(&MultiIndex, f64)) {
    let a = alpha.exponents();
    let mut beta = vec![0u32; a.len()];
    loop {
        let b = MultiIndex::new(beta.clone()).expect("non-empty");
        let coeff = alpha.binom(&b).expect("dimensions agree") as f64;
        visit(&b, coeff);
        let mut i = 0;
        loop {
            if i == a.len() {
                return;
            }
            if beta[i] < a[i] {
                beta[i] += 1;
                break;
            }
            beta[i] = 0;
            i += 1;
        }
    }
}

impl Field for ProductField {
    fn dim(&self) -> usize {
        self.left.dim()
    }
    fn max_order(&self) -> u32 {
        self.left.max_order().min(self.right.max_order())
    }
    fn deriv(&self, alpha: &MultiIndex, x: &[f64]) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for_each_below(alpha, |beta, c| {
            let rest = alpha.checked_sub(beta).expect("beta <= alpha");
            acc += c * self.left.deriv(beta, x) * self.right.deriv(&rest, x);
        });
        acc
    }
    fn support(&self) -> Support {
        self.left.support().intersect(&self.right.support())
    }
    fn is_real(&self) -> bool {
        self.left.is_real() && self.right.is_real()
    }
}

#[derive(Debug)]
struct DerivativeField {
    inner: Arc<dyn Field>,
    alpha: MultiIndex,
}

impl Field for DerivativeField {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn max_order(&self) -> u32 {
        self.inner.max_order().saturating_sub(self.alpha.order())
    }
    fn deriv(&self, beta: &MultiIndex, x: &[f64]) -> Complex64 {
        let total = self.alpha.add(beta).expect("dimensions agree");
        self.inner.deriv(&total, x)
    }
    fn support(&self) -> Support {
        self.inner.support()
    }
    fn is_real(&self) -> bool {
        self.inner.is_real()
    }
}

#[derive(Debug)]
struct LaplacianField {
    inner: Arc<dyn Field>,
}

impl Field for LaplacianField {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn max_order(&self) -> u32 {
        self.inner.max_order().saturating_sub(2)
    }
    fn deriv(&self, beta: &MultiIndex, x: &[f64]) -> Complex64 {
        let d = self.dim();
        (0..d)
            .map(|j| {
                let mut e = beta.exponents().to_vec();
                e[j] += 2;
                self.inner.deriv(&MultiIndex::new(e).expect("non-empty"), x)
            })
            .sum()
    }
    fn support(&self) -> Support {
        self.inner.support()
    }
    fn is_real(&self) -> bool {
        self.inner.is_real()
    }
}

/// `h(x) = e_d . (x - o) - a(L (x - o))` where `L` holds the first `d - 1`
/// frame rows.
#[derive(Debug)]
struct ChartHeightField {
    chart: Chart,
    order: u32,
}

impl ChartHeightField {
    fn new(chart: &Chart) -> Self {
        let g = chart.graph();
        let order = if g.is_piecewise_affine() {
            UNBOUNDED
        } else {
            g.oracle_order()
        };
        ChartHeightField {
            chart: chart.clone(),
            order,
        }
    }
}

impl Field for ChartHeightField {
    fn dim(&self) -> usize {
        self.chart.dim()
    }
    fn max_order(&self) -> u32 {
        self.order
    }
    fn deriv(&self, alpha: &MultiIndex, x: &[f64]) -> Complex64 {
        let d = self.dim();
        let frame = self.chart.frame();
        let rows = frame.rows();
        let y = frame.to_local(x);
        let yp = &y[..d - 1];
        let n = alpha.order();
        let linear = match n {
            0 => y[d - 1],
            1 => rows[d - 1][alpha.directions()[0]],
            _ => 0.0,
        };
        // d^alpha_x a(L x) = sum over axis tuples i_k of prod L[i_k][j_k] d_{i_1..i_n} a
        let dirs = alpha.directions();
        let graph_part = if n == 0 {
            self.chart.graph_value(yp)
        } else {
            let m = d - 1;
            let mut total = 0.0;
            let mut picks = vec![0usize; dirs.len()];
            loop {
                let mut coeff = 1.0;
                let mut counts = vec![0u32; m];
                for (k, &i) in picks.iter().enumerate() {
                    coeff *= rows[i][dirs[k]];
                    counts[i] += 1;
                }
                if coeff != 0.0 {
                    let beta = MultiIndex::new(counts).expect("non-empty");
                    match self.chart.graph_partial(&beta, yp) {
                        Ok(v) => total += coeff * v,
                        Err(_) => return real(f64::NAN),
                    }
                }
                let mut k = 0;
                loop {
                    if k == picks.len() {
                        return real(linear - total);
                    }
                    picks[k] += 1;
                    if picks[k] < m {
                        break;
                    }
                    picks[k] = 0;
                    k += 1;
                }
            }
        };
        real(linear - graph_part)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Polynomial,
    Trigonometric,
    GaussianBump,
    MollifierBump,
}

impl FamilyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyKind::Polynomial => "polynomial",
            FamilyKind::Trigonometric => "trigonometric",
            FamilyKind::GaussianBump => "gaussian_bump",
            FamilyKind::MollifierBump => "mollifier_bump",
        }
    }
}

/// Seeded description of a test-function family.
///
/// `degree` is the total degree for polynomials, the largest frequency (in
/// units of `pi`) for trigonometric members, and a sharpness level for the
/// bump kinds: widths shrink by `1 / (1 + degree)`. Coefficients are drawn
/// uniformly from `[-coefficient_bound, coefficient_bound]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub degree: u32,
    pub count: usize,
    pub seed: u64,
    pub coefficient_bound: f64,
    /// Multiply every member by `a + i b sin(...)` to make it complex-valued.
    pub complex: bool,
}

impl Default for FamilySpec {
    fn default() -> Self {
        FamilySpec {
            kind: FamilyKind::Polynomial,
            degree: 3,
            count: 100,
            seed: 0,
            coefficient_bound: 1.0,
            complex: false,
        }
    }
}

/// Where family members live.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyHints {
    pub dim: usize,
    /// Box in which members are placed; bump supports stay strictly inside.
    pub region: Cuboid,
    /// Place bumps across the hyperplane `x_d = 0` (upper half-space setting).
    pub halfspace: bool,
}

impl FamilyHints {
    pub fn region(region: Cuboid) -> Self {
        FamilyHints {
            dim: region.dim(),
            region,
            halfspace: false,
        }
    }

    /// Members supported in `(-delta, delta)^d`, straddling `x_d = 0`.
    pub fn halfspace(dim: usize, delta: f64) -> Self {
        FamilyHints {
            dim,
            region: Cuboid::symmetric(dim, delta),
            halfspace: true,
        }
    }
}

pub fn generate_family(spec: &FamilySpec, hints: &FamilyHints) -> Result<Vec<TestFunction>> {
    if !(spec.coefficient_bound > 0.0) {
        return Err(Error::InvalidParameter("coefficient_bound must be > 0".into()));
    }
    if hints.region.dim() != hints.dim {
        return Err(Error::DimensionMismatch {
            expected: hints.dim,
            found: hints.region.dim(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let cb = spec.coefficient_bound;
    (0..spec.count)
        .map(|i| {
            let base = match spec.kind {
                FamilyKind::Polynomial => polynomial_member(&mut rng, hints.dim, spec.degree, cb)?,
                FamilyKind::Trigonometric => trig_member(&mut rng, hints, spec.degree, cb)?,
                FamilyKind::GaussianBump => gaussian_member(&mut rng, hints, spec.degree, cb)?,
                FamilyKind::MollifierBump => bump_member(&mut rng, hints, spec.degree, cb)?,
            };
            let member = if spec.complex {
                complexify(&mut rng, hints, base)?
            } else {
                base
            };
            Ok(member.with_id(format!("{}:{}:{}", spec.kind.as_str(), spec.seed, i)))
        })
        .collect()
}

fn nonzero_coefficient(rng: &mut ChaCha8Rng, bound: f64) -> f64 {
    loop {
        let c: f64 = rng.random_range(-bound..bound);
        if c.abs() > 1e-3 * bound {
            return c;
        }
    }
}

fn polynomial_member(rng: &mut ChaCha8Rng, dim: usize, degree: u32, cb: f64) -> Result<TestFunction> {
    let terms: Vec<(MultiIndex, f64)> = enumerate(dim, degree, EnumerationMode::UpTo)
        .into_iter()
        .map(|b| (b, rng.random_range(-cb..cb)))
        .collect();
    Ok(TestFunction::polynomial(Polynomial::with_bound(
        dim, degree, terms,
    )?))
}

fn trig_member(rng: &mut ChaCha8Rng, hints: &FamilyHints, degree: u32, cb: f64) -> Result<TestFunction> {
    let top = std::f64::consts::PI * degree.max(1) as f64;
    let mut total: Option<TestFunction> = None;
    for _ in 0..3 {
        let amp = rng.random_range(-cb..cb);
        let omega: Vec<f64> = (0..hints.dim).map(|_| rng.random_range(0.0..top)).collect();
        let phase: Vec<f64> = (0..hints.dim)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        let term = TestFunction::trig(amp, omega, phase)?;
        total = Some(match total {
            None => term,
            Some(t) => t.add(&term)?,
        });
    }
    Ok(total.expect("three terms"))
}

fn gaussian_member(rng: &mut ChaCha8Rng, hints: &FamilyHints, degree: u32, cb: f64) -> Result<TestFunction> {
    let r = &hints.region;
    let side = r
        .lower
        .iter()
        .zip(&r.upper)
        .map(|(l, u)| u - l)
        .fold(f64::INFINITY, f64::min);
    let sigma = side * rng.random_range(0.15..0.5) / (1.0 + degree as f64);
    let center = r
        .lower
        .iter()
        .zip(&r.upper)
        .map(|(l, u)| rng.random_range(*l..*u))
        .collect();
    TestFunction::gaussian(nonzero_coefficient(rng, cb), center, sigma)
}

fn bump_member(rng: &mut ChaCha8Rng, hints: &FamilyHints, degree: u32, cb: f64) -> Result<TestFunction> {
    let r = &hints.region;
    let d = hints.dim;
    let sharp = 1.0 + degree as f64;
    let amp = nonzero_coefficient(rng, cb);
    let mut center = Vec::with_capacity(d);
    let mut radii = Vec::with_capacity(d);
    if hints.halfspace {
        let delta = (0..d)
            .map(|i| 0.5 * (r.upper[i] - r.lower[i]))
            .fold(f64::INFINITY, f64::min);
        // wide tangential profile over a sharp normal one
        for _ in 0..d - 1 {
            let rho = delta * rng.random_range(0.3..0.6) / sharp.sqrt();
            radii.push(rho);
            center.push(rng.random_range(-(delta - rho)..(delta - rho)) * 0.9);
        }
        let rho_d = delta * rng.random_range(0.02..0.15) / sharp;
        radii.push(rho_d);
        center.push(rho_d * rng.random_range(-0.5..0.25));
        let mid: Vec<f64> = r.lower.iter().zip(&r.upper).map(|(l, u)| 0.5 * (l + u)).collect();
        for i in 0..d {
            center[i] += mid[i];
        }
    } else {
        for i in 0..d {
            let half = 0.5 * (r.upper[i] - r.lower[i]);
            let rho = half * rng.random_range(0.2..0.6) / sharp;
            radii.push(rho);
            let mid = 0.5 * (r.upper[i] + r.lower[i]);
            center.push(mid + rng.random_range(-(half - rho)..(half - rho)) * 0.95);
        }
    }
    TestFunction::product_bump(amp, center, radii)
}

fn complexify(rng: &mut ChaCha8Rng, hints: &FamilyHints, base: TestFunction) -> Result<TestFunction> {
    let a = rng.random_range(0.5..1.0);
    let b = rng.random_range(-1.0..1.0);
    let omega: Vec<f64> = (0..hints.dim).map(|_| rng.random_range(0.5..3.0)).collect();
    let phase: Vec<f64> = (0..hints.dim).map(|_| rng.random_range(0.0..3.0)).collect();
    let wave = TestFunction::trig(1.0, omega, phase)?;
    let factor = TestFunction::constant(hints.dim, a).linear_combination(
        Complex64::ONE,
        &wave,
        Complex64::new(0.0, b),
    )?;
    base.mul(&factor)
}

/// Multiplies every member by the product of the height functions of the
/// charts carrying `gamma`, so each result vanishes on `gamma`.
pub fn restrict_to_zero_on(
    family: &[TestFunction],
    gamma: &BoundarySubset,
    atlas: &Atlas,
) -> Result<Vec<TestFunction>> {
    if gamma.is_empty() {
        return Err(Error::InvalidParameter("empty boundary subset".into()));
    }
    let mut charts: Vec<usize> = gamma.pieces().iter().map(|p| p.chart).collect();
    charts.sort_unstable();
    charts.dedup();
    let mut cutoff: Option<TestFunction> = None;
    for r in charts {
        if r >= atlas.len() {
            return Err(Error::InvalidParameter(format!("no chart {r}")));
        }
        let h = TestFunction::chart_height(atlas.chart(r));
        cutoff = Some(match cutoff {
            None => h,
            Some(c) => c.mul(&h)?,
        });
    }
    let cutoff = cutoff.expect("non-empty");
    family
        .iter()
        .map(|u| Ok(u.mul(&cutoff)?.with_id(format!("{}|0", u.id()))))
        .collect()
}
