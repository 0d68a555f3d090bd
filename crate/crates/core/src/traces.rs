//! Traces on chart boundaries: restriction, normal derivatives, and the
//! planar tangential derivatives.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::atlas::{Atlas, Chart};
use crate::domain::{Domain, Region};
use crate::error::{Error, Result};
use crate::function_space::TestFunction;
use crate::multiindex::{enumerate, EnumerationMode, MultiIndex};
use crate::norms::{power_sums_on_rule, root};
use crate::quadrature::{BoundaryNode, Cuboid, QuadratureSpec, TensorRule};

#[derive(Clone, Debug)]
enum Source {
    Trace(TestFunction),
    Normal(TestFunction, u32),
}

/// A function on the boundary, addressed chart by chart.
#[derive(Clone, Debug)]
pub struct BoundaryFunction<'a> {
    atlas: &'a Atlas,
    source: Source,
}

impl<'a> BoundaryFunction<'a> {
    pub fn atlas(&self) -> &'a Atlas {
        self.atlas
    }

    /// Derivative order available in the chart variables `x'`.
    pub fn max_order(&self) -> u32 {
        match &self.source {
            Source::Trace(u) => u.max_order(),
            Source::Normal(..) => 0,
        }
    }

    /// `g_r(x')`.
    pub fn chart_value(&self, r: usize, xp: &[f64]) -> Result<Complex64> {
        let chart = self.atlas.chart(r);
        match &self.source {
            Source::Trace(u) => Ok(u.eval(&chart.boundary_point(xp))),
            Source::Normal(u, l) => {
                normal_derivative_at(u, &chart.normal(xp)?, &chart.boundary_point(xp), *l)
            }
        }
    }

    /// `d^beta g_r (x')` in the chart variables.
    pub fn chart_derivative(&self, r: usize, beta: &MultiIndex, xp: &[f64]) -> Result<Complex64> {
        match &self.source {
            Source::Trace(u) => composition_derivative(u, self.atlas.chart(r), beta, xp),
            Source::Normal(..) if beta.is_zero() => self.chart_value(r, xp),
            Source::Normal(..) => Err(Error::OrderTooHigh {
                requested: beta.order(),
                available: 0,
            }),
        }
    }

    /// Value at a precomputed boundary quadrature node.
    pub fn at_node(&self, node: &BoundaryNode) -> Result<Complex64> {
        match &self.source {
            Source::Trace(u) => Ok(u.eval(&node.point)),
            Source::Normal(u, l) => normal_derivative_at(u, &node.normal, &node.point, *l),
        }
    }

    /// Largest disagreement between chart representations at boundary
    /// points shared by two charts, sampled on `samples` points per chart.
    pub fn overlap_discrepancy(&self, samples: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (r, chart) in self.atlas.charts().iter().enumerate() {
            let a = chart.half_width();
            let m = chart.dim() - 1;
            for k in 0..samples {
                let t = -a + 2.0 * a * (k as f64 + 0.5) / samples as f64;
                let xp = vec![t; m];
                let x = chart.boundary_point(&xp);
                let Ok(v) = self.chart_value(r, &xp) else { continue };
                for (s, other) in self.atlas.charts().iter().enumerate() {
                    if s == r {
                        continue;
                    }
                    let y = other.frame().to_local(&x);
                    let (yp, yd) = y.split_at(m);
                    if !other.contains(yp) || (yd[0] - other.graph_value(yp)).abs() > 1e-9 {
                        continue;
                    }
                    if let Ok(w) = self.chart_value(s, yp) {
                        worst = worst.max((v - w).norm());
                    }
                }
            }
        }
        Ok(worst)
    }
}

/// `gamma_0 u`: the chart compositions `x' -> u(x', a_r(x'))`.
pub fn trace<'a>(u: &TestFunction, atlas: &'a Atlas) -> BoundaryFunction<'a> {
    BoundaryFunction {
        atlas,
        source: Source::Trace(u.clone()),
    }
}

/// `d_nu^l u = sum_{|alpha| = l} (l!/alpha!) nu^alpha d^alpha u` on the boundary.
pub fn normal_derivative<'a>(
    u: &TestFunction,
    atlas: &'a Atlas,
    l: u32,
) -> Result<BoundaryFunction<'a>> {
    u.check_order(l)?;
    if atlas.dim() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: atlas.dim(),
            found: u.dim(),
        });
    }
    Ok(BoundaryFunction {
        atlas,
        source: if l == 0 {
            Source::Trace(u.clone())
        } else {
            Source::Normal(u.clone(), l)
        },
    })
}

/// `d_nu^l u (x)` for a given unit normal.
pub fn normal_derivative_at(
    u: &TestFunction,
    normal: &[f64],
    x: &[f64],
    l: u32,
) -> Result<Complex64> {
    let mut acc = Complex64::ZERO;
    for alpha in enumerate(u.dim(), l, EnumerationMode::Exact) {
        let w = alpha.multinomial()? as f64 * alpha.pow(normal);
        if w != 0.0 {
            acc += w * u.deriv(&alpha, x)?;
        }
    }
    Ok(acc)
}

fn gradient(u: &TestFunction, x: &[f64]) -> Result<Vec<Complex64>> {
    (0..u.dim())
        .map(|j| u.deriv(&MultiIndex::unit(u.dim(), j), x))
        .collect()
}

fn hessian(u: &TestFunction, x: &[f64]) -> Result<Vec<Vec<Complex64>>> {
    let d = u.dim();
    let mut h = vec![vec![Complex64::ZERO; d]; d];
    for i in 0..d {
        for j in i..d {
            let v = u.deriv(&MultiIndex::unit(d, i).add(&MultiIndex::unit(d, j))?, x)?;
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    Ok(h)
}

fn dot(a: &[Complex64], b: &[f64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Ambient tangent vectors `T_i = R_i + d_i a R_d` at `x'`.
fn tangents(chart: &Chart, xp: &[f64]) -> Result<Vec<Vec<f64>>> {
    let rows = chart.frame().rows();
    let d = chart.dim();
    let g = chart.gradient(xp)?;
    Ok((0..d - 1)
        .map(|i| (0..d).map(|j| rows[i][j] + g[i] * rows[d - 1][j]).collect())
        .collect())
}

/// Chain rule for `d^beta [u(X_r(x'))]`: exact to order 2 on any chart with
/// second-derivative oracles, any order on piecewise-affine charts.
pub fn composition_derivative(
    u: &TestFunction,
    chart: &Chart,
    beta: &MultiIndex,
    xp: &[f64],
) -> Result<Complex64> {
    let d = chart.dim();
    if beta.dim() != d - 1 {
        return Err(Error::DimensionMismatch {
            expected: d - 1,
            found: beta.dim(),
        });
    }
    u.check_order(beta.order())?;
    let x = chart.boundary_point(xp);
    let n = beta.order();
    if n == 0 {
        return Ok(u.eval(&x));
    }
    let dirs = beta.directions();
    let t = tangents(chart, xp)?;
    if n == 1 {
        return Ok(dot(&gradient(u, &x)?, &t[dirs[0]]));
    }
    if !chart.graph().is_piecewise_affine() {
        if n > 2 {
            return Err(Error::RegularityTooLow(format!(
                "chain rule of order {n} needs a piecewise-affine chart"
            )));
        }
        let h = hessian(u, &x)?;
        let (i, j) = (dirs[0], dirs[1]);
        let mut acc = Complex64::ZERO;
        for a in 0..d {
            for b in 0..d {
                acc += t[i][a] * h[a][b] * t[j][b];
            }
        }
        let mut e = MultiIndex::unit(d - 1, i);
        e = e.add(&MultiIndex::unit(d - 1, j))?;
        let aij = chart.graph_partial(&e, xp)?;
        return Ok(acc + aij * dot(&gradient(u, &x)?, &chart.frame().rows()[d - 1]));
    }
    // constant tangents: sum over ambient axis tuples
    let mut acc = Complex64::ZERO;
    let mut picks = vec![0usize; dirs.len()];
    loop {
        let mut coeff = 1.0;
        let mut counts = vec![0u32; d];
        for (k, &j) in picks.iter().enumerate() {
            coeff *= t[dirs[k]][j];
            counts[j] += 1;
        }
        if coeff != 0.0 {
            acc += coeff * u.deriv(&MultiIndex::new(counts)?, &x)?;
        }
        let mut k = 0;
        loop {
            if k == picks.len() {
                return Ok(acc);
            }
            picks[k] += 1;
            if picks[k] < d {
                break;
            }
            picks[k] = 0;
            k += 1;
        }
    }
}

fn require_planar(chart: &Chart) -> Result<()> {
    if chart.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: chart.dim(),
        });
    }
    Ok(())
}

/// `d_tau u = theta^{-1} d/dt [u(t, a_r(t))]` on a planar chart.
pub fn tangential_derivative(u: &TestFunction, chart: &Chart, t: f64) -> Result<Complex64> {
    require_planar(chart)?;
    let g1 = composition_derivative(u, chart, &MultiIndex::unit(1, 0), &[t])?;
    Ok(g1 / chart.theta(t)?)
}

/// `d_tau^2 u = theta^{-2} [g'' - (theta'/theta) g']` with `g = u(t, a_r(t))`.
pub fn tangential_second_derivative(u: &TestFunction, chart: &Chart, t: f64) -> Result<Complex64> {
    require_planar(chart)?;
    let th = chart.theta(t)?;
    let thp = chart.theta_prime(t)?;
    let g1 = composition_derivative(u, chart, &MultiIndex::unit(1, 0), &[t])?;
    let g2 = composition_derivative(u, chart, &MultiIndex::new(vec![2])?, &[t])?;
    Ok((g2 - thp / th * g1) / (th * th))
}

/// `d_tau^2 u` from the geometry of the curve: `tau^T H tau + grad u . dtau/ds`.
pub fn tangential_second_geometric(u: &TestFunction, chart: &Chart, t: f64) -> Result<Complex64> {
    require_planar(chart)?;
    let x = chart.boundary_point(&[t]);
    let rows = chart.frame().rows();
    let a1 = chart.graph_partial(&MultiIndex::unit(1, 0), &[t])?;
    let a2 = chart.graph_partial(&MultiIndex::new(vec![2])?, &[t])?;
    let th = (1.0 + a1 * a1).sqrt();
    let thp = a1 * a2 / th;
    let tl = [1.0 / th, a1 / th];
    let dtl = [-thp / (th * th), a2 / th - a1 * thp / (th * th)];
    let to_ambient = |v: [f64; 2]| [v[0] * rows[0][0] + v[1] * rows[1][0], v[0] * rows[0][1] + v[1] * rows[1][1]];
    let tau = to_ambient(tl);
    let dtau = to_ambient([dtl[0] / th, dtl[1] / th]);
    let h = hessian(u, &x)?;
    let g = gradient(u, &x)?;
    let mut acc = dot(&g, &dtau);
    for a in 0..2 {
        for b in 0..2 {
            acc += tau[a] * h[a][b] * tau[b];
        }
    }
    Ok(acc)
}

/// `|g'' - (theta'/theta) g' - theta^2 d_tau^2 u|` with `d_tau^2 u` taken
/// from [`tangential_second_geometric`].
pub fn tangential_residual(u: &TestFunction, chart: &Chart, t: f64) -> Result<f64> {
    let th = chart.theta(t)?;
    let thp = chart.theta_prime(t)?;
    let g1 = composition_derivative(u, chart, &MultiIndex::unit(1, 0), &[t])?;
    let g2 = composition_derivative(u, chart, &MultiIndex::new(vec![2])?, &[t])?;
    let tt = tangential_second_geometric(u, chart, t)?;
    Ok((g2 - thp / th * g1 - th * th * tt).norm())
}

/// Which interpolation-type trace estimate to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpKind {
    /// `||u||_{p, dR^d_+}` against `||u||_p^{(p-1)/p} ||u||_{1,p}^{1/p}`.
    Halfspace,
    Order0,
    Normal,
    Laplacian,
    NormalLaplacian,
}

impl InterpKind {
    pub const ALL: [InterpKind; 5] = [
        InterpKind::Halfspace,
        InterpKind::Order0,
        InterpKind::Normal,
        InterpKind::Laplacian,
        InterpKind::NormalLaplacian,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            InterpKind::Halfspace => "interp.halfspace",
            InterpKind::Order0 => "interp.order0",
            InterpKind::Normal => "interp.normal",
            InterpKind::Laplacian => "interp.laplacian",
            InterpKind::NormalLaplacian => "interp.normal_laplacian",
        }
    }

    pub fn parse(id: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.id() == id)
            .ok_or_else(|| Error::Parse(format!("unknown interpolation kind {id}")))
    }

    /// Lower Sobolev order `j` of the right-hand side.
    pub fn lower_order(&self) -> u32 {
        match self {
            InterpKind::Halfspace | InterpKind::Order0 => 0,
            InterpKind::Normal => 1,
            InterpKind::Laplacian => 2,
            InterpKind::NormalLaplacian => 3,
        }
    }

    /// Derivative order the function must provide.
    pub fn required_order(&self) -> u32 {
        self.lower_order() + 1
    }
}

/// Where an interpolation estimate is evaluated.
#[derive(Clone, Copy, Debug)]
pub enum InterpSetting<'a> {
    /// Upper half-space `x_d > 0`; functions must have compact support.
    Halfspace,
    Domain(&'a Domain),
}

/// Both sides of an interpolation estimate, without the constant:
/// `lhs` is the boundary `L^p` norm of `u`, `d_nu u`, `Delta u` or
/// `d_nu Delta u`; `rhs = ||u||_{j,p}^{(p-1)/p} ||u||_{j+1,p}^{1/p}`.
pub fn interp_lhs_rhs(
    kind: InterpKind,
    u: &TestFunction,
    setting: InterpSetting<'_>,
    p: f64,
    q: &QuadratureSpec,
) -> Result<(f64, f64)> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p = {p} outside [1, inf)")));
    }
    u.check_order(kind.required_order())?;
    let j = kind.lower_order();
    match (kind, setting) {
        (InterpKind::Halfspace, InterpSetting::Halfspace) => halfspace_sides(u, p, q),
        (InterpKind::Halfspace, _) | (_, InterpSetting::Halfspace) => Err(Error::InvalidParameter(
            format!("{} does not apply to this setting", kind.id()),
        )),
        (_, InterpSetting::Domain(domain)) => {
            let atlas = domain.atlas()?;
            let f = match kind {
                InterpKind::Order0 => u.clone(),
                InterpKind::Normal => u.clone(),
                InterpKind::Laplacian | InterpKind::NormalLaplacian => u.laplacian()?,
                InterpKind::Halfspace => unreachable!(),
            };
            let l = matches!(kind, InterpKind::Normal | InterpKind::NormalLaplacian) as u32;
            let bf = normal_derivative(&f, atlas, l)?;
            let lhs = crate::norms::boundary_lp_integral_norm(&bf, p, q)?.value;
            let rule = domain.region().rule(q)?;
            let sums = power_sums_on_rule(u, &rule, j + 1, p)?;
            Ok((lhs, interp_rhs(&sums, j, p)))
        }
    }
}

fn interp_rhs(sums: &[f64], j: u32, p: f64) -> f64 {
    let low: f64 = sums[..=j as usize].iter().sum();
    let high = low + sums[j as usize + 1];
    root(low, p).powf((p - 1.0) / p) * root(high, p).powf(1.0 / p)
}

fn halfspace_sides(u: &TestFunction, p: f64, q: &QuadratureSpec) -> Result<(f64, f64)> {
    let d = u.dim();
    let Some(bbox) = u.support().bounding_box() else {
        return Err(Error::SupportViolation(format!(
            "{} has no compact support",
            u.id()
        )));
    };
    if d < 2 {
        return Err(Error::InvalidParameter("half-space needs d >= 2".into()));
    }
    let upper_d = bbox.upper[d - 1];
    let lower_d = bbox.lower[d - 1].max(0.0);
    if upper_d <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let foot = Cuboid {
        lower: bbox.lower[..d - 1].to_vec(),
        upper: bbox.upper[..d - 1].to_vec(),
    };
    let lhs_sum = if bbox.lower[d - 1] < 0.0 {
        TensorRule::from_spec(&foot, q).integrate(|xp| {
            let mut x = xp.to_vec();
            x.push(0.0);
            u.eval(&x).norm().powf(p)
        })?
    } else {
        0.0
    };
    let mut lower = bbox.lower.clone();
    lower[d - 1] = lower_d;
    let region = Region::Box(Cuboid {
        lower,
        upper: bbox.upper.clone(),
    });
    let rule = region.rule(q)?;
    let sums = power_sums_on_rule(u, &rule, 1, p)?;
    Ok((root(lhs_sum, p), interp_rhs(&sums, 0, p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::{single_chart_atlas, unit_square_atlas, Frame, GraphFn, RegularityClass};
    use crate::multiindex::Polynomial;

    fn mi(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec()).unwrap()
    }

    fn poly(terms: &[(&[u32], f64)]) -> TestFunction {
        TestFunction::polynomial(
            Polynomial::from_terms(2, terms.iter().map(|(e, c)| (mi(e), *c))).unwrap(),
        )
    }

    fn line_chart(slope: f64) -> Chart {
        let g = GraphFn::Polynomial(
            Polynomial::from_terms(1, [(MultiIndex::unit(1, 0), slope)]).unwrap(),
        );
        Chart::new(1.0, 1.0, g, Frame::identity(vec![0.0, 0.0]), RegularityClass::SMOOTH).unwrap()
    }

    #[test]
    fn trace_examples() {
        let atlas = unit_square_atlas();
        let one = TestFunction::constant(2, 1.0);
        assert_eq!(trace(&one, &atlas).chart_value(3, &[0.2]).unwrap().re, 1.0);
        let x2 = TestFunction::coordinate(2, 1);
        assert_eq!(trace(&x2, &atlas).chart_value(0, &[0.3]).unwrap().re, 0.0);

        let a = single_chart_atlas(line_chart(1.0));
        let u = poly(&[(&[2, 0], 1.0), (&[0, 1], 1.0)]);
        let g = trace(&u, &a);
        for &t in &[-0.5, 0.25, 0.7] {
            assert!((g.chart_value(0, &[t]).unwrap().re - (t * t + t)).abs() < 1e-15);
            assert!((g.chart_derivative(0, &mi(&[1]), &[t]).unwrap().re - (2.0 * t + 1.0)).abs() < 1e-14);
            assert!((g.chart_derivative(0, &mi(&[2]), &[t]).unwrap().re - 2.0).abs() < 1e-14);
            assert_eq!(g.chart_derivative(0, &mi(&[3]), &[t]).unwrap().re, 0.0);
        }
    }

    #[test]
    fn normal_derivative_examples() {
        let atlas = unit_square_atlas();
        let x2 = TestFunction::coordinate(2, 1);
        let n0 = normal_derivative(&x2, &atlas, 0).unwrap();
        assert_eq!(n0.chart_value(0, &[0.1]).unwrap(), trace(&x2, &atlas).chart_value(0, &[0.1]).unwrap());
        let n1 = normal_derivative(&x2, &atlas, 1).unwrap();
        assert_eq!(n1.chart_value(0, &[0.1]).unwrap().re, -1.0);
        let x2sq = poly(&[(&[0, 2], 1.0)]);
        let n2 = normal_derivative(&x2sq, &atlas, 2).unwrap();
        assert_eq!(n2.chart_value(0, &[0.1]).unwrap().re, 2.0);
    }

    #[test]
    fn tangential_examples() {
        let flat = line_chart(0.0);
        let sloped = line_chart(1.0);
        let x1 = TestFunction::coordinate(2, 0);
        let one = TestFunction::constant(2, 1.0);
        let x1sq = poly(&[(&[2, 0], 1.0)]);
        assert_eq!(tangential_derivative(&x1, &flat, 0.3).unwrap().re, 1.0);
        let v = tangential_derivative(&x1, &sloped, 0.3).unwrap().re;
        assert!((v - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(tangential_derivative(&one, &sloped, 0.3).unwrap().re, 0.0);
        assert_eq!(tangential_second_derivative(&x1sq, &flat, 0.3).unwrap().re, 2.0);
        let v = tangential_second_derivative(&x1sq, &sloped, 0.3).unwrap().re;
        assert!((v - 1.0).abs() < 1e-15);
        let v = tangential_second_geometric(&x1sq, &sloped, 0.3).unwrap().re;
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interp_zero_and_scaling() {
        let domain = Domain::disk(1.0).unwrap();
        let q = QuadratureSpec::with_points(8);
        let zero = TestFunction::zero(2);
        for kind in [InterpKind::Order0, InterpKind::Normal, InterpKind::Laplacian] {
            let (l, r) = interp_lhs_rhs(kind, &zero, InterpSetting::Domain(&domain), 2.0, &q).unwrap();
            assert_eq!((l, r), (0.0, 0.0));
        }
        let u = poly(&[(&[2, 1], 1.0), (&[0, 1], -0.5), (&[0, 0], 0.3)]);
        let (l1, r1) = interp_lhs_rhs(InterpKind::Normal, &u, InterpSetting::Domain(&domain), 1.5, &q).unwrap();
        let (l2, r2) = interp_lhs_rhs(
            InterpKind::Normal,
            &u.scale_real(-3.0),
            InterpSetting::Domain(&domain),
            1.5,
            &q,
        )
        .unwrap();
        assert!((l2 - 3.0 * l1).abs() < 1e-12 * l2);
        assert!((r2 - 3.0 * r1).abs() < 1e-12 * r2);
    }

    #[test]
    fn halfspace_rejects_unbounded_support() {
        let u = TestFunction::gaussian(1.0, vec![0.0, 0.0], 0.3).unwrap();
        let r = interp_lhs_rhs(
            InterpKind::Halfspace,
            &u,
            InterpSetting::Halfspace,
            2.0,
            &QuadratureSpec::default(),
        );
        assert!(matches!(r, Err(Error::SupportViolation(_))));
    }

    #[test]
    fn halfspace_p1_rhs_is_w11_norm() {
        let u = TestFunction::product_bump(1.0, vec![0.1, 0.0], vec![0.5, 0.2]).unwrap();
        let q = QuadratureSpec::default();
        let (_, rhs) = interp_lhs_rhs(InterpKind::Halfspace, &u, InterpSetting::Halfspace, 1.0, &q).unwrap();
        let region = Region::Box(Cuboid::new(vec![-0.4, 0.0], vec![0.6, 0.2]).unwrap());
        let sums = power_sums_on_rule(&u, &region.rule(&q).unwrap(), 1, 1.0).unwrap();
        assert!((rhs - (sums[0] + sums[1])).abs() < 1e-12);
    }
}
