//! Deterministic quadrature: composite tensor Gauss–Legendre rules on boxes,
//! sheared chart regions, boundaries, and the diagonal-singular double
//! integrals of fractional seminorms.
//!
//! Node values are computed in parallel but always reduced by the same
//! fixed pairwise tree, so results do not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atlas::{Atlas, Chart};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    GaussLegendreTensor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    /// Gauss points per axis and panel.
    pub points_per_axis: usize,
    /// Equal panels per axis. An even count keeps nodes off the chart kinks
    /// at `x' = 0`.
    pub panels: usize,
    /// Panels per axis of each chart cube in boundary rules. Normalised
    /// partition functions have steep transitions, so boundary rules need
    /// more panels than volume rules.
    pub boundary_panels: usize,
    /// Initial diagonal exclusion radius; `None` means `2 * diam / n`.
    pub singular_exclusion: Option<f64>,
    pub refinement_levels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            scheme: Scheme::GaussLegendreTensor,
            points_per_axis: 24,
            panels: 2,
            boundary_panels: 8,
            singular_exclusion: None,
            refinement_levels: 4,
        }
    }
}

impl QuadratureSpec {
    pub fn with_points(n: usize) -> Self {
        QuadratureSpec {
            points_per_axis: n,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points_per_axis == 0
            || self.panels == 0
            || self.boundary_panels == 0
            || self.refinement_levels == 0
        {
            return Err(Error::InvalidParameter(
                "points_per_axis, panels, boundary_panels and refinement_levels must be >= 1"
                    .into(),
            ));
        }
        if let Some(eps) = self.singular_exclusion {
            if !(eps > 0.0) {
                return Err(Error::InvalidParameter("singular_exclusion must be > 0".into()));
            }
        }
        Ok(())
    }
}

/// Diagnostic attached to quadrature-derived values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityFlag {
    /// Successive refinement increments of a singular integral did not decrease.
    NonMonotoneIncrements,
    /// Only one refinement level was run, so no error estimate exists.
    SingleLevel,
}

/// Axis-aligned box `prod_i (lower_i, upper_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cuboid {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Cuboid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        if lower.is_empty() || lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidParameter(format!(
                "degenerate box {lower:?} .. {upper:?}"
            )));
        }
        Ok(Cuboid { lower, upper })
    }

    pub fn unit(dim: usize) -> Self {
        Cuboid {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn symmetric(dim: usize, half_width: f64) -> Self {
        Cuboid {
            lower: vec![-half_width; dim],
            upper: vec![half_width; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    pub fn diameter(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l) * (u - l))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| l < v && v < u)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite 1-d rule on `(lo, hi)`.
pub fn composite_rule(lo: f64, hi: f64, n: usize, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(n);
    let h = (hi - lo) / panels as f64;
    let mut nodes = Vec::with_capacity(n * panels);
    let mut weights = Vec::with_capacity(n * panels);
    for k in 0..panels {
        let a = lo + k as f64 * h;
        for (x, w) in xs.iter().zip(&ws) {
            nodes.push(a + 0.5 * h * (x + 1.0));
            weights.push(0.5 * h * w);
        }
    }
    (nodes, weights)
}

/// Tensor-product rule with nodes stored row-major in a flat buffer.
#[derive(Clone, Debug)]
pub struct TensorRule {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl TensorRule {
    pub fn new(cube: &Cuboid, n: usize, panels: usize) -> Self {
        let dim = cube.dim();
        let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..dim)
            .map(|i| composite_rule(cube.lower[i], cube.upper[i], n, panels))
            .collect();
        let per_axis = n * panels;
        let total = per_axis.pow(dim as u32);
        let mut nodes = Vec::with_capacity(total * dim);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            let mut w = 1.0;
            for (i, &j) in idx.iter().enumerate() {
                nodes.push(axes[i].0[j]);
                w *= axes[i].1[j];
            }
            weights.push(w);
            for i in (0..dim).rev() {
                idx[i] += 1;
                if idx[i] < per_axis {
                    break;
                }
                idx[i] = 0;
            }
        }
        TensorRule { dim, nodes, weights }
    }

    pub(crate) fn from_parts(dim: usize, nodes: Vec<f64>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(nodes.len(), dim * weights.len());
        TensorRule { dim, nodes, weights }
    }

    pub fn from_spec(cube: &Cuboid, q: &QuadratureSpec) -> Self {
        Self::new(cube, q.points_per_axis, q.panels)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.nodes.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `sum_i w_i f(x_i)`.
    pub fn integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let values: Vec<f64> = (0..self.len())
            .into_par_iter()
            .map(|i| f(self.node(i)))
            .collect();
        self.reduce(values)
    }

    /// Fallible variant of [`TensorRule::integrate`].
    pub fn try_integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let values: Vec<f64> = (0..self.len())
            .into_par_iter()
            .map(|i| f(self.node(i)))
            .collect::<Result<_>>()?;
        self.reduce(values)
    }

    fn reduce(&self, values: Vec<f64>) -> Result<f64> {
        let mut terms = values;
        for (i, (t, w)) in terms.iter_mut().zip(&self.weights).enumerate() {
            if !t.is_finite() {
                return Err(Error::NonFiniteIntegrand(self.node(i).to_vec()));
            }
            *t *= w;
        }
        Ok(pairwise_sum(&terms))
    }
}

/// Fixed-tree pairwise summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn integrate_cube<F>(f: F, cube: &Cuboid, q: &QuadratureSpec) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    q.validate()?;
    TensorRule::from_spec(cube, q).integrate(f)
}

/// Integral over the chart region `a_r(y') < y_d < a_r(y') + b`, with `f`
/// given in local chart coordinates. The shear `y_d -> y_d + a_r(y')` has
/// unit Jacobian.
pub fn integrate_subgraph<F>(f: F, chart: &Chart, q: &QuadratureSpec) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    q.validate()?;
    let d = chart.dim();
    let mut lower = vec![-chart.half_width(); d];
    let mut upper = vec![chart.half_width(); d];
    lower[d - 1] = 0.0;
    upper[d - 1] = chart.depth();
    let rule = TensorRule::from_spec(&Cuboid { lower, upper }, q);
    let graph = chart.graph();
    rule.integrate(|y| {
        let (yp, yd) = y.split_at(d - 1);
        let mut z = y.to_vec();
        z[d - 1] = yd[0] + graph.value(yp);
        f(&z)
    })
}

/// One node of a boundary rule.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryNode {
    pub chart: usize,
    /// Local coordinate `x'` in the chart cube.
    pub local: Vec<f64>,
    /// Ambient boundary point.
    pub point: Vec<f64>,
    /// Ambient outer unit normal.
    pub normal: Vec<f64>,
    /// Gauss weight in `x'`.
    pub quad_weight: f64,
    /// `sqrt(1 + |grad a_r|^2)`.
    pub surface_weight: f64,
    /// `phi_r` at the node.
    pub partition: f64,
}

impl BoundaryNode {
    /// Weight of the node in `int f dsigma`.
    pub fn sigma_weight(&self) -> f64 {
        self.quad_weight * self.partition * self.surface_weight
    }
}

/// Precomputed boundary nodes of every chart of an atlas, in chart order.
#[derive(Clone, Debug)]
pub struct BoundaryRule {
    nodes: Vec<BoundaryNode>,
    chart_ranges: Vec<std::ops::Range<usize>>,
}

impl BoundaryRule {
    pub fn build(atlas: &Atlas, n: usize, panels: usize) -> Result<Self> {
        let tol = atlas.bump_params().cover_tolerance;
        let mut nodes = Vec::new();
        let mut chart_ranges = Vec::new();
        for (r, chart) in atlas.charts().iter().enumerate() {
            let start = nodes.len();
            let cube = Cuboid::symmetric(chart.dim() - 1, chart.half_width());
            let rule = TensorRule::new(&cube, n, panels);
            let built: Vec<BoundaryNode> = (0..rule.len())
                .into_par_iter()
                .map(|i| {
                    let xp = rule.node(i);
                    let point = chart.boundary_point(xp);
                    let weights = atlas.partition_weights(&point).map_err(|_| {
                        Error::UncoveredBoundary {
                            chart: r,
                            point: point.clone(),
                            sum: 0.0,
                        }
                    })?;
                    let sum: f64 = weights.iter().sum();
                    if sum < 1.0 - tol {
                        return Err(Error::UncoveredBoundary {
                            chart: r,
                            point,
                            sum,
                        });
                    }
                    Ok(BoundaryNode {
                        chart: r,
                        local: xp.to_vec(),
                        normal: chart.normal(xp)?,
                        surface_weight: chart.surface_weight(xp)?,
                        partition: weights[r],
                        quad_weight: rule.weight(i),
                        point,
                    })
                })
                .collect::<Result<_>>()?;
            nodes.extend(built);
            chart_ranges.push(start..nodes.len());
        }
        Ok(BoundaryRule {
            nodes,
            chart_ranges,
        })
    }

    pub fn nodes(&self) -> &[BoundaryNode] {
        &self.nodes
    }

    pub fn chart_nodes(&self, r: usize) -> &[BoundaryNode] {
        &self.nodes[self.chart_ranges[r].clone()]
    }

    pub fn chart_count(&self) -> usize {
        self.chart_ranges.len()
    }

    /// Evaluates `f` at every node in parallel, keeping node order.
    pub fn evaluate<F>(&self, f: F) -> Result<Vec<f64>>
    where
        F: Fn(&BoundaryNode) -> Result<f64> + Sync,
    {
        let values: Vec<f64> = self.nodes.par_iter().map(&f).collect::<Result<_>>()?;
        for (v, node) in values.iter().zip(&self.nodes) {
            if !v.is_finite() {
                return Err(Error::NonFiniteIntegrand(node.point.clone()));
            }
        }
        Ok(values)
    }

    /// `int f dsigma` from precomputed node values.
    pub fn sigma_sum(&self, values: &[f64]) -> f64 {
        let terms: Vec<f64> = values
            .iter()
            .zip(&self.nodes)
            .map(|(v, n)| v * n.sigma_weight())
            .collect();
        pairwise_sum(&terms)
    }

    /// `int_{Delta_r} f_r dx'` for chart `r`, without partition or weight.
    pub fn chart_sum(&self, r: usize, values: &[f64]) -> f64 {
        let range = self.chart_ranges[r].clone();
        let terms: Vec<f64> = values[range.clone()]
            .iter()
            .zip(&self.nodes[range])
            .map(|(v, n)| v * n.quad_weight)
            .collect();
        pairwise_sum(&terms)
    }
}

/// Boundary rule of `atlas` for `q`, cached inside the atlas.
pub fn boundary_rule(atlas: &Atlas, q: &QuadratureSpec) -> Result<std::sync::Arc<BoundaryRule>> {
    q.validate()?;
    atlas.cached_rule((q.points_per_axis, q.boundary_panels), || {
        BoundaryRule::build(atlas, q.points_per_axis, q.boundary_panels)
    })
}

/// `int_{boundary} f dsigma` as the partition-weighted sum of chart integrals.
pub fn integrate_boundary<F>(f: F, atlas: &Atlas, q: &QuadratureSpec) -> Result<f64>
where
    F: Fn(&BoundaryNode) -> Result<f64> + Sync,
{
    let rule = boundary_rule(atlas, q)?;
    let values = rule.evaluate(f)?;
    Ok(rule.sigma_sum(&values))
}

/// Result of a diagonal-singular double integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularIntegral {
    /// Extrapolated value.
    pub value: f64,
    /// Magnitude of the last refinement increment.
    pub error_estimate: f64,
    /// Raw value at each refinement level.
    pub levels: Vec<f64>,
    pub flags: Vec<QualityFlag>,
}

/// `int_B int_B g(x, y) / |x - y|^(d + s p) dx dy` for `g ~ |x - y|^p` near
/// the diagonal.
///
/// Level `l` uses `panels * 2^l` panels per axis and drops node pairs closer
/// than `eps_0 / 2^l`, so the ratio of exclusion radius to node spacing is
/// fixed. The levels are combined by Richardson extrapolation with the
/// truncation rate `p (1 - s)`.
pub fn integrate_double_singular<G>(
    g: G,
    cube: &Cuboid,
    s: f64,
    p: f64,
    q: &QuadratureSpec,
) -> Result<SingularIntegral>
where
    G: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    q.validate()?;
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter(format!("s = {s} outside (0, 1)")));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} < 1")));
    }
    let d = cube.dim();
    let power = d as f64 + s * p;
    let eps0 = q
        .singular_exclusion
        .unwrap_or(2.0 * cube.diameter() / q.points_per_axis as f64);
    let mut levels = Vec::with_capacity(q.refinement_levels);
    for level in 0..q.refinement_levels {
        let scale = (1usize << level) as f64;
        let rule = TensorRule::new(cube, q.points_per_axis, q.panels << level);
        let eps = eps0 / scale;
        levels.push(excluded_double_sum(&rule, &g, power, eps)?);
    }
    let mut flags = Vec::new();
    let last = *levels.last().expect("at least one level");
    if levels.len() == 1 {
        flags.push(QualityFlag::SingleLevel);
        return Ok(SingularIntegral {
            value: last,
            error_estimate: 0.0,
            levels,
            flags,
        });
    }
    let increments: Vec<f64> = levels.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    if increments.windows(2).any(|w| w[1] > w[0]) {
        flags.push(QualityFlag::NonMonotoneIncrements);
    }
    let gamma = p * (1.0 - s);
    let prev = levels[levels.len() - 2];
    let value = last + (last - prev) / (2f64.powf(gamma) - 1.0);
    Ok(SingularIntegral {
        value,
        error_estimate: *increments.last().expect("two levels"),
        levels,
        flags,
    })
}

fn excluded_double_sum<G>(rule: &TensorRule, g: &G, power: f64, eps: f64) -> Result<f64>
where
    G: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    let n = rule.len();
    let eps2 = eps * eps;
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = rule.node(i);
            let mut row = Vec::with_capacity(n - i);
            for j in (i + 1)..n {
                let y = rule.node(j);
                let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                if r2 < eps2 {
                    continue;
                }
                let v = g(x, y);
                if !v.is_finite() {
                    return Err(Error::NonFiniteIntegrand([x, y].concat()));
                }
                row.push(rule.weight(j) * v / r2.powf(0.5 * power));
            }
            Ok(2.0 * rule.weight(i) * pairwise_sum(&row))
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&rows))
}
