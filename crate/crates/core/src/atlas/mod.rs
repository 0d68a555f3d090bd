//! Chart atlases of bounded Lipschitz domains.
//!
//! A chart describes the boundary near one patch as the graph of
//! `a_r` over the cube `(-a, a)^(d-1)` in a rotated local frame, with the
//! domain lying in `a_r(x') < x_d < a_r(x') + b`.

mod factories;
mod file;
mod graph;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;
use crate::quadrature::BoundaryRule;

pub use factories::{
    curved_atlas, disk_atlas, flat_atlas, halfspace_patch, single_chart_atlas, unit_square_atlas,
};
pub use file::{AtlasFile, ChartEntry};
pub use graph::{GraphFn, GraphOracle, GraphSpec, PolyTerm};

/// Declared Hölder class `C^{k, mu}` of a chart's graph function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityClass {
    pub k: u32,
    pub mu: f64,
}

impl RegularityClass {
    pub const SMOOTH: RegularityClass = RegularityClass { k: u32::MAX, mu: 1.0 };
    pub const LIPSCHITZ: RegularityClass = RegularityClass { k: 0, mu: 1.0 };

    pub fn new(k: u32, mu: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::InvalidParameter(format!("mu = {mu} outside [0, 1]")));
        }
        Ok(RegularityClass { k, mu })
    }

    /// True when this class is at least `C^{k, mu}`.
    pub fn at_least(&self, k: u32, mu: f64) -> bool {
        self.k > k || (self.k == k && self.mu >= mu)
    }
}

/// Orthonormal frame: `x = offset + sum_i y_i * rows[i]`.
///
/// The last row is the inward direction `e_d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    rows: Vec<Vec<f64>>,
    offset: Vec<f64>,
}

impl Frame {
    pub fn new(rows: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<Self> {
        let d = offset.len();
        if d == 0 {
            return Err(Error::InvalidParameter("empty frame".into()));
        }
        if rows.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: rows.len(),
            });
        }
        for row in &rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
        }
        for i in 0..d {
            for j in 0..d {
                let dot: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "frame rows {i} and {j} are not orthonormal"
                    )));
                }
            }
        }
        Ok(Frame { rows, offset })
    }

    pub fn identity(offset: Vec<f64>) -> Self {
        let d = offset.len();
        let rows = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Frame { rows, offset }
    }

    /// Planar frame whose first axis makes angle `angle` with `x_1`.
    pub fn rotation_2d(angle: f64, offset: [f64; 2]) -> Self {
        let (s, c) = angle.sin_cos();
        Frame {
            rows: vec![vec![c, s], vec![-s, c]],
            offset: offset.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn to_ambient(&self, y: &[f64]) -> Vec<f64> {
        let mut x = self.offset.clone();
        for (yi, row) in y.iter().zip(&self.rows) {
            for (xj, rj) in x.iter_mut().zip(row) {
                *xj += yi * rj;
            }
        }
        x
    }

    pub fn to_local(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(x.iter().zip(&self.offset))
                    .map(|(r, (xi, oi))| r * (xi - oi))
                    .sum()
            })
            .collect()
    }

    /// Rotates a local vector into ambient coordinates (no translation).
    pub fn vector_to_ambient(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        for (vi, row) in v.iter().zip(&self.rows) {
            for (o, r) in out.iter_mut().zip(row) {
                *o += vi * r;
            }
        }
        out
    }

    pub fn vector_to_local(&self, v: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().zip(v).map(|(r, vi)| r * vi).sum())
            .collect()
    }
}

/// Chart constants `(c1, c2, c3)` of a planar chart:
/// `c1 = sup |theta'/theta|`, `c2 = inf theta^2`, `c3 = sup theta^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// Sampled Hölder certificate for one chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub k: u32,
    pub mu: f64,
    pub constant: f64,
    /// Largest sampled quotient for each derivative order `0..=k`.
    pub max_quotients: Vec<f64>,
    /// Sample points skipped because a derivative oracle was undefined there.
    pub skipped_points: usize,
    pub passed: bool,
}

/// Sampling grid for [`Chart::verify_regularity`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularityGrid {
    pub points_per_axis: usize,
    /// Declared bound on the Hölder quotient.
    pub constant: f64,
}

impl Default for RegularityGrid {
    fn default() -> Self {
        RegularityGrid {
            points_per_axis: 201,
            constant: 1.0,
        }
    }
}

pub const DEFAULT_CONSTANT_SAMPLES: usize = 4096;

#[derive(Clone, Debug)]
pub struct Chart {
    half_width: f64,
    depth: f64,
    graph: GraphFn,
    frame: Frame,
    class: RegularityClass,
    label: String,
}

impl Chart {
    pub fn new(
        half_width: f64,
        depth: f64,
        graph: GraphFn,
        frame: Frame,
        class: RegularityClass,
    ) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidParameter("half_width must be positive".into()));
        }
        if !(depth > 0.0 && depth.is_finite()) {
            return Err(Error::InvalidParameter("depth must be positive".into()));
        }
        if frame.dim() < 2 {
            return Err(Error::InvalidParameter("charts need dimension >= 2".into()));
        }
        graph.check_dim(frame.dim() - 1)?;
        Ok(Chart {
            half_width,
            depth,
            graph,
            frame,
            class,
            label: String::new(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn graph(&self) -> &GraphFn {
        &self.graph
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn declared_class(&self) -> RegularityClass {
        self.class
    }

    pub fn contains(&self, xp: &[f64]) -> bool {
        xp.iter().all(|t| t.abs() < self.half_width)
    }

    fn check_point(&self, xp: &[f64]) -> Result<()> {
        if xp.len() != self.dim() - 1 {
            return Err(Error::DimensionMismatch {
                expected: self.dim() - 1,
                found: xp.len(),
            });
        }
        Ok(())
    }

    pub fn graph_value(&self, xp: &[f64]) -> f64 {
        self.graph.value(xp)
    }

    pub fn gradient(&self, xp: &[f64]) -> Result<Vec<f64>> {
        self.check_point(xp)?;
        self.graph.gradient(xp)
    }

    pub fn hessian(&self, xp: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_point(xp)?;
        self.graph.hessian(xp)
    }

    pub fn graph_partial(&self, alpha: &MultiIndex, xp: &[f64]) -> Result<f64> {
        self.graph.partial(alpha, xp)
    }

    /// Local coordinates `(x', a_r(x'))` of the boundary point over `x'`.
    pub fn boundary_local(&self, xp: &[f64]) -> Vec<f64> {
        let mut y = xp.to_vec();
        y.push(self.graph.value(xp));
        y
    }

    /// Ambient coordinates of the boundary point over `x'`.
    pub fn boundary_point(&self, xp: &[f64]) -> Vec<f64> {
        self.frame.to_ambient(&self.boundary_local(xp))
    }

    /// Outer unit normal in the local frame: `(grad a, -1) / sqrt(1 + |grad a|^2)`.
    pub fn normal_local(&self, xp: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.gradient(xp)?;
        let w = (1.0 + g.iter().map(|v| v * v).sum::<f64>()).sqrt();
        g.push(-1.0);
        Ok(g.into_iter().map(|v| v / w).collect())
    }

    /// Outer unit normal in ambient coordinates.
    pub fn normal(&self, xp: &[f64]) -> Result<Vec<f64>> {
        Ok(self.frame.vector_to_ambient(&self.normal_local(xp)?))
    }

    pub fn surface_weight(&self, xp: &[f64]) -> Result<f64> {
        let g = self.gradient(xp)?;
        Ok((1.0 + g.iter().map(|v| v * v).sum::<f64>()).sqrt())
    }

    fn require_planar(&self) -> Result<()> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: self.dim(),
            });
        }
        Ok(())
    }

    /// `theta(t) = sqrt(1 + a'(t)^2)`.
    pub fn theta(&self, t: f64) -> Result<f64> {
        self.require_planar()?;
        let a1 = self.graph.partial(&MultiIndex::unit(1, 0), &[t])?;
        Ok((1.0 + a1 * a1).sqrt())
    }

    /// `theta'(t) = a'(t) a''(t) / theta(t)`.
    pub fn theta_prime(&self, t: f64) -> Result<f64> {
        self.require_planar()?;
        let a1 = self.graph.partial(&MultiIndex::unit(1, 0), &[t])?;
        let a2 = self.graph.partial(&MultiIndex::new(vec![2])?, &[t])?;
        Ok(a1 * a2 / (1.0 + a1 * a1).sqrt())
    }

    pub fn chart_constants(&self) -> Result<ChartConstants> {
        self.chart_constants_sampled(DEFAULT_CONSTANT_SAMPLES)
    }

    /// Chart constants sampled at the `samples + 1` endpoints of an equispaced
    /// subdivision of `[-a, a]` into `samples` cells.
    pub fn chart_constants_sampled(&self, samples: usize) -> Result<ChartConstants> {
        self.require_planar()?;
        if !self.class.at_least(1, 1.0) || self.graph.oracle_order() < 2 {
            return Err(Error::RegularityTooLow(format!(
                "chart constants need a C^(1,1) chart with second derivatives, got C^({},{})",
                self.class.k, self.class.mu
            )));
        }
        let n = samples.max(2) + 1;
        let mut c1: f64 = 0.0;
        let mut c2 = f64::INFINITY;
        let mut c3: f64 = 0.0;
        for i in 0..n {
            let t = -self.half_width + 2.0 * self.half_width * i as f64 / (n - 1) as f64;
            let th = self.theta(t)?;
            let thp = self.theta_prime(t)?;
            c1 = c1.max((thp / th).abs());
            c2 = c2.min(th * th);
            c3 = c3.max(th * th);
        }
        Ok(ChartConstants { c1, c2, c3 })
    }

    /// Samples Hölder quotients of every `d^alpha a_r`, `|alpha| <= k`, over
    /// an equispaced grid of the closed cube.
    pub fn verify_regularity(&self, k: u32, mu: f64, grid: RegularityGrid) -> RegularityReport {
        let m = self.dim() - 1;
        let n = grid.points_per_axis.max(2);
        let axis: Vec<f64> = (0..n)
            .map(|i| -self.half_width + 2.0 * self.half_width * i as f64 / (n - 1) as f64)
            .collect();
        let mut points: Vec<Vec<f64>> = vec![Vec::new()];
        for _ in 0..m {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&t| {
                        let mut q = p.clone();
                        q.push(t);
                        q
                    })
                })
                .collect();
        }
        let kmax = k.min(self.graph.oracle_order());
        let mut max_quotients = Vec::new();
        let mut skipped = 0;
        for order in 0..=kmax {
            let mut best: f64 = 0.0;
            for alpha in crate::multiindex::enumerate(m, order, crate::multiindex::EnumerationMode::Exact) {
                let values: Vec<Option<f64>> = points
                    .iter()
                    .map(|p| self.graph.partial(&alpha, p).ok())
                    .collect();
                skipped += values.iter().filter(|v| v.is_none()).count();
                for i in 0..points.len() {
                    let Some(vi) = values[i] else { continue };
                    for j in (i + 1)..points.len() {
                        let Some(vj) = values[j] else { continue };
                        let dist = points[i]
                            .iter()
                            .zip(&points[j])
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                            .sqrt();
                        let q = (vi - vj).abs() / dist.powf(mu);
                        if q > best {
                            best = q;
                        }
                    }
                }
            }
            max_quotients.push(best);
        }
        let covered = kmax == k;
        let passed = covered && max_quotients.iter().all(|&q| q <= grid.constant * (1.0 + 1e-12));
        RegularityReport {
            k,
            mu,
            constant: grid.constant,
            max_quotients,
            skipped_points: skipped,
            passed,
        }
    }

    /// Log of the unnormalised bump `psi_r` at an ambient point, `-inf`
    /// outside the chart's box.
    pub fn log_bump(&self, x: &[f64]) -> f64 {
        let y = self.frame.to_local(x);
        let (xp, yd) = y.split_at(self.dim() - 1);
        let mut acc = 0.0;
        for &t in xp {
            acc += log_psi(t / self.half_width);
            if acc == f64::NEG_INFINITY {
                return acc;
            }
        }
        acc + log_psi((yd[0] - self.graph.value(xp)) / self.depth)
    }
}

/// `log psi(t) = 1 / (t^2 - 1)` on `(-1, 1)`.
fn log_psi(t: f64) -> f64 {
    if t.abs() < 1.0 {
        1.0 / (t * t - 1.0)
    } else {
        f64::NEG_INFINITY
    }
}

/// Address of a boundary point: chart index and local coordinate `x'`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub chart: usize,
    pub local: Vec<f64>,
}

/// Parameters of the partition-of-unity construction. Bumps are products of
/// `exp(1/(t^2-1))` over the cube axes and the vertical offset from the graph.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpParams {
    /// Points whose normalising sum is below this value count as uncovered.
    pub cover_tolerance: f64,
}

impl Default for BumpParams {
    fn default() -> Self {
        BumpParams {
            cover_tolerance: 1e-9,
        }
    }
}

type RuleCache = Mutex<HashMap<(usize, usize), Arc<BoundaryRule>>>;

pub struct Atlas {
    dim: usize,
    charts: Vec<Chart>,
    bump: BumpParams,
    name: String,
    rules: RuleCache,
}

impl Clone for Atlas {
    fn clone(&self) -> Self {
        Atlas {
            dim: self.dim,
            charts: self.charts.clone(),
            bump: self.bump,
            name: self.name.clone(),
            rules: Mutex::default(),
        }
    }
}

impl fmt::Debug for Atlas {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Atlas")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("charts", &self.charts)
            .finish()
    }
}

impl Atlas {
    pub fn new(charts: Vec<Chart>) -> Result<Self> {
        let Some(first) = charts.first() else {
            return Err(Error::InvalidParameter("atlas needs at least one chart".into()));
        };
        let dim = first.dim();
        for c in &charts {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: c.dim(),
                });
            }
        }
        Ok(Atlas {
            dim,
            charts,
            bump: BumpParams::default(),
            name: String::from("custom"),
            rules: Mutex::default(),
        })
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn chart(&self, r: usize) -> &Chart {
        &self.charts[r]
    }

    pub fn len(&self) -> usize {
        self.charts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charts.is_empty()
    }

    pub fn bump_params(&self) -> BumpParams {
        self.bump
    }

    /// False when charts use different `a` or `b`, which single-`(a, b)`
    /// formulations of an atlas do not allow.
    pub fn has_uniform_box(&self) -> bool {
        let c0 = &self.charts[0];
        self.charts
            .iter()
            .all(|c| c.half_width == c0.half_width && c.depth == c0.depth)
    }

    /// Weakest declared regularity class among the charts.
    pub fn regularity(&self) -> RegularityClass {
        self.charts
            .iter()
            .map(|c| c.class)
            .fold(RegularityClass::SMOOTH, |acc, c| {
                if acc.at_least(c.k, c.mu) {
                    c
                } else {
                    acc
                }
            })
    }

    /// All partition values `phi_r(x)` at an ambient boundary point.
    pub fn partition_weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let logs: Vec<f64> = self.charts.iter().map(|c| c.log_bump(x)).collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return Err(Error::NotCovered(x.to_vec()));
        }
        let exps: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let sum: f64 = exps.iter().sum();
        Ok(exps.into_iter().map(|e| e / sum).collect())
    }

    pub fn partition_value(&self, r: usize, x: &[f64]) -> Result<f64> {
        if r >= self.charts.len() {
            return Err(Error::InvalidParameter(format!("no chart {r}")));
        }
        Ok(self.partition_weights(x)?[r])
    }

    pub fn boundary_point(&self, p: &BoundaryPoint) -> Vec<f64> {
        self.charts[p.chart].boundary_point(&p.local)
    }

    pub(crate) fn cached_rule(
        &self,
        key: (usize, usize),
        build: impl FnOnce() -> Result<BoundaryRule>,
    ) -> Result<Arc<BoundaryRule>> {
        if let Some(rule) = self.rules.lock().expect("rule cache poisoned").get(&key) {
            return Ok(rule.clone());
        }
        let rule = Arc::new(build()?);
        self.rules
            .lock()
            .expect("rule cache poisoned")
            .insert(key, rule.clone());
        Ok(rule)
    }
}
