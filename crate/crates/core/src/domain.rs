//! Domains (volume region plus boundary atlas) and boundary subsets.

use serde::{Deserialize, Serialize};

use crate::atlas::{disk_atlas, unit_square_atlas, Atlas};
use crate::error::{Error, Result};
use crate::quadrature::{composite_rule, integrate_boundary, Cuboid, QuadratureSpec, TensorRule};

/// Volume region used for domain integrals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Box(Cuboid),
    Disk { center: [f64; 2], radius: f64 },
}

impl Region {
    pub fn dim(&self) -> usize {
        match self {
            Region::Box(b) => b.dim(),
            Region::Disk { .. } => 2,
        }
    }

    pub fn measure(&self) -> f64 {
        match self {
            Region::Box(b) => b.volume(),
            Region::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Region::Box(b) => b.diameter(),
            Region::Disk { radius, .. } => 2.0 * radius,
        }
    }

    pub fn bounding_box(&self) -> Cuboid {
        match self {
            Region::Box(b) => b.clone(),
            Region::Disk { center, radius } => Cuboid {
                lower: vec![center[0] - radius, center[1] - radius],
                upper: vec![center[0] + radius, center[1] + radius],
            },
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Box(b) => b.contains(x),
            Region::Disk { center, radius } => {
                (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2) < radius * radius
            }
        }
    }

    /// Tensor Gauss rule on a box, polar Gauss rule on a disk.
    pub fn rule(&self, q: &QuadratureSpec) -> Result<TensorRule> {
        q.validate()?;
        Ok(match self {
            Region::Box(b) => TensorRule::from_spec(b, q),
            Region::Disk { center, radius } => {
                let (rs, rw) = composite_rule(0.0, *radius, q.points_per_axis, q.panels);
                let (ts, tw) = composite_rule(
                    0.0,
                    std::f64::consts::TAU,
                    q.points_per_axis,
                    2 * q.panels,
                );
                let mut nodes = Vec::with_capacity(2 * rs.len() * ts.len());
                let mut weights = Vec::with_capacity(rs.len() * ts.len());
                for (r, wr) in rs.iter().zip(&rw) {
                    for (t, wt) in ts.iter().zip(&tw) {
                        nodes.push(center[0] + r * t.cos());
                        nodes.push(center[1] + r * t.sin());
                        weights.push(wr * wt * r);
                    }
                }
                TensorRule::from_parts(2, nodes, weights)
            }
        })
    }

    pub fn integrate<F>(&self, f: F, q: &QuadratureSpec) -> Result<f64>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        self.rule(q)?.integrate(f)
    }

    /// Closed sampling grid with `n + 1` points per axis (or per polar axis),
    /// boundary included.
    pub fn sample_grid(&self, n: usize) -> Vec<Vec<f64>> {
        let n = n.max(1);
        match self {
            Region::Box(b) => {
                let mut pts: Vec<Vec<f64>> = vec![Vec::new()];
                for i in 0..b.dim() {
                    let (lo, hi) = (b.lower[i], b.upper[i]);
                    pts = pts
                        .into_iter()
                        .flat_map(|p| {
                            (0..=n).map(move |k| {
                                let mut q = p.clone();
                                q.push(lo + (hi - lo) * k as f64 / n as f64);
                                q
                            })
                        })
                        .collect();
                }
                pts
            }
            Region::Disk { center, radius } => {
                let mut pts = vec![center.to_vec()];
                for i in 1..=n {
                    let r = radius * i as f64 / n as f64;
                    let m = 4 * i;
                    for k in 0..m {
                        let t = std::f64::consts::TAU * k as f64 / m as f64;
                        pts.push(vec![center[0] + r * t.cos(), center[1] + r * t.sin()]);
                    }
                }
                pts
            }
        }
    }
}

/// A domain: its volume region and, for `d >= 2`, a boundary atlas.
#[derive(Clone, Debug)]
pub struct Domain {
    id: String,
    region: Region,
    atlas: Option<Atlas>,
}

impl Domain {
    pub fn new(id: impl Into<String>, region: Region, atlas: Option<Atlas>) -> Result<Self> {
        if let Some(a) = &atlas {
            if a.dim() != region.dim() {
                return Err(Error::DimensionMismatch {
                    expected: region.dim(),
                    found: a.dim(),
                });
            }
        }
        Ok(Domain {
            id: id.into(),
            region,
            atlas,
        })
    }

    pub fn unit_square() -> Self {
        Domain {
            id: "unit_square".into(),
            region: Region::Box(Cuboid::unit(2)),
            atlas: Some(unit_square_atlas()),
        }
    }

    pub fn disk(radius: f64) -> Result<Self> {
        Ok(Domain {
            id: "disk".into(),
            region: Region::Disk {
                center: [0.0, 0.0],
                radius,
            },
            atlas: Some(disk_atlas(radius)?),
        })
    }

    /// `(0, 1)`, without an atlas.
    pub fn unit_interval() -> Self {
        Domain {
            id: "unit_interval".into(),
            region: Region::Box(Cuboid::unit(1)),
            atlas: None,
        }
    }

    /// `(0, 1)^d` without an atlas.
    pub fn unit_cube(dim: usize) -> Self {
        Domain {
            id: format!("unit_cube_{dim}"),
            region: Region::Box(Cuboid::unit(dim)),
            atlas: None,
        }
    }

    /// Resolves `unit_square`, `unit_interval`, `disk` (radius 1) and
    /// `disk_<radius>`.
    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "unit_square" => Ok(Self::unit_square()),
            "unit_interval" => Ok(Self::unit_interval()),
            "disk" => Self::disk(1.0),
            _ => {
                if let Some(r) = id.strip_prefix("disk_") {
                    let r: f64 = r
                        .parse()
                        .map_err(|_| Error::InvalidParameter(format!("bad disk radius in {id}")))?;
                    return Self::disk(r);
                }
                Err(Error::InvalidParameter(format!("unknown domain {id}")))
            }
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn atlas(&self) -> Result<&Atlas> {
        self.atlas
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter(format!("domain {} has no atlas", self.id)))
    }

    pub fn measure(&self) -> f64 {
        self.region.measure()
    }
}

/// Axis-aligned rectangle in the `x'` coordinates of one chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaPiece {
    pub chart: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Boundary subset `Gamma` as a union of chart rectangles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySubset {
    label: String,
    pieces: Vec<GammaPiece>,
}

/// Distance from the graph below which a point counts as on it.
const ON_GRAPH_TOL: f64 = 1e-9;

impl BoundarySubset {
    pub fn new(label: impl Into<String>, pieces: Vec<GammaPiece>) -> Self {
        BoundarySubset {
            label: label.into(),
            pieces,
        }
    }

    /// One full edge of the unit square atlas: `bottom`, `right`, `top` or
    /// `left`.
    pub fn square_edge(edge: &str) -> Result<Self> {
        let chart = match edge {
            "bottom" => 0,
            "right" => 1,
            "top" => 2,
            "left" => 3,
            _ => return Err(Error::InvalidParameter(format!("unknown edge {edge}"))),
        };
        Ok(BoundarySubset::new(
            edge,
            vec![GammaPiece {
                chart,
                lower: vec![-0.5],
                upper: vec![0.5],
            }],
        ))
    }

    /// The part of chart `r` over its full cube.
    pub fn whole_chart(atlas: &Atlas, r: usize) -> Self {
        let c = atlas.chart(r);
        let m = c.dim() - 1;
        BoundarySubset::new(
            format!("chart{r}"),
            vec![GammaPiece {
                chart: r,
                lower: vec![-c.half_width(); m],
                upper: vec![c.half_width(); m],
            }],
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn pieces(&self) -> &[GammaPiece] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
            || self
                .pieces
                .iter()
                .all(|p| p.lower.iter().zip(&p.upper).any(|(l, u)| l >= u))
    }

    pub fn contains(&self, atlas: &Atlas, x: &[f64]) -> bool {
        self.pieces.iter().any(|p| {
            let Some(chart) = atlas.charts().get(p.chart) else {
                return false;
            };
            let y = chart.frame().to_local(x);
            let (yp, yd) = y.split_at(y.len() - 1);
            let inside = yp
                .iter()
                .zip(p.lower.iter().zip(&p.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u);
            inside && (yd[0] - chart.graph_value(yp)).abs() <= ON_GRAPH_TOL
        })
    }

    pub fn indicator(&self, atlas: &Atlas, x: &[f64]) -> f64 {
        if self.contains(atlas, x) {
            1.0
        } else {
            0.0
        }
    }

    /// `sigma(Gamma)`.
    pub fn measure(&self, atlas: &Atlas, q: &QuadratureSpec) -> Result<f64> {
        integrate_boundary(|n| Ok(self.indicator(atlas, &n.point)), atlas, q)
    }

    /// True when every piece lies on one common flat hyperplane.
    pub fn lies_in_hyperplane(&self, atlas: &Atlas) -> bool {
        let mut plane: Option<(Vec<f64>, f64)> = None;
        for p in &self.pieces {
            let c = atlas.chart(p.chart);
            let g = c.graph();
            if !matches!(g, crate::atlas::GraphFn::Polynomial(poly) if poly.degree() <= 1) {
                return false;
            }
            // affine graph: points satisfy n . x = n . x0 for the ambient normal
            let m = c.dim() - 1;
            let mid: Vec<f64> = p.lower.iter().zip(&p.upper).map(|(l, u)| 0.5 * (l + u)).collect();
            let Ok(n) = c.normal(&mid) else { return false };
            let x0 = c.boundary_point(&vec![0.0; m]);
            let level: f64 = n.iter().zip(&x0).map(|(a, b)| a * b).sum();
            match &plane {
                None => plane = Some((n, level)),
                Some((n0, l0)) => {
                    let dot: f64 = n.iter().zip(n0).map(|(a, b)| a * b).sum();
                    if (dot.abs() - 1.0).abs() > 1e-12 || (dot.signum() * level - l0).abs() > 1e-12 {
                        return false;
                    }
                }
            }
        }
        plane.is_some()
    }
}
