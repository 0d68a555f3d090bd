//! TOML atlas description.
//!
//! ```toml
//! dimension = 2
//!
//! [[chart]]
//! label = "bottom"
//! rotation = [[1.0, 0.0], [0.0, 1.0]]
//! offset = [0.5, 0.0]
//! half_width = 0.4
//! depth = 0.5
//! class = { k = 0, mu = 1.0 }        # optional, defaults to smooth
//! graph = { family = "flat" }
//! ```
//!
//! Graph families: `flat`, `polynomial` (`terms = [{ exponent = [2],
//! coefficient = 0.5 }]`), `wedge` (`slope`), `circle` (`radius`),
//! `root` (`coefficient`).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Atlas, Chart, Frame, GraphSpec, RegularityClass};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtlasFile {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub chart: Vec<ChartEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartEntry {
    #[serde(default)]
    pub label: String,
    pub rotation: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
    pub half_width: f64,
    pub depth: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<RegularityClass>,
    pub graph: GraphSpec,
}

impl AtlasFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn build(&self) -> Result<Atlas> {
        let charts = self
            .chart
            .iter()
            .map(|c| {
                if c.offset.len() != self.dimension {
                    return Err(Error::DimensionMismatch {
                        expected: self.dimension,
                        found: c.offset.len(),
                    });
                }
                let frame = Frame::new(c.rotation.clone(), c.offset.clone())?;
                let graph = c.graph.build(self.dimension - 1)?;
                let class = match c.class {
                    Some(k) => RegularityClass::new(k.k, k.mu)?,
                    None => RegularityClass::SMOOTH,
                };
                Ok(Chart::new(c.half_width, c.depth, graph, frame, class)?.with_label(&c.label))
            })
            .collect::<Result<Vec<_>>>()?;
        let atlas = Atlas::new(charts)?;
        Ok(match &self.name {
            Some(n) => atlas.named(n.clone()),
            None => atlas.named("file"),
        })
    }

    /// Describes an atlas built from file-expressible graph families.
    pub fn describe(atlas: &Atlas) -> Result<Self> {
        let chart = atlas
            .charts()
            .iter()
            .map(|c| {
                let graph = GraphSpec::describe(c.graph()).ok_or_else(|| {
                    Error::InvalidParameter("custom graph oracles have no file form".into())
                })?;
                let class = c.declared_class();
                Ok(ChartEntry {
                    label: c.label().to_string(),
                    rotation: c.frame().rows().to_vec(),
                    offset: c.frame().offset().to_vec(),
                    half_width: c.half_width(),
                    depth: c.depth(),
                    class: (class != RegularityClass::SMOOTH).then_some(class),
                    graph,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AtlasFile {
            dimension: atlas.dim(),
            name: Some(atlas.name().to_string()),
            chart,
        })
    }
}
