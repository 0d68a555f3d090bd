//! Run configuration files.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sobolev_core::suite::{resolve_atlas, resolve_gamma, parse_seminorm};
use sobolev_core::{Domain, FamilySpec, NormSpec, QuadratureSpec, SuiteConfig};

use crate::CliError;

/// Top-level configuration. `seed`, `family` and `quadrature` apply to every
/// subcommand and override the same keys under `[verify]`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default = "default_domain")]
    pub domain: String,
    /// Atlas id or file replacing the domain's own atlas for boundary norms.
    #[serde(default)]
    pub atlas: Option<String>,
    #[serde(default)]
    pub family: FamilySpec,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub norms: NormsSection,
    #[serde(default)]
    pub verify: SuiteConfig,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_domain() -> String {
    "unit_square".into()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormsSection {
    pub kinds: Vec<String>,
    /// Polynomial strings in `x1..x<d>`.
    pub functions: Vec<String>,
    /// Also evaluate the generated family.
    pub include_family: bool,
    pub gamma: Option<String>,
    pub seminorms: Vec<String>,
    pub sup_grid: usize,
}

impl Default for NormsSection {
    fn default() -> Self {
        NormsSection {
            kinds: Vec::new(),
            functions: Vec::new(),
            include_family: false,
            gamma: None,
            seminorms: vec!["mean".into()],
            sup_grid: sobolev_core::norms::DEFAULT_SUP_GRID,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into() }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        // relative atlas paths resolve against the config file
        if let Some(dir) = path.parent() {
            let relocate = |a: &mut String| {
                let p = dir.join(&*a);
                if a.ends_with(".toml") && p.exists() {
                    *a = p.to_string_lossy().into_owned();
                }
            };
            cfg.atlas.iter_mut().for_each(relocate);
            cfg.verify.section6_atlases.iter_mut().for_each(relocate);
            cfg.verify.bracket_atlases.iter_mut().for_each(relocate);
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        self
    }

    pub fn suite(&self) -> SuiteConfig {
        SuiteConfig {
            seed: self.seed,
            family: self.family.clone(),
            quadrature: self.quadrature.clone(),
            ..self.verify.clone()
        }
    }

    /// Domain with the configured atlas substituted.
    pub fn domain(&self) -> Result<Domain, CliError> {
        let base = Domain::from_id(&self.domain).map_err(config)?;
        match &self.atlas {
            None => Ok(base),
            Some(a) => {
                let atlas = resolve_atlas(a).map_err(config)?;
                Domain::new(base.id(), base.region().clone(), Some(atlas)).map_err(config)
            }
        }
    }

    pub fn norm_specs(&self) -> Result<Vec<NormSpec>, CliError> {
        self.norms
            .kinds
            .iter()
            .map(|k| NormSpec::parse(k).map_err(config))
            .collect()
    }

    /// Checks every identifier before any work starts.
    pub fn validate(&self) -> Result<(), CliError> {
        let domain = self.domain()?;
        self.norm_specs()?;
        self.quadrature.validate().map_err(config)?;
        if let Some(g) = &self.norms.gamma {
            let gamma = resolve_gamma(g, &domain).map_err(config)?;
            for s in &self.norms.seminorms {
                parse_seminorm(s, &gamma).map_err(config)?;
            }
        }
        for f in &self.norms.functions {
            crate::poly::parse_polynomial(f, domain.dim()).map_err(|e| CliError::Config(e.to_string()))?;
        }
        self.suite().validate().map_err(config)
    }
}

fn config(e: sobolev_core::Error) -> CliError {
    CliError::Config(e.to_string())
}
