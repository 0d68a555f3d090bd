//! Theorem harnesses driven by one configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::atlas::{curved_atlas, disk_atlas, flat_atlas, unit_square_atlas, Atlas, AtlasFile};
use crate::domain::{BoundarySubset, Domain};
use crate::error::{Error, Result};
use crate::function_space::{
    generate_family, restrict_to_zero_on, FamilyHints, FamilyKind, FamilySpec, TestFunction,
};
use crate::norms::{candidate_norm, sobolev_norm, sobolev_seminorm, Seminorm};
use crate::quadrature::QuadratureSpec;
use crate::traces::{InterpKind, InterpSetting};
use crate::verifier::{
    check_boundary_norm_bracket, check_interpolation, check_kernel_condition, check_poincare,
    check_section6, estimate_equivalence, section6_residual, stability, EquivalenceEstimate,
    InequalityRecord, KernelReport, Provenance, Section6Constants, Stability, Tolerance,
    STABILITY_LIMIT,
};

/// Every theorem harness, in run order.
pub const THEOREMS: [&str; 11] = [
    "thm5.1", "cor5.3", "prop3.4", "cor5.6", "sec6", "prop7.1", "prop7.2", "prop7.3", "prop7.4",
    "prop7.5", "prop7.6",
];

/// Degree and size of one family in a nested pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySize {
    pub degree: u32,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub seed: u64,
    pub theorems: Vec<String>,
    /// Domain of the equivalence and Poincaré harnesses.
    pub domain: String,
    /// Domain of the interpolation harnesses on bounded domains.
    pub interp_domain: String,
    /// Boundary subset of the trace seminorms.
    pub gamma: String,
    /// Boundary subset on which the Poincaré corpus vanishes.
    pub poincare_gamma: String,
    /// Seminorms of the candidate norm: `mean`, `lp`, `trace<i>`.
    pub seminorms: Vec<String>,
    pub k: Vec<u32>,
    pub p: Vec<f64>,
    pub interp_p: Vec<f64>,
    pub halfspace_dims: Vec<usize>,
    pub halfspace_count: usize,
    /// Atlases of the boundary-norm bracket: built-in ids or atlas files.
    pub bracket_atlases: Vec<String>,
    pub section6_atlases: Vec<String>,
    pub boundary_count: usize,
    pub residual_samples: usize,
    /// Base family; `degree` and `count` come from `small` and `large`.
    pub family: FamilySpec,
    pub small: FamilySize,
    pub large: FamilySize,
    pub stability_limit: f64,
    pub quadrature: QuadratureSpec,
    pub tolerance: Tolerance,
    /// Test hook: halves the half-space constant, which must then fail.
    pub falsify: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 0,
            theorems: THEOREMS.iter().map(|s| s.to_string()).collect(),
            domain: "unit_square".into(),
            interp_domain: "disk".into(),
            gamma: "bottom".into(),
            poincare_gamma: "left".into(),
            seminorms: vec!["mean".into()],
            k: vec![1, 2],
            p: vec![1.0, 2.0],
            interp_p: vec![1.0, 2.0, 4.0],
            halfspace_dims: vec![2, 3],
            halfspace_count: 50,
            bracket_atlases: vec!["unit_square".into(), "disk".into()],
            section6_atlases: vec!["flat".into(), "curved".into()],
            boundary_count: 100,
            residual_samples: 1000,
            family: FamilySpec::default(),
            small: FamilySize { degree: 3, count: 100 },
            large: FamilySize { degree: 5, count: 200 },
            stability_limit: STABILITY_LIMIT,
            quadrature: QuadratureSpec::default(),
            tolerance: Tolerance::default(),
            falsify: false,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        for t in &self.theorems {
            if !THEOREMS.contains(&t.as_str()) {
                return Err(Error::InvalidParameter(format!("unknown theorem id {t}")));
            }
        }
        for &p in self.p.iter().chain(&self.interp_p) {
            if !(p >= 1.0 && p.is_finite()) {
                return Err(Error::InvalidParameter(format!("p = {p} outside [1, inf)")));
            }
        }
        if self.k.contains(&0) {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        self.quadrature.validate()?;
        Domain::from_id(&self.domain)?;
        Domain::from_id(&self.interp_domain)?;
        for a in self.bracket_atlases.iter().chain(&self.section6_atlases) {
            resolve_atlas(a)?;
        }
        let domain = Domain::from_id(&self.domain)?;
        let gamma = resolve_gamma(&self.gamma, &domain)?;
        for s in &self.seminorms {
            parse_seminorm(s, &gamma)?;
        }
        resolve_gamma(&self.poincare_gamma, &domain)?;
        Ok(())
    }

    fn runs(&self, theorem: &str) -> bool {
        self.theorems.iter().any(|t| t == theorem)
    }
}

/// Built-in atlas ids (`unit_square`, `disk`, `disk_<r>`, `flat`, `curved`)
/// or a path to an atlas file.
pub fn resolve_atlas(id: &str) -> Result<Atlas> {
    match id {
        "unit_square" => Ok(unit_square_atlas()),
        "disk" => disk_atlas(1.0),
        "flat" => Ok(flat_atlas()),
        "curved" => Ok(curved_atlas()),
        _ => {
            if let Some(r) = id.strip_prefix("disk_") {
                if let Ok(r) = r.parse::<f64>() {
                    return disk_atlas(r);
                }
            }
            let path = Path::new(id);
            if path.exists() {
                return AtlasFile::load(path)?.build();
            }
            Err(Error::InvalidParameter(format!("unknown atlas {id}")))
        }
    }
}

/// A square edge name, or `chart<r>` for a whole chart of the domain atlas.
pub fn resolve_gamma(id: &str, domain: &Domain) -> Result<BoundarySubset> {
    if let Some(r) = id.strip_prefix("chart") {
        let atlas = domain.atlas()?;
        let r: usize = r
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad boundary subset {id}")))?;
        if r >= atlas.len() {
            return Err(Error::InvalidParameter(format!("no chart {r}")));
        }
        return Ok(BoundarySubset::whole_chart(atlas, r));
    }
    BoundarySubset::square_edge(id)
}

/// `mean`, `lp`, or `trace<i>` on `gamma`.
pub fn parse_seminorm(id: &str, gamma: &BoundarySubset) -> Result<Seminorm> {
    match id {
        "mean" => Ok(Seminorm::Mean),
        "lp" => Ok(Seminorm::DomainLp),
        _ => {
            let order = id
                .strip_prefix("trace")
                .and_then(|i| i.parse().ok())
                .ok_or_else(|| Error::InvalidParameter(format!("unknown seminorm {id}")))?;
            Ok(Seminorm::Trace {
                order,
                gamma: gamma.clone(),
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelEntry {
    pub theorem: String,
    pub k: u32,
    /// Whether the boundary subset lies in one hyperplane, when relevant.
    pub hyperplane: Option<bool>,
    pub report: KernelReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsEntry {
    pub atlas: String,
    pub constants: Section6Constants,
}

/// A named scalar produced by a harness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub theorem: String,
    pub label: String,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub records: Vec<InequalityRecord>,
    pub equivalences: Vec<EquivalenceEstimate>,
    pub stability: Vec<Stability>,
    pub kernels: Vec<KernelEntry>,
    pub constants: Vec<ConstantsEntry>,
    pub summaries: Vec<Summary>,
    /// Harnesses skipped because their hypothesis fails, with the reason.
    pub skipped: Vec<Summary>,
}

impl SuiteReport {
    pub fn failures(&self) -> Vec<&InequalityRecord> {
        self.records.iter().filter(|r| r.is_failure()).collect()
    }

    fn summary(&mut self, theorem: &str, label: String, value: f64) {
        self.summaries.push(Summary {
            theorem: theorem.into(),
            label,
            value,
        });
    }
}

fn family(cfg: &SuiteConfig, size: FamilySize, seed: u64, kind: FamilyKind, hints: &FamilyHints) -> Result<Vec<TestFunction>> {
    let spec = FamilySpec {
        kind,
        degree: size.degree,
        count: size.count,
        seed,
        ..cfg.family.clone()
    };
    generate_family(&spec, hints)
}

fn spec_of(cfg: &SuiteConfig, size: FamilySize, seed: u64, kind: FamilyKind) -> FamilySpec {
    FamilySpec {
        kind,
        degree: size.degree,
        count: size.count,
        seed,
        ..cfg.family.clone()
    }
}

/// Runs every configured harness.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let mut report = SuiteReport {
        seed: cfg.seed,
        ..Default::default()
    };
    let domain = Domain::from_id(&cfg.domain)?;
    let hints = FamilyHints::region(domain.region().bounding_box());
    let q = &cfg.quadrature;
    let tol = cfg.tolerance;
    let seeds = (cfg.seed, cfg.seed.wrapping_add(1));
    let kind = cfg.family.kind;

    for theorem in ["thm5.1", "cor5.3"] {
        if !cfg.runs(theorem) {
            continue;
        }
        let gamma = resolve_gamma(&cfg.gamma, &domain)?;
        for &k in &cfg.k {
            let seminorms: Vec<Seminorm> = if theorem == "cor5.3" {
                Seminorm::traces_on(&gamma, k)
            } else {
                cfg.seminorms
                    .iter()
                    .map(|s| parse_seminorm(s, &gamma))
                    .collect::<Result<_>>()?
            };
            let kernel = check_kernel_condition(&seminorms, &domain, k, q)?;
            let trivial = kernel.verdict == crate::verifier::KernelVerdict::Trivial;
            report.kernels.push(KernelEntry {
                theorem: theorem.into(),
                k,
                hyperplane: match domain.atlas() {
                    Ok(a) if theorem == "cor5.3" => Some(gamma.lies_in_hyperplane(a)),
                    _ => None,
                },
                report: kernel,
            });
            if !trivial {
                report.skipped.push(Summary {
                    theorem: theorem.into(),
                    label: format!("k={k}: seminorms have a nontrivial joint kernel on P_{}", k - 1),
                    value: k as f64,
                });
                continue;
            }
            for &p in &cfg.p {
                let mut sups = Vec::new();
                for (size, seed) in [(cfg.small, seeds.0), (cfg.large, seeds.1)] {
                    let fam = family(cfg, size, seed, kind, &hints)?;
                    let e = estimate_equivalence(
                        theorem,
                        (&format!("candidate_{k}_{p}"), &format!("W_{k}_{p}")),
                        &fam,
                        Some(&spec_of(cfg, size, seed, kind)),
                        |u| Ok(candidate_norm(u, &domain, k, p, &seminorms, q)?.value),
                        |u| Ok(sobolev_norm(u, &domain, k, p, q)?.value),
                    )?;
                    sups.push(e.max_ratio);
                    report.equivalences.push(e);
                }
                report.stability.push(stability(
                    &format!("{theorem} k={k} p={p} max ratio"),
                    sups[0],
                    sups[1],
                    cfg.stability_limit,
                ));
                // order-k seminorm on P_{k-1}
                let kernel_fam = generate_family(
                    &FamilySpec {
                        kind: FamilyKind::Polynomial,
                        degree: k - 1,
                        count: 20,
                        seed: seeds.0,
                        complex: false,
                        ..cfg.family.clone()
                    },
                    &hints,
                )?;
                for v in &kernel_fam {
                    let s = sobolev_seminorm(v, &domain, k, p, q)?.value;
                    report.records.push(InequalityRecord::new(
                        theorem,
                        "seminorm_kernel",
                        v.id(),
                        s,
                        0.0,
                        0.0,
                        Provenance::PaperExact,
                        tol,
                    ));
                }
            }
        }
    }

    if cfg.runs("prop3.4") {
        for id in &cfg.bracket_atlases {
            let atlas = resolve_atlas(id)?;
            let bbox = atlas_box(&atlas);
            let fam = family(
                cfg,
                FamilySize { degree: cfg.small.degree, count: cfg.boundary_count },
                seeds.0,
                kind,
                &FamilyHints::region(bbox),
            )?;
            for &p in &cfg.p {
                let ((lo, hi), records) = check_boundary_norm_bracket(&atlas, &fam, p, q, tol)?;
                report.summary("prop3.4", format!("{id} p={p} lower"), lo);
                report.summary("prop3.4", format!("{id} p={p} upper"), hi);
                let ratios: Vec<f64> = records
                    .chunks(2)
                    .filter(|r| r[0].rhs > 0.0)
                    .map(|r| r[0].lhs / r[0].rhs)
                    .collect();
                report.summary("prop3.4", format!("{id} p={p} min ratio"), fold_min(&ratios));
                report.summary("prop3.4", format!("{id} p={p} max ratio"), fold_max(&ratios));
                report.records.extend(records);
            }
        }
    }

    if cfg.runs("cor5.6") {
        let gamma = resolve_gamma(&cfg.poincare_gamma, &domain)?;
        let atlas = domain.atlas()?;
        for &p in &cfg.p {
            let mut cs = Vec::new();
            for (size, seed) in [(cfg.small, seeds.0), (cfg.large, seeds.1)] {
                let base = family(cfg, size, seed, kind, &hints)?;
                let fam = restrict_to_zero_on(&base, &gamma, atlas)?;
                let r = check_poincare(&fam, &domain, &gamma, p, q, tol)?;
                report.summary("cor5.6", format!("p={p} n={} empirical C", size.count), r.empirical_c);
                report.summary("cor5.6", format!("p={p} n={} mean residual", size.count), r.mean_residual);
                cs.push(r.empirical_c);
                report.records.extend(r.records);
            }
            report.stability.push(stability(&format!("cor5.6 p={p} empirical C"), cs[0], cs[1], cfg.stability_limit));
        }
    }

    if cfg.runs("sec6") {
        for id in &cfg.section6_atlases {
            let atlas = resolve_atlas(id)?;
            let fam = family(
                cfg,
                FamilySize { degree: cfg.small.degree, count: cfg.boundary_count },
                seeds.0,
                kind,
                &FamilyHints::region(atlas_box(&atlas)),
            )?;
            let residual = section6_residual(&atlas, &fam[..fam.len().min(10)], cfg.residual_samples)?;
            report.summary("sec6", format!("{id} max tangential residual"), residual);
            for &p in &cfg.p {
                let (constants, records) = check_section6(&atlas, &fam, p, q, tol)?;
                report.constants.push(ConstantsEntry {
                    atlas: id.clone(),
                    constants,
                });
                report.records.extend(records);
            }
        }
    }

    if cfg.runs("prop7.1") {
        let factor = if cfg.falsify { 0.5 } else { 1.0 };
        for &d in &cfg.halfspace_dims {
            let fam = family(
                cfg,
                FamilySize { degree: cfg.small.degree, count: cfg.halfspace_count },
                seeds.0,
                FamilyKind::MollifierBump,
                &FamilyHints::halfspace(d, 1.0),
            )?;
            for &p in &cfg.interp_p {
                let r = check_interpolation("prop7.1", InterpKind::Halfspace, &fam, InterpSetting::Halfspace, p, q, tol, factor)?;
                report.summary("prop7.1", format!("d={d} p={p} sup ratio"), r.sup_ratio);
                report.records.extend(r.records);
            }
        }
    }

    let interp_domain = Domain::from_id(&cfg.interp_domain)?;
    let interp_hints = FamilyHints::region(interp_domain.region().bounding_box());
    for (theorem, kind_i, fam_kind) in [
        ("prop7.2", InterpKind::Order0, FamilyKind::Polynomial),
        ("prop7.3", InterpKind::Order0, FamilyKind::GaussianBump),
        ("prop7.4", InterpKind::Normal, FamilyKind::Polynomial),
        ("prop7.5", InterpKind::Laplacian, FamilyKind::Polynomial),
        ("prop7.6", InterpKind::NormalLaplacian, FamilyKind::Polynomial),
    ] {
        if !cfg.runs(theorem) {
            continue;
        }
        for &p in &cfg.interp_p {
            let mut sups = Vec::new();
            for (size, seed) in [(cfg.small, seeds.0), (cfg.large, seeds.1)] {
                let fam = family(cfg, size, seed, fam_kind, &interp_hints)?;
                let r = check_interpolation(
                    theorem,
                    kind_i,
                    &fam,
                    InterpSetting::Domain(&interp_domain),
                    p,
                    q,
                    tol,
                    1.0,
                )?;
                report.summary(theorem, format!("p={p} n={} sup ratio", size.count), r.sup_ratio);
                sups.push(r.sup_ratio);
                report.records.extend(r.records);
            }
            report.stability.push(stability(&format!("{theorem} p={p} sup ratio"), sups[0], sups[1], cfg.stability_limit));
        }
    }
    Ok(report)
}

fn fold_min(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

fn fold_max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Box around every chart's boundary piece.
fn atlas_box(atlas: &Atlas) -> crate::quadrature::Cuboid {
    let d = atlas.dim();
    let mut lower = vec![f64::INFINITY; d];
    let mut upper = vec![f64::NEG_INFINITY; d];
    for c in atlas.charts() {
        let a = c.half_width();
        for corner in 0..(1usize << (d - 1)) {
            let xp: Vec<f64> = (0..d - 1)
                .map(|i| if corner >> i & 1 == 1 { a } else { -a })
                .collect();
            let x = c.boundary_point(&xp);
            for i in 0..d {
                lower[i] = lower[i].min(x[i]);
                upper[i] = upper[i].max(x[i]);
            }
        }
    }
    crate::quadrature::Cuboid { lower, upper }
}
