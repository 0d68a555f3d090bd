//! Inequality records and family-level constant estimates.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atlas::{Atlas, ChartConstants, DEFAULT_CONSTANT_SAMPLES};
use crate::domain::{BoundarySubset, Domain};
use crate::error::{Error, Result};
use crate::function_space::{FamilySpec, TestFunction};
use crate::multiindex::{enumerate, EnumerationMode, MultiIndex, Polynomial};
use crate::norms::{
    boundary_chart_power_sums, boundary_lp_chart_norm, boundary_lp_integral_norm,
    power_sums_on_rule, root, tangential_power_sum, Seminorm,
};
use crate::quadrature::{boundary_rule, integrate_boundary, QualityFlag, QuadratureSpec};
use crate::traces::{
    interp_lhs_rhs, normal_derivative, tangential_residual, trace, InterpKind, InterpSetting,
};

/// Where the constant of a record comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    PaperExact,
    AtlasComputed,
    Empirical,
}

impl Provenance {
    /// Records with these constants are asserted.
    pub fn is_asserted(&self) -> bool {
        !matches!(self, Provenance::Empirical)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::PaperExact => "paper_exact",
            Provenance::AtlasComputed => "atlas_computed",
            Provenance::Empirical => "empirical",
        }
    }
}

/// Allowed negative slack: `absolute + relative * scale`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerance {
    pub absolute: f64,
    pub relative: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            absolute: 1e-9,
            relative: 1e-7,
        }
    }
}

impl Tolerance {
    pub fn new(absolute: f64, relative: f64) -> Self {
        Tolerance { absolute, relative }
    }

    pub fn allowance(&self, scale: f64) -> f64 {
        self.absolute + self.relative * scale
    }
}

/// One instance of `lhs <= constant * rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityRecord {
    pub theorem: String,
    /// Which side of a theorem, e.g. `upper`, `lower`, `triangle`.
    pub relation: String,
    pub function_id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    pub provenance: Provenance,
    /// `constant * rhs - lhs`, never clamped.
    pub slack: f64,
    /// `max(|lhs|, |constant * rhs|)`.
    pub scale: f64,
    pub allowance: f64,
    pub passed: bool,
    pub flags: Vec<QualityFlag>,
}

impl InequalityRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        theorem: &str,
        relation: &str,
        function_id: &str,
        lhs: f64,
        rhs: f64,
        constant: f64,
        provenance: Provenance,
        tol: Tolerance,
    ) -> Self {
        let bound = constant * rhs;
        let slack = bound - lhs;
        let scale = lhs.abs().max(bound.abs());
        let allowance = tol.allowance(scale);
        let passed = if provenance.is_asserted() {
            slack >= -allowance
        } else {
            slack.is_finite()
        };
        InequalityRecord {
            theorem: theorem.into(),
            relation: relation.into(),
            function_id: function_id.into(),
            lhs,
            rhs,
            constant,
            provenance,
            slack,
            scale,
            allowance,
            passed,
            flags: Vec::new(),
        }
    }

    /// An asserted record that does not hold.
    pub fn is_failure(&self) -> bool {
        self.provenance.is_asserted() && !self.passed
    }
}

/// Empirical constants `a_emp <= normA / normB <= b_emp` over a family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceEstimate {
    pub theorem: String,
    pub norm_a: String,
    pub norm_b: String,
    pub family: Option<FamilySpec>,
    /// `(function id, ratio)`, sorted by id.
    pub ratios: Vec<(String, f64)>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub argmin: String,
    pub argmax: String,
}

/// Ratios `norm_a(u) / norm_b(u)`. Members where both norms vanish are
/// treated as the zero function and skipped.
pub fn estimate_equivalence<A, B>(
    theorem: &str,
    ids: (&str, &str),
    family: &[TestFunction],
    spec: Option<&FamilySpec>,
    norm_a: A,
    norm_b: B,
) -> Result<EquivalenceEstimate>
where
    A: Fn(&TestFunction) -> Result<f64> + Sync,
    B: Fn(&TestFunction) -> Result<f64> + Sync,
{
    let values: Vec<Option<(String, f64)>> = family
        .par_iter()
        .map(|u| {
            let a = norm_a(u)?;
            let b = norm_b(u)?;
            if b == 0.0 {
                if a == 0.0 {
                    return Ok(None);
                }
                return Err(Error::NormAxiomViolation(format!(
                    "{} vanishes on nonzero member {}",
                    ids.1,
                    u.id()
                )));
            }
            Ok(Some((u.id().to_string(), a / b)))
        })
        .collect::<Result<_>>()?;
    let mut ratios: Vec<(String, f64)> = values.into_iter().flatten().collect();
    if ratios.is_empty() {
        return Err(Error::InvalidParameter("family has no nonzero member".into()));
    }
    ratios.sort_by(|a, b| a.0.cmp(&b.0));
    let mut lo = 0;
    let mut hi = 0;
    for (i, (_, r)) in ratios.iter().enumerate() {
        if *r < ratios[lo].1 {
            lo = i;
        }
        if *r > ratios[hi].1 {
            hi = i;
        }
    }
    Ok(EquivalenceEstimate {
        theorem: theorem.into(),
        norm_a: ids.0.into(),
        norm_b: ids.1.into(),
        family: spec.cloned(),
        min_ratio: ratios[lo].1,
        max_ratio: ratios[hi].1,
        argmin: ratios[lo].0.clone(),
        argmax: ratios[hi].0.clone(),
        ratios,
    })
}

/// Growth of an empirical supremum between a family and a larger one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    pub label: String,
    pub small: f64,
    pub large: f64,
    pub growth: f64,
    pub limit: f64,
    pub passed: bool,
}

/// Default limit on the growth of an empirical supremum.
pub const STABILITY_LIMIT: f64 = 1.5;

pub fn stability(label: &str, small: f64, large: f64, limit: f64) -> Stability {
    let growth = if small > 0.0 {
        large / small
    } else if large > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    Stability {
        label: label.into(),
        small,
        large,
        growth,
        limit,
        passed: growth.is_finite() && growth <= limit,
    }
}

/// Outcome of the joint-kernel test on `P_{k-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum KernelVerdict {
    Trivial,
    Nontrivial { witness: Polynomial },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    #[serde(flatten)]
    pub verdict: KernelVerdict,
    pub seminorms: Vec<String>,
    /// `dim P_{k-1}`.
    pub dimension: usize,
    pub rank: usize,
    /// Singular values of the stacked seminorm system, descending.
    pub singular_values: Vec<f64>,
    /// Condition number of the `L^2(Omega)` Gram matrix of the monomials.
    pub basis_condition: f64,
    pub orthogonalized: bool,
}

/// Relative singular-value threshold of the rank decision.
pub const KERNEL_RANK_THRESHOLD: f64 = 1e-10;
/// Above this condition number the monomial basis is orthogonalized.
pub const BASIS_CONDITION_LIMIT: f64 = 1e8;

fn monomial_basis(d: usize, k: u32) -> Vec<(MultiIndex, TestFunction)> {
    if k == 0 {
        return Vec::new();
    }
    enumerate(d, k - 1, EnumerationMode::UpTo)
        .into_iter()
        .map(|b| {
            let f = TestFunction::polynomial(Polynomial::monomial(b.clone(), 1.0));
            (b, f)
        })
        .collect()
}

/// Quadratic form `G_ab` whose zero set on span(basis) is the zero set of `f`.
fn seminorm_gram(
    f: &Seminorm,
    basis: &[TestFunction],
    domain: &Domain,
    q: &QuadratureSpec,
) -> Result<DMatrix<f64>> {
    let n = basis.len();
    match f {
        Seminorm::Trace { order, gamma } => {
            let atlas = domain.atlas()?;
            let rule = boundary_rule(atlas, q)?;
            let traces: Vec<_> = basis
                .iter()
                .map(|b| normal_derivative(b, atlas, *order))
                .collect::<Result<_>>()?;
            let mut g = DMatrix::zeros(n, n);
            for node in rule.nodes() {
                if !gamma.contains(atlas, &node.point) {
                    continue;
                }
                let w = node.sigma_weight();
                let v: Vec<f64> = traces
                    .iter()
                    .map(|t| Ok(t.at_node(node)?.re))
                    .collect::<Result<_>>()?;
                for a in 0..n {
                    for b in 0..n {
                        g[(a, b)] += w * v[a] * v[b];
                    }
                }
            }
            Ok(g)
        }
        Seminorm::Mean => {
            let rule = domain.region().rule(q)?;
            let m = DVector::from_iterator(
                n,
                basis
                    .iter()
                    .map(|b| rule.integrate(|x| b.eval(x).re))
                    .collect::<Result<Vec<_>>>()?,
            );
            Ok(&m * m.transpose())
        }
        Seminorm::DomainLp => mass_matrix(basis, domain, q),
    }
}

fn mass_matrix(basis: &[TestFunction], domain: &Domain, q: &QuadratureSpec) -> Result<DMatrix<f64>> {
    let n = basis.len();
    let rule = domain.region().rule(q)?;
    let mut g = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = rule.integrate(|x| basis[a].eval(x).re * basis[b].eval(x).re)?;
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    Ok(g)
}

fn condition(eigenvalues: &DVector<f64>) -> f64 {
    let max = eigenvalues.max();
    let min = eigenvalues.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Decides whether the seminorms vanish jointly only at `0` in `P_{k-1}`.
pub fn check_kernel_condition(
    seminorms: &[Seminorm],
    domain: &Domain,
    k: u32,
    q: &QuadratureSpec,
) -> Result<KernelReport> {
    let basis = monomial_basis(domain.dim(), k);
    let n = basis.len();
    let names = seminorms.iter().map(Seminorm::id).collect();
    if n == 0 {
        return Ok(KernelReport {
            verdict: KernelVerdict::Trivial,
            seminorms: names,
            dimension: 0,
            rank: 0,
            singular_values: Vec::new(),
            basis_condition: 1.0,
            orthogonalized: false,
        });
    }
    let fns: Vec<TestFunction> = basis.iter().map(|(_, f)| f.clone()).collect();
    let mass = mass_matrix(&fns, domain, q)?;
    let basis_condition = condition(&SymmetricEigen::new(mass.clone()).eigenvalues);
    let mut g = DMatrix::zeros(n, n);
    for f in seminorms {
        g += seminorm_gram(f, &fns, domain, q)?;
    }
    // coefficients c in the monomial basis are t = L^T c in the orthogonal one
    let orthogonalized = basis_condition > BASIS_CONDITION_LIMIT;
    let lower = if orthogonalized {
        Some(
            mass.clone()
                .cholesky()
                .ok_or_else(|| Error::InvalidParameter("singular mass matrix".into()))?
                .l(),
        )
    } else {
        None
    };
    if let Some(l) = &lower {
        let linv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidParameter("singular mass matrix".into()))?;
        g = &linv * g * linv.transpose();
    }
    let eig = SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let singular: Vec<f64> = order
        .iter()
        .map(|&i| eig.eigenvalues[i].max(0.0).sqrt())
        .collect();
    let top = singular[0];
    let rank = if top == 0.0 {
        0
    } else {
        singular.iter().filter(|s| **s > KERNEL_RANK_THRESHOLD * top).count()
    };
    let verdict = if rank == n {
        KernelVerdict::Trivial
    } else {
        let mut t = eig.eigenvectors.column(order[n - 1]).clone_owned();
        if let Some(l) = &lower {
            t = l
                .transpose()
                .solve_upper_triangular(&t)
                .ok_or_else(|| Error::InvalidParameter("singular mass matrix".into()))?;
        }
        let big = t.iter().fold(0.0f64, |m, v| if v.abs() > m.abs() { *v } else { m });
        let terms = basis.iter().zip(t.iter()).filter_map(|((b, _), c)| {
            let c = c / big;
            (c.abs() > 1e-9).then(|| (b.clone(), c))
        });
        KernelVerdict::Nontrivial {
            witness: Polynomial::from_terms(domain.dim(), terms)?,
        }
    };
    Ok(KernelReport {
        verdict,
        seminorms: names,
        dimension: n,
        rank,
        singular_values: singular,
        basis_condition,
        orthogonalized,
    })
}

/// `sigma(Gamma)^{-1} int_Gamma u dsigma` (real part) and `sigma(Gamma)`.
pub fn boundary_mean(
    u: &TestFunction,
    gamma: &BoundarySubset,
    atlas: &Atlas,
    q: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let sigma = gamma.measure(atlas, q)?;
    if sigma <= crate::norms::ZERO_MEASURE_TOL {
        return Err(Error::ZeroMeasure);
    }
    let integral = integrate_boundary(
        |n| Ok(gamma.indicator(atlas, &n.point) * u.eval(&n.point).re),
        atlas,
        q,
    )?;
    Ok((integral / sigma, sigma))
}

/// `u - sigma(Gamma)^{-1} int_Gamma u dsigma` for real `u`.
pub fn subtract_boundary_mean(
    u: &TestFunction,
    gamma: &BoundarySubset,
    atlas: &Atlas,
    q: &QuadratureSpec,
) -> Result<TestFunction> {
    if !u.is_real() {
        return Err(Error::InvalidParameter("mean subtraction needs a real function".into()));
    }
    let (mean, _) = boundary_mean(u, gamma, atlas, q)?;
    let shifted = u.add(&TestFunction::constant(u.dim(), -mean))?;
    Ok(shifted.with_id(format!("{}-mean", u.id())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    pub records: Vec<InequalityRecord>,
    /// `max ||u||_p / |u|_{1,p}` over the family.
    pub empirical_c: f64,
    pub argmax: String,
    /// Largest `|int_Gamma (u - mean) dsigma|`.
    pub mean_residual: f64,
    pub sigma_gamma: f64,
    pub measure: f64,
}

/// Poincaré-type ratios and the constant-free triangle bound
/// `||u||_p - mu^{1/p}/sigma |int_Gamma u| <= ||u - mean_Gamma u||_p`.
pub fn check_poincare(
    family: &[TestFunction],
    domain: &Domain,
    gamma: &BoundarySubset,
    p: f64,
    q: &QuadratureSpec,
    tol: Tolerance,
) -> Result<PoincareReport> {
    let atlas = domain.atlas()?;
    let rule = domain.region().rule(q)?;
    let mu = domain.measure();
    struct Row {
        id: String,
        lp: f64,
        grad: f64,
        triangle_lhs: f64,
        shifted: f64,
        residual: f64,
        sigma: f64,
    }
    let rows: Vec<Row> = family
        .par_iter()
        .map(|u| {
            let sums = power_sums_on_rule(u, &rule, 1, p)?;
            let (mean, sigma) = boundary_mean(u, gamma, atlas, q)?;
            let shifted = subtract_boundary_mean(u, gamma, atlas, q)?;
            let residual = integrate_boundary(
                |n| Ok(gamma.indicator(atlas, &n.point) * shifted.eval(&n.point).re),
                atlas,
                q,
            )?;
            let lp = root(sums[0], p);
            Ok(Row {
                id: u.id().to_string(),
                lp,
                grad: root(sums[1], p),
                triangle_lhs: lp - mu.powf(1.0 / p) * mean.abs(),
                shifted: root(power_sums_on_rule(&shifted, &rule, 0, p)?[0], p),
                residual: residual.abs(),
                sigma,
            })
        })
        .collect::<Result<_>>()?;
    let mut empirical_c: f64 = 0.0;
    let mut argmax = String::new();
    for r in &rows {
        if r.grad > 0.0 && r.lp / r.grad > empirical_c {
            empirical_c = r.lp / r.grad;
            argmax = r.id.clone();
        }
    }
    let mut records = Vec::new();
    for r in &rows {
        records.push(InequalityRecord::new(
            "cor5.6",
            "triangle",
            &r.id,
            r.triangle_lhs,
            r.shifted,
            1.0,
            Provenance::PaperExact,
            tol,
        ));
        if r.grad > 0.0 {
            records.push(InequalityRecord::new(
                "cor5.6",
                "ratio",
                &r.id,
                r.lp,
                r.grad,
                empirical_c,
                Provenance::Empirical,
                tol,
            ));
        }
    }
    Ok(PoincareReport {
        records,
        empirical_c,
        argmax,
        mean_residual: rows.iter().map(|r| r.residual).fold(0.0, f64::max),
        sigma_gamma: rows.first().map_or(0.0, |r| r.sigma),
        measure: mu,
    })
}

/// Chart constants and the assembled two-sided constants of the planar
/// boundary norm equivalence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Section6Constants {
    pub p: f64,
    pub per_chart: Vec<ChartConstants>,
    /// `max_r 2^p (c_r^1)^p`.
    pub c1: f64,
    /// `max_r max(2^p / (c_r^2)^p, 2^p (c_r^1)^p / (c_r^2)^p)`.
    pub c2: f64,
    /// `max_r 2^p (c_r^3)^p`.
    pub c3: f64,
    /// `max(1 + c1, c3)^{1/p}`.
    pub c1_tilde: f64,
    /// `(1 + c2)^{1/p}`.
    pub c2_tilde: f64,
}

pub fn section6_constants(atlas: &Atlas, p: f64) -> Result<Section6Constants> {
    section6_constants_sampled(atlas, p, DEFAULT_CONSTANT_SAMPLES)
}

pub fn section6_constants_sampled(atlas: &Atlas, p: f64, samples: usize) -> Result<Section6Constants> {
    if atlas.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: atlas.dim(),
        });
    }
    if !atlas.regularity().at_least(2, 1.0) {
        return Err(Error::RegularityTooLow("charts must be of class C^{2,1}".into()));
    }
    let per_chart: Vec<ChartConstants> = atlas
        .charts()
        .iter()
        .map(|c| c.chart_constants_sampled(samples))
        .collect::<Result<_>>()?;
    let two_p = 2f64.powf(p);
    let (mut c1, mut c2, mut c3) = (0.0f64, 0.0f64, 0.0f64);
    for c in &per_chart {
        c1 = c1.max(two_p * c.c1.powf(p));
        c3 = c3.max(two_p * c.c3.powf(p));
        c2 = c2.max((two_p / c.c2.powf(p)).max(two_p * c.c1.powf(p) / c.c2.powf(p)));
    }
    Ok(Section6Constants {
        p,
        per_chart,
        c1,
        c2,
        c3,
        c1_tilde: (1.0 + c1).max(c3).powf(1.0 / p),
        c2_tilde: (1.0 + c2).powf(1.0 / p),
    })
}

/// Both directions of `||u||_{2,p,boundary} ~ (||u||_{1,p}^p + ||d_tau^2 u||_p^p)^{1/p}`.
pub fn check_section6(
    atlas: &Atlas,
    family: &[TestFunction],
    p: f64,
    q: &QuadratureSpec,
    tol: Tolerance,
) -> Result<(Section6Constants, Vec<InequalityRecord>)> {
    let constants = section6_constants(atlas, p)?;
    let rows: Vec<Vec<InequalityRecord>> = family
        .par_iter()
        .map(|u| {
            let sums = boundary_chart_power_sums(&trace(u, atlas), 2, p, q)?;
            let first: f64 = sums.iter().map(|s| s[0] + s[1]).sum();
            let second: f64 = sums.iter().map(|s| s[2]).sum();
            let standard = root(first + second, p);
            let tangential = root(first + tangential_power_sum(u, atlas, p, q)?, p);
            Ok(vec![
                InequalityRecord::new(
                    "sec6",
                    "upper",
                    u.id(),
                    standard,
                    tangential,
                    constants.c1_tilde,
                    Provenance::AtlasComputed,
                    tol,
                ),
                InequalityRecord::new(
                    "sec6",
                    "lower",
                    u.id(),
                    tangential,
                    standard,
                    constants.c2_tilde,
                    Provenance::AtlasComputed,
                    tol,
                ),
            ])
        })
        .collect::<Result<_>>()?;
    Ok((constants, rows.into_iter().flatten().collect()))
}

/// Largest residual of the second tangential derivative identity over
/// `samples` evenly spread chart points per function.
pub fn section6_residual(atlas: &Atlas, family: &[TestFunction], samples: usize) -> Result<f64> {
    let per_chart = samples.div_ceil(atlas.len()).max(1);
    let mut worst: f64 = 0.0;
    for u in family {
        for chart in atlas.charts() {
            let a = chart.half_width();
            for i in 0..per_chart {
                let t = -a + 2.0 * a * (i as f64 + 0.5) / per_chart as f64;
                worst = worst.max(tangential_residual(u, chart, t)?);
            }
        }
    }
    Ok(worst)
}

/// Theorem id of an interpolation kind; `order0` serves both the smooth
/// and the Sobolev variant, distinguished by the caller.
pub fn interpolation_theorem(kind: InterpKind) -> &'static str {
    match kind {
        InterpKind::Halfspace => "prop7.1",
        InterpKind::Order0 => "prop7.2",
        InterpKind::Normal => "prop7.4",
        InterpKind::Laplacian => "prop7.5",
        InterpKind::NormalLaplacian => "prop7.6",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub theorem: String,
    pub kind: InterpKind,
    pub p: f64,
    pub records: Vec<InequalityRecord>,
    /// `max lhs / rhs` over members with `rhs > 0`.
    pub sup_ratio: f64,
    pub argmax: String,
}

/// Interpolation estimates over a family. On the half-space the constant
/// `p^{1/p}` (times `constant_factor`) is asserted; on domains the ratio
/// supremum is recorded as an empirical constant.
#[allow(clippy::too_many_arguments)]
pub fn check_interpolation(
    theorem: &str,
    kind: InterpKind,
    family: &[TestFunction],
    setting: InterpSetting<'_>,
    p: f64,
    q: &QuadratureSpec,
    tol: Tolerance,
    constant_factor: f64,
) -> Result<InterpolationReport> {
    let sides: Vec<(f64, f64)> = family
        .par_iter()
        .map(|u| interp_lhs_rhs(kind, u, setting, p, q))
        .collect::<Result<_>>()?;
    let mut sup_ratio: f64 = 0.0;
    let mut argmax = String::new();
    for (u, (l, r)) in family.iter().zip(&sides) {
        if *r > 0.0 && l / r > sup_ratio {
            sup_ratio = l / r;
            argmax = u.id().to_string();
        }
    }
    let (constant, provenance) = match kind {
        InterpKind::Halfspace => (p.powf(1.0 / p) * constant_factor, Provenance::PaperExact),
        _ => (sup_ratio, Provenance::Empirical),
    };
    let records = family
        .iter()
        .zip(&sides)
        .map(|(u, (l, r))| {
            InequalityRecord::new(theorem, kind.id(), u.id(), *l, *r, constant, provenance, tol)
        })
        .collect();
    Ok(InterpolationReport {
        theorem: theorem.into(),
        kind,
        p,
        records,
        sup_ratio,
        argmax,
    })
}

/// Bracket `[lower, upper]` for `||f||_{integral} / ||f||_{chart}` derived
/// from chart data: `m^{-1/p}` below (each point lies in at most `m`
/// charts and `w_r >= 1`), `(max_r sup w_r)^{1/p}` above.
pub fn boundary_norm_bracket(atlas: &Atlas, p: f64, q: &QuadratureSpec) -> Result<(f64, f64)> {
    let rule = boundary_rule(atlas, q)?;
    let mut sup_w: f64 = 1.0;
    for chart in atlas.charts() {
        let a = chart.half_width();
        let m = chart.dim() - 1;
        let n = 64usize;
        for i in 0..=n.pow(m as u32) {
            let mut xp = Vec::with_capacity(m);
            let mut idx = i;
            for _ in 0..m {
                xp.push(-a + 2.0 * a * (idx % (n + 1)) as f64 / n as f64);
                idx /= n + 1;
            }
            if let Ok(w) = chart.surface_weight(&xp) {
                sup_w = sup_w.max(w);
            }
        }
    }
    for node in rule.nodes() {
        sup_w = sup_w.max(node.surface_weight);
    }
    Ok(((atlas.len() as f64).powf(-1.0 / p), sup_w.powf(1.0 / p)))
}

/// Records `integral <= upper * chart` and `chart <= lower^{-1} * integral`.
pub fn check_boundary_norm_bracket(
    atlas: &Atlas,
    family: &[TestFunction],
    p: f64,
    q: &QuadratureSpec,
    tol: Tolerance,
) -> Result<((f64, f64), Vec<InequalityRecord>)> {
    let (lower, upper) = boundary_norm_bracket(atlas, p, q)?;
    let rows: Vec<Vec<InequalityRecord>> = family
        .par_iter()
        .map(|u| {
            let g = trace(u, atlas);
            let integral = boundary_lp_integral_norm(&g, p, q)?.value;
            let chart = boundary_lp_chart_norm(&g, p, q)?.value;
            Ok(vec![
                InequalityRecord::new("prop3.4", "upper", u.id(), integral, chart, upper, Provenance::AtlasComputed, tol),
                InequalityRecord::new("prop3.4", "lower", u.id(), chart, integral, 1.0 / lower, Provenance::AtlasComputed, tol),
            ])
        })
        .collect::<Result<_>>()?;
    Ok(((lower, upper), rows.into_iter().flatten().collect()))
}
