//! Sobolev, Slobodetskii and boundary norms evaluated by quadrature.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::atlas::Atlas;
use crate::domain::{BoundarySubset, Domain, Region};
use crate::error::{Error, Result};
use crate::function_space::TestFunction;
use crate::multiindex::{enumerate, EnumerationMode};
use crate::quadrature::{
    boundary_rule, integrate_boundary, integrate_double_singular, QualityFlag, QuadratureSpec,
    TensorRule,
};
use crate::traces::{normal_derivative, tangential_second_derivative, trace, BoundaryFunction};

/// Sampling density of [`sup_norm`] when none is given.
pub const DEFAULT_SUP_GRID: usize = 256;

/// A computed norm together with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    /// Kind identifier such as `W_k_p`.
    pub kind: String,
    /// Instance identifier such as `W_1_2`.
    pub id: String,
    pub k: Option<u32>,
    /// `None` for sup norms.
    pub p: Option<f64>,
    pub m: Option<f64>,
    pub domain: String,
    pub error_estimate: Option<f64>,
    pub flags: Vec<QualityFlag>,
}

impl NormValue {
    fn new(kind: NormKind, p: Option<f64>, domain: &str, value: f64) -> Result<Self> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::NormAxiomViolation(format!(
                "{} evaluated to {value}",
                kind.id(p)
            )));
        }
        Ok(NormValue {
            value,
            kind: kind.template().to_string(),
            id: kind.id(p),
            k: kind.order(),
            p,
            m: match kind {
                NormKind::Slobodetskii { m } => Some(m),
                _ => None,
            },
            domain: domain.to_string(),
            error_estimate: None,
            flags: Vec::new(),
        })
    }
}

/// Norm families addressable by identifier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormKind {
    Sobolev { k: u32 },
    Sup { k: u32 },
    Seminorm { k: u32 },
    Slobodetskii { m: f64 },
    BoundaryLpChart,
    BoundaryLpIntegral,
    BoundarySobolev { k: u32 },
    Candidate { k: u32 },
    Corollary { k: u32 },
    Tangential,
}

impl NormKind {
    /// Stable kind identifier.
    pub fn template(&self) -> &'static str {
        match self {
            NormKind::Sobolev { .. } => "W_k_p",
            NormKind::Sup { .. } => "W_k_inf",
            NormKind::Seminorm { .. } => "semi_k_p",
            NormKind::Slobodetskii { .. } => "slobodetskii_m_p",
            NormKind::BoundaryLpChart => "bLp_chart",
            NormKind::BoundaryLpIntegral => "bLp_integral",
            NormKind::BoundarySobolev { .. } => "bW_k_p",
            NormKind::Candidate { .. } => "candidate",
            NormKind::Corollary { .. } => "corollary5_3",
            NormKind::Tangential => "tangential6_1",
        }
    }

    pub fn order(&self) -> Option<u32> {
        match *self {
            NormKind::Sobolev { k }
            | NormKind::Sup { k }
            | NormKind::Seminorm { k }
            | NormKind::BoundarySobolev { k }
            | NormKind::Candidate { k }
            | NormKind::Corollary { k } => Some(k),
            _ => None,
        }
    }

    /// Instance identifier, e.g. `W_1_2`, `slobodetskii_0.5_2`, `bLp_chart_2`.
    pub fn id(&self, p: Option<f64>) -> String {
        let ps = p.map_or("inf".to_string(), |p| p.to_string());
        match self {
            NormKind::Sobolev { k } => format!("W_{k}_{ps}"),
            NormKind::Sup { k } => format!("W_{k}_inf"),
            NormKind::Seminorm { k } => format!("semi_{k}_{ps}"),
            NormKind::Slobodetskii { m } => format!("slobodetskii_{m}_{ps}"),
            NormKind::BoundarySobolev { k } => format!("bW_{k}_{ps}"),
            NormKind::Candidate { k } => format!("candidate_{k}_{ps}"),
            NormKind::Corollary { k } => format!("corollary5_3_{k}_{ps}"),
            other => format!("{}_{ps}", other.template()),
        }
    }
}

/// A norm kind with its exponent, parsed from an instance identifier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormSpec {
    pub kind: NormKind,
    /// `None` means `p = inf`.
    pub p: Option<f64>,
}

impl NormSpec {
    pub fn parse(id: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown norm identifier {id:?}"));
        let parse_p = |s: &str| -> Result<f64> {
            let p: f64 = s.parse().map_err(|_| bad())?;
            if p >= 1.0 && p.is_finite() {
                Ok(p)
            } else {
                Err(Error::Parse(format!("exponent {s} outside [1, inf) in {id:?}")))
            }
        };
        let parse_k = |s: &str| -> Result<u32> { s.parse().map_err(|_| bad()) };
        let two = |rest: &str| -> Result<(String, String)> {
            let (a, b) = rest.split_once('_').ok_or_else(bad)?;
            Ok((a.to_string(), b.to_string()))
        };
        let spec = |kind, p| Ok(NormSpec { kind, p: Some(p) });
        if let Some(rest) = id.strip_prefix("bLp_chart_") {
            return spec(NormKind::BoundaryLpChart, parse_p(rest)?);
        }
        if let Some(rest) = id.strip_prefix("bLp_integral_") {
            return spec(NormKind::BoundaryLpIntegral, parse_p(rest)?);
        }
        if let Some(rest) = id.strip_prefix("tangential6_1_") {
            return spec(NormKind::Tangential, parse_p(rest)?);
        }
        if let Some(rest) = id.strip_prefix("corollary5_3_") {
            let (k, p) = two(rest)?;
            return spec(NormKind::Corollary { k: parse_k(&k)? }, parse_p(&p)?);
        }
        if let Some(rest) = id.strip_prefix("candidate_") {
            let (k, p) = two(rest)?;
            return spec(NormKind::Candidate { k: parse_k(&k)? }, parse_p(&p)?);
        }
        if let Some(rest) = id.strip_prefix("slobodetskii_") {
            let (m, p) = two(rest)?;
            let m: f64 = m.parse().map_err(|_| bad())?;
            return spec(NormKind::Slobodetskii { m }, parse_p(&p)?);
        }
        if let Some(rest) = id.strip_prefix("semi_") {
            let (k, p) = two(rest)?;
            return spec(NormKind::Seminorm { k: parse_k(&k)? }, parse_p(&p)?);
        }
        if let Some(rest) = id.strip_prefix("bW_") {
            let (k, p) = two(rest)?;
            return spec(NormKind::BoundarySobolev { k: parse_k(&k)? }, parse_p(&p)?);
        }
        if let Some(rest) = id.strip_prefix("W_") {
            let (k, p) = two(rest)?;
            let k = parse_k(&k)?;
            if p == "inf" {
                return Ok(NormSpec {
                    kind: NormKind::Sup { k },
                    p: None,
                });
            }
            return spec(NormKind::Sobolev { k }, parse_p(&p)?);
        }
        Err(bad())
    }

    pub fn id(&self) -> String {
        self.kind.id(self.p)
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

pub(crate) fn root(sum: f64, p: f64) -> f64 {
    sum.max(0.0).powf(1.0 / p)
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("p = {p} outside [1, inf)")))
    }
}

fn check_dim(u: &TestFunction, d: usize) -> Result<()> {
    if u.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: u.dim(),
        });
    }
    Ok(())
}

/// `[sum_{|alpha| = j} int |d^alpha u|^p]` for `j = 0..=k`, on one rule.
pub fn power_sums_on_rule(u: &TestFunction, rule: &TensorRule, k: u32, p: f64) -> Result<Vec<f64>> {
    check_p(p)?;
    check_dim(u, rule.dim())?;
    u.check_order(k)?;
    (0..=k)
        .map(|j| {
            let alphas = enumerate(u.dim(), j, EnumerationMode::Exact);
            rule.integrate(|x| {
                alphas
                    .iter()
                    .map(|a| u.deriv_unchecked(a, x).norm().powf(p))
                    .sum()
            })
        })
        .collect()
}

/// `||u||_{k,p,Omega}`.
pub fn sobolev_norm(u: &TestFunction, domain: &Domain, k: u32, p: f64, q: &QuadratureSpec) -> Result<NormValue> {
    let sums = power_sums_on_rule(u, &domain.region().rule(q)?, k, p)?;
    NormValue::new(NormKind::Sobolev { k }, Some(p), domain.id(), root(sums.iter().sum(), p))
}

/// `|u|_{k,p,Omega}`: only the order-`k` derivatives.
pub fn sobolev_seminorm(u: &TestFunction, domain: &Domain, k: u32, p: f64, q: &QuadratureSpec) -> Result<NormValue> {
    check_p(p)?;
    check_dim(u, domain.dim())?;
    u.check_order(k)?;
    let rule = domain.region().rule(q)?;
    let sum = seminorm_power(u, &rule, k, p)?;
    NormValue::new(NormKind::Seminorm { k }, Some(p), domain.id(), root(sum, p))
}

fn seminorm_power(u: &TestFunction, rule: &TensorRule, k: u32, p: f64) -> Result<f64> {
    let alphas = enumerate(u.dim(), k, EnumerationMode::Exact);
    rule.integrate(|x| {
        alphas
            .iter()
            .map(|a| u.deriv_unchecked(a, x).norm().powf(p))
            .sum()
    })
}

/// `max_{|alpha| <= k} sup |d^alpha u|` sampled on a closed grid with
/// `grid + 1` points per axis; a lower bound for the true supremum.
pub fn sup_norm(u: &TestFunction, domain: &Domain, k: u32, grid: usize) -> Result<NormValue> {
    check_dim(u, domain.dim())?;
    u.check_order(k)?;
    let alphas = enumerate(u.dim(), k, EnumerationMode::UpTo);
    let mut best: f64 = 0.0;
    for x in domain.region().sample_grid(grid) {
        for a in &alphas {
            let v = u.deriv(a, &x)?.norm();
            if v.is_finite() {
                best = best.max(v);
            }
        }
    }
    NormValue::new(NormKind::Sup { k }, None, domain.id(), best)
}

/// Fractional norm of order `m = k + s`, `0 < s < 1`, on a box.
pub fn slobodetskii_norm(u: &TestFunction, domain: &Domain, m: f64, p: f64, q: &QuadratureSpec) -> Result<NormValue> {
    check_p(p)?;
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidParameter(format!("m = {m} must be positive")));
    }
    if m.fract() == 0.0 {
        return Err(Error::IntegerOrder(m));
    }
    let Region::Box(cube) = domain.region() else {
        return Err(Error::InvalidParameter(
            "fractional norms are only available on box domains".into(),
        ));
    };
    let k = m.floor() as u32;
    let s = m - m.floor();
    let integer = power_sums_on_rule(u, &domain.region().rule(q)?, k, p)?;
    let mut total: f64 = integer.iter().sum();
    let mut error = 0.0;
    let mut flags = Vec::new();
    for alpha in enumerate(u.dim(), k, EnumerationMode::Exact) {
        let r = integrate_double_singular(
            |x, y| (u.deriv_unchecked(&alpha, x) - u.deriv_unchecked(&alpha, y)).norm().powf(p),
            cube,
            s,
            p,
            q,
        )?;
        total += r.value;
        error += r.error_estimate;
        for f in r.flags {
            if !flags.contains(&f) {
                flags.push(f);
            }
        }
    }
    let mut v = NormValue::new(NormKind::Slobodetskii { m }, Some(p), domain.id(), root(total, p))?;
    v.error_estimate = Some(error);
    v.flags = flags;
    Ok(v)
}

/// Per-chart `int_{Delta_r} |d^beta f_r|^p dx'` summed over `|beta| = j`,
/// for `j = 0..=k`, without surface weight or partition of unity.
pub fn boundary_chart_power_sums(
    f: &BoundaryFunction<'_>,
    k: u32,
    p: f64,
    q: &QuadratureSpec,
) -> Result<Vec<Vec<f64>>> {
    check_p(p)?;
    if k > f.max_order() {
        return Err(Error::OrderTooHigh {
            requested: k,
            available: f.max_order(),
        });
    }
    let atlas = f.atlas();
    let rule = boundary_rule(atlas, q)?;
    let m = atlas.dim() - 1;
    (0..atlas.len())
        .map(|r| {
            (0..=k)
                .map(|j| {
                    let betas = enumerate(m, j, EnumerationMode::Exact);
                    let values = rule.evaluate(|node| {
                        if node.chart != r {
                            return Ok(0.0);
                        }
                        betas.iter().try_fold(0.0, |acc, b| {
                            Ok(acc + f.chart_derivative(r, b, &node.local)?.norm().powf(p))
                        })
                    })?;
                    Ok(rule.chart_sum(r, &values))
                })
                .collect()
        })
        .collect()
}

/// `(sum_r ||f_r||_{L^p(Delta_r)}^p)^{1/p}`.
pub fn boundary_lp_chart_norm(f: &BoundaryFunction<'_>, p: f64, q: &QuadratureSpec) -> Result<NormValue> {
    let sums = boundary_chart_power_sums(f, 0, p, q)?;
    let total = sums.iter().map(|s| s[0]).sum();
    NormValue::new(NormKind::BoundaryLpChart, Some(p), f.atlas().name(), root(total, p))
}

/// `(int_{boundary} |f|^p dsigma)^{1/p}`.
pub fn boundary_lp_integral_norm(f: &BoundaryFunction<'_>, p: f64, q: &QuadratureSpec) -> Result<NormValue> {
    check_p(p)?;
    let total = integrate_boundary(|n| Ok(f.at_node(n)?.norm().powf(p)), f.atlas(), q)?;
    NormValue::new(NormKind::BoundaryLpIntegral, Some(p), f.atlas().name(), root(total, p))
}

/// `(sum_r ||f_r||_{k,p,Delta_r}^p)^{1/p}` with chain-rule derivatives.
pub fn boundary_sobolev_norm(f: &BoundaryFunction<'_>, k: u32, p: f64, q: &QuadratureSpec) -> Result<NormValue> {
    let sums = boundary_chart_power_sums(f, k, p, q)?;
    let total = sums.iter().flatten().sum();
    NormValue::new(NormKind::BoundarySobolev { k }, Some(p), f.atlas().name(), root(total, p))
}

/// `sum_r int_{Delta_r} |d_tau^2 u|^p dx'` on a planar atlas.
pub fn tangential_power_sum(u: &TestFunction, atlas: &Atlas, p: f64, q: &QuadratureSpec) -> Result<f64> {
    check_p(p)?;
    if atlas.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: atlas.dim(),
        });
    }
    if !atlas.regularity().at_least(1, 1.0) {
        return Err(Error::RegularityTooLow(
            "tangential norm needs charts of class C^{1,1}".into(),
        ));
    }
    u.check_order(2)?;
    let rule = boundary_rule(atlas, q)?;
    let values = rule.evaluate(|n| {
        Ok(tangential_second_derivative(u, atlas.chart(n.chart), n.local[0])?
            .norm()
            .powf(p))
    })?;
    Ok((0..atlas.len()).map(|r| rule.chart_sum(r, &values)).sum())
}

/// `(||u||_{1,p,boundary}^p + ||d_tau^2 u||_{p,boundary}^p)^{1/p}` for `d = 2`.
pub fn boundary_tangential_norm(u: &TestFunction, atlas: &Atlas, p: f64, q: &QuadratureSpec) -> Result<NormValue> {
    let tang = tangential_power_sum(u, atlas, p, q)?;
    let first = boundary_chart_power_sums(&trace(u, atlas), 1, p, q)?;
    let total = first.iter().flatten().sum::<f64>() + tang;
    NormValue::new(NormKind::Tangential, Some(p), atlas.name(), root(total, p))
}

/// Auxiliary seminorms for the candidate norm.
#[derive(Clone, Debug, PartialEq)]
pub enum Seminorm {
    /// `(int_Gamma |d_nu^order u|^p dsigma)^{1/p}`.
    Trace { order: u32, gamma: BoundarySubset },
    /// `|int_Omega u dx|`.
    Mean,
    /// `||u||_{L^p(Omega)}`.
    DomainLp,
}

impl Seminorm {
    /// The trace seminorms `i = 0..k` on `gamma`.
    pub fn traces_on(gamma: &BoundarySubset, k: u32) -> Vec<Seminorm> {
        (0..k)
            .map(|order| Seminorm::Trace {
                order,
                gamma: gamma.clone(),
            })
            .collect()
    }

    pub fn id(&self) -> String {
        match self {
            Seminorm::Trace { order, gamma } => format!("trace{order}@{}", gamma.label()),
            Seminorm::Mean => "mean".into(),
            Seminorm::DomainLp => "lp".into(),
        }
    }

    /// `f(u)^p`.
    pub fn power(&self, u: &TestFunction, domain: &Domain, p: f64, q: &QuadratureSpec) -> Result<f64> {
        check_p(p)?;
        match self {
            Seminorm::Trace { order, gamma } => {
                let atlas = domain.atlas()?;
                let g = normal_derivative(u, atlas, *order)?;
                integrate_boundary(
                    |n| {
                        if gamma.contains(atlas, &n.point) {
                            Ok(g.at_node(n)?.norm().powf(p))
                        } else {
                            Ok(0.0)
                        }
                    },
                    atlas,
                    q,
                )
            }
            Seminorm::Mean => {
                let rule = domain.region().rule(q)?;
                let re = rule.integrate(|x| u.eval(x).re)?;
                let im = rule.integrate(|x| u.eval(x).im)?;
                Ok(re.hypot(im).powf(p))
            }
            Seminorm::DomainLp => Ok(power_sums_on_rule(u, &domain.region().rule(q)?, 0, p)?[0]),
        }
    }

    pub fn eval(&self, u: &TestFunction, domain: &Domain, p: f64, q: &QuadratureSpec) -> Result<f64> {
        Ok(root(self.power(u, domain, p, q)?, p))
    }
}

/// `(sum_i f_i(u)^p + |u|_{k,p}^p)^{1/p}`.
pub fn candidate_norm(
    u: &TestFunction,
    domain: &Domain,
    k: u32,
    p: f64,
    seminorms: &[Seminorm],
    q: &QuadratureSpec,
) -> Result<NormValue> {
    let semi = sobolev_seminorm(u, domain, k, p, q)?.value.powf(p);
    let mut total = semi;
    for f in seminorms {
        total += f.power(u, domain, p, q)?;
    }
    NormValue::new(NormKind::Candidate { k }, Some(p), domain.id(), root(total, p))
}

/// Surface measures below this count as zero.
pub const ZERO_MEASURE_TOL: f64 = 1e-12;

/// Candidate norm with every trace seminorm `i < k` on `gamma`.
pub fn corollary_norm(
    u: &TestFunction,
    domain: &Domain,
    gamma: &BoundarySubset,
    k: u32,
    p: f64,
    q: &QuadratureSpec,
) -> Result<NormValue> {
    if gamma.measure(domain.atlas()?, q)? <= ZERO_MEASURE_TOL {
        return Err(Error::ZeroMeasure);
    }
    let mut v = candidate_norm(u, domain, k, p, &Seminorm::traces_on(gamma, k), q)?;
    v.kind = NormKind::Corollary { k }.template().into();
    v.id = NormKind::Corollary { k }.id(Some(p));
    Ok(v)
}

/// Everything a norm identifier may need besides the function.
#[derive(Clone, Debug)]
pub struct NormContext<'a> {
    pub domain: &'a Domain,
    pub gamma: Option<BoundarySubset>,
    /// Seminorms for `candidate_k_p`.
    pub seminorms: Vec<Seminorm>,
    pub quadrature: QuadratureSpec,
    pub sup_grid: usize,
}

impl<'a> NormContext<'a> {
    pub fn new(domain: &'a Domain, quadrature: QuadratureSpec) -> Self {
        NormContext {
            domain,
            gamma: None,
            seminorms: vec![Seminorm::Mean],
            quadrature,
            sup_grid: DEFAULT_SUP_GRID,
        }
    }

    fn gamma(&self) -> Result<&BoundarySubset> {
        self.gamma
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("no boundary subset configured".into()))
    }
}

/// Evaluates `spec` on `u` in `ctx`.
pub fn evaluate(spec: &NormSpec, u: &TestFunction, ctx: &NormContext<'_>) -> Result<NormValue> {
    let q = &ctx.quadrature;
    let d = ctx.domain;
    let p = spec.p.unwrap_or(f64::INFINITY);
    match spec.kind {
        NormKind::Sobolev { k } => sobolev_norm(u, d, k, p, q),
        NormKind::Sup { k } => sup_norm(u, d, k, ctx.sup_grid),
        NormKind::Seminorm { k } => sobolev_seminorm(u, d, k, p, q),
        NormKind::Slobodetskii { m } => slobodetskii_norm(u, d, m, p, q),
        NormKind::BoundaryLpChart => boundary_lp_chart_norm(&trace(u, d.atlas()?), p, q),
        NormKind::BoundaryLpIntegral => boundary_lp_integral_norm(&trace(u, d.atlas()?), p, q),
        NormKind::BoundarySobolev { k } => boundary_sobolev_norm(&trace(u, d.atlas()?), k, p, q),
        NormKind::Candidate { k } => candidate_norm(u, d, k, p, &ctx.seminorms, q),
        NormKind::Corollary { k } => corollary_norm(u, d, ctx.gamma()?, k, p, q),
        NormKind::Tangential => boundary_tangential_norm(u, d.atlas()?, p, q),
    }
}

#[cfg(test)]
pub(crate) fn unit_poly(dim: usize, terms: &[(&[u32], f64)]) -> TestFunction {
    TestFunction::polynomial(
        crate::multiindex::Polynomial::from_terms(
            dim,
            terms
                .iter()
                .map(|(e, c)| (crate::multiindex::MultiIndex::new(e.to_vec()).expect("exponents"), *c)),
        )
        .expect("polynomial"),
    )
}
