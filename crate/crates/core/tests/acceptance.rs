//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the
//! process fails if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sobolev_core::function_space::{generate_family, restrict_to_zero_on, FamilyHints};
use sobolev_core::multiindex::{enumerate, EnumerationMode};
use sobolev_core::norms::{candidate_norm, slobodetskii_norm, sobolev_norm, sobolev_seminorm};
use sobolev_core::quadrature::TensorRule;
use sobolev_core::report::{equivalences_csv, records_csv, to_json};
use sobolev_core::verifier::{check_kernel_condition, check_poincare, KernelVerdict, Section6Constants};
use sobolev_core::{
    run_suite, BoundarySubset, Cuboid, Domain, FamilySpec, Polynomial, QualityFlag, QuadratureSpec, Seminorm,
    SuiteConfig, SuiteReport, TestFunction, Tolerance,
};

const QUADRATURE_REL: f64 = 1e-12;
const QUADRATURE_BUDGET: Duration = Duration::from_secs(1);
const ORACLE_ABS: f64 = 1e-10;
const SLOBODETSKII_REL: f64 = 0.01;
const ORACLE_BUDGET: Duration = Duration::from_secs(30);
const HALFSPACE_REL: f64 = 1e-7;
const HALFSPACE_BUDGET: Duration = Duration::from_secs(120);
const SECTION6_REL: f64 = 1e-9;
const RESIDUAL_MAX: f64 = 1e-8;
const KERNEL_SEMINORM_MAX: f64 = 1e-12;
const CANDIDATE_MIN: f64 = 1e-6;
const STABILITY_LIMIT: f64 = 1.5;
const KERNEL_BUDGET: Duration = Duration::from_secs(10);
const TRIANGLE_ABS: f64 = 1e-10;
const POINCARE_RATIO_ABS: f64 = 1e-6;
const FULL_SUITE_BUDGET: Duration = Duration::from_secs(600);

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, budget: Duration) -> Result<(), String> {
    ensure(elapsed <= budget, || format!("took {elapsed:.2?}, budget {budget:.0?}"))
}

fn suite(theorems: &[&str]) -> SuiteConfig {
    SuiteConfig {
        theorems: theorems.iter().map(|s| s.to_string()).collect(),
        ..SuiteConfig::default()
    }
}

fn run(cfg: &SuiteConfig) -> Result<SuiteReport, String> {
    run_suite(cfg).map_err(|e| e.to_string())
}

/// `int_lo^hi x^e dx`.
fn monomial_integral(e: u32, lo: f64, hi: f64) -> f64 {
    let n = e as i32 + 1;
    (hi.powi(n) - lo.powi(n)) / n as f64
}

fn quadrature_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in 2..=10usize {
        let max = 2 * n as u32 - 1;
        for d in 1..=3usize {
            for _ in 0..5 {
                let lower: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..1.0)).collect();
                let upper: Vec<f64> = lower.iter().map(|l| l + rng.random_range(0.1..2.0)).collect();
                let cube = Cuboid::new(lower.clone(), upper.clone()).map_err(|e| e.to_string())?;
                let rule = TensorRule::new(&cube, n, 1);
                let terms: Vec<(Vec<u32>, f64)> = (0..6)
                    .map(|_| ((0..d).map(|_| rng.random_range(0..=max)).collect(), rng.random_range(-1.0..1.0)))
                    .collect();
                let f = |x: &[f64]| -> f64 {
                    terms
                        .iter()
                        .map(|(e, c)| c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>())
                        .sum()
                };
                let exact: f64 = terms
                    .iter()
                    .map(|(e, c)| c * (0..d).map(|i| monomial_integral(e[i], lower[i], upper[i])).product::<f64>())
                    .sum();
                let scale: f64 = terms
                    .iter()
                    .map(|(e, c)| {
                        c.abs()
                            * (0..d)
                                .map(|i| {
                                    let (l, h) = (lower[i], upper[i]);
                                    if e[i] % 2 == 1 && l < 0.0 && h > 0.0 {
                                        monomial_integral(e[i], 0.0, h) - monomial_integral(e[i], l, 0.0)
                                    } else {
                                        monomial_integral(e[i], l, h).abs()
                                    }
                                })
                                .product::<f64>()
                    })
                    .sum();
                let got = rule.integrate(f).map_err(|e| e.to_string())?;
                let rel = (got - exact).abs() / scale;
                worst = worst.max(rel);
                cases += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(worst <= QUADRATURE_REL, || format!("worst relative error {worst:e}"))?;
    within(elapsed, QUADRATURE_BUDGET)?;
    Ok(format!("{cases} polynomials, n = 2..10, worst relative error {worst:.2e}, {elapsed:.2?}"))
}

fn norm_oracles() -> Outcome {
    let start = Instant::now();
    let sq = Domain::unit_square();
    let q = QuadratureSpec::default();
    let one = TestFunction::constant(2, 1.0);
    let mut worst: f64 = 0.0;
    for k in 0..=3 {
        for p in [1.0, 2.0, 4.0] {
            let v = sobolev_norm(&one, &sq, k, p, &q).map_err(|e| e.to_string())?.value;
            worst = worst.max((v - 1.0).abs());
        }
    }
    ensure(worst <= ORACLE_ABS, || format!("||1||_(k,p) off by {worst:e}"))?;
    let x1 = TestFunction::coordinate(2, 0);
    let v = sobolev_norm(&x1, &sq, 1, 2.0, &q).map_err(|e| e.to_string())?.value;
    let err_x1 = (v - (4.0f64 / 3.0).sqrt()).abs();
    ensure(err_x1 <= ORACLE_ABS, || format!("||x1||_(1,2) off by {err_x1:e}"))?;
    let interval = Domain::unit_interval();
    let x = TestFunction::coordinate(1, 0);
    let s = slobodetskii_norm(&x, &interval, 0.5, 2.0, &q).map_err(|e| e.to_string())?;
    let exact = (1.0f64 / 3.0 + 1.0).sqrt();
    let rel = (s.value - exact).abs() / exact;
    ensure(rel <= SLOBODETSKII_REL, || format!("Slobodetskii {} vs {exact}", s.value))?;
    ensure(!s.flags.contains(&QualityFlag::NonMonotoneIncrements), || {
        "extrapolation increments do not decrease".into()
    })?;
    let elapsed = start.elapsed();
    within(elapsed, ORACLE_BUDGET)?;
    Ok(format!(
        "||1|| worst {worst:.1e}, ||x1||_(1,2) error {err_x1:.1e}, Slobodetskii {:.6} (rel {rel:.1e}), {elapsed:.2?}",
        s.value
    ))
}

fn halfspace_constant() -> Outcome {
    let start = Instant::now();
    let cfg = suite(&["prop7.1"]);
    let report = run(&cfg)?;
    let elapsed = start.elapsed();
    let records = &report.records;
    ensure(records.len() == 2 * 3 * 50, || format!("{} records", records.len()))?;
    let mut worst = f64::NEG_INFINITY;
    for r in records {
        let p: f64 = [1.0, 2.0, 4.0]
            .into_iter()
            .find(|p: &f64| (p.powf(1.0 / p) - r.constant).abs() < 1e-15)
            .ok_or_else(|| format!("constant {} is not p^(1/p)", r.constant))?;
        let excess = (r.lhs - p.powf(1.0 / p) * r.rhs) / r.scale.max(f64::MIN_POSITIVE);
        worst = worst.max(excess);
    }
    ensure(worst <= HALFSPACE_REL, || format!("lhs exceeds p^(1/p) rhs by {worst:e} of scale"))?;
    let falsified = run(&SuiteConfig { falsify: true, ..cfg })?;
    let violations = falsified.failures().len();
    ensure(violations > 0, || "halved constant produced no violation".into())?;
    within(elapsed, HALFSPACE_BUDGET)?;
    Ok(format!(
        "{} records, worst (lhs - p^(1/p) rhs)/scale = {worst:.2e}; halved constant: {violations} violations; {elapsed:.2?}",
        records.len()
    ))
}

/// Assembles the two constants from the per-chart constants.
fn assemble(c: &Section6Constants) -> (f64, f64) {
    let p = c.p;
    let two = 2f64.powf(p);
    let c1 = c.per_chart.iter().map(|k| two * k.c1.powf(p)).fold(0.0, f64::max);
    let c3 = c.per_chart.iter().map(|k| two * k.c3.powf(p)).fold(0.0, f64::max);
    let c2 = c
        .per_chart
        .iter()
        .map(|k| (two / k.c2.powf(p)).max(two * k.c1.powf(p) / k.c2.powf(p)))
        .fold(0.0, f64::max);
    ((1.0 + c1).max(c3).powf(1.0 / p), (1.0 + c2).powf(1.0 / p))
}

fn section6() -> Outcome {
    let cfg = SuiteConfig {
        boundary_count: 100,
        residual_samples: 1000,
        ..suite(&["sec6"])
    };
    let report = run(&cfg)?;
    let mut worst = f64::NEG_INFINITY;
    for r in &report.records {
        worst = worst.max(-r.slack / r.scale.max(f64::MIN_POSITIVE));
    }
    ensure(report.records.len() == 2 * 2 * 2 * 100, || format!("{} records", report.records.len()))?;
    ensure(worst <= SECTION6_REL, || format!("slack below -{worst:e} scale"))?;
    let mut flat_c1 = None;
    for e in &report.constants {
        let (c1, c2) = assemble(&e.constants);
        ensure(c1 == e.constants.c1_tilde && c2 == e.constants.c2_tilde, || {
            format!("{} p={}: constants differ from their assembly", e.atlas, e.constants.p)
        })?;
        if e.atlas == "flat" && e.constants.p == 1.0 {
            flat_c1 = Some(c1);
        }
    }
    ensure(flat_c1 == Some(2.0), || format!("flat c1~ at p=1 is {flat_c1:?}"))?;
    let residual = report
        .summaries
        .iter()
        .filter(|s| s.label.ends_with("tangential residual"))
        .map(|s| s.value)
        .fold(0.0, f64::max);
    ensure(residual <= RESIDUAL_MAX, || format!("residual {residual:e}"))?;
    Ok(format!(
        "{} records on flat and curved atlases, worst -slack/scale {worst:.2e}, flat c1~(p=1) = 2, residual {residual:.1e}",
        report.records.len()
    ))
}

fn equivalence() -> Outcome {
    let report = run(&suite(&["thm5.1", "cor5.3"]))?;
    let cor: Vec<_> = report.equivalences.iter().filter(|e| e.theorem == "cor5.3").collect();
    ensure(cor.len() == 2 * 2 * 2, || format!("{} cor5.3 estimates", cor.len()))?;
    let a_emp = report.equivalences.iter().map(|e| e.min_ratio).fold(f64::INFINITY, f64::min);
    ensure(a_emp > 0.0, || format!("a_emp = {a_emp}"))?;
    let largest = cor.iter().map(|e| e.ratios.len()).max().unwrap_or(0);
    ensure(largest == 200, || format!("largest family has {largest} members"))?;
    let growth = report.stability.iter().map(|s| s.growth).fold(0.0, f64::max);
    ensure(
        !report.stability.is_empty() && report.stability.iter().all(|s| s.passed && s.growth <= STABILITY_LIMIT),
        || format!("stability growth {growth}"),
    )?;
    ensure(report.failures().is_empty(), || format!("{} failed records", report.failures().len()))?;

    let sq = Domain::unit_square();
    let bottom = BoundarySubset::square_edge("bottom").map_err(|e| e.to_string())?;
    let q = QuadratureSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut max_semi: f64 = 0.0;
    let mut min_candidate = f64::INFINITY;
    for k in [1u32, 2] {
        let n = enumerate(2, k - 1, EnumerationMode::UpTo).len();
        for _ in 0..20 {
            let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v = common::poly_fn(2, k - 1, &c);
            for p in [1.0, 2.0] {
                max_semi = max_semi.max(sobolev_seminorm(&v, &sq, k, p, &q).map_err(|e| e.to_string())?.value);
                let cand = candidate_norm(&v, &sq, k, p, &Seminorm::traces_on(&bottom, k), &q)
                    .map_err(|e| e.to_string())?
                    .value;
                min_candidate = min_candidate.min(cand);
            }
        }
    }
    ensure(max_semi <= KERNEL_SEMINORM_MAX, || format!("|v|_(k,p) = {max_semi:e} on P_(k-1)"))?;
    ensure(min_candidate > CANDIDATE_MIN, || format!("candidate norm {min_candidate:e} on P_(k-1)"))?;
    Ok(format!(
        "a_emp = {a_emp:.4}, max growth {growth:.3}, max |v|_(k,p) on P_(k-1) = {max_semi:.1e}, min candidate = {min_candidate:.3}"
    ))
}

fn kernel() -> Outcome {
    let start = Instant::now();
    let sq = Domain::unit_square();
    let q = QuadratureSpec::default();
    let mut checked = 0;
    let mut nontrivial = 0;
    for k in [2u32, 3] {
        for (name, probes) in common::kernel_configurations() {
            let seminorms: Vec<Seminorm> = probes.iter().map(common::Probe::seminorm).collect();
            let report = check_kernel_condition(&seminorms, &sq, k, &q).map_err(|e| e.to_string())?;
            let oracle = common::lattice_kernel(&probes, k);
            match (&report.verdict, oracle) {
                (KernelVerdict::Trivial, None) => {}
                (KernelVerdict::Nontrivial { witness }, Some(_)) => {
                    ensure(common::annihilated(&probes, witness), || format!("{name} k={k}: bad witness {witness}"))?;
                    nontrivial += 1;
                }
                (v, o) => return Err(format!("{name} k={k}: verdict {v:?}, lattice {o:?}")),
            }
            checked += 1;
        }
    }
    let bottom = BoundarySubset::square_edge("bottom").map_err(|e| e.to_string())?;
    let single = check_kernel_condition(&Seminorm::traces_on(&bottom, 1), &sq, 2, &q).map_err(|e| e.to_string())?;
    let x2 = common::poly(2, 1, &[0.0, 0.0, 1.0]);
    match &single.verdict {
        KernelVerdict::Nontrivial { witness } if *witness == x2 || *witness == x2.scale(-1.0) => {}
        v => return Err(format!("trace0 on bottom, k=2: {v:?}, expected witness x2")),
    }
    let elapsed = start.elapsed();
    within(elapsed, KERNEL_BUDGET)?;
    Ok(format!("{checked} configurations agree ({nontrivial} nontrivial), witness x2 recovered, {elapsed:.2?}"))
}

fn poincare() -> Outcome {
    let sq = Domain::unit_square();
    let atlas = sq.atlas().map_err(|e| e.to_string())?;
    let left = BoundarySubset::square_edge("left").map_err(|e| e.to_string())?;
    let q = QuadratureSpec::default();
    let tol = Tolerance::default();
    let spec = FamilySpec {
        count: 100,
        ..FamilySpec::default()
    };
    let base = generate_family(&spec, &FamilyHints::region(Cuboid::unit(2))).map_err(|e| e.to_string())?;
    let corpus = restrict_to_zero_on(&base, &left, atlas).map_err(|e| e.to_string())?;
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    for p in [1.0, 2.0] {
        let r = check_poincare(&corpus, &sq, &left, p, &q, tol).map_err(|e| e.to_string())?;
        for rec in r.records.iter().filter(|r| r.relation == "triangle") {
            worst = worst.max(rec.lhs - rec.rhs);
            count += 1;
        }
    }
    ensure(worst <= TRIANGLE_ABS, || format!("triangle bound violated by {worst:e}"))?;
    let ratio = |u: TestFunction| -> Result<f64, String> {
        let r = check_poincare(&[u], &sq, &left, 2.0, &q, tol).map_err(|e| e.to_string())?;
        Ok(r.empirical_c)
    };
    let x1 = ratio(TestFunction::coordinate(2, 0))?;
    let x1sq = ratio(TestFunction::polynomial(Polynomial::monomial(
        sobolev_core::MultiIndex::new(vec![2, 0]).map_err(|e| e.to_string())?,
        1.0,
    )))?;
    let e1 = (x1 - 3f64.powf(-0.5)).abs();
    let e2 = (x1sq - (3.0f64 / 20.0).sqrt()).abs();
    ensure(e1 <= POINCARE_RATIO_ABS && e2 <= POINCARE_RATIO_ABS, || format!("ratios {x1}, {x1sq}"))?;
    let report = run(&suite(&["cor5.6"]))?;
    ensure(report.failures().is_empty(), || format!("{} failed records", report.failures().len()))?;
    let cs: Vec<String> = report
        .summaries
        .iter()
        .filter(|s| s.label.ends_with("empirical C"))
        .map(|s| format!("{}: {:.4}", s.label.trim_end_matches(" empirical C"), s.value))
        .collect();
    ensure(report.stability.iter().all(|s| s.passed), || "empirical C unstable".into())?;
    Ok(format!(
        "{count} triangle records, worst lhs - rhs {worst:.1e}; ratios {x1:.7}, {x1sq:.7}; C [{}]",
        cs.join(", ")
    ))
}

fn boundary_bracket() -> Outcome {
    let cfg = SuiteConfig {
        boundary_count: 100,
        bracket_atlases: vec!["unit_square".into(), "disk".into()],
        ..suite(&["prop3.4"])
    };
    let report = run(&cfg)?;
    ensure(report.records.len() == 2 * 2 * 2 * 100, || format!("{} records", report.records.len()))?;
    let failed = report.failures().len();
    ensure(failed == 0, || format!("{failed} ratios outside the bracket"))?;
    let worst = report.records.iter().map(|r| -r.slack / r.scale).fold(f64::NEG_INFINITY, f64::max);
    Ok(format!("{} records on unit_square and disk, worst -slack/scale {worst:.2e}", report.records.len()))
}

fn determinism() -> Outcome {
    let cfg = SuiteConfig::default();
    let start = Instant::now();
    let a = run(&cfg)?;
    let elapsed = start.elapsed();
    let b = run(&cfg)?;
    let render = |r: &SuiteReport| -> Result<(String, String, String), String> {
        Ok((
            records_csv(&r.records).map_err(|e| e.to_string())?,
            equivalences_csv(&r.equivalences).map_err(|e| e.to_string())?,
            to_json(r).map_err(|e| e.to_string())?,
        ))
    };
    let (ra, ea, ja) = render(&a)?;
    let (rb, eb, jb) = render(&b)?;
    ensure(ra == rb, || "records.csv differs".into())?;
    ensure(ea == eb, || "equivalences.csv differs".into())?;
    ensure(ja == jb, || "verify.json differs".into())?;
    within(elapsed, FULL_SUITE_BUDGET)?;
    let failures = a.failures().len();
    Ok(format!(
        "{} records, {} bytes of JSON identical across runs; {failures} failed records; full suite {elapsed:.1?}",
        a.records.len(),
        ja.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 quadrature exactness", quadrature_exactness),
        ("2 analytic norm oracles", norm_oracles),
        ("3 half-space constant p^(1/p)", halfspace_constant),
        ("4 boundary norm bounds with atlas constants", section6),
        ("5 candidate norm equivalence", equivalence),
        ("6 kernel condition vs lattice oracle", kernel),
        ("7 Poincare", poincare),
        ("8 boundary L^p norm bracket", boundary_bracket),
        ("9 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS [{name}] {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL [{name}] {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
