mod common;

use common::{poly_fn, poly};
use proptest::prelude::*;
use sobolev_core::atlas::{curved_atlas, disk_atlas, flat_atlas, single_chart_atlas, unit_square_atlas};
use sobolev_core::function_space::{generate_family, FamilyHints};
use sobolev_core::multiindex::{enumerate, EnumerationMode};
use sobolev_core::norms::{
    boundary_chart_power_sums, boundary_lp_chart_norm, boundary_lp_integral_norm, boundary_sobolev_norm, candidate_norm,
    corollary_norm, sobolev_norm, sobolev_seminorm,
};
use sobolev_core::quadrature::{integrate_boundary, integrate_subgraph, BoundaryNode};
use sobolev_core::traces::{normal_derivative_at, trace};
use sobolev_core::verifier::estimate_equivalence;
use sobolev_core::{
    Atlas, BoundarySubset, Chart, Complex64, Cuboid, Domain, FamilyKind, FamilySpec, Frame, GraphFn, MultiIndex,
    Polynomial, QuadratureSpec, RegularityClass, Seminorm, TestFunction,
};

fn q() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn coeffs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(2.0), Just(4.0), 1.0f64..5.0]
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

/// Every norm in the table, as a closure over the unit square.
fn norm_catalogue() -> Vec<(&'static str, Box<dyn Fn(&TestFunction, f64) -> f64>)> {
    let sq = Domain::unit_square();
    let bottom = BoundarySubset::square_edge("bottom").unwrap();
    let atlas = unit_square_atlas();
    let d1 = sq.clone();
    let d2 = sq.clone();
    let d3 = sq.clone();
    let d4 = sq;
    let a1 = atlas.clone();
    let a2 = atlas.clone();
    let a3 = atlas;
    vec![
        ("W_0_p", Box::new(move |u, p| sobolev_norm(u, &d1, 0, p, &q()).unwrap().value)),
        ("W_2_p", Box::new(move |u, p| sobolev_norm(u, &d2, 2, p, &q()).unwrap().value)),
        ("bLp_chart", Box::new(move |u, p| boundary_lp_chart_norm(&trace(u, &a1), p, &q()).unwrap().value)),
        ("bLp_integral", Box::new(move |u, p| boundary_lp_integral_norm(&trace(u, &a2), p, &q()).unwrap().value)),
        ("bW_1_p", Box::new(move |u, p| boundary_sobolev_norm(&trace(u, &a3), 1, p, &q()).unwrap().value)),
        (
            "candidate",
            Box::new(move |u, p| candidate_norm(u, &d3, 2, p, &[Seminorm::Mean], &q()).unwrap().value),
        ),
        ("corollary5_3", Box::new(move |u, p| corollary_norm(u, &d4, &bottom, 2, p, &q()).unwrap().value)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn norms_are_absolutely_homogeneous(c in coeffs(10), s in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], p in exponent()) {
        let u = poly_fn(2, 3, &c);
        let su = u.scale_real(s);
        for (id, n) in norm_catalogue() {
            let a = n(&su, p);
            let b = s.abs() * n(&u, p);
            prop_assert!(close(a, b, 1e-10), "{id}: {a} vs {b}");
        }
    }

    #[test]
    fn complex_scaling_uses_the_modulus(c in coeffs(6), re in -2.0f64..2.0, im in 0.1f64..2.0) {
        let u = poly_fn(2, 2, &c);
        let z = Complex64::new(re, im);
        for (id, n) in norm_catalogue() {
            let a = n(&u.scale(z), 2.0);
            let b = z.norm() * n(&u, 2.0);
            prop_assert!(close(a, b, 1e-10), "{id}: {a} vs {b}");
        }
    }

    #[test]
    fn norms_satisfy_the_triangle_inequality(a in coeffs(10), b in coeffs(10), p in exponent()) {
        let u = poly_fn(2, 3, &a);
        let v = poly_fn(2, 3, &b);
        let w = u.add(&v).unwrap();
        for (id, n) in norm_catalogue() {
            let lhs = n(&w, p);
            let rhs = n(&u, p) + n(&v, p);
            prop_assert!(lhs <= rhs + 1e-10 * rhs.max(1.0), "{id}: {lhs} > {rhs}");
        }
    }

    #[test]
    fn sobolev_norm_splits_by_order(c in coeffs(10), k in 1u32..4, p in exponent()) {
        let sq = Domain::unit_square();
        let u = poly_fn(2, 3, &c);
        let full = sobolev_norm(&u, &sq, k, p, &q()).unwrap().value.powf(p);
        let lower = sobolev_norm(&u, &sq, k - 1, p, &q()).unwrap().value.powf(p);
        let top = sobolev_seminorm(&u, &sq, k, p, &q()).unwrap().value.powf(p);
        prop_assert!(close(full, lower + top, 1e-12), "{full} vs {}", lower + top);
    }

    #[test]
    fn second_order_boundary_norm_splits_by_order(c in coeffs(10), p in exponent()) {
        let atlas = curved_atlas();
        let u = poly_fn(2, 3, &c).scale_real(0.3);
        let f = trace(&u, &atlas);
        let two = boundary_sobolev_norm(&f, 2, p, &q()).unwrap().value.powf(p);
        let one = boundary_sobolev_norm(&f, 1, p, &q()).unwrap().value.powf(p);
        let second: f64 = boundary_chart_power_sums(&f, 2, p, &q()).unwrap().iter().map(|r| r[2]).sum();
        prop_assert!(close(two, one + second, 1e-12), "{two} vs {}", one + second);
    }

    #[test]
    fn first_normal_derivative_is_normal_dot_gradient(c in coeffs(10), t in -0.5f64..0.5, r in 0usize..4) {
        let atlas = disk_atlas(1.0).unwrap();
        let u = poly_fn(2, 3, &c);
        let chart = atlas.chart(r % atlas.len());
        let xp = [t * chart.half_width()];
        let x = chart.boundary_point(&xp);
        let nu = chart.normal(&xp).unwrap();
        let dn = normal_derivative_at(&u, &nu, &x, 1).unwrap();
        let grad: Complex64 = (0..2)
            .map(|j| u.deriv(&MultiIndex::unit(2, j), &x).unwrap() * nu[j])
            .sum();
        prop_assert!((dn - grad).norm() <= 1e-12 * grad.norm().max(1.0));
    }

    #[test]
    fn multinomial_weights_sum_to_a_power(d in 2usize..4, l in 0u32..5, raw in prop::collection::vec(-1.0f64..1.0, 3)) {
        let len = raw[..d].iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(len > 1e-3);
        let nu: Vec<f64> = raw[..d].iter().map(|x| x / len).collect();
        let lhs: f64 = enumerate(d, l, EnumerationMode::Exact)
            .iter()
            .map(|a| a.multinomial().unwrap() as f64 * a.pow(&nu))
            .sum();
        let rhs = nu.iter().sum::<f64>().powi(l as i32);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn traces_agree_on_chart_overlaps(c in coeffs(10)) {
        let u = poly_fn(2, 3, &c);
        for atlas in [unit_square_atlas(), disk_atlas(1.0).unwrap()] {
            let gap = trace(&u, &atlas).overlap_discrepancy(40).unwrap();
            prop_assert!(gap <= 1e-12, "{}: {gap}", atlas.name());
        }
    }

    #[test]
    fn partition_of_unity_and_normals_on_sampled_points(t in -1.0f64..1.0, r in 0usize..4) {
        for atlas in [unit_square_atlas(), disk_atlas(1.0).unwrap(), curved_atlas(), flat_atlas()] {
            let chart = atlas.chart(r % atlas.len());
            let xp = [t * chart.half_width() * 0.999];
            let x = chart.boundary_point(&xp);
            let weights = atlas.partition_weights(&x).unwrap();
            prop_assert!((weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            let n = chart.normal(&xp).unwrap();
            prop_assert!((n.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs() <= 1e-14);
            let local = chart.normal_local(&xp).unwrap();
            prop_assert!(*local.last().unwrap() < 0.0);
            prop_assert!(chart.surface_weight(&xp).unwrap() >= 1.0);
        }
    }

    #[test]
    fn equivalence_ratios_ignore_scaling(seed in 0u64..1000, c in prop_oneof![Just(-1.0), Just(10.0), 0.01f64..100.0]) {
        let sq = Domain::unit_square();
        let spec = FamilySpec { seed, count: 6, degree: 3, ..FamilySpec::default() };
        let fam = generate_family(&spec, &FamilyHints::region(Cuboid::unit(2))).unwrap();
        let scaled: Vec<TestFunction> = fam.iter().map(|u| u.scale_real(c).with_id(u.id())).collect();
        let a = |u: &TestFunction| Ok(candidate_norm(u, &sq, 1, 2.0, &[Seminorm::Mean], &q())?.value);
        let b = |u: &TestFunction| Ok(sobolev_norm(u, &sq, 1, 2.0, &q())?.value);
        let e1 = estimate_equivalence("t", ("a", "b"), &fam, None, a, b).unwrap();
        let e2 = estimate_equivalence("t", ("a", "b"), &scaled, None, a, b).unwrap();
        prop_assert_eq!(e1.ratios.len(), e2.ratios.len());
        for ((i1, r1), (i2, r2)) in e1.ratios.iter().zip(&e2.ratios) {
            prop_assert_eq!(i1, i2);
            prop_assert!(close(*r1, *r2, 1e-10));
        }
    }

    #[test]
    fn seminorm_vanishes_on_lower_degree_polynomials(c in coeffs(10), k in 1u32..4, p in exponent()) {
        let sq = Domain::unit_square();
        let v = TestFunction::polynomial(poly(2, k - 1, &c));
        prop_assert!(sobolev_seminorm(&v, &sq, k, p, &q()).unwrap().value <= 1e-12);
    }

    #[test]
    fn subgraph_volume_ignores_the_graph(a in -1.0f64..1.0, b in -1.0f64..1.0, depth in 0.1f64..2.0) {
        let g = Polynomial::from_terms(1, vec![(MultiIndex::new(vec![1]).unwrap(), a), (MultiIndex::new(vec![3]).unwrap(), b)]).unwrap();
        let chart = Chart::new(0.5, depth, GraphFn::Polynomial(g), Frame::identity(vec![0.0, 0.0]), RegularityClass::SMOOTH).unwrap();
        let vol = integrate_subgraph(|_| 1.0, &chart, &q()).unwrap();
        prop_assert!((vol - depth).abs() <= 1e-12 * depth);
    }

    #[test]
    fn family_derivatives_match_finite_differences(seed in 0u64..500, kind in prop_oneof![Just(FamilyKind::Polynomial), Just(FamilyKind::Trigonometric), Just(FamilyKind::GaussianBump)]) {
        let spec = FamilySpec { kind, seed, count: 3, degree: 3, ..FamilySpec::default() };
        let fam = generate_family(&spec, &FamilyHints::region(Cuboid::unit(2))).unwrap();
        let h = 1e-4;
        let x = [0.37, 0.61];
        for u in &fam {
            for alpha in enumerate(2, 1, EnumerationMode::UpTo) {
                for j in 0..2 {
                    let mut xp = x;
                    let mut xm = x;
                    xp[j] += h;
                    xm[j] -= h;
                    let fd = (u.deriv(&alpha, &xp).unwrap() - u.deriv(&alpha, &xm).unwrap()) / (2.0 * h);
                    let exact = u.deriv(&alpha.add(&MultiIndex::unit(2, j)).unwrap(), &x).unwrap();
                    prop_assert!((fd - exact).norm() <= 1e-5 * exact.norm().max(1.0), "{} {alpha} {j}", u.id());
                }
            }
        }
    }

    #[test]
    fn bumps_vanish_outside_their_support(seed in 0u64..500) {
        let spec = FamilySpec { kind: FamilyKind::MollifierBump, seed, count: 4, ..FamilySpec::default() };
        let fam = generate_family(&spec, &FamilyHints::halfspace(2, 1.0)).unwrap();
        for u in &fam {
            let bbox = u.support().bounding_box().unwrap();
            for i in 0..250 {
                let t = i as f64 / 250.0 * std::f64::consts::TAU;
                let x = [
                    0.5 * (bbox.lower[0] + bbox.upper[0]) + 2.0 * t.cos() * bbox.diameter(),
                    0.5 * (bbox.lower[1] + bbox.upper[1]) + 2.0 * t.sin() * bbox.diameter(),
                ];
                prop_assert_eq!(u.eval(&x), Complex64::ZERO);
            }
        }
    }
}

#[test]
fn splitting_a_flat_chart_keeps_boundary_integrals() {
    let flat = |center: f64, hw: f64| {
        Chart::new(hw, 0.5, GraphFn::flat(1), Frame::identity(vec![center, 0.0]), RegularityClass::SMOOTH).unwrap()
    };
    let one = single_chart_atlas(flat(0.0, 1.0));
    let two = Atlas::new(vec![flat(-0.5, 0.6), flat(0.5, 0.6)]).unwrap();
    let bump = |node: &BoundaryNode| {
        let x = &node.point;
        let t = x[0] / 0.4;
        if t.abs() < 1.0 {
            Ok((-1.0 / (1.0 - t * t)).exp() * (1.0 + x[0]))
        } else {
            Ok(0.0)
        }
    };
    let fine = QuadratureSpec { boundary_panels: 32, ..q() };
    let a = integrate_boundary(bump, &one, &fine).unwrap();
    let b = integrate_boundary(bump, &two, &fine).unwrap();
    assert!((a - b).abs() <= 1e-10 * a.abs(), "{a} vs {b}");
}

#[test]
fn doubling_points_does_not_increase_error() {
    let sq = Domain::unit_square();
    let corpus: Vec<(TestFunction, f64)> = vec![
        (TestFunction::trig(1.0, vec![3.0, 2.0], vec![0.1, 0.2]).unwrap(), {
            let i1 = (0.1f64.cos() - (3.0f64 + 0.1).cos()) / 3.0;
            let i2 = (0.2f64.cos() - (2.0f64 + 0.2).cos()) / 2.0;
            i1 * i2
        }),
        (TestFunction::gaussian(1.0, vec![0.5, 0.5], 0.3).unwrap(), {
            let s = 0.3 * std::f64::consts::SQRT_2;
            let one = 0.3 * (std::f64::consts::PI / 2.0).sqrt() * 2.0 * erf(0.5 / s);
            one * one
        }),
    ];
    for (u, exact) in corpus {
        let mut last = f64::INFINITY;
        for n in [2usize, 4, 8, 16] {
            let v = sq.region().integrate(|x| u.eval(x).re, &QuadratureSpec::with_points(n)).unwrap();
            let err = (v - exact).abs();
            assert!(err <= last.max(1e-15), "{} n={n}: {err} > {last}", u.id());
            last = err;
        }
    }
}

/// Series for `erf`, accurate to double precision for `|x| <= 2`.
fn erf(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = x;
    let mut n = 0.0;
    while term.abs() > 1e-18 {
        sum += term / (2.0 * n + 1.0);
        n += 1.0;
        term *= -x * x / n;
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}
