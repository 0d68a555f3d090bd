#![allow(dead_code)]

use sobolev_core::multiindex::{enumerate, EnumerationMode};
use sobolev_core::{BoundarySubset, MultiIndex, Polynomial, Seminorm, TestFunction};

/// Polynomial in `d` variables with `coeffs` on the monomials of degree
/// `<= deg` in enumeration order; missing coefficients are zero.
pub fn poly(d: usize, deg: u32, coeffs: &[f64]) -> Polynomial {
    let basis = enumerate(d, deg, EnumerationMode::UpTo);
    Polynomial::with_bound(d, deg, basis.into_iter().zip(coeffs.iter().copied())).unwrap()
}

pub fn poly_fn(d: usize, deg: u32, coeffs: &[f64]) -> TestFunction {
    TestFunction::polynomial(poly(d, deg, coeffs))
}

/// Linear functionals on `P_{k-1}` over the unit square whose joint zero set
/// is the joint kernel of a seminorm.
#[derive(Clone, Debug)]
pub enum Probe {
    /// `d_nu^order v` along a square edge.
    Trace { order: u32, edge: &'static str },
    /// `int_(0,1)^2 v`.
    Mean,
    /// `v` on an interior grid.
    Values,
}

impl Probe {
    pub fn seminorm(&self) -> Seminorm {
        match self {
            Probe::Trace { order, edge } => Seminorm::Trace {
                order: *order,
                gamma: BoundarySubset::square_edge(edge).unwrap(),
            },
            Probe::Mean => Seminorm::Mean,
            Probe::Values => Seminorm::DomainLp,
        }
    }

    fn samples(&self, p: &Polynomial) -> Vec<f64> {
        const T: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
        match self {
            Probe::Trace { order, edge } => {
                let (axis, at) = match *edge {
                    "bottom" => (1, 0.0),
                    "top" => (1, 1.0),
                    "left" => (0, 0.0),
                    "right" => (0, 1.0),
                    e => panic!("edge {e}"),
                };
                let mut exps = vec![0u32; 2];
                exps[axis] = *order;
                let dv = p.derivative(&MultiIndex::new(exps).unwrap()).unwrap();
                T.iter()
                    .map(|&t| {
                        let mut x = [t, t];
                        x[axis] = at;
                        dv.eval(&x)
                    })
                    .collect()
            }
            Probe::Mean => vec![p
                .terms()
                .map(|(b, c)| c * b.exponents().iter().map(|&e| 1.0 / (e as f64 + 1.0)).product::<f64>())
                .sum()],
            Probe::Values => T
                .iter()
                .flat_map(|&s| T.iter().map(move |&t| p.eval(&[s, t])))
                .collect(),
        }
    }
}

/// Whether every probe vanishes on `p`.
pub fn annihilated(probes: &[Probe], p: &Polynomial) -> bool {
    let scale = p.terms().map(|(_, c)| c.abs()).fold(0.0, f64::max).max(1.0);
    probes
        .iter()
        .flat_map(|f| f.samples(p))
        .all(|v| v.abs() <= 1e-10 * scale)
}

/// Brute force over integer coefficient vectors in `{-2..2}^n` on the
/// monomials of `P_{k-1}` in two variables. Returns the first nonzero lattice
/// polynomial annihilated by every probe.
pub fn lattice_kernel(probes: &[Probe], k: u32) -> Option<Polynomial> {
    let basis = enumerate(2, k - 1, EnumerationMode::UpTo);
    let n = basis.len();
    let columns: Vec<Vec<f64>> = basis
        .iter()
        .map(|b| {
            let m = Polynomial::monomial(b.clone(), 1.0);
            probes.iter().flat_map(|f| f.samples(&m)).collect()
        })
        .collect();
    let rows = columns[0].len();
    let mut c = vec![-2i32; n];
    loop {
        if c.iter().any(|&x| x != 0) {
            let zero = (0..rows).all(|i| {
                let v: f64 = (0..n).map(|a| c[a] as f64 * columns[a][i]).sum();
                v.abs() <= 1e-10
            });
            if zero {
                let terms = basis.iter().cloned().zip(c.iter().map(|&x| x as f64));
                return Some(Polynomial::with_bound(2, k - 1, terms).unwrap());
            }
        }
        let mut i = 0;
        loop {
            if i == n {
                return None;
            }
            c[i] += 1;
            if c[i] <= 2 {
                break;
            }
            c[i] = -2;
            i += 1;
        }
    }
}

/// The documented kernel configurations on the unit square.
pub fn kernel_configurations() -> Vec<(&'static str, Vec<Probe>)> {
    use Probe::*;
    vec![
        ("lp", vec![Values]),
        ("mean", vec![Mean]),
        ("trace0_bottom", vec![Trace { order: 0, edge: "bottom" }]),
        ("trace01_bottom", vec![Trace { order: 0, edge: "bottom" }, Trace { order: 1, edge: "bottom" }]),
        (
            "trace012_bottom",
            vec![
                Trace { order: 0, edge: "bottom" },
                Trace { order: 1, edge: "bottom" },
                Trace { order: 2, edge: "bottom" },
            ],
        ),
        ("trace0_left_mean", vec![Trace { order: 0, edge: "left" }, Mean]),
        ("trace0_bottom_left", vec![Trace { order: 0, edge: "bottom" }, Trace { order: 0, edge: "left" }]),
        ("trace1_right", vec![Trace { order: 1, edge: "right" }]),
    ]
}
