//! Shared fixtures for the criterion benches.

use sobolev_core::function_space::{generate_family, FamilyHints};
use sobolev_core::{Cuboid, FamilyKind, FamilySpec, TestFunction};

/// Seeded members of `kind` on the unit box in `dim` variables.
pub fn family(kind: FamilyKind, dim: usize, count: usize) -> Vec<TestFunction> {
    let spec = FamilySpec {
        kind,
        count,
        degree: 4,
        seed: 17,
        ..FamilySpec::default()
    };
    generate_family(&spec, &FamilyHints::region(Cuboid::unit(dim))).expect("valid family spec")
}

/// A smooth non-polynomial integrand.
pub fn oscillatory(x: &[f64]) -> f64 {
    x.iter().enumerate().map(|(i, xi)| ((i + 2) as f64 * xi).cos()).product()
}
