//! Sobolev norms on domains and their boundaries, computed by Gauss
//! quadrature from exact derivative oracles, and numerical checks of the
//! norm equivalences and trace estimates built on them.

pub mod atlas;
pub mod domain;
pub mod error;
pub mod function_space;
pub mod multiindex;
pub mod norms;
pub mod quadrature;
pub mod report;
pub mod suite;
pub mod traces;
pub mod verifier;

pub use atlas::{Atlas, AtlasFile, Chart, Frame, GraphFn, RegularityClass};
pub use domain::{BoundarySubset, Domain, Region};
pub use error::{Error, Result};
pub use function_space::{FamilyKind, FamilySpec, Support, TestFunction};
pub use multiindex::{MultiIndex, Polynomial};
pub use norms::{NormKind, NormSpec, NormValue, Seminorm};
pub use quadrature::{Cuboid, QualityFlag, QuadratureSpec};
pub use suite::{run_suite, SuiteConfig, SuiteReport};
pub use traces::{BoundaryFunction, InterpKind};
pub use verifier::{EquivalenceEstimate, InequalityRecord, Provenance, Tolerance};
pub use num_complex::Complex64;
