//! Symbolic workbench for Einstein algebras and their categorical stages.
//!
//! The crate is organized around the pipeline: symbolic scalar expressions
//! ([`expr`]) feed stage algebras ([`algebra`]), spectra and geometricity
//! checks ([`spectrum`]), Lorentz modules of derivations ([`lorentz`]),
//! curvature and Einstein-equation verification ([`curvature`]), and stage
//! transport to Weil jets and parametrized-point spaces ([`stage`]).

pub mod algebra;
pub mod curvature;
pub mod expr;
pub mod lorentz;
pub mod numeric;
pub mod spectrum;
pub mod stage;

pub use expr::{Bindings, Chart, ExprError, Primitive, ScalarExpr};
pub use numeric::{Sampler, ZeroVerdict, DEFAULT_SEED};
