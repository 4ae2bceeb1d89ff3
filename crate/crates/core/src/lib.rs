//! Carré du champ calculus for diffusion triples built from Hörmander vector
//! fields.
//!
//! Everything is evaluated pointwise through [`Jet`]s, truncated Taylor
//! expansions. A [`MarkovTriple`] assembles a frame `Z₁..Z_m` and a
//! log-weight `η` into the operators `Γ`, `L` and `Γ₂`; the [`verify`] module
//! turns those into numerical certificates.

pub mod error;
pub mod expr;
pub mod fields;
pub mod function;
pub mod geometries;
pub mod jet;
pub mod quad;
pub mod report;
pub mod sampling;
pub mod series;
pub mod triple;
pub mod verify;

#[cfg(doctest)]
mod book;

pub use error::{Error, Result};
pub use expr::{parse, parse_univariate, Expr, Expression, ParseDiagnostic};
pub use fields::{hormander_depth, BracketTree, HormanderReport, VectorField};
pub use function::SmoothFunction;
pub use geometries::{GeometryKind, GeometrySpec};
pub use jet::{point, Jet, Point};
pub use series::Univariate;
pub use triple::{validate_axioms, GeneralOperator, LocalFrame, MarkovTriple};
