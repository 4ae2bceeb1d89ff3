//! Guide chapters compiled as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}
#[doc = include_str!("../../../book/src/jets.md")]
mod jets {}
#[doc = include_str!("../../../book/src/expressions.md")]
mod expressions {}
#[doc = include_str!("../../../book/src/fields.md")]
mod fields {}
#[doc = include_str!("../../../book/src/triples.md")]
mod triples {}
#[doc = include_str!("../../../book/src/geometries.md")]
mod geometries {}
#[doc = include_str!("../../../book/src/quadrature.md")]
mod quadrature {}
#[doc = include_str!("../../../book/src/certificates.md")]
mod certificates {}
#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
