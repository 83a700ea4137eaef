//! Exact certification toolkit for integrality-gap constructions.
//!
//! The crate is organized around a strict no-tolerance policy: everything on a
//! verification path is computed in arbitrary-precision rational arithmetic,
//! and every negative verdict carries a certificate (a violating vector, a
//! separating halfspace, an unbalanced layer, a nonzero residual atom) that
//! can be re-checked independently of the code that produced it.

#![forbid(unsafe_code)]

pub mod construct;
pub mod exec;
pub mod hull;
pub mod instance;
pub mod matrix;
pub mod polytope;
pub mod predicate;
pub mod rat;
pub mod rounding;

pub use exec::Exec;
pub use hull::{check_certificate, hull_member, HullError, HullResult};
pub use matrix::{psd_check, PsdResult, SymMatrix};
pub use rat::{rfrac, rint, Rat};
