//! Null bracket algebra over the 2D conformal model of Euclidean geometry.
//!
//! The crate is layered bottom-up:
//!
//! * [`cga`] — exact-rational geometric algebra of 4D Minkowski space; the
//!   numeric oracle everything else is checked against.
//! * [`sym`] — symbol table for named null vectors and constructed points.
//! * [`atom`] / [`poly`] — bracket and inner-product atoms, and polynomials
//!   over them.
//! * [`chain`] — long geometric-product chains and their scalar wrappers.
//! * [`rules`] — the rewrite-rule catalogue: null symmetry and expansion,
//!   trigonometric and rational expansions, Clifford factorization,
//!   contractions, null duality, and meet expansion.
//! * [`construct`] — configuration DSL, geometric constructors, and exact
//!   numeric instantiation.
//! * [`breefs`] — the strategy layer driving eliminations and expansions by
//!   neighborhood priority, producing verified proof traces.

pub mod atom;
pub mod breefs;
pub mod cga;
pub mod chain;
pub mod construct;
pub mod poly;
pub mod rules;
pub mod sym;

pub use cga::{Multivector, Q};
pub use sym::{SymDef, Symbols, VecSym};
