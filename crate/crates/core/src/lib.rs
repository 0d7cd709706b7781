//! Numerical toolkit for elliptic boundary problems on semialgebraic domains.
//!
//! The crate revolves around domains of the form `B(c, R) ∖ {P = 0}` (a ball
//! minus a polynomial variety) and their components cut out by polynomial
//! inequalities. It provides:
//!
//! - exact polynomial arithmetic and conservative distance bounds ([`poly`], [`domain`]),
//! - sampled tangent links, cone measures, and a boundary regularity
//!   criterion built on them ([`cone`]),
//! - graded 2D triangulations with crack support ([`mesh2d`]),
//! - a P1 finite element solver for `div(A ∇u) = f` with mixed boundary
//!   conditions ([`fem`]),
//! - a walk-on-spheres estimator for harmonic problems in 3D ([`wos`]),
//! - gradient-integrability diagnostics: annulus scaling exponents, slice
//!   Poincaré ratios, and weighted gradient norms ([`regularity`]).
//!
//! All randomized routines draw from explicitly derived substreams of a
//! single master seed (see [`rng`]) and give bit-identical results for a
//! fixed seed regardless of thread count.

pub mod cone;
pub mod consts;
pub mod domain;
pub mod error;
pub mod fem;
pub mod field;
pub mod geom;
pub mod mesh2d;
pub mod poly;
pub mod regularity;
pub mod rng;
pub mod wos;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
