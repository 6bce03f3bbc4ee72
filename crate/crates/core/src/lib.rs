//! Numerical laboratory for Donaldson's heat flow on Hermitian vector bundles
//! over a compact Gauduchon surface (the complex 2-torus with a family of
//! non-Kähler Gauduchon metrics).
//!
//! The crate is organized around six layers:
//!
//! * [`forms`] — exact pointwise linear algebra of complex differential forms
//!   (wedge, Lefschetz operators, Hodge star, Weil operator, torsion operators).
//! * [`grid`] — pseudo-spectral Dolbeault calculus on a periodic 4D grid,
//!   the Gauduchon metric family, global quadrature, and the operator
//!   `P = iΛ∂̄∂`.
//! * [`bundle`] — Hermitian bundles over the grid torus: Chern connections,
//!   curvature, gauge actions, degree and slope.
//! * [`flow`] — time integration of the metric heat flow
//!   `h⁻¹ ḣ = −(iΛF − μ𝕀)`, gauge transport back to the connection flow,
//!   and the along-the-flow monitors and identity residuals.
//! * [`stability`] — Harder-Narasimhan types, the `Ψ^hn` projection built from
//!   declared filtrations, and HYM functional bookkeeping.
//! * [`config`] / [`io`] — run configuration, checkpoints and CSV emission.

pub mod bundle;
pub mod config;
pub mod error;
pub mod flow;
pub mod forms;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod par;
pub mod stability;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Total volume every base metric is normalized to.
pub const VOLUME: f64 = std::f64::consts::TAU;
