//! Computable core of extremal-Kähler-metric theory on rigid semisimple
//! toric bundles.
//!
//! The library works on the momentum polytope side of the generalized Calabi
//! construction:
//!
//! * [`polytope`] — Delzant polytopes, exact moment calculus (interior and
//!   facet integrals in the lattice normalization), adaptive quadrature and
//!   piecewise-linear convex test functions;
//! * [`calabi`] — fibration data (base factors, weight polynomial, Kähler
//!   class parameters) and the slope obstruction for projective bundles over
//!   a curve;
//! * [`extremal`] — the moment linear system and the extremal affine
//!   function `⟨A,z⟩ + B`;
//! * [`abreu`] — inverse-Hessian matrix fields, boundary/positivity
//!   certificates, the weighted Abreu scalar-curvature operator and the
//!   extremal operator;
//! * [`stability`] — the relative stability functional, its rewrite through
//!   extremal solutions, the relative K-energy and non-existence scans;
//! * [`cp2_bundle`] — the fully explicit projective-plane-bundle family over
//!   a curve, with existence / non-existence certificates;
//! * [`report`] — machine-readable report types shared with the CLI.
//!
//! All exact paths use arbitrary-precision rational arithmetic; floating
//! point enters only through sampling certificates and adaptive quadrature,
//! and every numeric verdict carries its error bound or margin.

pub mod abreu;
pub mod calabi;
pub mod cp2_bundle;
pub mod extremal;
mod linalg;
pub mod poly;
pub mod polytope;
mod ratio;
pub mod ratfn;
pub mod report;
pub mod stability;

pub use poly::{AffineFn, MultiPoly};
pub use polytope::{pl_evaluate, DelzantPolytope, Halfspace, PlConvexFunction, Polytope, PolytopeError};
pub use ratfn::RationalFn;
pub use ratio::{parse_rational, rat, rat_int, rat_str, to_f64, Rational};
