//! Core algorithms for optimal transport from a planar density to a
//! one-dimensional density via a local differential equation.
//!
//! The source measure lives on a region of the plane, the target on an
//! interval or circle. Instead of discretizing the coupling, the solver
//! marches a scalar potential along the target: for each target coordinate
//! it traces the indifference curve through the source, measures how much
//! mass the curve sweeps per unit of potential curvature, and inverts that
//! relation pointwise. The modules are layered bottom-up:
//!
//! - [`vec2`], [`num`], [`tol`], [`sampling`]: plumbing (planar vectors,
//!   `no_std` math shims, shared tolerances, deterministic sampling).
//! - [`surplus`]: surplus models `s(x, y)` with analytic derivative
//!   bundles, margin scans, and scalar convex transforms.
//! - [`geometry`]: implicit regions, level-set tracing with quadrature,
//!   sub-level restriction, and sub-level area integrals.
//! - [`density`]: labelled source/target density closures.
//! - [`operators`]: the local mass-sweep operator, its analytic
//!   derivatives, pointwise inversion, and ellipticity diagnostics.
//! - [`solver`]: the potential march (initialization, Runge–Kutta sweep,
//!   periodic shooting), conjugate assembly, map reconstruction, and the
//!   statistical / differential verification passes.
//! - [`oracle`]: exact discrete reference solutions (transportation
//!   simplex over atomized instances) with duality-gap scoring.
//! - [`presets`]: ready-made benchmark problems wiring the above together.
//!
//! The crate is `no_std`-compatible (with `alloc`); enable the `libm`
//! feature when building without `std`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod density;
pub mod geometry;
pub mod num;
pub mod operators;
pub mod oracle;
pub mod presets;
pub mod sampling;
mod search;
pub mod solver;
pub mod surplus;
pub mod tol;
pub mod vec2;
