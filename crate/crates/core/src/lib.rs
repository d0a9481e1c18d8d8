//! Proximal point method for equilibrium problems on Hadamard manifolds.
//!
//! Find `x* in Omega` with `F(x*, y) >= 0` for every `y in Omega`, where
//! `Omega` is a closed geodesically convex subset of `R^n`, `H^n` or a product
//! of those, and `F` vanishes on the diagonal.
//!
//! * [`geometry`]: points, tangent vectors, exp/log, distance, comparison slacks.
//! * [`sets`]: convex sets with membership, projection and distance.
//! * [`bifunctions`]: the bifunction catalog, regularization, property checkers.
//! * [`existence`]: gap function, brute-force oracle, existence assumptions.
//! * [`solver`]: the proximal outer loop, resolvents and diagnostics.
//! * [`vr`]: worthwhile-change payoffs and trap classification.
//! * [`cli`]: config-driven batch runs.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bifunctions;
pub mod cli;
pub mod existence;
pub mod geometry;
pub mod sets;
pub mod solver;
pub mod vr;

pub use bifunctions::{BifunctionHandle, CatalogEntry, PropertyReport};
pub use geometry::{Manifold, ManifoldDescriptor, ManifoldPoint, TangentVector};
pub use sets::{ConvexSet, SetDescriptor};
