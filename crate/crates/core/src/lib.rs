//! Symbolic barycentric coordinates of polyhedra via an augmented double
//! description method, exact LP relaxation hierarchies for disjoint bilinear,
//! affine-convex and facial disjunctive programs, and algebraic optimality
//! certificates.

pub mod certify;
pub mod cli;
pub mod dd_engine;
pub mod exactmath;
pub mod facial;
pub mod lp_exact;
pub mod polyhedra;
pub mod relaxation;
