//! Cell-based fast-multipole gravity.
//!
//! Three passes over the octree: bottom-up moment aggregation, a same-level
//! stencil pass at every level, and a top-down shift of the accumulated
//! Taylor expansions. Every unordered cell pair is accumulated exactly once,
//! from a single symmetric kernel evaluation whose force term acts along the
//! line joining the two expansion centers, which is what makes both linear
//! and angular momentum cancel to rounding.

pub mod derivs;
pub mod error;
pub mod index;
pub mod interact;
pub mod kernel;
pub mod moments;
pub mod oracle;
pub mod propagate;
pub mod report;
pub mod solver;
pub mod stencil;
pub mod types;

pub use error::FmmError;
pub use oracle::{direct_sum, leaf_point_masses, PointMass};
pub use report::FmmReport;
pub use solver::{solve_gravity, GravitySolution, KernelCounters};
pub use stencil::{generate_stencil, Stencil, StencilOffset};
pub use types::{CellGravity, CellMoments, FmmConfig, KernelClass, NodeMultipoles, Taylor};
