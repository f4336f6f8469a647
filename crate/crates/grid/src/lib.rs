//! Adaptive octree of fixed-size sub-grids.
//!
//! The domain is a cube split into octree nodes, each carrying an `N x N x N`
//! sub-grid of cells (N = 8 by default) with a ghost layer. Leaves hold the
//! evolved fluid state; interior nodes carry restricted copies so coarse-level
//! consumers (gravity moments, coarse halos) always have data to read.

pub mod checkpoint;
pub mod error;
pub mod halo;
pub mod key;
pub mod refine;
pub mod state;
pub mod subgrid;
pub mod tree;

pub use error::GridError;
pub use halo::{BoundaryKind, HaloPlan, HaloSource, HaloTask};
pub use key::TreeKey;
pub use state::{Field, NFIELDS};
pub use subgrid::SubGrid;
pub use tree::{Domain, Octree, TreeNode};

pub const DEFAULT_N: usize = 8;
/// Three ghost layers: parabolic face reconstruction at a sub-grid boundary
/// face reads three cells past it, and both owners of a shared face must see
/// identical stencils for their fluxes to cancel exactly.
pub const DEFAULT_GHOST: usize = 3;
