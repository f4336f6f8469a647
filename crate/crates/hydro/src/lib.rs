//! Finite-volume compressible hydrodynamics on sub-grids: parabolic face
//! reconstruction, a central (local Lax-Friedrichs) flux, a two-stage
//! strong-stability-preserving update, dual-energy bookkeeping, and gravity
//! source coupling.

pub mod advance;
pub mod cfl;
pub mod eos;
pub mod error;
pub mod line;
pub mod sweep;
pub mod tube;

pub use advance::{rk_combine1, rk_combine2, step_tree, StepStats};
pub use cfl::cfl_dt;
pub use eos::EosParams;
pub use error::HydroError;
