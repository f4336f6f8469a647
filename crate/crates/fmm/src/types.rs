//! Core value types for the gravity solver.

use crate::error::FmmError;
use crate::index::{ncoef, NCOEF};

/// Solver configuration. The expansion order is 3 by default, giving the
/// 20-coefficient Taylor structure; order 2 is also supported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmmConfig {
    pub theta: f64,
    pub p: usize,
    pub gconst: f64,
}

impl Default for FmmConfig {
    fn default() -> Self {
        FmmConfig {
            theta: 0.5,
            p: 3,
            gconst: 1.0,
        }
    }
}

impl FmmConfig {
    pub fn validate(&self) -> Result<(), FmmError> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(FmmError::BadTheta(self.theta));
        }
        if !(2..=3).contains(&self.p) {
            return Err(FmmError::BadOrder(self.p));
        }
        Ok(())
    }

    pub fn ncoef(&self) -> usize {
        ncoef(self.p)
    }

    /// Opening radius in parent-cell units, clamped so the same-level stencil
    /// never reaches past the adjacent sub-grids that form the halo.
    pub fn radius(&self) -> f64 {
        (1.5 / self.theta).min(4.0)
    }
}

/// Per-cell multipole data: mass, center of mass, and scaled moments
/// M_k = sum_i m_i (x_i - X)^k / k! about the center of mass. Slot 0 repeats
/// the mass; dipole slots are identically zero by the center-of-mass choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMoments {
    pub com: [f64; 3],
    pub mom: [f64; NCOEF],
}

impl CellMoments {
    pub fn point(m: f64, pos: [f64; 3]) -> Self {
        let mut mom = [0.0; NCOEF];
        mom[0] = m;
        CellMoments { com: pos, mom }
    }

    #[inline]
    pub fn mass(&self) -> f64 {
        self.mom[0]
    }
}

/// Taylor coefficients of the potential about the cell's expansion center,
/// with the 1/k! folded in: phi(X + y) = sum_k T[k] y^k.
pub type Taylor = [f64; NCOEF];

/// Gravity output per cell.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CellGravity {
    pub phi: f64,
    pub g: [f64; 3],
}

/// One node's cells in canonical order plus its refinement status.
#[derive(Debug, Clone)]
pub struct NodeMultipoles {
    pub refined: bool,
    pub cells: Vec<CellMoments>,
}

/// Same-level kernel classes, mirroring the refined/non-refined split of the
/// participating nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(usize)]
pub enum KernelClass {
    MonopoleMonopole = 0,
    MultipoleMultipole = 1,
    MultipoleMonopole = 2,
}

impl KernelClass {
    pub const ALL: [KernelClass; 3] = [
        KernelClass::MonopoleMonopole,
        KernelClass::MultipoleMultipole,
        KernelClass::MultipoleMonopole,
    ];

    pub fn of_pair(a_refined: bool, b_refined: bool) -> KernelClass {
        match (a_refined, b_refined) {
            (false, false) => KernelClass::MonopoleMonopole,
            (true, true) => KernelClass::MultipoleMultipole,
            _ => KernelClass::MultipoleMonopole,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelClass::MonopoleMonopole => "monopole_monopole",
            KernelClass::MultipoleMultipole => "multipole_multipole",
            KernelClass::MultipoleMonopole => "multipole_monopole",
        }
    }
}
