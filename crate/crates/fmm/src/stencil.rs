//! The same-level interaction stencil.
//!
//! An offset is in the stencil when the parent level could not have computed
//! that pair: some parity-consistent placement of the two cells within their
//! parents yields a parent-level offset closer than the opening radius R.
//! With consistent placements the candidate parent offsets per axis are
//! floor(d/2) and floor((d+1)/2), so the closest has |p| = |d|/2 (truncated),
//! and membership reduces to sum((|d_a|/2)^2) < R^2.
//!
//! Offsets closer than R carry the near marker: at that level they are only
//! evaluated by kernels with a monopole side; multipole-multipole pairs that
//! close are deferred to the child level, whose offsets are in the stencil
//! again by construction.

use crate::error::FmmError;
use crate::types::FmmConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StencilOffset {
    pub d: [i8; 3],
    pub near: bool,
}

#[derive(Debug, Clone)]
pub struct Stencil {
    pub offsets: Vec<StencilOffset>,
    pub radius: f64,
    pub radius_sq: f64,
}

/// Closest parent-level squared distance over parity-consistent placements.
#[inline]
pub fn min_parent_dist_sq(d: [i8; 3]) -> i64 {
    let mut s = 0i64;
    for &c in &d {
        let q = (c.unsigned_abs() as i64) / 2;
        s += q * q;
    }
    s
}

/// True when every parity-consistent placement keeps the parent pair at
/// least R apart, i.e. the parent level already covered the pair.
#[inline]
pub fn well_separated_at_parent(d: [i8; 3], radius_sq: f64) -> bool {
    (min_parent_dist_sq(d) as f64) >= radius_sq
}

#[inline]
fn norm_sq(d: [i8; 3]) -> i64 {
    d.iter().map(|&c| (c as i64) * (c as i64)).sum()
}

/// Same-level stencil for interior levels.
pub fn generate_stencil(cfg: &FmmConfig) -> Result<Stencil, FmmError> {
    cfg.validate()?;
    let radius = cfg.radius();
    let radius_sq = radius * radius;
    let mut offsets = Vec::new();
    let reach = (2.0 * radius) as i8 + 1;
    for dz in -reach..=reach {
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let d = [dx, dy, dz];
                if d == [0, 0, 0] {
                    continue;
                }
                if !well_separated_at_parent(d, radius_sq) {
                    let near = (norm_sq(d) as f64) < radius_sq;
                    offsets.push(StencilOffset { d, near });
                }
            }
        }
    }
    offsets.sort_by_key(|o| (o.d[2], o.d[1], o.d[0]));
    Ok(Stencil {
        offsets,
        radius,
        radius_sq,
    })
}

/// Root-level closure: every nonzero offset inside one sub-grid, so pairs no
/// coarser level exists for are still covered exactly once.
pub fn root_closure(cfg: &FmmConfig, n: usize) -> Stencil {
    let radius = cfg.radius();
    let radius_sq = radius * radius;
    let reach = (n - 1) as i8;
    let mut offsets = Vec::new();
    for dz in -reach..=reach {
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                let d = [dx, dy, dz];
                if d == [0, 0, 0] {
                    continue;
                }
                let near = (norm_sq(d) as f64) < radius_sq;
                offsets.push(StencilOffset { d, near });
            }
        }
    }
    offsets.sort_by_key(|o| (o.d[2], o.d[1], o.d[0]));
    Stencil {
        offsets,
        radius,
        radius_sq,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(theta: f64) -> FmmConfig {
        FmmConfig {
            theta,
            ..FmmConfig::default()
        }
    }

    #[test]
    fn reference_count_at_half() {
        let s = generate_stencil(&cfg(0.5)).unwrap();
        assert_eq!(s.offsets.len(), 1074);
    }

    #[test]
    fn adjacent_offset_always_included() {
        for theta in [0.35, 0.5, 0.7, 1.0] {
            let s = generate_stencil(&cfg(theta)).unwrap();
            assert!(s.offsets.iter().any(|o| o.d == [1, 0, 0]));
        }
    }

    #[test]
    fn point_symmetric() {
        for theta in [0.35, 0.5, 0.7] {
            let s = generate_stencil(&cfg(theta)).unwrap();
            let set: std::collections::HashSet<[i8; 3]> =
                s.offsets.iter().map(|o| o.d).collect();
            for o in &s.offsets {
                assert!(set.contains(&[-o.d[0], -o.d[1], -o.d[2]]));
            }
        }
    }

    #[test]
    fn size_monotone_in_theta() {
        let a = generate_stencil(&cfg(0.7)).unwrap().offsets.len();
        let b = generate_stencil(&cfg(0.5)).unwrap().offsets.len();
        let c = generate_stencil(&cfg(0.35)).unwrap().offsets.len();
        assert!(a < b && b < c, "{a} {b} {c}");
    }

    #[test]
    fn fits_one_node_halo() {
        for theta in [0.35, 0.5, 0.7, 1.0] {
            let s = generate_stencil(&cfg(theta)).unwrap();
            let reach = s
                .offsets
                .iter()
                .map(|o| o.d.iter().map(|c| c.abs()).max().unwrap())
                .max()
                .unwrap();
            assert!(reach <= 7, "theta {theta}: reach {reach}");
        }
    }

    #[test]
    fn near_children_stay_in_stencil() {
        // Deferring a near multipole pair is only sound if all of its child
        // offsets are in the stencil again.
        let s = generate_stencil(&cfg(0.5)).unwrap();
        let set: std::collections::HashSet<[i8; 3]> = s.offsets.iter().map(|o| o.d).collect();
        for o in &s.offsets {
            if !o.near {
                continue;
            }
            for bx in -1i8..=1 {
                for by in -1i8..=1 {
                    for bz in -1i8..=1 {
                        let child = [
                            2 * o.d[0] + bx,
                            2 * o.d[1] + by,
                            2 * o.d[2] + bz,
                        ];
                        if child != [0, 0, 0] {
                            assert!(set.contains(&child), "{:?} -> {:?}", o.d, child);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_theta() {
        assert!(generate_stencil(&cfg(0.0)).is_err());
        assert!(generate_stencil(&cfg(1.5)).is_err());
    }
}
