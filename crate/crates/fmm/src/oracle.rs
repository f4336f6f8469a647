//! Direct-summation verification oracle: exact pairwise Newtonian point-mass
//! sums over every leaf cell. O(N^2); independent of the solver path.

use crate::types::CellGravity;
use octobox_grid::{Field, Octree, TreeKey};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy)]
pub struct PointMass {
    pub m: f64,
    pub pos: [f64; 3],
}

/// Leaf cells as point masses, canonical (key, cell) order.
pub fn leaf_point_masses(tree: &Octree) -> Vec<(TreeKey, usize, PointMass)> {
    let mut out = Vec::new();
    for key in tree.leaf_keys() {
        let sub = &tree.get(&key).unwrap().sub;
        let vol = sub.cell_volume();
        for (ci, (i, j, k)) in sub.interior().enumerate() {
            out.push((
                key,
                ci,
                PointMass {
                    m: sub.get(Field::Rho, i, j, k) * vol,
                    pos: sub.cell_center(i, j, k),
                },
            ));
        }
    }
    out
}

/// Exact potential and acceleration at every point, skipping self-interaction.
/// Inner sums run in fixed index order so the result is deterministic.
pub fn direct_sum(points: &[PointMass], gconst: f64) -> Vec<CellGravity> {
    points
        .par_iter()
        .enumerate()
        .map(|(i, pi)| {
            let mut phi = 0.0;
            let mut g = [0.0; 3];
            for (j, pj) in points.iter().enumerate() {
                if i == j || pj.m == 0.0 {
                    continue;
                }
                let d = [
                    pj.pos[0] - pi.pos[0],
                    pj.pos[1] - pi.pos[1],
                    pj.pos[2] - pi.pos[2],
                ];
                let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                let rinv = 1.0 / r2.sqrt();
                let pot = -gconst * pj.m * rinv;
                phi += pot;
                let s = -pot * rinv * rinv;
                g[0] += s * d[0];
                g[1] += s * d[1];
                g[2] += s * d[2];
            }
            CellGravity { phi, g }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_masses_equal_opposite_axial() {
        let pts = [
            PointMass {
                m: 2.0,
                pos: [1.0, 0.0, 0.0],
            },
            PointMass {
                m: 2.0,
                pos: [-1.0, 0.0, 0.0],
            },
        ];
        let f = direct_sum(&pts, 1.0);
        assert_eq!(f[0].g[0], -f[1].g[0]);
        assert_eq!(f[0].g[1], 0.0);
        assert_eq!(f[0].g[2], 0.0);
        assert!(f[0].g[0] < 0.0, "first mass pulled toward the second");
        assert!((f[0].g[0].abs() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_mass_feels_nothing() {
        let pts = [PointMass {
            m: 5.0,
            pos: [0.3, 0.4, 0.5],
        }];
        let f = direct_sum(&pts, 1.0);
        assert_eq!(f[0].g, [0.0; 3]);
        assert_eq!(f[0].phi, 0.0);
    }

    #[test]
    fn three_in_line_middle_balanced() {
        let pts = [
            PointMass {
                m: 1.0,
                pos: [-1.0, 0.0, 0.0],
            },
            PointMass {
                m: 3.0,
                pos: [0.0, 0.0, 0.0],
            },
            PointMass {
                m: 1.0,
                pos: [1.0, 0.0, 0.0],
            },
        ];
        let f = direct_sum(&pts, 1.0);
        for a in 0..3 {
            assert!(f[1].g[a].abs() < 1e-15);
        }
    }
}
