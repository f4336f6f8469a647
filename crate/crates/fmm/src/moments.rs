//! Bottom-up moment construction (P2M at leaves, M2M upward).

use crate::error::FmmError;
use crate::kernel::m2m_shift;
use crate::types::{CellMoments, FmmConfig, NodeMultipoles};
use octobox_grid::{Field, Octree, SubGrid, TreeKey};
use std::collections::BTreeMap;

/// Leaf cells are point masses at their centers: mass rho * h^3, no higher
/// moments.
pub fn p2m_node(key: TreeKey, sub: &SubGrid) -> Result<NodeMultipoles, FmmError> {
    let vol = sub.cell_volume();
    let mut cells = Vec::with_capacity(sub.n * sub.n * sub.n);
    for (i, j, k) in sub.interior() {
        let rho = sub.get(Field::Rho, i, j, k);
        if rho < 0.0 {
            return Err(FmmError::NegativeDensity(key));
        }
        cells.push(CellMoments::point(rho * vol, sub.cell_center(i, j, k)));
    }
    Ok(NodeMultipoles {
        refined: false,
        cells,
    })
}

/// Aggregate eight child cells into their parent cell: summed mass,
/// mass-weighted center, moments shifted to the new center and added in
/// octant order.
pub fn aggregate_cells(children: &[&CellMoments; 8], cfg: &FmmConfig) -> CellMoments {
    let mut mass = 0.0;
    for c in children {
        mass += c.mass();
    }
    let mut com = [0.0; 3];
    if mass > 0.0 {
        for c in children {
            for a in 0..3 {
                com[a] += c.mass() * c.com[a];
            }
        }
        for v in com.iter_mut() {
            *v /= mass;
        }
    } else {
        // Massless region: geometric mean of child centers keeps it finite.
        for c in children {
            for a in 0..3 {
                com[a] += c.com[a] / 8.0;
            }
        }
    }
    let mut mom = [0.0; crate::index::NCOEF];
    for c in children {
        let t = [c.com[0] - com[0], c.com[1] - com[1], c.com[2] - com[2]];
        let shifted = m2m_shift(&c.mom, t, cfg.p);
        for (dst, s) in mom.iter_mut().zip(shifted) {
            *dst += s;
        }
    }
    CellMoments { com, mom }
}

/// Parent-node moments from its eight child nodes (each child cell block maps
/// onto one octant of the parent sub-grid).
pub fn m2m_node(
    parent: TreeKey,
    n: usize,
    children: &[&NodeMultipoles; 8],
    cfg: &FmmConfig,
) -> NodeMultipoles {
    let mut cells = Vec::with_capacity(n * n * n);
    let half = n / 2;
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let local = [i, j, k];
                let mut slots: [&CellMoments; 8] = [&children[0].cells[0]; 8];
                for b in 0..8usize {
                    let mut fine = [0usize; 3];
                    let mut oct = 0usize;
                    for a in 0..3 {
                        let g = 2 * local[a] + ((b >> a) & 1);
                        oct |= (g / n) << a;
                        fine[a] = g % n;
                    }
                    slots[b] = &children[oct].cells[(fine[2] * n + fine[1]) * n + fine[0]];
                }
                cells.push(aggregate_cells(&slots, cfg));
            }
        }
    }
    let _ = parent;
    let _ = half;
    NodeMultipoles {
        refined: true,
        cells,
    }
}

/// Whole-tree moment pass; the reference path used by tests and diagnostics.
pub fn compute_moments(
    tree: &Octree,
    cfg: &FmmConfig,
) -> Result<BTreeMap<TreeKey, NodeMultipoles>, FmmError> {
    let mut out: BTreeMap<TreeKey, NodeMultipoles> = BTreeMap::new();
    let mut keys = tree.keys();
    keys.sort_by_key(|k| std::cmp::Reverse(k.level));
    for key in keys {
        let node = tree.get(&key).unwrap();
        let set = if !node.refined {
            p2m_node(key, &node.sub)?
        } else {
            let kids = key.children();
            let slots: [&NodeMultipoles; 8] = std::array::from_fn(|o| &out[&kids[o]]);
            m2m_node(key, tree.n, &slots, cfg)
        };
        out.insert(key, set);
    }
    Ok(out)
}

/// Total mass held in a moment set.
pub fn total_mass(set: &NodeMultipoles) -> f64 {
    set.cells.iter().map(|c| c.mass()).sum()
}
