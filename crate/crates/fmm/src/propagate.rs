//! Downward pass: parent Taylor sets recentered onto child cells, and field
//! extraction at the leaves.

use crate::kernel::l2l_shift;
use crate::types::{CellGravity, FmmConfig, NodeMultipoles, Taylor};
use octobox_grid::TreeKey;

/// Add recentered parent expansions onto one child node's cells, given the
/// parent expansion centers (centers of mass) and coefficients.
pub fn l2l_apply(
    parent_key: TreeKey,
    parent_coms: &[[f64; 3]],
    parent_taylor: &[Taylor],
    child_key: TreeKey,
    child_moms: &NodeMultipoles,
    child_taylor: &mut [Taylor],
    n: usize,
    cfg: &FmmConfig,
) {
    let ni = n as i64;
    for ck in 0..ni {
        for cj in 0..ni {
            for ci in 0..ni {
                let cell = ((ck * ni + cj) * ni + ci) as usize;
                let gfine = [
                    child_key.idx[0] as i64 * ni + ci,
                    child_key.idx[1] as i64 * ni + cj,
                    child_key.idx[2] as i64 * ni + ck,
                ];
                let mut plocal = [0i64; 3];
                for a in 0..3 {
                    plocal[a] = (gfine[a] >> 1) - parent_key.idx[a] as i64 * ni;
                    debug_assert!((0..ni).contains(&plocal[a]));
                }
                let pcell = ((plocal[2] * ni + plocal[1]) * ni + plocal[0]) as usize;
                let pc = &parent_coms[pcell];
                let cc = &child_moms.cells[cell];
                let t = [cc.com[0] - pc[0], cc.com[1] - pc[1], cc.com[2] - pc[2]];
                let shifted = l2l_shift(&parent_taylor[pcell], t, cfg.p);
                for (dst, s) in child_taylor[cell].iter_mut().zip(shifted) {
                    *dst += s;
                }
            }
        }
    }
}

/// Convenience wrapper taking the parent's full moment set.
pub fn l2l_node(
    parent_key: TreeKey,
    parent_taylor: &[Taylor],
    parent_moms: &NodeMultipoles,
    child_key: TreeKey,
    child_moms: &NodeMultipoles,
    child_taylor: &mut [Taylor],
    n: usize,
    cfg: &FmmConfig,
) {
    let coms: Vec<[f64; 3]> = parent_moms.cells.iter().map(|c| c.com).collect();
    l2l_apply(
        parent_key,
        &coms,
        parent_taylor,
        child_key,
        child_moms,
        child_taylor,
        n,
        cfg,
    );
}

/// Potential and acceleration from a finished Taylor set:
/// phi = T[0], g = -(order-1 coefficients).
pub fn extract_cell(t: &Taylor) -> CellGravity {
    CellGravity {
        phi: t[0],
        g: [-t[1], -t[2], -t[3]],
    }
}

pub fn extract_node(taylor: &[Taylor]) -> Vec<CellGravity> {
    taylor.iter().map(extract_cell).collect()
}
