//! Same-level stencil pass over one node.
//!
//! For each interior cell and stencil offset, the target cell is looked up in
//! the node itself or the 26-neighbor halo; absent neighbors contribute
//! nothing (a coarser level owns those pairs). A pair is accumulated here
//! only if no coarser ancestor pair was already far enough to cover it, and
//! near pairs are evaluated only when a monopole side makes them exact or
//! terminal; near multipole-multipole pairs fall through to the child level.

use crate::kernel::{mono_mono, multi_kernel};
use crate::stencil::Stencil;
use crate::types::{FmmConfig, KernelClass, NodeMultipoles, Taylor};
use octobox_grid::TreeKey;

/// Neighbor slot index for a node offset in {-1,0,1}^3 (13 = the node
/// itself), matching the canonical direction order.
#[inline]
pub fn slot_of(nd: [i64; 3]) -> usize {
    debug_assert!(nd.iter().all(|c| (-1..=1).contains(c)));
    ((nd[0] + 1) + 3 * (nd[1] + 1) + 9 * (nd[2] + 1)) as usize
}

/// True when some coarser ancestor pair already covered these cells: walking
/// up the global cell indices, any level at which the offset reaches the
/// opening radius was computed there as a far pair.
#[inline]
fn covered_coarser(mut gi: [i64; 3], mut gj: [i64; 3], level: u8, radius_sq: f64) -> bool {
    for _ in 0..level {
        for a in 0..3 {
            gi[a] >>= 1;
            gj[a] >>= 1;
        }
        let mut d2 = 0i64;
        for a in 0..3 {
            let d = gj[a] - gi[a];
            d2 += d * d;
        }
        if (d2 as f64) >= radius_sq {
            return true;
        }
    }
    false
}

pub struct ClassPassResult {
    pub taylor: Vec<Taylor>,
    pub interactions: u64,
}

/// Run one kernel class for one node. `nbrs[13]` must be the node's own
/// moment set; other slots follow the canonical direction order and may be
/// absent across refinement jumps.
pub fn same_level_class_pass(
    key: TreeKey,
    n: usize,
    nbrs: &[Option<&NodeMultipoles>; 27],
    stencil: &Stencil,
    class: KernelClass,
    cfg: &FmmConfig,
) -> ClassPassResult {
    let own = nbrs[13].expect("own moments must be present");
    let ncells = n * n * n;
    let mut taylor = vec![[0.0; crate::index::NCOEF]; ncells];
    let mut interactions = 0u64;
    let ni = n as i64;
    let base = [
        key.idx[0] as i64 * ni,
        key.idx[1] as i64 * ni,
        key.idx[2] as i64 * ni,
    ];
    let level = key.level;
    let rsq = stencil.radius_sq;

    for ck in 0..ni {
        for cj in 0..ni {
            for ci in 0..ni {
                let cell = ((ck * ni + cj) * ni + ci) as usize;
                let gi = [base[0] + ci, base[1] + cj, base[2] + ck];
                let own_cell = &own.cells[cell];
                if own_cell.mass() == 0.0 {
                    continue;
                }
                for off in &stencil.offsets {
                    let gj = [
                        gi[0] + off.d[0] as i64,
                        gi[1] + off.d[1] as i64,
                        gi[2] + off.d[2] as i64,
                    ];
                    // Which node holds the target cell.
                    let mut nd = [0i64; 3];
                    let mut local = [0usize; 3];
                    let mut in_range = true;
                    for a in 0..3 {
                        let node_idx = gj[a].div_euclid(ni);
                        nd[a] = node_idx - key.idx[a] as i64;
                        if nd[a] < -1 || nd[a] > 1 {
                            in_range = false;
                            break;
                        }
                        local[a] = gj[a].rem_euclid(ni) as usize;
                    }
                    if !in_range {
                        continue;
                    }
                    let Some(nbr) = nbrs[slot_of(nd)] else {
                        continue;
                    };
                    if KernelClass::of_pair(own.refined, nbr.refined) != class {
                        continue;
                    }
                    // Near multipole pairs belong to the child level.
                    if off.near && class == KernelClass::MultipoleMultipole {
                        continue;
                    }
                    if covered_coarser(gi, gj, level, rsq) {
                        continue;
                    }
                    let other = &nbr.cells[(local[2] * n + local[1]) * n + local[0]];
                    if other.mass() == 0.0 {
                        continue;
                    }

                    // Canonical orientation: the lexicographically lower
                    // global index is P, so both owners round identically.
                    let own_is_p = gi < gj;
                    let (p, q) = if own_is_p {
                        (own_cell, other)
                    } else {
                        (other, own_cell)
                    };
                    let terms = if class == KernelClass::MonopoleMonopole {
                        mono_mono(p, q, cfg.gconst)
                    } else {
                        multi_kernel(p, q, cfg.p, cfg.gconst)
                    };
                    let t = &mut taylor[cell];
                    // g = -T1, so the receiving side's T1 accumulates -F/m.
                    if own_is_p {
                        t[0] += terms.l0_p;
                        let minv = 1.0 / p.mass();
                        t[1] -= terms.force_p[0] * minv;
                        t[2] -= terms.force_p[1] * minv;
                        t[3] -= terms.force_p[2] * minv;
                        if own.refined {
                            for (slot, h) in terms.hess_p.iter().enumerate() {
                                t[4 + slot] += h;
                            }
                        }
                    } else {
                        t[0] += terms.l0_q;
                        let minv = 1.0 / q.mass();
                        t[1] += terms.force_p[0] * minv;
                        t[2] += terms.force_p[1] * minv;
                        t[3] += terms.force_p[2] * minv;
                        if own.refined {
                            for (slot, h) in terms.hess_q.iter().enumerate() {
                                t[4 + slot] += h;
                            }
                        }
                    }
                    interactions += 1;
                }
            }
        }
    }
    ClassPassResult {
        taylor,
        interactions,
    }
}

/// All three class passes merged in class order; what both the reference
/// solver and the futurized driver execute per node.
pub fn same_level_node(
    key: TreeKey,
    n: usize,
    nbrs: &[Option<&NodeMultipoles>; 27],
    stencil: &Stencil,
    cfg: &FmmConfig,
) -> (Vec<Taylor>, [u64; 3]) {
    let mut merged = vec![[0.0; crate::index::NCOEF]; n * n * n];
    let mut counts = [0u64; 3];
    for class in KernelClass::ALL {
        let res = same_level_class_pass(key, n, nbrs, stencil, class, cfg);
        counts[class as usize] = res.interactions;
        for (m, t) in merged.iter_mut().zip(res.taylor) {
            for (a, b) in m.iter_mut().zip(t) {
                *a += b;
            }
        }
    }
    (merged, counts)
}
