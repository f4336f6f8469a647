//! Conservative interpolation between refinement levels.
//!
//! Prolongation is limited-linear per cell: minmod slopes in each direction,
//! children sampled at the symmetric quarter-width offsets. The eight child
//! values of a parent cell average back to the parent value, so refinement
//! conserves every component by construction.

use crate::state::Field;
use crate::subgrid::SubGrid;

#[inline]
pub fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() <= b.abs() {
        a
    } else {
        b
    }
}

/// Limited slope (per cell width) of `f` at interior-or-ghost cell (i,j,k)
/// along `axis`, using one-sided differences where a neighbor is unavailable.
#[inline]
pub fn limited_slope(sub: &SubGrid, f: Field, i: isize, j: isize, k: isize, axis: usize) -> f64 {
    let g = sub.g as isize;
    let hi = sub.n as isize + g - 1;
    let c = [i, j, k];
    let mut lo_ok = true;
    let mut hi_ok = true;
    let mut cl = c;
    let mut ch = c;
    cl[axis] -= 1;
    ch[axis] += 1;
    if cl[axis] < -g {
        lo_ok = false;
    }
    if ch[axis] > hi {
        hi_ok = false;
    }
    let u = sub.get(f, i, j, k);
    match (lo_ok, hi_ok) {
        (true, true) => {
            let dl = u - sub.get(f, cl[0], cl[1], cl[2]);
            let dh = sub.get(f, ch[0], ch[1], ch[2]) - u;
            minmod(dl, dh)
        }
        (true, false) => u - sub.get(f, cl[0], cl[1], cl[2]),
        (false, true) => sub.get(f, ch[0], ch[1], ch[2]) - u,
        (false, false) => 0.0,
    }
}

/// Value of the limited-linear reconstruction of parent cell (i,j,k) at the
/// child sub-cell `sub_pos` (each component 0 or 1).
#[inline]
pub fn prolonged_value(
    parent: &SubGrid,
    f: Field,
    i: isize,
    j: isize,
    k: isize,
    sub_pos: [usize; 3],
) -> f64 {
    let u = parent.get(f, i, j, k);
    let mut v = u;
    for axis in 0..3 {
        let s = limited_slope(parent, f, i, j, k, axis);
        let sign = if sub_pos[axis] == 0 { -0.25 } else { 0.25 };
        v += s * sign;
    }
    v
}

/// Split a parent sub-grid into its eight children (Morton octant order).
/// Slopes at octant borders use whatever parent ghost data is present.
pub fn refine_subgrid(parent: &SubGrid) -> [SubGrid; 8] {
    let n = parent.n;
    assert!(n % 2 == 0, "sub-grid edge must be even to refine");
    let half = (n / 2) as isize;
    std::array::from_fn(|octant| {
        let o = [
            (octant & 1) as isize,
            ((octant >> 1) & 1) as isize,
            ((octant >> 2) & 1) as isize,
        ];
        let h_c = parent.h * 0.5;
        let origin = [
            parent.origin[0] + (o[0] * half) as f64 * parent.h - 0.25 * parent.h,
            parent.origin[1] + (o[1] * half) as f64 * parent.h - 0.25 * parent.h,
            parent.origin[2] + (o[2] * half) as f64 * parent.h - 0.25 * parent.h,
        ];
        let mut child = SubGrid::new(n, parent.g, h_c, origin, parent.level + 1);
        for f in Field::ALL {
            for ck in 0..n as isize {
                for cj in 0..n as isize {
                    for ci in 0..n as isize {
                        let pi = o[0] * half + ci / 2;
                        let pj = o[1] * half + cj / 2;
                        let pk = o[2] * half + ck / 2;
                        let sub_pos = [
                            (ci % 2) as usize,
                            (cj % 2) as usize,
                            (ck % 2) as usize,
                        ];
                        let v = prolonged_value(parent, f, pi, pj, pk, sub_pos);
                        child.set(f, ci, cj, ck, v);
                    }
                }
            }
        }
        child
    })
}

/// Conservative mean of the eight children back onto the parent interior.
pub fn restrict_children(children: &[SubGrid], parent: &mut SubGrid) {
    let n = parent.n;
    let half = (n / 2) as isize;
    for (octant, child) in children.iter().enumerate() {
        let o = [
            (octant & 1) as isize,
            ((octant >> 1) & 1) as isize,
            ((octant >> 2) & 1) as isize,
        ];
        for f in Field::ALL {
            for pk in 0..half {
                for pj in 0..half {
                    for pi in 0..half {
                        let mut acc = 0.0;
                        for dz in 0..2 {
                            for dy in 0..2 {
                                for dx in 0..2 {
                                    acc += child.get(f, 2 * pi + dx, 2 * pj + dy, 2 * pk + dz);
                                }
                            }
                        }
                        parent.set(f, o[0] * half + pi, o[1] * half + pj, o[2] * half + pk, acc / 8.0);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::NFIELDS as NF;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn filled(mut gen: impl FnMut([f64; 3]) -> f64) -> SubGrid {
        let mut sg = SubGrid::new(8, 2, 0.125, [0.0625; 3], 0);
        let g = sg.g as isize;
        let hi = sg.n as isize + g;
        for k in -g..hi {
            for j in -g..hi {
                for i in -g..hi {
                    let x = sg.cell_center(i, j, k);
                    let v = gen(x);
                    for f in Field::ALL {
                        sg.set(f, i, j, k, v);
                    }
                }
            }
        }
        sg
    }

    #[test]
    fn uniform_parent_gives_uniform_children() {
        let parent = filled(|_| 1.0);
        for child in refine_subgrid(&parent) {
            for (i, j, k) in child.interior().collect::<Vec<_>>() {
                assert_eq!(child.get(Field::Rho, i, j, k), 1.0);
            }
        }
    }

    #[test]
    fn refinement_conserves_totals() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let parent = filled(|_| 0.0);
        let mut parent = parent;
        let g = parent.g as isize;
        let hi = parent.n as isize + g;
        for f in Field::ALL {
            for k in -g..hi {
                for j in -g..hi {
                    for i in -g..hi {
                        parent.set(f, i, j, k, rng.gen_range(0.1..2.0));
                    }
                }
            }
        }
        let children = refine_subgrid(&parent);
        let pt = parent.totals();
        let mut ct = [0.0; NF];
        for c in &children {
            let t = c.totals();
            for fi in 0..NF {
                ct[fi] += t[fi];
            }
        }
        for fi in 0..NF {
            assert!(
                (ct[fi] - pt[fi]).abs() <= 1e-13 * pt[fi].abs(),
                "component {fi}: {} vs {}",
                ct[fi],
                pt[fi]
            );
        }
    }

    #[test]
    fn linear_ramp_reproduced_exactly() {
        let parent = filled(|x| 3.0 * x[0] + 0.5);
        for child in refine_subgrid(&parent) {
            for (i, j, k) in child.interior().collect::<Vec<_>>() {
                let x = child.cell_center(i, j, k);
                let expect = 3.0 * x[0] + 0.5;
                assert!(
                    (child.get(Field::Rho, i, j, k) - expect).abs() < 1e-13,
                    "ramp broken at {:?}",
                    x
                );
            }
        }
    }

    #[test]
    fn restrict_after_refine_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut parent = filled(|_| 0.0);
        let g = parent.g as isize;
        let hi = parent.n as isize + g;
        for f in Field::ALL {
            for k in -g..hi {
                for j in -g..hi {
                    for i in -g..hi {
                        parent.set(f, i, j, k, rng.gen_range(0.5..1.5));
                    }
                }
            }
        }
        let children = refine_subgrid(&parent);
        let mut back = parent.clone();
        restrict_children(&children, &mut back);
        for (i, j, k) in parent.interior().collect::<Vec<_>>() {
            for f in Field::ALL {
                let a = parent.get(f, i, j, k);
                let b = back.get(f, i, j, k);
                assert!((a - b).abs() <= 1e-13 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn monotone_data_stays_bounded() {
        // A step: children must not overshoot the parent neighborhood extrema.
        let parent = filled(|x| if x[0] > 0.5 { 2.0 } else { 1.0 });
        for child in refine_subgrid(&parent) {
            for (i, j, k) in child.interior().collect::<Vec<_>>() {
                let v = child.get(Field::Rho, i, j, k);
                assert!((1.0..=2.0).contains(&v), "overshoot: {v}");
            }
        }
    }
}
