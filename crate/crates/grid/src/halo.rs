//! Ghost-layer exchange.
//!
//! Every (leaf, direction) ghost box is filled from exactly one kind of
//! source: a same-level neighbor's interior, a conservative average of finer
//! neighbor data, a limited-linear interpolation of coarser data, or a
//! physical-boundary rule. Extraction reads source interiors only, so all
//! messages of one exchange are independent of arrival order.

use crate::error::GridError;
use crate::key::TreeKey;
use crate::refine::minmod;
use crate::state::Field;
use crate::subgrid::SubGrid;
use crate::tree::Octree;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// Zero-gradient extrapolation.
    Outflow,
    /// Mirror with the normal momentum component flipped.
    Reflective,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HaloSource {
    Boundary,
    SameLevel(TreeKey),
    /// One finer child leaf contributing a restricted piece.
    Fine { child: TreeKey },
    Coarse(TreeKey),
}

#[derive(Debug, Clone)]
pub struct HaloTask {
    pub leaf: TreeKey,
    pub dir: [i8; 3],
    /// Canonical direction index (0..26).
    pub dir_idx: u8,
    /// Piece number within the direction (fine sources may need several).
    pub piece: u8,
    pub source: HaloSource,
    /// Leaf-local ghost ranges `[lo, hi)` per axis filled by this task.
    pub region: [(isize, isize); 3],
}

#[derive(Debug, Clone)]
pub struct HaloPlan {
    pub tasks: Vec<HaloTask>,
}

fn dir_index(dir: [i8; 3]) -> u8 {
    let i = (dir[0] + 1) as u8 + 3 * (dir[1] + 1) as u8 + 9 * (dir[2] + 1) as u8;
    debug_assert!(i != 13);
    i
}

fn ghost_box(n: usize, g: usize, dir: [i8; 3]) -> [(isize, isize); 3] {
    std::array::from_fn(|a| match dir[a] {
        -1 => (-(g as isize), 0),
        0 => (0, n as isize),
        1 => (n as isize, (n + g) as isize),
        _ => unreachable!(),
    })
}

fn region_volume(region: &[(isize, isize); 3]) -> usize {
    region.iter().map(|(lo, hi)| (hi - lo) as usize).product()
}

impl HaloPlan {
    /// Enumerate every task for the current tree shape. Fails if some
    /// neighbor region is covered by no node at all.
    pub fn build(tree: &Octree) -> Result<HaloPlan, GridError> {
        let n = tree.n;
        let g = tree.g;
        let mut tasks = Vec::new();
        for leaf in tree.leaf_keys() {
            for dir in TreeKey::directions() {
                let region = ghost_box(n, g, dir);
                let di = dir_index(dir);
                match leaf.neighbor(dir) {
                    None => tasks.push(HaloTask {
                        leaf,
                        dir,
                        dir_idx: di,
                        piece: 0,
                        source: HaloSource::Boundary,
                        region,
                    }),
                    Some(nk) => {
                        if let Some(node) = tree.get(&nk) {
                            if !node.refined {
                                tasks.push(HaloTask {
                                    leaf,
                                    dir,
                                    dir_idx: di,
                                    piece: 0,
                                    source: HaloSource::SameLevel(nk),
                                    region,
                                });
                            } else {
                                // One piece per overlapping child leaf.
                                for (octant, child) in nk.children().iter().enumerate() {
                                    if let Some(piece) =
                                        fine_piece_region(&leaf, &region, child, n)
                                    {
                                        tasks.push(HaloTask {
                                            leaf,
                                            dir,
                                            dir_idx: di,
                                            piece: octant as u8,
                                            source: HaloSource::Fine { child: *child },
                                            region: piece,
                                        });
                                    }
                                }
                            }
                        } else {
                            // Coarser coverage: walk up to the covering leaf.
                            let mut probe = nk;
                            let cover = loop {
                                match probe.parent() {
                                    Some(p) => {
                                        if tree.contains(&p) {
                                            break p;
                                        }
                                        probe = p;
                                    }
                                    None => {
                                        return Err(GridError::BrokenTopology { key: leaf, dir })
                                    }
                                }
                            };
                            if leaf.level - cover.level != 1 {
                                return Err(GridError::BrokenTopology { key: leaf, dir });
                            }
                            tasks.push(HaloTask {
                                leaf,
                                dir,
                                dir_idx: di,
                                piece: 0,
                                source: HaloSource::Coarse(cover),
                                region,
                            });
                        }
                    }
                }
            }
        }
        Ok(HaloPlan { tasks })
    }
}

/// Intersection of a coarse ghost box with one fine child's coverage,
/// expressed back in leaf-local coarse coordinates.
fn fine_piece_region(
    leaf: &TreeKey,
    region: &[(isize, isize); 3],
    child: &TreeKey,
    n: usize,
) -> Option<[(isize, isize); 3]> {
    let mut piece = [(0isize, 0isize); 3];
    for a in 0..3 {
        let base = leaf.idx[a] as i64 * n as i64;
        // Child coverage in coarse cells.
        let clo = child.idx[a] as i64 * n as i64 / 2;
        let chi = clo + n as i64 / 2;
        let lo = (region[a].0 as i64 + base).max(clo);
        let hi = (region[a].1 as i64 + base).min(chi);
        if lo >= hi {
            return None;
        }
        piece[a] = ((lo - base) as isize, (hi - base) as isize);
    }
    Some(piece)
}

/// Minmod slope clamped to interior data only, so extraction never depends
/// on the source's own (possibly stale) ghosts.
fn slope_interior(sub: &SubGrid, f: Field, c: [isize; 3], axis: usize) -> f64 {
    let n = sub.n as isize;
    let u = sub.get(f, c[0], c[1], c[2]);
    let mut cl = c;
    let mut ch = c;
    cl[axis] -= 1;
    ch[axis] += 1;
    let lo_ok = cl[axis] >= 0;
    let hi_ok = ch[axis] < n;
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

/// Serialize one task's ghost values from the source sub-grid.
/// Layout: component-major, then z, y, x (x fastest).
pub fn extract_block(task: &HaloTask, source: &SubGrid, n: usize) -> Vec<f64> {
    let vol = region_volume(&task.region);
    let mut out = Vec::with_capacity(vol * Field::ALL.len());
    let r = &task.region;
    match &task.source {
        HaloSource::Boundary => panic!("boundary tasks are filled locally"),
        HaloSource::SameLevel(_) => {
            for f in Field::ALL {
                for k in r[2].0..r[2].1 {
                    for j in r[1].0..r[1].1 {
                        for i in r[0].0..r[0].1 {
                            let s = [
                                i - task.dir[0] as isize * n as isize,
                                j - task.dir[1] as isize * n as isize,
                                k - task.dir[2] as isize * n as isize,
                            ];
                            out.push(source.get(f, s[0], s[1], s[2]));
                        }
                    }
                }
            }
        }
        HaloSource::Fine { child } => {
            for f in Field::ALL {
                for k in r[2].0..r[2].1 {
                    for j in r[1].0..r[1].1 {
                        for i in r[0].0..r[0].1 {
                            let local = [i, j, k];
                            let mut acc = 0.0;
                            for b in 0..8usize {
                                let mut fc = [0isize; 3];
                                for a in 0..3 {
                                    let gc = task.leaf.idx[a] as i64 * n as i64
                                        + local[a] as i64;
                                    let gf = 2 * gc + ((b >> a) & 1) as i64;
                                    fc[a] = (gf - child.idx[a] as i64 * n as i64) as isize;
                                }
                                acc += source.get(f, fc[0], fc[1], fc[2]);
                            }
                            out.push(acc / 8.0);
                        }
                    }
                }
            }
        }
        HaloSource::Coarse(cover) => {
            for f in Field::ALL {
                for k in r[2].0..r[2].1 {
                    for j in r[1].0..r[1].1 {
                        for i in r[0].0..r[0].1 {
                            let local = [i, j, k];
                            let mut cc = [0isize; 3];
                            let mut sub_pos = [0usize; 3];
                            for a in 0..3 {
                                let gf = task.leaf.idx[a] as i64 * n as i64 + local[a] as i64;
                                debug_assert!(gf >= 0);
                                cc[a] = ((gf >> 1) - cover.idx[a] as i64 * n as i64) as isize;
                                sub_pos[a] = (gf & 1) as usize;
                            }
                            let mut v = source.get(f, cc[0], cc[1], cc[2]);
                            for a in 0..3 {
                                let s = slope_interior(source, f, cc, a);
                                v += s * if sub_pos[a] == 0 { -0.25 } else { 0.25 };
                            }
                            out.push(v);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Write a received block into the leaf's ghost cells.
pub fn apply_block(leaf: &mut SubGrid, task: &HaloTask, block: &[f64]) {
    let r = &task.region;
    debug_assert_eq!(block.len(), region_volume(r) * Field::ALL.len());
    let mut p = 0;
    for f in Field::ALL {
        for k in r[2].0..r[2].1 {
            for j in r[1].0..r[1].1 {
                for i in r[0].0..r[0].1 {
                    leaf.set(f, i, j, k, block[p]);
                    p += 1;
                }
            }
        }
    }
}

/// Fill a physical-boundary ghost box in place.
pub fn fill_boundary(leaf: &mut SubGrid, dir: [i8; 3], bc: BoundaryKind) {
    let n = leaf.n as isize;
    let g = leaf.g;
    let region = ghost_box(leaf.n, g, dir);
    for k in region[2].0..region[2].1 {
        for j in region[1].0..region[1].1 {
            for i in region[0].0..region[0].1 {
                let ghost = [i, j, k];
                let mut src = ghost;
                let mut flip = [false; 3];
                for a in 0..3 {
                    match (dir[a], bc) {
                        (0, _) => {}
                        (_, BoundaryKind::Outflow) => {
                            src[a] = src[a].clamp(0, n - 1);
                        }
                        (-1, BoundaryKind::Reflective) => {
                            src[a] = -1 - ghost[a];
                            flip[a] = true;
                        }
                        (1, BoundaryKind::Reflective) => {
                            src[a] = 2 * n - 1 - ghost[a];
                            flip[a] = true;
                        }
                        _ => unreachable!(),
                    }
                }
                for f in Field::ALL {
                    let mut v = leaf.get(f, src[0], src[1], src[2]);
                    let is_momentum = matches!(f, Field::Sx | Field::Sy | Field::Sz);
                    if is_momentum {
                        let axis = f as usize - Field::Sx as usize;
                        if flip[axis] {
                            v = -v;
                        }
                    }
                    leaf.set(f, ghost[0], ghost[1], ghost[2], v);
                }
            }
        }
    }
}

/// Single-process halo exchange: extract every message from current
/// interiors, then apply. Matches the distributed path bit for bit.
pub fn exchange_halos_local(tree: &mut Octree, bc: BoundaryKind) -> Result<(), GridError> {
    let plan = HaloPlan::build(tree)?;
    let n = tree.n;
    let mut messages: Vec<(usize, Vec<f64>)> = Vec::new();
    for (ti, task) in plan.tasks.iter().enumerate() {
        let src_key = match &task.source {
            HaloSource::Boundary => None,
            HaloSource::SameLevel(k) => Some(*k),
            HaloSource::Fine { child } => Some(*child),
            HaloSource::Coarse(k) => Some(*k),
        };
        if let Some(sk) = src_key {
            let source = &tree.get(&sk).ok_or(GridError::MissingNode(sk))?.sub;
            messages.push((ti, extract_block(task, source, n)));
        }
    }
    for (ti, block) in messages {
        let task = &plan.tasks[ti];
        let leaf = tree
            .get_mut(&task.leaf)
            .ok_or(GridError::MissingNode(task.leaf))?;
        apply_block(&mut leaf.sub, task, &block);
    }
    for task in &plan.tasks {
        if matches!(task.source, HaloSource::Boundary) {
            let leaf = tree
                .get_mut(&task.leaf)
                .ok_or(GridError::MissingNode(task.leaf))?;
            fill_boundary(&mut leaf.sub, task.dir, bc);
        }
    }
    Ok(())
}
