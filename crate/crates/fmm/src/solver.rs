//! Reference whole-tree gravity solve. The futurized driver runs the same
//! per-node passes task by task; this path loops over levels directly (with
//! data-parallel nodes) and is what the oracle comparisons run against.

use crate::error::FmmError;
use crate::interact::{same_level_node, slot_of};
use crate::moments::compute_moments;
use crate::propagate::{extract_node, l2l_node};
use crate::stencil::{generate_stencil, root_closure, Stencil};
use crate::types::{CellGravity, FmmConfig, NodeMultipoles, Taylor};
use octobox_grid::{Octree, TreeKey};
use rayon::prelude::*;
use std::collections::BTreeMap;

#[derive(Debug, Default, Clone)]
pub struct KernelCounters {
    /// Per class: same-level passes executed (one per node and class).
    pub launches: [u64; 3],
    /// Per class: pair accumulations performed.
    pub interactions: [u64; 3],
}

#[derive(Debug, Clone)]
pub struct GravitySolution {
    /// Leaf-node fields in canonical cell order.
    pub fields: BTreeMap<TreeKey, Vec<CellGravity>>,
}

/// Check that every missing same-level neighbor is legitimately covered by a
/// coarser leaf at most one level up (for leaves); anything else means the
/// stencil would resolve across an invalid coarse/fine mapping.
fn check_coverage(tree: &Octree, key: TreeKey) -> Result<(), FmmError> {
    let is_leaf = !tree.get(&key).unwrap().refined;
    for dir in TreeKey::directions() {
        if let Some(nk) = key.neighbor(dir) {
            if tree.contains(&nk) {
                continue;
            }
            let mut probe = nk;
            loop {
                match probe.parent() {
                    Some(p) => {
                        if let Some(node) = tree.get(&p) {
                            if node.refined {
                                // Refined ancestor but no node here: a hole.
                                return Err(FmmError::Structural { key, dir });
                            }
                            if is_leaf && key.level - p.level > 1 {
                                return Err(FmmError::Structural { key, dir });
                            }
                            break;
                        }
                        probe = p;
                    }
                    None => return Err(FmmError::Structural { key, dir }),
                }
            }
        }
    }
    Ok(())
}

pub fn solve_gravity(
    tree: &Octree,
    cfg: &FmmConfig,
) -> Result<(GravitySolution, KernelCounters), FmmError> {
    cfg.validate()?;
    let stencil = generate_stencil(cfg)?;
    let closure = root_closure(cfg, tree.n);
    let moments = compute_moments(tree, cfg)?;
    let taylors = run_level_passes(tree, cfg, &stencil, &closure, &moments)?;
    Ok(finish(tree, cfg, &moments, taylors))
}

/// Same-level passes for every level, returning per-node Taylor increments
/// plus counters. Split out so callers can reuse precomputed stencils.
pub fn run_level_passes(
    tree: &Octree,
    cfg: &FmmConfig,
    stencil: &Stencil,
    closure: &Stencil,
    moments: &BTreeMap<TreeKey, NodeMultipoles>,
) -> Result<(BTreeMap<TreeKey, Vec<Taylor>>, KernelCounters), FmmError> {
    let n = tree.n;
    let keys = tree.keys();
    for &key in &keys {
        check_coverage(tree, key)?;
    }
    let results: Vec<(TreeKey, Vec<Taylor>, [u64; 3])> = keys
        .par_iter()
        .map(|&key| {
            let mut nbrs: [Option<&NodeMultipoles>; 27] = [None; 27];
            nbrs[13] = Some(&moments[&key]);
            for dir in TreeKey::directions() {
                if let Some(nk) = key.neighbor(dir) {
                    if let Some(set) = moments.get(&nk) {
                        nbrs[slot_of([dir[0] as i64, dir[1] as i64, dir[2] as i64])] = Some(set);
                    }
                }
            }
            let st = if key.level == 0 { closure } else { stencil };
            let (taylor, counts) = same_level_node(key, n, &nbrs, st, cfg);
            (key, taylor, counts)
        })
        .collect();

    let mut counters = KernelCounters::default();
    let mut increments = BTreeMap::new();
    for (key, taylor, counts) in results {
        for c in 0..3 {
            counters.interactions[c] += counts[c];
            if counts[c] > 0 {
                counters.launches[c] += 1;
            }
        }
        increments.insert(key, taylor);
    }
    Ok((increments, counters))
}

/// Downward pass over precomputed increments, then leaf extraction.
pub fn finish(
    tree: &Octree,
    cfg: &FmmConfig,
    moments: &BTreeMap<TreeKey, NodeMultipoles>,
    passes: (BTreeMap<TreeKey, Vec<Taylor>>, KernelCounters),
) -> (GravitySolution, KernelCounters) {
    let (increments, counters) = passes;
    let mut totals: BTreeMap<TreeKey, Vec<Taylor>> = BTreeMap::new();
    for key in tree.keys() {
        let mut taylor = increments[&key].clone();
        if let Some(parent) = key.parent() {
            let parent_total = totals[&parent].clone();
            l2l_node(
                parent,
                &parent_total,
                &moments[&parent],
                key,
                &moments[&key],
                &mut taylor,
                tree.n,
                cfg,
            );
        }
        totals.insert(key, taylor);
    }
    let mut fields = BTreeMap::new();
    for key in tree.leaf_keys() {
        fields.insert(key, extract_node(&totals[&key]));
    }
    (GravitySolution { fields }, counters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use octobox_grid::tree::Domain;
    use octobox_grid::Field;

    #[test]
    fn one_cell_domain_no_pairs() {
        let mut tree = Octree::build(8, 2, Domain::unit(), 1, |_| false);
        // Zero everywhere except one cell: no pair partner anywhere.
        tree.get_mut(&TreeKey::ROOT)
            .unwrap()
            .sub
            .set(Field::Rho, 4, 4, 4, 1.0);
        let (sol, counters) = solve_gravity(&tree, &FmmConfig::default()).unwrap();
        let field = &sol.fields[&TreeKey::ROOT];
        for c in field {
            assert_eq!(c.phi, 0.0);
            assert_eq!(c.g, [0.0; 3]);
        }
        assert_eq!(counters.interactions.iter().sum::<u64>(), 0);
    }

    #[test]
    fn two_equal_masses_bitwise_opposite() {
        // Masses offset along all three axes so every component is nonzero
        // and the single-evaluation negation is visible bit for bit.
        let mut tree = Octree::build(8, 2, Domain::unit(), 1, |_| false);
        tree.get_mut(&TreeKey::ROOT)
            .unwrap()
            .sub
            .set(Field::Rho, 1, 2, 3, 2.0);
        tree.get_mut(&TreeKey::ROOT)
            .unwrap()
            .sub
            .set(Field::Rho, 6, 5, 7, 2.0);
        let (sol, _) = solve_gravity(&tree, &FmmConfig::default()).unwrap();
        let field = &sol.fields[&TreeKey::ROOT];
        // Interior flat indices, canonical order.
        let ia = (3 * 8 + 2) * 8 + 1;
        let ib = (7 * 8 + 5) * 8 + 6;
        let ga = field[ia].g;
        let gb = field[ib].g;
        for a in 0..3 {
            assert!(ga[a] != 0.0);
            assert_eq!(ga[a].to_bits(), (-gb[a]).to_bits(), "axis {a}");
        }
        // Attraction: the low-corner cell is pulled toward the high corner.
        assert!(ga[0] > 0.0 && gb[0] < 0.0);
    }

    #[test]
    fn structural_error_on_ungraded_tree() {
        // Hand-build a grading violation: a level-3 leaf corner-adjacent to a
        // level-1 leaf. The same-level pass would have no valid coarse/fine
        // mapping for that region.
        let mut tree = Octree::build(8, 2, Domain::unit(), 4, |_| false);
        tree.refine_node(TreeKey::ROOT);
        let c0 = TreeKey::ROOT.child(0);
        tree.refine_node(c0);
        tree.refine_node(c0.child(7));
        let err = solve_gravity(&tree, &FmmConfig::default()).unwrap_err();
        assert!(matches!(err, FmmError::Structural { .. }), "{err:?}");
    }
}
