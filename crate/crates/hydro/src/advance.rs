//! Two-stage strong-stability-preserving tree update.

use crate::cfl;
use crate::eos::{apply_floors_and_dual_energy, EosParams};
use crate::error::HydroError;
use crate::sweep::compute_rhs;
use octobox_fmm::CellGravity;
use octobox_grid::state::{ConservedState, NFIELDS};
use octobox_grid::{halo, BoundaryKind, Octree, TreeKey};
use std::collections::BTreeMap;

#[derive(Debug, Default, Clone, Copy)]
pub struct StepStats {
    pub floor_hits: u64,
}

#[inline]
pub fn rk_combine1(u0: &[f64; NFIELDS], rhs: &[f64; NFIELDS], dt: f64) -> [f64; NFIELDS] {
    std::array::from_fn(|i| u0[i] + dt * rhs[i])
}

#[inline]
pub fn rk_combine2(
    u0: &[f64; NFIELDS],
    u1: &[f64; NFIELDS],
    rhs1: &[f64; NFIELDS],
    dt: f64,
) -> [f64; NFIELDS] {
    std::array::from_fn(|i| 0.5 * (u0[i] + u1[i] + dt * rhs1[i]))
}

pub type GravityMap = BTreeMap<TreeKey, Vec<CellGravity>>;

/// Snapshot of a leaf's interior in canonical cell order.
fn snapshot(tree: &Octree, key: &TreeKey) -> Vec<[f64; NFIELDS]> {
    let sub = &tree.get(key).unwrap().sub;
    sub.interior()
        .map(|(i, j, k)| {
            let l = sub.lin(i, j, k);
            std::array::from_fn(|fi| sub.raw_fields()[fi][l])
        })
        .collect()
}

fn write_interior(
    tree: &mut Octree,
    key: &TreeKey,
    values: &[[f64; NFIELDS]],
    eos: &EosParams,
) -> u64 {
    let sub = &mut tree.get_mut(key).unwrap().sub;
    let cells: Vec<_> = sub.interior().collect();
    let mut hits = 0u64;
    for (ci, (i, j, k)) in cells.into_iter().enumerate() {
        let mut state = ConservedState::from_array(&values[ci]);
        hits += apply_floors_and_dual_energy(&mut state, eos) as u64;
        sub.set_cell_state(i, j, k, &state);
    }
    hits
}

/// One SSP-RK2 step over the whole tree, single process. The distributed
/// driver reproduces exactly this sequence with halo fills via messages.
pub fn step_tree(
    tree: &mut Octree,
    dt: f64,
    bc: BoundaryKind,
    gravity: Option<&GravityMap>,
    eos: &EosParams,
) -> Result<StepStats, HydroError> {
    let bound = cfl::cfl_dt(tree, eos, 1.0);
    if dt > bound {
        return Err(HydroError::TimestepTooLarge { dt, bound });
    }
    let leaves = tree.leaf_keys();
    let mut stats = StepStats::default();

    let u0: BTreeMap<TreeKey, Vec<[f64; NFIELDS]>> =
        leaves.iter().map(|k| (*k, snapshot(tree, k))).collect();

    // Stage 1.
    halo::exchange_halos_local(tree, bc)?;
    let mut u1: BTreeMap<TreeKey, Vec<[f64; NFIELDS]>> = BTreeMap::new();
    for key in &leaves {
        let node = tree.get(key).unwrap();
        let rhs = compute_rhs(&node.sub, eos, gravity.and_then(|g| g.get(key)).map(|v| &v[..]))
            .map_err(|e| attach_key(e, *key))?;
        let vals: Vec<[f64; NFIELDS]> = u0[key]
            .iter()
            .zip(&rhs)
            .map(|(a, r)| rk_combine1(a, r, dt))
            .collect();
        u1.insert(*key, vals);
    }
    for key in &leaves {
        stats.floor_hits += write_interior(tree, key, &u1[key], eos);
    }

    // Stage 2.
    halo::exchange_halos_local(tree, bc)?;
    let mut u2: BTreeMap<TreeKey, Vec<[f64; NFIELDS]>> = BTreeMap::new();
    for key in &leaves {
        let node = tree.get(key).unwrap();
        let rhs1 = compute_rhs(&node.sub, eos, gravity.and_then(|g| g.get(key)).map(|v| &v[..]))
            .map_err(|e| attach_key(e, *key))?;
        let cur = snapshot(tree, key);
        let vals: Vec<[f64; NFIELDS]> = u0[key]
            .iter()
            .zip(cur.iter().zip(&rhs1))
            .map(|(a, (b, r))| rk_combine2(a, b, r, dt))
            .collect();
        u2.insert(*key, vals);
    }
    for key in &leaves {
        stats.floor_hits += write_interior(tree, key, &u2[key], eos);
    }

    tree.restrict_interior();
    Ok(stats)
}

fn attach_key(e: HydroError, key: TreeKey) -> HydroError {
    match e {
        HydroError::NonPositivePressure { cell, p, .. } => HydroError::NonPositivePressure {
            key: Some(key),
            cell,
            p,
        },
        HydroError::NonPositiveDensity { cell, rho, .. } => HydroError::NonPositiveDensity {
            key: Some(key),
            cell,
            rho,
        },
        other => other,
    }
}
