//! Explicit-scheme timestep bound.

use crate::eos::EosParams;
use crate::line::prim_from_cons;
use octobox_grid::state::NFIELDS;
use octobox_grid::{Octree, SubGrid};

/// Largest per-direction signal speed over a sub-grid's interior.
pub fn max_signal(sub: &SubGrid, eos: &EosParams) -> f64 {
    let mut speed = 0.0f64;
    for (i, j, k) in sub.interior() {
        let l = sub.lin(i, j, k);
        let mut c = [0.0; NFIELDS];
        for (fi, arr) in sub.raw_fields().iter().enumerate() {
            c[fi] = arr[l];
        }
        let w = prim_from_cons(&c, eos);
        let vmax = w[1].abs().max(w[2].abs()).max(w[3].abs());
        speed = speed.max(vmax + eos.sound_speed(w[0], w[4]));
    }
    speed
}

/// dt = C * min over cells of h / (|v| + c_s). Leaves only; keys are walked
/// in canonical order so the reduction is deterministic.
pub fn cfl_dt(tree: &Octree, eos: &EosParams, courant: f64) -> f64 {
    let mut dt = f64::INFINITY;
    for key in tree.leaf_keys() {
        let sub = &tree.get(&key).unwrap().sub;
        let s = max_signal(sub, eos);
        if s > 0.0 {
            dt = dt.min(sub.h / s);
        }
    }
    courant * dt
}

#[cfg(test)]
mod tests {
    use super::*;
    use octobox_grid::tree::Domain;
    use octobox_grid::Field;

    fn uniform_tree(levels: u8, rho: f64, p: f64, eos: &EosParams) -> Octree {
        let mut tree = Octree::build(8, 3, Domain::unit(), levels, |k| k.level + 1 < levels);
        let e = eos.internal_from_pressure(p);
        for key in tree.leaf_keys() {
            let node = tree.get_mut(&key).unwrap();
            let cells: Vec<_> = node.sub.interior().collect();
            for (i, j, k) in cells {
                node.sub.set(Field::Rho, i, j, k, rho);
                node.sub.set(Field::Energy, i, j, k, e);
                node.sub.set(Field::Tau, i, j, k, eos.tau_from_internal(e));
            }
        }
        tree
    }

    #[test]
    fn formula_for_unit_sound_speed() {
        // rho and p chosen so c_s = 1; a single root sub-grid of width 8h.
        let eos = EosParams::default();
        let p = 1.0 / eos.gamma;
        let tree = uniform_tree(1, 1.0, p, &eos);
        let h = tree.cell_width(0);
        let dt = cfl_dt(&tree, &eos, 0.4);
        assert!((dt - 0.4 * h).abs() < 1e-14);
    }

    #[test]
    fn doubling_resolution_halves_dt() {
        let eos = EosParams::default();
        let p = 1.0 / eos.gamma;
        let a = cfl_dt(&uniform_tree(1, 1.0, p, &eos), &eos, 0.4);
        let b = cfl_dt(&uniform_tree(2, 1.0, p, &eos), &eos, 0.4);
        assert!((a - 2.0 * b).abs() < 1e-14);
    }

    #[test]
    fn floored_vacuum_gives_finite_dt() {
        let eos = EosParams::default();
        let tree = uniform_tree(1, crate::eos::RHO_FLOOR, crate::eos::PRESSURE_FLOOR, &eos);
        let dt = cfl_dt(&tree, &eos, 0.4);
        assert!(dt.is_finite() && dt > 0.0);
    }
}
