//! Diagnostic report: stencil size, oracle error, conservation residuals,
//! and kernel launch counts, one CSV row per configuration.

use crate::oracle::{direct_sum, leaf_point_masses};
use crate::solver::{solve_gravity, KernelCounters};
use crate::stencil::generate_stencil;
use crate::types::FmmConfig;
use crate::FmmError;
use octobox_grid::Octree;

#[derive(Debug, Clone)]
pub struct FmmReport {
    pub theta: f64,
    pub stencil_size: usize,
    pub near_size: usize,
    /// max_i |g_i - g*_i| / max_i |g*_i|
    pub max_rel_err: f64,
    pub mean_rel_err: f64,
    /// max component of |sum m g| / sum |m||g|
    pub momentum_residual: f64,
    /// max component of |sum X x m g| / sum |X||m||g|
    pub torque_residual: f64,
    pub counters: KernelCounters,
}

impl FmmReport {
    pub const CSV_HEADER: &'static str = "theta,stencil_size,near_size,max_rel_err,mean_rel_err,momentum_residual,torque_residual,monopole_monopole_launches,multipole_multipole_launches,multipole_monopole_launches,monopole_monopole_interactions,multipole_multipole_interactions,multipole_monopole_interactions";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.theta,
            self.stencil_size,
            self.near_size,
            self.max_rel_err,
            self.mean_rel_err,
            self.momentum_residual,
            self.torque_residual,
            self.counters.launches[0],
            self.counters.launches[1],
            self.counters.launches[2],
            self.counters.interactions[0],
            self.counters.interactions[1],
            self.counters.interactions[2],
        )
    }
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Run the solver and the direct oracle on one tree and assemble the report.
pub fn diagnose(tree: &Octree, cfg: &FmmConfig) -> Result<FmmReport, FmmError> {
    let stencil = generate_stencil(cfg)?;
    let (solution, counters) = solve_gravity(tree, cfg)?;
    let points = leaf_point_masses(tree);
    let exact = direct_sum(
        &points.iter().map(|(_, _, p)| *p).collect::<Vec<_>>(),
        cfg.gconst,
    );

    let mut gmax = 0.0f64;
    for e in &exact {
        gmax = gmax.max(norm(e.g));
    }
    let mut max_err = 0.0f64;
    let mut sum_err = 0.0f64;
    let mut mom = [0.0f64; 3];
    let mut mom_norm = 0.0f64;
    let mut torque = [0.0f64; 3];
    let mut torque_norm = 0.0f64;
    for ((key, ci, p), e) in points.iter().zip(&exact) {
        let got = solution.fields[key][*ci];
        let diff = [
            got.g[0] - e.g[0],
            got.g[1] - e.g[1],
            got.g[2] - e.g[2],
        ];
        let err = norm(diff) / gmax.max(f64::MIN_POSITIVE);
        max_err = max_err.max(err);
        sum_err += err;
        let f = [p.m * got.g[0], p.m * got.g[1], p.m * got.g[2]];
        for a in 0..3 {
            mom[a] += f[a];
        }
        mom_norm += p.m * norm(got.g);
        torque[0] += p.pos[1] * f[2] - p.pos[2] * f[1];
        torque[1] += p.pos[2] * f[0] - p.pos[0] * f[2];
        torque[2] += p.pos[0] * f[1] - p.pos[1] * f[0];
        torque_norm += norm(p.pos) * p.m * norm(got.g);
    }
    let stencil_size = stencil.offsets.len();
    let near_size = stencil.offsets.iter().filter(|o| o.near).count();
    let nm = mom_norm.max(f64::MIN_POSITIVE);
    let nt = torque_norm.max(f64::MIN_POSITIVE);
    Ok(FmmReport {
        theta: cfg.theta,
        stencil_size,
        near_size,
        max_rel_err: max_err,
        mean_rel_err: sum_err / exact.len().max(1) as f64,
        momentum_residual: mom.iter().fold(0.0f64, |m, v| m.max(v.abs())) / nm,
        torque_residual: torque.iter().fold(0.0f64, |m, v| m.max(v.abs())) / nt,
        counters,
    })
}
