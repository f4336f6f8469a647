//! One-dimensional column runner built on the same line kernels as the 3D
//! sweeps; used for shock-tube convergence studies and advection checks.

use crate::eos::{apply_floors_and_dual_energy, EosParams};
use crate::error::HydroError;
use crate::line::{central_flux, ppm_edges, prim_from_cons, NPRIM};
use octobox_grid::state::{ConservedState, NFIELDS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TubeBc {
    Outflow,
    Periodic,
}

#[derive(Debug, Clone)]
pub struct Tube {
    pub n: usize,
    pub g: usize,
    pub h: f64,
    pub x0: f64,
    pub bc: TubeBc,
    pub eos: EosParams,
    /// Interior cells only.
    pub cells: Vec<[f64; NFIELDS]>,
    pub t: f64,
}

impl Tube {
    pub fn new(n: usize, len: f64, x0: f64, bc: TubeBc, eos: EosParams) -> Self {
        Tube {
            n,
            g: 3,
            h: len / n as f64,
            x0,
            bc,
            eos,
            cells: vec![[0.0; NFIELDS]; n],
            t: 0.0,
        }
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + 0.5) * self.h
    }

    pub fn init(&mut self, mut f: impl FnMut(f64) -> ConservedState) {
        for i in 0..self.n {
            let x = self.cell_center(i);
            self.cells[i] = f(x).to_array();
        }
    }

    fn padded(&self) -> Vec<[f64; NFIELDS]> {
        let n = self.n;
        let g = self.g;
        let mut out = vec![[0.0; NFIELDS]; n + 2 * g];
        out[g..g + n].copy_from_slice(&self.cells);
        for k in 0..g {
            match self.bc {
                TubeBc::Outflow => {
                    out[g - 1 - k] = self.cells[0];
                    out[g + n + k] = self.cells[n - 1];
                }
                TubeBc::Periodic => {
                    out[g - 1 - k] = self.cells[n - 1 - k];
                    out[g + n + k] = self.cells[k];
                }
            }
        }
        out
    }

    fn rhs(&self, interior: &[[f64; NFIELDS]]) -> Result<Vec<[f64; NFIELDS]>, HydroError> {
        let n = self.n;
        let g = self.g;
        let mut work = self.clone();
        work.cells = interior.to_vec();
        let padded = work.padded();
        let mut lines: Vec<Vec<f64>> = vec![vec![0.0; n + 2 * g]; NPRIM];
        for (pos, c) in padded.iter().enumerate() {
            let w = prim_from_cons(c, &self.eos);
            for fi in 0..NPRIM {
                lines[fi][pos] = w[fi];
            }
        }
        let edges: Vec<Vec<(f64, f64)>> = lines.iter().map(|l| ppm_edges(l, n, g)).collect();
        let mut rhs = vec![[0.0; NFIELDS]; n];
        let inv_h = 1.0 / self.h;
        let mut prev: Option<[f64; NFIELDS]> = None;
        for f in 0..=n {
            let mut left = [0.0; NPRIM];
            let mut right = [0.0; NPRIM];
            for fi in 0..NPRIM {
                left[fi] = edges[fi][f].1;
                right[fi] = edges[fi][f + 1].0;
            }
            let flux = central_flux(&left, &right, 0, &self.eos)?;
            if let Some(pf) = prev {
                for fi in 0..NFIELDS {
                    rhs[f - 1][fi] += (pf[fi] - flux[fi]) * inv_h;
                }
            }
            prev = Some(flux);
        }
        Ok(rhs)
    }

    pub fn cfl_dt(&self, courant: f64) -> f64 {
        let mut speed = 0.0f64;
        for c in &self.cells {
            let w = prim_from_cons(c, &self.eos);
            speed = speed.max(w[1].abs() + self.eos.sound_speed(w[0], w[4]));
        }
        courant * self.h / speed
    }

    pub fn step(&mut self, dt: f64) -> Result<(), HydroError> {
        let u0 = self.cells.clone();
        let rhs0 = self.rhs(&u0)?;
        let mut u1: Vec<[f64; NFIELDS]> = u0
            .iter()
            .zip(&rhs0)
            .map(|(a, r)| crate::advance::rk_combine1(a, r, dt))
            .collect();
        for c in u1.iter_mut() {
            let mut s = ConservedState::from_array(c);
            apply_floors_and_dual_energy(&mut s, &self.eos);
            *c = s.to_array();
        }
        let rhs1 = self.rhs(&u1)?;
        let mut u2: Vec<[f64; NFIELDS]> = u0
            .iter()
            .zip(u1.iter().zip(&rhs1))
            .map(|(a, (b, r))| crate::advance::rk_combine2(a, b, r, dt))
            .collect();
        for c in u2.iter_mut() {
            let mut s = ConservedState::from_array(c);
            apply_floors_and_dual_energy(&mut s, &self.eos);
            *c = s.to_array();
        }
        self.cells = u2;
        self.t += dt;
        Ok(())
    }

    /// Advance to `t_end` with CFL-limited steps.
    pub fn run_to(&mut self, t_end: f64, courant: f64) -> Result<usize, HydroError> {
        let mut steps = 0;
        while self.t < t_end {
            let dt = self.cfl_dt(courant).min(t_end - self.t);
            self.step(dt)?;
            steps += 1;
        }
        Ok(steps)
    }

    pub fn total_mass(&self) -> f64 {
        self.cells.iter().map(|c| c[0]).sum::<f64>() * self.h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(rho: f64, v: f64, p: f64, eos: &EosParams) -> ConservedState {
        let u = eos.internal_from_pressure(p);
        ConservedState {
            rho,
            s: [rho * v, 0.0, 0.0],
            energy: u + 0.5 * rho * v * v,
            tau: eos.tau_from_internal(u),
            frac: [rho / 5.0; 5],
        }
    }

    #[test]
    fn advected_blob_translates_and_conserves_mass() {
        let eos = EosParams::default();
        let mut tube = Tube::new(64, 1.0, 0.0, TubeBc::Periodic, eos);
        tube.init(|x| {
            let bump = 1.0 + 0.5 * (-((x - 0.5) / 0.1).powi(2)).exp();
            state(bump, 1.0, 1.0, &eos)
        });
        let m0 = tube.total_mass();
        let peak0 = tube
            .cells
            .iter()
            .enumerate()
            .max_by(|a, b| a.1[0].partial_cmp(&b.1[0]).unwrap())
            .unwrap()
            .0;
        // Quarter period of advection.
        tube.run_to(0.25, 0.4).unwrap();
        let m1 = tube.total_mass();
        assert!((m1 - m0).abs() <= 1e-13 * m0, "mass drifted: {m0} -> {m1}");
        let peak1 = tube
            .cells
            .iter()
            .enumerate()
            .max_by(|a, b| a.1[0].partial_cmp(&b.1[0]).unwrap())
            .unwrap()
            .0;
        let expect = (peak0 + 16) % 64;
        assert!(
            (peak1 as i64 - expect as i64).abs() <= 2,
            "peak {peak0} -> {peak1}, expected near {expect}"
        );
    }

    #[test]
    fn uniform_moving_state_unchanged() {
        let eos = EosParams::default();
        let mut tube = Tube::new(32, 1.0, 0.0, TubeBc::Periodic, eos);
        tube.init(|_| state(1.3, 0.7, 2.0, &eos));
        tube.run_to(0.1, 0.4).unwrap();
        for c in &tube.cells {
            assert!((c[0] - 1.3).abs() < 1e-13);
            assert!((c[1] - 1.3 * 0.7).abs() < 1e-13);
        }
    }
}
