//! Per-sub-grid right-hand side: dimension-by-dimension flux divergence plus
//! gravity source terms.

use crate::eos::EosParams;
use crate::error::HydroError;
use crate::line::{central_flux, ppm_edges, prim_from_cons, NPRIM};
use octobox_fmm::CellGravity;
use octobox_grid::state::NFIELDS;
use octobox_grid::SubGrid;

struct Scratch {
    lines: Vec<Vec<f64>>,
    edges: Vec<Vec<(f64, f64)>>,
}

impl Scratch {
    fn new(ext: usize) -> Self {
        Scratch {
            lines: (0..NPRIM).map(|_| vec![0.0; ext]).collect(),
            edges: (0..NPRIM).map(|_| Vec::new()).collect(),
        }
    }
}

/// Time derivative of every interior cell: flux divergence over the three
/// axes (in fixed x, y, z order) plus momentum and energy gravity sources.
/// Ghosts must be current; `gravity` is per interior cell in canonical order.
pub fn compute_rhs(
    sub: &SubGrid,
    eos: &EosParams,
    gravity: Option<&[CellGravity]>,
) -> Result<Vec<[f64; NFIELDS]>, HydroError> {
    let n = sub.n;
    let g = sub.g;
    if g < 3 {
        return Err(HydroError::GhostWidth { have: g, need: 3 });
    }
    let ni = n as isize;
    let ext = sub.ext();
    let inv_h = 1.0 / sub.h;
    let mut rhs = vec![[0.0; NFIELDS]; n * n * n];
    let mut scratch = Scratch::new(ext);

    for axis in 0..3 {
        for t2 in 0..ni {
            for t1 in 0..ni {
                // Line coordinates: `axis` runs over the extended range.
                for (pos, s) in (-(g as isize)..ni + g as isize).enumerate() {
                    let (i, j, k) = match axis {
                        0 => (s, t1, t2),
                        1 => (t1, s, t2),
                        _ => (t1, t2, s),
                    };
                    let mut c = [0.0; NFIELDS];
                    let l = sub.lin(i, j, k);
                    for (fi, arr) in sub.raw_fields().iter().enumerate() {
                        c[fi] = arr[l];
                    }
                    if !(c[0] > 0.0) {
                        return Err(HydroError::NonPositiveDensity {
                            key: None,
                            cell: [i, j, k],
                            rho: c[0],
                        });
                    }
                    let w = prim_from_cons(&c, eos);
                    for (fi, line) in scratch.lines.iter_mut().enumerate() {
                        line[pos] = w[fi];
                    }
                }
                for fi in 0..NPRIM {
                    scratch.edges[fi] = ppm_edges(&scratch.lines[fi], n, g);
                }
                // Faces f = 0..=n sit between cells f-1 and f.
                let mut prev_flux: Option<[f64; NFIELDS]> = None;
                for f in 0..=n {
                    let mut left = [0.0; NPRIM];
                    let mut right = [0.0; NPRIM];
                    for fi in 0..NPRIM {
                        left[fi] = scratch.edges[fi][f].1;
                        right[fi] = scratch.edges[fi][f + 1].0;
                    }
                    let flux = central_flux(&left, &right, axis, eos).map_err(|e| match e {
                        HydroError::NonPositivePressure { p, .. } => {
                            HydroError::NonPositivePressure {
                                key: None,
                                cell: face_cell(axis, f as isize, t1, t2),
                                p,
                            }
                        }
                        other => other,
                    })?;
                    if let Some(pf) = prev_flux {
                        let c = f - 1;
                        let cell = cell_index(axis, c as isize, t1, t2, ni);
                        for fi in 0..NFIELDS {
                            rhs[cell][fi] += (pf[fi] - flux[fi]) * inv_h;
                        }
                    }
                    prev_flux = Some(flux);
                }
            }
        }
    }

    if let Some(grav) = gravity {
        for ci in 0..n * n * n {
            let k = ci / (n * n);
            let j = (ci / n) % n;
            let i = ci % n;
            let l = sub.lin(i as isize, j as isize, k as isize);
            let rho = sub.raw_fields()[0][l];
            let s = [
                sub.raw_fields()[1][l],
                sub.raw_fields()[2][l],
                sub.raw_fields()[3][l],
            ];
            let gv = grav[ci].g;
            for a in 0..3 {
                rhs[ci][1 + a] += rho * gv[a];
            }
            rhs[ci][4] += s[0] * gv[0] + s[1] * gv[1] + s[2] * gv[2];
        }
    }
    Ok(rhs)
}

#[inline]
fn cell_index(axis: usize, s: isize, t1: isize, t2: isize, n: isize) -> usize {
    let (i, j, k) = match axis {
        0 => (s, t1, t2),
        1 => (t1, s, t2),
        _ => (t1, t2, s),
    };
    ((k * n + j) * n + i) as usize
}

#[inline]
fn face_cell(axis: usize, f: isize, t1: isize, t2: isize) -> [isize; 3] {
    match axis {
        0 => [f, t1, t2],
        1 => [t1, f, t2],
        _ => [t1, t2, f],
    }
}
