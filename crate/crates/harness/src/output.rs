//! Field dumps: one CSV of leaf cells and one legacy-format VTK rectilinear
//! grid resampled at the finest level present (coarse cells injected as
//! constants).

use crate::error::HarnessError;
use octobox_grid::{Field, Octree};
use octobox_hydro::EosParams;
use std::io::Write;
use std::path::Path;

pub fn write_dumps(
    dir: &Path,
    step: u64,
    tree: &Octree,
    eos: &EosParams,
) -> Result<(), HarnessError> {
    write_csv(&dir.join(format!("dump_{step:05}.csv")), tree, eos)?;
    write_vtk(&dir.join(format!("dump_{step:05}.vtk")), tree)?;
    Ok(())
}

fn write_csv(path: &Path, tree: &Octree, eos: &EosParams) -> Result<(), HarnessError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "x,y,z,rho,vx,vy,vz,p,E,tau,frac0,frac1,frac2,frac3,frac4")?;
    for key in tree.leaf_keys() {
        let sub = &tree.get(&key).unwrap().sub;
        for (i, j, k) in sub.interior() {
            let c = sub.cell_state(i, j, k);
            let x = sub.cell_center(i, j, k);
            let v = [c.s[0] / c.rho, c.s[1] / c.rho, c.s[2] / c.rho];
            let p = eos.pressure(c.energy - c.kinetic_energy());
            writeln!(
                f,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                x[0],
                x[1],
                x[2],
                c.rho,
                v[0],
                v[1],
                v[2],
                p,
                c.energy,
                c.tau,
                c.frac[0],
                c.frac[1],
                c.frac[2],
                c.frac[3],
                c.frac[4]
            )?;
        }
    }
    Ok(())
}

fn write_vtk(path: &Path, tree: &Octree) -> Result<(), HarnessError> {
    let max_level = tree.max_level();
    let n = tree.n;
    let cells = n * (1usize << max_level);
    let h = tree.cell_width(max_level);
    let mut rho = vec![0.0f64; cells * cells * cells];
    for key in tree.leaf_keys() {
        let sub = &tree.get(&key).unwrap().sub;
        let scale = 1usize << (max_level - key.level);
        for (i, j, k) in sub.interior() {
            let base = [
                (key.idx[0] as usize * n + i as usize) * scale,
                (key.idx[1] as usize * n + j as usize) * scale,
                (key.idx[2] as usize * n + k as usize) * scale,
            ];
            let v = sub.get(Field::Rho, i, j, k);
            for dz in 0..scale {
                for dy in 0..scale {
                    for dx in 0..scale {
                        let idx = ((base[2] + dz) * cells + (base[1] + dy)) * cells
                            + (base[0] + dx);
                        rho[idx] = v;
                    }
                }
            }
        }
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# vtk DataFile Version 3.0")?;
    writeln!(f, "density resampled at the finest level")?;
    writeln!(f, "ASCII")?;
    writeln!(f, "DATASET RECTILINEAR_GRID")?;
    writeln!(f, "DIMENSIONS {} {} {}", cells + 1, cells + 1, cells + 1)?;
    for axis in ["X", "Y", "Z"] {
        let a = match axis {
            "X" => 0,
            "Y" => 1,
            _ => 2,
        };
        writeln!(f, "{axis}_COORDINATES {} double", cells + 1)?;
        let coords: Vec<String> = (0..=cells)
            .map(|i| format!("{}", tree.domain.corner[a] + i as f64 * h))
            .collect();
        writeln!(f, "{}", coords.join(" "))?;
    }
    writeln!(f, "CELL_DATA {}", cells * cells * cells)?;
    writeln!(f, "SCALARS rho double 1")?;
    writeln!(f, "LOOKUP_TABLE default")?;
    for v in &rho {
        writeln!(f, "{v}")?;
    }
    Ok(())
}
