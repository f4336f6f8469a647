//! Run metrics and their CSV emission.

use crate::config::RunConfig;
use crate::driver::RunOutput;
use crate::error::HarnessError;
use octobox_fmm::FmmReport;
use std::io::Write;

#[derive(Debug, Clone)]
pub struct StepRow {
    pub step: u64,
    pub t: f64,
    pub dt: f64,
    pub wall_s: f64,
    pub sim_net_us: f64,
    pub leaf_updates: u64,
    pub subgrids_per_sec: f64,
}

#[derive(Debug, Clone)]
pub struct ConsRow {
    pub step: u64,
    pub dt: f64,
    pub mass: f64,
    pub momentum: [f64; 3],
    pub energy: f64,
    pub frac_sum: f64,
    pub floor_hits: u64,
}

pub fn write_all(
    cfg: &RunConfig,
    out: &RunOutput,
    level_counts: &[(usize, usize)],
    stencil: Option<&FmmReport>,
) -> Result<(), HarnessError> {
    let dir = &cfg.output;
    std::fs::create_dir_all(dir)?;

    let mut f = std::fs::File::create(dir.join("metrics.csv"))?;
    writeln!(
        f,
        "step,t,dt,wall_s,sim_net_us,leaf_updates,subgrids_per_sec"
    )?;
    for r in &out.metrics {
        writeln!(
            f,
            "{},{},{},{},{},{},{}",
            r.step, r.t, r.dt, r.wall_s, r.sim_net_us, r.leaf_updates, r.subgrids_per_sec
        )?;
    }

    let mut f = std::fs::File::create(dir.join("conservation.csv"))?;
    writeln!(f, "step,dt,mass,sx,sy,sz,energy,frac_sum,floor_hits")?;
    for r in &out.conservation {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{}",
            r.step,
            r.dt,
            r.mass,
            r.momentum[0],
            r.momentum[1],
            r.momentum[2],
            r.energy,
            r.frac_sum,
            r.floor_hits
        )?;
    }

    let mut f = std::fs::File::create(dir.join("parcel_bytes.csv"))?;
    writeln!(
        f,
        "locality,backend,messages,header_bytes,eager_bytes,rma_bytes,matching_bytes,handler_executions,sim_completion_us"
    )?;
    for (loc, c) in &out.parcel_counters {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{}",
            loc,
            cfg.parcelport.name(),
            c.messages,
            c.header_bytes,
            c.eager_bytes,
            c.rma_bytes,
            c.matching_bytes,
            c.handler_executions,
            out.sim_net_us
        )?;
    }

    let mut f = std::fs::File::create(dir.join("stream_counters.csv"))?;
    writeln!(f, "locality,class,offloaded,ran_local,offload_fraction")?;
    for (loc, name, off, local) in &out.stream_counters {
        let frac = if off + local > 0 {
            *off as f64 / (off + local) as f64
        } else {
            1.0
        };
        writeln!(f, "{},{},{},{},{}", loc, name, off, local, frac)?;
    }

    let mut f = std::fs::File::create(dir.join("grid_levels.csv"))?;
    writeln!(f, "level,nodes,leaves")?;
    for (level, (nodes, leaves)) in level_counts.iter().enumerate() {
        writeln!(f, "{},{},{}", level, nodes, leaves)?;
    }

    if let Some(report) = stencil {
        let mut f = std::fs::File::create(dir.join("stencil_report.csv"))?;
        writeln!(f, "{}", FmmReport::CSV_HEADER)?;
        writeln!(f, "{}", report.csv_row())?;
    }
    Ok(())
}
