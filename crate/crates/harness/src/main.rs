use clap::Parser;
use octobox::{run, RunConfig};
use std::path::PathBuf;

/// Adaptive-octree self-gravitating hydrodynamics on a futurized task
/// runtime over simulated localities.
#[derive(Parser, Debug)]
#[command(name = "octobox", version, about)]
struct Cli {
    /// Scenario: sod, sedov, star_at_rest, star_in_motion, two_body,
    /// random_density.
    #[arg(long)]
    scenario: Option<String>,
    /// Key=value configuration file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Octree depth (root is level 0; a uniform run has 8*2^(levels-1) cells
    /// per edge).
    #[arg(long)]
    levels: Option<u8>,
    /// Gravity opening parameter in (0, 1].
    #[arg(long)]
    theta: Option<f64>,
    /// Simulated localities (isolated state domains).
    #[arg(long)]
    localities: Option<u32>,
    /// Worker threads, split evenly across localities.
    #[arg(long)]
    workers: Option<usize>,
    /// Stream-pool slots per locality.
    #[arg(long)]
    streams: Option<usize>,
    /// Transport backend: twosided | onesided.
    #[arg(long)]
    parcelport: Option<String>,
    /// Steps to run (total, counted from step 0 even across restarts).
    #[arg(long)]
    steps: Option<u64>,
    /// Stop once simulated time reaches this value.
    #[arg(long)]
    t_end: Option<f64>,
    /// One-sided eager/rendezvous payload threshold in bytes.
    #[arg(long)]
    eager_threshold: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for metrics and dumps.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write a checkpoint here when the run finishes.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Resume from a checkpoint (refines if --levels asks for more).
    #[arg(long)]
    restart: Option<PathBuf>,
    #[arg(long)]
    courant: Option<f64>,
    /// Dump fields every N steps (0 = final state only).
    #[arg(long)]
    dump_every: Option<u64>,
    /// Emit stencil_report.csv (gravity scenarios small enough for the
    /// direct-sum oracle).
    #[arg(long)]
    stencil_report: bool,
}

fn main() {
    let cli = Cli::parse();
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read config {}: {e}", path.display());
                std::process::exit(2);
            }
        };
        if let Err(e) = cfg.apply_file(&text) {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
    macro_rules! set {
        ($field:ident) => {
            if let Some(v) = cli.$field {
                cfg.$field = v;
            }
        };
    }
    if let Some(s) = cli.scenario {
        cfg.scenario = s;
    }
    set!(levels);
    set!(theta);
    set!(localities);
    set!(workers);
    set!(streams);
    if let Some(p) = &cli.parcelport {
        if let Err(e) = cfg.apply_kv("parcelport", p) {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
    set!(steps);
    if cli.t_end.is_some() {
        cfg.t_end = cli.t_end;
    }
    set!(eager_threshold);
    set!(seed);
    if let Some(o) = cli.output {
        cfg.output = o;
    }
    if cli.checkpoint.is_some() {
        cfg.checkpoint = cli.checkpoint;
    }
    if cli.restart.is_some() {
        cfg.restart = cli.restart;
    }
    set!(courant);
    set!(dump_every);
    if cli.stencil_report {
        cfg.stencil_report = true;
    }
    if cfg.scenario.is_empty() {
        eprintln!("error: --scenario is required (or set it in the config file)");
        std::process::exit(2);
    }

    match run(&cfg) {
        Ok(out) => {
            println!(
                "{}: {} steps, {} leaves, {:.1} sub-grids/s, offload fraction {:.4}, sim net {:.1} us",
                cfg.scenario,
                out.steps_run,
                out.final_tree.leaf_count(),
                out.subgrids_per_sec,
                out.offload_fraction,
                out.sim_net_us,
            );
            if let Some(last) = out.conservation.last() {
                println!(
                    "  mass {:.12e}  |s| ({:.3e}, {:.3e}, {:.3e})  floors {}",
                    last.mass,
                    last.momentum[0],
                    last.momentum[1],
                    last.momentum[2],
                    last.floor_hits
                );
            }
            println!("  outputs in {}", cfg.output.display());
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
