//! Layered run configuration: defaults, then a key=value config file, then
//! command-line flags, later layers winning.

use crate::error::HarnessError;
use octobox_parcel::Backend;
use std::path::PathBuf;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: String,
    pub levels: u8,
    pub theta: f64,
    pub localities: u32,
    pub workers: usize,
    pub streams: usize,
    pub parcelport: Backend,
    pub steps: u64,
    pub t_end: Option<f64>,
    pub eager_threshold: usize,
    pub seed: u64,
    pub output: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub restart: Option<PathBuf>,
    pub courant: f64,
    /// Field dump cadence in steps; 0 dumps only the final state.
    pub dump_every: u64,
    /// Emit the gravity diagnostic report when the scenario self-gravitates
    /// and the problem is small enough for the direct-sum oracle.
    pub stencil_report: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: String::new(),
            levels: 2,
            theta: 0.5,
            localities: 1,
            workers: 1,
            streams: 128,
            parcelport: Backend::TwoSided,
            steps: 10,
            t_end: None,
            eager_threshold: 4096,
            seed: 42,
            output: PathBuf::from("out"),
            checkpoint: None,
            restart: None,
            courant: 0.4,
            dump_every: 0,
            stencil_report: false,
        }
    }
}

impl RunConfig {
    /// Apply `key=value` lines (blank lines and '#' comments ignored).
    pub fn apply_file(&mut self, text: &str) -> Result<(), HarnessError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(HarnessError::Config(format!(
                    "line {}: expected key=value, got '{raw}'",
                    lineno + 1
                )));
            };
            self.apply_kv(key.trim(), value.trim())
                .map_err(|e| HarnessError::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn parse<T: std::str::FromStr>(v: &str) -> Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            v.parse().map_err(|e| format!("bad value '{v}': {e}"))
        }
        match key {
            "scenario" => self.scenario = value.to_string(),
            "levels" => self.levels = parse(value)?,
            "theta" => self.theta = parse(value)?,
            "localities" => self.localities = parse(value)?,
            "workers" => self.workers = parse(value)?,
            "streams" => self.streams = parse(value)?,
            "parcelport" => {
                self.parcelport = match value {
                    "twosided" => Backend::TwoSided,
                    "onesided" => Backend::OneSided,
                    other => return Err(format!("bad parcelport '{other}'")),
                }
            }
            "steps" => self.steps = parse(value)?,
            "t_end" => self.t_end = Some(parse(value)?),
            "eager_threshold" => self.eager_threshold = parse(value)?,
            "seed" => self.seed = parse(value)?,
            "output" => self.output = PathBuf::from(value),
            "checkpoint" => self.checkpoint = Some(PathBuf::from(value)),
            "restart" => self.restart = Some(PathBuf::from(value)),
            "courant" => self.courant = parse(value)?,
            "dump_every" => self.dump_every = parse(value)?,
            "stencil_report" => self.stencil_report = parse(value)?,
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    /// Workers assigned to one locality (split evenly, at least one each).
    pub fn workers_per_locality(&self) -> usize {
        (self.workers / self.localities as usize).max(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_layer_overrides_defaults_and_cli_wins() {
        let mut cfg = RunConfig::default();
        cfg.apply_file("scenario=sod\nlevels = 3\n# comment\n\ntheta=0.7\n")
            .unwrap();
        assert_eq!(cfg.scenario, "sod");
        assert_eq!(cfg.levels, 3);
        assert_eq!(cfg.theta, 0.7);
        // CLI layer applied afterwards wins.
        cfg.apply_kv("theta", "0.5").unwrap();
        assert_eq!(cfg.theta, 0.5);
    }

    #[test]
    fn rejects_malformed_lines() {
        let mut cfg = RunConfig::default();
        assert!(cfg.apply_file("nonsense").is_err());
        assert!(cfg.apply_file("levels=abc").is_err());
        assert!(cfg.apply_file("mystery=1").is_err());
    }
}
