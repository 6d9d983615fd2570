//! Flat `key=value` run configuration.
//!
//! Every key is optional:
//!
//! | key              | default              |
//! |------------------|----------------------|
//! | `sweep`          | `part1`              |
//! | `m`              | `256`                |
//! | `p`              | `0.01`               |
//! | `tau2`           | `0.9`                |
//! | `sigma`          | `1`                  |
//! | `sigma_mode`     | `both`               |
//! | `methods`        | all seven            |
//! | `alpha`          | `0.05`               |
//! | `replicates`     | `10000`              |
//! | `seed`           | `20110101`           |
//! | `k_max_fraction` | `0.3`                |
//! | `k_star_trials`  | `candidates`         |
//!
//! `m` and `p` only matter for `sweep=single`; the part 1 and part 2 grids set their own.

use sparse_oracle::experiment::{KStarTrials, Method, NoiseMode, ScenarioConfig};
use sparse_oracle::Error;
use std::fmt::Write as _;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Sweep {
    Part1,
    Part2,
    Single,
}

impl Sweep {
    pub fn name(self) -> &'static str {
        match self {
            Sweep::Part1 => "part1",
            Sweep::Part2 => "part2",
            Sweep::Single => "single",
        }
    }
}

impl FromStr for Sweep {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "part1" => Ok(Sweep::Part1),
            "part2" => Ok(Sweep::Part2),
            "single" => Ok(Sweep::Single),
            other => Err(Error::Config(format!("sweep must be part1, part2 or single, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeSelection {
    Known,
    Unknown,
    Both,
}

impl ModeSelection {
    pub fn modes(self) -> Vec<NoiseMode> {
        match self {
            ModeSelection::Known => vec![NoiseMode::Known],
            ModeSelection::Unknown => vec![NoiseMode::Unknown],
            ModeSelection::Both => vec![NoiseMode::Known, NoiseMode::Unknown],
        }
    }

    fn name(self) -> &'static str {
        match self {
            ModeSelection::Known => "known",
            ModeSelection::Unknown => "unknown",
            ModeSelection::Both => "both",
        }
    }
}

impl FromStr for ModeSelection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "known" => Ok(ModeSelection::Known),
            "unknown" => Ok(ModeSelection::Unknown),
            "both" => Ok(ModeSelection::Both),
            other => Err(Error::Config(format!("sigma_mode must be known, unknown or both, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sweep: Sweep,
    pub modes: ModeSelection,
    pub scenario: ScenarioConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { sweep: Sweep::Part1, modes: ModeSelection::Both, scenario: ScenarioConfig::default() }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, Error> {
    value.parse().map_err(|_| Error::Config(format!("cannot parse `{value}` for key `{key}`")))
}

pub fn parse_methods(value: &str) -> Result<Vec<Method>, Error> {
    value.split(',').filter(|s| !s.trim().is_empty()).map(Method::from_str).collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got `{line}`", i + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Error> {
        let s = &mut self.scenario;
        match key {
            "sweep" => self.sweep = value.parse()?,
            "sigma_mode" => self.modes = value.parse()?,
            "m" => s.m_total = parse(key, value)?,
            "p" => s.p = parse(key, value)?,
            "tau2" => s.tau2 = parse(key, value)?,
            "sigma" => s.sigma = parse(key, value)?,
            "methods" => s.methods = parse_methods(value)?,
            "alpha" => s.alpha = parse(key, value)?,
            "replicates" => s.replicates = parse(key, value)?,
            "seed" => s.seed = parse(key, value)?,
            "k_max_fraction" => s.k_max_fraction = parse(key, value)?,
            "k_star_trials" => {
                s.k_star_trials = match value {
                    "candidates" => KStarTrials::Candidates,
                    "columns" => KStarTrials::Columns,
                    other => {
                        return Err(Error::Config(format!(
                            "k_star_trials must be candidates or columns, got `{other}`"
                        )))
                    }
                }
            }
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Checks every scenario the sweep will run.
    pub fn validate(&self) -> Result<(), Error> {
        for mode in self.modes.modes() {
            ScenarioConfig { sigma_mode: mode, ..self.scenario.clone() }.validate()?;
        }
        Ok(())
    }

    /// Fully resolved rendering in fixed key order; its hash goes into the manifest.
    pub fn canonical(&self) -> String {
        let s = &self.scenario;
        let methods: Vec<&str> = s.methods.iter().map(|m| m.name()).collect();
        let trials = match s.k_star_trials {
            KStarTrials::Candidates => "candidates",
            KStarTrials::Columns => "columns",
        };
        let mut out = String::new();
        for (k, v) in [
            ("sweep", self.sweep.name().to_string()),
            ("m", s.m_total.to_string()),
            ("p", format!("{:?}", s.p)),
            ("tau2", format!("{:?}", s.tau2)),
            ("sigma", format!("{:?}", s.sigma)),
            ("sigma_mode", self.modes.name().to_string()),
            ("methods", methods.join(",")),
            ("alpha", format!("{:?}", s.alpha)),
            ("replicates", s.replicates.to_string()),
            ("seed", s.seed.to_string()),
            ("k_max_fraction", format!("{:?}", s.k_max_fraction)),
            ("k_star_trials", trials.to_string()),
        ] {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_round_trip() {
        let text = "# quick\nsweep = single\nm=64\np=0.05\nsigma_mode=unknown\nmethods=oracle,BH\nreplicates=12\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.sweep, Sweep::Single);
        assert_eq!(cfg.scenario.methods, vec![Method::Oracle, Method::Bh]);
        assert_eq!(RunConfig::parse(&cfg.canonical()).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let err = RunConfig::parse("mm=4\n").unwrap_err().to_string();
        assert!(err.contains("`mm`"), "{err}");
        assert!(RunConfig::parse("m=abc\n").is_err());
        assert!(RunConfig::parse("just text\n").is_err());
        assert!(RunConfig::parse("methods=oracle,lasso\n").is_err());
        let cfg = RunConfig::parse("m=100\n").unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("power of two"));
    }
}
