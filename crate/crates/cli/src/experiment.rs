//! Experiment settings shared by every subcommand, and the flat
//! `key = value` spec file format.

use std::path::Path;

use selsample::heuristics::default_k;
use selsample::sampler::SeedCount;
use selsample::{HeuristicSpec, KappaSchedule, ProcessConfig, TruthSpec};

use crate::CliError;

pub const SPEC_KEYS: &[&str] = &[
    "truth",
    "heuristic",
    "kappa",
    "n",
    "seed",
    "seed-initial",
    "probes",
    "probe-seed",
    "stride",
    "width",
    "height",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub truth: TruthSpec,
    /// `None` picks nmc-knn with the dimension's default K
    pub heuristic: Option<HeuristicSpec>,
    pub kappa: KappaSchedule,
    pub n: usize,
    pub seed: u64,
    pub seed_initial: SeedCount,
    pub probes: usize,
    pub probe_seed: u64,
    pub stride: usize,
    pub width: usize,
    pub height: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            truth: TruthSpec::Disk {
                cx: 0.5,
                cy: 0.5,
                r: 0.3,
            },
            heuristic: None,
            kappa: KappaSchedule::Constant(10),
            n: 1000,
            seed: 0,
            seed_initial: SeedCount::Explicit(20),
            probes: 20_000,
            probe_seed: 1,
            stride: 100,
            width: 256,
            height: 256,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("bad value {value:?} for {key}")))
}

impl ExperimentSpec {
    /// Applies one setting. Keys are the long flag names without dashes.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        let usage = |e: selsample::Error| CliError::Usage(e.to_string());
        match key {
            "truth" => self.truth = value.parse().map_err(usage)?,
            "heuristic" => self.heuristic = Some(value.parse().map_err(usage)?),
            "kappa" => self.kappa = value.parse().map_err(usage)?,
            "n" => self.n = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "seed-initial" => self.seed_initial = value.parse().map_err(usage)?,
            "probes" => self.probes = parse_value(key, value)?,
            "probe-seed" => self.probe_seed = parse_value(key, value)?,
            "stride" => self.stride = parse_value(key, value)?,
            "width" => self.width = parse_value(key, value)?,
            "height" => self.height = parse_value(key, value)?,
            _ => return Err(CliError::Usage(format!("unknown setting {key:?}"))),
        }
        Ok(())
    }

    pub fn from_spec_text(text: &str) -> Result<Self, CliError> {
        let mut spec = Self::default();
        for (key, value) in parse_spec_text(text)? {
            spec.set(&key, &value)?;
        }
        Ok(spec)
    }

    pub fn from_spec_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_spec_text(&text)
    }

    pub fn heuristic(&self) -> HeuristicSpec {
        self.heuristic.unwrap_or(HeuristicSpec::NmcKnn {
            k: default_k(self.truth.dimension()),
        })
    }

    pub fn process_config(&self) -> Result<ProcessConfig, CliError> {
        if self.n == 0 {
            return Err(CliError::Usage("n must be >= 1".into()));
        }
        if self.probes == 0 {
            return Err(CliError::Usage("probes must be >= 1".into()));
        }
        if self.stride == 0 {
            return Err(CliError::Usage("stride must be >= 1".into()));
        }
        let initial = self
            .seed_initial
            .resolve()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(ProcessConfig {
            heuristic: self.heuristic(),
            kappa: self.kappa,
            total: self.n,
            initial,
            seed: self.seed,
        })
    }

    /// Serializes every setting in spec file syntax.
    pub fn to_spec_text(&self) -> String {
        format!(
            "truth = {}\nheuristic = {}\nkappa = {}\nn = {}\nseed = {}\nseed-initial = {}\n\
             probes = {}\nprobe-seed = {}\nstride = {}\nwidth = {}\nheight = {}\n",
            self.truth,
            self.heuristic(),
            self.kappa,
            self.n,
            self.seed,
            self.seed_initial,
            self.probes,
            self.probe_seed,
            self.stride,
            self.width,
            self.height
        )
    }
}

/// Splits a spec file into `(key, value)` pairs. Blank lines and lines
/// starting with `#` are skipped; keys may appear once.
pub fn parse_spec_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("spec line {}: expected key = value", i + 1)))?;
        let key = key.trim();
        if !SPEC_KEYS.contains(&key) {
            return Err(CliError::Usage(format!(
                "spec line {}: unknown key {key:?}",
                i + 1
            )));
        }
        if out.iter().any(|(k, _)| k == key) {
            return Err(CliError::Usage(format!(
                "spec line {}: duplicate key {key:?}",
                i + 1
            )));
        }
        out.push((key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_text_round_trips() {
        let spec = ExperimentSpec::from_spec_text(
            "# fig 2 style\ntruth = checker:3\nheuristic = nmc-knn:6\nkappa = const:10\n\nn = 500\nseed-initial = p:0.05\n",
        )
        .unwrap();
        assert_eq!(spec.truth, TruthSpec::Checker { k: 3 });
        assert_eq!(spec.n, 500);
        assert_eq!(spec.seed_initial, SeedCount::FromP(0.05));
        assert_eq!(
            ExperimentSpec::from_spec_text(&spec.to_spec_text()).unwrap(),
            spec
        );
    }

    #[test]
    fn spec_text_rejects_junk() {
        for text in [
            "n 5",
            "colour = red",
            "n = 1\nn = 2",
            "n = -1",
            "kappa = const:0",
        ] {
            assert!(ExperimentSpec::from_spec_text(text).is_err(), "{text}");
        }
    }

    #[test]
    fn default_heuristic_follows_dimension() {
        let mut spec = ExperimentSpec::default();
        assert_eq!(spec.heuristic(), HeuristicSpec::NmcKnn { k: 6 });
        spec.set("truth", "adv1d").unwrap();
        assert_eq!(spec.heuristic(), HeuristicSpec::NmcKnn { k: 2 });
    }
}
