use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algos::{preset, AlgorithmKind, AlgorithmParams, PresetSource, TestSystem};
use crate::comms::ChannelModel;
use crate::error::HarnessError;

/// One algorithm of the sweep: a published preset or explicit constants,
/// with optional overrides applied on top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub kind: AlgorithmKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<PresetSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplier_init: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_limit: Option<f64>,
}

impl AlgorithmSpec {
    pub fn preset(kind: AlgorithmKind, source: PresetSource) -> Self {
        AlgorithmSpec {
            kind,
            preset: Some(source),
            alpha: None,
            beta: None,
            gamma: None,
            multiplier_init: None,
            tolerance: None,
            max_iterations: None,
            beta_limit: None,
        }
    }

    pub fn resolve(&self, system: Option<TestSystem>) -> Result<AlgorithmParams, HarnessError> {
        let mut p = match (self.preset, self.alpha) {
            (Some(src), _) => {
                let sys = system.ok_or_else(|| {
                    HarnessError::Config(format!("{} preset needs `system` to be set", self.kind))
                })?;
                let mut p = preset(self.kind, sys, src);
                if let Some(a) = self.alpha {
                    p = AlgorithmParams::for_kind(self.kind, a);
                }
                p
            }
            (None, Some(a)) => AlgorithmParams::for_kind(self.kind, a),
            (None, None) => {
                return Err(HarnessError::Config(format!("{} needs either `preset` or `alpha`", self.kind)))
            }
        };
        if let Some(v) = self.beta {
            p.beta = v;
        }
        if let Some(v) = self.gamma {
            p.gamma = v;
        }
        if let Some(v) = self.multiplier_init {
            p.multiplier_init = v;
        }
        if let Some(v) = self.tolerance {
            p.tolerance = v;
        }
        if let Some(v) = self.max_iterations {
            p.max_iterations = v;
        }
        if let Some(v) = self.beta_limit {
            p.beta_limit = v;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
}

fn default_runs() -> usize {
    100
}

/// A Monte-Carlo sweep: every algorithm is run against every channel model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub case: PathBuf,
    pub partition: PathBuf,
    /// Needed when an algorithm names a preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<TestSystem>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    pub algorithms: Vec<AlgorithmSpec>,
    pub channels: Vec<ChannelModel>,
    #[serde(default)]
    pub output: OutputPaths,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    /// Read a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        fix(&mut cfg.case);
        fix(&mut cfg.partition);
        if let Some(p) = cfg.output.csv.as_mut() {
            fix(p);
        }
        if let Some(p) = cfg.output.json.as_mut() {
            fix(p);
        }
        Ok(cfg)
    }

    /// Check the shape of the sweep and resolve every algorithm.
    pub fn resolve(&self) -> Result<Vec<AlgorithmParams>, HarnessError> {
        if self.runs == 0 {
            return Err(HarnessError::Config("runs must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(HarnessError::Config("no algorithms given".into()));
        }
        if self.channels.is_empty() {
            return Err(HarnessError::Config("no channel models given".into()));
        }
        for c in &self.channels {
            c.validate()?;
        }
        self.algorithms.iter().map(|a| a.resolve(self.system)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
name = "noise"
case = "cases/case14.m"
partition = "partitions/case14.txt"
system = "ieee14"
runs = 5
base_seed = 7

[[algorithms]]
kind = "admm"
preset = "table"

[[algorithms]]
kind = "atc"
alpha = 1.04
beta = 2.0

[[channels]]
kind = "ideal"

[[channels]]
kind = "gaussian"
sigma = 1e-4

[[channels]]
kind = "intermittent_loss"
lambda_f = 0.05
lambda_r = 0.1
"#;

    #[test]
    fn parses_and_resolves() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(c.runs, 5);
        assert_eq!(c.channels[1], ChannelModel::Gaussian { sigma: 1e-4 });
        assert_eq!(
            c.channels[2],
            ChannelModel::IntermittentLoss { lambda_f: 0.05, lambda_r: 0.1, symmetric: false }
        );
        let p = c.resolve().unwrap();
        assert_eq!(p[0].alpha, 1e4);
        assert_eq!((p[1].alpha, p[1].beta), (1.04, 2.0));
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn defaults() {
        let text = "case = 'a.m'\npartition = 'a.txt'\n[[algorithms]]\nkind = 'app'\nalpha = 10.0\n[[channels]]\nkind = 'ideal'\n";
        let c = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(c.runs, 100);
        assert_eq!(c.base_seed, 0);
        assert_eq!(c.resolve().unwrap()[0].beta, 20.0);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = ExperimentConfig::from_toml(SAMPLE).unwrap();
        let mut c = base.clone();
        c.runs = 0;
        assert!(c.resolve().is_err());
        let mut c = base.clone();
        c.channels.clear();
        assert!(c.resolve().is_err());
        let mut c = base.clone();
        c.system = None;
        assert!(matches!(c.resolve(), Err(HarnessError::Config(_))));
        let mut c = base.clone();
        c.channels.push(ChannelModel::BadData { r: 1.0, p_bad: 2.0, per_message: false });
        assert!(c.resolve().is_err());
        let mut c = base;
        c.algorithms[1].alpha = Some(0.9);
        assert!(c.resolve().is_err());
        assert!(ExperimentConfig::from_toml("case = 'a'\nbogus = 1\n").is_err());
    }

    #[test]
    fn load_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("exp.toml");
        std::fs::write(&file, SAMPLE).unwrap();
        let c = ExperimentConfig::load(&file).unwrap();
        assert_eq!(c.case, dir.path().join("cases/case14.m"));
        assert!(ExperimentConfig::load(dir.path().join("missing.toml")).is_err());
    }
}
