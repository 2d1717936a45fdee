use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ContractError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmKind {
    Admm,
    Atc,
    App,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 3] = [AlgorithmKind::Admm, AlgorithmKind::Atc, AlgorithmKind::App];
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlgorithmKind::Admm => "admm",
            AlgorithmKind::Atc => "atc",
            AlgorithmKind::App => "app",
        })
    }
}

impl FromStr for AlgorithmKind {
    type Err = ContractError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "admm" => Ok(AlgorithmKind::Admm),
            "atc" => Ok(AlgorithmKind::Atc),
            "app" => Ok(AlgorithmKind::App),
            _ => Err(ContractError::Invalid(format!("unknown algorithm `{s}`"))),
        }
    }
}

/// Tuning constants of one algorithm.
///
/// - ADMM: `alpha` is the penalty weight.
/// - ATC: `beta` is the initial penalty `beta^0`, multiplied by `alpha`
///   after every iteration.
/// - APP: `alpha` is the multiplier step, `beta` the proximal weight and
///   `gamma` the linearized coupling weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmParams {
    pub kind: AlgorithmKind,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    #[serde(default)]
    pub multiplier_init: f64,
    /// Consensus tolerance in radians.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// ATC stops once `beta` exceeds this value.
    #[serde(default = "default_beta_limit")]
    pub beta_limit: f64,
}

fn default_beta_limit() -> f64 {
    1e12
}

pub const DEFAULT_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_MAX_ITERATIONS: usize = 1000;

impl AlgorithmParams {
    pub fn admm(alpha: f64) -> Self {
        AlgorithmParams {
            kind: AlgorithmKind::Admm,
            alpha,
            beta: 0.0,
            gamma: 0.0,
            multiplier_init: 0.0,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            beta_limit: default_beta_limit(),
        }
    }

    /// ATC with growth factor `alpha` and `beta^0 = 1`.
    pub fn atc(alpha: f64) -> Self {
        AlgorithmParams {
            kind: AlgorithmKind::Atc,
            beta: 1.0,
            ..Self::admm(alpha)
        }
    }

    /// APP with the coupling `alpha = gamma = beta / 2`.
    pub fn app(alpha: f64) -> Self {
        AlgorithmParams {
            kind: AlgorithmKind::App,
            beta: 2.0 * alpha,
            gamma: alpha,
            ..Self::admm(alpha)
        }
    }

    pub fn for_kind(kind: AlgorithmKind, alpha: f64) -> Self {
        match kind {
            AlgorithmKind::Admm => Self::admm(alpha),
            AlgorithmKind::Atc => Self::atc(alpha),
            AlgorithmKind::App => Self::app(alpha),
        }
    }

    pub fn validate(&self) -> Result<(), ContractError> {
        let bad = |m: String| Err(ContractError::Invalid(m));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.tolerance > 0.0) {
            return bad(format!("tolerance must be positive, got {}", self.tolerance));
        }
        if !self.multiplier_init.is_finite() {
            return bad("initial multiplier must be finite".into());
        }
        match self.kind {
            AlgorithmKind::Admm => Ok(()),
            AlgorithmKind::Atc => {
                if self.alpha < 1.0 {
                    return bad(format!("ATC needs alpha >= 1 so beta never shrinks, got {}", self.alpha));
                }
                if !(self.beta > 0.0 && self.beta.is_finite()) {
                    return bad(format!("ATC needs a positive initial beta, got {}", self.beta));
                }
                Ok(())
            }
            AlgorithmKind::App => {
                // alpha < 2 gamma <= beta; equality on the right admits the
                // usual alpha = gamma = beta / 2 coupling
                if !(self.alpha < 2.0 * self.gamma && 2.0 * self.gamma <= self.beta) {
                    return bad(format!(
                        "APP needs alpha < 2 gamma <= beta, got alpha={}, gamma={}, beta={}",
                        self.alpha, self.gamma, self.beta
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Bundled test systems with published tuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestSystem {
    Wb5,
    Ieee14,
    Rts,
    Ieee118,
    Ieee300,
}

impl TestSystem {
    pub const ALL: [TestSystem; 5] = [
        TestSystem::Wb5,
        TestSystem::Ieee14,
        TestSystem::Rts,
        TestSystem::Ieee118,
        TestSystem::Ieee300,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestSystem::Wb5 => "wb5",
            TestSystem::Ieee14 => "ieee14",
            TestSystem::Rts => "rts",
            TestSystem::Ieee118 => "ieee118",
            TestSystem::Ieee300 => "ieee300",
        }
    }
}

impl FromStr for TestSystem {
    type Err = ContractError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TestSystem::ALL
            .into_iter()
            .find(|t| t.name() == s.to_ascii_lowercase())
            .ok_or_else(|| ContractError::Invalid(format!("unknown test system `{s}`")))
    }
}

/// Which published set of `alpha` values to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PresetSource {
    /// The summary table of ideal-communication runs.
    #[default]
    Table,
    /// The values given in the parameter-tuning discussion.
    Text,
}

impl FromStr for PresetSource {
    type Err = ContractError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(PresetSource::Table),
            "text" => Ok(PresetSource::Text),
            _ => Err(ContractError::Invalid(format!("unknown preset source `{s}`"))),
        }
    }
}

/// Published `alpha` for `kind` on `system`.
pub fn preset_alpha(kind: AlgorithmKind, system: TestSystem, source: PresetSource) -> f64 {
    use AlgorithmKind::*;
    use TestSystem::*;
    let row = match (source, kind) {
        (PresetSource::Table, Admm) => [1e3, 1e4, 1e7, 1e6, 1e7],
        (_, Atc) => [1.5, 1.04, 1.3, 1.1, 1.2],
        (PresetSource::Table, App) => [1e2, 1e5, 1e7, 1e6, 1e7],
        (PresetSource::Text, Admm) => [1e2, 1e3, 1e5, 1e5, 1e5],
        (PresetSource::Text, App) => [1e2, 1e3, 1e5, 1e4, 1e5],
    };
    let col = match system {
        Wb5 => 0,
        Ieee14 => 1,
        Rts => 2,
        Ieee118 => 3,
        Ieee300 => 4,
    };
    row[col]
}

pub fn preset(kind: AlgorithmKind, system: TestSystem, source: PresetSource) -> AlgorithmParams {
    AlgorithmParams::for_kind(kind, preset_alpha(kind, system, source))
}
