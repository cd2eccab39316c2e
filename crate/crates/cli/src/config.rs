//! Declarative run configuration: an optional TOML file merged with
//! command-line flags, flags taking precedence.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Inclusive grid written `start:step:stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Range {
    pub start: f64,
    pub step: f64,
    pub stop: f64,
}

impl Range {
    pub fn single(x: f64) -> Self {
        Range {
            start: x,
            step: 1.0,
            stop: x,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let span = self.stop - self.start;
        let last = (span / self.step + 1e-9).floor() as usize;
        (0..=last)
            .map(|i| {
                let x = self.start + i as f64 * self.step;
                if (x - self.stop).abs() <= 1e-9 * self.step {
                    self.stop
                } else {
                    x
                }
            })
            .collect()
    }
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |p: &str| p.parse::<f64>().map_err(|_| format!("`{p}` in range `{s}` is not a number"));
        let range = match parts.as_slice() {
            [x] => Range::single(num(x)?),
            [a, b, c] => Range {
                start: num(a)?,
                step: num(b)?,
                stop: num(c)?,
            },
            _ => return Err(format!("range `{s}` must be `start:step:stop` or a single value")),
        };
        if !(range.start.is_finite() && range.stop.is_finite()) {
            return Err(format!("range `{s}` has non-finite bounds"));
        }
        if !(range.step > 0.0 && range.step.is_finite()) {
            return Err(format!("range `{s}` needs a positive step"));
        }
        if range.stop < range.start {
            return Err(format!("range `{s}` is empty (stop < start)"));
        }
        if (range.stop - range.start) / range.step >= MAX_GRID_POINTS as f64 {
            return Err(format!("range `{s}` has more than {MAX_GRID_POINTS} points"));
        }
        Ok(range)
    }
}

impl TryFrom<String> for Range {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Range> for String {
    fn from(r: Range) -> String {
        r.to_string()
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.start == self.stop {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}:{}:{}", self.start, self.step, self.stop)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ErrorModel {
    /// Mixture of φ⁺ and ψ⁺.
    #[default]
    Bit,
    /// Mixture of φ⁺ and φ⁻, converted by Hadamards before purifying.
    Phase,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig4Section {
    pub fidelity: Option<Range>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig5Section {
    pub g: Option<Range>,
    pub kappa_s: Option<Range>,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    pub g: Option<f64>,
    pub kappa_s: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PurifySection {
    pub fidelity: Option<f64>,
    pub error: Option<ErrorModel>,
    pub g: Option<f64>,
    pub kappa_s: Option<f64>,
    pub gamma: Option<f64>,
    pub log: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    pub initial: Option<f64>,
    pub threshold: Option<f64>,
    pub max_leaves: Option<u32>,
}

/// Contents of a `--config` file. Shared keys sit at the top level; each
/// subcommand reads its own table.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub threads: Option<usize>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub fig4: Fig4Section,
    #[serde(default)]
    pub fig5: Fig5Section,
    #[serde(default, rename = "pcd-point")]
    pub pcd_point: CavitySection,
    #[serde(default, rename = "purify-mc")]
    pub purify_mc: PurifySection,
    #[serde(default)]
    pub plan: PlanSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }
}

/// Resolved settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Common {
    pub seed: u64,
    pub samples: usize,
    pub threads: Option<usize>,
    pub format: Format,
    pub out: Option<PathBuf>,
}

pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig4Config {
    pub fidelity: Range,
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig5Config {
    pub g: Range,
    pub kappa_s: Range,
    pub gamma: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PurifyConfig {
    pub fidelity: f64,
    pub error: ErrorModel,
    /// `None` runs with ideal coefficients.
    pub cavity: Option<CavityPoint>,
    pub trials: usize,
    pub seed: u64,
    pub hadamard_first: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CavityPoint {
    pub g: f64,
    pub kappa_s: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanConfig {
    pub initial: f64,
    pub threshold: f64,
    pub max_leaves: u32,
}
