//! Experiment configuration files.
//!
//! A config is a small TOML document: a handful of top-level keys followed by
//! one table per module. Every key is optional and unknown keys are errors.
//!
//! ```toml
//! experiment = "sumrate-vs-pairs"
//! master_seed = 1
//! drops = 200
//! sweep = [2, 4, 6, 8, 10, 12, 14, 16]
//!
//! [radio]
//! cell_radius = 500.0
//! link_direction = "downlink"
//!
//! [auction]
//! cue_count = 10
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::auction::RicaConfig;
use crate::coalition::ContentScenario;
use crate::oracle::OracleBudget;
use crate::radio::RadioParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SumrateVsPairs,
    ContentDistribution,
    PowerControl,
    Stackelberg,
    OracleCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::SumrateVsPairs,
        ExperimentKind::ContentDistribution,
        ExperimentKind::PowerControl,
        ExperimentKind::Stackelberg,
        ExperimentKind::OracleCheck,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::SumrateVsPairs => "sumrate-vs-pairs",
            ExperimentKind::ContentDistribution => "content-distribution",
            ExperimentKind::PowerControl => "power-control",
            ExperimentKind::Stackelberg => "stackelberg",
            ExperimentKind::OracleCheck => "oracle-check",
        }
    }

    fn default_drops(&self) -> usize {
        match self {
            ExperimentKind::SumrateVsPairs => 200,
            ExperimentKind::ContentDistribution => 50,
            ExperimentKind::PowerControl | ExperimentKind::Stackelberg => 1,
            ExperimentKind::OracleCheck => 50,
        }
    }

    fn default_sweep(&self) -> Vec<usize> {
        match self {
            ExperimentKind::SumrateVsPairs => (1..=8).map(|i| 2 * i).collect(),
            ExperimentKind::PowerControl => vec![2, 4],
            _ => Vec::new(),
        }
    }

    fn default_schemes(&self) -> Vec<Scheme> {
        match self {
            ExperimentKind::SumrateVsPairs => vec![Scheme::Rica, Scheme::Random, Scheme::AllCellular],
            ExperimentKind::ContentDistribution => vec![Scheme::Coalition, Scheme::Noncooperative],
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rica,
    Random,
    AllCellular,
    Coalition,
    Noncooperative,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Rica => "rica",
            Scheme::Random => "random",
            Scheme::AllCellular => "all_cellular",
            Scheme::Coalition => "coalition",
            Scheme::Noncooperative => "noncooperative",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuctionSection {
    /// Cellular UEs (and RBs) per drop.
    pub cue_count: usize,
    pub epsilon_fraction: f64,
    pub initial_price: f64,
    pub signaling_cost: f64,
    pub exact_cap: usize,
    pub max_rounds: usize,
}

impl Default for AuctionSection {
    fn default() -> Self {
        let r = RicaConfig::default();
        Self {
            cue_count: 10,
            epsilon_fraction: r.epsilon_fraction,
            initial_price: r.initial_price,
            signaling_cost: r.signaling_cost,
            exact_cap: r.exact_cap,
            max_rounds: r.max_rounds,
        }
    }
}

impl AuctionSection {
    pub fn rica(&self) -> RicaConfig {
        RicaConfig {
            epsilon_fraction: self.epsilon_fraction,
            initial_price: self.initial_price,
            signaling_cost: self.signaling_cost,
            exact_cap: self.exact_cap,
            max_rounds: self.max_rounds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContentSection {
    #[serde(flatten)]
    pub scenario: ContentScenario,
    pub rounds: usize,
}

impl Default for ContentSection {
    fn default() -> Self {
        Self { scenario: ContentScenario::default(), rounds: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerSection {
    pub sinr_target_db: f64,
    pub tol_w: f64,
    pub max_iters: usize,
}

impl Default for PowerSection {
    fn default() -> Self {
        Self { sinr_target_db: 10.0, tol_w: 1e-9, max_iters: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StackelbergSection {
    pub grid_points: usize,
}

impl Default for StackelbergSection {
    fn default() -> Self {
        Self { grid_points: crate::stackelberg::DEFAULT_GRID_POINTS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub master_seed: u64,
    pub drops: usize,
    pub sweep: Vec<usize>,
    pub schemes: Vec<Scheme>,
    pub output_dir: PathBuf,
    pub radio: RadioParams,
    pub auction: AuctionSection,
    pub content: ContentSection,
    pub power: PowerSection,
    pub stackelberg: StackelbergSection,
    pub oracle: OracleBudget,
}

/// On-disk form: everything optional, experiment-dependent defaults filled
/// in by [`ExperimentConfig::from_raw`].
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<ExperimentKind>,
    master_seed: Option<u64>,
    drops: Option<usize>,
    sweep: Option<Vec<usize>>,
    schemes: Option<Vec<Scheme>>,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    radio: RadioParams,
    #[serde(default)]
    auction: AuctionSection,
    #[serde(default)]
    content: ContentSection,
    #[serde(default)]
    power: PowerSection,
    #[serde(default)]
    stackelberg: StackelbergSection,
    #[serde(default)]
    oracle: OracleBudgetSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct OracleBudgetSection {
    max_assignments: usize,
    grid_points: usize,
}

impl Default for OracleBudgetSection {
    fn default() -> Self {
        let b = OracleBudget::default();
        Self { max_assignments: b.max_assignments, grid_points: b.grid_points }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::for_experiment(ExperimentKind::SumrateVsPairs)
    }
}

impl ExperimentConfig {
    pub fn for_experiment(kind: ExperimentKind) -> Self {
        Self::from_raw(RawConfig { experiment: Some(kind), ..Default::default() })
    }

    fn from_raw(raw: RawConfig) -> Self {
        let experiment = raw.experiment.unwrap_or(ExperimentKind::SumrateVsPairs);
        Self {
            experiment,
            master_seed: raw.master_seed.unwrap_or(1),
            drops: raw.drops.unwrap_or_else(|| experiment.default_drops()),
            sweep: raw.sweep.unwrap_or_else(|| experiment.default_sweep()),
            schemes: raw.schemes.unwrap_or_else(|| experiment.default_schemes()),
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
            radio: raw.radio,
            auction: raw.auction,
            content: raw.content,
            power: raw.power,
            stackelberg: raw.stackelberg,
            oracle: OracleBudget { max_assignments: raw.oracle.max_assignments, grid_points: raw.oracle.grid_points },
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        self.radio.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.drops == 0 {
            return bad("drops must be >= 1".into());
        }
        if self.auction.cue_count == 0 {
            return bad("auction.cue_count must be >= 1".into());
        }
        if !(self.auction.epsilon_fraction > 0.0) {
            return bad("auction.epsilon_fraction must be > 0".into());
        }
        if !(self.auction.initial_price >= 0.0 && self.auction.signaling_cost >= 0.0) {
            return bad("auction prices and costs must be >= 0".into());
        }
        self.content.scenario.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.content.rounds == 0 {
            return bad("content.rounds must be >= 1".into());
        }
        if !(self.power.tol_w > 0.0 && self.power.sinr_target_db.is_finite()) {
            return bad("power.tol_w must be > 0 and power.sinr_target_db finite".into());
        }
        if self.stackelberg.grid_points == 0 || self.oracle.grid_points == 0 || self.oracle.max_assignments == 0 {
            return bad("grid sizes and budgets must be positive".into());
        }
        let allowed: &[Scheme] = match self.experiment {
            ExperimentKind::SumrateVsPairs => &[Scheme::Rica, Scheme::Random, Scheme::AllCellular],
            ExperimentKind::ContentDistribution => &[Scheme::Coalition, Scheme::Noncooperative],
            _ => &[],
        };
        if let Some(s) = self.schemes.iter().find(|s| !allowed.contains(s)) {
            return bad(format!("scheme {} does not apply to {}", s.name(), self.experiment));
        }
        Ok(())
    }

    /// The effective configuration as a config file that parses back to the
    /// same value.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let cfg = ExperimentConfig::from_raw(raw);
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_config(&text)
}
