//! Configuration, Monte Carlo orchestration, statistics and CSV output.

mod check;
mod config;
mod experiment;
mod summary;

pub use check::{
    oracle_check, random_content_world, random_power_instance, random_stackelberg_instance, random_synergy_game,
    CheckReport, PropertyResult,
};
pub use config::{
    load_config, parse_config, AuctionSection, ConfigError, ContentSection, ExperimentConfig, ExperimentKind,
    PowerSection, Scheme, StackelbergSection,
};
pub use experiment::{
    drop_seed, execute, power_instance, run_experiment, ExperimentOutput, HarnessError, CONTENT_HEADER, POWER_HEADER,
    STACKELBERG_HEADER, SUMRATE_HEADER,
};
pub use summary::{stats, summarize, GroupSummary, MetricRow, PairedDiff, RunSummary, Stats};
