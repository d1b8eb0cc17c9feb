//! Seeded Monte Carlo runs and their CSV output.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use super::check::{oracle_check, CheckReport};
use super::config::{ExperimentConfig, ExperimentKind, Scheme};
use super::summary::{summarize, MetricRow, RunSummary};
use crate::auction::{all_cellular_sum_rate, allocation_from_auction, d2d_auction, random_allocation, run_auction, AuctionError};
use crate::coalition::{simulate_content_distribution, Allocator};
use crate::power_control::{run_power_game, PowerGameInstance};
use crate::radio::{cellular_link, draw_gains, generate_topology, sum_rate, GainTensor, RadioError, Topology};
use crate::seed::derive_seed;
use crate::stackelberg::{leader_optimize, price_sweep, PriceGrid, StackelbergInstance};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] super::config::ConfigError),
    #[error(transparent)]
    Radio(#[from] RadioError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Everything one run produces before anything touches the disk.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub file_name: &'static str,
    /// CSV text (JSON for `oracle-check`).
    pub contents: String,
    pub summary: RunSummary,
    pub check: Option<CheckReport>,
}

pub const SUMRATE_HEADER: &str = "n_pairs,scheme,drop_seed,sum_rate_bps_hz,rounds,valuation_calls";
pub const CONTENT_HEADER: &str = "round,scheme,drop_seed,cumulative_packets,total_value_bps_hz";
pub const POWER_HEADER: &str = "n_players,drop_seed,iter,player,power_w,sinr_db";
pub const STACKELBERG_HEADER: &str = "drop_seed,lambda,p_star_w,u_leader,u_follower";

/// Seed of drop `drop` at sweep point `sweep_index`.
pub fn drop_seed(master: u64, sweep_index: usize, drop: usize) -> u64 {
    derive_seed(master, &[sweep_index as u64, drop as u64])
}

fn drop_world(config: &ExperimentConfig, m: usize, n: usize, seed: u64) -> Result<(Topology, GainTensor), RadioError> {
    let topo = generate_topology(&config.radio, m, n, derive_seed(seed, &[0]))?;
    let gains = draw_gains(&topo, &config.radio, derive_seed(seed, &[1]))?;
    Ok((topo, gains))
}

/// Runs `f` on every (sweep point, drop) in parallel and concatenates the
/// per-drop outputs in (sweep, drop) order.
fn per_drop<T: Send>(config: &ExperimentConfig, points: &[usize], f: impl Fn(usize, u64) -> T + Sync) -> Vec<(usize, u64, T)> {
    let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|s| (0..config.drops).map(move |d| (s, d))).collect();
    jobs.into_par_iter()
        .map(|(s, d)| {
            let seed = drop_seed(config.master_seed, s, d);
            (points[s], seed, f(points[s], seed))
        })
        .collect()
}

struct SumRateRow {
    scheme: Scheme,
    sum_rate: f64,
    rounds: usize,
    calls: usize,
}

fn sumrate_drop(config: &ExperimentConfig, n: usize, seed: u64) -> Vec<SumRateRow> {
    let world = drop_world(config, config.auction.cue_count, n, seed);
    config
        .schemes
        .iter()
        .map(|&scheme| {
            let Ok((topo, gains)) = &world else {
                return SumRateRow { scheme, sum_rate: f64::NAN, rounds: 0, calls: 0 };
            };
            let params = &config.radio;
            match scheme {
                Scheme::Rica => {
                    let rica = config.auction.rica();
                    let result = d2d_auction(topo, gains, params, &rica).and_then(|inst| run_auction(&inst, rica.max_rounds));
                    match result {
                        Ok(state) => {
                            let rate = allocation_from_auction(&state, topo, params)
                                .map(|a| sum_rate(&a, gains, params))
                                .unwrap_or(f64::NAN);
                            SumRateRow { scheme, sum_rate: rate, rounds: state.round, calls: state.valuation_calls }
                        }
                        Err(AuctionError::NotTerminated { rounds, state }) => {
                            SumRateRow { scheme, sum_rate: f64::NAN, rounds, calls: state.valuation_calls }
                        }
                        Err(_) => SumRateRow { scheme, sum_rate: f64::NAN, rounds: 0, calls: 0 },
                    }
                }
                Scheme::Random => {
                    let alloc = random_allocation(topo, params, derive_seed(seed, &[2]));
                    SumRateRow { scheme, sum_rate: sum_rate(&alloc, gains, params), rounds: 0, calls: 0 }
                }
                Scheme::AllCellular => {
                    SumRateRow { scheme, sum_rate: all_cellular_sum_rate(topo, gains, params), rounds: 0, calls: 0 }
                }
                Scheme::Coalition | Scheme::Noncooperative => unreachable!("rejected by validation"),
            }
        })
        .collect()
}

fn run_sumrate(config: &ExperimentConfig) -> (String, Vec<MetricRow>) {
    let results = per_drop(config, &config.sweep, |n, seed| sumrate_drop(config, n, seed));
    let mut csv = format!("{SUMRATE_HEADER}\n");
    let mut rows = Vec::new();
    for (n, seed, drop_rows) in results {
        for r in drop_rows {
            writeln!(csv, "{n},{},{seed},{},{},{}", r.scheme.name(), r.sum_rate, r.rounds, r.calls).unwrap();
            rows.push(MetricRow { key: n as u64, scheme: r.scheme.name().into(), drop_seed: seed, value: r.sum_rate });
        }
    }
    (csv, rows)
}

fn run_content(config: &ExperimentConfig) -> (String, Vec<MetricRow>) {
    let c = &config.content;
    let results = per_drop(config, &[0], |_, seed| {
        config
            .schemes
            .iter()
            .map(|&scheme| {
                let allocator = match scheme {
                    Scheme::Coalition => Allocator::Coalition,
                    _ => Allocator::Noncooperative,
                };
                (scheme, simulate_content_distribution(&c.scenario, &config.radio, allocator, c.rounds, seed).ok())
            })
            .collect::<Vec<_>>()
    });
    let mut csv = format!("{CONTENT_HEADER}\n");
    let mut rows = Vec::new();
    for (_, seed, curves) in results {
        for (scheme, curve) in curves {
            for round in 0..=c.rounds {
                let (packets, value) = match &curve {
                    Some(curve) => (curve.cumulative_packets[round] as f64, curve.total_value[round]),
                    None => (f64::NAN, f64::NAN),
                };
                writeln!(csv, "{round},{},{seed},{packets},{value}", scheme.name()).unwrap();
                rows.push(MetricRow { key: round as u64, scheme: scheme.name().into(), drop_seed: seed, value: packets });
            }
        }
    }
    (csv, rows)
}

/// Co-channel power game among all pairs of a drop sharing one RB with a
/// single cellular link.
pub fn power_instance(config: &ExperimentConfig, players: usize, seed: u64) -> Result<PowerGameInstance, RadioError> {
    let (_, gains) = drop_world(config, 1, players, seed)?;
    let links: Vec<_> = (0..players).map(|k| (Topology::pair_tx(k), Topology::pair_rx(k))).collect();
    let target = 10f64.powf(config.power.sinr_target_db / 10.0);
    Ok(PowerGameInstance::from_links(&gains, &config.radio, 0, &links, cellular_link(0, &config.radio), target))
}

fn run_power(config: &ExperimentConfig) -> (String, Vec<MetricRow>) {
    let p = &config.power;
    let results = per_drop(config, &config.sweep, |n, seed| {
        let inst = power_instance(config, n, seed).ok()?;
        let trace = run_power_game(&inst, &vec![0.0; n], p.max_iters, p.tol_w).ok()?;
        Some((inst, trace))
    });
    let mut csv = format!("{POWER_HEADER}\n");
    let mut rows = Vec::new();
    for (n, seed, run) in results {
        let Some((inst, trace)) = run else {
            writeln!(csv, "{n},{seed},0,0,NaN,NaN").unwrap();
            rows.push(MetricRow { key: n as u64, scheme: "best_response".into(), drop_seed: seed, value: f64::NAN });
            continue;
        };
        for (it, powers) in trace.iterates.iter().enumerate() {
            for (player, power) in powers.iter().enumerate() {
                let sinr_db = 10.0 * inst.sinr(player, powers).log10();
                writeln!(csv, "{n},{seed},{it},{player},{power},{sinr_db}").unwrap();
            }
        }
        let value = if trace.converged { trace.iterations as f64 } else { f64::NAN };
        rows.push(MetricRow { key: n as u64, scheme: "best_response".into(), drop_seed: seed, value });
    }
    (csv, rows)
}

fn run_stackelberg(config: &ExperimentConfig) -> (String, Vec<MetricRow>) {
    let results = per_drop(config, &[0], |_, seed| {
        let (_, gains) = drop_world(config, 1, 1, seed).ok()?;
        let mut inst = StackelbergInstance::from_topology(&gains, &config.radio, 0, 0);
        inst.lambda_grid = PriceGrid { points: config.stackelberg.grid_points, ..inst.lambda_grid };
        let best = leader_optimize(&inst).ok()?;
        Some((price_sweep(&inst), best))
    });
    let mut csv = format!("{STACKELBERG_HEADER}\n");
    let mut rows = Vec::new();
    for (_, seed, run) in results {
        let Some((sweep, best)) = run else {
            writeln!(csv, "{seed},NaN,NaN,NaN,NaN").unwrap();
            rows.push(MetricRow { key: 0, scheme: "leader".into(), drop_seed: seed, value: f64::NAN });
            continue;
        };
        for o in sweep {
            writeln!(csv, "{seed},{},{},{},{}", o.lambda_star, o.p_star_w, o.u_leader, o.u_follower).unwrap();
        }
        rows.push(MetricRow { key: 0, scheme: "leader".into(), drop_seed: seed, value: best.u_leader });
    }
    (csv, rows)
}

/// Runs the configured experiment in memory. The output depends only on
/// `config`, whatever the thread count.
pub fn execute(config: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    config.validate()?;
    let started = Instant::now();
    let mut check = None;
    let (file_name, (contents, rows)) = match config.experiment {
        ExperimentKind::SumrateVsPairs => ("sumrate.csv", run_sumrate(config)),
        ExperimentKind::ContentDistribution => ("content.csv", run_content(config)),
        ExperimentKind::PowerControl => ("power.csv", run_power(config)),
        ExperimentKind::Stackelberg => ("stackelberg.csv", run_stackelberg(config)),
        ExperimentKind::OracleCheck => {
            let report = oracle_check(config.master_seed, config.drops, &config.oracle);
            let rows = report
                .properties
                .iter()
                .map(|p| MetricRow { key: 0, scheme: p.property.clone(), drop_seed: 0, value: p.failures as f64 })
                .collect();
            let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
            check = Some(report);
            ("oracle_check.json", (json, rows))
        }
    };
    let mut summary = summarize(config.experiment.name(), &rows);
    summary.wall_clock_s = started.elapsed().as_secs_f64();
    Ok(ExperimentOutput { file_name, contents, summary, check })
}

/// Runs the experiment and writes its output file and the effective
/// configuration into `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    let out = execute(config)?;
    let dir = &config.output_dir;
    let io = |path: PathBuf| move |source| HarnessError::Io { path, source };
    std::fs::create_dir_all(dir).map_err(io(dir.clone()))?;
    let data = dir.join(out.file_name);
    std::fs::write(&data, &out.contents).map_err(io(data.clone()))?;
    let echo = dir.join("effective_config.toml");
    std::fs::write(&echo, config.to_toml()).map_err(io(echo.clone()))?;
    Ok(out)
}
