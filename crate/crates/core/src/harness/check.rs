//! Cross-checks of every allocator against the brute-force references on
//! small random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::auction::{allocation_from_auction, d2d_auction, run_auction, RicaConfig};
use crate::coalition::{
    generate_content_layout, merge_split, run_switch_dynamics, total_value, ContentScenario, ContentWorld,
};
use crate::oracle::{
    exhaustive_best_allocation, exhaustive_best_partition, grid_equilibrium, grid_follower_response, is_merge_split_stable,
    is_switch_stable, solve_min_power, OracleBudget, OracleError,
};
use crate::power_control::{run_power_game, PowerGameInstance, PowerPlayer};
use crate::radio::{draw_gains, generate_topology, sum_rate, GainTensor, RadioParams};
use crate::seed::derive_seed;
use crate::stackelberg::{follower_best_response, leader_optimize, verify_equilibrium, PriceGrid, StackelbergInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub property: String,
    pub passed: bool,
    pub instances: usize,
    pub failures: usize,
    /// Instances the oracle refused because of its budget.
    pub skipped: usize,
    /// First failing instance seed, if any.
    pub first_failure: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub properties: Vec<PropertyResult>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(|p| p.passed)
    }
}

enum Outcome {
    Pass,
    Fail,
    Skip,
}

fn property(name: &str, master: u64, tag: u64, instances: usize, f: impl Fn(u64) -> Outcome) -> PropertyResult {
    let mut r = PropertyResult {
        property: name.to_string(),
        passed: true,
        instances,
        failures: 0,
        skipped: 0,
        first_failure: None,
    };
    for i in 0..instances {
        let seed = derive_seed(master, &[tag, i as u64]);
        match f(seed) {
            Outcome::Pass => {}
            Outcome::Skip => r.skipped += 1,
            Outcome::Fail => {
                r.failures += 1;
                r.first_failure.get_or_insert(seed);
            }
        }
    }
    r.passed = r.failures == 0;
    r
}

/// Random power game: unit direct gains, cross gains drawn so that the
/// interference matrix straddles the feasibility boundary.
pub fn random_power_instance(seed: u64) -> PowerGameInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=5);
    let spread = 0.6 / (n - 1) as f64;
    let players = (0..n)
        .map(|i| PowerPlayer {
            direct_gain: rng.random_range(0.5..2.0),
            cross_gains: (0..n).map(|j| if i == j { 0.0 } else { rng.random_range(0.0..spread) }).collect(),
            external_w: rng.random_range(1e-4..1e-3),
        })
        .collect();
    let sinr_targets = (0..n).map(|_| rng.random_range(1.0..3.0)).collect();
    PowerGameInstance { players, sinr_targets, p_max_w: 10.0 }
}

/// Random single-link Stackelberg instance on a price grid of
/// `grid_points` points.
pub fn random_stackelberg_instance(seed: u64, grid_points: usize) -> StackelbergInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inst = StackelbergInstance::new(
        rng.random_range(1.0..100.0),
        rng.random_range(0.01..1.0),
        rng.random_range(1.0..100.0),
        rng.random_range(0.01..1.0),
        rng.random_range(0.5..2.0),
        1.0,
        rng.random_range(0.5..5.0),
    );
    inst.lambda_grid = PriceGrid { points: grid_points, ..inst.lambda_grid };
    inst
}

/// Random content-game world with up to `max_players` UEs and `max_rbs` RBs
/// in a 100 m cell, so that links interfere noticeably.
pub fn random_content_world(seed: u64, max_players: usize, max_rbs: usize) -> ContentWorld {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_d2d = rng.random_range(2..=max_players);
    let scenario = ContentScenario {
        n_d2d,
        k_seeds: rng.random_range(1..=n_d2d),
        m_cue: rng.random_range(1..=max_rbs),
        ..ContentScenario::default()
    };
    let params = RadioParams { cell_radius: 100.0, ..RadioParams::default() };
    let layout = generate_content_layout(&params, &scenario, derive_seed(seed, &[0]));
    let gains = GainTensor::draw(&layout, scenario.m_cue, &params, derive_seed(seed, &[1])).expect("valid params");
    let mut is_seed = vec![false; n_d2d];
    for s in is_seed.iter_mut().take(scenario.k_seeds) {
        *s = true;
    }
    ContentWorld { layout, gains, params, is_seed }
}

/// Symmetric pairwise-synergy game on `n` players: each player has a
/// standalone worth and each pair inside a coalition adds a signed bonus.
pub fn random_synergy_game(seed: u64, n: usize) -> impl Fn(&[usize]) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let own: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let w: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    move |c: &[usize]| {
        let mut v: f64 = c.iter().map(|&i| own[i]).sum();
        for (a, &i) in c.iter().enumerate() {
            for &j in &c[a + 1..] {
                v += w[i.min(j)][i.max(j)];
            }
        }
        v
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Runs every property on `instances` random instances each.
pub fn oracle_check(master_seed: u64, instances: usize, budget: &OracleBudget) -> CheckReport {
    let params = RadioParams::default();
    let mut properties = Vec::new();

    properties.push(property("auction_dominated_by_exhaustive", master_seed, 1, instances, |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, n) = (rng.random_range(1..=3), rng.random_range(1..=4));
        let topo = generate_topology(&params, m, n, derive_seed(seed, &[0])).expect("valid params");
        let gains = draw_gains(&topo, &params, derive_seed(seed, &[1])).expect("valid params");
        let best = match exhaustive_best_allocation(&topo, &gains, &params, budget) {
            Ok((_, v)) => v,
            Err(_) => return Outcome::Skip,
        };
        let config = RicaConfig::default();
        let got = d2d_auction(&topo, &gains, &params, &config)
            .and_then(|inst| run_auction(&inst, config.max_rounds))
            .and_then(|state| allocation_from_auction(&state, &topo, &params))
            .map(|alloc| sum_rate(&alloc, &gains, &params));
        match got {
            Ok(v) if v <= best * (1.0 + 1e-12) => Outcome::Pass,
            _ => Outcome::Fail,
        }
    }));

    properties.push(property("switch_dynamics_stable", master_seed, 2, instances, |seed| {
        let world = random_content_world(seed, 6, 3);
        let Ok(p) = run_switch_dynamics(&world.nearest_anchor_partition(), &world, 100_000) else {
            return Outcome::Fail;
        };
        let best = match exhaustive_best_partition(&world, budget) {
            Ok((_, v)) => v,
            Err(_) => return Outcome::Skip,
        };
        if is_switch_stable(&p, &world) && total_value(&p, &world) <= best * (1.0 + 1e-12) {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }));

    properties.push(property("merge_split_stable", master_seed, 3, instances, |seed| {
        let n = 2 + (seed % 7) as usize;
        let game = random_synergy_game(seed, n);
        match merge_split((0..n).map(|i| vec![i]).collect(), &game, 10_000) {
            Ok(p) if is_merge_split_stable(&p, &game) => Outcome::Pass,
            _ => Outcome::Fail,
        }
    }));

    properties.push(property("power_game_matches_linear_solve", master_seed, 4, instances, |seed| {
        let inst = random_power_instance(seed);
        let Ok(trace) = run_power_game(&inst, &vec![0.0; inst.len()], 100_000, 1e-14) else {
            return Outcome::Fail;
        };
        let ok = match solve_min_power(&inst) {
            Ok(p) => {
                trace.converged && trace.final_powers().iter().zip(&p).all(|(a, b)| rel_close(*a, *b, 1e-6))
            }
            Err(OracleError::Infeasible { .. }) | Err(OracleError::PowerCapExceeded { .. }) => !trace.converged,
            Err(_) => false,
        };
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }));

    properties.push(property("stackelberg_matches_grid", master_seed, 5, instances, |seed| {
        let inst = random_stackelberg_instance(seed, budget.grid_points);
        let Ok(out) = leader_optimize(&inst) else {
            return Outcome::Fail;
        };
        let grid = grid_equilibrium(&inst, budget.grid_points);
        let p_cell = inst.p_max_w / (budget.grid_points.max(2) - 1) as f64;
        let follower_ok = inst.lambda_grid.iter().step_by(97).all(|lambda| {
            let p = follower_best_response(&inst, lambda).expect("non-negative price");
            (p - grid_follower_response(&inst, lambda, budget.grid_points).0).abs() <= p_cell
        });
        // The grid follower may sit up to one power cell off its best
        // response, which moves the leader's utility by at most the
        // Lipschitz constant of u_leader in p times that cell.
        let lambda_max = inst.lambda_grid.max;
        let rate_slope = inst.p_c_w * inst.g_cc * inst.g_db / (inst.sigma_w * inst.sigma_w * std::f64::consts::LN_2);
        let slack = (lambda_max + rate_slope) * p_cell;
        let leader_ok = (out.u_leader - grid.u_leader).abs() <= slack;
        if follower_ok && leader_ok && verify_equilibrium(&inst, &out, 1e-9) {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }));

    CheckReport { properties }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_check_passes() {
        let report = oracle_check(3, 5, &OracleBudget::default());
        assert!(report.passed(), "{report:#?}");
        assert_eq!(report.properties.len(), 5);
    }

    #[test]
    fn tiny_budget_skips_instead_of_failing() {
        let budget = OracleBudget { max_assignments: 1, grid_points: 50 };
        let report = oracle_check(3, 3, &budget);
        let auction = &report.properties[0];
        assert_eq!(auction.skipped, 3);
        assert!(auction.passed);
    }
}
