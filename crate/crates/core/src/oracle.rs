//! Brute-force references for the allocators.
//!
//! Nothing here goes through the game modules' evaluation paths: SINR and
//! sum-rate composition are rewritten from gains and powers so that a bug on
//! one side of a comparison cannot hide on the other.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coalition::{AnchoredValue, CoalitionalGame, ContentWorld, Partition};
use crate::power_control::PowerGameInstance;
use crate::radio::{Allocation, GainTensor, LinkDirection, Node, RadioParams, Topology};
use crate::stackelberg::{StackelbergInstance, StackelbergOutcome};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("search space of {states} states exceeds the budget of {budget}")]
    BudgetExceeded { states: f64, budget: usize },
    #[error("no feasible power vector (spectral radius {spectral_radius:.6})")]
    Infeasible { spectral_radius: f64 },
    #[error("minimal powers exceed the power cap")]
    PowerCapExceeded { powers: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleBudget {
    pub max_assignments: usize,
    pub grid_points: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self { max_assignments: 2_000_000, grid_points: 1000 }
    }
}

fn log2_1p(x: f64) -> f64 {
    (1.0 + x).ln() / std::f64::consts::LN_2
}

/// Spectral efficiency summed over every receiver in a set of co-channel
/// (tx, rx, power) transmissions.
fn co_channel_rate(gains: &GainTensor, noise: f64, rb: usize, tx: &[(Node, Node, f64)]) -> f64 {
    let mut total = 0.0;
    for (i, &(t, r, p)) in tx.iter().enumerate() {
        let mut denom = noise;
        for (j, &(tj, _, pj)) in tx.iter().enumerate() {
            if j != i {
                denom += pj * gains.gain(tj, r, rb);
            }
        }
        total += log2_1p(p * gains.gain(t, r, rb) / denom);
    }
    total
}

fn cellular_endpoints(rb: usize, params: &RadioParams) -> (Node, Node, f64) {
    match params.link_direction {
        LinkDirection::Uplink => (Node::Cue(rb), Node::Enb, params.p_cue_w()),
        LinkDirection::Downlink => (Node::Enb, Node::Cue(rb), params.p_enb_w()),
    }
}

fn assignment_rate(gains: &GainTensor, params: &RadioParams, m: usize, digits: &[usize]) -> f64 {
    let noise = params.noise_w();
    let pd = params.p_d2d_w();
    (0..m)
        .map(|rb| {
            let mut tx = vec![cellular_endpoints(rb, params)];
            for (k, &d) in digits.iter().enumerate() {
                if d == rb {
                    tx.push((Node::D2d(2 * k), Node::D2d(2 * k + 1), pd));
                }
            }
            co_channel_rate(gains, noise, rb, &tx)
        })
        .sum()
}

/// Advances a base-`base` odometer with the first digit most significant.
fn next_assignment(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

fn check_budget(base: usize, len: usize, budget: &OracleBudget) -> Result<(), OracleError> {
    let states = (base as f64).powi(len as i32);
    if states > budget.max_assignments as f64 {
        return Err(OracleError::BudgetExceeded { states, budget: budget.max_assignments });
    }
    Ok(())
}

/// Every assignment of every pair to an RB or to silence, at full D2D
/// power. Ties go to the lexicographically smallest assignment with RBs
/// ordered before "off".
pub fn exhaustive_best_allocation(
    topology: &Topology,
    gains: &GainTensor,
    params: &RadioParams,
    budget: &OracleBudget,
) -> Result<(Allocation, f64), OracleError> {
    let (m, n) = (topology.rb_count, topology.pair_count());
    check_budget(m + 1, n, budget)?;
    let mut digits = vec![0usize; n];
    let mut best = (digits.clone(), f64::NEG_INFINITY);
    loop {
        let v = assignment_rate(gains, params, m, &digits);
        if v > best.1 {
            best = (digits.clone(), v);
        }
        if !next_assignment(&mut digits, m + 1) {
            break;
        }
    }
    let rbs = best.0.iter().map(|&d| (d < m).then_some(d)).collect();
    Ok((Allocation::with_assignment(m, rbs, params), best.1))
}

fn content_total(world: &ContentWorld, anchors: usize, assignment: &[usize]) -> f64 {
    let noise = world.params.noise_w();
    let pd = world.params.p_d2d_w();
    let pos = &world.layout.d2d;
    (0..anchors)
        .map(|a| {
            let members: Vec<usize> = (0..assignment.len()).filter(|&u| assignment[u] == a).collect();
            let mut tx = vec![cellular_endpoints(a, &world.params)];
            for &u in members.iter().filter(|&&u| !world.is_seed[u]) {
                let mut seed: Option<(f64, usize)> = None;
                for &s in members.iter().filter(|&&s| world.is_seed[s]) {
                    let d = pos[u].distance(&pos[s]);
                    if seed.is_none_or(|(bd, _)| d < bd) {
                        seed = Some((d, s));
                    }
                }
                if let Some((_, s)) = seed {
                    tx.push((Node::D2d(s), Node::D2d(u), pd));
                }
            }
            co_channel_rate(&world.gains, noise, a, &tx)
        })
        .sum()
}

/// Best anchored partition of the content game by full enumeration of the
/// `M^N` anchor assignments.
pub fn exhaustive_best_partition(world: &ContentWorld, budget: &OracleBudget) -> Result<(Partition, f64), OracleError> {
    let (n, m) = (world.players(), world.layout.cue.len());
    check_budget(m, n, budget)?;
    let mut digits = vec![0usize; n];
    let mut best = (digits.clone(), f64::NEG_INFINITY);
    loop {
        let v = content_total(world, m, &digits);
        if v > best.1 {
            best = (digits.clone(), v);
        }
        if !next_assignment(&mut digits, m) {
            break;
        }
    }
    Ok((Partition::new(best.0, m).expect("digits are anchors"), best.1))
}

/// No (player, target coalition) move strictly raises the combined value of
/// the two coalitions involved.
pub fn is_switch_stable<V: AnchoredValue + ?Sized>(partition: &Partition, value: &V) -> bool {
    let m = partition.anchors();
    let coalition = |a: usize, drop: Option<usize>, add: Option<usize>| -> Vec<usize> {
        (0..partition.players())
            .filter(|&u| (partition.anchor_of(u) == a && Some(u) != drop) || Some(u) == add)
            .collect()
    };
    for u in 0..partition.players() {
        let src = partition.anchor_of(u);
        for dst in (0..m).filter(|&d| d != src) {
            let before = value.value(src, &coalition(src, None, None)) + value.value(dst, &coalition(dst, None, None));
            let after = value.value(src, &coalition(src, Some(u), None)) + value.value(dst, &coalition(dst, None, Some(u)));
            if after > before {
                return false;
            }
        }
    }
    true
}

/// No pairwise merge and no two-way split of any coalition strictly raises
/// the summed value.
pub fn is_merge_split_stable<G: CoalitionalGame + ?Sized>(partition: &[Vec<usize>], game: &G) -> bool {
    for (i, a) in partition.iter().enumerate() {
        for b in &partition[i + 1..] {
            let mut u: Vec<usize> = a.iter().chain(b).copied().collect();
            u.sort_unstable();
            if game.value(&u) > game.value(a) + game.value(b) {
                return false;
            }
        }
    }
    for c in partition {
        let k = c.len();
        for mask in 1..(1u64 << k) - 1 {
            let left: Vec<usize> = (0..k).filter(|b| mask >> b & 1 == 1).map(|b| c[b]).collect();
            let right: Vec<usize> = (0..k).filter(|b| mask >> b & 1 == 0).map(|b| c[b]).collect();
            if game.value(&left) + game.value(&right) > game.value(c) {
                return false;
            }
        }
    }
    true
}

/// Largest eigenvalue of a non-negative matrix, by power iteration on the
/// shifted matrix `A + I` (primitive whenever `A` is irreducible), returned
/// as the Collatz-Wielandt upper bound.
pub fn spectral_radius(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    let mut x = vec![1.0; n];
    let mut upper = f64::INFINITY;
    for _ in 0..2000 {
        let y: Vec<f64> = (0..n).map(|i| x[i] + (0..n).map(|j| a[i][j] * x[j]).sum::<f64>()).collect();
        let hi = (0..n).map(|i| y[i] / x[i]).fold(f64::NEG_INFINITY, f64::max);
        let lo = (0..n).map(|i| y[i] / x[i]).fold(f64::INFINITY, f64::min);
        upper = hi - 1.0;
        let norm = y.iter().copied().fold(0.0, f64::max);
        x = y.iter().map(|v| (v / norm).max(1e-300)).collect();
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    upper
}

/// Normalised interference matrix `F_ij = target_i g_ij / g_ii` and noise
/// vector `u_i = target_i n_i / g_ii` of a power game.
pub fn normalized_system(instance: &PowerGameInstance) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = instance.players.len();
    let mut f = vec![vec![0.0; n]; n];
    let mut u = vec![0.0; n];
    for (i, pl) in instance.players.iter().enumerate() {
        let t = instance.sinr_targets[i];
        for j in 0..n {
            if j != i {
                f[i][j] = t * pl.cross_gains[j] / pl.direct_gain;
            }
        }
        u[i] = t * pl.external_w / pl.direct_gain;
    }
    (f, u)
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for k in col..n {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Componentwise-minimal powers meeting every SINR target exactly, from
/// `(I - F) p = u`.
pub fn solve_min_power(instance: &PowerGameInstance) -> Result<Vec<f64>, OracleError> {
    let (f, u) = normalized_system(instance);
    let rho = spectral_radius(&f);
    if rho >= 1.0 {
        return Err(OracleError::Infeasible { spectral_radius: rho });
    }
    let n = u.len();
    let a = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { -f[i][j] }).collect()).collect();
    let p = solve_dense(a, u);
    if p.iter().any(|&v| v > instance.p_max_w) {
        return Err(OracleError::PowerCapExceeded { powers: p });
    }
    Ok(p)
}

fn grid_at(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if n == 1 {
        lo
    } else if i + 1 == n {
        hi
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

/// Follower power maximising its utility at price `lambda` over
/// `grid_points` even levels in `[0, p_max]`, with its utility. Ties go to
/// the smaller power.
pub fn grid_follower_response(instance: &StackelbergInstance, lambda: f64, grid_points: usize) -> (f64, f64) {
    let n = grid_points.max(1);
    let floor = instance.sigma_w + instance.p_c_w * instance.g_cd;
    let mut best = (0.0, f64::NEG_INFINITY);
    for j in 0..n {
        let p = grid_at(0.0, instance.p_max_w, n, j);
        let v = log2_1p(p * instance.g_dd / floor) - lambda * p;
        if v > best.1 {
            best = (p, v);
        }
    }
    best
}

/// Stackelberg outcome by exhaustive search: `grid_points` prices over the
/// instance's price range and `grid_points` power levels over `[0, p_max]`.
/// Ties go to the smaller price and the smaller power.
pub fn grid_equilibrium(instance: &StackelbergInstance, grid_points: usize) -> StackelbergOutcome {
    let n = grid_points.max(1);
    let lg = &instance.lambda_grid;
    let u_l = |lambda: f64, p: f64| log2_1p(instance.p_c_w * instance.g_cc / (instance.sigma_w + p * instance.g_db)) + lambda * p;

    let mut best: Option<StackelbergOutcome> = None;
    for i in 0..n {
        let lambda = grid_at(lg.min, lg.max, n, i);
        let (p, u_follower) = grid_follower_response(instance, lambda, n);
        let leader = u_l(lambda, p);
        if best.as_ref().is_none_or(|b| leader > b.u_leader) {
            best = Some(StackelbergOutcome { lambda_star: lambda, p_star_w: p, u_leader: leader, u_follower });
        }
    }
    best.expect("at least one grid point")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::power_control::PowerPlayer;
    use crate::radio::{generate_topology, draw_gains, sum_rate};

    #[test]
    fn no_pairs_gives_cellular_allocation() {
        let params = RadioParams::default();
        let t = generate_topology(&params, 3, 0, 1).unwrap();
        let g = draw_gains(&t, &params, 2).unwrap();
        let (alloc, v) = exhaustive_best_allocation(&t, &g, &params, &OracleBudget::default()).unwrap();
        assert!(alloc.rb_of_d2d.is_empty());
        assert!((v - sum_rate(&alloc, &g, &params)).abs() < 1e-9);
    }

    #[test]
    fn one_pair_two_rbs_is_best_of_three() {
        let params = RadioParams::default();
        let t = generate_topology(&params, 2, 1, 4).unwrap();
        let g = draw_gains(&t, &params, 5).unwrap();
        let (alloc, v) = exhaustive_best_allocation(&t, &g, &params, &OracleBudget::default()).unwrap();
        let candidates = [Some(0), Some(1), None]
            .map(|rb| sum_rate(&Allocation::with_assignment(2, vec![rb], &params), &g, &params));
        let best = candidates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!((v - best).abs() < 1e-9 * best);
        assert!((sum_rate(&alloc, &g, &params) - v).abs() < 1e-9 * v);
    }

    #[test]
    fn budget_is_enforced() {
        let params = RadioParams::default();
        let t = generate_topology(&params, 3, 4, 1).unwrap();
        let g = draw_gains(&t, &params, 2).unwrap();
        let tiny = OracleBudget { max_assignments: 10, grid_points: 10 };
        assert!(matches!(
            exhaustive_best_allocation(&t, &g, &params, &tiny),
            Err(OracleError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn scalar_and_two_player_power_solves() {
        let single = PowerGameInstance {
            players: vec![PowerPlayer { direct_gain: 2.0, cross_gains: vec![0.0], external_w: 0.1 }],
            sinr_targets: vec![3.0],
            p_max_w: 10.0,
        };
        assert!((solve_min_power(&single).unwrap()[0] - 0.15).abs() < 1e-15);

        // p1 = 2(0.1 + 0.2 p2), p2 = 2(0.1 + 0.2 p1) => p = 0.2 / 0.6
        let pair = PowerGameInstance {
            players: (0..2)
                .map(|i| PowerPlayer {
                    direct_gain: 1.0,
                    cross_gains: (0..2).map(|j| if i == j { 0.0 } else { 0.2 }).collect(),
                    external_w: 0.1,
                })
                .collect(),
            sinr_targets: vec![2.0, 2.0],
            p_max_w: 10.0,
        };
        for v in solve_min_power(&pair).unwrap() {
            assert!((v - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn infeasible_power_game_detected() {
        let inst = PowerGameInstance {
            players: (0..2)
                .map(|i| PowerPlayer {
                    direct_gain: 1.0,
                    cross_gains: (0..2).map(|j| if i == j { 0.0 } else { 0.5 }).collect(),
                    external_w: 0.1,
                })
                .collect(),
            sinr_targets: vec![3.0, 3.0],
            p_max_w: 10.0,
        };
        match solve_min_power(&inst) {
            Err(OracleError::Infeasible { spectral_radius }) => assert!((spectral_radius - 1.5).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn spectral_radius_of_known_matrices() {
        assert!((spectral_radius(&[vec![0.0, 2.0], vec![0.5, 0.0]]) - 1.0).abs() < 1e-9);
        assert_eq!(spectral_radius(&[vec![0.0]]), 0.0);
        assert!((spectral_radius(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.125, 0.0, 0.0]]) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn grid_equilibrium_extremes() {
        let mut inst = StackelbergInstance::new(1.0, 0.3, 1.0, 0.2, 1.0, 0.1, 1.0);
        inst.lambda_grid.min = 1e6;
        inst.lambda_grid.max = 1e6;
        assert_eq!(grid_equilibrium(&inst, 50).p_star_w, 0.0);
        inst.lambda_grid.min = 0.0;
        inst.lambda_grid.max = 0.0;
        assert_eq!(grid_equilibrium(&inst, 50).p_star_w, inst.p_max_w);
    }
}
