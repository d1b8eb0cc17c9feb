//! Noncooperative power control among co-channel D2D transmitters.
//!
//! Each player wants the least transmit power that still meets its SINR
//! target. The best response to the others' powers is the target-SINR update
//! `p_i <- min(p_max, target_i * I_i(p) / g_ii)`, iterated simultaneously.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::radio::{GainTensor, Link, Node, RadioParams};

#[derive(Debug, Error, PartialEq)]
pub enum PowerError {
    #[error("player {0} has a non-positive direct gain")]
    ZeroDirectGain(usize),
    #[error("invalid power game: {0}")]
    InvalidInstance(String),
}

/// One co-channel link: its own gain, the gains from every other player's
/// transmitter into its receiver, and the interference-plus-noise it sees
/// from outside the game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPlayer {
    pub direct_gain: f64,
    /// `cross_gains[j]` is the gain from player `j`'s transmitter; the entry
    /// for the player itself is ignored.
    pub cross_gains: Vec<f64>,
    pub external_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerGameInstance {
    pub players: Vec<PowerPlayer>,
    pub sinr_targets: Vec<f64>,
    pub p_max_w: f64,
}

impl PowerGameInstance {
    pub fn validate(&self) -> Result<(), PowerError> {
        let n = self.players.len();
        if self.sinr_targets.len() != n {
            return Err(PowerError::InvalidInstance(format!(
                "{} targets for {} players",
                self.sinr_targets.len(),
                n
            )));
        }
        if !(self.p_max_w > 0.0) {
            return Err(PowerError::InvalidInstance("p_max_w must be > 0".into()));
        }
        for (i, pl) in self.players.iter().enumerate() {
            if !(pl.direct_gain > 0.0) {
                return Err(PowerError::ZeroDirectGain(i));
            }
            if pl.cross_gains.len() != n || pl.cross_gains.iter().any(|g| !(*g >= 0.0)) {
                return Err(PowerError::InvalidInstance(format!("bad cross gains for player {i}")));
            }
            if !(pl.external_w > 0.0) {
                return Err(PowerError::InvalidInstance(format!("player {i} has no noise floor")));
            }
        }
        if self.sinr_targets.iter().any(|t| !(*t > 0.0)) {
            return Err(PowerError::InvalidInstance("SINR targets must be > 0".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.players.len()
    }

    pub fn is_empty(&self) -> bool {
        self.players.is_empty()
    }

    /// Interference plus noise at player `i`'s receiver.
    pub fn interference(&self, i: usize, p: &[f64]) -> f64 {
        let pl = &self.players[i];
        pl.external_w
            + pl.cross_gains
                .iter()
                .zip(p)
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, (g, pj))| g * pj)
                .sum::<f64>()
    }

    pub fn sinr(&self, i: usize, p: &[f64]) -> f64 {
        p[i] * self.players[i].direct_gain / self.interference(i, p)
    }

    /// Builds a game from D2D pairs sharing one RB. The cellular link on that
    /// RB contributes fixed external interference.
    pub fn from_links(
        gains: &GainTensor,
        params: &RadioParams,
        rb: usize,
        d2d_links: &[(Node, Node)],
        cellular: Link,
        sinr_target: f64,
    ) -> Self {
        let noise = params.noise_w();
        let players = d2d_links
            .iter()
            .map(|&(tx, rx)| PowerPlayer {
                direct_gain: gains.gain(tx, rx, rb),
                cross_gains: d2d_links.iter().map(|&(otx, _)| if otx == tx { 0.0 } else { gains.gain(otx, rx, rb) }).collect(),
                external_w: noise + cellular.power_w * gains.gain(cellular.tx, rx, rb),
            })
            .collect();
        Self { players, sinr_targets: vec![sinr_target; d2d_links.len()], p_max_w: params.p_d2d_w() }
    }
}

/// One simultaneous best-response update.
pub fn best_response_step(instance: &PowerGameInstance, p: &[f64]) -> Result<Vec<f64>, PowerError> {
    instance.validate()?;
    Ok(step(instance, p))
}

fn step(instance: &PowerGameInstance, p: &[f64]) -> Vec<f64> {
    (0..instance.len())
        .map(|i| {
            let target = instance.sinr_targets[i];
            let next = if p[i] > 0.0 {
                target / instance.sinr(i, p) * p[i]
            } else {
                target * instance.interference(i, p) / instance.players[i].direct_gain
            };
            next.clamp(0.0, instance.p_max_w)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTrace {
    /// Starting vector followed by every update.
    pub iterates: Vec<Vec<f64>>,
    pub converged: bool,
    pub iterations: usize,
}

impl PowerTrace {
    pub fn final_powers(&self) -> &[f64] {
        self.iterates.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Relative slack allowed when checking that SINR targets are met.
pub const SINR_TARGET_SLACK: f64 = 1e-6;

/// Iterates best responses from `p0` until the max-norm change drops below
/// `tol` (watts) or `max_iters` updates have been made. Non-convergence is
/// reported through [`PowerTrace::converged`].
pub fn run_power_game(
    instance: &PowerGameInstance,
    p0: &[f64],
    max_iters: usize,
    tol: f64,
) -> Result<PowerTrace, PowerError> {
    instance.validate()?;
    if p0.len() != instance.len() {
        return Err(PowerError::InvalidInstance("initial vector has the wrong length".into()));
    }
    let mut iterates = vec![p0.iter().map(|v| v.clamp(0.0, instance.p_max_w)).collect::<Vec<_>>()];
    if instance.is_empty() {
        return Ok(PowerTrace { iterates, converged: true, iterations: 0 });
    }
    let mut settled = false;
    while iterates.len() <= max_iters {
        let prev = iterates.last().unwrap();
        let next = step(instance, prev);
        let change = next.iter().zip(prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        iterates.push(next);
        if change < tol {
            settled = true;
            break;
        }
    }
    let p = iterates.last().unwrap();
    let targets_met =
        (0..instance.len()).all(|i| instance.sinr(i, p) >= instance.sinr_targets[i] * (1.0 - SINR_TARGET_SLACK));
    Ok(PowerTrace { iterations: iterates.len() - 1, converged: settled && targets_met, iterates })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symmetric(cross: f64, noise: f64, target: f64) -> PowerGameInstance {
        PowerGameInstance {
            players: (0..2)
                .map(|i| PowerPlayer {
                    direct_gain: 1.0,
                    cross_gains: (0..2).map(|j| if i == j { 0.0 } else { cross }).collect(),
                    external_w: noise,
                })
                .collect(),
            sinr_targets: vec![target; 2],
            p_max_w: 1.0,
        }
    }

    #[test]
    fn single_player_one_step() {
        let inst = PowerGameInstance {
            players: vec![PowerPlayer { direct_gain: 2e-9, cross_gains: vec![0.0], external_w: 1e-13 }],
            sinr_targets: vec![10.0],
            p_max_w: 0.2,
        };
        let p = best_response_step(&inst, &[0.0]).unwrap();
        let expected = 10.0 * 1e-13 / 2e-9;
        assert!((p[0] - expected).abs() <= 1e-15 * expected);
        let again = best_response_step(&inst, &p).unwrap();
        assert!((again[0] - p[0]).abs() <= 1e-15 * expected);
    }

    #[test]
    fn symmetric_pair_matches_hand_solve() {
        // p = t(n + c p) => p = t n / (1 - t c)
        let (c, n, t) = (0.05, 0.01, 4.0);
        let inst = symmetric(c, n, t);
        let trace = run_power_game(&inst, &[0.0, 0.0], 1000, 1e-15).unwrap();
        assert!(trace.converged);
        let expected = t * n / (1.0 - t * c);
        for v in trace.final_powers() {
            assert!((v - expected).abs() <= 1e-6 * expected, "{v} vs {expected}");
        }
    }

    #[test]
    fn iterates_from_zero_are_monotone_and_bounded() {
        let inst = symmetric(0.1, 0.01, 5.0);
        let trace = run_power_game(&inst, &[0.0, 0.0], 1000, 1e-14).unwrap();
        for w in trace.iterates.windows(2) {
            for (a, b) in w[0].iter().zip(&w[1]) {
                assert!(b >= &(a * (1.0 - 1e-12)));
                assert!((0.0..=inst.p_max_w).contains(b));
            }
        }
    }

    #[test]
    fn infeasible_targets_report_non_convergence() {
        // t*c >= 1 has no finite solution.
        let inst = symmetric(0.5, 0.01, 3.0);
        let trace = run_power_game(&inst, &[0.0, 0.0], 1000, 1e-12).unwrap();
        assert!(!trace.converged);
        assert!(trace.final_powers().iter().all(|&v| v <= inst.p_max_w));
    }

    #[test]
    fn empty_game_is_trivially_converged() {
        let inst = PowerGameInstance { players: vec![], sinr_targets: vec![], p_max_w: 1.0 };
        let trace = run_power_game(&inst, &[], 10, 1e-9).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.iterations, 0);
    }

    #[test]
    fn zero_direct_gain_rejected() {
        let mut inst = symmetric(0.1, 0.01, 1.0);
        inst.players[1].direct_gain = 0.0;
        assert_eq!(best_response_step(&inst, &[0.1, 0.1]), Err(PowerError::ZeroDirectGain(1)));
    }
}
