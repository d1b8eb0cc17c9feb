//! Single-RB leader/follower pricing.
//!
//! The cellular user (leader) charges the D2D user (follower) a price per
//! watt of transmit power. The follower maximises
//! `log2(1 + p g_dd / (sigma + p_c g_cd)) - lambda p` over `p in [0, p_max]`,
//! which has a closed-form water-filling answer. The leader maximises its own
//! rate plus revenue over a price grid, anticipating that response.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;
use thiserror::Error;

use crate::radio::{cellular_link, rate, GainTensor, RadioParams, Topology};

#[derive(Debug, Error, PartialEq)]
pub enum StackelbergError {
    #[error("price must be non-negative, got {0}")]
    NegativePrice(f64),
    #[error("price grid is empty")]
    EmptyGrid,
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}

/// Evenly spaced prices over `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl PriceGrid {
    pub fn step(&self) -> f64 {
        if self.points > 1 {
            (self.max - self.min) / (self.points - 1) as f64
        } else {
            0.0
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.max
        } else {
            self.min + i as f64 * self.step()
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(|i| self.value(i))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackelbergInstance {
    pub g_dd: f64,
    /// D2D transmitter into the cellular receiver.
    pub g_db: f64,
    pub g_cc: f64,
    /// Cellular transmitter into the D2D receiver.
    pub g_cd: f64,
    pub p_c_w: f64,
    pub sigma_w: f64,
    pub p_max_w: f64,
    pub lambda_grid: PriceGrid,
}

/// Grid resolution used when none is specified.
pub const DEFAULT_GRID_POINTS: usize = 2000;

impl StackelbergInstance {
    /// Instance with the default price grid `[0, g_dd / (sigma ln 2)]`, which
    /// always reaches the price that prices the follower out.
    pub fn new(g_dd: f64, g_db: f64, g_cc: f64, g_cd: f64, p_c_w: f64, sigma_w: f64, p_max_w: f64) -> Self {
        Self {
            g_dd,
            g_db,
            g_cc,
            g_cd,
            p_c_w,
            sigma_w,
            p_max_w,
            lambda_grid: PriceGrid { min: 0.0, max: g_dd / (sigma_w * LN_2), points: DEFAULT_GRID_POINTS },
        }
    }

    /// Game between D2D pair `pair` and the cellular link on `rb`.
    pub fn from_topology(gains: &GainTensor, params: &RadioParams, pair: usize, rb: usize) -> Self {
        let cell = cellular_link(rb, params);
        let (tx, rx) = (Topology::pair_tx(pair), Topology::pair_rx(pair));
        Self::new(
            gains.gain(tx, rx, rb),
            gains.gain(tx, cell.rx, rb),
            gains.gain(cell.tx, cell.rx, rb),
            gains.gain(cell.tx, rx, rb),
            cell.power_w,
            params.noise_w(),
            params.p_d2d_w(),
        )
    }

    pub fn validate(&self) -> Result<(), StackelbergError> {
        let gains = [self.g_dd, self.g_db, self.g_cc, self.g_cd];
        if gains.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(StackelbergError::InvalidInstance("gains must be positive".into()));
        }
        if !(self.p_c_w >= 0.0 && self.p_max_w >= 0.0 && self.sigma_w > 0.0) {
            return Err(StackelbergError::InvalidInstance("powers must be non-negative, noise positive".into()));
        }
        let g = &self.lambda_grid;
        if g.points == 0 {
            return Err(StackelbergError::EmptyGrid);
        }
        if !(g.min >= 0.0 && g.max >= g.min) {
            return Err(StackelbergError::InvalidInstance("price grid must satisfy 0 <= min <= max".into()));
        }
        Ok(())
    }

    /// Interference plus noise at the D2D receiver.
    pub fn follower_floor(&self) -> f64 {
        self.sigma_w + self.p_c_w * self.g_cd
    }

    pub fn follower_utility(&self, lambda: f64, p: f64) -> f64 {
        rate(p * self.g_dd / self.follower_floor()) - lambda * p
    }

    pub fn leader_utility(&self, lambda: f64, p: f64) -> f64 {
        rate(self.p_c_w * self.g_cc / (self.sigma_w + p * self.g_db)) + lambda * p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackelbergOutcome {
    pub lambda_star: f64,
    pub p_star_w: f64,
    pub u_leader: f64,
    pub u_follower: f64,
}

pub fn follower_best_response(instance: &StackelbergInstance, lambda: f64) -> Result<f64, StackelbergError> {
    if !(lambda >= 0.0) {
        return Err(StackelbergError::NegativePrice(lambda));
    }
    Ok(best_power(instance, lambda))
}

fn best_power(instance: &StackelbergInstance, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return instance.p_max_w;
    }
    let p = 1.0 / (lambda * LN_2) - instance.follower_floor() / instance.g_dd;
    p.clamp(0.0, instance.p_max_w)
}

/// Grid search for the leader's price. Ties go to the smaller price.
pub fn leader_optimize(instance: &StackelbergInstance) -> Result<StackelbergOutcome, StackelbergError> {
    instance.validate()?;
    let mut best: Option<(f64, f64, f64)> = None;
    for lambda in instance.lambda_grid.iter() {
        let p = best_power(instance, lambda);
        let u = instance.leader_utility(lambda, p);
        if best.is_none_or(|(_, _, bu)| u > bu) {
            best = Some((lambda, p, u));
        }
    }
    let (lambda_star, p_star_w, u_leader) = best.expect("grid is non-empty");
    Ok(StackelbergOutcome {
        lambda_star,
        p_star_w,
        u_leader,
        u_follower: instance.follower_utility(lambda_star, p_star_w),
    })
}

/// Power levels probed when checking follower deviations.
pub const DEVIATION_POWER_POINTS: usize = 1001;

/// True when neither player gains more than `eps` by a unilateral grid
/// deviation: the follower over an even power grid at the posted price, the
/// leader over its price grid against the follower's best response.
pub fn verify_equilibrium(instance: &StackelbergInstance, outcome: &StackelbergOutcome, eps: f64) -> bool {
    let follower_ok = (0..DEVIATION_POWER_POINTS).all(|i| {
        let p = instance.p_max_w * i as f64 / (DEVIATION_POWER_POINTS - 1) as f64;
        instance.follower_utility(outcome.lambda_star, p) - outcome.u_follower <= eps
    });
    follower_ok
        && instance.lambda_grid.iter().all(|lambda| {
            instance.leader_utility(lambda, best_power(instance, lambda)) - outcome.u_leader <= eps
        })
}

/// Leader price and follower response on every grid point, for sweeps.
pub fn price_sweep(instance: &StackelbergInstance) -> Vec<StackelbergOutcome> {
    instance
        .lambda_grid
        .iter()
        .map(|lambda| {
            let p = best_power(instance, lambda);
            StackelbergOutcome {
                lambda_star: lambda,
                p_star_w: p,
                u_leader: instance.leader_utility(lambda, p),
                u_follower: instance.follower_utility(lambda, p),
            }
        })
        .collect()
}

/// Follower's channel choice: solve the single-RB game on every candidate RB
/// and keep the one with the highest follower utility (lowest RB on ties).
pub fn best_channel(
    gains: &GainTensor,
    params: &RadioParams,
    pair: usize,
) -> Result<(usize, StackelbergOutcome), StackelbergError> {
    let mut best: Option<(usize, StackelbergOutcome)> = None;
    for rb in 0..gains.rb_count() {
        let out = leader_optimize(&StackelbergInstance::from_topology(gains, params, pair, rb))?;
        if best.as_ref().is_none_or(|(_, b)| out.u_follower > b.u_follower) {
            best = Some((rb, out));
        }
    }
    best.ok_or(StackelbergError::EmptyGrid)
}
