//! System-level simulation of D2D pairs underlaying a cellular cell, with
//! game-theoretic resource allocators and brute-force references for them.
//!
//! * [`radio`]: topology, path loss, fading, SINR and rates.
//! * [`power_control`]: best-response power game with SINR targets.
//! * [`stackelberg`]: pricing game between a cellular leader and a D2D follower.
//! * [`auction`]: ascending-clock combinatorial auction of D2D pairs to RBs.
//! * [`coalition`]: coalition formation for content distribution.
//! * [`oracle`]: exhaustive references used to check the allocators.
//! * [`harness`]: configs, Monte Carlo runs and CSV output.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod auction;
pub mod coalition;
pub mod harness;
pub mod oracle;
pub mod power_control;
pub mod radio;
pub mod seed;
pub mod stackelberg;
