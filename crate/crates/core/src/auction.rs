//! Reverse iterative combinatorial auction (R-I-CA) for D2D channel
//! assignment.
//!
//! Resource blocks act as bidders and D2D pairs are the items. Every round
//! each bidder demands the package with the largest surplus at the posted
//! per-item prices; over-demanded items get more expensive by `epsilon`.
//! Prices only ever go up, so the clock stops after finitely many rounds.
//!
//! Package valuations do not depend on prices and are memoised, which is
//! what gives the auction its `O(n(2^m - 1) + t)` cost profile.

use std::collections::HashMap;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::radio::{
    cellular_link, link_sinr, rate, Allocation, GainTensor, Link, Node, RadioParams, Topology,
};

#[derive(Debug, Error)]
pub enum AuctionError {
    #[error("auction did not terminate within {rounds} rounds")]
    NotTerminated { rounds: usize, state: Box<AuctionState> },
    #[error("auction state has not terminated")]
    Unterminated,
    #[error("invalid auction: {0}")]
    InvalidInstance(String),
}

/// Value a bidder attaches to a package of items.
pub trait Valuation {
    /// `package` holds item indices in increasing order.
    fn value(&self, bidder: usize, package: &[usize]) -> f64;
}

impl<F: Fn(usize, &[usize]) -> f64> Valuation for F {
    fn value(&self, bidder: usize, package: &[usize]) -> f64 {
        self(bidder, package)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuctionSettings {
    pub epsilon: f64,
    pub initial_price: f64,
    /// Largest item count for exhaustive winner determination; beyond this
    /// bidders build packages greedily.
    pub exact_cap: usize,
}

impl Default for AuctionSettings {
    fn default() -> Self {
        Self { epsilon: 0.01, initial_price: 0.0, exact_cap: 12 }
    }
}

pub struct AuctionInstance<V> {
    pub n_items: usize,
    pub n_bidders: usize,
    pub valuation: V,
    pub settings: AuctionSettings,
}

impl<V: Valuation> AuctionInstance<V> {
    pub fn new(n_items: usize, n_bidders: usize, valuation: V, settings: AuctionSettings) -> Result<Self, AuctionError> {
        if !(settings.epsilon > 0.0) {
            return Err(AuctionError::InvalidInstance("epsilon must be > 0".into()));
        }
        if !(settings.initial_price >= 0.0) {
            return Err(AuctionError::InvalidInstance("initial price must be >= 0".into()));
        }
        if n_items > 63 {
            return Err(AuctionError::InvalidInstance("at most 63 items are supported".into()));
        }
        Ok(Self { n_items, n_bidders, valuation, settings })
    }

    pub fn exact(&self) -> bool {
        self.n_items <= self.settings.exact_cap
    }
}

pub type Package = Vec<usize>;

fn items_of(mask: u64) -> Package {
    (0..64).filter(|i| mask >> i & 1 == 1).collect()
}

fn mask_of(items: &[usize]) -> u64 {
    items.iter().fold(0, |m, &i| m | 1 << i)
}

/// Non-empty packages ordered by size, then lexicographically.
fn package_order(n_items: usize) -> Vec<u64> {
    (1..=n_items)
        .flat_map(|k| (0..n_items).combinations(k).map(|c| mask_of(&c)))
        .collect()
}

/// Memoising, call-counting view of a valuation.
struct Valuer<'a, V> {
    instance: &'a AuctionInstance<V>,
    memo: Vec<HashMap<u64, f64>>,
    reserve: Vec<f64>,
    calls: usize,
}

impl<'a, V: Valuation> Valuer<'a, V> {
    fn new(instance: &'a AuctionInstance<V>) -> Self {
        let reserve = (0..instance.n_bidders).map(|b| instance.valuation.value(b, &[])).collect();
        Self { instance, memo: vec![HashMap::new(); instance.n_bidders], reserve, calls: 0 }
    }

    fn value(&mut self, bidder: usize, mask: u64) -> f64 {
        if mask == 0 {
            return self.reserve[bidder];
        }
        if let Some(&v) = self.memo[bidder].get(&mask) {
            return v;
        }
        self.calls += 1;
        let v = self.instance.valuation.value(bidder, &items_of(mask));
        self.memo[bidder].insert(mask, v);
        v
    }

    fn surplus(&mut self, bidder: usize, mask: u64, prices: &[f64]) -> f64 {
        let cost: f64 = (0..self.instance.n_items).filter(|i| mask >> i & 1 == 1).map(|i| prices[i]).sum();
        self.value(bidder, mask) - cost
    }

    fn demand(&mut self, bidder: usize, prices: &[f64], order: &[u64]) -> u64 {
        let mut best = (0u64, self.reserve[bidder]);
        if self.instance.exact() {
            for &mask in order {
                let s = self.surplus(bidder, mask, prices);
                if s > best.1 {
                    best = (mask, s);
                }
            }
        } else {
            // add the best marginal item while it strictly helps
            loop {
                let mut step: Option<(u64, f64)> = None;
                for i in 0..self.instance.n_items {
                    if best.0 >> i & 1 == 1 {
                        continue;
                    }
                    let mask = best.0 | 1 << i;
                    let s = self.surplus(bidder, mask, prices);
                    if step.is_none_or(|(_, bs)| s > bs) {
                        step = Some((mask, s));
                    }
                }
                match step {
                    Some((mask, s)) if s > best.1 => best = (mask, s),
                    _ => break,
                }
            }
        }
        best.0
    }
}

/// Package with the highest surplus `value - sum(prices)` for `bidder`,
/// including the empty package. Ties go to the smaller package, then the
/// lexicographically smaller one.
pub fn bidder_demand<V: Valuation>(instance: &AuctionInstance<V>, prices: &[f64], bidder: usize) -> Package {
    let order = if instance.exact() { package_order(instance.n_items) } else { Vec::new() };
    items_of(Valuer::new(instance).demand(bidder, prices, &order))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionState {
    pub prices: Vec<f64>,
    /// Demanded package per bidder in the last round.
    pub demand: Vec<Package>,
    pub round: usize,
    pub valuation_calls: usize,
    /// Valuation evaluations made in each round.
    pub calls_per_round: Vec<usize>,
    /// Prices posted at the start of each round.
    pub price_history: Vec<Vec<f64>>,
    pub assignment: Vec<Option<usize>>,
    pub terminated: bool,
}

impl AuctionState {
    /// Items won by `bidder`.
    pub fn package_of(&self, bidder: usize) -> Package {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, b)| **b == Some(bidder))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Runs the ascending clock until no item is demanded by two bidders.
pub fn run_auction<V: Valuation>(instance: &AuctionInstance<V>, max_rounds: usize) -> Result<AuctionState, AuctionError> {
    let n = instance.n_items;
    let order = if instance.exact() { package_order(n) } else { Vec::new() };
    let mut valuer = Valuer::new(instance);
    let mut state = AuctionState {
        prices: vec![instance.settings.initial_price; n],
        demand: vec![Vec::new(); instance.n_bidders],
        round: 0,
        valuation_calls: 0,
        calls_per_round: Vec::new(),
        price_history: Vec::new(),
        assignment: vec![None; n],
        terminated: false,
    };
    loop {
        if state.round == max_rounds {
            state.valuation_calls = valuer.calls;
            return Err(AuctionError::NotTerminated { rounds: state.round, state: Box::new(state) });
        }
        state.round += 1;
        state.price_history.push(state.prices.clone());
        let before = valuer.calls;
        let demand: Vec<u64> = (0..instance.n_bidders).map(|b| valuer.demand(b, &state.prices, &order)).collect();
        state.calls_per_round.push(valuer.calls - before);

        let mut demanders = vec![0usize; n];
        for mask in &demand {
            for i in items_of(*mask) {
                demanders[i] += 1;
            }
        }
        state.demand = demand.iter().map(|&m| items_of(m)).collect();
        let over: Vec<usize> = (0..n).filter(|&i| demanders[i] >= 2).collect();
        if over.is_empty() {
            for (b, mask) in demand.iter().enumerate() {
                for i in items_of(*mask) {
                    state.assignment[i] = Some(b);
                }
            }
            state.terminated = true;
            state.valuation_calls = valuer.calls;
            return Ok(state);
        }
        for i in over {
            state.prices[i] += instance.settings.epsilon;
        }
    }
}

/// D2D sum-rate valuation: the rate of the bidder's cellular link plus the
/// rates of every D2D pair in the package sharing that RB, less a signalling
/// cost per package member.
pub struct D2dValuation<'a> {
    pub gains: &'a GainTensor,
    pub params: &'a RadioParams,
    pub signaling_cost: f64,
}

impl D2dValuation<'_> {
    pub fn links(&self, rb: usize, package: &[usize]) -> Vec<Link> {
        let p = self.params.p_d2d_w();
        std::iter::once(cellular_link(rb, self.params))
            .chain(package.iter().map(|&k| Link { tx: Topology::pair_tx(k), rx: Topology::pair_rx(k), power_w: p }))
            .collect()
    }

    pub fn sum_rate(&self, rb: usize, package: &[usize]) -> f64 {
        let links = self.links(rb, package);
        let noise = self.params.noise_w();
        (0..links.len()).map(|i| rate(link_sinr(self.gains, noise, rb, &links, i))).sum()
    }
}

impl Valuation for D2dValuation<'_> {
    fn value(&self, bidder: usize, package: &[usize]) -> f64 {
        self.sum_rate(bidder, package) - self.signaling_cost * package.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RicaConfig {
    /// Price increment as a fraction of the mean single-pair marginal value.
    pub epsilon_fraction: f64,
    pub initial_price: f64,
    /// Bits/s/Hz charged per package member.
    pub signaling_cost: f64,
    pub exact_cap: usize,
    pub max_rounds: usize,
}

impl Default for RicaConfig {
    fn default() -> Self {
        Self { epsilon_fraction: 0.01, initial_price: 0.0, signaling_cost: 0.05, exact_cap: 12, max_rounds: 1_000_000 }
    }
}

/// Auction over the D2D pairs of a drop, with `epsilon` scaled to the mean
/// value a single pair adds to a single RB.
pub fn d2d_auction<'a>(
    topology: &Topology,
    gains: &'a GainTensor,
    params: &'a RadioParams,
    config: &RicaConfig,
) -> Result<AuctionInstance<D2dValuation<'a>>, AuctionError> {
    let valuation = D2dValuation { gains, params, signaling_cost: config.signaling_cost };
    let (m, n) = (topology.rb_count, topology.pair_count());
    let mut total = 0.0;
    for b in 0..m {
        let base = valuation.value(b, &[]);
        for k in 0..n {
            total += valuation.value(b, &[k]) - base;
        }
    }
    let mean = if n > 0 { total / (m * n) as f64 } else { 0.0 };
    // fall back to a unit scale when pairs are worthless on average
    let scale = if mean > 0.0 { mean } else { 1.0 };
    let settings = AuctionSettings {
        epsilon: config.epsilon_fraction * scale,
        initial_price: config.initial_price,
        exact_cap: config.exact_cap,
    };
    AuctionInstance::new(n, m, valuation, settings)
}

/// Pairs in bidder `k`'s package transmit on RB `k` at full power; the rest
/// stay silent.
pub fn allocation_from_auction(
    state: &AuctionState,
    topology: &Topology,
    params: &RadioParams,
) -> Result<Allocation, AuctionError> {
    if !state.terminated {
        return Err(AuctionError::Unterminated);
    }
    if state.assignment.len() != topology.pair_count() {
        return Err(AuctionError::InvalidInstance("assignment does not match the topology".into()));
    }
    Ok(Allocation::with_assignment(topology.rb_count, state.assignment.clone(), params))
}

/// Every pair on an independent uniformly random RB.
pub fn random_allocation(topology: &Topology, params: &RadioParams, seed: u64) -> Allocation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rbs = (0..topology.pair_count()).map(|_| Some(rng.random_range(0..topology.rb_count))).collect();
    Allocation::with_assignment(topology.rb_count, rbs, params)
}

/// No D2D transmissions at all.
pub fn all_cellular_allocation(topology: &Topology, params: &RadioParams) -> Allocation {
    Allocation::cellular_only(topology.rb_count, topology.pair_count(), params)
}

/// RB used to relay a D2D flow in cellular mode: that of the cellular UE
/// nearest to the flow's source.
pub fn relay_rb(topology: &Topology, pair: usize) -> usize {
    let src = topology.d2d_pairs[pair].0;
    (0..topology.rb_count)
        .min_by(|&a, &b| src.distance(&topology.cue[a]).total_cmp(&src.distance(&topology.cue[b])))
        .expect("topology has at least one RB")
}

/// Two-hop rate of a D2D flow relayed through the eNB: the weaker of the
/// source-to-eNB and eNB-to-destination hops, halved for the two slots.
pub fn relay_rate(topology: &Topology, gains: &GainTensor, params: &RadioParams, pair: usize) -> f64 {
    let rb = relay_rb(topology, pair);
    let noise = params.noise_w();
    let up = rate(params.p_d2d_w() * gains.gain(Topology::pair_tx(pair), Node::Enb, rb) / noise);
    let down = rate(params.p_enb_w() * gains.gain(Node::Enb, Topology::pair_rx(pair), rb) / noise);
    0.5 * up.min(down)
}

/// System sum rate when every D2D flow goes through the eNB.
pub fn all_cellular_sum_rate(topology: &Topology, gains: &GainTensor, params: &RadioParams) -> f64 {
    let cellular = crate::radio::sum_rate(&all_cellular_allocation(topology, params), gains, params);
    cellular + (0..topology.pair_count()).map(|k| relay_rate(topology, gains, params, k)).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::{draw_gains, generate_topology, sum_rate};

    fn settings(eps: f64) -> AuctionSettings {
        AuctionSettings { epsilon: eps, initial_price: 0.0, exact_cap: 12 }
    }

    #[test]
    fn overpriced_items_are_not_demanded() {
        let inst = AuctionInstance::new(2, 1, |_: usize, p: &[usize]| 1.0 + p.len() as f64, settings(0.1)).unwrap();
        assert!(bidder_demand(&inst, &[2.0, 2.0], 0).is_empty());
    }

    #[test]
    fn single_item_surplus() {
        let inst = AuctionInstance::new(1, 1, |_: usize, p: &[usize]| 5.0 * p.len() as f64, settings(0.1)).unwrap();
        assert_eq!(bidder_demand(&inst, &[3.0], 0), vec![0]);
    }

    #[test]
    fn ties_prefer_smaller_then_lexicographic() {
        let prices = [0.0, 0.0, 0.0];
        let additive = AuctionInstance::new(3, 1, |_: usize, p: &[usize]| p.len() as f64, settings(0.1)).unwrap();
        assert_eq!(bidder_demand(&additive, &prices, 0), vec![0, 1, 2]);

        // every non-empty package is worth the same
        let flat = AuctionInstance::new(3, 1, |_: usize, p: &[usize]| if p.is_empty() { 0.0 } else { 1.0 }, settings(0.1)).unwrap();
        assert_eq!(bidder_demand(&flat, &prices, 0), vec![0]);
        assert_eq!(bidder_demand(&flat, &[0.5, 0.0, 0.0], 0), vec![1]);
    }

    #[test]
    fn single_bidder_single_item_round_one() {
        let inst = AuctionInstance::new(1, 1, |_: usize, p: &[usize]| 2.0 * p.len() as f64, settings(0.1)).unwrap();
        let st = run_auction(&inst, 10).unwrap();
        assert_eq!(st.round, 1);
        assert_eq!(st.assignment, vec![Some(0)]);
    }

    #[test]
    fn identical_bidders_terminate_within_bound() {
        let v = 1.0;
        let eps = 0.05;
        let inst = AuctionInstance::new(1, 2, move |_: usize, p: &[usize]| v * p.len() as f64, settings(eps)).unwrap();
        let st = run_auction(&inst, 1000).unwrap();
        let bound = ((v - 0.0) / eps).ceil() as usize + 1;
        assert!(st.round <= bound, "{} > {bound}", st.round);
        assert!(st.assignment[0].is_none() || st.demand.iter().filter(|d| !d.is_empty()).count() == 1);
    }

    #[test]
    fn no_items_terminates_immediately() {
        let inst = AuctionInstance::new(0, 3, |_: usize, _: &[usize]| 1.0, settings(0.1)).unwrap();
        let st = run_auction(&inst, 5).unwrap();
        assert_eq!(st.round, 1);
        assert!(st.assignment.is_empty());
    }

    #[test]
    fn round_limit_is_reported() {
        let inst = AuctionInstance::new(1, 2, |_: usize, p: &[usize]| 100.0 * p.len() as f64, settings(0.1)).unwrap();
        match run_auction(&inst, 3) {
            Err(AuctionError::NotTerminated { rounds, state }) => {
                assert_eq!(rounds, 3);
                assert!(!state.terminated);
                assert!(allocation_from_auction(&state, &generate_topology(&RadioParams::default(), 1, 1, 1).unwrap(), &RadioParams::default()).is_err());
            }
            other => panic!("expected non-termination, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_settings() {
        assert!(AuctionInstance::new(1, 1, |_: usize, _: &[usize]| 0.0, settings(0.0)).is_err());
    }

    #[test]
    fn auction_allocation_matches_valuation_bookkeeping() {
        let params = RadioParams::default();
        let topo = generate_topology(&params, 3, 4, 21).unwrap();
        let gains = draw_gains(&topo, &params, 22).unwrap();
        let inst = d2d_auction(&topo, &gains, &params, &RicaConfig::default()).unwrap();
        let st = run_auction(&inst, 1_000_000).unwrap();
        let alloc = allocation_from_auction(&st, &topo, &params).unwrap();
        let from_values: f64 = (0..3)
            .map(|b| {
                let pkg = st.package_of(b);
                inst.valuation.value(b, &pkg) + 0.05 * pkg.len() as f64
            })
            .sum();
        let direct = sum_rate(&alloc, &gains, &params);
        assert!((direct - from_values).abs() < 1e-9 * direct);
    }

    #[test]
    fn empty_auction_gives_cellular_allocation() {
        let params = RadioParams::default();
        let topo = generate_topology(&params, 3, 0, 2).unwrap();
        let gains = draw_gains(&topo, &params, 3).unwrap();
        let inst = d2d_auction(&topo, &gains, &params, &RicaConfig::default()).unwrap();
        let st = run_auction(&inst, 10).unwrap();
        assert_eq!(allocation_from_auction(&st, &topo, &params).unwrap(), all_cellular_allocation(&topo, &params));
    }

    #[test]
    fn single_assignment_maps_to_rb() {
        let params = RadioParams::default();
        let topo = generate_topology(&params, 3, 1, 2).unwrap();
        let st = AuctionState {
            prices: vec![0.0],
            demand: vec![vec![], vec![], vec![0]],
            round: 1,
            valuation_calls: 0,
            calls_per_round: vec![0],
            price_history: vec![vec![0.0]],
            assignment: vec![Some(2)],
            terminated: true,
        };
        let alloc = allocation_from_auction(&st, &topo, &params).unwrap();
        assert_eq!(alloc.rb_of_d2d, vec![Some(2)]);
    }

    #[test]
    fn random_allocation_deterministic() {
        let params = RadioParams::default();
        let topo = generate_topology(&params, 4, 6, 9).unwrap();
        assert_eq!(random_allocation(&topo, &params, 5), random_allocation(&topo, &params, 5));
        let empty = generate_topology(&params, 4, 0, 9).unwrap();
        assert_eq!(random_allocation(&empty, &params, 5), all_cellular_allocation(&empty, &params));
    }

    #[test]
    fn random_allocation_is_uniform_over_rbs() {
        let params = RadioParams::default();
        let m = 5;
        let topo = generate_topology(&params, m, 1, 9).unwrap();
        let draws = 10_000;
        let mut counts = vec![0usize; m];
        for seed in 0..draws {
            counts[random_allocation(&topo, &params, seed).rb_of_d2d[0].unwrap()] += 1;
        }
        let expected = draws as f64 / m as f64;
        let sigma = (draws as f64 * (1.0 / m as f64) * (1.0 - 1.0 / m as f64)).sqrt();
        for c in counts {
            assert!((c as f64 - expected).abs() <= 3.0 * sigma, "count {c}");
        }
    }

    #[test]
    fn all_cellular_relay_rates() {
        let params = RadioParams::default();
        let topo = generate_topology(&params, 3, 0, 4).unwrap();
        let gains = draw_gains(&topo, &params, 4).unwrap();
        let base = sum_rate(&all_cellular_allocation(&topo, &params), &gains, &params);
        assert_eq!(all_cellular_sum_rate(&topo, &gains, &params), base);

        let topo = generate_topology(&params, 3, 2, 4).unwrap();
        let gains = draw_gains(&topo, &params, 4).unwrap();
        let noise = params.noise_w();
        for k in 0..2 {
            let rb = relay_rb(&topo, k);
            let src = topo.d2d_pairs[k].0;
            assert!(topo.cue.iter().all(|c| src.distance(c) >= src.distance(&topo.cue[rb])));
            let up = (1.0 + params.p_d2d_w() * gains.gain(Node::D2d(2 * k), Node::Enb, rb) / noise).log2();
            let down = (1.0 + params.p_enb_w() * gains.gain(Node::Enb, Node::D2d(2 * k + 1), rb) / noise).log2();
            assert!((relay_rate(&topo, &gains, &params, k) - 0.5 * up.min(down)).abs() < 1e-12);
        }
    }

    #[test]
    fn relay_is_no_better_than_direct_cellular_hop() {
        // flow endpoints right next to the eNB, same gains as a cellular UE
        let params = RadioParams::default();
        let gains = GainTensor::from_fn(1, 2, 1, |_, _, _| 1e-8);
        let topo = Topology {
            enb_pos: crate::radio::Point::ORIGIN,
            cue: vec![crate::radio::Point::new(1.0, 0.0)],
            d2d_pairs: vec![(crate::radio::Point::new(0.5, 0.0), crate::radio::Point::new(0.0, 0.5))],
            rb_count: 1,
        };
        let single_hop = rate(params.p_enb_w() * 1e-8 / params.noise_w());
        assert!(relay_rate(&topo, &gains, &params, 0) <= single_hop);
    }
}
