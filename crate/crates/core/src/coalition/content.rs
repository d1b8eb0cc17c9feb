//! Popular-content distribution over a D2D LAN.
//!
//! `K` seeds hold a file that the other `N - K` normal UEs want. Inside a
//! coalition every normal UE is served by the nearest seed of the same
//! coalition on the anchor's RB, and all of those links plus the anchor's
//! cellular link interfere with one another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{run_switch_dynamics, total_value, AnchoredValue, CoalitionError, Partition};
use crate::radio::{
    cellular_link, link_sinr, rate, uniform_in_disc, GainTensor, Layout, Link, Node, Point, RadioParams,
};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContentScenario {
    pub n_d2d: usize,
    pub k_seeds: usize,
    pub m_cue: usize,
    pub file_packets: u64,
    /// Packets delivered per round for each bit/s/Hz of link rate.
    pub packets_per_rate_unit: f64,
}

impl Default for ContentScenario {
    fn default() -> Self {
        Self { n_d2d: 20, k_seeds: 4, m_cue: 6, file_packets: 500, packets_per_rate_unit: 10.0 }
    }
}

impl ContentScenario {
    pub fn validate(&self) -> Result<(), CoalitionError> {
        let bad = |m: &str| Err(CoalitionError::InvalidScenario(m.into()));
        if !(self.k_seeds > 0 && self.k_seeds <= self.n_d2d) {
            return bad("need 0 < k_seeds <= n_d2d");
        }
        if self.m_cue == 0 {
            return bad("need at least one cellular UE");
        }
        if self.file_packets == 0 {
            return bad("file_packets must be >= 1");
        }
        if !(self.packets_per_rate_unit >= 0.0 && self.packets_per_rate_unit.is_finite()) {
            return bad("packets_per_rate_unit must be finite and non-negative");
        }
        Ok(())
    }
}

/// CUEs and D2D UEs dropped uniformly in the cell.
pub fn generate_content_layout(params: &RadioParams, scenario: &ContentScenario, seed: u64) -> Layout {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let enb = Point::ORIGIN;
    let cue = (0..scenario.m_cue).map(|_| uniform_in_disc(&mut rng, enb, params.cell_radius)).collect();
    let d2d = (0..scenario.n_d2d).map(|_| uniform_in_disc(&mut rng, enb, params.cell_radius)).collect();
    Layout { enb, cue, d2d }
}

/// One channel realisation of the content scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentWorld {
    pub layout: Layout,
    pub gains: GainTensor,
    pub params: RadioParams,
    pub is_seed: Vec<bool>,
}

impl ContentWorld {
    pub fn players(&self) -> usize {
        self.is_seed.len()
    }

    /// Nearest seed among `members` to UE `u` (lowest index on ties).
    pub fn nearest_seed(&self, u: usize, members: &[usize]) -> Option<usize> {
        let here = self.layout.d2d[u];
        members
            .iter()
            .copied()
            .filter(|&s| self.is_seed[s])
            .min_by(|&a, &b| here.distance(&self.layout.d2d[a]).total_cmp(&here.distance(&self.layout.d2d[b])))
    }

    /// (seed, normal) links formed inside a coalition.
    pub fn d2d_links(&self, members: &[usize]) -> Vec<(usize, usize)> {
        members
            .iter()
            .filter(|&&u| !self.is_seed[u])
            .filter_map(|&u| self.nearest_seed(u, members).map(|s| (s, u)))
            .collect()
    }

    fn transmissions(&self, anchor: usize, pairs: &[(usize, usize)]) -> Vec<Link> {
        let p = self.params.p_d2d_w();
        std::iter::once(cellular_link(anchor, &self.params))
            .chain(pairs.iter().map(|&(s, u)| Link { tx: Node::D2d(s), rx: Node::D2d(u), power_w: p }))
            .collect()
    }

    /// SINR of every link in the coalition: the cellular link first, then
    /// one entry per served normal UE.
    pub fn link_sinrs(&self, anchor: usize, members: &[usize]) -> (f64, Vec<(usize, f64)>) {
        let pairs = self.d2d_links(members);
        let links = self.transmissions(anchor, &pairs);
        let noise = self.params.noise_w();
        let cell = link_sinr(&self.gains, noise, anchor, &links, 0);
        let d2d = pairs.iter().enumerate().map(|(i, &(_, u))| (u, link_sinr(&self.gains, noise, anchor, &links, i + 1))).collect();
        (cell, d2d)
    }

    /// Rate of every normal UE in `members` that has a seed to talk to.
    pub fn link_rates(&self, anchor: usize, members: &[usize]) -> (f64, Vec<(usize, f64)>) {
        let (cell, d2d) = self.link_sinrs(anchor, members);
        (rate(cell), d2d.into_iter().map(|(u, s)| (u, rate(s))).collect())
    }

    pub fn coalition_value(&self, anchor: usize, members: &[usize]) -> f64 {
        let (cell, d2d) = self.link_rates(anchor, members);
        cell + d2d.iter().map(|(_, r)| r).sum::<f64>()
    }

    /// Every D2D UE joins the coalition of its nearest cellular UE.
    pub fn nearest_anchor_partition(&self) -> Partition {
        let anchor_of = self
            .layout
            .d2d
            .iter()
            .map(|p| {
                (0..self.layout.cue.len())
                    .min_by(|&a, &b| p.distance(&self.layout.cue[a]).total_cmp(&p.distance(&self.layout.cue[b])))
                    .expect("at least one cellular UE")
            })
            .collect();
        Partition::new(anchor_of, self.layout.cue.len()).expect("anchors in range")
    }
}

impl AnchoredValue for ContentWorld {
    fn value(&self, anchor: usize, members: &[usize]) -> f64 {
        self.coalition_value(anchor, members)
    }
}

/// Sweep limit for the selfish baseline.
pub const NONCOOPERATIVE_SWEEPS: usize = 50;

/// Selfish RB choice: every normal UE simultaneously moves to the coalition
/// where its own link SINR would be highest given everyone else's previous
/// choice. Seeds stay put. Stops at a fixed point or after `max_sweeps`.
pub fn noncooperative_baseline(world: &ContentWorld, start: &Partition, max_sweeps: usize) -> Partition {
    let mut partition = start.clone();
    for _ in 0..max_sweeps {
        let members: Vec<Vec<usize>> = (0..partition.anchors()).map(|a| partition.members(a)).collect();
        let mut next = partition.clone();
        for u in (0..world.players()).filter(|&u| !world.is_seed[u]) {
            let current = partition.anchor_of(u);
            let own_sinr = |a: usize| -> f64 {
                let mut m: Vec<usize> = members[a].iter().copied().filter(|&x| x != u).collect();
                m.insert(m.partition_point(|&x| x < u), u);
                let (_, d2d) = world.link_sinrs(a, &m);
                d2d.iter().find(|(v, _)| *v == u).map_or(0.0, |(_, s)| *s)
            };
            let mut best = (current, own_sinr(current));
            for a in (0..partition.anchors()).filter(|&a| a != current) {
                let s = own_sinr(a);
                if s > best.1 {
                    best = (a, s);
                }
            }
            next.move_player(u, best.0);
        }
        if next == partition {
            break;
        }
        partition = next;
    }
    partition
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Allocator {
    Coalition,
    Noncooperative,
}

impl Allocator {
    pub fn name(&self) -> &'static str {
        match self {
            Allocator::Coalition => "coalition",
            Allocator::Noncooperative => "noncooperative",
        }
    }
}

/// Cumulative packets held by all UEs after each round; entry 0 is the
/// starting state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceCurve {
    pub cumulative_packets: Vec<u64>,
    /// Total coalition value of the partition used in each round (0 for the
    /// starting state).
    pub total_value: Vec<f64>,
}

/// Switch-dynamics move cap used inside the content simulation.
const SWITCH_STEP_LIMIT: usize = 100_000;

/// Round-based dissemination. Fading is redrawn every round, the allocator
/// is warm-started from the previous partition, each served normal UE gets
/// `floor(kappa * rate)` packets and UEs that finish become seeds for the
/// next round. The same `seed` yields the same layout and fading for every
/// allocator.
pub fn simulate_content_distribution(
    scenario: &ContentScenario,
    params: &RadioParams,
    allocator: Allocator,
    rounds: usize,
    seed: u64,
) -> Result<ServiceCurve, CoalitionError> {
    scenario.validate()?;
    params.validate().map_err(|e| CoalitionError::InvalidScenario(e.to_string()))?;
    let layout = generate_content_layout(params, scenario, derive_seed(seed, &[0]));
    let s = scenario.file_packets;
    let mut held: Vec<u64> = (0..scenario.n_d2d).map(|u| if u < scenario.k_seeds { s } else { 0 }).collect();
    let mut curve = ServiceCurve { cumulative_packets: vec![held.iter().sum()], total_value: vec![0.0] };
    let mut partition: Option<Partition> = None;

    for round in 1..=rounds {
        let gains = GainTensor::draw(&layout, scenario.m_cue, params, derive_seed(seed, &[1, round as u64]))
            .map_err(|e| CoalitionError::InvalidScenario(e.to_string()))?;
        let world = ContentWorld {
            layout: layout.clone(),
            gains,
            params: params.clone(),
            is_seed: held.iter().map(|&h| h >= s).collect(),
        };
        let start = partition.take().unwrap_or_else(|| world.nearest_anchor_partition());
        let current = match allocator {
            Allocator::Coalition => run_switch_dynamics(&start, &world, SWITCH_STEP_LIMIT)?,
            Allocator::Noncooperative => noncooperative_baseline(&world, &start, NONCOOPERATIVE_SWEEPS),
        };
        for a in 0..current.anchors() {
            let (_, rates) = world.link_rates(a, &current.members(a));
            for (u, r) in rates {
                let got = (scenario.packets_per_rate_unit * r).floor() as u64;
                held[u] = (held[u] + got).min(s);
            }
        }
        curve.cumulative_packets.push(held.iter().sum());
        curve.total_value.push(total_value(&current, &world));
        partition = Some(current);
    }
    Ok(curve)
}
