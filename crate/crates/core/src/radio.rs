//! Single-cell radio model: geometry, path loss, Rayleigh block fading and
//! SINR/rate evaluation for cellular links with underlaid D2D links.
//!
//! Every game in this crate reads physical-layer truth from here. Nodes are
//! addressed by [`Node`]; a [`Layout`] places them in the plane and a
//! [`GainTensor`] stores one linear power gain per (transmitter, receiver,
//! resource block).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Distances below this are clamped before evaluating path loss.
pub const MIN_PATHLOSS_DISTANCE_M: f64 = 10.0;

#[derive(Debug, Error, PartialEq)]
pub enum RadioError {
    #[error("power {0} dBm is not finite")]
    NonFinitePower(f64),
    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error("invalid radio parameters: {0}")]
    InvalidParams(String),
    #[error("{receiver:?} is not receiving on resource block {rb}")]
    ReceiverInactive { receiver: Node, rb: usize },
    #[error("resource block {rb} out of range (have {rb_count})")]
    RbOutOfRange { rb: usize, rb_count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkDirection {
    /// Cellular UEs transmit to the eNB.
    Uplink,
    /// The eNB transmits to cellular UEs.
    #[default]
    Downlink,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioParams {
    pub cell_radius: f64,
    pub max_d2d_distance: f64,
    pub p_cue_dbm: f64,
    pub p_d2d_dbm: f64,
    /// Per-RB eNB transmit power, used in downlink.
    pub p_enb_dbm: f64,
    pub noise_dbm: f64,
    pub noise_figure_db: f64,
    pub carrier_ghz: f64,
    pub link_direction: LinkDirection,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            cell_radius: 500.0,
            max_d2d_distance: 20.0,
            p_cue_dbm: 23.0,
            p_d2d_dbm: 23.0,
            p_enb_dbm: 30.0,
            noise_dbm: -104.0,
            noise_figure_db: 7.0,
            carrier_ghz: 2.0,
            link_direction: LinkDirection::Downlink,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<(), RadioError> {
        let bad = |msg: String| Err(RadioError::InvalidParams(msg));
        if !(self.cell_radius.is_finite() && self.cell_radius > 0.0) {
            return bad(format!("cell_radius must be > 0 (got {})", self.cell_radius));
        }
        if !(self.max_d2d_distance > 0.0 && self.max_d2d_distance < self.cell_radius) {
            return bad(format!(
                "max_d2d_distance must satisfy 0 < max_d2d_distance < cell_radius (got {} with cell_radius {})",
                self.max_d2d_distance, self.cell_radius
            ));
        }
        if !(self.carrier_ghz.is_finite() && self.carrier_ghz > 0.0) {
            return bad(format!("carrier_ghz must be > 0 (got {})", self.carrier_ghz));
        }
        for (name, v) in [
            ("p_cue_dbm", self.p_cue_dbm),
            ("p_d2d_dbm", self.p_d2d_dbm),
            ("p_enb_dbm", self.p_enb_dbm),
            ("noise_dbm", self.noise_dbm),
            ("noise_figure_db", self.noise_figure_db),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite (got {v})"));
            }
        }
        Ok(())
    }

    pub fn p_cue_w(&self) -> f64 {
        watts(self.p_cue_dbm)
    }

    pub fn p_d2d_w(&self) -> f64 {
        watts(self.p_d2d_dbm)
    }

    pub fn p_enb_w(&self) -> f64 {
        watts(self.p_enb_dbm)
    }

    /// Transmit power of the cellular link on every RB for the configured
    /// direction.
    pub fn cellular_tx_power_w(&self) -> f64 {
        match self.link_direction {
            LinkDirection::Uplink => self.p_cue_w(),
            LinkDirection::Downlink => self.p_enb_w(),
        }
    }

    pub fn noise_w(&self) -> f64 {
        watts(self.noise_dbm + self.noise_figure_db)
    }
}

fn watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn dbm_to_watt(p_dbm: f64) -> Result<f64, RadioError> {
    if !p_dbm.is_finite() {
        return Err(RadioError::NonFinitePower(p_dbm));
    }
    Ok(watts(p_dbm))
}

/// Thermal noise plus receiver noise figure, in watts.
pub fn effective_noise_w(params: &RadioParams) -> Result<f64, RadioError> {
    params.validate()?;
    dbm_to_watt(params.noise_dbm + params.noise_figure_db)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Propagation {
    Los,
    Nlos,
}

/// Urban-micro log-distance path loss in dB, with the distance clamped from
/// below at [`MIN_PATHLOSS_DISTANCE_M`].
pub fn pathloss_db(d_m: f64, carrier_ghz: f64, propagation: Propagation) -> Result<f64, RadioError> {
    if !(d_m > 0.0) {
        return Err(RadioError::NonPositiveDistance(d_m));
    }
    let d = d_m.max(MIN_PATHLOSS_DISTANCE_M).log10();
    let f = carrier_ghz.log10();
    Ok(match propagation {
        Propagation::Los => 22.0 * d + 28.0 + 20.0 * f,
        Propagation::Nlos => 36.7 * d + 22.7 + 26.0 * f,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Node {
    Enb,
    Cue(usize),
    /// A D2D-capable device. Pair `k` of a [`Topology`] owns devices `2k`
    /// (transmitter) and `2k + 1` (receiver).
    D2d(usize),
}

/// Positions of every node in the cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub enb: Point,
    pub cue: Vec<Point>,
    pub d2d: Vec<Point>,
}

impl Layout {
    pub fn node_count(&self) -> usize {
        1 + self.cue.len() + self.d2d.len()
    }

    pub fn position(&self, node: Node) -> Point {
        match node {
            Node::Enb => self.enb,
            Node::Cue(i) => self.cue[i],
            Node::D2d(i) => self.d2d[i],
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        std::iter::once(Node::Enb)
            .chain((0..self.cue.len()).map(Node::Cue))
            .chain((0..self.d2d.len()).map(Node::D2d))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub enb_pos: Point,
    pub cue: Vec<Point>,
    pub d2d_pairs: Vec<(Point, Point)>,
    /// One RB per cellular UE.
    pub rb_count: usize,
}

impl Topology {
    pub fn pair_count(&self) -> usize {
        self.d2d_pairs.len()
    }

    pub fn pair_tx(pair: usize) -> Node {
        Node::D2d(2 * pair)
    }

    pub fn pair_rx(pair: usize) -> Node {
        Node::D2d(2 * pair + 1)
    }

    pub fn layout(&self) -> Layout {
        Layout {
            enb: self.enb_pos,
            cue: self.cue.clone(),
            d2d: self.d2d_pairs.iter().flat_map(|&(tx, rx)| [tx, rx]).collect(),
        }
    }
}

/// Uniform point in a disc of the given radius.
pub fn uniform_in_disc<R: Rng + ?Sized>(rng: &mut R, center: Point, radius: f64) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = 2.0 * PI * rng.random::<f64>();
    Point::new(center.x + r * theta.cos(), center.y + r * theta.sin())
}

/// Drops `m` cellular UEs and `n` D2D pairs in a disc cell centred on the eNB.
pub fn generate_topology(params: &RadioParams, m: usize, n: usize, seed: u64) -> Result<Topology, RadioError> {
    params.validate()?;
    if m == 0 {
        return Err(RadioError::InvalidParams("at least one cellular UE is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let enb = Point::ORIGIN;
    let cue = (0..m).map(|_| uniform_in_disc(&mut rng, enb, params.cell_radius)).collect();
    let d2d_pairs = (0..n)
        .map(|_| {
            let tx = uniform_in_disc(&mut rng, enb, params.cell_radius);
            let rx = loop {
                let rx = uniform_in_disc(&mut rng, tx, params.max_d2d_distance);
                if rx.distance(&enb) <= params.cell_radius {
                    break rx;
                }
            };
            (tx, rx)
        })
        .collect();
    Ok(Topology { enb_pos: enb, cue, d2d_pairs, rb_count: m })
}

/// Link propagation policy: device-to-device links are line-of-sight, any
/// link touching the eNB or a cellular UE is not.
pub fn propagation_between(a: Node, b: Node) -> Propagation {
    match (a, b) {
        (Node::D2d(_), Node::D2d(_)) => Propagation::Los,
        _ => Propagation::Nlos,
    }
}

/// Linear power gains indexed by (rb, tx, rx).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainTensor {
    cue_count: usize,
    d2d_count: usize,
    rb_count: usize,
    gains: Vec<f64>,
}

impl GainTensor {
    /// Path loss times an independent unit-mean exponential fading draw per
    /// (tx, rx, rb). Self-links are stored as 1.0 and never used.
    pub fn draw(layout: &Layout, rb_count: usize, params: &RadioParams, seed: u64) -> Result<Self, RadioError> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes: Vec<Node> = layout.nodes().collect();
        let mut pathloss = Vec::with_capacity(nodes.len() * nodes.len());
        for &tx in &nodes {
            for &rx in &nodes {
                if tx == rx {
                    pathloss.push(1.0);
                    continue;
                }
                let d = layout.position(tx).distance(&layout.position(rx));
                // co-located devices fall into the clamp region
                let pl = pathloss_db(d.max(f64::MIN_POSITIVE), params.carrier_ghz, propagation_between(tx, rx))?;
                pathloss.push(10f64.powf(-pl / 10.0));
            }
        }
        let mut gains = Vec::with_capacity(rb_count * pathloss.len());
        for _ in 0..rb_count {
            for (k, &pl) in pathloss.iter().enumerate() {
                let (tx, rx) = (k / nodes.len(), k % nodes.len());
                if tx == rx {
                    gains.push(1.0);
                } else {
                    let fading: f64 = rng.sample(Exp1);
                    // Exp1 can return exactly 0 with vanishing probability
                    gains.push(pl * fading.max(f64::MIN_POSITIVE));
                }
            }
        }
        Ok(Self { cue_count: layout.cue.len(), d2d_count: layout.d2d.len(), rb_count, gains })
    }

    /// Builds a tensor from an explicit gain function; useful for hand-built
    /// instances.
    pub fn from_fn(
        cue_count: usize,
        d2d_count: usize,
        rb_count: usize,
        mut gain: impl FnMut(Node, Node, usize) -> f64,
    ) -> Self {
        let mut t = Self { cue_count, d2d_count, rb_count, gains: Vec::new() };
        let nodes = t.nodes();
        for rb in 0..rb_count {
            for &tx in &nodes {
                for &rx in &nodes {
                    t.gains.push(if tx == rx { 1.0 } else { gain(tx, rx, rb) });
                }
            }
        }
        t
    }

    fn nodes(&self) -> Vec<Node> {
        std::iter::once(Node::Enb)
            .chain((0..self.cue_count).map(Node::Cue))
            .chain((0..self.d2d_count).map(Node::D2d))
            .collect()
    }

    pub fn rb_count(&self) -> usize {
        self.rb_count
    }

    pub fn node_count(&self) -> usize {
        1 + self.cue_count + self.d2d_count
    }

    fn index(&self, node: Node) -> usize {
        match node {
            Node::Enb => 0,
            Node::Cue(i) => {
                assert!(i < self.cue_count, "cellular UE {i} out of range");
                1 + i
            }
            Node::D2d(i) => {
                assert!(i < self.d2d_count, "D2D device {i} out of range");
                1 + self.cue_count + i
            }
        }
    }

    pub fn gain(&self, tx: Node, rx: Node, rb: usize) -> f64 {
        assert!(rb < self.rb_count, "rb {rb} out of range");
        let n = self.node_count();
        self.gains[rb * n * n + self.index(tx) * n + self.index(rx)]
    }

    pub fn values(&self) -> &[f64] {
        &self.gains
    }
}

pub fn draw_gains(topology: &Topology, params: &RadioParams, seed: u64) -> Result<GainTensor, RadioError> {
    GainTensor::draw(&topology.layout(), topology.rb_count, params, seed)
}

/// An active transmission on some RB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub tx: Node,
    pub rx: Node,
    pub power_w: f64,
}

/// SINR of `links[target]` when every link in `links` is active on `rb`.
pub fn link_sinr(gains: &GainTensor, noise_w: f64, rb: usize, links: &[Link], target: usize) -> f64 {
    let own = links[target];
    let interference: f64 = links
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != target)
        .map(|(_, l)| l.power_w * gains.gain(l.tx, own.rx, rb))
        .sum();
    own.power_w * gains.gain(own.tx, own.rx, rb) / (noise_w + interference)
}

/// Shannon spectral efficiency in bits/s/Hz.
pub fn rate(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// The cellular link served on `rb` for the given direction.
pub fn cellular_link(rb: usize, params: &RadioParams) -> Link {
    match params.link_direction {
        LinkDirection::Uplink => Link { tx: Node::Cue(rb), rx: Node::Enb, power_w: params.p_cue_w() },
        LinkDirection::Downlink => Link { tx: Node::Enb, rx: Node::Cue(rb), power_w: params.p_enb_w() },
    }
}

/// RB assignment of every D2D pair plus per-link transmit powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub rb_of_d2d: Vec<Option<usize>>,
    /// Cellular link power on each RB.
    pub cellular_power_w: Vec<f64>,
    pub d2d_power_w: Vec<f64>,
}

impl Allocation {
    /// Every D2D pair silent, every cellular link at full power.
    pub fn cellular_only(rb_count: usize, pair_count: usize, params: &RadioParams) -> Self {
        Self {
            rb_of_d2d: vec![None; pair_count],
            cellular_power_w: vec![params.cellular_tx_power_w(); rb_count],
            d2d_power_w: vec![params.p_d2d_w(); pair_count],
        }
    }

    /// D2D pairs placed per `rb_of_d2d` at full D2D power.
    pub fn with_assignment(rb_count: usize, rb_of_d2d: Vec<Option<usize>>, params: &RadioParams) -> Self {
        let n = rb_of_d2d.len();
        Self {
            rb_of_d2d,
            cellular_power_w: vec![params.cellular_tx_power_w(); rb_count],
            d2d_power_w: vec![params.p_d2d_w(); n],
        }
    }

    pub fn rb_count(&self) -> usize {
        self.cellular_power_w.len()
    }

    pub fn pairs_on(&self, rb: usize) -> impl Iterator<Item = usize> + '_ {
        self.rb_of_d2d
            .iter()
            .enumerate()
            .filter(move |(_, r)| **r == Some(rb))
            .map(|(k, _)| k)
    }

    /// Active links on `rb`: the cellular link first, then D2D pairs in
    /// index order.
    pub fn links_on(&self, rb: usize, params: &RadioParams) -> Vec<Link> {
        let mut cell = cellular_link(rb, params);
        cell.power_w = self.cellular_power_w[rb];
        std::iter::once(cell)
            .chain(self.pairs_on(rb).map(|k| Link {
                tx: Topology::pair_tx(k),
                rx: Topology::pair_rx(k),
                power_w: self.d2d_power_w[k],
            }))
            .collect()
    }
}

/// SINR at `receiver` on `rb` under `allocation`.
pub fn sinr(
    allocation: &Allocation,
    gains: &GainTensor,
    params: &RadioParams,
    receiver: Node,
    rb: usize,
) -> Result<f64, RadioError> {
    if rb >= allocation.rb_count() {
        return Err(RadioError::RbOutOfRange { rb, rb_count: allocation.rb_count() });
    }
    let links = allocation.links_on(rb, params);
    let target = links
        .iter()
        .position(|l| l.rx == receiver)
        .ok_or(RadioError::ReceiverInactive { receiver, rb })?;
    Ok(link_sinr(gains, params.noise_w(), rb, &links, target))
}

/// Sum spectral efficiency over every active cellular and D2D link.
pub fn sum_rate(allocation: &Allocation, gains: &GainTensor, params: &RadioParams) -> f64 {
    let noise = params.noise_w();
    (0..allocation.rb_count())
        .map(|rb| {
            let links = allocation.links_on(rb, params);
            (0..links.len()).map(|i| rate(link_sinr(gains, noise, rb, &links, i))).sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn dbm_conversions() {
        assert_eq!(dbm_to_watt(0.0).unwrap(), 1.0e-3);
        assert!(rel(dbm_to_watt(23.0).unwrap(), 0.199_526_231_496_887_9, 1e-12));
        assert!(rel(dbm_to_watt(-104.0).unwrap(), 3.981_071_705_534_97e-14, 1e-12));
        assert!(dbm_to_watt(f64::NAN).is_err());
        assert!(dbm_to_watt(f64::INFINITY).is_err());
    }

    #[test]
    fn noise_figure_adds_in_db() {
        let mut p = RadioParams { noise_figure_db: 0.0, ..Default::default() };
        assert_eq!(effective_noise_w(&p).unwrap(), dbm_to_watt(-104.0).unwrap());
        p.noise_figure_db = 7.0;
        assert!(rel(effective_noise_w(&p).unwrap(), dbm_to_watt(-97.0).unwrap(), 1e-12));
        p.noise_dbm = 0.0;
        p.noise_figure_db = 3.0;
        assert!(rel(effective_noise_w(&p).unwrap(), dbm_to_watt(3.0).unwrap(), 1e-12));
    }

    #[test]
    fn pathloss_reference_points() {
        let at_clamp = pathloss_db(10.0, 2.0, Propagation::Los).unwrap();
        assert!(rel(at_clamp, 22.0 + 28.0 + 20.0 * 2f64.log10(), 1e-12));
        assert_eq!(pathloss_db(1.0, 2.0, Propagation::Los).unwrap(), at_clamp);
        let at_100 = pathloss_db(100.0, 2.0, Propagation::Los).unwrap();
        assert!(rel(at_100, 44.0 + 28.0 + 20.0 * 2f64.log10(), 1e-12));
        let nlos = pathloss_db(100.0, 2.0, Propagation::Nlos).unwrap();
        assert!(rel(nlos, 73.4 + 22.7 + 26.0 * 2f64.log10(), 1e-12));
        assert_eq!(pathloss_db(0.0, 2.0, Propagation::Los), Err(RadioError::NonPositiveDistance(0.0)));
        assert!(pathloss_db(-3.0, 2.0, Propagation::Nlos).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(RadioParams::default().validate().is_ok());
        let p = RadioParams { cell_radius: -1.0, ..Default::default() };
        assert!(p.validate().unwrap_err().to_string().contains("cell_radius"));
        let p = RadioParams { max_d2d_distance: 600.0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = RadioParams { p_d2d_dbm: f64::NAN, ..Default::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn topology_basics() {
        let params = RadioParams::default();
        let t = generate_topology(&params, 3, 0, 1).unwrap();
        assert_eq!((t.cue.len(), t.pair_count(), t.rb_count), (3, 0, 3));
        assert_eq!(t, generate_topology(&params, 3, 0, 1).unwrap());
        assert!(generate_topology(&params, 0, 2, 1).is_err());

        let t = generate_topology(&params, 10, 10, 7).unwrap();
        for (tx, rx) in &t.d2d_pairs {
            assert!(tx.distance(rx) <= 20.0);
            assert!(rx.distance(&t.enb_pos) <= 500.0);
        }
    }

    #[test]
    fn fading_has_unit_mean() {
        // Two nodes at a known distance so path loss can be divided out.
        let layout = Layout { enb: Point::ORIGIN, cue: vec![Point::new(100.0, 0.0)], d2d: vec![] };
        let params = RadioParams::default();
        let gains = GainTensor::draw(&layout, 10_000, &params, 3).unwrap();
        let pl = 10f64.powf(-pathloss_db(100.0, 2.0, Propagation::Nlos).unwrap() / 10.0);
        let mean = (0..10_000).map(|rb| gains.gain(Node::Enb, Node::Cue(0), rb) / pl).sum::<f64>() / 10_000.0;
        assert!((mean - 1.0).abs() < 0.05, "mean fading {mean}");
    }

    #[test]
    fn gains_positive_and_deterministic() {
        let params = RadioParams::default();
        let t = generate_topology(&params, 4, 5, 11).unwrap();
        let g = draw_gains(&t, &params, 99).unwrap();
        assert!(g.values().iter().all(|&v| v > 0.0 && v.is_finite()));
        assert_eq!(g, draw_gains(&t, &params, 99).unwrap());
        assert_ne!(g, draw_gains(&t, &params, 100).unwrap());
    }

    #[test]
    fn sinr_unity_without_interference() {
        let params = RadioParams::default();
        let noise = params.noise_w();
        let p = params.p_enb_w();
        let gains = GainTensor::from_fn(1, 0, 1, |_, _, _| noise / p);
        let alloc = Allocation::cellular_only(1, 0, &params);
        let s = sinr(&alloc, &gains, &params, Node::Cue(0), 0).unwrap();
        assert!(rel(s, 1.0, 1e-12));
        assert!(sinr(&alloc, &gains, &params, Node::Cue(0), 1).is_err());
        assert_eq!(
            sinr(&alloc, &gains, &params, Node::Enb, 0),
            Err(RadioError::ReceiverInactive { receiver: Node::Enb, rb: 0 })
        );
    }

    #[test]
    fn sinr_hand_formula_single_pair() {
        // Downlink, one CUE and one pair sharing RB 0.
        let params = RadioParams::default();
        let g_dd = 1e-9;
        let g_cd = 1e-10;
        let g_other = 1e-11;
        let gains = GainTensor::from_fn(1, 2, 1, |tx, rx, _| match (tx, rx) {
            (Node::D2d(0), Node::D2d(1)) => g_dd,
            (Node::Enb, Node::D2d(1)) => g_cd,
            _ => g_other,
        });
        let alloc = Allocation::with_assignment(1, vec![Some(0)], &params);
        let got = sinr(&alloc, &gains, &params, Node::D2d(1), 0).unwrap();
        let p_d = 10f64.powf((23.0 - 30.0) / 10.0);
        let p_b = 10f64.powf((30.0 - 30.0) / 10.0);
        let sigma = 10f64.powf((-97.0 - 30.0) / 10.0);
        assert!(rel(got, p_d * g_dd / (sigma + p_b * g_cd), 1e-12));

        let cell = sinr(&alloc, &gains, &params, Node::Cue(0), 0).unwrap();
        assert!(rel(cell, p_b * g_other / (sigma + p_d * g_other), 1e-12));
    }

    #[test]
    fn rate_values() {
        assert_eq!(rate(0.0), 0.0);
        assert_eq!(rate(1.0), 1.0);
        assert_eq!(rate(3.0), 2.0);
    }

    #[test]
    fn sum_rate_decomposes() {
        let params = RadioParams::default();
        let t = generate_topology(&params, 3, 1, 5).unwrap();
        let g = draw_gains(&t, &params, 6).unwrap();
        let base = Allocation::cellular_only(3, 1, &params);
        let cellular: f64 =
            (0..3).map(|rb| rate(sinr(&base, &g, &params, Node::Cue(rb), rb).unwrap())).sum();
        assert!(rel(sum_rate(&base, &g, &params), cellular, 1e-12));

        // Pair on RB 1 leaves RBs 0 and 2 untouched.
        let with = Allocation::with_assignment(3, vec![Some(1)], &params);
        let pair = rate(sinr(&with, &g, &params, Topology::pair_rx(0), 1).unwrap());
        let cell1 = rate(sinr(&with, &g, &params, Node::Cue(1), 1).unwrap());
        let expected = cellular - rate(sinr(&base, &g, &params, Node::Cue(1), 1).unwrap()) + cell1 + pair;
        assert!(rel(sum_rate(&with, &g, &params), expected, 1e-12));
    }

    #[test]
    fn uplink_cellular_receiver_is_enb() {
        let params = RadioParams { link_direction: LinkDirection::Uplink, ..Default::default() };
        let t = generate_topology(&params, 2, 1, 5).unwrap();
        let g = draw_gains(&t, &params, 6).unwrap();
        let alloc = Allocation::with_assignment(2, vec![Some(0)], &params);
        assert!(sinr(&alloc, &g, &params, Node::Enb, 0).is_ok());
        assert!(sinr(&alloc, &g, &params, Node::Cue(0), 0).is_err());
    }
}
