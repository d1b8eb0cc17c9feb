//! Coalition formation among D2D UEs.
//!
//! Each coalition is anchored by exactly one cellular UE and therefore owns
//! that UE's RB. Coalitions on different RBs never interfere, so the game is
//! in strategic form and the total value `sum v(C)` is a potential for the
//! switch dynamics.

mod content;
mod merge_split;

pub use content::{
    generate_content_layout, noncooperative_baseline, simulate_content_distribution, Allocator,
    ContentScenario, ContentWorld, ServiceCurve, NONCOOPERATIVE_SWEEPS,
};
pub use merge_split::{merge_split, normalize, CoalitionalGame};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CoalitionError {
    #[error("dynamics did not settle within {0} steps")]
    StepLimit(usize),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

/// Assignment of every D2D UE to one anchored coalition.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    anchor_of: Vec<usize>,
    anchors: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coalition {
    pub anchor: usize,
    pub members: Vec<usize>,
}

impl Partition {
    pub fn new(anchor_of: Vec<usize>, anchors: usize) -> Result<Self, CoalitionError> {
        if anchors == 0 {
            return Err(CoalitionError::InvalidPartition("at least one anchor is required".into()));
        }
        if let Some(bad) = anchor_of.iter().find(|&&a| a >= anchors) {
            return Err(CoalitionError::InvalidPartition(format!("anchor {bad} out of range")));
        }
        Ok(Self { anchor_of, anchors })
    }

    /// Builds a partition from explicit coalitions; members must cover
    /// `0..players` exactly once.
    pub fn from_coalitions(coalitions: &[Coalition], players: usize) -> Result<Self, CoalitionError> {
        let mut anchor_of = vec![usize::MAX; players];
        for c in coalitions {
            for &u in &c.members {
                if u >= players || anchor_of[u] != usize::MAX {
                    return Err(CoalitionError::InvalidPartition(format!("player {u} placed twice or out of range")));
                }
                anchor_of[u] = c.anchor;
            }
        }
        if anchor_of.contains(&usize::MAX) {
            return Err(CoalitionError::InvalidPartition("some player has no coalition".into()));
        }
        let mut anchors: Vec<usize> = coalitions.iter().map(|c| c.anchor).collect();
        anchors.sort_unstable();
        if anchors.windows(2).any(|w| w[0] == w[1]) || anchors.iter().enumerate().any(|(i, &a)| i != a) {
            return Err(CoalitionError::InvalidPartition("anchors must be 0..M, each exactly once".into()));
        }
        Self::new(anchor_of, coalitions.len())
    }

    pub fn players(&self) -> usize {
        self.anchor_of.len()
    }

    pub fn anchors(&self) -> usize {
        self.anchors
    }

    pub fn anchor_of(&self, player: usize) -> usize {
        self.anchor_of[player]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.anchor_of
    }

    pub fn members(&self, anchor: usize) -> Vec<usize> {
        (0..self.players()).filter(|&u| self.anchor_of[u] == anchor).collect()
    }

    pub fn coalitions(&self) -> Vec<Coalition> {
        (0..self.anchors).map(|a| Coalition { anchor: a, members: self.members(a) }).collect()
    }

    pub fn move_player(&mut self, player: usize, anchor: usize) {
        assert!(anchor < self.anchors);
        self.anchor_of[player] = anchor;
    }
}

/// Value of an anchored coalition given its members (sorted ascending).
pub trait AnchoredValue {
    fn value(&self, anchor: usize, members: &[usize]) -> f64;
}

impl<F: Fn(usize, &[usize]) -> f64> AnchoredValue for F {
    fn value(&self, anchor: usize, members: &[usize]) -> f64 {
        self(anchor, members)
    }
}

pub fn total_value<V: AnchoredValue + ?Sized>(partition: &Partition, value: &V) -> f64 {
    (0..partition.anchors()).map(|a| value.value(a, &partition.members(a))).sum()
}

/// Executes the first switch (players in index order, targets in anchor
/// order) that strictly raises the combined value of the two coalitions it
/// touches.
pub fn switch_step<V: AnchoredValue + ?Sized>(partition: &Partition, value: &V) -> (Partition, bool) {
    let members: Vec<Vec<usize>> = (0..partition.anchors()).map(|a| partition.members(a)).collect();
    let current: Vec<f64> = members.iter().enumerate().map(|(a, m)| value.value(a, m)).collect();
    for player in 0..partition.players() {
        let src = partition.anchor_of(player);
        let left: Vec<usize> = members[src].iter().copied().filter(|&u| u != player).collect();
        let src_after = value.value(src, &left);
        for dst in (0..partition.anchors()).filter(|&d| d != src) {
            let mut joined = members[dst].clone();
            let at = joined.partition_point(|&u| u < player);
            joined.insert(at, player);
            if src_after + value.value(dst, &joined) > current[src] + current[dst] {
                let mut next = partition.clone();
                next.move_player(player, dst);
                return (next, true);
            }
        }
    }
    (partition.clone(), false)
}

/// Repeats [`switch_step`] until no switch helps. Each move strictly raises
/// the total value, so hitting `max_steps` points at a bug.
pub fn run_switch_dynamics<V: AnchoredValue + ?Sized>(
    partition0: &Partition,
    value: &V,
    max_steps: usize,
) -> Result<Partition, CoalitionError> {
    let mut partition = partition0.clone();
    for _ in 0..=max_steps {
        let (next, moved) = switch_step(&partition, value);
        if !moved {
            return Ok(next);
        }
        partition = next;
    }
    Err(CoalitionError::StepLimit(max_steps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![0, 1, 1], 2).is_ok());
        assert!(Partition::new(vec![0, 2], 2).is_err());
        assert!(Partition::new(vec![], 0).is_err());
        let ok = Partition::from_coalitions(
            &[Coalition { anchor: 0, members: vec![1] }, Coalition { anchor: 1, members: vec![0, 2] }],
            3,
        )
        .unwrap();
        assert_eq!(ok.assignment(), &[1, 0, 1]);
        assert!(Partition::from_coalitions(&[Coalition { anchor: 0, members: vec![0, 0] }], 1).is_err());
        assert!(Partition::from_coalitions(&[Coalition { anchor: 0, members: vec![0] }], 2).is_err());
        assert!(Partition::from_coalitions(
            &[Coalition { anchor: 0, members: vec![0] }, Coalition { anchor: 0, members: vec![1] }],
            2
        )
        .is_err());
    }

    // One player; the source coalition is worth `src[0] -> src[1]` and the
    // destination `dst[0] -> dst[1]` before and after the switch.
    fn two_coalition_value(src: (f64, f64), dst: (f64, f64)) -> impl Fn(usize, &[usize]) -> f64 {
        move |anchor, members| match (anchor, members.is_empty()) {
            (0, false) => src.0,
            (0, true) => src.1,
            (_, true) => dst.0,
            (_, false) => dst.1,
        }
    }

    #[test]
    fn strict_improvement_switches() {
        let p = Partition::new(vec![0], 2).unwrap();
        let (next, moved) = switch_step(&p, &two_coalition_value((3.0, 2.0), (4.0, 6.0)));
        assert!(moved);
        assert_eq!(next.anchor_of(0), 1);
    }

    #[test]
    fn ties_do_not_switch() {
        let p = Partition::new(vec![0], 2).unwrap();
        let (next, moved) = switch_step(&p, &two_coalition_value((3.0, 2.0), (4.0, 5.0)));
        assert!(!moved);
        assert_eq!(next, p);
    }

    #[test]
    fn stable_partition_is_returned_unchanged() {
        let p = Partition::new(vec![0, 1, 0], 2).unwrap();
        let additive = |_: usize, m: &[usize]| m.len() as f64;
        assert_eq!(run_switch_dynamics(&p, &additive, 0).unwrap(), p);
    }

    #[test]
    fn dynamics_spread_players_under_crowding_penalty() {
        let v = |_: usize, m: &[usize]| -((m.len() * m.len()) as f64);
        let p = Partition::new(vec![0; 4], 2).unwrap();
        let out = run_switch_dynamics(&p, &v, 100).unwrap();
        assert_eq!(out.members(0).len(), 2);
        assert_eq!(out.members(1).len(), 2);
    }
}
