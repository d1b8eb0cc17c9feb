//! Per-group statistics over raw Monte Carlo rows.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// One scheme's metric on one drop at one sweep point (or round).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub key: u64,
    pub scheme: String,
    pub drop_seed: u64,
    /// NaN marks a drop on which the scheme failed.
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    /// Sample standard deviation; 0 when there is a single sample.
    pub stddev: f64,
    pub count: usize,
    pub single_sample: bool,
}

impl Stats {
    pub fn stderr(&self) -> f64 {
        self.stddev / (self.count as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub key: u64,
    pub scheme: String,
    /// `None` when the group holds no usable rows.
    pub stats: Option<Stats>,
    pub errors: usize,
}

/// Paired comparison of two schemes over the drops both completed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDiff {
    pub key: u64,
    pub a: String,
    pub b: String,
    /// Mean of `a - b`.
    pub mean_diff: f64,
    pub a_wins: usize,
    pub b_wins: usize,
    pub ties: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub experiment: String,
    pub groups: Vec<GroupSummary>,
    pub paired: Vec<PairedDiff>,
    pub rows: Vec<MetricRow>,
    pub wall_clock_s: f64,
}

impl RunSummary {
    pub fn group(&self, key: u64, scheme: &str) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| g.key == key && g.scheme == scheme)
    }

    pub fn paired(&self, key: u64, a: &str, b: &str) -> Option<&PairedDiff> {
        self.paired.iter().find(|p| p.key == key && p.a == a && p.b == b)
    }
}

/// Mean and sample standard deviation, or `None` for an empty slice. The
/// caller fixes the summation order.
pub fn stats(values: &[f64]) -> Option<Stats> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let stddev = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Some(Stats { mean, stddev, count: n, single_sample: n == 1 })
}

/// Groups rows by (key, scheme) and compares every scheme pair drop by drop.
/// Rows are sorted internally, so any permutation of the input yields the
/// same summary bit for bit.
pub fn summarize(experiment: &str, rows: &[MetricRow]) -> RunSummary {
    let mut by_group: BTreeMap<(u64, &str), Vec<(u64, f64)>> = BTreeMap::new();
    for r in rows {
        by_group.entry((r.key, r.scheme.as_str())).or_default().push((r.drop_seed, r.value));
    }
    for v in by_group.values_mut() {
        v.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    }

    let groups = by_group
        .iter()
        .map(|(&(key, scheme), vals)| {
            let ok: Vec<f64> = vals.iter().map(|v| v.1).filter(|v| !v.is_nan()).collect();
            GroupSummary { key, scheme: scheme.to_string(), stats: stats(&ok), errors: vals.len() - ok.len() }
        })
        .collect();

    let mut paired = Vec::new();
    let keys: Vec<u64> = by_group.keys().map(|k| k.0).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    for key in keys {
        let schemes: Vec<&str> = by_group.keys().filter(|k| k.0 == key).map(|k| k.1).collect();
        for (i, a) in schemes.iter().enumerate() {
            for b in &schemes[i + 1..] {
                let bv: BTreeMap<u64, f64> = by_group[&(key, *b)].iter().copied().collect();
                let diffs: Vec<f64> = by_group[&(key, *a)]
                    .iter()
                    .filter_map(|(s, va)| bv.get(s).map(|vb| va - vb))
                    .filter(|d| !d.is_nan())
                    .collect();
                if diffs.is_empty() {
                    continue;
                }
                paired.push(PairedDiff {
                    key,
                    a: a.to_string(),
                    b: b.to_string(),
                    mean_diff: diffs.iter().sum::<f64>() / diffs.len() as f64,
                    a_wins: diffs.iter().filter(|d| **d > 0.0).count(),
                    b_wins: diffs.iter().filter(|d| **d < 0.0).count(),
                    ties: diffs.iter().filter(|d| **d == 0.0).count(),
                });
            }
        }
    }
    RunSummary { experiment: experiment.to_string(), groups, paired, rows: rows.to_vec(), wall_clock_s: 0.0 }
}
