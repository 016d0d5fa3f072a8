//! Quantities reported per snapshot and per boundary.

use serde::{Deserialize, Serialize};

use crate::assembler::Snapshot;

/// A correlation-type value. `degenerate` marks a zero-variance input, in
/// which case `value` is 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: f64,
    pub degenerate: bool,
}

impl Metric {
    fn of(value: Option<f64>) -> Self {
        match value {
            Some(v) => Metric {
                value: v,
                degenerate: false,
            },
            None => Metric {
                value: 0.0,
                degenerate: true,
            },
        }
    }
}

/// Pearson correlation of paired samples; `None` when either side has zero
/// variance or fewer than two samples are given.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (x[i] - mx, y[i] - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Newman's degree assortativity: the Pearson correlation of the degrees at
/// the two ends of a link, each link counted in both directions.
pub fn assortativity_coefficient(s: &Snapshot) -> Metric {
    let degree: Vec<f64> = s.nodes.iter().map(|n| f64::from(n.total)).collect();
    let mut x = Vec::with_capacity(2 * s.links.len());
    let mut y = Vec::with_capacity(2 * s.links.len());
    for &(a, b) in &s.links {
        let (da, db) = (
            degree[s.index_of(a).expect("link endpoint")],
            degree[s.index_of(b).expect("link endpoint")],
        );
        x.extend([da, db]);
        y.extend([db, da]);
    }
    Metric::of(pearson(&x, &y))
}

/// Pearson correlation between the degrees of nodes alive in both
/// snapshots.
pub fn temporal_degree_correlation(s_t: &Snapshot, s_t1: &Snapshot) -> Metric {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < s_t.nodes.len() && j < s_t1.nodes.len() {
        let (a, b) = (&s_t.nodes[i], &s_t1.nodes[j]);
        match a.id.cmp(&b.id) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                x.push(f64::from(a.total));
                y.push(f64::from(b.total));
                i += 1;
                j += 1;
            }
        }
    }
    Metric::of(pearson(&x, &y))
}

/// Newman-Girvan modularity of the snapshot's ground-truth clustering:
/// `sum_c [L_c / m - (D_c / 2m)^2]`. Zero for a snapshot without links.
pub fn modularity(s: &Snapshot) -> f64 {
    let m = s.links.len() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let k = s.communities.len();
    let mut inside = vec![0u64; k];
    let mut degree = vec![0u64; k];
    for n in &s.nodes {
        degree[n.community] += u64::from(n.total);
    }
    for &(a, b) in &s.links {
        let ca = s.nodes[s.index_of(a).expect("link endpoint")].community;
        let cb = s.nodes[s.index_of(b).expect("link endpoint")].community;
        if ca == cb {
            inside[ca] += 1;
        }
    }
    (0..k)
        .map(|c| inside[c] as f64 / m - (degree[c] as f64 / (2.0 * m)).powi(2))
        .sum()
}
