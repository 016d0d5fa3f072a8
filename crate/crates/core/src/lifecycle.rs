//! Community events across a step boundary, classified from the node flow
//! between real communities by Jaccard overlap.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transition::FlowMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Event seen from a community at `t`.
    EndOfT,
    /// Event seen from a community at `t + 1`.
    StartOfT1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Continues,
    ContinuesGrowing,
    ContinuesShrinking,
    SplitInto,
    /// Target side of a split.
    SplitFrom,
    MergedInto,
    MergedFrom,
    Born,
    Dead,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Continues => "Continues",
            EventKind::ContinuesGrowing => "Continues growing",
            EventKind::ContinuesShrinking => "Continues shrinking",
            EventKind::SplitInto => "Split into",
            EventKind::SplitFrom => "Split from",
            EventKind::MergedInto => "Merged into",
            EventKind::MergedFrom => "Merged from",
            EventKind::Born => "Born",
            EventKind::Dead => "Dead",
        })
    }
}

/// One event of one community. `community` and `counterparts` index the
/// communities of the snapshot on the respective side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub side: Side,
    pub community: usize,
    pub kind: EventKind,
    pub counterparts: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LifecycleConfig {
    /// Jaccard index at or above which a community continues as another.
    pub continuation_threshold: f64,
    /// Fraction of a community's size a flow must carry to count towards a
    /// split or merge.
    pub share_threshold: f64,
    /// Relative size change below which a continuation is neither growing
    /// nor shrinking.
    pub dead_band: f64,
}

impl Default for LifecycleConfig {
    fn default() -> Self {
        LifecycleConfig {
            continuation_threshold: 0.3,
            share_threshold: 0.1,
            dead_band: 0.02,
        }
    }
}

impl LifecycleConfig {
    pub fn validate(&self) -> Result<()> {
        let open = |x: f64| x > 0.0 && x < 1.0;
        if !open(self.continuation_threshold) || !open(self.share_threshold) {
            return Err(Error::Validation(format!(
                "lifecycle thresholds must lie in (0, 1), got {} and {}",
                self.continuation_threshold, self.share_threshold
            )));
        }
        if !(0.0..1.0).contains(&self.dead_band) {
            return Err(Error::Validation(format!("dead band {} outside [0, 1)", self.dead_band)));
        }
        Ok(())
    }
}

/// Jaccard index of two sorted, duplicate-free slices; 0 when both are
/// empty.
pub fn jaccard<T: Ord>(a: &[T], b: &[T]) -> f64 {
    let (mut i, mut j, mut common) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - common;
    if union == 0 {
        0.0
    } else {
        common as f64 / union as f64
    }
}

/// Jaccard index from counts: `u` shared members of communities of sizes
/// `a` and `b`.
pub fn jaccard_counts(u: u64, a: u64, b: u64) -> f64 {
    let union = a + b - u;
    if union == 0 {
        0.0
    } else {
        u as f64 / union as f64
    }
}

/// Classifies events between the real communities of two snapshots.
/// `contingency[i][j]` counts nodes of community `i` at `t` found in
/// community `j` at `t + 1`; `before` and `after` are the full community
/// sizes, so dead and newborn nodes enter the Jaccard denominators.
///
/// Every community receives at least one record: sources without a
/// continuation, split or merge are dead, targets without one are born.
pub fn classify_events(
    contingency: &FlowMatrix,
    before: &[u64],
    after: &[u64],
    cfg: &LifecycleConfig,
) -> Result<Vec<EventRecord>> {
    cfg.validate()?;
    let (k, l) = (contingency.k(), contingency.l());
    if before.len() != k || after.len() != l {
        return Err(Error::Validation(format!(
            "contingency is {k}x{l} but sizes cover {} and {} communities",
            before.len(),
            after.len()
        )));
    }
    for (i, &s) in contingency.row_sums().iter().enumerate() {
        if s > before[i] {
            return Err(Error::Validation(format!("community {i} sends {s} nodes but holds {}", before[i])));
        }
    }
    for (j, &s) in contingency.col_sums().iter().enumerate() {
        if s > after[j] {
            return Err(Error::Validation(format!("community {j} receives {s} nodes but holds {}", after[j])));
        }
    }
    let mut src: Vec<Vec<EventRecord>> = vec![Vec::new(); k];
    let mut dst: Vec<Vec<EventRecord>> = vec![Vec::new(); l];
    let record = |side, community, kind, counterparts| EventRecord {
        side,
        community,
        kind,
        counterparts,
    };

    for i in 0..k {
        for j in 0..l {
            let u = contingency.get(i, j);
            if u == 0 || jaccard_counts(u, before[i], after[j]) < cfg.continuation_threshold {
                continue;
            }
            let (a, b) = (before[i] as f64, after[j] as f64);
            let (fwd, back) = if b > a * (1.0 + cfg.dead_band) {
                (EventKind::ContinuesGrowing, EventKind::ContinuesGrowing)
            } else if b < a * (1.0 - cfg.dead_band) {
                (EventKind::ContinuesShrinking, EventKind::ContinuesShrinking)
            } else {
                (EventKind::Continues, EventKind::Continues)
            };
            src[i].push(record(Side::EndOfT, i, fwd, vec![j]));
            dst[j].push(record(Side::StartOfT1, j, back, vec![i]));
        }
    }

    let shares_out = |i: usize| -> Vec<usize> {
        (0..l)
            .filter(|&j| {
                let u = contingency.get(i, j);
                u > 0 && u as f64 >= cfg.share_threshold * before[i] as f64
            })
            .collect()
    };
    let shares_in = |j: usize| -> Vec<usize> {
        (0..k)
            .filter(|&i| {
                let u = contingency.get(i, j);
                u > 0 && u as f64 >= cfg.share_threshold * after[j] as f64
            })
            .collect()
    };

    for i in 0..k {
        let targets = shares_out(i);
        if targets.len() >= 2 {
            for &j in &targets {
                dst[j].push(record(Side::StartOfT1, j, EventKind::SplitFrom, vec![i]));
            }
            src[i].push(record(Side::EndOfT, i, EventKind::SplitInto, targets));
        }
    }
    for j in 0..l {
        let sources = shares_in(j);
        if sources.len() >= 2 {
            for &i in &sources {
                src[i].push(record(Side::EndOfT, i, EventKind::MergedInto, vec![j]));
            }
            dst[j].push(record(Side::StartOfT1, j, EventKind::MergedFrom, sources));
        }
    }

    for (i, events) in src.iter_mut().enumerate() {
        if events.is_empty() {
            events.push(record(Side::EndOfT, i, EventKind::Dead, Vec::new()));
        }
    }
    for (j, events) in dst.iter_mut().enumerate() {
        if events.is_empty() {
            events.push(record(Side::StartOfT1, j, EventKind::Born, Vec::new()));
        }
    }
    Ok(src.into_iter().chain(dst).flatten().collect())
}

/// Carries persistent labels across a boundary: pairs of communities with
/// Jaccard index at least `threshold` are matched one-to-one, highest index
/// first (lowest indices on ties), and the target inherits the source's
/// label. Unmatched targets get fresh labels from `next_label`.
pub fn inherit_labels(
    contingency: &FlowMatrix,
    before: &[u64],
    after: &[u64],
    labels_before: &[u64],
    threshold: f64,
    next_label: &mut u64,
) -> Vec<u64> {
    let (k, l) = (contingency.k(), contingency.l());
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..k {
        for j in 0..l {
            let jac = jaccard_counts(contingency.get(i, j), before[i], after[j]);
            if contingency.get(i, j) > 0 && jac >= threshold {
                pairs.push((jac, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut taken = vec![false; k];
    let mut out: Vec<Option<u64>> = vec![None; l];
    for (_, i, j) in pairs {
        if !taken[i] && out[j].is_none() {
            taken[i] = true;
            out[j] = Some(labels_before[i]);
        }
    }
    out.into_iter()
        .map(|o| {
            o.unwrap_or_else(|| {
                *next_label += 1;
                *next_label - 1
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flow(rows: Vec<Vec<u64>>) -> FlowMatrix {
        FlowMatrix::from_rows(rows).unwrap()
    }

    fn kinds(events: &[EventRecord], side: Side, c: usize) -> Vec<EventKind> {
        events
            .iter()
            .filter(|e| e.side == side && e.community == c)
            .map(|e| e.kind)
            .collect()
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard(&[1, 2, 3], &[1, 2, 3]), 1.0);
        assert_eq!(jaccard(&[1, 2], &[3, 4]), 0.0);
        assert!((jaccard(&[1, 2], &[2, 3]) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(jaccard::<u32>(&[], &[]), 0.0);
        assert!((jaccard_counts(1, 2, 2) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn identity_flow_continues() {
        let f = flow(vec![vec![5, 0], vec![0, 7]]);
        let ev = classify_events(&f, &[5, 7], &[5, 7], &LifecycleConfig::default()).unwrap();
        assert_eq!(ev.len(), 4);
        assert!(ev.iter().all(|e| e.kind == EventKind::Continues));
    }

    #[test]
    fn merge_into_larger_target() {
        // 0 and 1 both land entirely in target 0
        let f = flow(vec![vec![6], vec![4]]);
        let ev = classify_events(&f, &[6, 4], &[10], &LifecycleConfig::default()).unwrap();
        assert!(kinds(&ev, Side::EndOfT, 0).contains(&EventKind::MergedInto));
        assert!(kinds(&ev, Side::EndOfT, 1).contains(&EventKind::MergedInto));
        assert!(kinds(&ev, Side::StartOfT1, 0).contains(&EventKind::MergedFrom));
        // the larger source also continues (Jaccard 0.6), growing
        assert!(kinds(&ev, Side::EndOfT, 0).contains(&EventKind::ContinuesGrowing));
    }

    #[test]
    fn half_split() {
        let f = flow(vec![vec![5, 5]]);
        let ev = classify_events(&f, &[10], &[5, 5], &LifecycleConfig::default()).unwrap();
        let split: Vec<_> = ev.iter().filter(|e| e.kind == EventKind::SplitInto).collect();
        assert_eq!(split.len(), 1);
        assert_eq!(split[0].counterparts, vec![0, 1]);
        // Jaccard 0.5 with each half, so it continues (shrinking) in both
        assert_eq!(kinds(&ev, Side::EndOfT, 0).iter().filter(|&&k| k == EventKind::ContinuesShrinking).count(), 2);
    }

    #[test]
    fn births_and_deaths() {
        // community 1 dies entirely; target 1 is all newborns
        let f = flow(vec![vec![4, 0], vec![0, 0]]);
        let ev = classify_events(&f, &[4, 3], &[4, 6], &LifecycleConfig::default()).unwrap();
        assert_eq!(kinds(&ev, Side::EndOfT, 1), vec![EventKind::Dead]);
        assert_eq!(kinds(&ev, Side::StartOfT1, 1), vec![EventKind::Born]);
    }

    #[test]
    fn dead_band_suppresses_small_changes() {
        let f = flow(vec![vec![100]]);
        let ev = classify_events(&f, &[100], &[101], &LifecycleConfig::default()).unwrap();
        assert_eq!(kinds(&ev, Side::EndOfT, 0), vec![EventKind::Continues]);
        let ev = classify_events(&f, &[100], &[110], &LifecycleConfig::default()).unwrap();
        assert_eq!(kinds(&ev, Side::EndOfT, 0), vec![EventKind::ContinuesGrowing]);
    }

    #[test]
    fn bad_threshold_is_rejected() {
        let f = flow(vec![vec![1]]);
        let cfg = LifecycleConfig {
            continuation_threshold: 1.0,
            ..LifecycleConfig::default()
        };
        assert!(classify_events(&f, &[1], &[1], &cfg).is_err());
    }

    #[test]
    fn labels_follow_best_overlap() {
        let f = flow(vec![vec![9, 1], vec![0, 3]]);
        let mut next = 10;
        let labels = inherit_labels(&f, &[10, 3], &[9, 4], &[4, 7], 0.3, &mut next);
        assert_eq!(labels, vec![4, 7]);
        let f = flow(vec![vec![1, 1]]);
        let labels = inherit_labels(&f, &[2], &[5, 5], &[4], 0.3, &mut next);
        assert_eq!(labels, vec![10, 11]);
        assert_eq!(next, 12);
    }
}
