use std::fmt;

use serde::{Deserialize, Serialize};

use super::{vi, FlowMatrix, FlowSystem};

/// One-pass greedy rules used to seed the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Heuristic {
    /// Commits the flow with the smallest VI increase.
    MutualInformation,
    /// Pairs the largest remaining source with the largest remaining target.
    LargestPair,
    /// Commits the largest possible single flow first.
    MaximalFlow,
    /// Northwest-corner rule over communities sorted by decreasing size.
    NorthwestCorner,
    /// Floors of the independence product `s_i s'_j / n`, then fills the
    /// remainder by the northwest-corner rule.
    Proportional,
}

impl Heuristic {
    pub const ALL: [Heuristic; 5] = [
        Heuristic::MutualInformation,
        Heuristic::LargestPair,
        Heuristic::MaximalFlow,
        Heuristic::NorthwestCorner,
        Heuristic::Proportional,
    ];

    pub fn solve(self, sys: &FlowSystem) -> FlowMatrix {
        match self {
            Heuristic::MutualInformation => mi_greedy(sys),
            Heuristic::LargestPair => largest_pair(sys),
            Heuristic::MaximalFlow => maximal_flow(sys),
            Heuristic::NorthwestCorner => northwest_sorted(sys),
            Heuristic::Proportional => proportional(sys),
        }
    }
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Heuristic::MutualInformation => "mutual-information",
            Heuristic::LargestPair => "largest-pair",
            Heuristic::MaximalFlow => "maximal-flow",
            Heuristic::NorthwestCorner => "northwest-corner",
            Heuristic::Proportional => "proportional",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub heuristic: Heuristic,
    pub flow: FlowMatrix,
    pub vi: f64,
}

/// The five seed flows, in [`Heuristic::ALL`] order.
pub fn seed_pool(sys: &FlowSystem) -> Vec<Seed> {
    Heuristic::ALL
        .iter()
        .map(|&h| {
            let flow = h.solve(sys);
            debug_assert!(sys.is_feasible(&flow), "{h} produced an infeasible flow");
            let vi = vi(&flow);
            Seed { heuristic: h, flow, vi }
        })
        .collect()
}

/// Lowest-VI member of the pool; earlier heuristics win ties.
pub fn best_seed(pool: &[Seed]) -> &Seed {
    pool.iter()
        .reduce(|a, b| if b.vi < a.vi { b } else { a })
        .expect("non-empty pool")
}

/// Repeatedly commits `u_ij = min(row_i, col_j)` on the cell whose
/// commitment adds the least VI. A committed cell adds
/// `(u/n) ln(s_i s'_j / u^2)`; the constant `1/n` is dropped from the score.
pub fn mi_greedy(sys: &FlowSystem) -> FlowMatrix {
    let (s, t) = (sys.rows(), sys.cols());
    greedy(sys, |i, j, u| {
        let u = u as f64;
        -(u * (s[i] as f64 * t[j] as f64 / (u * u)).ln())
    })
}

fn maximal_flow(sys: &FlowSystem) -> FlowMatrix {
    greedy(sys, |_, _, u| u as f64)
}

/// Generic one-pass greedy: while nodes remain, commit the full possible
/// flow on the open cell of highest `score`, lowest index on ties.
fn greedy<F: Fn(usize, usize, u64) -> f64>(sys: &FlowSystem, score: F) -> FlowMatrix {
    let (k, l) = (sys.k(), sys.l());
    let mut rows = sys.rows().to_vec();
    let mut cols = sys.cols().to_vec();
    let mut flow = FlowMatrix::zeros(k, l);
    loop {
        let mut best: Option<(f64, usize, usize, u64)> = None;
        for i in 0..k {
            if rows[i] == 0 {
                continue;
            }
            for j in 0..l {
                let u = rows[i].min(cols[j]);
                if u == 0 {
                    continue;
                }
                let sc = score(i, j, u);
                if best.is_none_or(|b| sc > b.0) {
                    best = Some((sc, i, j, u));
                }
            }
        }
        let Some((_, i, j, u)) = best else {
            break;
        };
        flow.set(i, j, flow.get(i, j) + u);
        rows[i] -= u;
        cols[j] -= u;
    }
    flow
}

fn largest_pair(sys: &FlowSystem) -> FlowMatrix {
    let mut rows = sys.rows().to_vec();
    let mut cols = sys.cols().to_vec();
    let mut flow = FlowMatrix::zeros(sys.k(), sys.l());
    let argmax = |v: &[u64]| {
        v.iter()
            .enumerate()
            .fold((0, 0), |b, (i, &x)| if x > b.1 { (i, x) } else { b })
    };
    loop {
        let (i, a) = argmax(&rows);
        let (j, b) = argmax(&cols);
        if a == 0 || b == 0 {
            break;
        }
        let u = a.min(b);
        flow.set(i, j, flow.get(i, j) + u);
        rows[i] -= u;
        cols[j] -= u;
    }
    flow
}

fn sorted_desc(v: &[u64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].cmp(&v[a]).then(a.cmp(&b)));
    idx
}

/// Northwest-corner fill of `residual` rows/cols, visiting them in the
/// given orders.
fn northwest(flow: &mut FlowMatrix, rows: &mut [u64], cols: &mut [u64], ro: &[usize], co: &[usize]) {
    let (mut a, mut b) = (0, 0);
    while a < ro.len() && b < co.len() {
        let (i, j) = (ro[a], co[b]);
        let u = rows[i].min(cols[j]);
        flow.set(i, j, flow.get(i, j) + u);
        rows[i] -= u;
        cols[j] -= u;
        if rows[i] == 0 {
            a += 1;
        } else {
            b += 1;
        }
    }
}

fn northwest_sorted(sys: &FlowSystem) -> FlowMatrix {
    let mut rows = sys.rows().to_vec();
    let mut cols = sys.cols().to_vec();
    let mut flow = FlowMatrix::zeros(sys.k(), sys.l());
    let (ro, co) = (sorted_desc(&rows), sorted_desc(&cols));
    northwest(&mut flow, &mut rows, &mut cols, &ro, &co);
    flow
}

fn proportional(sys: &FlowSystem) -> FlowMatrix {
    let n = sys.node_count();
    let mut rows = sys.rows().to_vec();
    let mut cols = sys.cols().to_vec();
    let mut flow = FlowMatrix::zeros(sys.k(), sys.l());
    if n == 0 {
        return flow;
    }
    for i in 0..sys.k() {
        for j in 0..sys.l() {
            let u = (u128::from(sys.rows()[i]) * u128::from(sys.cols()[j]) / u128::from(n)) as u64;
            flow.set(i, j, u);
            rows[i] -= u;
            cols[j] -= u;
        }
    }
    let (ro, co) = (sorted_desc(&rows), sorted_desc(&cols));
    northwest(&mut flow, &mut rows, &mut cols, &ro, &co);
    flow
}
