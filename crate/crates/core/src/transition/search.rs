use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{vi, vi_term, FlowMatrix, FlowSystem, KernelBasis, SearchConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub flow: FlowMatrix,
    pub vi: f64,
    pub seed_vi: f64,
    /// Moves made, improving or not.
    pub moves: usize,
    pub improvements: usize,
    pub restarts: usize,
    /// VI of the current point after each move.
    pub trajectory: Vec<f64>,
}

const TRAJECTORY_CAP: usize = 100_000;

#[inline]
fn mix(cell: usize, value: u64) -> u64 {
    // splitmix64 finalizer over the (cell, value) pair
    let mut z = (cell as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ value.wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn hash_of(cells: &[u64]) -> u64 {
    cells.iter().enumerate().fold(0, |h, (c, &v)| h ^ mix(c, v))
}

struct Visited {
    set: HashSet<u64>,
    order: VecDeque<u64>,
    cap: usize,
}

impl Visited {
    fn new(cap: usize) -> Self {
        Visited {
            set: HashSet::new(),
            order: VecDeque::new(),
            cap,
        }
    }

    fn contains(&self, h: u64) -> bool {
        self.set.contains(&h)
    }

    fn insert(&mut self, h: u64) {
        if self.set.insert(h) {
            self.order.push_back(h);
            if self.order.len() > self.cap {
                let old = self.order.pop_front().expect("non-empty");
                self.set.remove(&old);
            }
        }
    }
}

/// A point reached by moving `step` times along basis vector `m`.
#[derive(Clone, Copy)]
struct Endpoint {
    m: usize,
    step: i64,
    delta: f64,
    hash: u64,
}

/// Anytime greedy search with taboo over the hull of the flow polytope.
///
/// From the current point, every kernel basis vector is followed in both
/// directions to the last feasible lattice point. The best endpoint not
/// yet visited becomes the current point and is marked visited. Reaching a
/// VI below the best so far resets both counters; otherwise the local
/// counter grows, and once it passes its threshold the walk restarts from
/// the best point and the global counter grows. The search ends when the
/// global counter passes its threshold or the best point has no unvisited
/// endpoint.
pub fn taboo_search(sys: &FlowSystem, seed: &FlowMatrix, basis: &KernelBasis, cfg: &SearchConfig) -> SearchOutcome {
    assert!(sys.is_feasible(seed), "seed flow is not feasible");
    let n = sys.node_count() as f64;
    let l = sys.l();
    let (rows, cols) = (sys.rows(), sys.cols());
    let term = |c: usize, u: u64| vi_term(u, rows[c / l], cols[c % l], n);

    let seed_vi = vi(seed);
    let mut best = seed.cells().to_vec();
    let mut best_vi = seed_vi;
    let mut cur = best.clone();
    let mut cur_hash = hash_of(&cur);
    let mut visited = Visited::new(cfg.visited_cap);
    visited.insert(cur_hash);
    let mut out = SearchOutcome {
        flow: seed.clone(),
        vi: seed_vi,
        seed_vi,
        moves: 0,
        improvements: 0,
        restarts: 0,
        trajectory: Vec::new(),
    };
    if basis.is_empty() {
        return out;
    }

    let mut global = 0usize;
    'global: while global <= cfg.global_tries_threshold {
        global += 1;
        let mut local = 0usize;
        let mut at_best = true;
        while local <= cfg.local_tries_threshold {
            let mut pick: Option<Endpoint> = None;
            for m in 0..basis.len() {
                let cells = basis.cells(m);
                let plus = cells.iter().filter(|c| c.1 < 0).map(|c| cur[c.0]).min().unwrap_or(0);
                let minus = cells.iter().filter(|c| c.1 > 0).map(|c| cur[c.0]).min().unwrap_or(0);
                for step in [plus as i64, -(minus as i64)] {
                    if step == 0 {
                        continue;
                    }
                    let mut delta = 0.0;
                    let mut hash = cur_hash;
                    for &(c, s) in &cells {
                        let old = cur[c];
                        let new = (old as i64 + s * step) as u64;
                        delta += term(c, new) - term(c, old);
                        hash ^= mix(c, old) ^ mix(c, new);
                    }
                    if visited.contains(hash) {
                        continue;
                    }
                    if pick.is_none_or(|p| delta < p.delta) {
                        pick = Some(Endpoint { m, step, delta, hash });
                    }
                }
            }
            let Some(p) = pick else {
                if at_best {
                    break 'global;
                }
                break;
            };
            for (c, s) in basis.cells(p.m) {
                cur[c] = (cur[c] as i64 + s * p.step) as u64;
            }
            debug_assert!(sys.is_feasible(&FlowMatrix::from_cells(sys.k(), l, cur.clone())));
            cur_hash = p.hash;
            let cur_vi = recompute(&cur, &term);
            visited.insert(cur_hash);
            at_best = false;
            out.moves += 1;
            if out.trajectory.len() < TRAJECTORY_CAP {
                out.trajectory.push(cur_vi);
            }
            if cur_vi < best_vi - 1e-12 {
                best.clone_from(&cur);
                best_vi = cur_vi;
                out.improvements += 1;
                local = 0;
                global = 0;
                at_best = true;
            } else {
                local += 1;
            }
        }
        out.restarts += 1;
        cur.clone_from(&best);
        cur_hash = hash_of(&cur);
    }
    out.flow = FlowMatrix::from_cells(sys.k(), l, best);
    out.vi = best_vi;
    out
}

fn recompute<F: Fn(usize, u64) -> f64>(cells: &[u64], term: &F) -> f64 {
    cells.iter().enumerate().map(|(c, &u)| term(c, u)).sum::<f64>().max(0.0)
}
