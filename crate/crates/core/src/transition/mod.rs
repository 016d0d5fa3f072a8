//! Node flows between consecutive clusterings.
//!
//! A flow moves `u[i][j]` nodes from community `i` at `t` to community `j`
//! at `t + 1`. Feasible flows are the non-negative integer points of a
//! transportation polytope; the search looks for the one minimizing the
//! variation of information between the two clusterings.

mod lattice;
mod search;
mod seeds;

use std::fmt;

use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::assembler::NodeId;
use crate::error::{Error, Result};
use crate::sequences::CommunitySpec;

pub use lattice::{count_lattice, enumerate_lattice, for_each_lattice_point};
pub use search::{taboo_search, SearchOutcome};
pub use seeds::{best_seed, mi_greedy, seed_pool, Heuristic, Seed};

/// Row and column totals of a transportation problem: community sizes at
/// `t` (rows) and `t + 1` (columns).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowSystem {
    rows: Vec<u64>,
    cols: Vec<u64>,
}

impl FlowSystem {
    pub fn new(rows: Vec<u64>, cols: Vec<u64>) -> Result<Self> {
        if rows.is_empty() || cols.is_empty() {
            return Err(Error::Validation("flow system needs at least one community per side".into()));
        }
        let (a, b): (u64, u64) = (rows.iter().sum(), cols.iter().sum());
        if a != b {
            return Err(Error::Validation(format!(
                "flow system sides hold {a} and {b} nodes"
            )));
        }
        Ok(FlowSystem { rows, cols })
    }

    pub fn k(&self) -> usize {
        self.rows.len()
    }

    pub fn l(&self) -> usize {
        self.cols.len()
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    pub fn cols(&self) -> &[u64] {
        &self.cols
    }

    pub fn node_count(&self) -> u64 {
        self.rows.iter().sum()
    }

    /// Incidence matrix of the complete bipartite graph `K(k, l)`: one
    /// equation per community, one variable per flow, variables ordered
    /// row-major.
    pub fn incidence(&self) -> Vec<Vec<i64>> {
        let (k, l) = (self.k(), self.l());
        let mut a = vec![vec![0i64; k * l]; k + l];
        for i in 0..k {
            for j in 0..l {
                a[i][i * l + j] = 1;
                a[k + j][i * l + j] = 1;
            }
        }
        a
    }

    /// Right-hand side matching [`Self::incidence`].
    pub fn rhs(&self) -> Vec<u64> {
        self.rows.iter().chain(&self.cols).copied().collect()
    }

    /// Incidence matrix and right-hand side with the redundant last column
    /// equation removed.
    pub fn reduced(&self) -> (Vec<Vec<i64>>, Vec<u64>) {
        let mut a = self.incidence();
        let mut b = self.rhs();
        a.pop();
        b.pop();
        (a, b)
    }

    pub fn is_feasible(&self, flow: &FlowMatrix) -> bool {
        flow.k == self.k() && flow.l == self.l() && flow.row_sums() == self.rows && flow.col_sums() == self.cols
    }
}

/// Builds the flow system between two size multisets with equal totals.
pub fn build_flow_system(sizes_t: &CommunitySpec, sizes_t1: &CommunitySpec) -> Result<FlowSystem> {
    FlowSystem::new(
        sizes_t.sizes().iter().map(|&s| u64::from(s)).collect(),
        sizes_t1.sizes().iter().map(|&s| u64::from(s)).collect(),
    )
}

/// Non-negative integer `k x l` matrix of node counts, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlowMatrix {
    k: usize,
    l: usize,
    cells: Vec<u64>,
}

impl FlowMatrix {
    pub fn zeros(k: usize, l: usize) -> Self {
        FlowMatrix {
            k,
            l,
            cells: vec![0; k * l],
        }
    }

    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self> {
        let k = rows.len();
        let l = rows.first().map_or(0, Vec::len);
        if k == 0 || l == 0 || rows.iter().any(|r| r.len() != l) {
            return Err(Error::Validation("flow matrix rows must be non-empty and of equal length".into()));
        }
        Ok(FlowMatrix {
            k,
            l,
            cells: rows.into_iter().flatten().collect(),
        })
    }

    pub(crate) fn from_cells(k: usize, l: usize, cells: Vec<u64>) -> Self {
        debug_assert_eq!(cells.len(), k * l);
        FlowMatrix { k, l, cells }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.cells[i * self.l + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: u64) {
        self.cells[i * self.l + j] = value;
    }

    /// Cells in row-major order.
    pub fn cells(&self) -> &[u64] {
        &self.cells
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.cells[i * self.l..(i + 1) * self.l]
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.k).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let mut s = vec![0; self.l];
        for i in 0..self.k {
            for (j, v) in self.row(i).iter().enumerate() {
                s[j] += v;
            }
        }
        s
    }

    pub fn zero_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c == 0).count()
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        (0..self.k).map(|i| self.row(i).to_vec()).collect()
    }
}

impl fmt::Display for FlowMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.cells.iter().map(|c| c.to_string().len()).max().unwrap_or(1);
        for i in 0..self.k {
            let row: Vec<String> = self.row(i).iter().map(|c| format!("{c:>width$}")).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Cycle basis of the kernel of the incidence matrix. Move `(i, j)` adds
/// one node to cells `(i, j)` and `(k-1, l-1)` and removes one from
/// `(i, l-1)` and `(k-1, j)`, which keeps every row and column sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelBasis {
    k: usize,
    l: usize,
    moves: Vec<(usize, usize)>,
}

impl KernelBasis {
    pub fn new(k: usize, l: usize) -> Self {
        let moves = (0..k.saturating_sub(1))
            .flat_map(|i| (0..l.saturating_sub(1)).map(move |j| (i, j)))
            .collect();
        KernelBasis { k, l, moves }
    }

    pub fn for_system(sys: &FlowSystem) -> Self {
        KernelBasis::new(sys.k(), sys.l())
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn moves(&self) -> &[(usize, usize)] {
        &self.moves
    }

    /// The four touched cells of move `m` as `(flat index, sign)`.
    pub fn cells(&self, m: usize) -> [(usize, i64); 4] {
        let (i, j) = self.moves[m];
        let (ki, lj) = (self.k - 1, self.l - 1);
        [
            (i * self.l + j, 1),
            (i * self.l + lj, -1),
            (ki * self.l + j, -1),
            (ki * self.l + lj, 1),
        ]
    }

    /// Dense row-major vector of move `m`.
    pub fn vector(&self, m: usize) -> Vec<i64> {
        let mut v = vec![0i64; self.k * self.l];
        for (c, s) in self.cells(m) {
            v[c] += s;
        }
        v
    }
}

/// Contribution of one flow cell to VI, in nats.
#[inline]
pub(crate) fn vi_term(u: u64, row: u64, col: u64, n: f64) -> f64 {
    if u == 0 {
        return 0.0;
    }
    let u = u as f64;
    (u / n) * ((row as f64 / u).ln() + (col as f64 / u).ln())
}

/// Variation of information between the row and column clusterings of a
/// flow, in nats: `-sum r_ij [ln(r_ij / p_i) + ln(r_ij / q_j)]`.
pub fn vi(flow: &FlowMatrix) -> f64 {
    let rows = flow.row_sums();
    let cols = flow.col_sums();
    let n: u64 = rows.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let mut total = 0.0;
    for i in 0..flow.k {
        for j in 0..flow.l {
            total += vi_term(flow.get(i, j), rows[i], cols[j], nf);
        }
    }
    total.max(0.0)
}

/// Contingency matrix of two labelings of the same nodes.
pub fn contingency(x: &[usize], y: &[usize]) -> Result<FlowMatrix> {
    if x.len() != y.len() {
        return Err(Error::Validation(format!(
            "clusterings cover {} and {} nodes",
            x.len(),
            y.len()
        )));
    }
    let k = x.iter().max().map_or(0, |m| m + 1);
    let l = y.iter().max().map_or(0, |m| m + 1);
    let mut m = FlowMatrix::zeros(k.max(1), l.max(1));
    for (&a, &b) in x.iter().zip(y) {
        m.cells[a * m.l + b] += 1;
    }
    Ok(m)
}

/// VI between two labelings of the same node set.
pub fn vi_between(x: &[usize], y: &[usize]) -> Result<f64> {
    Ok(vi(&contingency(x, y)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Non-improving moves tolerated before restarting from the best flow.
    pub local_tries_threshold: usize,
    /// Restarts tolerated without improvement.
    pub global_tries_threshold: usize,
    /// Largest lattice the exhaustive enumerator will walk.
    pub enumeration_cap: u64,
    /// Visited flows remembered by the search; the oldest are forgotten
    /// first.
    pub visited_cap: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            local_tries_threshold: 50,
            global_tries_threshold: 10,
            enumeration_cap: 100_000,
            visited_cap: 1 << 20,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.local_tries_threshold == 0 || self.global_tries_threshold == 0 {
            return Err(Error::Config("search thresholds must be at least 1".into()));
        }
        if self.enumeration_cap == 0 || self.visited_cap == 0 {
            return Err(Error::Config("enumeration and visited caps must be positive".into()));
        }
        Ok(())
    }
}

/// Picks which concrete nodes realize a flow. `rows[i]` lists the members of
/// source community `i`; for the birth row (if any) `rows[i]` must be empty
/// and its `u[i][j]` nodes are created with ids taken from `next_id`.
/// Returns the members of every target community, each sorted.
pub fn materialize_flow<R: RngCore + ?Sized>(
    flow: &FlowMatrix,
    rows: &[Vec<NodeId>],
    birth_row: Option<usize>,
    next_id: &mut u64,
    rng: &mut R,
) -> Result<Vec<Vec<NodeId>>> {
    if rows.len() != flow.k() {
        return Err(Error::Validation(format!(
            "flow has {} source communities, {} member lists given",
            flow.k(),
            rows.len()
        )));
    }
    let sums = flow.row_sums();
    let mut targets: Vec<Vec<NodeId>> = vec![Vec::new(); flow.l()];
    for (i, members) in rows.iter().enumerate() {
        if Some(i) == birth_row {
            if !members.is_empty() {
                return Err(Error::Validation("birth row must not list members".into()));
            }
            for (j, &u) in flow.row(i).iter().enumerate() {
                for _ in 0..u {
                    targets[j].push(NodeId(*next_id));
                    *next_id += 1;
                }
            }
            continue;
        }
        if members.len() as u64 != sums[i] {
            return Err(Error::Validation(format!(
                "source community {i} has {} members but the flow moves {}",
                members.len(),
                sums[i]
            )));
        }
        let mut pool = members.clone();
        pool.shuffle(rng);
        let mut at = 0usize;
        for (j, &u) in flow.row(i).iter().enumerate() {
            let u = u as usize;
            targets[j].extend_from_slice(&pool[at..at + u]);
            at += u;
        }
    }
    for t in &mut targets {
        t.sort_unstable();
    }
    Ok(targets)
}
