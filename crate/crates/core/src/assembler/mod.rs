//! Snapshot assembly: degree and community assignment followed by intra and
//! inter wiring with the modified configuration model.

mod assign;
mod wiring;

use std::fmt;

use rand::RngCore;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use assign::{
    assign_initial, assign_tuples, repair_intra_parity, Assignment, DegreeTuple, Placement,
};
pub use wiring::{repair_rewire, wire, wire_inter, wire_intra, LinkSet, WiringStats};

/// Stable node identity. Ids are never reused after a node dies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub total: u32,
    pub intra: u32,
    /// Index into the snapshot's community list.
    pub community: usize,
    pub born_at: usize,
    pub died_at: Option<usize>,
}

impl Node {
    pub fn inter(&self) -> u32 {
        self.total - self.intra
    }
}

/// Shape parameters of the Beta distribution used for index draws over a
/// degree-ordered list. `alpha = beta = 1` is uniform; `alpha > beta` leans
/// towards the high-degree end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeParams {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for ShapeParams {
    fn default() -> Self {
        ShapeParams::UNIFORM
    }
}

impl ShapeParams {
    pub const UNIFORM: ShapeParams = ShapeParams {
        alpha: 1.0,
        beta: 1.0,
    };

    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let s = ShapeParams { alpha, beta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if ok(self.alpha) && ok(self.beta) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "Beta shape parameters must be positive, got alpha={} beta={}",
                self.alpha, self.beta
            )))
        }
    }

    pub(crate) fn sampler(&self) -> IndexSampler {
        if self.alpha == 1.0 && self.beta == 1.0 {
            IndexSampler::Uniform
        } else {
            IndexSampler::Beta(Beta::new(self.alpha, self.beta).expect("validated shape"))
        }
    }
}

pub(crate) enum IndexSampler {
    Uniform,
    Beta(Beta<f64>),
}

impl IndexSampler {
    /// Position in `[0, len)` drawn through the Beta quantile.
    pub fn index<R: RngCore + ?Sized>(&self, len: u64, rng: &mut R) -> u64 {
        debug_assert!(len > 0);
        let x: f64 = match self {
            IndexSampler::Uniform => {
                use rand::Rng;
                return rng.random_range(0..len);
            }
            IndexSampler::Beta(b) => b.sample(rng),
        };
        ((x * len as f64) as u64).min(len - 1)
    }
}

/// A realized simple graph with its ground-truth clustering at one timestep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: usize,
    /// Sorted by id.
    pub nodes: Vec<Node>,
    /// Each link `(a, b)` has `a < b`; sorted, no duplicates.
    pub links: Vec<(NodeId, NodeId)>,
    /// Member ids per community, sorted.
    pub communities: Vec<Vec<NodeId>>,
    /// Persistent community labels, one per community.
    pub labels: Vec<u64>,
}

impl Snapshot {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok()
    }

    /// Realized degree of every node, in node order.
    pub fn realized_degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.nodes.len()];
        for &(a, b) in &self.links {
            deg[self.index_of(a).expect("link endpoint")] += 1;
            deg[self.index_of(b).expect("link endpoint")] += 1;
        }
        deg
    }

    /// Checks simplicity, degree exactness and that the clustering is a
    /// partition of the node set.
    pub fn verify(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Wiring(format!("snapshot {}: {msg}", self.t)));
        if self.nodes.windows(2).any(|w| w[0].id >= w[1].id) {
            return fail("node ids not strictly increasing".into());
        }
        let mut total = vec![0u32; self.nodes.len()];
        let mut intra = vec![0u32; self.nodes.len()];
        for w in self.links.windows(2) {
            if w[0] >= w[1] {
                return fail(format!("duplicate or unsorted link {:?}", w[1]));
            }
        }
        for &(a, b) in &self.links {
            if a >= b {
                return fail(format!("self-loop or unordered link ({a}, {b})"));
            }
            let (Some(ia), Some(ib)) = (self.index_of(a), self.index_of(b)) else {
                return fail(format!("link ({a}, {b}) references an unknown node"));
            };
            total[ia] += 1;
            total[ib] += 1;
            if self.nodes[ia].community == self.nodes[ib].community {
                intra[ia] += 1;
                intra[ib] += 1;
            }
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if total[i] != n.total || intra[i] != n.intra {
                return fail(format!(
                    "node {} realized (d={}, e={}) but expects (d={}, e={})",
                    n.id, total[i], intra[i], n.total, n.intra
                ));
            }
        }
        let mut covered = 0usize;
        for (c, members) in self.communities.iter().enumerate() {
            for id in members {
                match self.index_of(*id) {
                    Some(i) if self.nodes[i].community == c => covered += 1,
                    _ => return fail(format!("community {c} lists node {id} it does not own")),
                }
            }
        }
        if covered != self.nodes.len() {
            return fail("clustering does not cover the node set".into());
        }
        if self.labels.len() != self.communities.len() {
            return fail("one label per community expected".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WiringConfig {
    pub shape: ShapeParams,
    /// Maximum link breaks per wiring phase per node; the budget of a phase
    /// is this factor times the number of nodes it wires.
    pub repair_factor: usize,
}

impl Default for WiringConfig {
    fn default() -> Self {
        WiringConfig {
            shape: ShapeParams::UNIFORM,
            repair_factor: 50,
        }
    }
}

/// Wires a snapshot from fully assigned nodes: one intra phase per
/// community, then one inter phase over the whole network.
pub fn build_snapshot<R: RngCore + ?Sized>(
    t: usize,
    mut nodes: Vec<Node>,
    community_count: usize,
    labels: Vec<u64>,
    cfg: &WiringConfig,
    rng: &mut R,
) -> Result<(Snapshot, WiringStats)> {
    nodes.sort_by_key(|n| n.id);
    let mut communities: Vec<Vec<usize>> = vec![Vec::new(); community_count];
    for (i, n) in nodes.iter().enumerate() {
        if n.community >= community_count {
            return Err(Error::Validation(format!(
                "node {} assigned to community {} of {community_count}",
                n.id, n.community
            )));
        }
        communities[n.community].push(i);
    }
    let mut links: Vec<(usize, usize)> = Vec::new();
    let mut stats = WiringStats::default();
    for (c, members) in communities.iter().enumerate() {
        let intra: Vec<u32> = members.iter().map(|&i| nodes[i].intra).collect();
        let key: Vec<u32> = members.iter().map(|&i| nodes[i].total).collect();
        let (local, s) = wire_intra(&intra, &key, cfg.shape, cfg.repair_factor, rng)
            .map_err(|e| match e {
                Error::Wiring(msg) => Error::Wiring(format!("step {t}, community {c}: {msg}")),
                other => other,
            })?;
        stats.absorb(&s);
        links.extend(local.into_iter().map(|(a, b)| (members[a], members[b])));
    }
    let inter: Vec<u32> = nodes.iter().map(Node::inter).collect();
    let key: Vec<u32> = nodes.iter().map(|n| n.total).collect();
    let comm: Vec<usize> = nodes.iter().map(|n| n.community).collect();
    let (cross, s) = wire_inter(&inter, &key, &comm, cfg.shape, cfg.repair_factor, rng)
        .map_err(|e| match e {
            Error::Wiring(msg) => Error::Wiring(format!("step {t}, inter links: {msg}")),
            other => other,
        })?;
    stats.absorb(&s);
    links.extend(cross);

    let mut id_links: Vec<(NodeId, NodeId)> = links
        .into_iter()
        .map(|(a, b)| {
            let (x, y) = (nodes[a].id, nodes[b].id);
            (x.min(y), x.max(y))
        })
        .collect();
    id_links.sort_unstable();
    let communities = communities
        .into_iter()
        .map(|m| m.into_iter().map(|i| nodes[i].id).collect())
        .collect();
    let snapshot = Snapshot {
        t,
        nodes,
        links: id_links,
        communities,
        labels,
    };
    snapshot.verify()?;
    Ok((snapshot, stats))
}

/// Number of connected components of one community's induced subgraph.
pub fn check_connectivity(snapshot: &Snapshot, community: usize) -> usize {
    let members = &snapshot.communities[community];
    let local = |id: NodeId| members.binary_search(&id).ok();
    let mut parent: Vec<usize> = (0..members.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut components = members.len();
    for &(a, b) in &snapshot.links {
        if let (Some(x), Some(y)) = (local(a), local(b)) {
            let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
            if rx != ry {
                parent[rx] = ry;
                components -= 1;
            }
        }
    }
    components
}

/// Expected link counts `k_i k_j / (S - 1)` of the unconstrained
/// configuration model, `S` being the total stub count.
pub fn degree_joint_distribution_baseline(degrees: &[u32]) -> Vec<Vec<f64>> {
    let stubs: u64 = degrees.iter().map(|&d| u64::from(d)).sum();
    let denom = stubs.saturating_sub(1).max(1) as f64;
    degrees
        .iter()
        .map(|&a| {
            degrees
                .iter()
                .map(|&b| f64::from(a) * f64::from(b) / denom)
                .collect()
        })
        .collect()
}
