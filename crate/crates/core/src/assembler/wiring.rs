use rand::seq::SliceRandom;
use rand::RngCore;

use super::ShapeParams;
use crate::error::{Error, Result};
use crate::fenwick::Fenwick;

/// Undirected simple link set over local node indices.
#[derive(Debug, Clone, Default)]
pub struct LinkSet {
    adj: Vec<Vec<usize>>,
}

impl LinkSet {
    pub fn new(n: usize) -> Self {
        LinkSet {
            adj: vec![Vec::new(); n],
        }
    }

    pub fn from_links(n: usize, links: &[(usize, usize)]) -> Self {
        let mut s = LinkSet::new(n);
        for &(a, b) in links {
            s.add(a, b);
        }
        s
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        let (x, y) = if self.adj[a].len() <= self.adj[b].len() { (a, b) } else { (b, a) };
        self.adj[x].contains(&y)
    }

    pub fn add(&mut self, a: usize, b: usize) {
        debug_assert!(a != b && !self.contains(a, b));
        self.adj[a].push(b);
        self.adj[b].push(a);
    }

    pub fn remove(&mut self, a: usize, b: usize) {
        let drop = |v: &mut Vec<usize>, x: usize| {
            let i = v.iter().position(|&y| y == x).expect("link present");
            v.swap_remove(i);
        };
        drop(&mut self.adj[a], b);
        drop(&mut self.adj[b], a);
    }

    pub fn neighbors(&self, a: usize) -> &[usize] {
        &self.adj[a]
    }

    pub fn degree(&self, a: usize) -> usize {
        self.adj[a].len()
    }

    /// All links as `(a, b)` with `a < b`, sorted.
    pub fn links(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .adj
            .iter()
            .enumerate()
            .flat_map(|(a, nb)| nb.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect();
        out.sort_unstable();
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WiringStats {
    /// Links broken by the repair step.
    pub repairs: usize,
    pub phases: usize,
}

impl WiringStats {
    pub(crate) fn absorb(&mut self, other: &WiringStats) {
        self.repairs += other.repairs;
        self.phases += other.phases;
    }
}

/// Wires one community's intra links. `key` orders the candidate list
/// (normally the nodes' total degrees).
pub fn wire_intra<R: RngCore + ?Sized>(
    intra: &[u32],
    key: &[u32],
    shape: ShapeParams,
    repair_factor: usize,
    rng: &mut R,
) -> Result<(Vec<(usize, usize)>, WiringStats)> {
    wire(intra, key, None, shape, repair_factor, rng)
}

/// Wires inter links over the whole network; nodes sharing a community
/// are never paired.
pub fn wire_inter<R: RngCore + ?Sized>(
    inter: &[u32],
    key: &[u32],
    community: &[usize],
    shape: ShapeParams,
    repair_factor: usize,
    rng: &mut R,
) -> Result<(Vec<(usize, usize)>, WiringStats)> {
    wire(inter, key, Some(community), shape, repair_factor, rng)
}

/// Modified configuration model.
///
/// Linking nodes are visited by decreasing `key`. Each stub of the linking
/// node picks its partner from the open stubs of valid partners, laid out
/// in increasing `key` order, at a position drawn from `Beta(shape)`. Valid
/// partners exclude the node itself, its current neighbors and, when
/// `group` is given, members of its own group. A node left with stubs and
/// no valid open partner triggers [`repair_rewire`].
pub fn wire<R: RngCore + ?Sized>(
    residual: &[u32],
    key: &[u32],
    group: Option<&[usize]>,
    shape: ShapeParams,
    repair_factor: usize,
    rng: &mut R,
) -> Result<(Vec<(usize, usize)>, WiringStats)> {
    let n = residual.len();
    assert_eq!(key.len(), n, "one ordering key per node");
    if let Some(g) = group {
        assert_eq!(g.len(), n, "one group per node");
    }
    let stubs: u64 = residual.iter().map(|&r| u64::from(r)).sum();
    if stubs % 2 == 1 {
        return Err(Error::Wiring(format!("odd stub count {stubs}")));
    }
    shape.validate()?;

    let mut by_key: Vec<usize> = (0..n).collect();
    by_key.sort_by_key(|&i| (key[i], i));
    let mut pos = vec![0usize; n];
    for (p, &i) in by_key.iter().enumerate() {
        pos[i] = p;
    }
    let weights: Vec<u64> = by_key.iter().map(|&i| u64::from(residual[i])).collect();
    let mut pool = Fenwick::from_values(&weights);

    let members: Vec<Vec<usize>> = match group {
        Some(g) => {
            let k = g.iter().copied().max().map_or(0, |m| m + 1);
            let mut m = vec![Vec::new(); k];
            for (i, &c) in g.iter().enumerate() {
                m[c].push(i);
            }
            m
        }
        None => Vec::new(),
    };
    let allowed = |a: usize, b: usize| a != b && group.is_none_or(|g| g[a] != g[b]);

    let mut order: Vec<usize> = (0..n).filter(|&i| residual[i] > 0).collect();
    order.shuffle(rng);
    order.sort_by(|&a, &b| key[b].cmp(&key[a]));

    let sampler = shape.sampler();
    let budget = repair_factor.saturating_mul(n.max(1));
    let mut res = residual.to_vec();
    let mut links = LinkSet::new(n);
    let mut stats = WiringStats {
        repairs: 0,
        phases: 1,
    };
    let mut excluded: Vec<usize> = Vec::new();

    loop {
        let mut pending = false;
        for &s in &order {
            if res[s] == 0 {
                continue;
            }
            pending = true;
            excluded.clear();
            let exclude = |x: usize, pool: &mut Fenwick, excluded: &mut Vec<usize>| {
                if pool.get(pos[x]) > 0 {
                    pool.set(pos[x], 0);
                    excluded.push(x);
                }
            };
            exclude(s, &mut pool, &mut excluded);
            for &nb in links.neighbors(s) {
                exclude(nb, &mut pool, &mut excluded);
            }
            if let Some(g) = group {
                for &m in &members[g[s]] {
                    exclude(m, &mut pool, &mut excluded);
                }
            }
            while res[s] > 0 {
                if pool.total() == 0 {
                    if stats.repairs >= budget {
                        return Err(Error::Wiring(format!(
                            "repair budget of {budget} link breaks exhausted with {} open stubs",
                            res.iter().map(|&r| u64::from(r)).sum::<u64>()
                        )));
                    }
                    let (u, v) = repair_rewire(s, &mut links, &res, &allowed, rng).ok_or_else(|| {
                        Error::Wiring(format!("node {s} has open stubs and no rewiring candidate"))
                    })?;
                    stats.repairs += 1;
                    res[s] -= 1;
                    res[v] += 1;
                    debug_assert_eq!(res[u], 0);
                    if allowed(s, v) && !links.contains(s, v) {
                        pool.set(pos[v], u64::from(res[v]));
                    }
                    excluded.push(v);
                    continue;
                }
                let target = sampler.index(pool.total(), rng);
                let u = by_key[pool.find(target)];
                links.add(s, u);
                res[s] -= 1;
                res[u] -= 1;
                pool.set(pos[u], 0);
                excluded.push(u);
            }
            pool.set(pos[s], 0);
            for &x in &excluded {
                pool.set(pos[x], u64::from(res[x]));
            }
        }
        if !pending {
            break;
        }
    }
    debug_assert!(res.iter().all(|&r| r == 0));
    Ok((links.links(), stats))
}

/// Repair step for a node `stuck` that has open stubs but no valid open
/// partner. Breaks a link `(u, v)` where `u` is a valid, non-adjacent
/// partner of `stuck`, then links `stuck` to `u`; `v` is left with one open
/// stub. Links whose freed endpoint `v` can immediately pair with some
/// other open stub are preferred. Returns the broken link.
pub fn repair_rewire<R, F>(
    stuck: usize,
    links: &mut LinkSet,
    residual: &[u32],
    allowed: &F,
    rng: &mut R,
) -> Option<(usize, usize)>
where
    R: RngCore + ?Sized,
    F: Fn(usize, usize) -> bool,
{
    let n = residual.len();
    let candidates: Vec<usize> = (0..n)
        .filter(|&u| {
            allowed(stuck, u)
                && !links.contains(stuck, u)
                && links.neighbors(u).iter().any(|&v| v != stuck)
        })
        .collect();
    if candidates.is_empty() {
        return None;
    }
    let open: Vec<usize> = (0..n).filter(|&w| residual[w] > 0).collect();
    let completes = |v: usize, links: &LinkSet| {
        open.iter().any(|&w| {
            let w_left = if w == stuck { residual[w] - 1 } else { residual[w] };
            w_left > 0 && allowed(v, w) && !links.contains(v, w)
        })
    };
    let mut order = candidates;
    order.shuffle(rng);
    let mut fallback = None;
    let mut chosen = None;
    'scan: for &u in &order {
        let mut nb: Vec<usize> = links.neighbors(u).iter().copied().filter(|&v| v != stuck).collect();
        nb.shuffle(rng);
        for &v in &nb {
            if completes(v, links) {
                chosen = Some((u, v));
                break 'scan;
            }
            fallback.get_or_insert((u, v));
        }
    }
    let chosen = chosen.or(fallback)?;
    let (u, v) = chosen;
    links.remove(u, v);
    links.add(stuck, u);
    Some((u, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphability::{erdos_gallai, inter_realizable};
    use crate::seeded_rng;

    fn degrees(n: usize, links: &[(usize, usize)]) -> Vec<u32> {
        let mut d = vec![0u32; n];
        for &(a, b) in links {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }

    #[test]
    fn complete_graph_is_forced() {
        let (links, _) = wire_intra(&[3, 3, 3, 3], &[3, 3, 3, 3], ShapeParams::UNIFORM, 50, &mut seeded_rng(0)).unwrap();
        assert_eq!(links, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn star_is_forced() {
        let (links, _) = wire_intra(&[3, 1, 1, 1], &[3, 1, 1, 1], ShapeParams::UNIFORM, 50, &mut seeded_rng(0)).unwrap();
        assert_eq!(links, vec![(0, 1), (0, 2), (0, 3)]);
    }

    #[test]
    fn single_bridge_between_two_singletons() {
        let (links, _) = wire_inter(&[1, 1], &[1, 1], &[0, 1], ShapeParams::UNIFORM, 50, &mut seeded_rng(0)).unwrap();
        assert_eq!(links, vec![(0, 1)]);
    }

    #[test]
    fn repair_on_path_construction() {
        // s=0, u=1, v=2, w=3. Targets: s 2, u 1, v 1, w 2. Current links u-v
        // and s-w leave s and w each one stub short but already adjacent.
        let mut links = LinkSet::from_links(4, &[(1, 2), (0, 3)]);
        let mut residual = vec![1, 0, 0, 1];
        let allowed = |a: usize, b: usize| a != b;
        let (u, v) = repair_rewire(0, &mut links, &residual, &allowed, &mut seeded_rng(1)).unwrap();
        residual[0] -= 1;
        residual[v] += 1;
        assert!(links.contains(0, u));
        assert!(!links.contains(u, v));
        // the freed endpoint pairs with w
        assert_eq!(residual.iter().filter(|&&r| r > 0).count(), 2);
        let open: Vec<usize> = (0..4).filter(|&i| residual[i] > 0).collect();
        assert!(!links.contains(open[0], open[1]));
        links.add(open[0], open[1]);
        assert_eq!(degrees(4, &links.links()), vec![2, 1, 1, 2]);
    }

    #[test]
    fn non_graphable_input_exhausts_budget() {
        // {3, 3, 1, 1} has an even sum but is not graphic.
        let err = wire_intra(&[3, 3, 1, 1], &[3, 3, 1, 1], ShapeParams::UNIFORM, 5, &mut seeded_rng(2));
        assert!(matches!(err, Err(Error::Wiring(_))));
        // node-level inter failure: aggregate test passes, realization does not
        let err = wire_inter(&[2, 0, 2, 0], &[2, 1, 2, 1], &[0, 0, 1, 1], ShapeParams::UNIFORM, 5, &mut seeded_rng(3));
        assert!(matches!(err, Err(Error::Wiring(_))));
    }

    #[test]
    fn random_graphable_communities_are_exact() {
        use rand::Rng;
        let mut rng = seeded_rng(4);
        let mut done = 0;
        while done < 1000 {
            let n = rng.random_range(2..40);
            let dmax = rng.random_range(1..n as u32);
            let d: Vec<u32> = (0..n).map(|_| rng.random_range(0..=dmax)).collect();
            if !erdos_gallai(&d) {
                continue;
            }
            let shape = [ShapeParams::UNIFORM, ShapeParams { alpha: 21.0, beta: 1.0 }, ShapeParams { alpha: 1.0, beta: 21.0 }][done % 3];
            let (links, _) = wire_intra(&d, &d, shape, 50, &mut rng).unwrap_or_else(|e| panic!("{d:?} {shape:?} {e}"));
            assert_eq!(degrees(n, &links), d);
            let mut sorted = links.clone();
            sorted.dedup();
            assert_eq!(sorted.len(), links.len());
            assert!(links.iter().all(|&(a, b)| a < b));
            done += 1;
        }
    }

    #[test]
    fn random_graphable_inter_specs_are_exact() {
        use rand::Rng;
        let mut rng = seeded_rng(5);
        let mut done = 0;
        while done < 1000 {
            let k = rng.random_range(2..6);
            let n = rng.random_range(k..30);
            let comm: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
            let f: Vec<u32> = (0..n).map(|_| rng.random_range(0..6)).collect();
            let parts: Vec<Vec<u32>> = (0..k)
                .map(|c| (0..n).filter(|&i| comm[i] == c).map(|i| f[i]).collect())
                .collect();
            if !inter_realizable(&parts) {
                continue;
            }
            let shape = [ShapeParams::UNIFORM, ShapeParams { alpha: 21.0, beta: 1.0 }, ShapeParams { alpha: 1.0, beta: 21.0 }][done % 3];
            let (links, _) = wire_inter(&f, &f, &comm, shape, 50, &mut rng).unwrap();
            assert_eq!(degrees(n, &links), f);
            assert!(links.iter().all(|&(a, b)| comm[a] != comm[b]));
            done += 1;
        }
    }
}
