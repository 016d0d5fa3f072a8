use rand::seq::SliceRandom;
use rand::{Rng as _, RngCore};

use super::ShapeParams;
use crate::error::{Error, Result};
use crate::fenwick::Fenwick;
use crate::graphability::{assignment_feasible, Condition, GraphabilityReport};
use crate::sequences::{CommunitySpec, DegreeSpec};

/// One `(total, intra)` pair of a degree specification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DegreeTuple {
    pub total: u32,
    pub intra: u32,
}

impl DegreeTuple {
    pub fn inter(&self) -> u32 {
        self.total - self.intra
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub community: usize,
    pub tuple: DegreeTuple,
}

/// Community and degree tuple for every node slot of one timestep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub placements: Vec<Placement>,
}

impl Assignment {
    pub fn membership(&self) -> Vec<usize> {
        self.placements.iter().map(|p| p.community).collect()
    }

    /// Degree specification in slot order, aligned with [`Self::membership`].
    pub fn degree_spec(&self) -> Result<DegreeSpec> {
        DegreeSpec::new(
            self.placements.iter().map(|p| p.tuple.total).collect(),
            self.placements.iter().map(|p| p.tuple.intra).collect(),
        )
    }

    pub fn community_sizes(&self, k: usize) -> Vec<u32> {
        let mut s = vec![0u32; k];
        for p in &self.placements {
            s[p.community] += 1;
        }
        s
    }
}

fn tuples_of(spec: &DegreeSpec) -> Vec<DegreeTuple> {
    spec.pairs()
        .map(|(total, intra)| DegreeTuple { total, intra })
        .collect()
}

fn infeasible() -> Error {
    Error::Graphability {
        step: 0,
        report: GraphabilityReport::fail(Condition::AssignmentInfeasible, None),
    }
}

/// First-step assignment. Tuples are taken in random order within
/// decreasing intra degree, each placed into a community drawn with
/// probability proportional to its free capacity among those large enough
/// to hold its intra degree. Under the Hall condition checked by
/// [`assignment_feasible`] this never dead-ends. The result is indexed by
/// the tuple's position in `spec`.
pub fn assign_initial<R: RngCore + ?Sized>(
    sizes: &CommunitySpec,
    spec: &DegreeSpec,
    rng: &mut R,
) -> Result<Assignment> {
    if sizes.node_count() != spec.len() {
        return Err(Error::Validation(format!(
            "community sizes cover {} nodes but the degree sequence has {}",
            sizes.node_count(),
            spec.len()
        )));
    }
    if !assignment_feasible(sizes, spec.intra()) {
        return Err(infeasible());
    }
    let tuples = tuples_of(spec);
    let mut order: Vec<usize> = (0..tuples.len()).collect();
    order.shuffle(rng);
    order.sort_by(|&a, &b| tuples[b].intra.cmp(&tuples[a].intra));

    let s = sizes.sizes();
    let mut free: Vec<u64> = s.iter().map(|&x| u64::from(x)).collect();
    // communities by size, so the eligible set is a prefix
    let mut by_size: Vec<usize> = (0..s.len()).collect();
    by_size.sort_by(|&a, &b| s[b].cmp(&s[a]).then(a.cmp(&b)));
    let mut pool = Fenwick::from_values(&by_size.iter().map(|&c| free[c]).collect::<Vec<_>>());
    let mut prefix = 0usize;
    let mut placements = vec![
        Placement {
            community: 0,
            tuple: DegreeTuple { total: 0, intra: 0 },
        };
        tuples.len()
    ];
    // Tuples arrive by decreasing intra degree, so the eligible prefix only
    // grows. Eligible mass is the Fenwick prefix sum up to `prefix`.
    let mut eligible_mass = 0u64;
    for &i in &order {
        let e = tuples[i].intra;
        while prefix < by_size.len() && s[by_size[prefix]] > e {
            eligible_mass += free[by_size[prefix]];
            prefix += 1;
        }
        if eligible_mass == 0 {
            return Err(infeasible());
        }
        let pos = pool.find(rng.random_range(0..eligible_mass));
        let c = by_size[pos];
        free[c] -= 1;
        eligible_mass -= 1;
        pool.set(pos, free[c]);
        placements[i] = Placement {
            community: c,
            tuple: tuples[i],
        };
    }
    Ok(Assignment { placements })
}

/// Later-step assignment. Node `i` keeps community `community_of[i]`; its
/// degree tuple is drawn from the step's degree specification.
///
/// Survivors (`previous_total[i]` is `Some`) are visited by decreasing
/// previous total degree, with newborns interleaved at random positions.
/// Each node samples a position through `Beta(shape)` over the remaining
/// tuples sorted by `(total, intra)`, so with `alpha > beta` nodes that held
/// high degrees draw from the high end again. A draw whose intra degree
/// would make the remaining assignment infeasible moves to the nearest
/// feasible tuple.
pub fn assign_tuples<R: RngCore + ?Sized>(
    community_of: &[usize],
    previous_total: &[Option<u32>],
    sizes: &CommunitySpec,
    spec: &DegreeSpec,
    shape: ShapeParams,
    rng: &mut R,
) -> Result<Assignment> {
    let n = community_of.len();
    if previous_total.len() != n || spec.len() != n || sizes.node_count() != n {
        return Err(Error::Validation(format!(
            "temporal assignment of {n} nodes against {} tuples and {} community slots",
            spec.len(),
            sizes.node_count()
        )));
    }
    let s = sizes.sizes();
    let mut held = vec![0u32; s.len()];
    for &c in community_of {
        if c >= s.len() {
            return Err(Error::Validation(format!("community {c} out of range")));
        }
        held[c] += 1;
    }
    if held != s {
        return Err(Error::Validation(
            "node memberships do not match the community sizes".into(),
        ));
    }

    let mut tuples = tuples_of(spec);
    tuples.sort_unstable();
    let mut taken = Fenwick::from_values(&vec![1u64; n]);

    // slack[t] = #nodes in communities of size > t  -  #tuples with e >= t
    let top = s.iter().copied().max().unwrap_or(0) as usize;
    let max_e = tuples.iter().map(|t| t.intra).max().unwrap_or(0) as usize;
    let len = top.max(max_e) + 2;
    let mut slack = vec![0i64; len];
    for &c in community_of {
        for v in slack.iter_mut().take(s[c] as usize) {
            *v += 1;
        }
    }
    for t in &tuples {
        for v in slack.iter_mut().take(t.intra as usize + 1) {
            *v -= 1;
        }
    }
    if slack.iter().skip(1).any(|&v| v < 0) {
        return Err(infeasible());
    }
    let fits = |slack: &[i64], e: u32, size: u32| {
        e < size && slack[(e as usize + 1)..size as usize].iter().all(|&v| v >= 1)
    };

    let mut survivors: Vec<usize> = (0..n).filter(|&i| previous_total[i].is_some()).collect();
    survivors.shuffle(rng);
    survivors.sort_by(|&a, &b| previous_total[b].cmp(&previous_total[a]));
    let mut order = survivors;
    for i in (0..n).filter(|&i| previous_total[i].is_none()) {
        let at = rng.random_range(0..=order.len());
        order.insert(at, i);
    }

    let sampler = shape.sampler();
    let mut placements = vec![
        Placement {
            community: 0,
            tuple: DegreeTuple { total: 0, intra: 0 },
        };
        n
    ];
    for (step, &i) in order.iter().enumerate() {
        let remaining = (n - step) as u64;
        let c = community_of[i];
        let rank = sampler.index(remaining, rng);
        let mut pick = None;
        for delta in 0..remaining {
            let up = rank + delta;
            if up < remaining {
                let pos = taken.find(up);
                if fits(&slack, tuples[pos].intra, s[c]) {
                    pick = Some(pos);
                    break;
                }
            }
            if delta > 0 && delta <= rank {
                let pos = taken.find(rank - delta);
                if fits(&slack, tuples[pos].intra, s[c]) {
                    pick = Some(pos);
                    break;
                }
            }
            if up >= remaining && delta > rank {
                break;
            }
        }
        let Some(pos) = pick else {
            return Err(infeasible());
        };
        let t = tuples[pos];
        taken.set(pos, 0);
        for v in &mut slack[(t.intra as usize + 1)..s[c] as usize] {
            *v -= 1;
        }
        placements[i] = Placement {
            community: c,
            tuple: t,
        };
    }
    Ok(Assignment { placements })
}

/// Makes every community's intra-degree sum even by exchanging the degree
/// tuples of two nodes in different odd communities whose intra degrees
/// differ in parity. Exchanges between nodes of equal total degree are
/// preferred; an exchange never gives a node an intra degree its community
/// cannot hold. Returns the number of exchanges.
pub fn repair_intra_parity<R: RngCore + ?Sized>(
    assignment: &mut Assignment,
    sizes: &[u32],
    rng: &mut R,
) -> Result<usize> {
    let k = sizes.len();
    let mut sum = vec![0u64; k];
    for p in &assignment.placements {
        sum[p.community] += u64::from(p.tuple.intra);
    }
    let mut odd: Vec<usize> = (0..k).filter(|&c| sum[c] % 2 == 1).collect();
    if odd.len() % 2 == 1 {
        return Err(Error::Graphability {
            step: 0,
            report: GraphabilityReport::fail(Condition::IntraParity, Some(odd[0])),
        });
    }
    odd.shuffle(rng);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, p) in assignment.placements.iter().enumerate() {
        members[p.community].push(i);
    }
    let mut swaps = 0;
    while let Some(a) = odd.pop() {
        let pl = &assignment.placements;
        let mut best: Option<(usize, usize, usize)> = None;
        'search: for (oi, &b) in odd.iter().enumerate() {
            for &x in &members[a] {
                for &y in &members[b] {
                    let (tx, ty) = (pl[x].tuple, pl[y].tuple);
                    if (tx.intra + ty.intra) % 2 == 0 || tx.intra >= sizes[b] || ty.intra >= sizes[a] {
                        continue;
                    }
                    if tx.total == ty.total {
                        best = Some((oi, x, y));
                        break 'search;
                    }
                    best.get_or_insert((oi, x, y));
                }
            }
        }
        let Some((oi, x, y)) = best else {
            return Err(Error::Graphability {
                step: 0,
                report: GraphabilityReport::fail(Condition::IntraParity, Some(a)),
            });
        };
        odd.swap_remove(oi);
        let tx = assignment.placements[x].tuple;
        assignment.placements[x].tuple = assignment.placements[y].tuple;
        assignment.placements[y].tuple = tx;
        swaps += 1;
    }
    Ok(swaps)
}
