//! Realizability of clustered degree sequences as simple graphs.
//!
//! Intra-community links live inside communities and inter-community links
//! cross them, so a clustered specification is realizable exactly when every
//! community's intra sequence is graphic and the inter sequence is
//! realizable inside the complete multipartite graph whose parts are the
//! communities.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequences::{CommunitySpec, DegreeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    IntraParity,
    IntraErdosGallai,
    InterParity,
    InterMax,
    /// Inter degrees pass the aggregate test but no node-level realization
    /// avoids intra-community pairs.
    InterRealization,
    AssignmentInfeasible,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::IntraParity => "intra_parity",
            Condition::IntraErdosGallai => "intra_erdos_gallai",
            Condition::InterParity => "inter_parity",
            Condition::InterMax => "inter_max",
            Condition::InterRealization => "inter_realization",
            Condition::AssignmentInfeasible => "assignment_infeasible",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphabilityReport {
    pub ok: bool,
    pub failing_community: Option<usize>,
    pub failing_condition: Option<Condition>,
}

impl GraphabilityReport {
    pub fn pass() -> Self {
        GraphabilityReport {
            ok: true,
            failing_community: None,
            failing_condition: None,
        }
    }

    pub fn fail(condition: Condition, community: Option<usize>) -> Self {
        GraphabilityReport {
            ok: false,
            failing_community: community,
            failing_condition: Some(condition),
        }
    }
}

impl fmt::Display for GraphabilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.failing_condition, self.failing_community) {
            (None, _) => f.write_str("graphable"),
            (Some(c), Some(i)) => write!(f, "{c} fails in community {i}"),
            (Some(c), None) => write!(f, "{c} fails"),
        }
    }
}

/// Erdős–Gallai test. The input need not be sorted.
pub fn erdos_gallai(degrees: &[u32]) -> bool {
    let mut d: Vec<u64> = degrees.iter().map(|&x| u64::from(x)).collect();
    if d.iter().sum::<u64>() % 2 == 1 {
        return false;
    }
    d.sort_unstable_by(|a, b| b.cmp(a));
    let n = d.len();
    let mut suffix = vec![0u64; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + d[i];
    }
    // at_least = number of entries >= k; non-increasing in k
    let mut at_least = n;
    let mut prefix = 0u64;
    for k in 1..=n {
        prefix += d[k - 1];
        let kk = k as u64;
        while at_least > 0 && d[at_least - 1] < kk {
            at_least -= 1;
        }
        let capped = at_least.saturating_sub(k) as u64;
        let rest = suffix[at_least.max(k)];
        if prefix > kk * (kk - 1) + kk * capped + rest {
            return false;
        }
    }
    true
}

/// Aggregate test on per-community inter degree totals: even sum and
/// `max <= sum - max`.
pub fn inter_graphable(inter: &[u64]) -> bool {
    let total: u64 = inter.iter().sum();
    let max = inter.iter().copied().max().unwrap_or(0);
    total % 2 == 0 && max <= total - max
}

/// Whether inter degrees can be realized as a simple graph with no link
/// inside a part. `parts[c]` lists the inter degrees of community `c`.
pub fn inter_realizable(parts: &[Vec<u32>]) -> bool {
    multipartite_realization(parts).is_some()
}

/// Constructive test for degree sequences inside a complete multipartite
/// host. Repeatedly lays off a vertex of the part with the largest residual
/// total, linking it to the highest-residual vertices of other parts; ties
/// go to the part with the larger residual total, re-evaluated after every
/// pick. Returns the links as `((part, index), (part, index))` pairs.
pub fn multipartite_realization(parts: &[Vec<u32>]) -> Option<Vec<((usize, usize), (usize, usize))>> {
    let total: u64 = parts.iter().flatten().map(|&x| u64::from(x)).sum();
    if total % 2 == 1 {
        return None;
    }
    let mut residual: Vec<Vec<u32>> = parts.to_vec();
    let mut part_total: Vec<u64> = parts
        .iter()
        .map(|p| p.iter().map(|&x| u64::from(x)).sum())
        .collect();
    // Per part: open vertices keyed by (residual, reversed index) so the
    // last element is the largest residual with the lowest index.
    let mut open: Vec<BTreeSet<(u32, std::cmp::Reverse<usize>)>> = residual
        .iter()
        .map(|p| {
            p.iter()
                .enumerate()
                .filter(|(_, &r)| r > 0)
                .map(|(i, &r)| (r, std::cmp::Reverse(i)))
                .collect()
        })
        .collect();
    let mut links = Vec::with_capacity((total / 2) as usize);
    let mut taken: Vec<(usize, usize)> = Vec::new();

    loop {
        let src_part = (0..parts.len())
            .filter(|&c| part_total[c] > 0)
            .max_by(|&a, &b| {
                part_total[a]
                    .cmp(&part_total[b])
                    .then_with(|| b.cmp(&a))
            });
        let Some(sp) = src_part else { break };
        let &(need, std::cmp::Reverse(sv)) = open[sp].last().expect("part with residual has an open vertex");
        open[sp].pop_last();
        residual[sp][sv] = 0;
        part_total[sp] -= u64::from(need);

        taken.clear();
        for _ in 0..need {
            let best = (0..parts.len())
                .filter(|&c| c != sp)
                .filter_map(|c| open[c].last().map(|&(r, std::cmp::Reverse(i))| (r, part_total[c], c, i)))
                .max_by(|a, b| {
                    a.0.cmp(&b.0)
                        .then(a.1.cmp(&b.1))
                        .then_with(|| b.2.cmp(&a.2))
                });
            let (r, _, c, i) = best?;
            open[c].pop_last();
            residual[c][i] = r - 1;
            part_total[c] -= 1;
            taken.push((c, i));
            links.push(((sp, sv), (c, i)));
        }
        for &(c, i) in &taken {
            if residual[c][i] > 0 {
                open[c].insert((residual[c][i], std::cmp::Reverse(i)));
            }
        }
    }
    Some(links)
}

/// Whether nodes can be placed into communities so that every node's intra
/// degree is below its community's size. Exact by Hall's theorem on the
/// nested eligibility structure: for every threshold `t`, nodes with
/// `e >= t` must fit into communities of size `> t`.
pub fn assignment_feasible(sizes: &CommunitySpec, intra: &[u32]) -> bool {
    if sizes.node_count() != intra.len() {
        return false;
    }
    let mut e: Vec<u32> = intra.to_vec();
    e.sort_unstable_by(|a, b| b.cmp(a));
    let mut s: Vec<u32> = sizes.sizes().to_vec();
    s.sort_unstable_by(|a, b| b.cmp(a));
    // capacity of communities with size > t, walking t downwards
    let mut cap = 0u64;
    let mut si = 0;
    for (count, &t) in e.iter().enumerate() {
        while si < s.len() && s[si] > t {
            cap += u64::from(s[si]);
            si += 1;
        }
        if (count as u64 + 1) > cap {
            return false;
        }
    }
    true
}

/// Full graphability test. With a membership (community index per node
/// slot), applies the per-community Erdős–Gallai test to intra degrees and
/// the aggregate and node-level tests to inter degrees. Without one, checks
/// what can be known before assignment: assignment feasibility and global
/// parities.
pub fn check_graphable(
    sizes: &CommunitySpec,
    spec: &DegreeSpec,
    membership: Option<&[usize]>,
) -> Result<GraphabilityReport> {
    if sizes.node_count() != spec.len() {
        return Err(Error::Validation(format!(
            "community sizes cover {} nodes but the degree sequence has {}",
            sizes.node_count(),
            spec.len()
        )));
    }
    let inter = spec.inter();
    let Some(membership) = membership else {
        if !assignment_feasible(sizes, spec.intra()) {
            return Ok(GraphabilityReport::fail(Condition::AssignmentInfeasible, None));
        }
        if spec.intra().iter().map(|&e| u64::from(e)).sum::<u64>() % 2 == 1 {
            return Ok(GraphabilityReport::fail(Condition::IntraParity, None));
        }
        if inter.iter().map(|&f| u64::from(f)).sum::<u64>() % 2 == 1 {
            return Ok(GraphabilityReport::fail(Condition::InterParity, None));
        }
        return Ok(GraphabilityReport::pass());
    };

    let k = sizes.len();
    if membership.len() != spec.len() {
        return Err(Error::Validation(format!(
            "membership covers {} nodes, expected {}",
            membership.len(),
            spec.len()
        )));
    }
    let mut intra_by: Vec<Vec<u32>> = vec![Vec::new(); k];
    let mut inter_by: Vec<Vec<u32>> = vec![Vec::new(); k];
    for (i, &c) in membership.iter().enumerate() {
        if c >= k {
            return Err(Error::Validation(format!(
                "node slot {i} assigned to community {c} of {k}"
            )));
        }
        intra_by[c].push(spec.intra()[i]);
        inter_by[c].push(inter[i]);
    }
    for (c, members) in intra_by.iter().enumerate() {
        if members.len() != sizes.sizes()[c] as usize {
            return Err(Error::Validation(format!(
                "community {c} holds {} nodes, expected {}",
                members.len(),
                sizes.sizes()[c]
            )));
        }
    }
    for (c, e) in intra_by.iter().enumerate() {
        if e.iter().map(|&x| u64::from(x)).sum::<u64>() % 2 == 1 {
            return Ok(GraphabilityReport::fail(Condition::IntraParity, Some(c)));
        }
        if !erdos_gallai(e) {
            return Ok(GraphabilityReport::fail(Condition::IntraErdosGallai, Some(c)));
        }
    }
    let aggregates: Vec<u64> = inter_by
        .iter()
        .map(|f| f.iter().map(|&x| u64::from(x)).sum())
        .collect();
    if aggregates.iter().sum::<u64>() % 2 == 1 {
        return Ok(GraphabilityReport::fail(Condition::InterParity, None));
    }
    if !inter_graphable(&aggregates) {
        let worst = (0..k).max_by_key(|&c| (aggregates[c], std::cmp::Reverse(c)));
        return Ok(GraphabilityReport::fail(Condition::InterMax, worst));
    }
    if !inter_realizable(&inter_by) {
        return Ok(GraphabilityReport::fail(Condition::InterRealization, None));
    }
    Ok(GraphabilityReport::pass())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Degree sequences of every labeled simple graph on `n` vertices.
    fn graphic_sequences(n: usize) -> BTreeSet<Vec<u32>> {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        let mut out = BTreeSet::new();
        for mask in 0u32..(1 << pairs.len()) {
            let mut d = vec![0u32; n];
            for (b, &(u, v)) in pairs.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    d[u] += 1;
                    d[v] += 1;
                }
            }
            d.sort_unstable();
            out.insert(d);
        }
        out
    }

    #[test]
    fn erdos_gallai_examples() {
        assert!(erdos_gallai(&[3, 3, 3, 3]));
        assert!(!erdos_gallai(&[3, 1, 1]));
        assert!(erdos_gallai(&[4, 4, 3, 3, 4, 3, 3, 2, 2, 2]));
        assert!(!erdos_gallai(&[3, 3, 1, 1]));
        assert!(!erdos_gallai(&[4, 1, 1, 1, 1, 0]) || erdos_gallai(&[4, 1, 1, 1, 1]));
        assert!(erdos_gallai(&[]));
        assert!(erdos_gallai(&[0, 0]));
        assert!(!erdos_gallai(&[1]));
    }

    #[test]
    fn erdos_gallai_matches_enumeration_up_to_six() {
        for n in 1..=6 {
            let graphic = graphic_sequences(n);
            let mut seq = vec![0u32; n];
            loop {
                let mut sorted = seq.clone();
                sorted.sort_unstable();
                assert_eq!(erdos_gallai(&seq), graphic.contains(&sorted), "{seq:?}");
                // odometer over {0..=n-1}^n
                let mut i = 0;
                while i < n && seq[i] == (n - 1) as u32 {
                    seq[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
                seq[i] += 1;
            }
        }
    }

    #[test]
    fn inter_examples() {
        assert!(inter_graphable(&[3, 2, 1]));
        assert!(!inter_graphable(&[5, 1, 1]));
        assert!(inter_graphable(&[7, 4, 3]));
        assert!(!inter_graphable(&[3, 2, 2]));
        assert!(inter_graphable(&[4, 4]));
        assert!(!inter_graphable(&[4, 2]));
    }

    #[test]
    fn aggregate_test_is_not_node_level_sufficient() {
        let parts = vec![vec![2, 0], vec![2, 0]];
        assert!(inter_graphable(&[2, 2]));
        assert!(!inter_realizable(&parts));
    }

    #[test]
    fn multipartite_witness_is_valid() {
        let parts = vec![vec![2, 2], vec![3, 2], vec![1, 2]];
        let links = multipartite_realization(&parts).unwrap();
        let mut deg = parts.iter().map(|p| vec![0u32; p.len()]).collect::<Vec<_>>();
        let mut seen = BTreeSet::new();
        for &(a, b) in &links {
            assert_ne!(a.0, b.0);
            assert!(seen.insert((a.min(b), a.max(b))));
            deg[a.0][a.1] += 1;
            deg[b.0][b.1] += 1;
        }
        assert_eq!(deg, parts);
    }

    #[test]
    fn assignment_examples() {
        let two_pairs = CommunitySpec::new(vec![2, 2]).unwrap();
        assert!(assignment_feasible(&two_pairs, &[1, 1, 1, 1]));
        assert!(!assignment_feasible(&two_pairs, &[3, 1, 1, 1]));
        let single = CommunitySpec::new(vec![3]).unwrap();
        assert!(!assignment_feasible(&single, &[3, 1, 0]));
        let mixed = CommunitySpec::new(vec![5, 1]).unwrap();
        assert!(assignment_feasible(&mixed, &[4, 4, 4, 4, 4, 0]));
        assert!(!assignment_feasible(&mixed, &[4, 4, 4, 4, 4, 1]));
    }

    fn brute_assignment(sizes: &[u32], intra: &[u32]) -> bool {
        fn rec(i: usize, cap: &mut [u32], sizes: &[u32], intra: &[u32]) -> bool {
            if i == intra.len() {
                return true;
            }
            for c in 0..cap.len() {
                if cap[c] > 0 && intra[i] < sizes[c] {
                    cap[c] -= 1;
                    let ok = rec(i + 1, cap, sizes, intra);
                    cap[c] += 1;
                    if ok {
                        return true;
                    }
                }
            }
            false
        }
        let mut cap = sizes.to_vec();
        rec(0, &mut cap, sizes, intra)
    }

    proptest! {
        #[test]
        fn assignment_agrees_with_enumeration(
            sizes in prop::collection::vec(1u32..5, 1..4),
            seed in any::<u64>(),
        ) {
            use rand::Rng;
            let n: u32 = sizes.iter().sum();
            prop_assume!(n <= 10);
            let mut rng = crate::seeded_rng(seed);
            let intra: Vec<u32> = (0..n).map(|_| rng.random_range(0..5)).collect();
            let spec = CommunitySpec::new(sizes.clone()).unwrap();
            prop_assert_eq!(assignment_feasible(&spec, &intra), brute_assignment(&sizes, &intra));
        }

        #[test]
        fn erdos_gallai_is_permutation_invariant(mut d in prop::collection::vec(0u32..8, 0..10), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let before = erdos_gallai(&d);
            d.shuffle(&mut crate::seeded_rng(seed));
            prop_assert_eq!(before, erdos_gallai(&d));
        }
    }

    /// Strict inequalities alone do not protect every edge slot: the two
    /// degree-1 nodes below cannot be the removed pair.
    #[test]
    fn strict_sequence_with_fragile_slot() {
        assert!(erdos_gallai(&[4, 2, 2, 2, 1, 1]));
        assert!(!erdos_gallai(&[4, 2, 2, 2, 0, 0]));
    }

    /// Some realization links a maximum-degree node to any other non-zero
    /// node, so removing that slot keeps the sequence graphic.
    #[test]
    fn slot_at_maximum_degree_can_always_be_removed() {
        for n in 2..=7usize {
            let mut seq = vec![0u32; n];
            loop {
                if seq.iter().sum::<u32>() % 2 == 0 && erdos_gallai(&seq) {
                    let top = (0..n).max_by_key(|&i| (seq[i], std::cmp::Reverse(i))).unwrap();
                    for j in (0..n).filter(|&j| j != top && seq[j] > 0) {
                        let mut s = seq.clone();
                        s[top] -= 1;
                        s[j] -= 1;
                        assert!(erdos_gallai(&s), "{seq:?} -> {s:?}");
                    }
                }
                let mut i = 0;
                while i < n && seq[i] == (n - 1) as u32 {
                    seq[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
                seq[i] += 1;
            }
        }
    }

    #[test]
    fn ten_node_membership_is_graphable() {
        let sizes = CommunitySpec::new(vec![4, 4, 2]).unwrap();
        let spec = DegreeSpec::new(
            vec![4, 4, 4, 3, 3, 3, 3, 2, 2, 2],
            vec![3, 3, 3, 2, 2, 2, 2, 1, 1, 1],
        )
        .unwrap();
        // community 0 gets intra degrees 3,3,3,2: odd sum
        let membership = [0, 0, 0, 1, 0, 1, 1, 2, 1, 2];
        let report = check_graphable(&sizes, &spec, Some(&membership)).unwrap();
        assert!(!report.ok);
        assert_eq!(report.failing_condition, Some(Condition::IntraParity));
        assert_eq!(report.failing_community, Some(0));

        // intra degrees per community: {3,3,2,2}, {3,2,2,1}, {1,1}
        let membership = [0, 0, 1, 0, 0, 1, 1, 1, 2, 2];
        let report = check_graphable(&sizes, &spec, Some(&membership)).unwrap();
        assert!(report.ok, "{report}");
    }

    #[test]
    fn pre_assignment_mode() {
        let sizes = CommunitySpec::new(vec![3]).unwrap();
        let spec = DegreeSpec::new(vec![3, 3, 2], vec![3, 1, 2]).unwrap();
        let report = check_graphable(&sizes, &spec, None).unwrap();
        assert_eq!(report.failing_condition, Some(Condition::AssignmentInfeasible));

        let sizes = CommunitySpec::new(vec![4, 4, 2]).unwrap();
        let spec = DegreeSpec::new(
            vec![4, 4, 4, 3, 3, 3, 3, 2, 2, 2],
            vec![3, 3, 3, 2, 2, 2, 2, 1, 1, 1],
        )
        .unwrap();
        assert!(check_graphable(&sizes, &spec, None).unwrap().ok);
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let sizes = CommunitySpec::new(vec![2]).unwrap();
        let spec = DegreeSpec::new(vec![1, 1, 2], vec![1, 1, 0]).unwrap();
        assert!(matches!(check_graphable(&sizes, &spec, None), Err(Error::Validation(_))));
    }

    #[test]
    fn inter_max_names_the_heaviest_community() {
        let sizes = CommunitySpec::new(vec![1, 1, 1]).unwrap();
        let spec = DegreeSpec::new(vec![4, 1, 1], vec![0, 0, 0]).unwrap();
        let r = check_graphable(&sizes, &spec, Some(&[0, 1, 2])).unwrap();
        assert_eq!(r, GraphabilityReport::fail(Condition::InterMax, Some(0)));
    }
}
