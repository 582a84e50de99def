use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::coupling::{CouplingMap, Edge};
use crate::error::{Error, Result};

/// Groups of patches; patches within a group are more than `separation` apart
/// and can be calibrated in the same circuits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchPlan {
    pub groups: Vec<Vec<Vec<usize>>>,
    pub separation: usize,
}

impl PatchPlan {
    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn patches(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.groups.iter().flatten()
    }

    pub fn num_patches(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// Basis-preparation circuits needed: `2^p` per group for its widest patch.
    pub fn num_circuits(&self) -> usize {
        self.groups
            .iter()
            .map(|g| 1usize << g.iter().map(Vec::len).max().unwrap_or(0))
            .sum()
    }

    /// Check coverage of `edges`, patch adjacency on `map`, and pairwise
    /// separation within groups measured on `distance`.
    pub fn validate(&self, map: &CouplingMap, edges: &BTreeSet<Edge>, distance: &CouplingMap) -> Result<()> {
        let mut covered = BTreeSet::new();
        for p in self.patches() {
            for (a, &x) in p.iter().enumerate() {
                for &y in &p[a + 1..] {
                    if !map.has_edge(x, y) {
                        return Err(Error::invalid(format!("patch {p:?} is not a clique of the map")));
                    }
                    covered.insert((x.min(y), x.max(y)));
                }
            }
        }
        if let Some(e) = edges.difference(&covered).next() {
            return Err(Error::invalid(format!("edge {e:?} is not covered")));
        }
        for g in &self.groups {
            for (a, p) in g.iter().enumerate() {
                for q in &g[a + 1..] {
                    for &x in p {
                        let d = distance.distances_from(x)?;
                        if q.iter().any(|&y| d[y].is_some_and(|d| d <= self.separation)) {
                            return Err(Error::invalid(format!("patches {p:?} and {q:?} are within {}", self.separation)));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Greedy distance-`k` patch grouping over the map's own edges.
pub fn greedy_patch_plan(map: &CouplingMap, k: usize) -> Result<PatchPlan> {
    if map.num_edges() == 0 {
        return Err(Error::Empty("coupling map edges"));
    }
    plan_patches(map.edges(), map, k)
}

/// Greedy grouping of `edges` with separation measured on `distance`.
///
/// Each group starts from the smallest uncovered edge. Everything within `k`
/// of the group is blocked; the group then grows outward one BFS ring at a
/// time, taking any uncovered edge (in ascending order) that touches the ring
/// and has both endpoints unblocked. When the ring runs dry the search jumps
/// to the smallest remaining unblocked edge, and the group closes once none
/// is left.
pub fn plan_patches(edges: &BTreeSet<Edge>, distance: &CouplingMap, k: usize) -> Result<PatchPlan> {
    let n = distance.num_qubits();
    if let Some(&(_, b)) = edges.iter().find(|&&(_, b)| b >= n) {
        return Err(Error::IndexOutOfRange { index: b, num_qubits: n });
    }
    let mut uncovered: BTreeSet<Edge> = edges.clone();
    let mut incident: Vec<Vec<Edge>> = vec![Vec::new(); n];
    for &(a, b) in edges {
        incident[a].push((a, b));
        incident[b].push((a, b));
    }
    for list in &mut incident {
        list.sort_unstable();
    }

    let mut groups = Vec::new();
    while let Some(seed) = uncovered.pop_first() {
        let mut group = vec![seed];
        let mut blocked = distance.ball(&[seed.0, seed.1], k);
        let mut visited = vec![false; n];
        loop {
            let ring: Vec<usize> = blocked
                .iter()
                .flat_map(|&u| distance.neighbors(u).iter().copied())
                .filter(|w| !blocked.contains(w) && !visited[*w])
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let mut candidates: Vec<Edge> = Vec::new();
            if ring.is_empty() {
                match uncovered.iter().find(|&&(a, b)| !blocked.contains(&a) && !blocked.contains(&b)) {
                    Some(&e) => candidates.push(e),
                    None => break,
                }
            }
            for &b in &ring {
                visited[b] = true;
                candidates.extend(incident[b].iter().copied());
            }
            for e in candidates {
                if uncovered.contains(&e) && !blocked.contains(&e.0) && !blocked.contains(&e.1) {
                    uncovered.remove(&e);
                    group.push(e);
                    blocked.extend(distance.ball(&[e.0, e.1], k));
                }
            }
        }
        group.sort_unstable();
        groups.push(group.into_iter().map(|(a, b)| vec![a, b]).collect());
    }
    Ok(PatchPlan { groups, separation: k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::coupling::{preset, Architecture};

    #[test]
    fn single_edge_single_group() {
        let m = CouplingMap::new(2, [(0, 1)]).unwrap();
        let plan = greedy_patch_plan(&m, 1).unwrap();
        assert_eq!(plan.groups, vec![vec![vec![0, 1]]]);
        assert_eq!(plan.num_circuits(), 4);
    }

    #[test]
    fn empty_map_rejected() {
        let m = CouplingMap::new(3, []).unwrap();
        assert!(greedy_patch_plan(&m, 1).is_err());
    }

    #[test]
    fn linear_chain_groups() {
        let m: CouplingMap = "linear:8".parse::<Architecture>().unwrap().generate().unwrap();
        let plan = greedy_patch_plan(&m, 1).unwrap();
        plan.validate(&m, m.edges(), &m).unwrap();
        // k = 1 on a path: every third edge can share a group
        assert_eq!(plan.num_groups(), 3);
        assert_eq!(plan.groups[0], vec![vec![0, 1], vec![3, 4], vec![6, 7]]);
    }

    #[test]
    fn tokyo_plan_is_valid() {
        let t = preset("tokyo").unwrap();
        let plan = greedy_patch_plan(&t, 1).unwrap();
        plan.validate(&t, t.edges(), &t).unwrap();
        assert_eq!(plan.num_patches(), 35);
        assert!(4 * plan.num_groups() <= 80, "{} groups", plan.num_groups());
    }

    #[test]
    fn zero_separation_only_forbids_sharing_qubits() {
        let m: CouplingMap = "linear:5".parse::<Architecture>().unwrap().generate().unwrap();
        let plan = greedy_patch_plan(&m, 0).unwrap();
        plan.validate(&m, m.edges(), &m).unwrap();
        assert_eq!(plan.num_groups(), 2);
    }
}
