//! Groups robots whose paths conflict directly or transitively.

use super::detect::Conflict;
use crate::geometry::Aabb;
use crate::global_planner::RobotId;
use std::collections::BTreeMap;

/// Disjoint-set forest with path halving and union by rank.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return a;
        }
        if self.rank[a] < self.rank[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        if self.rank[a] == self.rank[b] {
            self.rank[a] += 1;
        }
        a
    }
}

/// Connected component of the conflict graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictCluster {
    /// Sorted ascending.
    pub members: Vec<RobotId>,
    /// Union of the member conflicts' regions.
    pub bbox: Aabb,
    /// Indices into the input conflict list.
    pub conflicts: Vec<usize>,
}

/// Connected components of the graph whose edges are conflict pairs,
/// ordered by their smallest member.
pub fn cluster_conflicts(conflicts: &[Conflict]) -> Vec<ConflictCluster> {
    let mut index: BTreeMap<RobotId, usize> = BTreeMap::new();
    for c in conflicts {
        let n = index.len();
        index.entry(c.robot_a).or_insert(n);
        let n = index.len();
        index.entry(c.robot_b).or_insert(n);
    }
    let mut uf = UnionFind::new(index.len());
    for c in conflicts {
        uf.union(index[&c.robot_a], index[&c.robot_b]);
    }

    let mut by_root: BTreeMap<usize, ConflictCluster> = BTreeMap::new();
    for (k, c) in conflicts.iter().enumerate() {
        let root = uf.find(index[&c.robot_a]);
        by_root
            .entry(root)
            .and_modify(|cl| {
                cl.bbox = cl.bbox.union(c.region);
                cl.conflicts.push(k);
            })
            .or_insert_with(|| ConflictCluster {
                members: Vec::new(),
                bbox: c.region,
                conflicts: vec![k],
            });
    }
    for (&robot, &i) in &index {
        let root = uf.find(i);
        by_root.get_mut(&root).unwrap().members.push(robot);
    }
    let mut clusters: Vec<ConflictCluster> = by_root.into_values().collect();
    for cl in &mut clusters {
        cl.members.sort_unstable();
    }
    clusters.sort_by_key(|cl| cl.members[0]);
    clusters
}
