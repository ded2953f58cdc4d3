//! Exact j-component census of an explicit edge set.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::combinatorics::Universe;
use crate::sampling::EdgeSet;
use crate::{Error, Result};

/// Default cap on `C(n, j)` for a census.
pub const DEFAULT_MEMORY_BOUND: u64 = 100_000_000;

/// Disjoint sets over `0..len` with path compression and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
    unions: u64,
}

impl UnionFind {
    pub fn new(len: usize) -> Self {
        UnionFind { parent: (0..len as u32).collect(), size: vec![1; len], unions: 0 }
    }

    pub fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    /// Merges the sets of `a` and `b`; returns whether they were distinct.
    pub fn union(&mut self, a: u32, b: u32) -> bool {
        self.unions += 1;
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        true
    }

    /// Union calls made, merging or not.
    pub fn unions(&self) -> u64 {
        self.unions
    }

    pub fn set_size(&mut self, x: u32) -> u32 {
        let r = self.find(x);
        self.size[r as usize]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentInfo {
    pub size: u64,
    pub edges: u64,
    pub is_tree: bool,
}

#[derive(Clone, Debug)]
pub struct ComponentCensus {
    pub cconst: u64,
    pub num_jsets: u64,
    /// Component index of every j-set, into `components`.
    pub labels: Vec<u32>,
    /// Sorted by descending size, ties by ascending smallest member.
    pub components: Vec<ComponentInfo>,
    /// Union calls made during construction: `C` per edge.
    pub unions: u64,
}

/// Fails with a capacity error when a census over `universe` would exceed `bound` j-sets.
pub fn check_census_capacity(universe: &Universe, bound: u64) -> Result<()> {
    let total = universe.num_jsets;
    if total > bound || total > u32::MAX as u64 {
        return Err(Error::Capacity(format!(
            "C(n,j) = {total} j-sets exceeds the census memory bound {}",
            bound.min(u32::MAX as u64)
        )));
    }
    Ok(())
}

pub fn census(universe: &Universe, edges: &EdgeSet) -> Result<ComponentCensus> {
    census_with_bound(universe, edges, DEFAULT_MEMORY_BOUND)
}

pub fn census_with_bound(universe: &Universe, edges: &EdgeSet, bound: u64) -> Result<ComponentCensus> {
    if (edges.n, edges.k) != (universe.n, universe.k) {
        return Err(Error::Validation(format!(
            "edge set over n={} k={} does not match n={} k={}",
            edges.n, edges.k, universe.n, universe.k
        )));
    }
    check_census_capacity(universe, bound)?;
    let total = universe.num_jsets;
    let mut uf = UnionFind::new(total as usize);
    let mut kv = Vec::new();
    let mut subs = Vec::new();
    for &e in edges.ranks() {
        universe.unrank_into(e, universe.k, &mut kv);
        universe.subset_ranks(&kv, universe.j, &mut subs);
        for &s in &subs[1..] {
            uf.union(subs[0] as u32, s as u32);
        }
    }

    // number components in order of their smallest member
    let mut root_label = vec![u32::MAX; total as usize];
    let mut labels = vec![0u32; total as usize];
    let mut info: Vec<ComponentInfo> = Vec::new();
    for x in 0..total as u32 {
        let r = uf.find(x) as usize;
        if root_label[r] == u32::MAX {
            root_label[r] = info.len() as u32;
            info.push(ComponentInfo { size: 0, edges: 0, is_tree: false });
        }
        labels[x as usize] = root_label[r];
        info[root_label[r] as usize].size += 1;
    }
    for &e in edges.ranks() {
        universe.unrank_into(e, universe.k, &mut kv);
        let first = universe.rank_masked(&kv, universe.jsubset_patterns()[0]);
        info[labels[first as usize] as usize].edges += 1;
    }
    let cconst = universe.cconst();
    for c in &mut info {
        c.is_tree = c.size == cconst * c.edges + 1;
    }

    let mut order: Vec<u32> = (0..info.len() as u32).collect();
    order.sort_by(|&a, &b| info[b as usize].size.cmp(&info[a as usize].size).then(a.cmp(&b)));
    let mut relabel = vec![0u32; info.len()];
    for (new, &old) in order.iter().enumerate() {
        relabel[old as usize] = new as u32;
    }
    for l in &mut labels {
        *l = relabel[*l as usize];
    }
    let components = order.iter().map(|&o| info[o as usize]).collect();
    Ok(ComponentCensus { cconst, num_jsets: total, labels, components, unions: uf.unions() })
}

impl ComponentCensus {
    /// Members of component `id`, ascending.
    pub fn members(&self, id: u32) -> Vec<u64> {
        self.labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == id)
            .map(|(r, _)| r as u64)
            .collect()
    }

    pub fn max_size(&self) -> u64 {
        self.components.first().map_or(0, |c| c.size)
    }

    /// Canonical partition: each j-set mapped to the smallest rank in its component.
    pub fn canonical_labels(&self) -> Vec<u64> {
        canonical(&self.labels)
    }

    /// Writes `component_id,size,edges,is_tree` rows, descending by size.
    pub fn write_csv<W: Write>(&self, w: W, include_singletons: bool) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["component_id", "size", "edges", "is_tree"])
            .map_err(csv_err)?;
        for (id, c) in self.components.iter().enumerate() {
            if c.size == 1 && c.edges == 0 && !include_singletons {
                continue;
            }
            out.write_record([
                id.to_string(),
                c.size.to_string(),
                c.edges.to_string(),
                c.is_tree.to_string(),
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Maps arbitrary component labels to the smallest index carrying each label.
pub fn canonical(labels: &[u32]) -> Vec<u64> {
    let mut first = std::collections::HashMap::new();
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| *first.entry(*l).or_insert(i as u64))
        .collect()
}

/// Two largest component sizes, `L2 = 0` when there is a single component.
pub fn largest_two(census: &ComponentCensus) -> (u64, u64) {
    let l1 = census.components.first().map_or(0, |c| c.size);
    let l2 = census.components.get(1).map_or(0, |c| c.size);
    (l1, l2)
}

/// `X`: j-sets in components of at least `threshold` j-sets.
pub fn count_in_large(census: &ComponentCensus, threshold: f64) -> u64 {
    census.components.iter().filter(|c| c.size as f64 >= threshold).map(|c| c.size).sum()
}

/// Tree flag per component, `size == C e + 1`.
pub fn classify_trees(census: &ComponentCensus) -> Vec<bool> {
    census.components.iter().map(|c| c.is_tree).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn es(u: &Universe, edges: &[&[u32]]) -> EdgeSet {
        EdgeSet::new(u.n, u.k, edges.iter().map(|e| u.rank(e)).collect()).unwrap()
    }

    #[test]
    fn empty_edge_set_is_all_singletons() {
        let u = Universe::new(8, 3, 2).unwrap();
        let c = census(&u, &EdgeSet::empty(8, 3)).unwrap();
        assert_eq!(c.components.len(), 28);
        assert_eq!(largest_two(&c), (1, 1));
        assert!(classify_trees(&c).iter().all(|&t| t));
        assert_eq!(count_in_large(&c, 1.0), 28);
        assert_eq!(count_in_large(&c, 29.0), 0);
    }

    #[test]
    fn single_edge() {
        let u = Universe::new(5, 3, 2).unwrap();
        let c = census(&u, &es(&u, &[&[0, 2, 4]])).unwrap();
        assert_eq!(c.components[0], ComponentInfo { size: 3, edges: 1, is_tree: true });
        assert_eq!(c.unions, 2);
        assert_eq!(c.components.iter().map(|c| c.size).sum::<u64>(), 10);
        assert_eq!(c.members(0), vec![u.rank(&[0, 2]), u.rank(&[0, 4]), u.rank(&[2, 4])]);
    }

    #[test]
    fn overlapping_pair_is_not_a_tree() {
        // {0,1,2,3} and {0,1,2,4} share the 2-sets {0,1}, {0,2}, {1,2}
        let u = Universe::new(6, 4, 2).unwrap();
        let c = census(&u, &es(&u, &[&[0, 1, 2, 3], &[0, 1, 2, 4]])).unwrap();
        // 6 + 6 - 3 distinct 2-sets, but C e + 1 = 5 * 2 + 1 = 11
        assert_eq!(c.components[0], ComponentInfo { size: 9, edges: 2, is_tree: false });
        // disjoint-enough pair sharing one 2-set is a tree
        let c = census(&u, &es(&u, &[&[0, 1, 2, 3], &[0, 1, 4, 5]])).unwrap();
        assert_eq!(c.components[0], ComponentInfo { size: 11, edges: 2, is_tree: true });
    }

    #[test]
    fn graph_components() {
        let u = Universe::new(6, 2, 1).unwrap();
        let c = census(&u, &es(&u, &[&[0, 1], &[1, 2], &[3, 4]])).unwrap();
        assert_eq!(largest_two(&c), (3, 2));
        assert_eq!(c.canonical_labels(), vec![0, 0, 0, 3, 3, 5]);
        assert_eq!(classify_trees(&c), vec![true, true, true]);
    }

    #[test]
    fn capacity_bound() {
        let u = Universe::new(50, 3, 2).unwrap();
        assert!(census_with_bound(&u, &EdgeSet::empty(50, 3), 1000).unwrap_err().is_capacity());
    }

    #[test]
    fn csv_rows() {
        let u = Universe::new(5, 3, 2).unwrap();
        let c = census(&u, &es(&u, &[&[0, 2, 4]])).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf, false).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "component_id,size,edges,is_tree\n0,3,1,true\n");
        let mut buf = Vec::new();
        c.write_csv(&mut buf, true).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 8);
    }

    #[test]
    fn union_find_basics() {
        let mut uf = UnionFind::new(5);
        assert!(uf.union(0, 1));
        assert!(uf.union(3, 4));
        assert!(!uf.union(1, 0));
        assert!(uf.union(1, 4));
        assert_eq!(uf.set_size(3), 4);
        assert_eq!(uf.set_size(2), 1);
        assert_eq!(uf.unions(), 4);
    }
}
