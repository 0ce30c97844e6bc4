//! Undirected friendship networks in compressed sparse row form.

mod generate;
mod io;

use std::collections::HashMap;

use crate::error::{Error, Result};

pub use generate::{configuration_model, powerlaw_cluster_graph};
pub use io::{load_edge_list, parse_edge_list, parse_gml, write_edge_list, GraphFormat};

/// Immutable, symmetric, self-loop-free adjacency structure.
///
/// Internal indices are dense (`0..n_nodes`); `ids` maps them back to the
/// external user ids the graph was loaded with.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialGraph {
    offsets: Vec<usize>,
    peers: Vec<u32>,
    ids: Vec<u64>,
    index: HashMap<u64, usize>,
}

impl SocialGraph {
    /// Builds a graph over `n_nodes` nodes with identity ids. Duplicate edges
    /// (in either orientation) collapse and self-loops are dropped.
    ///
    /// Panics if an endpoint is `>= n_nodes`.
    pub fn from_edges<I>(n_nodes: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let ids = (0..n_nodes as u64).collect();
        Self::build(ids, edges)
    }

    /// Builds a graph from edges between external ids. Ids are densely
    /// re-indexed in ascending order; `extra_ids` adds isolated nodes.
    pub fn from_external_edges<I>(edges: I, extra_ids: &[u64]) -> Self
    where
        I: IntoIterator<Item = (u64, u64)>,
    {
        let edges: Vec<(u64, u64)> = edges.into_iter().collect();
        let mut ids: Vec<u64> = edges
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .chain(extra_ids.iter().copied())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        let index: HashMap<u64, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let internal = edges.iter().map(|(a, b)| (index[a], index[b]));
        Self::build(ids, internal)
    }

    fn build<I>(ids: Vec<u64>, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let n = ids.len();
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (a, b) in edges {
            assert!(a < n && b < n, "edge ({a}, {b}) out of range for {n} nodes");
            if a == b {
                continue;
            }
            rows[a].push(b as u32);
            rows[b].push(a as u32);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut peers = Vec::new();
        offsets.push(0);
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            peers.extend_from_slice(row);
            offsets.push(peers.len());
        }
        let index = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        SocialGraph {
            offsets,
            peers,
            ids,
            index,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.ids.len()
    }

    pub fn n_edges(&self) -> usize {
        self.peers.len() / 2
    }

    #[inline]
    pub fn peers(&self, i: usize) -> &[u32] {
        &self.peers[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n_nodes()).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.peers(i).binary_search(&(j as u32)).is_ok()
    }

    /// External id of internal node `i`.
    pub fn external_id(&self, i: usize) -> u64 {
        self.ids[i]
    }

    pub fn external_ids(&self) -> &[u64] {
        &self.ids
    }

    /// Internal index of an external id.
    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// Each undirected edge once, as internal indices with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_nodes()).flat_map(move |i| {
            self.peers(i)
                .iter()
                .map(|&j| j as usize)
                .filter(move |&j| i < j)
                .map(move |j| (i, j))
        })
    }

    /// Returns a copy with isolated nodes appended for every id not yet present.
    pub fn with_nodes(&self, ids: &[u64]) -> SocialGraph {
        let mut all = self.ids.clone();
        all.extend(ids.iter().copied().filter(|id| !self.index.contains_key(id)));
        all.sort_unstable();
        all.dedup();
        if all.len() == self.ids.len() {
            return self.clone();
        }
        let edges: Vec<(u64, u64)> = self.edges().map(|(i, j)| (self.ids[i], self.ids[j])).collect();
        SocialGraph::from_external_edges(edges, &all)
    }

    /// Relabels nodes so that new index `k` is old index `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<SocialGraph> {
        let n = self.n_nodes();
        if order.len() != n {
            return Err(Error::LengthMismatch {
                what: "node order",
                expected: n,
                got: order.len(),
            });
        }
        let mut new_of_old = vec![usize::MAX; n];
        for (new, &old) in order.iter().enumerate() {
            if old >= n || new_of_old[old] != usize::MAX {
                return Err(Error::invalid("order", "not a permutation"));
            }
            new_of_old[old] = new;
        }
        let ids = order.iter().map(|&old| self.ids[old]).collect();
        let edges: Vec<(usize, usize)> = self.edges().map(|(i, j)| (new_of_old[i], new_of_old[j])).collect();
        Ok(SocialGraph::build(ids, edges))
    }

    /// Number of active peers of every node: one sparse matrix-vector
    /// product of the adjacency with the 0/1 mask.
    pub fn active_peer_counts(&self, active: &[bool]) -> Result<Vec<u32>> {
        if active.len() != self.n_nodes() {
            return Err(Error::LengthMismatch {
                what: "active mask",
                expected: self.n_nodes(),
                got: active.len(),
            });
        }
        Ok((0..self.n_nodes())
            .map(|i| self.peers(i).iter().filter(|&&j| active[j as usize]).count() as u32)
            .collect())
    }

    pub fn degree_sequence(&self) -> DegreeSequence {
        DegreeSequence {
            degrees: (0..self.n_nodes()).map(|i| self.degree(i)).collect(),
        }
    }
}

/// Per-node degree list with an even total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSequence {
    degrees: Vec<usize>,
}

impl DegreeSequence {
    pub fn new(degrees: Vec<usize>) -> Result<Self> {
        let total: usize = degrees.iter().sum();
        if !total.is_multiple_of(2) {
            return Err(Error::invalid("degrees", format!("degree sum {total} is odd")));
        }
        Ok(DegreeSequence { degrees })
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn assert_well_formed(g: &SocialGraph) {
        for i in 0..g.n_nodes() {
            assert!(!g.has_edge(i, i), "self-loop at {i}");
            assert_eq!(g.degree(i), g.peers(i).len());
            for &j in g.peers(i) {
                assert!(g.has_edge(j as usize, i), "asymmetric edge {i}-{j}");
            }
        }
    }

    #[test]
    fn triangle_counts() {
        let g = SocialGraph::from_edges(3, [(0, 1), (1, 2), (2, 0)]);
        assert_eq!(g.active_peer_counts(&[true, false, false]).unwrap(), vec![0, 1, 1]);
        assert_eq!(g.active_peer_counts(&[false; 3]).unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn star_center_sees_all_leaves() {
        let g = SocialGraph::from_edges(5, (1..5).map(|l| (0, l)));
        let counts = g.active_peer_counts(&[false, true, true, true, true]).unwrap();
        assert_eq!(counts, vec![4, 0, 0, 0, 0]);
    }

    #[test]
    fn mask_length_mismatch() {
        let g = SocialGraph::from_edges(3, [(0, 1)]);
        assert!(matches!(
            g.active_peer_counts(&[true]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn odd_degree_sum_rejected() {
        assert!(DegreeSequence::new(vec![1, 2]).is_err());
        assert!(DegreeSequence::new(vec![1, 1]).is_ok());
    }

    #[test]
    fn with_nodes_adds_isolated() {
        let g = SocialGraph::from_external_edges([(10, 20)], &[]);
        let h = g.with_nodes(&[5, 20]);
        assert_eq!(h.n_nodes(), 3);
        assert_eq!(h.external_ids(), &[5, 10, 20]);
        assert_eq!(h.n_edges(), 1);
        assert_eq!(h.degree(h.index_of(5).unwrap()), 0);
    }

    #[test]
    fn permutation_preserves_structure() {
        let g = SocialGraph::from_edges(4, [(0, 1), (1, 2), (2, 3)]);
        let p = g.permuted(&[3, 2, 1, 0]).unwrap();
        assert!(p.has_edge(0, 1) && p.has_edge(1, 2) && p.has_edge(2, 3));
        assert_eq!(p.external_id(0), 3);
        assert!(g.permuted(&[0, 0, 1, 2]).is_err());
    }

    proptest! {
        #[test]
        fn counts_match_double_loop(
            n in 1usize..50,
            raw in proptest::collection::vec((0usize..50, 0usize..50), 0..200),
            mask_bits in proptest::collection::vec(any::<bool>(), 50),
        ) {
            let edges: Vec<_> = raw.into_iter().map(|(a, b)| (a % n, b % n)).collect();
            let g = SocialGraph::from_edges(n, edges.iter().copied());
            assert_well_formed(&g);
            let mask = &mask_bits[..n];
            let counts = g.active_peer_counts(mask).unwrap();
            for i in 0..n {
                let mut brute = 0;
                for j in 0..n {
                    let adjacent = edges.iter().any(|&(a, b)| (a == i && b == j) || (a == j && b == i));
                    if i != j && adjacent && mask[j] {
                        brute += 1;
                    }
                }
                prop_assert_eq!(counts[i], brute);
            }
        }
    }
}
