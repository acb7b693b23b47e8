//! Anonymous network instances.
//!
//! A [`Topology`] is a connected simple graph in which every node sees only
//! locally numbered ports `1..=Δ_v`. The far end of each port is known to the
//! engine and the checkers, never to node automata.

mod format;
mod impossibility;
mod tokens;

use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub use format::{emit_instance, parse_instance};
pub use impossibility::{
    emit_correspondence, make_impossibility_pair, make_impossibility_pair_with, parse_correspondence,
    ImpossibilityPair, Orientation,
};
pub use tokens::{assign_tokens, AssignMode, TokenAssignment};

/// 1-based local port label.
pub type Port = u32;

/// The far end of a port: neighbour index and the port label it uses for
/// the same edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortEnd {
    pub node: usize,
    pub port: Port,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    /// `neighbors[v][i]` is the neighbour behind port `i + 1` of `v`.
    neighbors: Vec<Vec<usize>>,
    peers: Vec<Vec<PortEnd>>,
}

/// A topology together with its token assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub topology: Topology,
    pub tokens: TokenAssignment,
}

impl Topology {
    /// Builds a topology from per-node neighbour lists given in port order.
    pub fn from_port_order(neighbors: Vec<Vec<usize>>) -> Result<Self> {
        let n = neighbors.len();
        if n == 0 {
            return Err(Error::InvalidParameter("topology needs at least one node".into()));
        }
        for (v, list) in neighbors.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for &u in list {
                if u >= n {
                    return Err(Error::InvalidParameter(format!("node {v}: neighbour {u} out of range")));
                }
                if u == v {
                    return Err(Error::InvalidParameter(format!("self-loop at node {v}")));
                }
                if !seen.insert(u) {
                    return Err(Error::InvalidParameter(format!("multi-edge {v}-{u}")));
                }
                if !neighbors[u].contains(&v) {
                    return Err(Error::InvalidParameter(format!("edge {v}-{u} is not symmetric")));
                }
            }
        }
        let peers = neighbors
            .iter()
            .enumerate()
            .map(|(v, list)| {
                list.iter()
                    .map(|&u| {
                        let back = neighbors[u].iter().position(|&w| w == v).unwrap();
                        PortEnd { node: u, port: back as Port + 1 }
                    })
                    .collect()
            })
            .collect();
        let t = Topology { neighbors, peers };
        if !t.is_connected() {
            return Err(Error::InvalidParameter("graph is not connected".into()));
        }
        Ok(t)
    }

    /// Builds from an undirected edge list, numbering each node's ports with
    /// a seeded random permutation.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], seed: u64) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidParameter(format!("edge {u}-{v} out of range")));
            }
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for (v, list) in neighbors.iter_mut().enumerate() {
            list.sort_unstable();
            list.shuffle(&mut rng::stream(seed, "ports", v as u64));
        }
        Topology::from_port_order(neighbors)
    }

    pub fn node_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    /// Neighbours of `v` in port order.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// Engine-only: the far end of port `port` at node `v`.
    pub fn peer(&self, v: usize, port: Port) -> PortEnd {
        self.peers[v][port as usize - 1]
    }

    pub fn port_to(&self, v: usize, u: usize) -> Option<Port> {
        self.neighbors[v].iter().position(|&w| w == u).map(|i| i as Port + 1)
    }

    /// Undirected edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = self
            .neighbors
            .iter()
            .enumerate()
            .flat_map(|(v, l)| l.iter().filter(move |&&u| v < u).map(move |&u| (v, u)))
            .collect();
        e.sort_unstable();
        e
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// BFS distances from `src`.
    pub fn distances_from(&self, src: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count()];
        dist[src] = Some(0);
        let mut q = VecDeque::from([src]);
        while let Some(v) = q.pop_front() {
            let d = dist[v].unwrap();
            for &u in &self.neighbors[v] {
                if dist[u].is_none() {
                    dist[u] = Some(d + 1);
                    q.push_back(u);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.distances_from(0).iter().all(Option::is_some)
    }

    pub fn eccentricity(&self, v: usize) -> usize {
        self.distances_from(v).into_iter().map(|d| d.expect("connected")).max().unwrap_or(0)
    }

    /// Checks that every port has a consistent far end.
    pub fn ports_consistent(&self) -> bool {
        (0..self.node_count()).all(|v| {
            (1..=self.degree(v) as Port).all(|p| {
                let end = self.peer(v, p);
                end.node != v && self.peer(end.node, end.port) == PortEnd { node: v, port: p }
            })
        })
    }
}

/// Largest shortest-path distance over all node pairs (all-pairs BFS).
pub fn diameter(t: &Topology) -> usize {
    (0..t.node_count()).map(|v| t.eccentricity(v)).max().unwrap_or(0)
}

/// Cycle on `n ≥ 3` nodes.
pub fn make_ring(n: usize, seed: u64) -> Result<Topology> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("ring needs n >= 3, got n = {n}")));
    }
    let edges: Vec<_> = (0..n).map(|v| (v, (v + 1) % n)).collect();
    Topology::from_edges(n, &edges, seed)
}

/// Path on `n ≥ 1` nodes.
pub fn make_path(n: usize, seed: u64) -> Result<Topology> {
    if n < 1 {
        return Err(Error::InvalidParameter("path needs n >= 1".into()));
    }
    let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
    Topology::from_edges(n, &edges, seed)
}

/// Random spanning tree plus each remaining pair independently with
/// probability `edge_prob`.
pub fn make_random_connected(n: usize, edge_prob: f64, seed: u64) -> Result<Topology> {
    if n < 1 {
        return Err(Error::InvalidParameter("random graph needs n >= 1".into()));
    }
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(Error::InvalidParameter(format!("edge_prob {edge_prob} not in [0, 1]")));
    }
    let mut rng = rng::stream(seed, "random-graph", 0);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut present = BTreeSet::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        let (a, b) = (order[i], order[j]);
        present.insert((a.min(b), a.max(b)));
    }
    for u in 0..n {
        for v in u + 1..n {
            if !present.contains(&(u, v)) && rng.random_bool(edge_prob) {
                present.insert((u, v));
            }
        }
    }
    let edges: Vec<_> = present.into_iter().collect();
    Topology::from_edges(n, &edges, seed)
}

/// Two `n_half`-cliques joined by a path through `bridge_len` extra nodes.
///
/// Nodes `0..n_half` form the first clique, `n_half..2*n_half` the second,
/// and the bridge nodes follow. The bridge runs from node 0 to node `n_half`.
pub fn make_dumbbell(n_half: usize, bridge_len: usize, seed: u64) -> Result<Topology> {
    if n_half < 1 {
        return Err(Error::InvalidParameter("dumbbell needs n_half >= 1".into()));
    }
    let n = 2 * n_half + bridge_len;
    let mut edges = Vec::new();
    for base in [0, n_half] {
        for u in 0..n_half {
            for v in u + 1..n_half {
                edges.push((base + u, base + v));
            }
        }
    }
    let mut chain = vec![0];
    chain.extend(2 * n_half..n);
    chain.push(n_half);
    edges.extend(chain.windows(2).map(|w| (w[0], w[1])));
    Topology::from_edges(n, &edges, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn floyd_warshall(t: &Topology) -> usize {
        let n = t.node_count();
        let inf = usize::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for v in 0..n {
            d[v][v] = 0;
            for &u in t.neighbors(v) {
                d[v][u] = 1;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d.iter().flatten().copied().max().unwrap()
    }

    #[test]
    fn ring_shapes() {
        let r = make_ring(3, 1).unwrap();
        assert_eq!(r.node_count(), 3);
        assert_eq!(r.edge_count(), 3);
        assert!((0..3).all(|v| r.degree(v) == 2));
        assert_eq!(diameter(&make_ring(6, 9).unwrap()), 3);
        assert!(matches!(make_ring(2, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn random_connected_extremes() {
        let one = make_random_connected(1, 0.5, 3).unwrap();
        assert_eq!(one.edge_count(), 0);
        assert_eq!(diameter(&one), 0);
        assert_eq!(make_random_connected(5, 0.0, 3).unwrap().edge_count(), 4);
        let k8 = make_random_connected(8, 1.0, 3).unwrap();
        assert_eq!(k8.edge_count(), 28);
        assert_eq!(diameter(&k8), 1);
    }

    #[test]
    fn dumbbell_shapes() {
        let d = make_dumbbell(1, 0, 0).unwrap();
        assert_eq!((d.node_count(), d.edge_count()), (2, 1));
        assert_eq!(make_dumbbell(3, 0, 0).unwrap().edge_count(), 7);
        let d = make_dumbbell(2, 2, 0).unwrap();
        assert_eq!(floyd_warshall(&d), 5);
        assert_eq!(diameter(&d), 5);
    }

    #[test]
    fn path_diameter() {
        assert_eq!(diameter(&make_path(5, 0).unwrap()), 4);
        assert_eq!(diameter(&make_path(1, 0).unwrap()), 0);
    }

    #[test]
    fn rejects_bad_graphs() {
        assert!(Topology::from_port_order(vec![vec![1], vec![]]).is_err());
        assert!(Topology::from_port_order(vec![vec![0]]).is_err());
        assert!(Topology::from_port_order(vec![vec![], vec![]]).is_err());
        assert!(Topology::from_port_order(vec![vec![1, 1], vec![0, 0]]).is_err());
    }

    proptest! {
        #[test]
        fn generated_graphs_are_valid(n in 1usize..40, p in 0.0f64..0.5, seed in any::<u64>()) {
            let t = make_random_connected(n, p, seed).unwrap();
            prop_assert!(t.is_connected());
            prop_assert!(t.ports_consistent());
            prop_assert_eq!(&t, &make_random_connected(n, p, seed).unwrap());
            for v in 0..n {
                let ports: Vec<_> = (1..=t.degree(v) as Port).map(|p| t.peer(v, p).node).collect();
                prop_assert_eq!(ports.as_slice(), t.neighbors(v));
            }
        }

        #[test]
        fn diameter_matches_floyd_warshall(n in 1usize..=64, p in 0.0f64..0.3, seed in any::<u64>()) {
            let t = make_random_connected(n, p, seed).unwrap();
            prop_assert_eq!(diameter(&t), floyd_warshall(&t));
        }

        #[test]
        fn ring_and_dumbbell_valid(n in 3usize..30, h in 1usize..6, b in 0usize..5, seed in any::<u64>()) {
            let r = make_ring(n, seed).unwrap();
            prop_assert!(r.ports_consistent());
            prop_assert_eq!(diameter(&r), n / 2);
            let d = make_dumbbell(h, b, seed).unwrap();
            prop_assert!(d.ports_consistent());
            prop_assert_eq!(diameter(&d), floyd_warshall(&d));
        }
    }
}
