//! Converged state of rank-based prefix advertisement.
//!
//! Every producer advertises its prefix with rank 0 and each forwarding node
//! adds one, so after convergence the rank a node holds for a prefix is its
//! hop distance to the producer. Each node keeps one entry per neighbor that
//! lies on a shortest path and prefers the lowest rank, breaking ties by the
//! lowest neighbor id.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::model::NodeId;
use crate::node::{Fib, FibEntry, NodeError};
use crate::topology::Topology;

#[derive(Debug, Clone, PartialEq)]
pub struct RoutingTable {
    fibs: Vec<Fib>,
    producers: Vec<NodeId>,
}

pub fn build_fibs(topology: &Topology, producers: &[NodeId]) -> RoutingTable {
    let mut fibs = vec![Fib::default(); topology.node_count()];
    let mut producers: Vec<NodeId> = producers.to_vec();
    producers.sort();
    producers.dedup();
    for &producer in &producers {
        let dist = topology.bfs(producer);
        for v in topology.nodes().filter(|&v| v != producer) {
            let Some(dv) = dist[v.index()] else { continue };
            for &u in topology.neighbors(v) {
                if dist[u.index()] == Some(dv - 1) {
                    fibs[v.index()].add(FibEntry {
                        prefix: producer,
                        next_hop: u,
                        rank: dv,
                    });
                }
            }
        }
    }
    RoutingTable { fibs, producers }
}

impl RoutingTable {
    pub fn fib(&self, node: NodeId) -> &Fib {
        &self.fibs[node.index()]
    }

    pub fn producers(&self) -> &[NodeId] {
        &self.producers
    }

    pub fn node_count(&self) -> usize {
        self.fibs.len()
    }

    pub fn next_hop(&self, node: NodeId, prefix: NodeId) -> Result<NodeId, NodeError> {
        self.fib(node)
            .preferred(prefix)
            .map(|e| e.next_hop)
            .ok_or(NodeError::NoRoute { node, prefix })
    }

    /// Follows preferred next hops from `from` to the producer of `prefix`.
    pub fn path(&self, from: NodeId, prefix: NodeId) -> Result<Vec<NodeId>, NodeError> {
        let mut path = vec![from];
        let mut at = from;
        while at != prefix {
            at = self.next_hop(at, prefix)?;
            path.push(at);
        }
        Ok(path)
    }

    /// One `node prefix next_hop rank` line per FIB entry, preferred entries first.
    pub fn dump(&self) -> String {
        let mut out = String::from("# node prefix next_hop rank\n");
        for (node, fib) in self.fibs.iter().enumerate() {
            for prefix in fib.prefixes() {
                for e in fib.entries(prefix) {
                    let _ = writeln!(out, "{node} {} {} {}", e.prefix, e.next_hop, e.rank);
                }
            }
        }
        out
    }

    /// Preferred ranks per (node, prefix).
    pub fn ranks(&self) -> BTreeMap<(NodeId, NodeId), u32> {
        let mut out = BTreeMap::new();
        for (node, fib) in self.fibs.iter().enumerate() {
            for prefix in fib.prefixes() {
                if let Some(e) = fib.preferred(prefix) {
                    out.insert((NodeId(node as u32), prefix), e.rank);
                }
            }
        }
        out
    }
}

/// Hop count between `consumer` and the owner of `prefix` in the absence of caches.
pub fn distance_to_source(
    routing: &RoutingTable,
    consumer: NodeId,
    prefix: NodeId,
) -> Result<u32, NodeError> {
    routing
        .fib(consumer)
        .preferred(prefix)
        .map(|e| e.rank)
        .ok_or(NodeError::NoRoute {
            node: consumer,
            prefix,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{gen_core, gen_line, gen_random_geometric, Topology};
    use proptest::prelude::*;

    /// Independent all-pairs distance oracle (Floyd–Warshall style relaxation
    /// over unit weights, no BFS shared with the implementation).
    fn all_pairs(t: &Topology) -> Vec<Vec<u32>> {
        let n = t.node_count();
        let inf = u32::MAX / 2;
        let mut d = vec![vec![inf; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0;
        }
        for (u, v) in t.edges() {
            d[u.index()][v.index()] = 1;
            d[v.index()][u.index()] = 1;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i][k] + d[k][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        d
    }

    #[test]
    fn line_ranks() {
        let t = gen_line(5).unwrap();
        let r = build_fibs(&t, &[NodeId(0)]);
        let e = r.fib(NodeId(4)).preferred(NodeId(0)).unwrap();
        assert_eq!((e.next_hop, e.rank), (NodeId(3), 4));
        assert_eq!(distance_to_source(&r, NodeId(1), NodeId(0)), Ok(1));
        assert_eq!(distance_to_source(&r, NodeId(4), NodeId(0)), Ok(4));
        assert!(distance_to_source(&r, NodeId(4), NodeId(2)).is_err());
        assert!(r.fib(NodeId(0)).preferred(NodeId(0)).is_none());
    }

    #[test]
    fn core_consumers_at_rank_three() {
        let t = gen_core(4, 3, 1).unwrap();
        let r = build_fibs(&t, &[NodeId(0)]);
        for leaf in t.leaves() {
            assert_eq!(distance_to_source(&r, leaf, NodeId(0)), Ok(3));
        }
    }

    #[test]
    fn matches_independent_distances() {
        for seed in 0..5 {
            let t = gen_random_geometric(50, crate::topology::DEFAULT_RANGE, 1.0, seed).unwrap();
            let all: Vec<NodeId> = t.nodes().collect();
            let r = build_fibs(&t, &all);
            let oracle = all_pairs(&t);
            for u in t.nodes() {
                for p in t.nodes().filter(|&p| p != u) {
                    let path = r.path(u, p).unwrap();
                    assert_eq!(path.len() as u32 - 1, oracle[u.index()][p.index()]);
                    assert_eq!(
                        distance_to_source(&r, u, p).unwrap(),
                        oracle[u.index()][p.index()]
                    );
                }
            }
        }
    }

    #[test]
    fn alternates_retained_and_tie_broken() {
        // square 0-1-3, 0-2-3: node 3 has two rank-2 routes to 0
        let t = Topology::from_edges(
            4,
            [(0, 1), (0, 2), (1, 3), (2, 3)].map(|(a, b)| (NodeId(a), NodeId(b))),
        )
        .unwrap();
        let r = build_fibs(&t, &[NodeId(0)]);
        assert_eq!(r.fib(NodeId(3)).entries(NodeId(0)).len(), 2);
        assert_eq!(r.next_hop(NodeId(3), NodeId(0)), Ok(NodeId(1)));
        assert!(r.dump().contains("3 0 2 2"));
    }

    #[test]
    fn idempotent() {
        let t = gen_random_geometric(30, 0.3, 1.0, 4).unwrap();
        let p: Vec<NodeId> = t.nodes().collect();
        assert_eq!(build_fibs(&t, &p), build_fibs(&t, &p));
    }

    proptest! {
        #[test]
        fn preferred_paths_are_loop_free(seed in 0u64..200) {
            let t = gen_random_geometric(25, 0.35, 1.0, seed).unwrap();
            let producer = NodeId((seed % 25) as u32);
            let r = build_fibs(&t, &[producer]);
            for u in t.nodes().filter(|&u| u != producer) {
                let path = r.path(u, producer).unwrap();
                let mut seen = path.clone();
                seen.sort();
                seen.dedup();
                prop_assert_eq!(seen.len(), path.len());
                prop_assert_eq!(path.len() as u32 - 1, distance_to_source(&r, u, producer).unwrap());
            }
        }
    }
}
