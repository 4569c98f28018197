//! Per-node forwarding state: Content Store, PIT and FIB.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ChunkName, NodeId};

pub const DEFAULT_CACHE_CAPACITY: usize = 5;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NodeError {
    #[error("node {node} has no route for prefix {prefix}")]
    NoRoute { node: NodeId, prefix: NodeId },
}

/// Cache replacement policy used when a full Content Store admits a new chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Replacement {
    #[default]
    Lru,
    Fifo,
    Random,
}

impl FromStr for Replacement {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lru" => Ok(Replacement::Lru),
            "fifo" => Ok(Replacement::Fifo),
            "random" => Ok(Replacement::Random),
            _ => Err(format!("unknown replacement policy `{s}`")),
        }
    }
}

/// Bounded chunk cache.
///
/// Entries are kept in eviction order: index 0 is the next victim under LRU
/// and FIFO. Capacities are tiny (a handful of chunks), so a vector beats any
/// linked structure here.
#[derive(Debug, Clone)]
pub struct ContentStore {
    capacity: usize,
    policy: Replacement,
    entries: Vec<ChunkName>,
    rng: ChaCha8Rng,
}

impl ContentStore {
    pub fn new(capacity: usize, policy: Replacement) -> Self {
        Self::with_rng(capacity, policy, ChaCha8Rng::seed_from_u64(0))
    }

    /// `rng` is only drawn from under [`Replacement::Random`].
    pub fn with_rng(capacity: usize, policy: Replacement, rng: ChaCha8Rng) -> Self {
        assert!(capacity > 0, "content store capacity must be positive");
        Self {
            capacity,
            policy,
            entries: Vec::with_capacity(capacity),
            rng,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, name: &ChunkName) -> bool {
        self.entries.contains(name)
    }

    /// Cached names, next eviction victim first.
    pub fn names(&self) -> &[ChunkName] {
        &self.entries
    }

    /// Looks `name` up, refreshing its recency on a hit.
    pub fn lookup(&mut self, name: &ChunkName) -> bool {
        match self.position(name) {
            Some(pos) => {
                if self.policy == Replacement::Lru {
                    let n = self.entries.remove(pos);
                    self.entries.push(n);
                }
                true
            }
            None => false,
        }
    }

    /// Inserts `name`, returning the evicted chunk if the store was full.
    pub fn insert(&mut self, name: ChunkName) -> Option<ChunkName> {
        if let Some(pos) = self.position(&name) {
            if self.policy == Replacement::Lru {
                let n = self.entries.remove(pos);
                self.entries.push(n);
            }
            return None;
        }
        let evicted = if self.entries.len() == self.capacity {
            let victim = match self.policy {
                Replacement::Lru | Replacement::Fifo => 0,
                Replacement::Random => self.rng.gen_range(0..self.entries.len()),
            };
            Some(self.entries.remove(victim))
        } else {
            None
        };
        self.entries.push(name);
        evicted
    }

    pub fn remove(&mut self, name: &ChunkName) -> bool {
        match self.position(name) {
            Some(pos) => {
                self.entries.remove(pos);
                true
            }
            None => false,
        }
    }

    fn position(&self, name: &ChunkName) -> Option<usize> {
        self.entries.iter().position(|n| n == name)
    }
}

/// Where a packet came from or must go back to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Face {
    Node(NodeId),
    /// The consumer application running on the node itself.
    LocalApp,
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Face::Node(id) => write!(f, "node {id}"),
            Face::LocalApp => f.write_str("app"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PitEntry {
    pub name: ChunkName,
    /// Downstream faces with the request sequence number that reached us on each.
    pub downstream: Vec<(Face, u64)>,
    /// Simulated time of creation, in microseconds.
    pub created_at: u64,
    /// Distinguishes this entry from earlier entries for the same name.
    pub generation: u64,
}

#[derive(Debug, Clone, Default)]
pub struct Pit {
    entries: BTreeMap<ChunkName, PitEntry>,
    next_generation: u64,
}

impl Pit {
    /// Records `from` as a downstream for `name`. Returns true iff no live
    /// entry existed, in which case the caller forwards the Interest.
    pub fn register(&mut self, name: ChunkName, seq: u64, from: Face, now: u64) -> bool {
        if let Some(entry) = self.entries.get_mut(&name) {
            match from {
                Face::Node(_) => {
                    if !entry.downstream.iter().any(|(f, _)| *f == from) {
                        entry.downstream.push((from, seq));
                    }
                }
                Face::LocalApp => {
                    if !entry.downstream.contains(&(from, seq)) {
                        entry.downstream.push((from, seq));
                    }
                }
            }
            return false;
        }
        let generation = self.next_generation;
        self.next_generation += 1;
        self.entries.insert(
            name,
            PitEntry {
                name,
                downstream: vec![(from, seq)],
                created_at: now,
                generation,
            },
        );
        true
    }

    /// Removes the entry for `name` and returns its downstream faces; empty if
    /// there was none.
    pub fn consume(&mut self, name: &ChunkName) -> Vec<(Face, u64)> {
        self.entries
            .remove(name)
            .map(|e| e.downstream)
            .unwrap_or_default()
    }

    pub fn get(&self, name: &ChunkName) -> Option<&PitEntry> {
        self.entries.get(name)
    }

    /// Drops the entry if it is still the one created with `generation`.
    pub fn expire(&mut self, name: &ChunkName, generation: u64) -> Option<PitEntry> {
        if self.entries.get(name)?.generation == generation {
            self.entries.remove(name)
        } else {
            None
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FibEntry {
    pub prefix: NodeId,
    pub next_hop: NodeId,
    pub rank: u32,
}

/// Prefix routes of one node; every prefix may hold several ranked next hops.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Fib {
    routes: BTreeMap<NodeId, Vec<FibEntry>>,
}

impl Fib {
    pub fn add(&mut self, entry: FibEntry) {
        let list = self.routes.entry(entry.prefix).or_default();
        if !list.contains(&entry) {
            list.push(entry);
            list.sort_by_key(|e| (e.rank, e.next_hop));
        }
    }

    /// Lowest-rank entry, ties broken by lowest next-hop id.
    pub fn preferred(&self, prefix: NodeId) -> Option<&FibEntry> {
        self.routes.get(&prefix).and_then(|l| l.first())
    }

    pub fn entries(&self, prefix: NodeId) -> &[FibEntry] {
        self.routes.get(&prefix).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn prefixes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.routes.keys().copied()
    }
}

/// Complete state of one simulated node.
#[derive(Debug, Clone)]
pub struct NodeState {
    pub id: NodeId,
    pub label: u32,
    pub cs: ContentStore,
    pub pit: Pit,
    pub fib: Fib,
    /// Caching-decision random stream, derived from (run seed, node id) only.
    pub rng: ChaCha8Rng,
}

impl NodeState {
    pub fn new(id: NodeId, capacity: usize, policy: Replacement, label_k: u32, seed: u64) -> Self {
        let cs_rng = node_stream(seed ^ 0x5eed_c0de_cafe_f00d, id);
        Self {
            id,
            label: id.0 % label_k.max(1),
            cs: ContentStore::with_rng(capacity, policy, cs_rng),
            pit: Pit::default(),
            fib: Fib::default(),
            rng: node_stream(seed, id),
        }
    }

    pub fn is_producer_of(&self, name: &ChunkName) -> bool {
        name.prefix == self.id
    }

    /// True if the node can answer `name`: it produces it, or holds a cached
    /// copy (whose recency is refreshed).
    pub fn cs_lookup(&mut self, name: &ChunkName) -> bool {
        self.is_producer_of(name) || self.cs.lookup(name)
    }

    pub fn cs_insert(&mut self, name: ChunkName) -> Option<ChunkName> {
        self.cs.insert(name)
    }

    pub fn cs_remove(&mut self, name: &ChunkName) -> bool {
        self.cs.remove(name)
    }

    pub fn pit_register(&mut self, name: ChunkName, seq: u64, from: Face, now: u64) -> bool {
        self.pit.register(name, seq, from, now)
    }

    pub fn pit_consume(&mut self, name: &ChunkName) -> Vec<(Face, u64)> {
        self.pit.consume(name)
    }

    pub fn fib_next_hop(&self, prefix: NodeId) -> Result<NodeId, NodeError> {
        self.fib
            .preferred(prefix)
            .map(|e| e.next_hop)
            .ok_or(NodeError::NoRoute {
                node: self.id,
                prefix,
            })
    }
}

/// Independent ChaCha stream per node for a given run seed.
pub fn node_stream(seed: u64, id: NodeId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(id.0));
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn name(p: u32, c: u32) -> ChunkName {
        ChunkName {
            prefix: NodeId(p),
            chunk_id: c,
        }
    }

    fn node(id: u32, cap: usize) -> NodeState {
        NodeState::new(NodeId(id), cap, Replacement::Lru, 4, 1)
    }

    #[test]
    fn lookup_semantics() {
        let mut n = node(3, 5);
        assert!(n.cs_lookup(&name(3, 17)), "producer always satisfies");
        assert!(!n.cs_lookup(&name(1, 0)));
        n.cs_insert(name(1, 0));
        assert!(n.cs_lookup(&name(1, 0)));
        assert!(n.cs.is_empty() || !n.cs.contains(&name(3, 17)));
    }

    #[test]
    fn lru_eviction() {
        let mut n = node(0, 5);
        for c in 0..5 {
            assert_eq!(n.cs_insert(name(1, c)), None);
        }
        assert_eq!(n.cs_insert(name(1, 5)), Some(name(1, 0)));
        assert_eq!(n.cs.len(), 5);

        // re-inserting a present name only refreshes it
        assert_eq!(n.cs_insert(name(1, 1)), None);
        assert_eq!(n.cs.len(), 5);
        assert_eq!(n.cs_insert(name(1, 6)), Some(name(1, 2)));

        // a lookup hit refreshes recency as well
        assert!(n.cs_lookup(&name(1, 3)));
        assert_eq!(n.cs_insert(name(1, 7)), Some(name(1, 4)));

        let mut single = node(0, 1);
        single.cs_insert(name(1, 0));
        assert_eq!(single.cs_insert(name(1, 1)), Some(name(1, 0)));
    }

    #[test]
    fn fifo_ignores_hits() {
        let mut cs = ContentStore::new(2, Replacement::Fifo);
        cs.insert(name(1, 0));
        cs.insert(name(1, 1));
        assert!(cs.lookup(&name(1, 0)));
        assert_eq!(cs.insert(name(1, 2)), Some(name(1, 0)));
    }

    #[test]
    fn random_replacement_stays_bounded() {
        let mut cs = ContentStore::new(3, Replacement::Random);
        for c in 0..20 {
            cs.insert(name(1, c));
            assert!(cs.len() <= 3);
        }
        assert!(cs.contains(&name(1, 19)));
    }

    #[test]
    fn remove_keeps_accounting() {
        let mut n = node(0, 2);
        n.cs_insert(name(1, 0));
        assert!(n.cs_remove(&name(1, 0)));
        assert!(!n.cs_lookup(&name(1, 0)));
        assert!(!n.cs_remove(&name(1, 0)));
        assert_eq!(n.cs_insert(name(1, 1)), None);
        assert_eq!(n.cs_insert(name(1, 2)), None);
        assert_eq!(n.cs_insert(name(1, 3)), Some(name(1, 1)));
    }

    #[test]
    fn pit_aggregation() {
        let mut n = node(0, 5);
        let c = name(1, 4);
        assert!(n.pit_register(c, 1, Face::Node(NodeId(2)), 0));
        assert!(!n.pit_register(c, 2, Face::LocalApp, 5));
        assert!(!n.pit_register(c, 3, Face::Node(NodeId(2)), 6));
        let down = n.pit_consume(&c);
        assert_eq!(down, vec![(Face::Node(NodeId(2)), 1), (Face::LocalApp, 2)]);
        assert!(n.pit_consume(&c).is_empty());
        assert!(n.pit_register(c, 4, Face::Node(NodeId(5)), 10));
    }

    #[test]
    fn pit_expiry_checks_generation() {
        let mut pit = Pit::default();
        let c = name(1, 1);
        pit.register(c, 0, Face::LocalApp, 0);
        let g0 = pit.get(&c).unwrap().generation;
        pit.consume(&c);
        pit.register(c, 1, Face::LocalApp, 10);
        assert!(pit.expire(&c, g0).is_none());
        let g1 = pit.get(&c).unwrap().generation;
        assert!(pit.expire(&c, g1).is_some());
        assert!(pit.is_empty());
    }

    #[test]
    fn fib_preference() {
        let mut n = node(0, 5);
        assert_eq!(
            n.fib_next_hop(NodeId(9)),
            Err(NodeError::NoRoute {
                node: NodeId(0),
                prefix: NodeId(9)
            })
        );
        let p = NodeId(9);
        n.fib.add(FibEntry {
            prefix: p,
            next_hop: NodeId(4),
            rank: 2,
        });
        n.fib.add(FibEntry {
            prefix: p,
            next_hop: NodeId(7),
            rank: 1,
        });
        assert_eq!(n.fib_next_hop(p), Ok(NodeId(7)));

        let mut m = node(1, 5);
        m.fib.add(FibEntry {
            prefix: p,
            next_hop: NodeId(4),
            rank: 1,
        });
        m.fib.add(FibEntry {
            prefix: p,
            next_hop: NodeId(2),
            rank: 1,
        });
        assert_eq!(m.fib_next_hop(p), Ok(NodeId(2)));
    }

    #[test]
    fn labels_and_streams() {
        let a = NodeState::new(NodeId(6), 5, Replacement::Lru, 4, 42);
        assert_eq!(a.label, 2);
        let mut r1 = node_stream(42, NodeId(6));
        let mut r2 = a.rng.clone();
        assert_eq!(r1.gen::<u64>(), r2.gen::<u64>());
        let mut other = node_stream(42, NodeId(7));
        assert_ne!(node_stream(42, NodeId(6)).gen::<u64>(), other.gen::<u64>());
    }

    proptest! {
        #[test]
        fn capacity_never_exceeded(cap in 1usize..8, ops in proptest::collection::vec((0u32..3, 0u32..12), 0..200)) {
            let mut cs = ContentStore::new(cap, Replacement::Lru);
            for (op, c) in ops {
                match op {
                    0 => { cs.insert(name(1, c)); }
                    1 => { cs.lookup(&name(1, c)); }
                    _ => { cs.remove(&name(1, c)); }
                }
                prop_assert!(cs.len() <= cap);
                let mut sorted = cs.names().to_vec();
                sorted.sort();
                sorted.dedup();
                prop_assert_eq!(sorted.len(), cs.len());
            }
        }

        #[test]
        fn lru_is_deterministic(ops in proptest::collection::vec((any::<bool>(), 0u32..10), 0..100)) {
            let run = || {
                let mut cs = ContentStore::new(3, Replacement::Lru);
                let mut evictions = Vec::new();
                for &(ins, c) in &ops {
                    if ins { evictions.push(cs.insert(name(0, c))); } else { cs.lookup(&name(0, c)); }
                }
                evictions
            };
            prop_assert_eq!(run(), run());
        }
    }
}
