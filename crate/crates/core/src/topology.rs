//! Network graphs: core and edge archetypes, random geometric deployments,
//! lines, and edge-list files.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::NodeId;

pub const DEFAULT_LINK_DELAY_MS: f64 = 10.0;
pub const MAX_GENERATION_RETRIES: u32 = 1000;

/// Radio range used by the random deployment when none is configured. With
/// [`DEFAULT_AREA`], [`DEFAULT_MIN_SPACING`] and 50 nodes it yields mean
/// shortest paths of 3 to 4 hops and diameters of at most 7 hops in the large
/// majority of placements.
pub const DEFAULT_RANGE: f64 = 0.24;
pub const DEFAULT_AREA: f64 = 1.0;
/// Minimum distance between two nodes of a random deployment.
pub const DEFAULT_MIN_SPACING: f64 = 0.08;
const PLACEMENT_ATTEMPTS: u32 = 10_000;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("graph is disconnected: node {0} is unreachable from node 0")]
    Disconnected(NodeId),
    #[error("topology needs at least {min} nodes, got {got}")]
    TooSmall { min: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no connected placement found after {0} attempts")]
    GenerationFailed(u32),
    #[error("reading topology file: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub delay_ms: f64,
    pub loss: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            delay_ms: DEFAULT_LINK_DELAY_MS,
            loss: 0.0,
        }
    }
}

/// Undirected, connected graph with per-link parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    adjacency: Vec<Vec<NodeId>>,
    /// Explicit per-link overrides keyed by (smaller id, larger id).
    links: BTreeMap<(NodeId, NodeId), LinkParams>,
    /// Node positions, for generators that have them.
    positions: Option<Vec<(f64, f64)>>,
}

impl Topology {
    /// Builds and validates a topology from an edge list.
    pub fn from_edges(
        node_count: usize,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, TopologyError> {
        let mut t = Self::empty(node_count);
        for (u, v) in edges {
            t.connect(u, v, None)?;
        }
        t.validate()?;
        Ok(t)
    }

    fn empty(node_count: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); node_count],
            links: BTreeMap::new(),
            positions: None,
        }
    }

    fn connect(
        &mut self,
        u: NodeId,
        v: NodeId,
        params: Option<LinkParams>,
    ) -> Result<(), TopologyError> {
        if u == v {
            return Err(TopologyError::SelfLoop(u));
        }
        let n = self.adjacency.len();
        for id in [u, v] {
            if id.index() >= n {
                return Err(TopologyError::InvalidParameter(format!(
                    "node {id} out of range for {n} nodes"
                )));
            }
        }
        for (a, b) in [(u, v), (v, u)] {
            let list = &mut self.adjacency[a.index()];
            if let Err(pos) = list.binary_search(&b) {
                list.insert(pos, b);
            }
        }
        if let Some(p) = params {
            self.links.insert(key(u, v), p);
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), TopologyError> {
        if self.adjacency.len() < 2 {
            return Err(TopologyError::TooSmall {
                min: 2,
                got: self.adjacency.len(),
            });
        }
        let dist = self.bfs(NodeId(0));
        if let Some(unreached) = dist.iter().position(Option::is_none) {
            return Err(TopologyError::Disconnected(NodeId(unreached as u32)));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.adjacency.len() as u32).map(NodeId)
    }

    /// Neighbors in ascending id order.
    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.adjacency[node.index()]
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency[u.index()].binary_search(&v).is_ok()
    }

    /// Every edge once, as (smaller, larger).
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.nodes()
            .flat_map(|u| {
                self.neighbors(u)
                    .iter()
                    .filter(move |&&v| v > u)
                    .map(move |&v| (u, v))
            })
            .collect()
    }

    pub fn link(&self, u: NodeId, v: NodeId) -> Option<LinkParams> {
        self.links.get(&key(u, v)).copied()
    }

    /// Overrides delay and loss on every link.
    pub fn set_all_links(&mut self, params: LinkParams) {
        for (u, v) in self.edges() {
            self.links.insert((u, v), params);
        }
    }

    pub fn positions(&self) -> Option<&[(f64, f64)]> {
        self.positions.as_deref()
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node.index()].len()
    }

    /// Degree-one nodes other than node 0: the consumers of the tree archetypes.
    pub fn leaves(&self) -> Vec<NodeId> {
        self.nodes()
            .filter(|&v| v != NodeId(0) && self.degree(v) == 1)
            .collect()
    }

    /// Hop distances from `source`; `None` for unreachable nodes.
    pub fn bfs(&self, source: NodeId) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.node_count()];
        let mut queue = VecDeque::from([source]);
        dist[source.index()] = Some(0);
        while let Some(u) = queue.pop_front() {
            let d = dist[u.index()].unwrap_or(0);
            for &v in self.neighbors(u) {
                if dist[v.index()].is_none() {
                    dist[v.index()] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// (mean shortest-path length over ordered pairs, diameter).
    pub fn path_stats(&self) -> (f64, u32) {
        let mut sum = 0u64;
        let mut pairs = 0u64;
        let mut diameter = 0;
        for u in self.nodes() {
            for d in self.bfs(u).into_iter().flatten().filter(|&d| d > 0) {
                sum += u64::from(d);
                pairs += 1;
                diameter = diameter.max(d);
            }
        }
        (sum as f64 / pairs.max(1) as f64, diameter)
    }

    /// Writes the edge-list format accepted by [`load_topology`].
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# {} nodes\n", self.node_count());
        for (u, v) in self.edges() {
            match self.link(u, v) {
                Some(p) => out.push_str(&format!("{u} {v} {} {}\n", p.delay_ms, p.loss)),
                None => out.push_str(&format!("{u} {v}\n")),
            }
        }
        out
    }
}

fn key(u: NodeId, v: NodeId) -> (NodeId, NodeId) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Declarative topology description, as found in experiment files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySpec {
    Core {
        branching_core: u32,
        branching_leaf: u32,
        consumers_per_leaf: u32,
    },
    Edge {
        spokes: u32,
        spoke_len: u32,
        consumers_per_spoke: u32,
    },
    RandomGeometric {
        n: u32,
        #[serde(default = "default_range")]
        range: f64,
        #[serde(default = "default_area")]
        area: f64,
        #[serde(default = "default_min_spacing")]
        min_spacing: f64,
        /// Fixed placement seed; when absent the run seed is used.
        #[serde(default)]
        seed: Option<u64>,
    },
    Line {
        n: u32,
    },
    File {
        path: String,
    },
}

fn default_range() -> f64 {
    DEFAULT_RANGE
}

fn default_area() -> f64 {
    DEFAULT_AREA
}

fn default_min_spacing() -> f64 {
    DEFAULT_MIN_SPACING
}

impl TopologySpec {
    pub fn build(&self, run_seed: u64) -> Result<Topology, TopologyError> {
        match self {
            TopologySpec::Core {
                branching_core,
                branching_leaf,
                consumers_per_leaf,
            } => gen_core(*branching_core, *branching_leaf, *consumers_per_leaf),
            TopologySpec::Edge {
                spokes,
                spoke_len,
                consumers_per_spoke,
            } => gen_edge(*spokes, *spoke_len, *consumers_per_spoke),
            TopologySpec::RandomGeometric {
                n,
                range,
                area,
                min_spacing,
                seed,
            } => gen_random_geometric_spaced(
                *n,
                *range,
                *area,
                *min_spacing,
                seed.unwrap_or(run_seed),
            ),
            TopologySpec::Line { n } => gen_line(*n),
            TopologySpec::File { path } => load_topology(path),
        }
    }

    /// Whether the graph is a single-producer tree whose leaves act as consumers.
    pub fn is_tree_archetype(&self) -> bool {
        matches!(self, TopologySpec::Core { .. } | TopologySpec::Edge { .. })
    }
}

fn require_positive(values: &[(&str, u32)]) -> Result<(), TopologyError> {
    for (name, v) in values {
        if *v == 0 {
            return Err(TopologyError::InvalidParameter(format!(
                "{name} must be at least 1"
            )));
        }
    }
    Ok(())
}

/// Tree whose consumer paths merge near the producer (node 0).
///
/// The producer has `branching_core` routers, each with `branching_leaf`
/// router children, each of which serves `consumers_per_leaf` consumers.
pub fn gen_core(
    branching_core: u32,
    branching_leaf: u32,
    consumers_per_leaf: u32,
) -> Result<Topology, TopologyError> {
    require_positive(&[
        ("branching_core", branching_core),
        ("branching_leaf", branching_leaf),
        ("consumers_per_leaf", consumers_per_leaf),
    ])?;
    let inner = branching_core;
    let outer = inner * branching_leaf;
    let consumers = outer * consumers_per_leaf;
    let n = 1 + inner + outer + consumers;
    let mut edges = Vec::with_capacity(n as usize - 1);
    for r in 0..inner {
        edges.push((NodeId(0), NodeId(1 + r)));
    }
    for o in 0..outer {
        edges.push((NodeId(1 + o / branching_leaf), NodeId(1 + inner + o)));
    }
    for c in 0..consumers {
        edges.push((
            NodeId(1 + inner + c / consumers_per_leaf),
            NodeId(1 + inner + outer + c),
        ));
    }
    Topology::from_edges(n as usize, edges)
}

/// Tree whose consumer paths only meet at the producer (node 0): disjoint
/// router chains that fan out to consumers at their far end.
pub fn gen_edge(
    spokes: u32,
    spoke_len: u32,
    consumers_per_spoke: u32,
) -> Result<Topology, TopologyError> {
    require_positive(&[
        ("spokes", spokes),
        ("spoke_len", spoke_len),
        ("consumers_per_spoke", consumers_per_spoke),
    ])?;
    let routers = spokes * spoke_len;
    let n = 1 + routers + spokes * consumers_per_spoke;
    let mut edges = Vec::new();
    for s in 0..spokes {
        let first = 1 + s * spoke_len;
        edges.push((NodeId(0), NodeId(first)));
        for step in 1..spoke_len {
            edges.push((NodeId(first + step - 1), NodeId(first + step)));
        }
        let tip = first + spoke_len - 1;
        for c in 0..consumers_per_spoke {
            edges.push((
                NodeId(tip),
                NodeId(1 + routers + s * consumers_per_spoke + c),
            ));
        }
    }
    Topology::from_edges(n as usize, edges)
}

/// `n` nodes placed uniformly at random on a disk of the given `area`,
/// linked when within `range` of each other. Placement is redrawn until the
/// graph is connected. Uses [`DEFAULT_MIN_SPACING`].
pub fn gen_random_geometric(
    n: u32,
    range: f64,
    area: f64,
    seed: u64,
) -> Result<Topology, TopologyError> {
    gen_random_geometric_spaced(n, range, area, DEFAULT_MIN_SPACING, seed)
}

/// As [`gen_random_geometric`], with no two nodes closer than `min_spacing`.
pub fn gen_random_geometric_spaced(
    n: u32,
    range: f64,
    area: f64,
    min_spacing: f64,
    seed: u64,
) -> Result<Topology, TopologyError> {
    if n < 2 {
        return Err(TopologyError::TooSmall {
            min: 2,
            got: n as usize,
        });
    }
    if !(range > 0.0 && area > 0.0 && min_spacing >= 0.0) {
        return Err(TopologyError::InvalidParameter(
            "range and area must be positive, min_spacing non-negative".into(),
        ));
    }
    let radius = (area / std::f64::consts::PI).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_GENERATION_RETRIES {
        let Some(positions) = place_on_disk(n as usize, radius, min_spacing, &mut rng) else {
            continue;
        };
        let mut t = Topology::empty(n as usize);
        for a in 0..n as usize {
            for b in a + 1..n as usize {
                if dist2(positions[a], positions[b]) <= range * range {
                    t.connect(NodeId(a as u32), NodeId(b as u32), None)?;
                }
            }
        }
        if t.validate().is_ok() {
            t.positions = Some(positions);
            return Ok(t);
        }
    }
    Err(TopologyError::GenerationFailed(MAX_GENERATION_RETRIES))
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)
}

/// Sequential rejection sampling; `None` if the disk fills up.
fn place_on_disk(
    n: usize,
    radius: f64,
    min_spacing: f64,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<(f64, f64)>> {
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut attempts = 0;
    while points.len() < n {
        attempts += 1;
        if attempts > PLACEMENT_ATTEMPTS {
            return None;
        }
        let p = (
            (rng.gen::<f64>() * 2.0 - 1.0) * radius,
            (rng.gen::<f64>() * 2.0 - 1.0) * radius,
        );
        if p.0 * p.0 + p.1 * p.1 > radius * radius {
            continue;
        }
        if points
            .iter()
            .all(|&q| dist2(p, q) >= min_spacing * min_spacing)
        {
            points.push(p);
        }
    }
    Some(points)
}

pub fn gen_line(n: u32) -> Result<Topology, TopologyError> {
    if n < 2 {
        return Err(TopologyError::TooSmall {
            min: 2,
            got: n as usize,
        });
    }
    Topology::from_edges(n as usize, (1..n).map(|v| (NodeId(v - 1), NodeId(v))))
}

pub fn load_topology(path: impl AsRef<Path>) -> Result<Topology, TopologyError> {
    parse_edge_list(&std::fs::read_to_string(path)?)
}

/// Parses `u v [delay_ms] [loss]` lines; `#` starts a comment.
pub fn parse_edge_list(text: &str) -> Result<Topology, TopologyError> {
    let mut edges = Vec::new();
    let mut max_id = 0u32;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if !(2..=4).contains(&fields.len()) {
            return Err(TopologyError::Parse {
                line,
                message: format!(
                    "expected `u v [delay_ms] [loss]`, got {} fields",
                    fields.len()
                ),
            });
        }
        let id = |s: &str| {
            s.parse::<u32>().map_err(|_| TopologyError::Parse {
                line,
                message: format!("`{s}` is not a node id"),
            })
        };
        let num = |s: &str, what: &str| {
            s.parse::<f64>().map_err(|_| TopologyError::Parse {
                line,
                message: format!("`{s}` is not a valid {what}"),
            })
        };
        let (u, v) = (id(fields[0])?, id(fields[1])?);
        if u == v {
            return Err(TopologyError::SelfLoop(NodeId(u)));
        }
        let params = match fields.len() {
            2 => None,
            _ => {
                let delay_ms = num(fields[2], "delay")?;
                let loss = fields
                    .get(3)
                    .map(|s| num(s, "loss"))
                    .transpose()?
                    .unwrap_or(0.0);
                if delay_ms < 0.0 || !(0.0..=1.0).contains(&loss) {
                    return Err(TopologyError::Parse {
                        line,
                        message: "delay must be non-negative and loss in [0, 1]".into(),
                    });
                }
                Some(LinkParams { delay_ms, loss })
            }
        };
        max_id = max_id.max(u).max(v);
        edges.push((NodeId(u), NodeId(v), params));
    }
    if edges.is_empty() {
        return Err(TopologyError::TooSmall { min: 2, got: 0 });
    }
    let mut t = Topology::empty(max_id as usize + 1);
    for (u, v, p) in edges {
        t.connect(u, v, p)?;
    }
    t.validate()?;
    Ok(t)
}

/// Set of nodes from which `producer` is reached through `via`.
pub fn subtree_through(t: &Topology, producer: NodeId, via: NodeId) -> BTreeSet<NodeId> {
    let dist = t.bfs(producer);
    let mut out = BTreeSet::from([via]);
    let mut queue = VecDeque::from([via]);
    while let Some(u) = queue.pop_front() {
        for &v in t.neighbors(u) {
            if dist[v.index()] > dist[u.index()] && out.insert(v) {
                queue.push_back(v);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_tree(t: &Topology) -> bool {
        t.edges().len() == t.node_count() - 1
    }

    #[test]
    fn core_shape() {
        let t = gen_core(4, 3, 1).unwrap();
        assert_eq!(t.node_count(), 29);
        assert!(is_tree(&t));
        assert_eq!(t.leaves().len(), 12);
        assert_eq!(t.degree(NodeId(0)), 4);
        let dist = t.bfs(NodeId(0));
        assert!(t.leaves().iter().all(|l| dist[l.index()] == Some(3)));

        let line = gen_core(1, 1, 1).unwrap();
        assert_eq!(line.node_count(), 4);
        assert_eq!(line.path_stats().1, 3);
    }

    #[test]
    fn core_paths_share_one_depth_one_router() {
        let t = gen_core(4, 3, 1).unwrap();
        let mut covered = BTreeSet::new();
        for &r in t.neighbors(NodeId(0)) {
            let sub = subtree_through(&t, NodeId(0), r);
            let leaves = t.leaves().into_iter().filter(|l| sub.contains(l)).count();
            assert_eq!(leaves, 3);
            assert!(covered.is_disjoint(&sub));
            covered.extend(sub);
        }
        assert_eq!(covered.len(), 28);
    }

    #[test]
    fn edge_shape() {
        let t = gen_edge(8, 2, 3).unwrap();
        assert_eq!(t.node_count(), 41);
        assert!(is_tree(&t));
        assert_eq!(t.leaves().len(), 24);
        assert_eq!(gen_edge(1, 1, 1).unwrap().node_count(), 3);
        for &r in t.neighbors(NodeId(0)) {
            let sub = subtree_through(&t, NodeId(0), r);
            assert_eq!(sub.len(), 2 + 3);
            assert_eq!(
                t.leaves().into_iter().filter(|l| sub.contains(l)).count(),
                3
            );
        }
    }

    #[test]
    fn zero_parameters_rejected() {
        assert!(gen_core(0, 1, 1).is_err());
        assert!(gen_edge(1, 0, 1).is_err());
    }

    #[test]
    fn line_basics() {
        let t = gen_line(2).unwrap();
        assert_eq!(t.edges(), vec![(NodeId(0), NodeId(1))]);
        let t = gen_line(5).unwrap();
        assert_eq!(t.path_stats().1, 4);
        assert_eq!(t.bfs(NodeId(0))[4], Some(4));
        assert!(gen_line(1).is_err());
    }

    #[test]
    fn random_geometric_is_deterministic() {
        let a = gen_random_geometric(50, DEFAULT_RANGE, DEFAULT_AREA, 9).unwrap();
        let b = gen_random_geometric(50, DEFAULT_RANGE, DEFAULT_AREA, 9).unwrap();
        assert_eq!(a, b);
        let c = gen_random_geometric(50, DEFAULT_RANGE, DEFAULT_AREA, 10).unwrap();
        assert_ne!(a.edges(), c.edges());

        let pair = gen_random_geometric(2, 10.0, 1.0, 1).unwrap();
        assert_eq!(pair.edges().len(), 1);
        assert!(matches!(
            gen_random_geometric(30, 0.01, 1.0, 1),
            Err(TopologyError::GenerationFailed(_))
        ));
    }

    #[test]
    fn random_geometric_calibration() {
        let (mut mean_sum, mut diam_sum, mut within) = (0.0, 0.0, 0);
        for seed in 0..100 {
            let t = gen_random_geometric(50, DEFAULT_RANGE, DEFAULT_AREA, seed).unwrap();
            let (mean, diameter) = t.path_stats();
            mean_sum += mean;
            diam_sum += f64::from(diameter);
            if diameter <= 7 {
                within += 1;
            }
        }
        let (mean, diameter) = (mean_sum / 100.0, diam_sum / 100.0);
        assert!((3.0..=4.0).contains(&mean), "average mean path {mean}");
        assert!(diameter <= 7.0, "average diameter {diameter}");
        assert!(
            within >= 85,
            "only {within}/100 placements have diameter <= 7"
        );
    }

    #[test]
    fn spacing_is_respected() {
        let t = gen_random_geometric_spaced(40, 0.3, 1.0, 0.1, 2).unwrap();
        let pos = t.positions().unwrap();
        for a in 0..pos.len() {
            for b in a + 1..pos.len() {
                assert!(dist2(pos[a], pos[b]) >= 0.01);
            }
        }
        assert!(matches!(
            gen_random_geometric_spaced(50, 0.3, 1.0, 0.5, 1),
            Err(TopologyError::GenerationFailed(_))
        ));
    }

    #[test]
    fn edge_list_parsing() {
        let t = parse_edge_list("0 1\n1 2").unwrap();
        assert_eq!(t, gen_line(3).unwrap());

        let t = parse_edge_list("# header\n0 1 5.5 0.1  # slow\n\n1 2\n").unwrap();
        assert_eq!(
            t.link(NodeId(1), NodeId(0)),
            Some(LinkParams {
                delay_ms: 5.5,
                loss: 0.1
            })
        );
        assert_eq!(t.link(NodeId(1), NodeId(2)), None);
        assert_eq!(parse_edge_list(&t.to_edge_list()).unwrap(), t);

        assert!(matches!(
            parse_edge_list("0 0"),
            Err(TopologyError::SelfLoop(NodeId(0)))
        ));
        assert!(matches!(
            parse_edge_list("0 1\n2 3"),
            Err(TopologyError::Disconnected(_))
        ));
        assert!(matches!(
            parse_edge_list("0 1\n1 x"),
            Err(TopologyError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_edge_list("0 1 1 2 3"),
            Err(TopologyError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn load_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("topo.txt");
        std::fs::write(&path, "0 1\n1 2\n").unwrap();
        assert_eq!(load_topology(&path).unwrap().node_count(), 3);
        assert!(matches!(
            load_topology(dir.path().join("missing.txt")),
            Err(TopologyError::Io(_))
        ));
    }
}
