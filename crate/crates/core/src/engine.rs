//! Discrete-event simulation of Interest/Data exchange.
//!
//! Time is kept in integer microseconds so that latencies are exact sums of
//! link delays. Events at equal times are processed in insertion order, and
//! every random draw comes from a stream derived from the run seed, so a run
//! is a pure function of its configuration.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{CacheSnapshot, FailedRequest, MetricsLog, RetrievalRecord};
use crate::model::{self, new_interest, ChunkName, Data, Interest, ModelError, NodeId, Strategy};
use crate::node::{Face, NodeState, Replacement, DEFAULT_CACHE_CAPACITY};
use crate::routing::{build_fibs, distance_to_source, RoutingTable};
use crate::strategies::{make_data, mcd_on_data_hit_side, FixedDraw, StrategyError};
use crate::topology::{Topology, TopologyError, TopologySpec};

const WORKLOAD_STREAM: u64 = u64::MAX - 1;
const LINK_STREAM: u64 = u64::MAX - 2;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// A set of nodes named in a configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeSelection {
    /// `"auto"`, `"all"` or `"leaves"`.
    Keyword(SelectionKeyword),
    List(Vec<NodeId>),
    #[default]
    #[serde(skip)]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionKeyword {
    Auto,
    All,
    Leaves,
}

impl NodeSelection {
    fn resolve(&self, topology: &Topology, auto: &[NodeId]) -> Result<Vec<NodeId>, EngineError> {
        let mut out = match self {
            NodeSelection::Auto | NodeSelection::Keyword(SelectionKeyword::Auto) => auto.to_vec(),
            NodeSelection::Keyword(SelectionKeyword::All) => topology.nodes().collect(),
            NodeSelection::Keyword(SelectionKeyword::Leaves) => topology.leaves(),
            NodeSelection::List(list) => {
                if let Some(bad) = list.iter().find(|n| n.index() >= topology.node_count()) {
                    return Err(EngineError::Config(format!(
                        "node {bad} does not exist in a {}-node topology",
                        topology.node_count()
                    )));
                }
                list.clone()
            }
        };
        out.sort();
        out.dedup();
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptedRequest {
    pub consumer: NodeId,
    pub prefix: NodeId,
    pub chunk_id: u32,
    pub time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WorkloadSpec {
    /// Every consumer requests one random chunk from each prefix in its FIB,
    /// `rounds` times. Round `r` issues its requests uniformly in
    /// `[r * window_ms, (r + 1) * window_ms)`.
    Paper {
        #[serde(default = "default_window")]
        window_ms: f64,
        #[serde(default = "default_rounds")]
        rounds: u32,
        #[serde(default)]
        consumers: NodeSelection,
    },
    Scripted {
        requests: Vec<ScriptedRequest>,
    },
}

fn default_window() -> f64 {
    10_000.0
}

fn default_rounds() -> u32 {
    1
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec::Paper {
            window_ms: default_window(),
            rounds: 1,
            consumers: NodeSelection::Auto,
        }
    }
}

/// One simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub topology: TopologySpec,
    pub strategy: Strategy,
    pub cache_capacity: usize,
    pub replacement: Replacement,
    pub chunk_count: u32,
    pub workload: WorkloadSpec,
    /// Nodes that advertise a prefix. `auto` is node 0 on the core and edge
    /// archetypes and every node elsewhere.
    pub producers: NodeSelection,
    /// Round-trip delay contributed by one hop of the path.
    pub per_hop_delay_ms: f64,
    /// Half-width of the uniform per-hop delay jitter.
    pub jitter_ms: f64,
    /// Per-transmission loss probability for links without an override.
    pub loss: f64,
    pub pit_timeout_ms: f64,
    pub retries: u32,
    pub seed: u64,
    /// Zero disables periodic snapshots; a final snapshot is always taken.
    pub snapshot_period_ms: f64,
    pub max_sim_time_ms: f64,
    pub cache_at_consumer: bool,
    /// Pins every random caching draw to this value (trace checks).
    pub decision_draw: Option<f64>,
    /// Keep a trace of every caching decision in the output.
    pub record_decisions: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            topology: TopologySpec::RandomGeometric {
                n: 50,
                range: crate::topology::DEFAULT_RANGE,
                area: crate::topology::DEFAULT_AREA,
                min_spacing: crate::topology::DEFAULT_MIN_SPACING,
                seed: None,
            },
            strategy: Strategy::Cee,
            cache_capacity: DEFAULT_CACHE_CAPACITY,
            replacement: Replacement::Lru,
            chunk_count: model::DEFAULT_CHUNK_COUNT,
            workload: WorkloadSpec::default(),
            producers: NodeSelection::Auto,
            per_hop_delay_ms: crate::topology::DEFAULT_LINK_DELAY_MS,
            jitter_ms: 0.0,
            loss: 0.0,
            pit_timeout_ms: 2_000.0,
            retries: 3,
            seed: 0,
            snapshot_period_ms: 1_000.0,
            max_sim_time_ms: 300_000.0,
            cache_at_consumer: false,
            decision_draw: None,
            record_decisions: false,
        }
    }
}

impl RunConfig {
    // negated comparisons so that NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), EngineError> {
        self.strategy.validate()?;
        let bad = |m: &str| Err(EngineError::Config(m.to_string()));
        if self.cache_capacity == 0 {
            return bad("cache_capacity must be at least 1");
        }
        if self.chunk_count == 0 {
            return bad("chunk_count must be at least 1");
        }
        if !(self.per_hop_delay_ms >= 0.0) || !(self.jitter_ms >= 0.0) {
            return bad("per_hop_delay_ms and jitter_ms must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.loss) {
            return bad("loss must be in [0, 1]");
        }
        if !(self.pit_timeout_ms > 0.0) || !(self.max_sim_time_ms > 0.0) {
            return bad("pit_timeout_ms and max_sim_time_ms must be positive");
        }
        if !(self.snapshot_period_ms >= 0.0) {
            return bad("snapshot_period_ms must be non-negative");
        }
        if let Some(d) = self.decision_draw {
            if !(0.0..=1.0).contains(&d) {
                return bad("decision_draw must be in [0, 1]");
            }
        }
        if let WorkloadSpec::Paper {
            window_ms, rounds, ..
        } = &self.workload
        {
            if !(*window_ms > 0.0) || *rounds == 0 {
                return bad("workload window_ms must be positive and rounds at least 1");
            }
        }
        Ok(())
    }

    /// Expected latency of an uncached retrieval over `hops` hops.
    pub fn baseline_latency(&self, hops: u32) -> f64 {
        crate::metrics::baseline_latency(hops, self.per_hop_delay_ms)
    }
}

pub fn baseline_latency(hops: u32, config: &RunConfig) -> f64 {
    config.baseline_latency(hops)
}

fn to_us(ms: f64) -> u64 {
    (ms * 1000.0).round().max(0.0) as u64
}

fn to_ms(us: u64) -> f64 {
    us as f64 / 1000.0
}

/// One request a consumer will issue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Request {
    pub seq: u64,
    pub consumer: NodeId,
    pub name: ChunkName,
    pub issue_us: u64,
}

/// Expands a workload description into concrete requests, ordered by sequence number.
pub fn generate_workload(
    config: &RunConfig,
    topology: &Topology,
    routing: &RoutingTable,
) -> Result<Vec<Request>, EngineError> {
    let mut out = Vec::new();
    match &config.workload {
        WorkloadSpec::Paper {
            window_ms,
            rounds,
            consumers,
        } => {
            let auto = if config.topology.is_tree_archetype() {
                topology.leaves()
            } else {
                topology.nodes().collect()
            };
            let consumers = consumers.resolve(topology, &auto)?;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(WORKLOAD_STREAM);
            let window = to_us(*window_ms).max(1);
            for round in 0..u64::from(*rounds) {
                for &consumer in &consumers {
                    let prefixes: Vec<NodeId> = routing.fib(consumer).prefixes().collect();
                    for prefix in prefixes {
                        let chunk_id = rng.gen_range(0..config.chunk_count);
                        let issue_us = round * window + rng.gen_range(0..window);
                        out.push(Request {
                            seq: out.len() as u64,
                            consumer,
                            name: model::make_chunk_name(prefix, chunk_id, config.chunk_count)?,
                            issue_us,
                        });
                    }
                }
            }
        }
        WorkloadSpec::Scripted { requests } => {
            for r in requests {
                if r.consumer.index() >= topology.node_count() {
                    return Err(EngineError::Config(format!(
                        "scripted consumer {} does not exist",
                        r.consumer
                    )));
                }
                out.push(Request {
                    seq: out.len() as u64,
                    consumer: r.consumer,
                    name: model::make_chunk_name(r.prefix, r.chunk_id, config.chunk_count)?,
                    issue_us: to_us(r.time_ms),
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    InterestArrival {
        node: NodeId,
        from: Face,
        interest: Interest,
    },
    DataArrival {
        node: NodeId,
        from: NodeId,
        data: Data,
    },
    InterestTimeout {
        node: NodeId,
        name: ChunkName,
        generation: u64,
    },
    SnapshotTick,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time_us: u64,
    pub order: u64,
    pub kind: EventKind,
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time_us, self.order).cmp(&(other.time_us, other.order))
    }
}

/// One caching decision taken by a node on a Data packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub time_us: u64,
    pub node: NodeId,
    pub name: ChunkName,
    pub cache: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunStats {
    pub events: u64,
    pub interests_sent: u64,
    pub data_sent: u64,
    pub lost_packets: u64,
    pub unsolicited_data: u64,
    pub retransmissions: u64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: MetricsLog,
    pub snapshots: Vec<CacheSnapshot>,
    pub decisions: Vec<Decision>,
    pub stats: RunStats,
}

#[derive(Debug, Clone)]
struct Pending {
    request: Request,
    retries: u32,
    aggregated: bool,
}

/// A fully set-up simulation, ready to run.
pub struct Simulation {
    config: RunConfig,
    topology: Topology,
    routing: RoutingTable,
    nodes: Vec<NodeState>,
    queue: BinaryHeap<Reverse<Event>>,
    next_order: u64,
    now: u64,
    link_rng: ChaCha8Rng,
    pending: BTreeMap<u64, Pending>,
    log: MetricsLog,
    snapshots: Vec<CacheSnapshot>,
    decisions: Vec<Decision>,
    stats: RunStats,
    strategy_label: String,
}

impl Simulation {
    pub fn new(config: RunConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let topology = config.topology.build(config.seed)?;
        Self::with_topology(config, topology)
    }

    /// Uses `topology` instead of building the configured one.
    pub fn with_topology(config: RunConfig, topology: Topology) -> Result<Self, EngineError> {
        config.validate()?;
        let auto_producers = if config.topology.is_tree_archetype() {
            vec![NodeId(0)]
        } else {
            topology.nodes().collect()
        };
        let producers = config.producers.resolve(&topology, &auto_producers)?;
        let routing = build_fibs(&topology, &producers);
        let label_k = match config.strategy {
            Strategy::Labels { k } => k,
            _ => 1,
        };
        let nodes = topology
            .nodes()
            .map(|id| {
                let mut n = NodeState::new(
                    id,
                    config.cache_capacity,
                    config.replacement,
                    label_k,
                    config.seed,
                );
                n.fib = routing.fib(id).clone();
                n
            })
            .collect();
        let requests = generate_workload(&config, &topology, &routing)?;
        let mut link_rng = ChaCha8Rng::seed_from_u64(config.seed);
        link_rng.set_stream(LINK_STREAM);
        let mut sim = Self {
            strategy_label: config.strategy.to_string(),
            config,
            topology,
            routing,
            nodes,
            queue: BinaryHeap::new(),
            next_order: 0,
            now: 0,
            link_rng,
            pending: BTreeMap::new(),
            log: MetricsLog::default(),
            snapshots: Vec::new(),
            decisions: Vec::new(),
            stats: RunStats::default(),
        };
        for r in requests {
            sim.pending.insert(
                r.seq,
                Pending {
                    request: r,
                    retries: 0,
                    aggregated: false,
                },
            );
            let interest = new_interest(r.name, r.consumer, r.seq);
            sim.schedule(
                r.issue_us,
                EventKind::InterestArrival {
                    node: r.consumer,
                    from: Face::LocalApp,
                    interest,
                },
            );
        }
        let period = to_us(sim.config.snapshot_period_ms);
        if period > 0 {
            sim.schedule(period, EventKind::SnapshotTick);
        }
        Ok(sim)
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn routing(&self) -> &RoutingTable {
        &self.routing
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn now_ms(&self) -> f64 {
        to_ms(self.now)
    }

    fn schedule(&mut self, time_us: u64, kind: EventKind) {
        let order = self.next_order;
        self.next_order += 1;
        self.queue.push(Reverse(Event {
            time_us,
            order,
            kind,
        }));
    }

    /// Processes a single event. Returns false once the queue is exhausted or
    /// the horizon is reached.
    pub fn step(&mut self) -> Result<bool, EngineError> {
        let horizon = to_us(self.config.max_sim_time_ms);
        let Some(Reverse(event)) = self.queue.pop() else {
            return Ok(false);
        };
        if event.time_us > horizon {
            self.queue.clear();
            return Ok(false);
        }
        self.now = event.time_us;
        self.stats.events += 1;
        match event.kind {
            EventKind::InterestArrival {
                node,
                from,
                interest,
            } => self.deliver_interest(node, interest, from)?,
            EventKind::DataArrival { node, from, data } => self.deliver_data(node, data, from)?,
            EventKind::InterestTimeout {
                node,
                name,
                generation,
            } => self.expire(node, name, generation),
            EventKind::SnapshotTick => {
                self.take_snapshot();
                let others = self
                    .queue
                    .iter()
                    .any(|Reverse(e)| e.kind != EventKind::SnapshotTick);
                if others {
                    let next = self.now + to_us(self.config.snapshot_period_ms);
                    self.schedule(next, EventKind::SnapshotTick);
                }
            }
        }
        Ok(true)
    }

    pub fn run(mut self) -> Result<RunOutput, EngineError> {
        while self.step()? {}
        self.take_snapshot();
        let outstanding = std::mem::take(&mut self.pending);
        for (_, p) in outstanding {
            self.fail(&p, "unsatisfied at simulation end");
        }
        self.log.records.sort_by_key(|r| r.seq);
        self.log.failures.sort_by_key(|f| f.seq);
        Ok(RunOutput {
            log: self.log,
            snapshots: self.snapshots,
            decisions: self.decisions,
            stats: self.stats,
        })
    }

    fn take_snapshot(&mut self) {
        self.snapshots.push(CacheSnapshot {
            time_ms: to_ms(self.now),
            nodes: self.nodes.iter().map(|n| n.cs.names().to_vec()).collect(),
        });
    }

    /// One traversal costs half the link's per-hop delay, so a retrieval over
    /// `h` hops (Interest up, Data down) takes `h` per-hop delays.
    fn link_delay_us(&mut self, u: NodeId, v: NodeId) -> u64 {
        let base = self
            .topology
            .link(u, v)
            .map(|p| p.delay_ms)
            .unwrap_or(self.config.per_hop_delay_ms);
        let j = self.config.jitter_ms;
        let ms = if j > 0.0 {
            base + self.link_rng.gen_range(-j..=j)
        } else {
            base
        };
        to_us(ms.max(0.0) / 2.0)
    }

    /// Bernoulli loss draw; no randomness is consumed on lossless links.
    fn lost(&mut self, u: NodeId, v: NodeId) -> bool {
        let loss = self
            .topology
            .link(u, v)
            .map(|p| p.loss)
            .unwrap_or(self.config.loss);
        if loss > 0.0 && self.link_rng.gen::<f64>() < loss {
            self.stats.lost_packets += 1;
            return true;
        }
        false
    }

    fn send_interest(&mut self, from: NodeId, to: NodeId, mut interest: Interest) {
        self.stats.interests_sent += 1;
        interest.hops += 1;
        let delay = self.link_delay_us(from, to);
        if !self.lost(from, to) {
            self.schedule(
                self.now + delay,
                EventKind::InterestArrival {
                    node: to,
                    from: Face::Node(from),
                    interest,
                },
            );
        }
    }

    fn send_data(&mut self, from: NodeId, to: NodeId, mut data: Data) {
        self.stats.data_sent += 1;
        data.hops += 1;
        let delay = self.link_delay_us(from, to);
        if !self.lost(from, to) {
            self.schedule(
                self.now + delay,
                EventKind::DataArrival {
                    node: to,
                    from,
                    data,
                },
            );
        }
    }

    /// Interest processing at `node`: answer from the producer store or the
    /// Content Store, otherwise record it in the PIT and forward upstream.
    pub fn deliver_interest(
        &mut self,
        node: NodeId,
        mut interest: Interest,
        from: Face,
    ) -> Result<(), EngineError> {
        let strategy = self.config.strategy;
        let state = &mut self.nodes[node.index()];
        let at_producer = state.is_producer_of(&interest.name);
        let can_satisfy = state.cs_lookup(&interest.name);
        let action = strategy.on_interest(&interest, can_satisfy, at_producer);

        if action.satisfy {
            let seed = action
                .data_seed
                .expect("satisfying action carries a data seed");
            let data = make_data(&interest, seed, node);
            match from {
                Face::Node(down) => {
                    if action.mcd_delete_after_hit {
                        mcd_on_data_hit_side(&mut self.nodes[node.index()], &interest.name);
                    }
                    self.send_data(node, down, data);
                }
                Face::LocalApp => self.complete(interest.seq, &data),
            }
            return Ok(());
        }

        let next = match self.nodes[node.index()].fib_next_hop(interest.name.prefix) {
            Ok(next) => next,
            Err(e) => {
                if from == Face::LocalApp {
                    if let Some(p) = self.pending.remove(&interest.seq) {
                        self.fail(&p, &e.to_string());
                    }
                }
                return Ok(());
            }
        };

        let state = &mut self.nodes[node.index()];
        let retransmission = matches!(from, Face::Node(_))
            && state
                .pit
                .get(&interest.name)
                .is_some_and(|e| e.downstream.iter().any(|(f, _)| *f == from));
        let is_new = state.pit_register(interest.name, interest.seq, from, self.now);
        if is_new {
            let generation = state
                .pit
                .get(&interest.name)
                .map(|e| e.generation)
                .unwrap_or_default();
            let at = self.now + to_us(self.config.pit_timeout_ms);
            self.schedule(
                at,
                EventKind::InterestTimeout {
                    node,
                    name: interest.name,
                    generation,
                },
            );
        }
        if !is_new && !retransmission {
            if let Some(p) = self.pending.get_mut(&interest.seq) {
                p.aggregated = true;
            }
        }
        if is_new || retransmission {
            // the consumer creates the Interest; only forwarding nodes count
            if action.tsi_increment && from != Face::LocalApp {
                interest.tsi += 1;
            }
            self.send_interest(node, next, interest);
        }
        Ok(())
    }

    /// Data processing at `node`: consume the PIT entry, apply the caching
    /// decision, and fan the (possibly updated) packet out downstream.
    pub fn deliver_data(
        &mut self,
        node: NodeId,
        data: Data,
        _from: NodeId,
    ) -> Result<(), EngineError> {
        let downstream = self.nodes[node.index()].pit_consume(&data.name);
        if downstream.is_empty() {
            self.stats.unsolicited_data += 1;
            return Ok(());
        }
        let forwards = downstream.iter().any(|(f, _)| matches!(f, Face::Node(_)));
        let mut outgoing = data;
        let state = &mut self.nodes[node.index()];
        if (forwards || self.config.cache_at_consumer) && !state.is_producer_of(&data.name) {
            let action = match self.config.decision_draw {
                Some(v) => {
                    self.config
                        .strategy
                        .on_data(&data, state.label, &mut FixedDraw::new(v))?
                }
                None => self.config.strategy.on_data(
                    &data,
                    state.label,
                    &mut state.rng as &mut dyn RngCore,
                )?,
            };
            if action.cache {
                state.cs_insert(data.name);
            }
            if self.config.record_decisions {
                self.decisions.push(Decision {
                    time_us: self.now,
                    node,
                    name: data.name,
                    cache: action.cache,
                });
            }
            outgoing = action.forward;
        }
        for (face, seq) in downstream {
            match face {
                Face::Node(down) => self.send_data(node, down, outgoing),
                Face::LocalApp => self.complete(seq, &outgoing),
            }
        }
        Ok(())
    }

    fn expire(&mut self, node: NodeId, name: ChunkName, generation: u64) {
        let Some(entry) = self.nodes[node.index()].pit.expire(&name, generation) else {
            return;
        };
        for (face, seq) in entry.downstream {
            if face != Face::LocalApp {
                continue;
            }
            let Some(p) = self.pending.get_mut(&seq) else {
                continue;
            };
            if p.retries < self.config.retries {
                p.retries += 1;
                self.stats.retransmissions += 1;
                let interest = new_interest(name, node, seq);
                self.schedule(
                    self.now,
                    EventKind::InterestArrival {
                        node,
                        from: Face::LocalApp,
                        interest,
                    },
                );
            } else if let Some(p) = self.pending.remove(&seq) {
                self.fail(&p, "retries exhausted");
            }
        }
    }

    fn complete(&mut self, seq: u64, data: &Data) {
        let Some(p) = self.pending.remove(&seq) else {
            return;
        };
        let r = p.request;
        let distance = distance_to_source(&self.routing, r.consumer, r.name.prefix).unwrap_or(0);
        self.log.records.push(RetrievalRecord {
            run_seed: self.config.seed,
            strategy: self.strategy_label.clone(),
            seq,
            consumer: r.consumer,
            prefix: r.name.prefix,
            chunk_id: r.name.chunk_id,
            distance_to_source: distance,
            hops_to_hit: data.hops,
            latency_ms: to_ms(self.now - r.issue_us),
            hit_node: data.hit_node,
            issue_time_ms: to_ms(r.issue_us),
            satisfy_time_ms: to_ms(self.now),
            retries: p.retries,
            aggregated: p.aggregated,
        });
    }

    fn fail(&mut self, p: &Pending, reason: &str) {
        let r = p.request;
        self.log.failures.push(FailedRequest {
            run_seed: self.config.seed,
            strategy: self.strategy_label.clone(),
            seq: r.seq,
            consumer: r.consumer,
            prefix: r.name.prefix,
            chunk_id: r.name.chunk_id,
            issue_time_ms: to_ms(r.issue_us),
            retries: p.retries,
            reason: reason.to_string(),
        });
    }
}

/// Builds and runs one simulation.
pub fn run(config: &RunConfig) -> Result<RunOutput, EngineError> {
    Simulation::new(config.clone())?.run()
}
