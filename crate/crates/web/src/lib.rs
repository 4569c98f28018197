//! Browser bindings for the simulator. Each export takes and returns JSON
//! strings; `www/index.html` drives them.

use std::collections::BTreeMap;

use icnsim::engine::{NodeSelection, RunConfig, ScriptedRequest, Simulation, WorkloadSpec};
use icnsim::metrics::{
    accumulate_by_distance, distance_table, overall_summary, DEFAULT_MIN_SAMPLES,
};
use icnsim::topology::{Topology, TopologySpec};
use icnsim::{NodeId, Strategy};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Layout {
    nodes: Vec<NodeView>,
    edges: Vec<(u32, u32)>,
    producers: Vec<u32>,
}

#[derive(Serialize)]
struct NodeView {
    id: u32,
    x: f64,
    y: f64,
}

/// Node positions in the unit square. Random-geometric topologies keep their
/// placement; everything else gets a radial tree drawn from node 0.
fn layout(t: &Topology) -> Vec<(f64, f64)> {
    if let Some(pos) = t.positions() {
        let (mut lo, mut hi) = ((f64::MAX, f64::MAX), (f64::MIN, f64::MIN));
        for &(x, y) in pos {
            lo = (lo.0.min(x), lo.1.min(y));
            hi = (hi.0.max(x), hi.1.max(y));
        }
        let span = (hi.0 - lo.0).max(hi.1 - lo.1).max(1e-9);
        return pos
            .iter()
            .map(|&(x, y)| {
                (
                    0.05 + 0.9 * (x - lo.0) / span,
                    0.05 + 0.9 * (y - lo.1) / span,
                )
            })
            .collect();
    }
    let n = t.node_count();
    let dist = t.bfs(NodeId(0));
    let mut parent = vec![None; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 1..n {
        let Some(dv) = dist[v] else { continue };
        if let Some(&p) = t
            .neighbors(NodeId(v as u32))
            .iter()
            .find(|u| dist[u.index()] == Some(dv - 1))
        {
            parent[v] = Some(p.index());
            children[p.index()].push(v);
        }
    }
    // leaves per subtree, computed deepest first
    let mut order: Vec<usize> = (0..n).filter(|&v| dist[v].is_some()).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(dist[v]));
    let mut leaves = vec![0usize; n];
    for &v in &order {
        leaves[v] = if children[v].is_empty() {
            1
        } else {
            children[v].iter().map(|&c| leaves[c]).sum()
        };
    }
    let depth = order.first().and_then(|&v| dist[v]).unwrap_or(0).max(1) as f64;
    let mut angle = vec![(0.0, std::f64::consts::TAU); n];
    let mut pos = vec![(0.5, 0.5); n];
    order.reverse();
    for &v in &order {
        let (start, span) = angle[v];
        let r = 0.45 * f64::from(dist[v].unwrap_or(0)) / depth;
        let mid = start + span / 2.0;
        pos[v] = (0.5 + r * mid.cos(), 0.5 + r * mid.sin());
        let mut at = start;
        for &c in &children[v] {
            let share = span * leaves[c] as f64 / leaves[v] as f64;
            angle[c] = (at, share);
            at += share;
        }
    }
    pos
}

fn parse_config(config_json: &str) -> Result<RunConfig, String> {
    let config: RunConfig = serde_json::from_str(config_json).map_err(|e| e.to_string())?;
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn layout_of(sim: &Simulation) -> Layout {
    let t = sim.topology();
    Layout {
        nodes: layout(t)
            .into_iter()
            .enumerate()
            .map(|(i, (x, y))| NodeView { id: i as u32, x, y })
            .collect(),
        edges: t.edges().into_iter().map(|(u, v)| (u.0, v.0)).collect(),
        producers: sim.routing().producers().iter().map(|p| p.0).collect(),
    }
}

/// Topology and producers for a run configuration (JSON `RunConfig`).
pub fn topology_json(config_json: &str) -> Result<String, String> {
    let sim = Simulation::new(parse_config(config_json)?).map_err(|e| e.to_string())?;
    serde_json::to_string(&layout_of(&sim)).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct SimView {
    layout: Layout,
    summary: Option<icnsim::metrics::Summary>,
    by_distance: Vec<icnsim::metrics::DistanceStats>,
    failures: usize,
    /// Per snapshot: time and, per node, cached names as "/prefix/chunk".
    snapshots: Vec<(f64, Vec<Vec<String>>)>,
}

/// Runs one simulation and returns layout, summary, per-distance table and
/// cache snapshots.
pub fn simulate_json(config_json: &str) -> Result<String, String> {
    let config = parse_config(config_json)?;
    let per_hop = config.per_hop_delay_ms;
    let sim = Simulation::new(config).map_err(|e| e.to_string())?;
    let layout = layout_of(&sim);
    let out = sim.run().map_err(|e| e.to_string())?;
    let records = &out.log.records;
    let view = SimView {
        layout,
        summary: overall_summary(records, per_hop).ok(),
        by_distance: distance_table(
            &accumulate_by_distance(records),
            per_hop,
            DEFAULT_MIN_SAMPLES,
        ),
        failures: out.log.failures.len(),
        snapshots: out
            .snapshots
            .iter()
            .map(|s| {
                (
                    s.time_ms,
                    s.nodes
                        .iter()
                        .map(|names| names.iter().map(ToString::to_string).collect())
                        .collect(),
                )
            })
            .collect(),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Placement {
    strategy: String,
    hops: u32,
    trials: u32,
    /// Caching frequency of the nodes between producer and consumer, in path
    /// order from the producer side.
    frequency: Vec<f64>,
}

/// Caching frequency per path position on a line of `hops` hops, one fresh
/// network per trial.
pub fn placement_json(strategy: &str, hops: u32, trials: u32) -> Result<String, String> {
    let strategy: Strategy = strategy
        .parse()
        .map_err(|e: icnsim::model::ModelError| e.to_string())?;
    if !(1..=30).contains(&hops) || trials == 0 || trials > 100_000 {
        return Err("hops must be in 1..=30 and trials in 1..=100000".into());
    }
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    for trial in 0..trials {
        let config = RunConfig {
            topology: TopologySpec::Line { n: hops + 1 },
            strategy,
            producers: NodeSelection::List(vec![NodeId(0)]),
            workload: WorkloadSpec::Scripted {
                requests: vec![ScriptedRequest {
                    consumer: NodeId(hops),
                    prefix: NodeId(0),
                    chunk_id: trial % 50,
                    time_ms: 0.0,
                }],
            },
            seed: u64::from(trial),
            record_decisions: true,
            snapshot_period_ms: 0.0,
            ..RunConfig::default()
        };
        let out = icnsim::run(&config).map_err(|e| e.to_string())?;
        for d in out.decisions.iter().filter(|d| d.cache) {
            *counts.entry(d.node.0).or_default() += 1;
        }
    }
    let frequency = (1..hops)
        .map(|v| counts.get(&v).copied().unwrap_or(0) as f64 / f64::from(trials))
        .collect();
    serde_json::to_string(&Placement {
        strategy: strategy.to_string(),
        hops,
        trials,
        frequency,
    })
    .map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn topology(config_json: &str) -> Result<String, JsError> {
    topology_json(config_json).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate(config_json: &str) -> Result<String, JsError> {
    simulate_json(config_json).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn placement(strategy: &str, hops: u32, trials: u32) -> Result<String, JsError> {
    placement_json(strategy, hops, trials).map_err(|e| JsError::new(&e))
}
