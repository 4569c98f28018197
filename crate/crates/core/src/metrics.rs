//! Evaluation quantities computed from a run's retrieval log.
//!
//! Everything here groups first and averages second, so results do not
//! depend on record order, and per-seed partial sums merge exactly.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ChunkName, NodeId};

/// Distances with fewer samples than this are flagged in reports.
pub const DEFAULT_MIN_SAMPLES: u64 = 5;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("retrieval log is empty")]
    EmptyLog,
}

/// One satisfied request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalRecord {
    pub run_seed: u64,
    pub strategy: String,
    pub seq: u64,
    pub consumer: NodeId,
    pub prefix: NodeId,
    pub chunk_id: u32,
    pub distance_to_source: u32,
    pub hops_to_hit: u32,
    pub latency_ms: f64,
    pub hit_node: NodeId,
    pub issue_time_ms: f64,
    pub satisfy_time_ms: f64,
    pub retries: u32,
    /// The request joined a PIT entry created by another in-flight request,
    /// so its latency is shorter than its hop count alone implies.
    pub aggregated: bool,
}

/// A request that was never satisfied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedRequest {
    pub run_seed: u64,
    pub strategy: String,
    pub seq: u64,
    pub consumer: NodeId,
    pub prefix: NodeId,
    pub chunk_id: u32,
    pub issue_time_ms: f64,
    pub retries: u32,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsLog {
    pub records: Vec<RetrievalRecord>,
    pub failures: Vec<FailedRequest>,
}

impl MetricsLog {
    pub fn merge(&mut self, other: MetricsLog) {
        self.records.extend(other.records);
        self.failures.extend(other.failures);
    }

    pub fn failure_rate(&self) -> f64 {
        let total = self.records.len() + self.failures.len();
        if total == 0 {
            0.0
        } else {
            self.failures.len() as f64 / total as f64
        }
    }
}

/// Cache contents of every node at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheSnapshot {
    pub time_ms: f64,
    /// Indexed by node id.
    pub nodes: Vec<Vec<ChunkName>>,
}

/// Running sums for one distance bucket.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    pub n: u64,
    pub hops_to_hit: f64,
    pub latency_ms: f64,
}

impl Accumulator {
    pub fn add(&mut self, r: &RetrievalRecord) {
        self.n += 1;
        self.hops_to_hit += f64::from(r.hops_to_hit);
        self.latency_ms += r.latency_ms;
    }

    pub fn merge(&mut self, other: &Accumulator) {
        self.n += other.n;
        self.hops_to_hit += other.hops_to_hit;
        self.latency_ms += other.latency_ms;
    }

    pub fn mean_hops(&self) -> f64 {
        self.hops_to_hit / self.n as f64
    }

    pub fn mean_latency(&self) -> f64 {
        self.latency_ms / self.n as f64
    }
}

/// Per-distance aggregate row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceStats {
    pub distance: u32,
    pub n: u64,
    pub mean_hops_to_hit: f64,
    pub hop_reduction: f64,
    pub mean_latency_ms: f64,
    pub latency_reduction_ms: f64,
    pub low_confidence: bool,
}

pub fn accumulate_by_distance(records: &[RetrievalRecord]) -> BTreeMap<u32, Accumulator> {
    let mut out: BTreeMap<u32, Accumulator> = BTreeMap::new();
    for r in records {
        out.entry(r.distance_to_source).or_default().add(r);
    }
    out
}

fn non_empty(records: &[RetrievalRecord]) -> Result<(), MetricsError> {
    if records.is_empty() {
        Err(MetricsError::EmptyLog)
    } else {
        Ok(())
    }
}

/// Mean of `distance − hops_to_hit` per distance to source.
pub fn hop_reduction_by_distance(
    records: &[RetrievalRecord],
) -> Result<BTreeMap<u32, f64>, MetricsError> {
    non_empty(records)?;
    Ok(accumulate_by_distance(records)
        .into_iter()
        .map(|(d, acc)| (d, f64::from(d) - acc.mean_hops()))
        .collect())
}

pub fn latency_by_distance(
    records: &[RetrievalRecord],
) -> Result<BTreeMap<u32, f64>, MetricsError> {
    non_empty(records)?;
    Ok(accumulate_by_distance(records)
        .into_iter()
        .map(|(d, acc)| (d, acc.mean_latency()))
        .collect())
}

/// Expected no-cache latency for a path of `hops` hops.
pub fn baseline_latency(hops: u32, per_hop_delay_ms: f64) -> f64 {
    f64::from(hops) * per_hop_delay_ms
}

/// Baseline latency minus measured mean latency, per distance.
pub fn latency_reduction_by_distance(
    records: &[RetrievalRecord],
    per_hop_delay_ms: f64,
) -> Result<BTreeMap<u32, f64>, MetricsError> {
    Ok(latency_by_distance(records)?
        .into_iter()
        .map(|(d, lat)| (d, baseline_latency(d, per_hop_delay_ms) - lat))
        .collect())
}

/// Full per-distance table from pre-accumulated sums.
pub fn distance_table(
    acc: &BTreeMap<u32, Accumulator>,
    per_hop_delay_ms: f64,
    min_samples: u64,
) -> Vec<DistanceStats> {
    acc.iter()
        .filter(|(_, a)| a.n > 0)
        .map(|(&d, a)| DistanceStats {
            distance: d,
            n: a.n,
            mean_hops_to_hit: a.mean_hops(),
            hop_reduction: f64::from(d) - a.mean_hops(),
            mean_latency_ms: a.mean_latency(),
            latency_reduction_ms: baseline_latency(d, per_hop_delay_ms) - a.mean_latency(),
            low_confidence: a.n < min_samples,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub n: u64,
    pub mean_distance: f64,
    pub mean_hops: f64,
    pub mean_hop_reduction: f64,
    pub mean_latency_ms: f64,
    pub mean_latency_reduction_ms: f64,
}

/// Grand means over all satisfied retrievals.
pub fn overall_summary(
    records: &[RetrievalRecord],
    per_hop_delay_ms: f64,
) -> Result<Summary, MetricsError> {
    non_empty(records)?;
    let n = records.len() as f64;
    let (mut dist, mut hops, mut lat) = (0.0, 0.0, 0.0);
    for r in records {
        dist += f64::from(r.distance_to_source);
        hops += f64::from(r.hops_to_hit);
        lat += r.latency_ms;
    }
    let (mean_distance, mean_hops, mean_latency_ms) = (dist / n, hops / n, lat / n);
    Ok(Summary {
        n: records.len() as u64,
        mean_distance,
        mean_hops,
        mean_hop_reduction: mean_distance - mean_hops,
        mean_latency_ms,
        mean_latency_reduction_ms: mean_distance * per_hop_delay_ms - mean_latency_ms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diversity {
    pub unique_chunks: usize,
    pub total_slots_used: usize,
    /// `None` when nothing is cached.
    pub redundancy_ratio: Option<f64>,
}

pub fn cache_diversity(snapshot: &CacheSnapshot) -> Diversity {
    let unique: BTreeSet<&ChunkName> = snapshot.nodes.iter().flatten().collect();
    let total: usize = snapshot.nodes.iter().map(Vec::len).sum();
    Diversity {
        unique_chunks: unique.len(),
        total_slots_used: total,
        redundancy_ratio: (!unique.is_empty()).then(|| total as f64 / unique.len() as f64),
    }
}

/// Cached chunks whose id is not congruent to the holder's label modulo `k`,
/// as (node, chunk) pairs. Labels are `node id mod k`.
pub fn label_violations(snapshot: &CacheSnapshot, k: u32) -> Vec<(NodeId, ChunkName)> {
    snapshot
        .nodes
        .iter()
        .enumerate()
        .flat_map(|(node, names)| {
            let label = node as u32 % k;
            names
                .iter()
                .filter(move |n| n.chunk_id % k != label)
                .map(move |n| (NodeId(node as u32), *n))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn rec(d: u32, h: u32, lat: f64) -> RetrievalRecord {
        RetrievalRecord {
            run_seed: 0,
            strategy: "X".into(),
            seq: 0,
            consumer: NodeId(1),
            prefix: NodeId(0),
            chunk_id: 0,
            distance_to_source: d,
            hops_to_hit: h,
            latency_ms: lat,
            hit_node: NodeId(0),
            issue_time_ms: 0.0,
            satisfy_time_ms: lat,
            retries: 0,
            aggregated: false,
        }
    }

    #[test]
    fn empty_log_errors() {
        assert_eq!(hop_reduction_by_distance(&[]), Err(MetricsError::EmptyLog));
        assert_eq!(latency_by_distance(&[]), Err(MetricsError::EmptyLog));
        assert_eq!(
            latency_reduction_by_distance(&[], 10.0),
            Err(MetricsError::EmptyLog)
        );
        assert_eq!(overall_summary(&[], 10.0), Err(MetricsError::EmptyLog));
    }

    #[test]
    fn no_cache_log_has_zero_reduction() {
        let log: Vec<_> = (1..6).map(|d| rec(d, d, 10.0 * f64::from(d))).collect();
        assert!(hop_reduction_by_distance(&log)
            .unwrap()
            .values()
            .all(|&v| v == 0.0));
        assert!(latency_reduction_by_distance(&log, 10.0)
            .unwrap()
            .values()
            .all(|&v| v == 0.0));
        let lat = latency_by_distance(&log).unwrap();
        assert_eq!(lat[&3], 30.0);
        let s = overall_summary(&log, 10.0).unwrap();
        assert_eq!(s.mean_hops, s.mean_distance);
    }

    #[test]
    fn single_record() {
        let log = [rec(4, 1, 10.0)];
        assert_eq!(hop_reduction_by_distance(&log).unwrap()[&4], 3.0);
        assert_eq!(latency_reduction_by_distance(&log, 10.0).unwrap()[&4], 30.0);
        let s = overall_summary(&log, 10.0).unwrap();
        assert_eq!(
            (s.mean_distance, s.mean_hops, s.mean_latency_ms),
            (4.0, 1.0, 10.0)
        );
        assert_eq!(s.mean_latency_reduction_ms, 30.0);
    }

    #[test]
    fn table_flags_small_buckets() {
        let mut log = vec![rec(2, 2, 20.0); 6];
        log.push(rec(3, 1, 10.0));
        let t = distance_table(&accumulate_by_distance(&log), 10.0, DEFAULT_MIN_SAMPLES);
        assert!(!t[0].low_confidence);
        assert!(t[1].low_confidence);
        assert_eq!(t[1].hop_reduction, 2.0);
    }

    #[test]
    fn diversity() {
        let empty = CacheSnapshot {
            time_ms: 0.0,
            nodes: vec![vec![], vec![]],
        };
        assert_eq!(
            cache_diversity(&empty),
            Diversity {
                unique_chunks: 0,
                total_slots_used: 0,
                redundancy_ratio: None
            }
        );
        let c = ChunkName {
            prefix: NodeId(0),
            chunk_id: 3,
        };
        let dup = CacheSnapshot {
            time_ms: 0.0,
            nodes: vec![vec![c], vec![c]],
        };
        assert_eq!(
            cache_diversity(&dup),
            Diversity {
                unique_chunks: 1,
                total_slots_used: 2,
                redundancy_ratio: Some(2.0)
            }
        );
    }

    #[test]
    fn label_check() {
        let c = |id| ChunkName {
            prefix: NodeId(0),
            chunk_id: id,
        };
        let ok = CacheSnapshot {
            time_ms: 0.0,
            nodes: vec![vec![c(0), c(4)], vec![c(5)], vec![c(2)]],
        };
        assert!(label_violations(&ok, 4).is_empty());
        let bad = CacheSnapshot {
            time_ms: 0.0,
            nodes: vec![vec![c(1)]],
        };
        assert_eq!(label_violations(&bad, 4), vec![(NodeId(0), c(1))]);
    }

    proptest! {
        #[test]
        fn aggregation_is_order_independent(
            raw in proptest::collection::vec((1u32..7, 0u32..7, 0.0f64..100.0), 1..60),
            rot in 0usize..60,
        ) {
            let log: Vec<_> = raw.iter().map(|&(d, h, l)| rec(d, h.min(d), l)).collect();
            let mut shuffled = log.clone();
            shuffled.rotate_left(rot % log.len());
            shuffled.reverse();
            let a = hop_reduction_by_distance(&log).unwrap();
            let b = hop_reduction_by_distance(&shuffled).unwrap();
            for (d, v) in &a {
                prop_assert!((v - b[d]).abs() < 1e-9);
            }
        }
    }
}
