//! Batch experiments: spec files, seeded strategy sweeps, CSV artifacts and
//! strategy comparison.
//!
//! A spec file is TOML:
//!
//! ```toml
//! name = "core"
//! strategies = ["NoCache", "CEE", "LCD", "Labels(4)"]
//! base_seed = 0
//! runs = 30            # or: seeds = [1, 2, 3]
//! output_dir = "out"   # optional
//!
//! [config]             # RunConfig template; `strategy` and `seed` are set per run
//! cache_capacity = 5
//! topology = { kind = "core", branching_core = 4, branching_leaf = 3, consumers_per_leaf = 1 }
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EngineError, RunConfig, RunOutput, Simulation};
use crate::metrics::{
    accumulate_by_distance, distance_table, Accumulator, CacheSnapshot, MetricsLog,
    DEFAULT_MIN_SAMPLES,
};
use crate::model::Strategy;

pub const RETRIEVALS_CSV: &str = "retrievals.csv";
pub const BY_DISTANCE_CSV: &str = "by_distance.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const SNAPSHOTS_CSV: &str = "snapshots.csv";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment spec: {0}")]
    Spec(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{0}")]
    Compare(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "default_name")]
    pub name: String,
    pub strategies: Vec<Strategy>,
    /// Explicit seed list; takes precedence over `base_seed`/`runs`.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub runs: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Distances with fewer samples are flagged low-confidence.
    #[serde(default = "default_min_samples")]
    pub min_samples: u64,
    #[serde(default)]
    pub config: RunConfig,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_min_samples() -> u64 {
    DEFAULT_MIN_SAMPLES
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| ExperimentError::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text).map_err(|e| match e {
            ExperimentError::Spec(m) => ExperimentError::Spec(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.strategies.is_empty() {
            return Err(ExperimentError::Spec(
                "`strategies` must list at least one strategy".into(),
            ));
        }
        for s in &self.strategies {
            s.validate()
                .map_err(|e| ExperimentError::Spec(format!("`strategies`: {e}")))?;
        }
        if self.seeds.as_ref().is_some_and(Vec::is_empty) || self.runs == Some(0) {
            return Err(ExperimentError::Spec(
                "at least one seed is required".into(),
            ));
        }
        self.config
            .validate()
            .map_err(|e| ExperimentError::Spec(format!("`config`: {e}")))
    }

    /// Seeds in ascending order, duplicates removed.
    pub fn seed_list(&self) -> Vec<u64> {
        let mut seeds = match &self.seeds {
            Some(s) => s.clone(),
            None => {
                let runs = self.runs.unwrap_or(1);
                (0..runs).map(|i| self.base_seed.wrapping_add(i)).collect()
            }
        };
        seeds.sort_unstable();
        seeds.dedup();
        seeds
    }

    pub fn config_for(&self, strategy: Strategy, seed: u64) -> RunConfig {
        RunConfig {
            strategy,
            seed,
            ..self.config.clone()
        }
    }
}

/// Outcome of one (strategy, seed) run.
#[derive(Debug)]
pub struct RunResult {
    pub strategy: Strategy,
    pub seed: u64,
    pub outcome: Result<RunOutput, String>,
}

impl RunResult {
    pub fn log(&self) -> Option<&MetricsLog> {
        self.outcome.as_ref().ok().map(|o| &o.log)
    }
}

#[derive(Debug)]
pub struct BatchResult {
    pub spec: ExperimentSpec,
    /// Ordered by strategy (spec order), then seed.
    pub runs: Vec<RunResult>,
}

/// Runs every (strategy, seed) pair. A failing run is recorded and the batch
/// continues.
pub fn run_batch(spec: &ExperimentSpec) -> BatchResult {
    let seeds = spec.seed_list();
    let jobs: Vec<(Strategy, u64)> = spec
        .strategies
        .iter()
        .flat_map(|&s| seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let exec = |&(strategy, seed): &(Strategy, u64)| RunResult {
        strategy,
        seed,
        outcome: Simulation::new(spec.config_for(strategy, seed))
            .and_then(Simulation::run)
            .map_err(|e| e.to_string()),
    };
    #[cfg(feature = "parallel")]
    let runs = {
        use rayon::prelude::*;
        jobs.par_iter().map(exec).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let runs = jobs.iter().map(exec).collect();
    BatchResult {
        spec: spec.clone(),
        runs,
    }
}

/// Seed-level summary row of summary.csv.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub strategy: String,
    pub seed: u64,
    pub n: u64,
    pub failures: u64,
    pub failure_rate: Option<f64>,
    pub mean_distance: Option<f64>,
    pub mean_hops: Option<f64>,
    pub hop_reduction: Option<f64>,
    pub mean_latency_ms: Option<f64>,
    pub latency_reduction_ms: Option<f64>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct DistanceRow {
    strategy: String,
    distance: u32,
    n: u64,
    mean_hops_to_hit: f64,
    hop_reduction: f64,
    mean_latency_ms: f64,
    latency_reduction_ms: f64,
    low_confidence: bool,
}

#[derive(Debug, Serialize)]
struct SnapshotRow<'a> {
    strategy: &'a str,
    seed: u64,
    time_ms: f64,
    node: u32,
    prefix: u32,
    chunk_id: u32,
}

/// Pooled per-strategy figures over all seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyTotals {
    pub strategy: Strategy,
    pub runs: usize,
    pub failed_runs: usize,
    pub by_distance: BTreeMap<u32, Accumulator>,
    pub failures: u64,
}

impl StrategyTotals {
    pub fn n(&self) -> u64 {
        self.by_distance.values().map(|a| a.n).sum()
    }

    fn pooled(&self) -> (f64, f64, f64) {
        let n = self.n() as f64;
        let dist: f64 = self
            .by_distance
            .iter()
            .map(|(&d, a)| f64::from(d) * a.n as f64)
            .sum();
        let hops: f64 = self.by_distance.values().map(|a| a.hops_to_hit).sum();
        let lat: f64 = self.by_distance.values().map(|a| a.latency_ms).sum();
        (dist / n, hops / n, lat / n)
    }

    pub fn mean_hops(&self) -> f64 {
        self.pooled().1
    }

    pub fn hop_reduction(&self) -> f64 {
        let (d, h, _) = self.pooled();
        d - h
    }

    pub fn mean_latency_ms(&self) -> f64 {
        self.pooled().2
    }

    pub fn latency_reduction_ms(&self, per_hop_delay_ms: f64) -> f64 {
        let (d, _, l) = self.pooled();
        d * per_hop_delay_ms - l
    }

    pub fn failure_rate(&self) -> f64 {
        let total = self.n() + self.failures;
        if total == 0 {
            0.0
        } else {
            self.failures as f64 / total as f64
        }
    }
}

impl BatchResult {
    /// Per-seed aggregates merged per strategy.
    pub fn totals(&self) -> Vec<StrategyTotals> {
        self.spec
            .strategies
            .iter()
            .map(|&strategy| {
                let mut t = StrategyTotals {
                    strategy,
                    runs: 0,
                    failed_runs: 0,
                    by_distance: BTreeMap::new(),
                    failures: 0,
                };
                for r in self.runs.iter().filter(|r| r.strategy == strategy) {
                    t.runs += 1;
                    let Some(log) = r.log() else {
                        t.failed_runs += 1;
                        continue;
                    };
                    t.failures += log.failures.len() as u64;
                    for (d, acc) in accumulate_by_distance(&log.records) {
                        t.by_distance.entry(d).or_default().merge(&acc);
                    }
                }
                t
            })
            .collect()
    }

    pub fn summary_rows(&self) -> Vec<SummaryRow> {
        let per_hop = self.spec.config.per_hop_delay_ms;
        self.runs
            .iter()
            .map(|r| {
                let mut row = SummaryRow {
                    strategy: r.strategy.to_string(),
                    seed: r.seed,
                    n: 0,
                    failures: 0,
                    failure_rate: None,
                    mean_distance: None,
                    mean_hops: None,
                    hop_reduction: None,
                    mean_latency_ms: None,
                    latency_reduction_ms: None,
                    error: String::new(),
                };
                match &r.outcome {
                    Err(e) => row.error = e.clone(),
                    Ok(out) => {
                        row.n = out.log.records.len() as u64;
                        row.failures = out.log.failures.len() as u64;
                        row.failure_rate = Some(out.log.failure_rate());
                        if let Ok(s) = crate::metrics::overall_summary(&out.log.records, per_hop) {
                            row.mean_distance = Some(s.mean_distance);
                            row.mean_hops = Some(s.mean_hops);
                            row.hop_reduction = Some(s.mean_hop_reduction);
                            row.mean_latency_ms = Some(s.mean_latency_ms);
                            row.latency_reduction_ms = Some(s.mean_latency_reduction_ms);
                        }
                    }
                }
                row
            })
            .collect()
    }

    pub fn write_csvs(&self, dir: impl AsRef<Path>) -> Result<(), ExperimentError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        // headers are written by hand so empty tables still get one
        let writer = |name: &str| -> Result<csv::Writer<fs::File>, ExperimentError> {
            let path = dir.join(name);
            let file = fs::File::create(&path).map_err(io_err(&path))?;
            Ok(csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(file))
        };

        let mut w = writer(RETRIEVALS_CSV)?;
        w.write_record(RETRIEVAL_HEADER)?;
        for r in &self.runs {
            for rec in r.log().map(|l| l.records.as_slice()).unwrap_or_default() {
                w.serialize(rec)?;
            }
        }
        w.flush().map_err(io_err(dir))?;

        let per_hop = self.spec.config.per_hop_delay_ms;
        let mut w = writer(BY_DISTANCE_CSV)?;
        w.write_record(DISTANCE_HEADER)?;
        for t in self.totals() {
            for s in distance_table(&t.by_distance, per_hop, self.spec.min_samples) {
                w.serialize(DistanceRow {
                    strategy: t.strategy.to_string(),
                    distance: s.distance,
                    n: s.n,
                    mean_hops_to_hit: s.mean_hops_to_hit,
                    hop_reduction: s.hop_reduction,
                    mean_latency_ms: s.mean_latency_ms,
                    latency_reduction_ms: s.latency_reduction_ms,
                    low_confidence: s.low_confidence,
                })?;
            }
        }
        w.flush().map_err(io_err(dir))?;

        let mut w = writer(SUMMARY_CSV)?;
        w.write_record(SUMMARY_HEADER)?;
        for row in self.summary_rows() {
            w.serialize(row)?;
        }
        w.flush().map_err(io_err(dir))?;

        let mut w = writer(SNAPSHOTS_CSV)?;
        w.write_record(["strategy", "seed", "time_ms", "node", "prefix", "chunk_id"])?;
        for r in &self.runs {
            let label = r.strategy.to_string();
            let snaps: &[CacheSnapshot] = r
                .outcome
                .as_ref()
                .map(|o| o.snapshots.as_slice())
                .unwrap_or_default();
            for snap in snaps {
                for (node, names) in snap.nodes.iter().enumerate() {
                    for name in names {
                        w.serialize(SnapshotRow {
                            strategy: &label,
                            seed: r.seed,
                            time_ms: snap.time_ms,
                            node: node as u32,
                            prefix: name.prefix.0,
                            chunk_id: name.chunk_id,
                        })?;
                    }
                }
            }
        }
        w.flush().map_err(io_err(dir))?;
        Ok(())
    }

    /// Plain-text table of pooled per-strategy means.
    pub fn summary_table(&self) -> String {
        let per_hop = self.spec.config.per_hop_delay_ms;
        let mut out = format!(
            "{:<16} {:>5} {:>8} {:>10} {:>10} {:>12} {:>12} {:>8}\n",
            "strategy", "runs", "n", "mean_hops", "hop_red", "latency_ms", "lat_red_ms", "fail%"
        );
        for t in self.totals() {
            if t.n() == 0 {
                out += &format!(
                    "{:<16} {:>5} {:>8}   (no satisfied retrievals)\n",
                    t.strategy.to_string(),
                    t.runs,
                    0
                );
                continue;
            }
            out += &format!(
                "{:<16} {:>5} {:>8} {:>10.4} {:>10.4} {:>12.3} {:>12.3} {:>8.2}\n",
                t.strategy.to_string(),
                t.runs,
                t.n(),
                t.mean_hops(),
                t.hop_reduction(),
                t.mean_latency_ms(),
                t.latency_reduction_ms(per_hop),
                100.0 * t.failure_rate(),
            );
        }
        let failed: Vec<String> = self
            .runs
            .iter()
            .filter_map(|r| {
                r.outcome
                    .as_ref()
                    .err()
                    .map(|e| format!("  {} seed {}: {e}", r.strategy, r.seed))
            })
            .collect();
        if !failed.is_empty() {
            out += &format!("{} run(s) failed:\n{}\n", failed.len(), failed.join("\n"));
        }
        out
    }
}

const RETRIEVAL_HEADER: [&str; 14] = [
    "run_seed",
    "strategy",
    "seq",
    "consumer",
    "prefix",
    "chunk_id",
    "distance_to_source",
    "hops_to_hit",
    "latency_ms",
    "hit_node",
    "issue_time_ms",
    "satisfy_time_ms",
    "retries",
    "aggregated",
];

const SUMMARY_HEADER: [&str; 11] = [
    "strategy",
    "seed",
    "n",
    "failures",
    "failure_rate",
    "mean_distance",
    "mean_hops",
    "hop_reduction",
    "mean_latency_ms",
    "latency_reduction_ms",
    "error",
];

const DISTANCE_HEADER: [&str; 8] = [
    "strategy",
    "distance",
    "n",
    "mean_hops_to_hit",
    "hop_reduction",
    "mean_latency_ms",
    "latency_reduction_ms",
    "low_confidence",
];

/// Result of comparing two strategies on one summary.csv metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub metric: String,
    pub a: String,
    pub b: String,
    /// Seeds present with a value for both strategies.
    pub seeds: Vec<u64>,
    pub mean_a: f64,
    pub mean_b: f64,
    pub a_less: usize,
    pub equal: usize,
    pub a_greater: usize,
}

impl Comparison {
    pub fn difference(&self) -> f64 {
        self.mean_a - self.mean_b
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.seeds.len();
        writeln!(f, "metric: {} over {n} matched seed(s)", self.metric)?;
        writeln!(f, "  {:<16} mean {:.6}", self.a, self.mean_a)?;
        writeln!(f, "  {:<16} mean {:.6}", self.b, self.mean_b)?;
        writeln!(
            f,
            "  difference ({} - {}): {:+.6}",
            self.a,
            self.b,
            self.difference()
        )?;
        let sign = match self.difference().partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Less) => "<",
            Some(std::cmp::Ordering::Greater) => ">",
            _ => "=",
        };
        writeln!(f, "  overall: {} {sign} {}", self.a, self.b)?;
        write!(
            f,
            "  per seed: {} < in {}/{n}, = in {}/{n}, > in {}/{n}",
            self.a, self.a_less, self.equal, self.a_greater
        )
    }
}

const NON_METRIC_COLUMNS: [&str; 3] = ["strategy", "seed", "error"];

/// Compares `a` against `b` on `metric` over the seeds both have values for.
/// Strategy names are matched after parsing, so `lcd` finds `LCD`.
pub fn compare(
    summary_csv: impl AsRef<Path>,
    a: &str,
    b: &str,
    metric: &str,
) -> Result<Comparison, ExperimentError> {
    let path = summary_csv.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    compare_text(&text, a, b, metric)
}

pub fn compare_text(
    text: &str,
    a: &str,
    b: &str,
    metric: &str,
) -> Result<Comparison, ExperimentError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(strategy_col), Some(seed_col)) = (col("strategy"), col("seed")) else {
        return Err(ExperimentError::Compare(
            "summary file needs `strategy` and `seed` columns".into(),
        ));
    };
    let metric_col = col(metric).filter(|_| !NON_METRIC_COLUMNS.contains(&metric));
    let Some(metric_col) = metric_col else {
        let available: Vec<&str> = headers
            .iter()
            .filter(|h| !NON_METRIC_COLUMNS.contains(h))
            .collect();
        return Err(ExperimentError::Compare(format!(
            "metric `{metric}` not found; available metrics: {}",
            available.join(", ")
        )));
    };
    let canon = |s: &str| {
        s.parse::<Strategy>()
            .map(|s| s.to_string())
            .unwrap_or_else(|_| s.to_string())
    };
    let (ca, cb) = (canon(a), canon(b));

    let mut values: BTreeMap<(String, u64), f64> = BTreeMap::new();
    let mut present: Vec<String> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let s = canon(&rec[strategy_col]);
        if !present.contains(&s) {
            present.push(s.clone());
        }
        let seed: u64 = rec[seed_col]
            .parse()
            .map_err(|_| ExperimentError::Compare(format!("bad seed `{}`", &rec[seed_col])))?;
        if let Ok(v) = rec[metric_col].parse::<f64>() {
            values.insert((s, seed), v);
        }
    }
    for s in [&ca, &cb] {
        if !present.contains(s) {
            return Err(ExperimentError::Compare(format!(
                "strategy `{s}` not in summary; present: {}",
                present.join(", ")
            )));
        }
    }
    let mut cmp = Comparison {
        metric: metric.to_string(),
        a: ca.clone(),
        b: cb.clone(),
        seeds: Vec::new(),
        mean_a: 0.0,
        mean_b: 0.0,
        a_less: 0,
        equal: 0,
        a_greater: 0,
    };
    let seeds_a: Vec<u64> = values
        .keys()
        .filter(|(s, _)| *s == ca)
        .map(|k| k.1)
        .collect();
    for seed in seeds_a {
        let (Some(&va), Some(&vb)) = (
            values.get(&(ca.clone(), seed)),
            values.get(&(cb.clone(), seed)),
        ) else {
            continue;
        };
        cmp.seeds.push(seed);
        cmp.mean_a += va;
        cmp.mean_b += vb;
        match va.partial_cmp(&vb) {
            Some(std::cmp::Ordering::Less) => cmp.a_less += 1,
            Some(std::cmp::Ordering::Greater) => cmp.a_greater += 1,
            _ => cmp.equal += 1,
        }
    }
    if cmp.seeds.is_empty() {
        return Err(ExperimentError::Compare(format!(
            "no seed has a `{metric}` value for both {ca} and {cb}"
        )));
    }
    let n = cmp.seeds.len() as f64;
    cmp.mean_a /= n;
    cmp.mean_b /= n;
    Ok(cmp)
}

/// Edge list followed by the FIB dump for one configuration.
pub fn topo_dump(config: &RunConfig) -> Result<String, ExperimentError> {
    let sim = Simulation::new(config.clone())?;
    let mut out = String::from("# edges: u v\n");
    out += &sim.topology().to_edge_list();
    if !out.ends_with('\n') {
        out.push('\n');
    }
    out += &sim.routing().dump();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::TopologySpec;

    const SMALL: &str = r#"
name = "small"
strategies = ["NoCache", "CEE", "LCD"]
base_seed = 3
runs = 2

[config]
cache_capacity = 5
snapshot_period_ms = 5000.0
topology = { kind = "core", branching_core = 2, branching_leaf = 2, consumers_per_leaf = 1 }
workload = { kind = "paper", rounds = 3, window_ms = 1000.0 }
"#;

    #[test]
    fn parses_spec() {
        let spec = ExperimentSpec::parse(SMALL).unwrap();
        assert_eq!(spec.strategies.len(), 3);
        assert_eq!(spec.seed_list(), vec![3, 4]);
        assert!(matches!(
            spec.config.topology,
            TopologySpec::Core {
                branching_core: 2,
                ..
            }
        ));
        assert_eq!(spec.min_samples, DEFAULT_MIN_SAMPLES);
    }

    #[test]
    fn explicit_seeds_win() {
        let spec =
            ExperimentSpec::parse("strategies = [\"CEE\"]\nseeds = [9, 2, 9]\nruns = 5\n").unwrap();
        assert_eq!(spec.seed_list(), vec![2, 9]);
    }

    #[test]
    fn unknown_strategy_names_field_and_line() {
        let err = ExperimentSpec::parse("name = \"x\"\nstrategies = [\"CEE\", \"FOO\"]\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("FOO"), "{err}");
        assert!(err.contains("strategies"), "{err}");
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn rejects_empty_and_unknown_fields() {
        assert!(ExperimentSpec::parse("strategies = []\n").is_err());
        assert!(ExperimentSpec::parse("strategies = [\"CEE\"]\nruns = 0\n").is_err());
        let err = ExperimentSpec::parse("strategies = [\"CEE\"]\n[config]\ncache_size = 3\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("cache_size"), "{err}");
        let err = ExperimentSpec::parse("strategies = [\"CEE\"]\n[config]\nloss = 2.0\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("loss"), "{err}");
    }

    #[test]
    fn batch_shape_and_compare() {
        let spec = ExperimentSpec::parse(SMALL).unwrap();
        let batch = run_batch(&spec);
        assert_eq!(batch.runs.len(), 6);
        assert!(batch.runs.iter().all(|r| r.outcome.is_ok()));
        let order: Vec<(String, u64)> = batch
            .runs
            .iter()
            .map(|r| (r.strategy.to_string(), r.seed))
            .collect();
        assert_eq!(order[0], ("NoCache".into(), 3));
        assert_eq!(order[5], ("LCD".into(), 4));

        let dir = tempfile::tempdir().unwrap();
        batch.write_csvs(dir.path()).unwrap();
        for f in [RETRIEVALS_CSV, BY_DISTANCE_CSV, SUMMARY_CSV, SNAPSHOTS_CSV] {
            let text = fs::read_to_string(dir.path().join(f)).unwrap();
            let header = text.lines().next().unwrap();
            assert_eq!(text.lines().filter(|l| *l == header).count(), 1, "{f}");
            assert!(text.lines().count() > 1, "{f}");
        }
        let summary = dir.path().join(SUMMARY_CSV);
        let same = compare(&summary, "CEE", "CEE", "mean_hops").unwrap();
        assert_eq!(same.difference(), 0.0);
        assert_eq!(same.equal, 2);
        let nc = compare(&summary, "nocache", "cee", "mean_hops").unwrap();
        assert!(nc.mean_a >= nc.mean_b);
        let err = compare(&summary, "CEE", "Labels", "mean_hops")
            .unwrap_err()
            .to_string();
        assert!(err.contains("Labels"), "{err}");
        let err = compare(&summary, "CEE", "LCD", "bogus")
            .unwrap_err()
            .to_string();
        assert!(
            err.contains("mean_hops") && err.contains("failure_rate"),
            "{err}"
        );

        let table = batch.summary_table();
        assert!(table.contains("NoCache") && table.contains("LCD"));
    }

    #[test]
    fn failing_run_does_not_stop_batch() {
        let mut spec = ExperimentSpec::parse("strategies = [\"CEE\"]\nruns = 1\n").unwrap();
        spec.config.topology = TopologySpec::File {
            path: "/nonexistent/topology.txt".into(),
        };
        let batch = run_batch(&spec);
        assert_eq!(batch.runs.len(), 1);
        assert!(batch.runs[0].outcome.is_err());
        let rows = batch.summary_rows();
        assert!(!rows[0].error.is_empty());
        assert!(batch.summary_table().contains("failed"));
    }

    #[test]
    fn topo_dump_lists_edges_and_fibs() {
        let cfg = RunConfig {
            topology: TopologySpec::Line { n: 3 },
            ..RunConfig::default()
        };
        let text = topo_dump(&cfg).unwrap();
        assert!(text.contains("0 1"));
        assert!(text.contains("1 2"));
        assert!(text.lines().any(|l| l.starts_with("# node")));
    }
}
