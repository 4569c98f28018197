//! Value types shared by the whole simulator: node identifiers, chunk names,
//! packets and caching strategies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of chunks each producer serves unless configured otherwise.
pub const DEFAULT_CHUNK_COUNT: u32 = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("chunk id {id} out of range (chunk count is {chunk_count})")]
    InvalidChunkId { id: u32, chunk_count: u32 },
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("invalid parameter for {strategy}: {reason}")]
    InvalidParameter { strategy: String, reason: String },
}

/// Dense node identifier, `0..N` for an `N`-node topology.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

/// A single content chunk: the producer's prefix plus a chunk index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChunkName {
    pub prefix: NodeId,
    pub chunk_id: u32,
}

impl fmt::Display for ChunkName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "/{}/{}", self.prefix, self.chunk_id)
    }
}

pub fn make_chunk_name(prefix: NodeId, id: u32, chunk_count: u32) -> Result<ChunkName, ModelError> {
    if id >= chunk_count {
        return Err(ModelError::InvalidChunkId { id, chunk_count });
    }
    Ok(ChunkName {
        prefix,
        chunk_id: id,
    })
}

/// Request packet.
///
/// `tsi` is the time-since-inception hop counter read by the ProbCache
/// family. `hops` is simulator bookkeeping: the number of links the Interest
/// has crossed, maintained for every strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interest {
    pub name: ChunkName,
    pub tsi: u32,
    pub origin: NodeId,
    pub seq: u64,
    pub hops: u32,
}

pub fn new_interest(name: ChunkName, origin: NodeId, seq: u64) -> Interest {
    Interest {
        name,
        tsi: 1,
        origin,
        seq,
        hops: 0,
    }
}

/// Response packet. Payloads are not modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Data {
    pub name: ChunkName,
    /// Hops since the packet was created at the satisfying node, starting at 1.
    pub tsb: u32,
    /// Path length copied from the satisfied Interest.
    pub tsi: u32,
    /// Remaining hops until the next caching point (Intervals only).
    pub interval: u32,
    pub hit_node: NodeId,
    /// Links crossed since the hit node.
    pub hops: u32,
}

/// Caching decision strategy together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Strategy {
    NoCache,
    /// Cache everything everywhere.
    Cee,
    /// Leave copy down.
    Lcd,
    /// Move copy down.
    Mcd,
    Prob {
        p: f64,
    },
    ProbCache,
    ProbCacheInv,
    Labels {
        k: u32,
    },
    Intervals {
        i: u32,
    },
}

pub const DEFAULT_PROB: f64 = 0.5;
pub const DEFAULT_LABELS_K: u32 = 4;
pub const DEFAULT_INTERVAL: u32 = 2;

impl Strategy {
    pub fn validate(&self) -> Result<(), ModelError> {
        match *self {
            Strategy::Prob { p } if !(0.0..=1.0).contains(&p) => {
                Err(ModelError::InvalidParameter {
                    strategy: "Prob".into(),
                    reason: format!("p = {p} is not in [0, 1]"),
                })
            }
            Strategy::Labels { k: 0 } => Err(ModelError::InvalidParameter {
                strategy: "Labels".into(),
                reason: "k must be at least 1".into(),
            }),
            _ => Ok(()),
        }
    }

    /// Base name without parameters.
    pub fn kind(&self) -> &'static str {
        match self {
            Strategy::NoCache => "NoCache",
            Strategy::Cee => "CEE",
            Strategy::Lcd => "LCD",
            Strategy::Mcd => "MCD",
            Strategy::Prob { .. } => "Prob",
            Strategy::ProbCache => "ProbCache",
            Strategy::ProbCacheInv => "ProbCache-Inv",
            Strategy::Labels { .. } => "Labels",
            Strategy::Intervals { .. } => "Intervals",
        }
    }

    /// Every strategy evaluated by the experiments, with default parameters.
    pub fn all_default() -> Vec<Strategy> {
        vec![
            Strategy::NoCache,
            Strategy::Cee,
            Strategy::Lcd,
            Strategy::Mcd,
            Strategy::Prob { p: DEFAULT_PROB },
            Strategy::ProbCache,
            Strategy::ProbCacheInv,
            Strategy::Labels {
                k: DEFAULT_LABELS_K,
            },
            Strategy::Intervals {
                i: DEFAULT_INTERVAL,
            },
        ]
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Prob { p } => write!(f, "Prob({p})"),
            Strategy::Labels { k } => write!(f, "Labels({k})"),
            Strategy::Intervals { i } => write!(f, "Intervals({i})"),
            other => f.write_str(other.kind()),
        }
    }
}

impl FromStr for Strategy {
    type Err = ModelError;

    /// Accepts `CEE`, `LCD`, `Prob(0.3)`, `Labels(4)`, `Intervals`, ... (case-insensitive).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (base, arg) = match s.find('(') {
            Some(open) => {
                let Some(inner) = s[open + 1..].strip_suffix(')') else {
                    return Err(ModelError::UnknownStrategy(s.to_string()));
                };
                (&s[..open], Some(inner.trim()))
            }
            None => (s, None),
        };
        let bad = |reason: String| ModelError::InvalidParameter {
            strategy: base.to_string(),
            reason,
        };
        let no_arg = |st: Strategy| match arg {
            None => Ok(st),
            Some(a) => Err(bad(format!("takes no parameter, got `{a}`"))),
        };
        let strategy = match base.trim().to_ascii_lowercase().as_str() {
            "nocache" | "none" => no_arg(Strategy::NoCache)?,
            "cee" => no_arg(Strategy::Cee)?,
            "lcd" => no_arg(Strategy::Lcd)?,
            "mcd" => no_arg(Strategy::Mcd)?,
            "probcache" => no_arg(Strategy::ProbCache)?,
            "probcache-inv" | "probcacheinv" | "probcache_inv" => no_arg(Strategy::ProbCacheInv)?,
            "prob" => Strategy::Prob {
                p: match arg {
                    Some(a) => a
                        .parse()
                        .map_err(|_| bad(format!("`{a}` is not a number")))?,
                    None => DEFAULT_PROB,
                },
            },
            "labels" => Strategy::Labels {
                k: match arg {
                    Some(a) => a
                        .parse()
                        .map_err(|_| bad(format!("`{a}` is not an integer")))?,
                    None => DEFAULT_LABELS_K,
                },
            },
            "intervals" => Strategy::Intervals {
                i: match arg {
                    Some(a) => a
                        .parse()
                        .map_err(|_| bad(format!("`{a}` is not an integer")))?,
                    None => DEFAULT_INTERVAL,
                },
            },
            _ => return Err(ModelError::UnknownStrategy(s.to_string())),
        };
        strategy.validate()?;
        Ok(strategy)
    }
}

impl TryFrom<String> for Strategy {
    type Error = ModelError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> Self {
        s.to_string()
    }
}
