//! Deterministic discrete-event simulation of in-network caching strategies
//! for information-centric IoT networks.
//!
//! The crate is organised bottom-up: [`model`] holds packets and names,
//! [`node`] the per-node forwarding tables, [`strategies`] the caching
//! decisions, [`topology`] and [`routing`] the network, [`engine`] the event
//! loop, [`metrics`] the evaluation, and [`experiment`] the batch front end
//! used by the `icnsim` binary.

pub mod engine;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod node;
pub mod routing;
pub mod strategies;
pub mod topology;

pub use engine::{run, RunConfig, RunOutput, Simulation};
pub use model::{ChunkName, Data, Interest, NodeId, Strategy};
