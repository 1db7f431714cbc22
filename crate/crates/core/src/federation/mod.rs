//! Serverless model exchange: one-hop broadcast, per-node averaging, and
//! storage of models learned on orthogonal channels.

mod aggregate;
mod message;
mod registry;
mod topology;

pub use aggregate::{aggregate, aggregate_average, corrupt, AggregationRule, GlobalModel};
pub use message::{
    deserialize, serialize, ModelMessage, HEADER_LEN, MESSAGE_MAGIC, MESSAGE_VERSION,
};
pub use registry::{ChannelModelRegistry, DEFAULT_REGISTRY_CAPACITY};
pub use topology::{broadcast, exchange, Topology};
