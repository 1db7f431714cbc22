//! Peer-to-peer federated learning of wireless channel availability.
//!
//! Every node senses a shared channel, trains a small two-layer LSTM to
//! predict the next 20 µs slot, broadcasts its parameters to one-hop
//! neighbors, and averages what it receives into its own global model. No
//! parameter server is involved.
//!
//! The pipeline, module by module:
//!
//! - [`traffic`]: Poisson packet arrivals and continuous busy intervals.
//! - [`sensing`]: slot rasterization, one-hot datasets, trace files.
//! - [`neuralnet`]: the LSTM, its gradients, and SGD.
//! - [`federation`]: the model message codec, broadcast, and aggregation.
//! - [`scenario`]: builtin topologies and the end-to-end runner.
//! - [`cli`]: the `fedsense` command-line driver.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod cli;
pub mod error;
pub mod federation;
pub mod neuralnet;
pub mod scenario;
pub mod sensing;
pub mod traffic;

pub use error::{Error, Result};
