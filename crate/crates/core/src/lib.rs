//! Robust unsupervised graph embedding guided by structural entropy.
//!
//! A graph autoencoder is run on a learned replacement adjacency `A'`
//! instead of the observed one. `A'` and a soft partition `Y` are optimized
//! jointly so that the partition structural information of `A'` under `Y`
//! is low and the raw features are well separated by `Y` (Davies-Bouldin),
//! while the embeddings still reconstruct the observed graph.

pub mod cli;
pub mod entropy;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod model;
pub mod ndmath;
pub mod pipeline;

pub use error::{Error, Result};
