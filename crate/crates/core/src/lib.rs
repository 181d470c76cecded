//! Adversarial graph representation learning.
//!
//! A generator defines, for every root vertex, a distribution over the other
//! vertices through a softmax cascade along the root's BFS tree. A
//! discriminator scores vertex pairs with a sigmoid of embedding inner
//! products. The two are trained against each other and the generator's
//! embeddings are the learned representation. [`eval`] holds the downstream
//! protocols: link prediction, node classification, top-K recommendation and
//! the distance-versus-edge-probability study.

pub mod cli;
pub mod discriminator;
pub mod error;
pub mod eval;
pub mod generator;
pub mod graph;
pub mod params;
pub mod trainer;

pub use error::{Error, Result};
