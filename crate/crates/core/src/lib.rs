//! Objectives for learning full probability distributions from crowd
//! annotations, and a harness for comparing them.
//!
//! - [`divergence`]: nine objectives (five ad-hoc, four Bregman) with exact
//!   gradients in probability and logit space, plus the generic Bregman
//!   construction from a convex generator.
//! - [`metrics`]: convergence delta, macro F1, NDCG and accuracy on ranking
//!   decrease.
//! - [`data`]: soft targets from annotation counts, a synthetic crowd, and a
//!   plain-text dataset format.
//! - [`trainer`]: a from-scratch MLP with Glorot init and Adam.
//! - [`bench`]: the loss-comparison sweep, its reports, and a self-check suite.

pub mod bench;
pub mod data;
pub mod divergence;
pub mod error;
pub mod metrics;
pub mod simplex;
pub mod trainer;

pub use error::{Error, Result};
pub use simplex::{softmax, Logits, ProbVector};
