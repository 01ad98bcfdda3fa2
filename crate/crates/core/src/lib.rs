//! Change detection against a pre-built view-sequence map when the query
//! viewpoint is globally unknown.
//!
//! The pipeline retrieves the top-R reference frames for a query with a
//! bag-of-words index and the asymmetric NBNN distance ([`localization`]),
//! pools the binarized features of those frames, and scores every query
//! feature by its nearest-neighbor appearance distance, doubled when the
//! implied keypoint motion is not explained by the learned motion prior
//! ([`motion`], [`change`]). [`evaluation`] implements the global rank
//! metric and the time-exclusion test protocol; [`synthworld`] generates
//! deterministic worlds with ground truth.

mod binio;
pub mod change;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod feature;
pub mod localization;
pub mod motion;
pub mod pipeline;
pub mod projection;
pub mod registry;
pub mod rng;
pub mod store;
pub mod synthworld;
pub mod vocabulary;

pub use error::{Error, Result};
