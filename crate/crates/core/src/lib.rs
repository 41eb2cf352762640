//! Text segmentation with a trigram prior, a trigger-pair exponential
//! language model, and a greedily induced exponential boundary model.

pub mod corpus;
pub mod error;
pub mod features;
pub mod induction;
pub mod metric;
mod numeric;
pub mod pipeline;
pub mod relevance;
pub mod segmenter;
pub mod synth;
pub mod trigger;
pub mod trigram;

pub use error::{Error, Result};
