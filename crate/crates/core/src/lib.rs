//! Cross-lingual complex word identification.
//!
//! Monolingual fastText spaces are aligned into English with orthogonal
//! Procrustes plus CSLS refinement, a from-scratch BiLSTM tags tokens as
//! complex or not, and the harness runs zero-, one- and few-shot transfer
//! experiments scored by macro-F1.

pub mod alignment;
pub mod cli;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod tagger;

pub use error::{Error, Result};
