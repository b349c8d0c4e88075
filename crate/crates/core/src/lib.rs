//! Semantic search and question answering for Bengali (and other
//! morphologically rich, low-resource languages).
//!
//! A query runs through Unicode normalization and tokenization, suffix
//! stripping recovers the root verb and grammatical profile, TF-IDF plus
//! dense meta-features form the query vector, a weighted vote over four
//! classifiers (Naive Bayes, SMO SVM, decision tree, MLP) routes the query
//! recursively down the category tree of the sentence repository, and the
//! routed leaves are searched by cosine similarity; a knowledge base backs
//! answer extraction. Cross-validation metrics cover every stage.

pub mod classifiers;
pub mod config;
pub mod engine;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod features;
pub mod morphology;
pub mod persist;
pub mod retrieval;
pub mod rng;
pub mod taxonomy;
pub mod text;

pub use config::EngineConfig;
pub use engine::Engine;
pub use error::{Error, Result};
