//! Fake-news detection from the social graph of the users who share
//! articles.
//!
//! The crate covers ingestion of follower graphs and article engagement,
//! node embeddings (DeepWalk and two GNN encoders), article classifiers,
//! a text baseline, evaluation, embedding analysis and a synthetic data
//! generator.

pub mod analysis;
pub mod dataset;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod gnn;
pub mod graph;
pub mod newsmodel;
pub mod pipeline;
pub mod rng;
pub mod skipgram;
pub mod synth;
pub mod text;
pub mod walks;

pub use dataset::{ArticleRecord, Dataset, Label, NewsArticle, Network};
pub use embedding::EmbeddingMatrix;
pub use error::{Error, Result};
pub use graph::{DirectedGraph, UserTable};
