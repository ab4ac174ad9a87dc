//! Inductive GNN user embeddings trained with an unsupervised
//! walk-proximity loss.

pub mod model;
pub mod partition;
pub mod tape;

pub use model::{
    gcn_normalize, mean_aggregate, train_gnn, FeatureMode, GnnModel, GnnParams, Layer,
    NodeFeatures, Propagation, StepPlan, Variant,
};
pub use partition::partition_graph;
pub use tape::{Matrix, SgSample, SparseMatrix};
