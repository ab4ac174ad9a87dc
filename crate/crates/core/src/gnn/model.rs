//! Two GNN encoders sharing one parameter layout and one unsupervised
//! walk-proximity objective:
//!
//! * `SageMean`: each layer computes `act(H·W_self + mean_sampled(H)·W_nbr + b)`.
//! * `ClusterGcn`: each layer computes `act(Â·H·W + b)` with `Â` built on the
//!   subgraph of the node's partition.
//!
//! Hidden layers use ReLU, the last layer is linear, and output rows are
//! L2-normalised.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::partition::{partition_graph, partition_members};
use super::tape::{Matrix, SgSample, SparseMatrix, Tape, Var};
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::rng::{rng_from, stream, Rng};
use crate::skipgram::{NegativeSampler, TrainReport};
use crate::walks::WalkCorpus;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    SageMean,
    ClusterGcn,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sage" | "sage_mean" => Ok(Variant::SageMean),
            "cgcn" | "cluster_gcn" => Ok(Variant::ClusterGcn),
            other => Err(Error::invalid(format!("unknown GNN variant `{other}`"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::SageMean => "sage_mean",
            Variant::ClusterGcn => "cluster_gcn",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMode {
    /// A trainable vector per node, initialised uniform in `[-0.1, 0.1]`.
    TrainableLookup,
    /// Fixed one-hot bucket of `log2(degree + 1)`; available for unseen
    /// nodes.
    DegreeBuckets,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeFeatures {
    pub mode: FeatureMode,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnParams {
    pub layers: usize,
    pub hidden_dim: usize,
    pub out_dim: usize,
    pub epochs: usize,
    /// Neighbours sampled per node, one entry per layer (mean aggregator).
    pub sample_sizes: Vec<usize>,
    /// Cluster count (cluster GCN).
    pub n_partitions: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub window: usize,
    pub negatives: usize,
    /// Positive pairs per optimisation step.
    pub batch_size: usize,
    pub features: NodeFeatures,
}

impl GnnParams {
    pub fn sage() -> Self {
        GnnParams {
            layers: 2,
            hidden_dim: 16,
            out_dim: 100,
            epochs: 30,
            sample_sizes: vec![25, 10],
            n_partitions: 1,
            seed: 0,
            learning_rate: 0.01,
            window: 10,
            negatives: 5,
            batch_size: 256,
            features: NodeFeatures {
                mode: FeatureMode::TrainableLookup,
                dim: 16,
            },
        }
    }

    pub fn cluster_gcn() -> Self {
        GnnParams {
            epochs: 1000,
            n_partitions: 10,
            ..Self::sage()
        }
    }

    pub fn for_variant(variant: Variant) -> Self {
        match variant {
            Variant::SageMean => Self::sage(),
            Variant::ClusterGcn => Self::cluster_gcn(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.hidden_dim == 0 || self.out_dim == 0 || self.features.dim == 0 {
            return Err(Error::invalid("GNN dimensions must be >= 1"));
        }
        if self.window == 0 || self.negatives == 0 || self.batch_size == 0 {
            return Err(Error::invalid("window, negatives and batch size must be >= 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        Ok(())
    }

    fn sample_size(&self, layer: usize) -> usize {
        self.sample_sizes
            .get(layer)
            .or(self.sample_sizes.last())
            .copied()
            .unwrap_or(10)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub w_self: Matrix,
    /// Neighbour weights; only the mean aggregator has them.
    pub w_nbr: Option<Matrix>,
    pub bias: Matrix,
}

impl Layer {
    fn glorot(rng: &mut Rng, fan_in: usize, fan_out: usize, with_nbr: bool) -> Layer {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let draw = |rng: &mut Rng| {
            Matrix::from_vec(
                fan_in,
                fan_out,
                (0..fan_in * fan_out).map(|_| rng.gen_range(-bound..bound)).collect(),
            )
        };
        let w_self = draw(rng);
        let w_nbr = with_nbr.then(|| draw(rng));
        Layer {
            w_self,
            w_nbr,
            bias: Matrix::zeros(1, fan_out),
        }
    }
}

/// `act(self·W_self + mean(neighbors)·W_nbr + b)` for a single node. An
/// empty neighbour list contributes a zero mean.
pub fn mean_aggregate(
    self_vec: &[f64],
    neighbor_vecs: &[&[f64]],
    layer: &Layer,
    relu: bool,
) -> Result<Vec<f64>> {
    let d = layer.w_self.rows;
    let w_nbr = layer
        .w_nbr
        .as_ref()
        .ok_or_else(|| Error::invalid("layer has no neighbour weights"))?;
    if self_vec.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: self_vec.len(),
        });
    }
    let mut mean = vec![0.0; d];
    for v in neighbor_vecs {
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: v.len(),
            });
        }
        for (m, x) in mean.iter_mut().zip(v.iter()) {
            *m += x;
        }
    }
    if !neighbor_vecs.is_empty() {
        let k = neighbor_vecs.len() as f64;
        mean.iter_mut().for_each(|m| *m /= k);
    }
    let s = Matrix::from_vec(1, d, self_vec.to_vec()).matmul(&layer.w_self);
    let n = Matrix::from_vec(1, d, mean).matmul(w_nbr);
    Ok(s.data
        .iter()
        .zip(&n.data)
        .zip(&layer.bias.data)
        .map(|((a, b), c)| {
            let z = a + b + c;
            if relu {
                z.max(0.0)
            } else {
                z
            }
        })
        .collect())
}

/// `D^{-1/2}(A + I)D^{-1/2}` of the symmetrized graph, `D` the degree
/// matrix of `A + I`.
pub fn gcn_normalize(graph: &DirectedGraph) -> SparseMatrix {
    let sym = graph.symmetrized();
    let n = sym.n_nodes();
    let deg: Vec<f64> = (0..n).map(|i| (sym.out_degree(i) + 1) as f64).collect();
    let mut trips = Vec::with_capacity(sym.n_edges() + n);
    for i in 0..n {
        trips.push((i, i, 1.0 / deg[i]));
        for &j in sym.out_neighbors(i) {
            let j = j as usize;
            trips.push((i, j, 1.0 / (deg[i] * deg[j]).sqrt()));
        }
    }
    SparseMatrix::from_triplets(n, n, trips)
}

/// [`gcn_normalize`] after dropping every edge that crosses partitions.
pub fn gcn_normalize_partitioned(graph: &DirectedGraph, assignment: &[usize]) -> SparseMatrix {
    let kept = graph.edges().filter(|&(s, d)| assignment[s] == assignment[d]);
    gcn_normalize(&DirectedGraph::from_edges(graph.n_nodes(), kept))
}

/// Row `i` averages `k` neighbours of `i`, drawn without replacement when
/// the node has at least `k` neighbours and with replacement otherwise.
pub fn sample_mean_operator(sym: &DirectedGraph, k: usize, rng: &mut Rng) -> SparseMatrix {
    let n = sym.n_nodes();
    let mut trips = Vec::with_capacity(n * k);
    let w = 1.0 / k as f64;
    for i in 0..n {
        let nbrs = sym.out_neighbors(i);
        if nbrs.is_empty() {
            continue;
        }
        if nbrs.len() >= k {
            for &j in nbrs.choose_multiple(rng, k) {
                trips.push((i, j as usize, w));
            }
        } else {
            for _ in 0..k {
                trips.push((i, nbrs[rng.gen_range(0..nbrs.len())] as usize, w));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, trips)
}

/// One-hot `min(floor(log2(deg + 1)), dim - 1)` on the symmetrized degree.
pub fn degree_features(graph: &DirectedGraph, dim: usize) -> Matrix {
    let sym = graph.symmetrized();
    let mut m = Matrix::zeros(sym.n_nodes(), dim);
    for i in 0..sym.n_nodes() {
        let bucket = ((sym.out_degree(i) + 1) as f64).log2().floor() as usize;
        m.data[i * dim + bucket.min(dim - 1)] = 1.0;
    }
    m
}

/// Message-passing operators used for one forward pass.
#[derive(Debug, Clone)]
pub enum Propagation {
    /// One sampled mean operator per layer.
    Sage(Vec<Arc<SparseMatrix>>),
    /// One normalised adjacency shared by every layer.
    Gcn(Arc<SparseMatrix>),
}

/// A single optimisation step's inputs.
#[derive(Debug, Clone)]
pub struct StepPlan {
    /// Global ids of the rows taking part, or `None` for the whole graph.
    pub nodes: Option<Vec<usize>>,
    pub propagation: Propagation,
    /// Skip-gram examples indexing rows of the (possibly restricted) output.
    pub samples: Arc<Vec<SgSample>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnModel {
    pub variant: Variant,
    pub params: GnnParams,
    pub features: Matrix,
    pub layers: Vec<Layer>,
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    fn new(shapes: &[&Matrix]) -> Self {
        Adam {
            m: shapes.iter().map(|p| vec![0.0; p.data.len()]).collect(),
            v: shapes.iter().map(|p| vec![0.0; p.data.len()]).collect(),
            t: 0,
        }
    }

    fn step(&mut self, params: Vec<&mut Matrix>, grads: &[Matrix], lr: f64) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.t += 1;
        let c1 = 1.0 - B1.powi(self.t);
        let c2 = 1.0 - B2.powi(self.t);
        for (k, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m[i] = B1 * m[i] + (1.0 - B1) * gi;
                v[i] = B2 * v[i] + (1.0 - B2) * gi * gi;
                p.data[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + EPS);
            }
        }
    }
}

impl GnnModel {
    /// Initialises parameters for `graph`.
    pub fn new(graph: &DirectedGraph, params: GnnParams, variant: Variant) -> Result<Self> {
        params.validate()?;
        let mut rng = rng_from(&[stream::GNN, params.seed, 0]);
        let n = graph.n_nodes();
        let fdim = params.features.dim;
        let features = match params.features.mode {
            FeatureMode::TrainableLookup => Matrix::from_vec(
                n,
                fdim,
                (0..n * fdim).map(|_| rng.gen_range(-0.1..0.1)).collect(),
            ),
            FeatureMode::DegreeBuckets => degree_features(graph, fdim),
        };
        let mut layers = Vec::with_capacity(params.layers);
        for l in 0..params.layers {
            let fan_in = if l == 0 { fdim } else { params.hidden_dim };
            let fan_out = if l + 1 == params.layers {
                params.out_dim
            } else {
                params.hidden_dim
            };
            layers.push(Layer::glorot(
                &mut rng,
                fan_in,
                fan_out,
                variant == Variant::SageMean,
            ));
        }
        Ok(GnnModel {
            variant,
            params,
            features,
            layers,
        })
    }

    fn features_trainable(&self) -> bool {
        self.params.features.mode == FeatureMode::TrainableLookup
    }

    /// Trainable tensors in a fixed order.
    pub fn parameters(&self) -> Vec<&Matrix> {
        let mut out = Vec::new();
        if self.features_trainable() {
            out.push(&self.features);
        }
        for layer in &self.layers {
            out.push(&layer.w_self);
            if let Some(w) = &layer.w_nbr {
                out.push(w);
            }
            out.push(&layer.bias);
        }
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Matrix> {
        let trainable = self.features_trainable();
        let mut out = Vec::new();
        if trainable {
            out.push(&mut self.features);
        }
        for layer in &mut self.layers {
            out.push(&mut layer.w_self);
            if let Some(w) = &mut layer.w_nbr {
                out.push(w);
            }
            out.push(&mut layer.bias);
        }
        out
    }

    /// Builds the encoder on `tape`, returning the normalised output and
    /// the parameter leaves (same order as [`Self::parameters`]).
    fn build(&self, tape: &mut Tape, features: &Matrix, plan: &StepPlan) -> (Var, Vec<Var>) {
        let mut leaves = Vec::new();
        let x_all = tape.leaf(features.clone());
        if self.features_trainable() {
            leaves.push(x_all);
        }
        let mut h = match &plan.nodes {
            Some(nodes) => {
                let sel = Arc::new(SparseMatrix::selection(nodes, features.rows));
                tape.spmm(sel, x_all)
            }
            None => x_all,
        };
        let n_layers = self.layers.len();
        for (l, layer) in self.layers.iter().enumerate() {
            let w_self = tape.leaf(layer.w_self.clone());
            leaves.push(w_self);
            let z = match (&plan.propagation, &layer.w_nbr) {
                (Propagation::Sage(ops), Some(w_nbr)) => {
                    let w_nbr = tape.leaf(w_nbr.clone());
                    leaves.push(w_nbr);
                    let own = tape.matmul(h, w_self);
                    let mean = tape.spmm(ops[l].clone(), h);
                    let nbr = tape.matmul(mean, w_nbr);
                    tape.add(own, nbr)
                }
                (Propagation::Gcn(a_hat), None) => {
                    let ah = tape.spmm(a_hat.clone(), h);
                    tape.matmul(ah, w_self)
                }
                _ => panic!("propagation does not match the encoder variant"),
            };
            let bias = tape.leaf(layer.bias.clone());
            leaves.push(bias);
            let zb = tape.add_bias(z, bias);
            h = if l + 1 < n_layers { tape.relu(zb) } else { zb };
        }
        let out = tape.row_normalize(h);
        (out, leaves)
    }

    /// Mean skip-gram loss of `plan` and its gradient for every parameter.
    pub fn loss_and_grads(&self, plan: &StepPlan) -> (f64, Vec<Matrix>) {
        let mut tape = Tape::new();
        let (out, leaves) = self.build(&mut tape, &self.features, plan);
        let loss = tape.sg_loss(out, plan.samples.clone());
        let value = tape.value(loss).data[0];
        let grads = tape.backward(loss);
        let params = self.parameters();
        let g = leaves
            .iter()
            .zip(params)
            .map(|(&v, p)| grads.get_or_zeros(v, p))
            .collect();
        (value, g)
    }

    /// Loss only; used by finite-difference checks.
    pub fn loss(&self, plan: &StepPlan) -> f64 {
        let mut tape = Tape::new();
        let (out, _) = self.build(&mut tape, &self.features, plan);
        let loss = tape.sg_loss(out, plan.samples.clone());
        tape.value(loss).data[0]
    }

    /// Raw forward pass with explicit operators.
    pub fn forward_with(&self, features: &Matrix, propagation: Propagation) -> Matrix {
        let plan = StepPlan {
            nodes: None,
            propagation,
            samples: Arc::new(Vec::new()),
        };
        let mut tape = Tape::new();
        let (out, _) = self.build(&mut tape, features, &plan);
        tape.value(out).clone()
    }

    /// Inference operators for `graph`: fresh neighbour samples (seeded)
    /// for the mean aggregator, the partition-restricted `Â` for GCN.
    pub fn inference_propagation(&self, graph: &DirectedGraph) -> Result<Propagation> {
        match self.variant {
            Variant::SageMean => {
                let sym = graph.symmetrized();
                let mut rng = rng_from(&[stream::GNN, self.params.seed, 1]);
                Ok(Propagation::Sage(
                    (0..self.layers.len())
                        .map(|l| Arc::new(sample_mean_operator(&sym, self.params.sample_size(l), &mut rng)))
                        .collect(),
                ))
            }
            Variant::ClusterGcn => {
                let assignment = partition_graph(graph, self.params.n_partitions, self.params.seed)?;
                Ok(Propagation::Gcn(Arc::new(gcn_normalize_partitioned(graph, &assignment))))
            }
        }
    }

    /// Features for `graph`: recomputed in degree mode; in lookup mode,
    /// nodes beyond the trained table get zero features.
    pub fn features_for(&self, graph: &DirectedGraph) -> Matrix {
        match self.params.features.mode {
            FeatureMode::DegreeBuckets => degree_features(graph, self.params.features.dim),
            FeatureMode::TrainableLookup => {
                let n = graph.n_nodes();
                let mut m = Matrix::zeros(n, self.features.cols);
                let k = n.min(self.features.rows) * self.features.cols;
                m.data[..k].copy_from_slice(&self.features.data[..k]);
                m
            }
        }
    }

    /// Output embeddings for every node of `graph` (which may extend the
    /// training graph with new nodes).
    pub fn forward(&self, graph: &DirectedGraph) -> Result<Matrix> {
        let prop = self.inference_propagation(graph)?;
        Ok(self.forward_with(&self.features_for(graph), prop))
    }

    pub fn embeddings(&self, graph: &DirectedGraph, ids: Vec<String>) -> Result<EmbeddingMatrix> {
        let out = self.forward(graph)?;
        EmbeddingMatrix::from_values(ids, out.cols, out.data)
    }

    /// Minimises the skip-gram loss of output vectors over walk
    /// co-occurrences with Adam. Single-threaded and deterministic.
    pub fn train(&mut self, graph: &DirectedGraph, corpus: &WalkCorpus) -> Result<TrainReport> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if corpus.n_nodes != graph.n_nodes() {
            return Err(Error::invalid("corpus was generated on a different graph"));
        }
        let mut rng = rng_from(&[stream::GNN, self.params.seed, 2]);
        let counts = corpus.node_counts();
        let usable: Vec<usize> = (0..corpus.walks.len())
            .filter(|&w| corpus.walks[w].len() >= 2)
            .collect();
        let mut adam = Adam::new(&self.parameters());
        let mut report = TrainReport::default();
        match self.variant {
            Variant::SageMean => {
                let sym = graph.symmetrized();
                let sampler = NegativeSampler::from_counts(&counts)?;
                let steps = graph.n_nodes().div_ceil(self.params.batch_size).max(1);
                for _ in 0..self.params.epochs {
                    let mut total = 0.0;
                    let mut done = 0usize;
                    for _ in 0..steps {
                        let ops = (0..self.layers.len())
                            .map(|l| Arc::new(sample_mean_operator(&sym, self.params.sample_size(l), &mut rng)))
                            .collect();
                        let mut samples = Vec::with_capacity(self.params.batch_size);
                        for _ in 0..self.params.batch_size {
                            if let Some((c, x)) = sample_pair(corpus, &usable, self.params.window, &mut rng) {
                                let negatives =
                                    (0..self.params.negatives).map(|_| sampler.sample(&mut rng)).collect();
                                samples.push(SgSample { center: c, context: x, negatives });
                            }
                        }
                        if samples.is_empty() {
                            continue;
                        }
                        let plan = StepPlan {
                            nodes: None,
                            propagation: Propagation::Sage(ops),
                            samples: Arc::new(samples),
                        };
                        total += self.apply_step(&plan, &mut adam);
                        done += 1;
                    }
                    report.epoch_losses.push(if done > 0 { total / done as f64 } else { 0.0 });
                }
            }
            Variant::ClusterGcn => {
                let assignment = partition_graph(graph, self.params.n_partitions, self.params.seed)?;
                let parts = partition_members(&assignment, self.params.n_partitions);
                let sym = graph.symmetrized();
                let mut local_index = vec![0usize; graph.n_nodes()];
                let mut blocks = Vec::with_capacity(parts.len());
                for members in &parts {
                    for (k, &v) in members.iter().enumerate() {
                        local_index[v] = k;
                    }
                    let a_hat = Arc::new(gcn_normalize(&sym.induced_subgraph(members)));
                    let local_counts: Vec<u64> = members.iter().map(|&v| counts[v]).collect();
                    let sampler = NegativeSampler::from_counts(&local_counts)?;
                    blocks.push((a_hat, sampler));
                }
                // Walk positions grouped by the partition of their node.
                let mut positions: Vec<Vec<(u32, u32)>> = vec![Vec::new(); parts.len()];
                for &w in &usable {
                    for (i, &v) in corpus.walks[w].iter().enumerate() {
                        positions[assignment[v as usize]].push((w as u32, i as u32));
                    }
                }
                let mut order: Vec<usize> = (0..parts.len()).collect();
                for _ in 0..self.params.epochs {
                    order.shuffle(&mut rng);
                    let mut total = 0.0;
                    let mut done = 0usize;
                    for &p in &order {
                        let pos = &positions[p];
                        if pos.is_empty() {
                            continue;
                        }
                        let (a_hat, sampler) = &blocks[p];
                        let mut samples = Vec::with_capacity(self.params.batch_size);
                        let mut tries = 0;
                        while samples.len() < self.params.batch_size && tries < self.params.batch_size * 20 {
                            tries += 1;
                            let (w, i) = pos[rng.gen_range(0..pos.len())];
                            let walk = &corpus.walks[w as usize];
                            let j = context_index(walk.len(), i as usize, self.params.window, &mut rng);
                            let (c, x) = (walk[i as usize] as usize, walk[j] as usize);
                            if assignment[x] != p {
                                continue;
                            }
                            let negatives =
                                (0..self.params.negatives).map(|_| sampler.sample(&mut rng)).collect();
                            samples.push(SgSample {
                                center: local_index[c],
                                context: local_index[x],
                                negatives,
                            });
                        }
                        if samples.is_empty() {
                            continue;
                        }
                        let plan = StepPlan {
                            nodes: Some(parts[p].clone()),
                            propagation: Propagation::Gcn(a_hat.clone()),
                            samples: Arc::new(samples),
                        };
                        total += self.apply_step(&plan, &mut adam);
                        done += 1;
                    }
                    report.epoch_losses.push(if done > 0 { total / done as f64 } else { 0.0 });
                }
            }
        }
        Ok(report)
    }

    fn apply_step(&mut self, plan: &StepPlan, adam: &mut Adam) -> f64 {
        let (loss, grads) = self.loss_and_grads(plan);
        let lr = self.params.learning_rate;
        adam.step(self.parameters_mut(), &grads, lr);
        loss
    }
}

/// Uniform index in the window around `i`, excluding `i`. `len >= 2`.
fn context_index(len: usize, i: usize, window: usize, rng: &mut Rng) -> usize {
    let lo = i.saturating_sub(window);
    let hi = (i + window).min(len - 1);
    let j = rng.gen_range(lo..hi);
    if j >= i {
        j + 1
    } else {
        j
    }
}

fn sample_pair(corpus: &WalkCorpus, usable: &[usize], window: usize, rng: &mut Rng) -> Option<(usize, usize)> {
    if usable.is_empty() {
        return None;
    }
    let walk = &corpus.walks[usable[rng.gen_range(0..usable.len())]];
    let i = rng.gen_range(0..walk.len());
    let j = context_index(walk.len(), i, window, rng);
    Some((walk[i] as usize, walk[j] as usize))
}

/// Trains an encoder on `graph` and returns its output embeddings.
pub fn train_gnn(
    graph: &DirectedGraph,
    corpus: &WalkCorpus,
    params: GnnParams,
    variant: Variant,
    ids: Vec<String>,
) -> Result<(EmbeddingMatrix, TrainReport)> {
    let mut model = GnnModel::new(graph, params, variant)?;
    let report = model.train(graph, corpus)?;
    Ok((model.embeddings(graph, ids)?, report))
}
