//! Skip-gram with negative sampling over walk corpora (DeepWalk).

use rand::distributions::Distribution;
use rand_distr::WeightedAliasIndex;
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::rng::{rng_from, stream, Rng};
use crate::walks::WalkCorpus;

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dims(d: usize, v: &[f64]) -> Result<()> {
    if v.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: v.len(),
        });
    }
    Ok(())
}

/// `-ln σ(c·x) - Σ_k ln σ(-c·n_k)`.
pub fn sg_pair_loss(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> Result<f64> {
    let d = center.len();
    check_dims(d, context)?;
    let mut loss = softplus(-dot(center, context));
    for n in negatives {
        check_dims(d, n)?;
        loss += softplus(dot(center, n));
    }
    Ok(loss)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgGrad {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Analytic gradient of [`sg_pair_loss`] with respect to every input.
pub fn sg_pair_grad(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> Result<SgGrad> {
    let d = center.len();
    check_dims(d, context)?;
    let pos = sigmoid(dot(center, context)) - 1.0;
    let mut g_center: Vec<f64> = context.iter().map(|x| pos * x).collect();
    let g_context: Vec<f64> = center.iter().map(|c| pos * c).collect();
    let mut g_neg = Vec::with_capacity(negatives.len());
    for n in negatives {
        check_dims(d, n)?;
        let s = sigmoid(dot(center, n));
        for (g, v) in g_center.iter_mut().zip(n.iter()) {
            *g += s * v;
        }
        g_neg.push(center.iter().map(|c| s * c).collect());
    }
    Ok(SgGrad {
        center: g_center,
        context: g_context,
        negatives: g_neg,
    })
}

/// Sampler over `count^0.75`.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    dist: WeightedAliasIndex<f64>,
}

impl NegativeSampler {
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let weights = counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
        WeightedAliasIndex::new(weights)
            .map(|dist| NegativeSampler { dist })
            .map_err(|_| Error::EmptyCorpus)
    }

    pub fn sample(&self, rng: &mut Rng) -> usize {
        self.dist.sample(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgParams {
    pub dim: usize,
    pub window: usize,
    pub negatives_per_pair: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_learning_rate: f64,
    pub seed: u64,
}

impl Default for SgParams {
    fn default() -> Self {
        SgParams {
            dim: 64,
            window: 10,
            negatives_per_pair: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_learning_rate: 0.0001,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    /// Mean loss per training example, one entry per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Trained input ("center") and output ("context") tables.
#[derive(Debug, Clone, PartialEq)]
pub struct SkipGram {
    pub n_nodes: usize,
    pub dim: usize,
    pub input: Vec<f32>,
    pub output: Vec<f32>,
}

impl SkipGram {
    pub fn input_row(&self, i: usize) -> &[f32] {
        &self.input[i * self.dim..(i + 1) * self.dim]
    }

    pub fn output_row(&self, i: usize) -> &[f32] {
        &self.output[i * self.dim..(i + 1) * self.dim]
    }

    /// The input vectors as an embedding matrix with the given row ids.
    pub fn into_embedding(self, ids: Vec<String>) -> Result<EmbeddingMatrix> {
        let values = self.input.iter().map(|&v| v as f64).collect();
        EmbeddingMatrix::from_values(ids, self.dim, values)
    }
}

fn window_pair_count(len: usize, window: usize) -> u64 {
    (0..len)
        .map(|i| (i.min(window) + (len - 1 - i).min(window)) as u64)
        .sum()
}

/// Eight independent accumulators so the loop vectorises.
#[inline]
fn dot32(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0f32; 8];
    let (ca, ra) = a.split_at(a.len() - a.len() % 8);
    let (cb, rb) = b.split_at(ca.len());
    for (x, y) in ca.chunks_exact(8).zip(cb.chunks_exact(8)) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f32 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    acc.iter().sum::<f32>() + tail
}

/// The reported epoch loss is averaged over every `LOSS_STRIDE`-th pair.
const LOSS_STRIDE: u64 = 16;

/// Single-threaded SGD over the walk corpus.
///
/// Walk order is reshuffled every epoch; inside a walk each position emits
/// its window pairs in order. The learning rate decays linearly with the
/// number of processed pairs. Output is bit-identical for a fixed seed.
pub fn train_deepwalk(corpus: &WalkCorpus, params: &SgParams) -> Result<(SkipGram, TrainReport)> {
    if corpus.is_empty() || corpus.n_tokens() == 0 {
        return Err(Error::EmptyCorpus);
    }
    if params.dim == 0 || params.window == 0 || params.negatives_per_pair == 0 {
        return Err(Error::invalid("skip-gram counts must be >= 1"));
    }
    if !(params.learning_rate > 0.0) {
        return Err(Error::invalid("learning rate must be positive"));
    }
    let n = corpus.n_nodes;
    let dim = params.dim;
    let mut rng = rng_from(&[stream::SKIPGRAM, params.seed]);
    let bound = 0.5 / dim as f32;
    let mut input: Vec<f32> = (0..n * dim).map(|_| rng.gen_range(-bound..bound)).collect();
    let mut output = vec![0f32; n * dim];
    let sampler = NegativeSampler::from_counts(&corpus.node_counts())?;

    let pairs_per_epoch: u64 = corpus
        .walks
        .iter()
        .map(|w| window_pair_count(w.len(), params.window))
        .sum();
    let total = (pairs_per_epoch * params.epochs as u64).max(1) as f64;
    let mut processed = 0u64;
    let mut order: Vec<usize> = (0..corpus.walks.len()).collect();
    let mut report = TrainReport::default();
    let mut grad_center = vec![0f32; dim];
    let mut negs = vec![0usize; params.negatives_per_pair];

    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0f64;
        let mut examples = 0u64;
        for &w in &order {
            let walk = &corpus.walks[w];
            for i in 0..walk.len() {
                let center = walk[i] as usize;
                let lo = i.saturating_sub(params.window);
                let hi = (i + params.window).min(walk.len() - 1);
                for j in lo..=hi {
                    if j == i {
                        continue;
                    }
                    let lr = (params.learning_rate
                        - (params.learning_rate - params.min_learning_rate)
                            * (processed as f64 / total))
                        as f32;
                    processed += 1;
                    let context = walk[j] as usize;
                    for slot in negs.iter_mut() {
                        *slot = sampler.sample(&mut rng);
                    }
                    let track = processed.is_multiple_of(LOSS_STRIDE);
                    grad_center.fill(0.0);
                    let c_row = &input[center * dim..(center + 1) * dim];
                    let targets =
                        std::iter::once((context, 1f32)).chain(negs.iter().map(|&t| (t, 0f32)));
                    for (target, label) in targets {
                        if label == 0.0 && target == context {
                            continue;
                        }
                        let o_row = &mut output[target * dim..(target + 1) * dim];
                        let f = dot32(c_row, o_row) as f64;
                        if track {
                            loss_sum += if label == 1.0 { softplus(-f) } else { softplus(f) };
                        }
                        let g = (label - sigmoid(f) as f32) * lr;
                        for ((gc, o), c) in grad_center.iter_mut().zip(o_row.iter_mut()).zip(c_row) {
                            *gc += g * *o;
                            *o += g * c;
                        }
                    }
                    let c_row = &mut input[center * dim..(center + 1) * dim];
                    for (c, gc) in c_row.iter_mut().zip(&grad_center) {
                        *c += gc;
                    }
                    if track {
                        examples += 1;
                    }
                }
            }
        }
        let mean = if examples > 0 { loss_sum / examples as f64 } else { 0.0 };
        report.epoch_losses.push(mean);
    }

    Ok((
        SkipGram {
            n_nodes: n,
            dim,
            input,
            output,
        },
        report,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DirectedGraph;
    use crate::walks::{generate_walks, WalkParams};
    use rand::SeedableRng;

    fn central_diff<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut p = x.to_vec();
                let mut m = x.to_vec();
                p[i] += h;
                m[i] -= h;
                (f(&p) - f(&m)) / (2.0 * h)
            })
            .collect()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
    }

    #[test]
    fn zero_vectors_give_two_ln2() {
        let z = [0.0; 4];
        let loss = sg_pair_loss(&z, &z, &[&z]).unwrap();
        assert!((loss - 2.0 * 2f64.ln()).abs() < 1e-12);
        let g = sg_pair_grad(&z, &z, &[&z]).unwrap();
        assert!(g.center.iter().chain(&g.context).chain(&g.negatives[0]).all(|&v| v == 0.0));
    }

    #[test]
    fn separation_limit() {
        let c = [50.0];
        let loss = sg_pair_loss(&c, &[1.0], &[&[-1.0], &[-1.0]]).unwrap();
        assert!(loss < 1e-20 && loss.is_finite());
        let worst = sg_pair_loss(&c, &[-1.0], &[&[1.0]]).unwrap();
        assert!((worst - 100.0).abs() < 1e-9);
    }

    #[test]
    fn direct_evaluation() {
        // -ln σ(1) - ln σ(-1) = ln(1+e^-1) + ln(1+e)
        let expected = (1.0 + (-1f64).exp()).ln() + (1.0 + 1f64.exp()).ln();
        let loss = sg_pair_loss(&[1.0, 0.0], &[1.0, 0.0], &[&[1.0, 0.0]]).unwrap();
        assert!((loss - expected).abs() < 1e-12);
        assert!((loss - 1.6265).abs() < 1e-4);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            sg_pair_loss(&[1.0, 0.0], &[1.0], &[]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(sg_pair_grad(&[1.0], &[1.0], &[&[1.0, 2.0]]).is_err());
    }

    #[test]
    fn zero_center_leaves_others_untouched() {
        let g = sg_pair_grad(&[0.0, 0.0], &[0.3, -2.0], &[&[1.0, 1.0]]).unwrap();
        assert_eq!(g.context, vec![0.0, 0.0]);
        assert_eq!(g.negatives[0], vec![0.0, 0.0]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = Rng::seed_from_u64(11);
        for _ in 0..100 {
            let d = rng.gen_range(1..8);
            let k = rng.gen_range(0..4);
            let draw = |rng: &mut Rng| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<f64>>();
            let c = draw(&mut rng);
            let x = draw(&mut rng);
            let negs: Vec<Vec<f64>> = (0..k).map(|_| draw(&mut rng)).collect();
            let nrefs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
            let g = sg_pair_grad(&c, &x, &nrefs).unwrap();
            let fd_c = central_diff(|v| sg_pair_loss(v, &x, &nrefs).unwrap(), &c, 1e-5);
            let fd_x = central_diff(|v| sg_pair_loss(&c, v, &nrefs).unwrap(), &x, 1e-5);
            for (a, b) in g.center.iter().zip(&fd_c).chain(g.context.iter().zip(&fd_x)) {
                assert!(rel_err(*a, *b) < 1e-4, "{a} vs {b}");
            }
            for kk in 0..k {
                let fd_n = central_diff(
                    |v| {
                        let mut refs = nrefs.clone();
                        refs[kk] = v;
                        sg_pair_loss(&c, &x, &refs).unwrap()
                    },
                    &negs[kk],
                    1e-5,
                );
                for (a, b) in g.negatives[kk].iter().zip(&fd_n) {
                    assert!(rel_err(*a, *b) < 1e-4, "{a} vs {b}");
                }
            }
        }
    }

    pub(crate) fn two_cliques() -> DirectedGraph {
        let mut edges = Vec::new();
        for base in [0, 4] {
            for i in 0..4 {
                for j in 0..4 {
                    edges.push((base + i, base + j));
                }
            }
        }
        DirectedGraph::from_edges(8, edges)
    }

    fn cos(a: &[f32], b: &[f32]) -> f64 {
        let d = dot32(a, b) as f64;
        d / ((dot32(a, a) as f64).sqrt() * (dot32(b, b) as f64).sqrt())
    }

    #[test]
    fn empty_corpus_rejected() {
        let c = WalkCorpus {
            walks: vec![],
            params: WalkParams::default(),
            n_nodes: 0,
        };
        assert!(matches!(train_deepwalk(&c, &SgParams::default()), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let corpus = generate_walks(&two_cliques(), WalkParams::default());
        let params = SgParams { epochs: 0, seed: 5, ..Default::default() };
        let (model, report) = train_deepwalk(&corpus, &params).unwrap();
        assert!(report.epoch_losses.is_empty());
        let mut rng = rng_from(&[stream::SKIPGRAM, 5]);
        let bound = 0.5 / 64f32;
        let init: Vec<f32> = (0..8 * 64).map(|_| rng.gen_range(-bound..bound)).collect();
        assert_eq!(model.input, init);
    }

    #[test]
    fn two_cliques_separate_and_loss_falls() {
        let corpus = generate_walks(&two_cliques(), WalkParams { seed: 1, ..Default::default() });
        let params = SgParams { dim: 16, epochs: 5, seed: 2, ..Default::default() };
        let (model, report) = train_deepwalk(&corpus, &params).unwrap();
        assert!(report.epoch_losses.iter().all(|l| l.is_finite()));
        assert!(report.epoch_losses.last() < report.epoch_losses.first());
        let (mut intra, mut ni, mut inter, mut nx) = (0.0, 0, 0.0, 0);
        for a in 0..8 {
            for b in 0..8 {
                if a == b {
                    continue;
                }
                let c = cos(model.input_row(a), model.input_row(b));
                if a / 4 == b / 4 {
                    intra += c;
                    ni += 1;
                } else {
                    inter += c;
                    nx += 1;
                }
            }
        }
        assert!(intra / ni as f64 > inter / nx as f64);
    }

    #[test]
    fn single_edge_alignment_grows() {
        let g = DirectedGraph::from_edges(2, [(0, 1), (1, 0)]);
        let corpus = generate_walks(&g, WalkParams { max_len: 10, ..Default::default() });
        let align = |epochs| {
            let params = SgParams { dim: 8, epochs, seed: 4, ..Default::default() };
            let (m, _) = train_deepwalk(&corpus, &params).unwrap();
            cos(m.input_row(0), m.output_row(1))
        };
        let series: Vec<f64> = (1..=4).map(align).collect();
        assert!(series[3] > series[0], "{series:?}");
    }

    #[test]
    fn deterministic() {
        let corpus = generate_walks(&two_cliques(), WalkParams::default());
        let params = SgParams { dim: 8, epochs: 2, seed: 77, ..Default::default() };
        let a = train_deepwalk(&corpus, &params).unwrap();
        let b = train_deepwalk(&corpus, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pair_count_formula() {
        use crate::walks::walk_pairs;
        for len in 1..30 {
            for window in 1..12 {
                let walk: Vec<u32> = (0..len as u32).collect();
                assert_eq!(window_pair_count(len, window), walk_pairs(&walk, window).count() as u64);
            }
        }
    }
}
