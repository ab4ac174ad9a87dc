//! Text-only baseline: tokenizer, TF-IDF vectors and an RBF-kernel SVM
//! trained with SMO (plus a cheaper sparse logistic regression).

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{rng_from, stream};
use crate::skipgram::sigmoid;

pub const URL_TOKEN: &str = "<url>";
pub const MAX_VOCAB: usize = 10_000;

/// Sorted `(column, value)` pairs.
pub type SparseVec = Vec<(usize, f64)>;

fn is_url(word: &str) -> bool {
    word.starts_with("http://") || word.starts_with("https://") || word.starts_with("www.")
}

/// Lowercases, splits on whitespace, strips surrounding punctuation (a
/// leading `#` or `@` is kept) and collapses URLs to [`URL_TOKEN`].
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for raw in text.split_whitespace() {
        let word = raw.to_lowercase();
        let start = word.trim_start_matches(|c: char| !c.is_alphanumeric() && c != '#' && c != '@');
        if is_url(start) {
            out.push(URL_TOKEN.to_string());
            continue;
        }
        let prefix_len = start.len() - start.trim_start_matches(['#', '@']).len();
        let (prefix, rest) = start.split_at(prefix_len);
        // Only one marker survives: "##tag" becomes "#tag".
        let marker = prefix.chars().last().map(String::from).unwrap_or_default();
        let body = rest
            .trim_start_matches(|c: char| !c.is_alphanumeric())
            .trim_end_matches(|c: char| !c.is_alphanumeric());
        if !body.is_empty() {
            out.push(format!("{marker}{body}"));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    /// Column order: document frequency descending, then lexicographic.
    pub tokens: Vec<String>,
    pub df: Vec<usize>,
    pub idf: Vec<f64>,
    pub n_docs: usize,
    index: HashMap<String, usize>,
}

impl TfidfModel {
    /// Keeps the `max_vocab` tokens with the highest document frequency;
    /// `idf = ln((1 + N) / (1 + df)) + 1`.
    pub fn fit(corpus: &[Vec<String>], max_vocab: usize) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut df: HashMap<&str, usize> = HashMap::new();
        for doc in corpus {
            let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = df.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        ranked.truncate(max_vocab);
        let n = corpus.len();
        let tokens: Vec<String> = ranked.iter().map(|(t, _)| t.to_string()).collect();
        let df: Vec<usize> = ranked.iter().map(|&(_, d)| d).collect();
        let idf = df
            .iter()
            .map(|&d| ((1.0 + n as f64) / (1.0 + d as f64)).ln() + 1.0)
            .collect();
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(TfidfModel {
            tokens,
            df,
            idf,
            n_docs: n,
            index,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn column(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Raw counts times idf, L2-normalised. Unknown tokens are ignored.
    pub fn transform(&self, doc: &[String]) -> SparseVec {
        let mut counts: HashMap<usize, f64> = HashMap::new();
        for t in doc {
            if let Some(c) = self.column(t) {
                *counts.entry(c).or_default() += 1.0;
            }
        }
        let mut v: SparseVec = counts.into_iter().map(|(c, tf)| (c, tf * self.idf[c])).collect();
        v.sort_unstable_by_key(|&(c, _)| c);
        let norm = v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|(_, x)| *x /= norm);
        }
        v
    }

    pub fn transform_all(&self, docs: &[Vec<String>]) -> Vec<SparseVec> {
        docs.par_iter().map(|d| self.transform(d)).collect()
    }

    /// `token<TAB>df<TAB>idf` per column.
    pub fn write_vocab(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        for ((t, d), idf) in self.tokens.iter().zip(&self.df).zip(&self.idf) {
            writeln!(w, "{t}\t{d}\t{idf}")?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn dot(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

/// `exp(-gamma ‖a - b‖²)`.
pub fn rbf_kernel(a: &[(usize, f64)], b: &[(usize, f64)], gamma: f64) -> f64 {
    let d2 = (dot(a, a) + dot(b, b) - 2.0 * dot(a, b)).max(0.0);
    (-gamma * d2).exp()
}

pub fn dense_to_sparse(v: &[f64]) -> SparseVec {
    v.iter().enumerate().filter(|(_, x)| **x != 0.0).map(|(i, &x)| (i, x)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: f64,
    pub tol: f64,
    /// Consecutive sweeps without any update before stopping.
    pub max_passes: usize,
    /// Hard cap on sweeps.
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 10.0,
            gamma: 0.1,
            tol: 1e-3,
            max_passes: 10,
            max_iter: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub support_vectors: Vec<SparseVec>,
    /// `α_i y_i` for each support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub gamma: f64,
    /// Every multiplier after training, in input order; all lie in `[0, C]`.
    pub alphas: Vec<f64>,
}

impl SvmModel {
    pub fn decision(&self, x: &[(usize, f64)]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, a)| a * rbf_kernel(sv, x, self.gamma))
            .sum::<f64>()
            + self.bias
    }

    /// +1 or -1.
    pub fn predict(&self, x: &[(usize, f64)]) -> i8 {
        if self.decision(x) >= 0.0 {
            1
        } else {
            -1
        }
    }
}

enum Kernel<'a> {
    Cached(Vec<f64>),
    Lazy(&'a [SparseVec], f64),
}

impl Kernel<'_> {
    fn get(&self, n: usize, i: usize, j: usize) -> f64 {
        match self {
            Kernel::Cached(k) => k[i * n + j],
            Kernel::Lazy(xs, gamma) => rbf_kernel(&xs[i], &xs[j], *gamma),
        }
    }
}

const GRAM_CACHE_LIMIT: usize = 4000;

/// Sequential minimal optimisation of the soft-margin dual. `ys` are ±1.
pub fn svm_train(xs: &[SparseVec], ys: &[i8], params: &SvmParams) -> Result<SvmModel> {
    let n = xs.len();
    if n != ys.len() {
        return Err(Error::DimensionMismatch { expected: n, got: ys.len() });
    }
    if ys.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::invalid("labels must be +1 or -1"));
    }
    if !(ys.contains(&1) && ys.contains(&-1)) {
        return Err(Error::SingleClass);
    }
    if xs.iter().flatten().any(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite("SVM feature".into()));
    }
    if !(params.c > 0.0 && params.gamma > 0.0) {
        return Err(Error::invalid("C and gamma must be positive"));
    }
    let kernel = if n <= GRAM_CACHE_LIMIT {
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (0..n).map(|j| rbf_kernel(&xs[i], &xs[j], params.gamma)).collect())
            .collect();
        Kernel::Cached(rows.concat())
    } else {
        Kernel::Lazy(xs, params.gamma)
    };
    let y: Vec<f64> = ys.iter().map(|&v| v as f64).collect();
    let c = params.c;
    let mut alpha = vec![0.0; n];
    let mut b = 0.0;
    // Error cache: f(x_i) - y_i with f = Σ α_j y_j K(x_j, ·) + b.
    let mut err: Vec<f64> = y.iter().map(|v| -v).collect();
    let mut rng = rng_from(&[stream::CLASSIFIER, params.seed, 1]);
    let mut passes = 0;
    let mut iter = 0;
    while passes < params.max_passes && iter < params.max_iter {
        iter += 1;
        let mut changed = 0;
        for i in 0..n {
            let ri = err[i] * y[i];
            if !((ri < -params.tol && alpha[i] < c) || (ri > params.tol && alpha[i] > 0.0)) {
                continue;
            }
            // Second index: the largest |E_i - E_j|, then a random one if
            // that makes no progress.
            let best = (0..n)
                .filter(|&j| j != i)
                .max_by(|&a, &b| (err[i] - err[a]).abs().total_cmp(&(err[i] - err[b]).abs()))
                .unwrap();
            let mut updated = take_step(i, best, &kernel, n, &y, c, &mut alpha, &mut b, &mut err);
            if !updated {
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                updated = take_step(i, j, &kernel, n, &y, c, &mut alpha, &mut b, &mut err);
            }
            if updated {
                changed += 1;
            }
        }
        passes = if changed == 0 { passes + 1 } else { 0 };
    }
    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for i in 0..n {
        if alpha[i] > 0.0 {
            support_vectors.push(xs[i].clone());
            dual_coef.push(alpha[i] * y[i]);
        }
    }
    Ok(SvmModel {
        support_vectors,
        dual_coef,
        bias: b,
        c,
        gamma: params.gamma,
        alphas: alpha,
    })
}

#[allow(clippy::too_many_arguments)]
fn take_step(
    i: usize,
    j: usize,
    kernel: &Kernel,
    n: usize,
    y: &[f64],
    c: f64,
    alpha: &mut [f64],
    b: &mut f64,
    err: &mut [f64],
) -> bool {
    let (ai, aj) = (alpha[i], alpha[j]);
    let (lo, hi) = if y[i] != y[j] {
        ((aj - ai).max(0.0), (c + aj - ai).min(c))
    } else {
        ((ai + aj - c).max(0.0), (ai + aj).min(c))
    };
    if hi - lo < 1e-12 {
        return false;
    }
    let (kii, kjj, kij) = (kernel.get(n, i, i), kernel.get(n, j, j), kernel.get(n, i, j));
    let eta = 2.0 * kij - kii - kjj;
    if eta >= -1e-12 {
        return false;
    }
    let mut aj_new = aj - y[j] * (err[i] - err[j]) / eta;
    aj_new = aj_new.clamp(lo, hi);
    if (aj_new - aj).abs() < 1e-5 * (aj_new + aj + 1e-5) {
        return false;
    }
    let mut ai_new = ai + y[i] * y[j] * (aj - aj_new);
    // Snap to the box so the constraints hold exactly.
    for a in [&mut ai_new, &mut aj_new] {
        if *a < 1e-12 {
            *a = 0.0;
        } else if *a > c - 1e-12 {
            *a = c;
        }
    }
    let b1 = *b - err[i] - y[i] * (ai_new - ai) * kii - y[j] * (aj_new - aj) * kij;
    let b2 = *b - err[j] - y[i] * (ai_new - ai) * kij - y[j] * (aj_new - aj) * kjj;
    let b_new = if ai_new > 0.0 && ai_new < c {
        b1
    } else if aj_new > 0.0 && aj_new < c {
        b2
    } else {
        (b1 + b2) / 2.0
    };
    let (di, dj, db) = (y[i] * (ai_new - ai), y[j] * (aj_new - aj), b_new - *b);
    for (k, e) in err.iter_mut().enumerate() {
        *e += di * kernel.get(n, i, k) + dj * kernel.get(n, j, k) + db;
    }
    alpha[i] = ai_new;
    alpha[j] = aj_new;
    *b = b_new;
    true
}

/// Sparse logistic regression, a faster stand-in for the SVM.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseLogistic {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl SparseLogistic {
    /// SGD on binary cross-entropy; `ys` are 0/1 targets.
    pub fn train(xs: &[SparseVec], ys: &[f64], dim: usize, epochs: usize, learning_rate: f64, seed: u64) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch { expected: xs.len(), got: ys.len() });
        }
        if !(ys.contains(&1.0) && ys.contains(&0.0)) {
            return Err(Error::SingleClass);
        }
        let mut model = SparseLogistic { weights: vec![0.0; dim], bias: 0.0 };
        let mut order: Vec<usize> = (0..xs.len()).collect();
        let mut rng = rng_from(&[stream::CLASSIFIER, seed, 2]);
        for _ in 0..epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let r = model.probability(&xs[i]) - ys[i];
                for &(c, v) in &xs[i] {
                    model.weights[c] -= learning_rate * r * v;
                }
                model.bias -= learning_rate * r;
            }
        }
        Ok(model)
    }

    pub fn probability(&self, x: &[(usize, f64)]) -> f64 {
        let z: f64 = x.iter().map(|&(c, v)| self.weights.get(c).copied().unwrap_or(0.0) * v).sum();
        sigmoid(z + self.bias)
    }
}
