//! Article vectors (sum of engaged-user embeddings) and a single dense
//! logistic layer on top of them.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::dataset::{Label, NewsArticle};
use crate::embedding::{EmbeddingMatrix, SENTINEL_VALUE};
use crate::error::{Error, Result};
use crate::graph::UserTable;
use crate::rng::{rng_from, stream};
use crate::skipgram::sigmoid;

#[derive(Debug, Clone, PartialEq)]
pub struct ArticleVector {
    pub article_id: String,
    pub vec: Vec<f64>,
    pub label: Label,
}

/// Sums the rows of the engaged users. Users flagged missing in `users`
/// contribute the sentinel row; an empty engagement set gives zeros.
pub fn aggregate_article(
    article: &NewsArticle,
    emb: &EmbeddingMatrix,
    users: &UserTable,
) -> Result<ArticleVector> {
    let mut vec = vec![0.0; emb.dim()];
    for &u in &article.engaged_users {
        if u >= emb.n_rows() || u >= users.len() {
            return Err(Error::UnknownUser(format!("#{u} (article {})", article.article_id)));
        }
        if users.is_missing(u) {
            vec.iter_mut().for_each(|v| *v += SENTINEL_VALUE);
        } else {
            for (v, x) in vec.iter_mut().zip(emb.row(u)) {
                *v += x;
            }
        }
    }
    if let Some(bad) = vec.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("article {}: {bad}", article.article_id)));
    }
    Ok(ArticleVector {
        article_id: article.article_id.clone(),
        vec,
        label: article.label,
    })
}

pub fn aggregate_all(
    articles: &[NewsArticle],
    emb: &EmbeddingMatrix,
    users: &UserTable,
) -> Result<Vec<ArticleVector>> {
    if emb.n_rows() != users.len() {
        return Err(Error::DimensionMismatch {
            expected: users.len(),
            got: emb.n_rows(),
        });
    }
    articles
        .par_iter()
        .map(|a| aggregate_article(a, emb, users))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierParams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        ClassifierParams {
            epochs: 200,
            learning_rate: 0.01,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Per-dimension standardisation fitted on the training inputs.
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

/// Mean binary cross-entropy of `σ(w·x + b)` and its gradient
/// `(∂w, ∂b)`. Inputs are used as given (no standardisation).
pub fn logistic_loss_grad(weights: &[f64], bias: f64, xs: &[Vec<f64>], ys: &[f64]) -> (f64, Vec<f64>, f64) {
    let n = xs.len() as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let z: f64 = weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + bias;
        // -y ln σ(z) - (1-y) ln σ(-z) written with softplus for stability.
        loss += y * crate::skipgram::softplus(-z) + (1.0 - y) * crate::skipgram::softplus(z);
        let r = sigmoid(z) - y;
        for (g, v) in gw.iter_mut().zip(x) {
            *g += r * v;
        }
        gb += r;
    }
    gw.iter_mut().for_each(|g| *g /= n);
    (loss / n, gw, gb / n)
}

impl DenseClassifier {
    /// Untrained model with identity standardisation.
    pub fn zeros(dim: usize) -> Self {
        DenseClassifier {
            weights: vec![0.0; dim],
            bias: 0.0,
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn standardize(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(v.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| (x - m) / s)
            .collect())
    }

    /// Probability of the fake class.
    pub fn probability(&self, v: &[f64]) -> Result<f64> {
        let x = self.standardize(v)?;
        let z: f64 = self.weights.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>() + self.bias;
        Ok(sigmoid(z))
    }

    pub fn predict(&self, v: &[f64]) -> Result<(f64, Label)> {
        let p = self.probability(v)?;
        Ok((p, Label::from_fake(p >= 0.5)))
    }

    /// SGD on binary cross-entropy over standardised inputs, visiting the
    /// examples in a fresh shuffled order every epoch.
    pub fn train(train: &[ArticleVector], params: &ClassifierParams) -> Result<Self> {
        let first = train.first().ok_or(Error::SingleClass)?;
        let dim = first.vec.len();
        if train.iter().any(|a| a.vec.len() != dim) {
            return Err(Error::invalid("article vectors differ in dimension"));
        }
        let n_fake = train.iter().filter(|a| a.label.is_fake()).count();
        if n_fake == 0 || n_fake == train.len() {
            return Err(Error::SingleClass);
        }
        let n = train.len() as f64;
        let mut mean = vec![0.0; dim];
        for a in train {
            for (m, x) in mean.iter_mut().zip(&a.vec) {
                *m += x / n;
            }
        }
        let mut scale = vec![0.0; dim];
        for a in train {
            for ((s, x), m) in scale.iter_mut().zip(&a.vec).zip(&mean) {
                *s += (x - m) * (x - m) / n;
            }
        }
        for s in &mut scale {
            *s = if *s > 1e-24 { s.sqrt() } else { 1.0 };
        }
        let mut model = DenseClassifier {
            weights: vec![0.0; dim],
            bias: 0.0,
            mean,
            scale,
        };
        let xs: Vec<Vec<f64>> = train
            .iter()
            .map(|a| model.standardize(&a.vec))
            .collect::<Result<_>>()?;
        let ys: Vec<f64> = train.iter().map(|a| a.label.as_target()).collect();
        let mut rng = rng_from(&[stream::CLASSIFIER, params.seed]);
        let mut order: Vec<usize> = (0..train.len()).collect();
        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let x = &xs[i];
                let z: f64 = model.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + model.bias;
                let r = sigmoid(z) - ys[i];
                for (w, v) in model.weights.iter_mut().zip(x) {
                    *w -= params.learning_rate * r * v;
                }
                model.bias -= params.learning_rate * r;
            }
        }
        if model.weights.iter().any(|w| !w.is_finite()) || !model.bias.is_finite() {
            return Err(Error::NonFinite("classifier diverged".into()));
        }
        Ok(model)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
        writeln!(w, "dim {}", self.dim())?;
        writeln!(w, "mean {}", join(&self.mean))?;
        writeln!(w, "scale {}", join(&self.scale))?;
        writeln!(w, "weights {}", join(&self.weights))?;
        writeln!(w, "bias {}", self.bias)?;
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let name = path.display().to_string();
        let reader = BufReader::new(fs::File::open(path)?);
        let mut fields: Vec<(String, Vec<f64>)> = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let mut parts = line.split_whitespace();
            let Some(key) = parts.next() else { continue };
            let values = parts
                .map(|p| p.parse::<f64>().map_err(|e| Error::parse(&name, i + 1, e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            fields.push((key.to_string(), values));
        }
        let take = |key: &str| -> Result<Vec<f64>> {
            fields
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| Error::parse(&name, 0, format!("missing `{key}`")))
        };
        let dim = take("dim")?.first().copied().unwrap_or(-1.0);
        let model = DenseClassifier {
            mean: take("mean")?,
            scale: take("scale")?,
            weights: take("weights")?,
            bias: take("bias")?.first().copied().unwrap_or(f64::NAN),
        };
        let d = model.weights.len();
        if dim != d as f64 || model.mean.len() != d || model.scale.len() != d {
            return Err(Error::parse(&name, 0, "inconsistent dimensions"));
        }
        if !model.bias.is_finite() {
            return Err(Error::parse(&name, 0, "bad bias"));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;
    use rand::{Rng as _, SeedableRng};

    fn table(n: usize, missing: &[usize]) -> UserTable {
        let mut t = UserTable::new();
        for i in 0..n {
            if missing.contains(&i) {
                t.intern_missing(&format!("u{i}"));
            } else {
                t.intern(&format!("u{i}"));
            }
        }
        t
    }

    fn article(users: Vec<usize>) -> NewsArticle {
        NewsArticle {
            article_id: "a".into(),
            label: Label::Fake,
            text: None,
            tweets: vec![],
            engaged_users: users,
        }
    }

    fn emb(rows: &[[f64; 2]]) -> EmbeddingMatrix {
        EmbeddingMatrix::from_values(
            EmbeddingMatrix::index_ids(rows.len()),
            2,
            rows.iter().flatten().copied().collect(),
        )
        .unwrap()
    }

    #[test]
    fn aggregate_examples() {
        let e = emb(&[[0.2, -0.1], [1.0, 1.0], [9.0, 9.0]]);
        let t = table(3, &[2]);
        assert_eq!(aggregate_article(&article(vec![0]), &e, &t).unwrap().vec, vec![0.2, -0.1]);
        assert_eq!(aggregate_article(&article(vec![]), &e, &t).unwrap().vec, vec![0.0, 0.0]);
        assert_eq!(aggregate_article(&article(vec![1, 2]), &e, &t).unwrap().vec, vec![0.0, 0.0]);
        assert!(matches!(
            aggregate_article(&article(vec![7]), &e, &t),
            Err(Error::UnknownUser(_))
        ));
    }

    proptest! {
        #[test]
        fn aggregate_is_additive(values in proptest::collection::vec(-5.0f64..5.0, 20), split in 0usize..10) {
            let e = EmbeddingMatrix::from_values(EmbeddingMatrix::index_ids(10), 2, values).unwrap();
            let t = table(10, &[3]);
            let all: Vec<usize> = (0..10).collect();
            let whole = aggregate_article(&article(all.clone()), &e, &t).unwrap().vec;
            let a = aggregate_article(&article(all[..split].to_vec()), &e, &t).unwrap().vec;
            let b = aggregate_article(&article(all[split..].to_vec()), &e, &t).unwrap().vec;
            let mut rev = all.clone();
            rev.reverse();
            let reversed = aggregate_article(&article(rev), &e, &t).unwrap().vec;
            for k in 0..2 {
                prop_assert!((whole[k] - a[k] - b[k]).abs() < 1e-9);
                prop_assert!((whole[k] - reversed[k]).abs() < 1e-9);
            }
        }
    }

    fn vecs(points: &[([f64; 2], Label)]) -> Vec<ArticleVector> {
        points
            .iter()
            .enumerate()
            .map(|(i, (v, l))| ArticleVector {
                article_id: format!("a{i}"),
                vec: v.to_vec(),
                label: *l,
            })
            .collect()
    }

    fn toy() -> Vec<ArticleVector> {
        vecs(&[
            ([0.0, 0.0], Label::Factual),
            ([1.0, 0.2], Label::Factual),
            ([3.0, 2.5], Label::Fake),
            ([4.0, 3.0], Label::Fake),
        ])
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let data = toy();
        let model = DenseClassifier::train(&data, &ClassifierParams { epochs: 500, learning_rate: 0.1, seed: 1 }).unwrap();
        for a in &data {
            assert_eq!(model.predict(&a.vec).unwrap().1, a.label);
        }
    }

    #[test]
    fn zero_epochs_constant_output() {
        let model = DenseClassifier::train(&toy(), &ClassifierParams { epochs: 0, ..Default::default() }).unwrap();
        for a in toy() {
            assert_eq!(model.probability(&a.vec).unwrap(), sigmoid(0.0));
        }
    }

    #[test]
    fn single_class_rejected() {
        let data = vecs(&[([0.0, 0.0], Label::Fake), ([1.0, 0.0], Label::Fake)]);
        assert!(matches!(DenseClassifier::train(&data, &ClassifierParams::default()), Err(Error::SingleClass)));
        assert!(matches!(DenseClassifier::train(&[], &ClassifierParams::default()), Err(Error::SingleClass)));
    }

    #[test]
    fn predict_examples() {
        let mut m = DenseClassifier::zeros(2);
        assert_eq!(m.probability(&[3.0, -8.0]).unwrap(), 0.5);
        m.weights = vec![10.0, 0.0];
        let p = m.probability(&[1.0, 0.0]).unwrap();
        assert!((p - 1.0 / (1.0 + (-10.0f64).exp())).abs() < 1e-15);
        assert!((p - 0.99995).abs() < 1e-5);
        assert!(m.probability(&[2.0, 0.0]).unwrap() > p);
        assert!(matches!(m.probability(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn duplicating_data_keeps_objective() {
        let mut rng = Rng::seed_from_u64(3);
        for _ in 0..20 {
            let xs: Vec<Vec<f64>> = (0..6).map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            let ys: Vec<f64> = (0..6).map(|i| (i % 2) as f64).collect();
            let w: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = rng.gen_range(-1.0..1.0);
            let (l1, g1, b1) = logistic_loss_grad(&w, b, &xs, &ys);
            let xs2: Vec<Vec<f64>> = xs.iter().chain(&xs).cloned().collect();
            let ys2: Vec<f64> = ys.iter().chain(&ys).copied().collect();
            let (l2, g2, b2) = logistic_loss_grad(&w, b, &xs2, &ys2);
            assert!((l1 - l2).abs() < 1e-12);
            assert!((b1 - b2).abs() < 1e-12);
            for (a, c) in g1.iter().zip(&g2) {
                assert!((a - c).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = Rng::seed_from_u64(9);
        let h = 1e-6;
        for _ in 0..100 {
            let d = rng.gen_range(1..6);
            let n = rng.gen_range(1..8);
            let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            let ys: Vec<f64> = (0..n).map(|_| rng.gen_range(0..2) as f64).collect();
            let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = rng.gen_range(-1.0..1.0);
            let (_, gw, gb) = logistic_loss_grad(&w, b, &xs, &ys);
            let rel = |a: f64, f: f64| (a - f).abs() / a.abs().max(f.abs()).max(1e-6);
            for k in 0..d {
                let mut wp = w.clone();
                wp[k] += h;
                let mut wm = w.clone();
                wm[k] -= h;
                let fd = (logistic_loss_grad(&wp, b, &xs, &ys).0 - logistic_loss_grad(&wm, b, &xs, &ys).0) / (2.0 * h);
                assert!(rel(gw[k], fd) < 1e-5, "{} vs {}", gw[k], fd);
            }
            let fd = (logistic_loss_grad(&w, b + h, &xs, &ys).0 - logistic_loss_grad(&w, b - h, &xs, &ys).0) / (2.0 * h);
            assert!(rel(gb, fd) < 1e-5);
        }
    }

    #[test]
    fn model_file_round_trip() {
        let model = DenseClassifier::train(&toy(), &ClassifierParams::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clf.txt");
        model.write(&path).unwrap();
        assert_eq!(DenseClassifier::read(&path).unwrap(), model);
        fs::write(&path, "dim 2\nmean 0 0\nscale 1\nweights 0 0\nbias 0\n").unwrap();
        assert!(DenseClassifier::read(&path).is_err());
    }

    #[test]
    fn training_deterministic() {
        let p = ClassifierParams { seed: 4, ..Default::default() };
        assert_eq!(DenseClassifier::train(&toy(), &p).unwrap(), DenseClassifier::train(&toy(), &p).unwrap());
    }
}
