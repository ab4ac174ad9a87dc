//! End-to-end glue: embed users, vectorise articles, split, train, score.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::dataset::{Dataset, Label, Network, NewsArticle};
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::eval::{compute_metrics, make_splits, Metrics, Role, SplitPlan};
use crate::gnn::{train_gnn, GnnParams, Variant};
use crate::newsmodel::{aggregate_all, ArticleVector, ClassifierParams, DenseClassifier};
use crate::skipgram::{train_deepwalk, SgParams};
use crate::text::{svm_train, tokenize, SparseLogistic, SvmParams, TfidfModel, MAX_VOCAB};
use crate::walks::{generate_walks, WalkParams};

/// Users with fewer follower-graph edges are dropped unless engaged.
pub const DEFAULT_MIN_EDGES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedMethod {
    DeepWalk,
    Sage,
    ClusterGcn,
}

impl FromStr for EmbedMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deepwalk" => Ok(EmbedMethod::DeepWalk),
            "sage" => Ok(EmbedMethod::Sage),
            "cgcn" => Ok(EmbedMethod::ClusterGcn),
            other => Err(Error::invalid(format!("unknown method `{other}` (deepwalk, sage, cgcn)"))),
        }
    }
}

impl fmt::Display for EmbedMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmbedMethod::DeepWalk => "deepwalk",
            EmbedMethod::Sage => "sage",
            EmbedMethod::ClusterGcn => "cgcn",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbedConfig {
    pub method: EmbedMethod,
    pub network: Network,
    pub walks: WalkParams,
    pub skipgram: SgParams,
    pub gnn: GnnParams,
}

impl EmbedConfig {
    /// Defaults for `method`, with every stage seeded from `seed`.
    pub fn new(method: EmbedMethod, network: Network, seed: u64) -> Self {
        let gnn = match method {
            EmbedMethod::ClusterGcn => GnnParams::cluster_gcn(),
            _ => GnnParams::sage(),
        };
        EmbedConfig {
            method,
            network,
            walks: WalkParams { seed, ..WalkParams::default() },
            skipgram: SgParams { seed, ..SgParams::default() },
            gnn: GnnParams { seed, ..gnn },
        }
    }

    pub fn dim(&self) -> usize {
        match self.method {
            EmbedMethod::DeepWalk => self.skipgram.dim,
            _ => self.gnn.out_dim,
        }
    }

    /// Flat `key=value` description for manifests.
    pub fn describe(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("method".to_string(), self.method.to_string()),
            ("network".to_string(), self.network.to_string()),
            ("walks_per_node".to_string(), self.walks.walks_per_node.to_string()),
            ("walk_length".to_string(), self.walks.max_len.to_string()),
            ("walk_direction".to_string(), self.walks.direction_mode.to_string()),
            ("walk_seed".to_string(), self.walks.seed.to_string()),
        ];
        match self.method {
            EmbedMethod::DeepWalk => {
                let p = &self.skipgram;
                out.extend([
                    ("dim".into(), p.dim.to_string()),
                    ("window".into(), p.window.to_string()),
                    ("negatives".into(), p.negatives_per_pair.to_string()),
                    ("epochs".into(), p.epochs.to_string()),
                    ("learning_rate".into(), p.learning_rate.to_string()),
                    ("min_learning_rate".into(), p.min_learning_rate.to_string()),
                    ("train_seed".into(), p.seed.to_string()),
                ]);
            }
            _ => {
                let p = &self.gnn;
                out.extend([
                    ("dim".into(), p.out_dim.to_string()),
                    ("hidden_dim".into(), p.hidden_dim.to_string()),
                    ("layers".into(), p.layers.to_string()),
                    ("feature_dim".into(), p.features.dim.to_string()),
                    ("epochs".into(), p.epochs.to_string()),
                    ("learning_rate".into(), p.learning_rate.to_string()),
                    ("batch_size".into(), p.batch_size.to_string()),
                    ("window".into(), p.window.to_string()),
                    ("negatives".into(), p.negatives.to_string()),
                    (
                        "sample_sizes".into(),
                        p.sample_sizes.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
                    ),
                    ("partitions".into(), p.n_partitions.to_string()),
                    ("train_seed".into(), p.seed.to_string()),
                ]);
            }
        }
        out
    }
}

/// Trains user embeddings on the chosen network. Rows follow the dataset's
/// user table; missing and isolated users get the sentinel row.
pub fn embed_users(dataset: &Dataset, config: &EmbedConfig) -> Result<EmbeddingMatrix> {
    let graph = dataset.network(config.network);
    if graph.n_nodes() == 0 {
        return Err(Error::EmptyGraph);
    }
    let corpus = generate_walks(&graph, config.walks);
    let ids = dataset.users.ids().to_vec();
    let mut emb = match config.method {
        EmbedMethod::DeepWalk => {
            let (model, _) = train_deepwalk(&corpus, &config.skipgram)?;
            model.into_embedding(ids)?
        }
        EmbedMethod::Sage => train_gnn(&graph, &corpus, config.gnn.clone(), Variant::SageMean, ids)?.0,
        EmbedMethod::ClusterGcn => {
            let params = GnnParams {
                n_partitions: config.gnn.n_partitions.min(graph.n_nodes()),
                ..config.gnn.clone()
            };
            train_gnn(&graph, &corpus, params, Variant::ClusterGcn, ids)?.0
        }
    };
    emb.mask_unobserved(&graph, &dataset.users);
    Ok(emb)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub article_id: String,
    pub probability: f64,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub metrics: Metrics,
    /// Test-set predictions in article order.
    pub predictions: Vec<Prediction>,
    pub truth: Vec<Label>,
}

fn by_role<'a, T>(items: &'a [T], ids: impl Fn(&T) -> &str, plan: &SplitPlan, role: Role) -> Vec<&'a T> {
    items.iter().filter(|x| plan.role(ids(x)) == Some(role)).collect()
}

/// Sums user embeddings per article, trains the dense classifier on the
/// training split and scores the test split.
pub fn classify_with_embeddings(
    dataset: &Dataset,
    emb: &EmbeddingMatrix,
    plan: &SplitPlan,
    params: &ClassifierParams,
) -> Result<RunResult> {
    let vectors = aggregate_all(&dataset.articles, emb, &dataset.users)?;
    let train: Vec<ArticleVector> = by_role(&vectors, |v| &v.article_id, plan, Role::Train)
        .into_iter()
        .cloned()
        .collect();
    let model = DenseClassifier::train(&train, params)?;
    let mut predictions = Vec::new();
    let mut truth = Vec::new();
    for v in by_role(&vectors, |v| &v.article_id, plan, Role::Test) {
        let (probability, label) = model.predict(&v.vec)?;
        predictions.push(Prediction {
            article_id: v.article_id.clone(),
            probability,
            label,
        });
        truth.push(v.label);
    }
    finish(predictions, truth)
}

fn finish(predictions: Vec<Prediction>, truth: Vec<Label>) -> Result<RunResult> {
    let probs: Vec<f64> = predictions.iter().map(|p| p.probability).collect();
    let metrics = compute_metrics(&truth, &probs)?;
    Ok(RunResult {
        metrics,
        predictions,
        truth,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextClassifier {
    Svm,
    Logistic,
}

impl FromStr for TextClassifier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svm" => Ok(TextClassifier::Svm),
            "logistic" => Ok(TextClassifier::Logistic),
            other => Err(Error::invalid(format!("unknown text classifier `{other}` (svm, logistic)"))),
        }
    }
}

/// TF-IDF over article text plus engaged tweets, fitted on the training
/// split only. The SVM reports `1.0` / `0.0` as probabilities.
pub fn text_baseline(
    articles: &[NewsArticle],
    plan: &SplitPlan,
    classifier: TextClassifier,
    svm: &SvmParams,
) -> Result<RunResult> {
    let train = by_role(articles, |a| &a.article_id, plan, Role::Train);
    let test = by_role(articles, |a| &a.article_id, plan, Role::Test);
    let docs = |set: &[&NewsArticle]| -> Vec<Vec<String>> { set.iter().map(|a| tokenize(&a.full_text())).collect() };
    let train_docs = docs(&train);
    let tfidf = TfidfModel::fit(&train_docs, MAX_VOCAB)?;
    let xs = tfidf.transform_all(&train_docs);
    let test_xs = tfidf.transform_all(&docs(&test));
    let probs: Vec<f64> = match classifier {
        TextClassifier::Svm => {
            let ys: Vec<i8> = train.iter().map(|a| if a.label.is_fake() { 1 } else { -1 }).collect();
            let model = svm_train(&xs, &ys, svm)?;
            test_xs.iter().map(|x| if model.predict(x) == 1 { 1.0 } else { 0.0 }).collect()
        }
        TextClassifier::Logistic => {
            let ys: Vec<f64> = train.iter().map(|a| a.label.as_target()).collect();
            let model = SparseLogistic::train(&xs, &ys, tfidf.vocab_size(), 50, 0.5, svm.seed)?;
            test_xs.iter().map(|x| model.probability(x)).collect()
        }
    };
    let predictions = test
        .iter()
        .zip(&probs)
        .map(|(a, &p)| Prediction {
            article_id: a.article_id.clone(),
            probability: p,
            label: Label::from_fake(p >= 0.5),
        })
        .collect();
    finish(predictions, test.iter().map(|a| a.label).collect())
}

/// Embedding pipeline for one training fraction and seed.
pub fn run_embedding_experiment(
    dataset: &Dataset,
    emb: &EmbeddingMatrix,
    train_fraction: f64,
    seed: u64,
) -> Result<RunResult> {
    let plan = make_splits(&dataset.articles, train_fraction, seed)?;
    let params = ClassifierParams { seed, ..ClassifierParams::default() };
    classify_with_embeddings(dataset, emb, &plan, &params)
}

/// `article_id,probability,label` rows with a header.
pub fn write_predictions(path: &Path, predictions: &[Prediction]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "article_id,probability,label")?;
    for p in predictions {
        writeln!(w, "{},{},{}", p.article_id, p.probability, p.label)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let name = path.display().to_string();
    let mut out = Vec::new();
    for (i, line) in BufReader::new(fs::File::open(path)?).lines().enumerate() {
        let line = line?;
        if i == 0 && line.starts_with("article_id") || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let [id, prob, label] = fields[..] else {
            return Err(Error::parse(&name, i + 1, "expected article_id,probability,label"));
        };
        out.push(Prediction {
            article_id: id.to_string(),
            probability: prob.parse().map_err(|_| Error::parse(&name, i + 1, "bad probability"))?,
            label: label.parse().map_err(|e: Error| Error::parse(&name, i + 1, e.to_string()))?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SyntheticSpec};

    fn small_dataset() -> Dataset {
        let spec = SyntheticSpec {
            n_users: 200,
            n_articles: 80,
            engagers_min: 8,
            engagers_max: 8,
            p_in: 0.15,
            p_out: 0.005,
            seed: 3,
            ..Default::default()
        };
        let data = generate(&spec).unwrap();
        Dataset::assemble(&data.edge_pairs(), &data.articles, DEFAULT_MIN_EDGES).unwrap()
    }

    #[test]
    fn deepwalk_pipeline_beats_chance_on_easy_data() {
        let ds = small_dataset();
        let mut config = EmbedConfig::new(EmbedMethod::DeepWalk, Network::Follower, 1);
        config.skipgram.dim = 16;
        config.walks.walks_per_node = 4;
        config.walks.max_len = 20;
        config.skipgram.window = 5;
        let emb = embed_users(&ds, &config).unwrap();
        assert_eq!(emb.dim(), 16);
        let result = run_embedding_experiment(&ds, &emb, 0.7, 0).unwrap();
        assert!(result.metrics.accuracy > 0.7, "{:?}", result.metrics);
        assert_eq!(result.predictions.len(), result.metrics.n());
    }

    #[test]
    fn text_baselines_run() {
        let ds = small_dataset();
        let plan = make_splits(&ds.articles, 0.7, 0).unwrap();
        for clf in [TextClassifier::Svm, TextClassifier::Logistic] {
            let r = text_baseline(&ds.articles, &plan, clf, &SvmParams::default()).unwrap();
            assert_eq!(r.truth.len(), plan.count(Role::Test));
        }
    }

    #[test]
    fn predictions_round_trip() {
        let preds = vec![
            Prediction { article_id: "a".into(), probability: 0.25, label: Label::Factual },
            Prediction { article_id: "b".into(), probability: 0.75, label: Label::Fake },
        ];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pred.csv");
        write_predictions(&p, &preds).unwrap();
        assert_eq!(read_predictions(&p).unwrap(), preds);
    }

    #[test]
    fn method_names() {
        for m in ["deepwalk", "sage", "cgcn"] {
            assert_eq!(m.parse::<EmbedMethod>().unwrap().to_string(), m);
        }
        assert!("node2vec".parse::<EmbedMethod>().is_err());
    }
}
