use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use netnews::analysis::{
    article_pair_groups, cev, engaged_user_groups, pca_fit, project2d, random_embeddings, write_projection,
    FACTUAL_ONLY, FAKE_ENGAGED,
};
use netnews::dataset::{read_articles, Dataset, NewsArticle};
use netnews::eval::{disagreements, make_splits, mcnemar, write_report, Metrics, SplitPlan};
use netnews::gnn::{FeatureMode, NodeFeatures};
use netnews::graph::{degree_stats, read_edge_list, DegreeStats, Direction};
use netnews::newsmodel::ClassifierParams;
use netnews::pipeline::{
    classify_with_embeddings, embed_users, read_predictions, text_baseline, write_predictions, EmbedConfig,
    EmbedMethod, RunResult,
};
use netnews::synth::{generate, SyntheticSpec};
use netnews::text::SvmParams;
use netnews::EmbeddingMatrix;

use crate::{
    AnalyzeArgs, BaselineArgs, Cli, Command, EmbedArgs, EmbeddingFormat, ExperimentArgs, FeatureArg, Globals,
    IngestArgs, SweepArgs, SynthArgs,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(netnews::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Data(e) => write!(f, "{e}"),
        }
    }
}

impl From<netnews::Error> for CliError {
    fn from(e: netnews::Error) -> Self {
        match e {
            netnews::Error::InvalidArgument(msg) => CliError::Usage(msg),
            other => CliError::Data(other),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(e.into())
    }
}

type CliResult<T> = Result<T, CliError>;

pub fn run(cli: Cli) -> CliResult<()> {
    let g = &cli.globals;
    if g.threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(g.threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    match &cli.command {
        Command::Ingest(a) => ingest(g, a),
        Command::Synth(a) => synth(g, a),
        Command::Embed(a) => embed(g, a),
        Command::Experiment(a) => experiment(g, a),
        Command::Analyze(a) => analyze(g, a),
        Command::Baseline(a) => baseline(g, a),
    }
}

/// Resolved configuration of one run, written as `manifest.txt`. Keys are
/// flag names, so the file can be passed back through `--config`.
struct Manifest {
    command: &'static str,
    entries: Vec<(String, String)>,
}

impl Manifest {
    fn new(command: &'static str, g: &Globals) -> Self {
        let mut m = Manifest {
            command,
            entries: Vec::new(),
        };
        m.set("seed", g.seed);
        m.set("threads", g.threads);
        m
    }

    fn set(&mut self, key: &str, value: impl fmt::Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    fn set_path(&mut self, key: &str, path: &Path) {
        let abs = fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf());
        self.set(key, abs.display());
    }

    fn set_list<T: fmt::Display>(&mut self, key: &str, values: &[T]) {
        let joined: Vec<String> = values.iter().map(T::to_string).collect();
        self.set(key, joined.join(","));
    }

    fn write(&self, dir: &Path) -> CliResult<()> {
        let mut w = BufWriter::new(fs::File::create(dir.join("manifest.txt"))?);
        writeln!(w, "# netnews {} {}", env!("CARGO_PKG_VERSION"), self.command)?;
        for (k, v) in &self.entries {
            writeln!(w, "{k}={v}")?;
        }
        w.flush()?;
        Ok(())
    }
}

fn require_file(path: &Path, what: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{what} file {} does not exist", path.display())))
    }
}

fn require_dir(path: &Path, what: &str) -> CliResult<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{what} directory {} does not exist", path.display())))
    }
}

/// Creates `dir`, refusing to reuse a non-empty one without `--force`.
fn prepare_out(dir: &Path, force: bool) -> CliResult<()> {
    if dir.exists() {
        if !dir.is_dir() {
            return Err(CliError::Usage(format!("output {} is not a directory", dir.display())));
        }
        if !force && fs::read_dir(dir)?.next().is_some() {
            return Err(CliError::Usage(format!(
                "output directory {} is not empty; pass --force to overwrite",
                dir.display()
            )));
        }
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

fn load_dataset(dir: &Path) -> CliResult<Dataset> {
    require_dir(dir, "dataset")?;
    Ok(Dataset::load_bundle(dir)?)
}

fn load_embedding(path: &Path, dataset: &Dataset) -> CliResult<EmbeddingMatrix> {
    require_file(path, "embedding")?;
    Ok(EmbeddingMatrix::read(path)?.align_to(&dataset.users)?)
}

fn ingest(g: &Globals, a: &IngestArgs) -> CliResult<()> {
    require_file(&a.edges, "edges")?;
    require_file(&a.articles, "articles")?;
    let edges = read_edge_list(&a.edges)?;
    let records = read_articles(&a.articles)?;
    let dataset = Dataset::assemble(&edges, &records, a.min_edges)?;
    prepare_out(&a.out, g.force)?;
    dataset.save_bundle(&a.out)?;
    write_report(&a.out.join("stats.txt"), &dataset_stats(&dataset)?)?;
    write_article_index(&a.out.join("article_index.tsv"), &dataset)?;

    let mut m = Manifest::new("ingest", g);
    m.set_path("edges", &a.edges);
    m.set_path("articles", &a.articles);
    m.set("min_edges", a.min_edges);
    m.set_path("out", &a.out);
    m.write(&a.out)
}

fn push_degree_stats(out: &mut Vec<(String, String)>, prefix: &str, s: &DegreeStats) {
    let fields = [
        ("avg", s.avg),
        ("max", s.max),
        ("std", s.std),
        ("p25", s.p25),
        ("p50", s.p50),
        ("p75", s.p75),
    ];
    for (name, v) in fields {
        out.push((format!("{prefix}_{name}"), v.to_string()));
    }
    out.push((format!("{prefix}_over_cap"), s.count_over_cap.to_string()));
}

/// Counts plus per-user followers / following / friends summaries.
fn dataset_stats(ds: &Dataset) -> CliResult<Vec<(String, String)>> {
    let friendship = ds.friendship();
    let missing = (0..ds.n_users()).filter(|&u| ds.users.is_missing(u)).count();
    let fake = ds.articles.iter().filter(|a| a.label.is_fake()).count();
    let mut out: Vec<(String, String)> = vec![
        ("users".into(), ds.n_users().to_string()),
        ("missing_users".into(), missing.to_string()),
        ("follow_edges".into(), ds.follow.n_edges().to_string()),
        ("friendship_edges".into(), friendship.n_edges().to_string()),
        ("articles".into(), ds.articles.len().to_string()),
        ("fake_articles".into(), fake.to_string()),
    ];
    push_degree_stats(&mut out, "followers", &degree_stats(&ds.follow, Direction::In)?);
    push_degree_stats(&mut out, "following", &degree_stats(&ds.follow, Direction::Out)?);
    push_degree_stats(&mut out, "friends", &degree_stats(&friendship, Direction::Out)?);
    Ok(out)
}

fn write_article_index(path: &Path, ds: &Dataset) -> CliResult<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "article_id\tlabel\tengaged\tobserved")?;
    for a in &ds.articles {
        let observed = a.engaged_users.iter().filter(|&&u| !ds.users.is_missing(u)).count();
        writeln!(w, "{}\t{}\t{}\t{}", a.article_id, a.label, a.engaged_users.len(), observed)?;
    }
    w.flush()?;
    Ok(())
}

fn synth(g: &Globals, a: &SynthArgs) -> CliResult<()> {
    let d = SyntheticSpec::default();
    let spec = SyntheticSpec {
        n_users: a.users.unwrap_or(d.n_users),
        n_communities: a.communities.unwrap_or(d.n_communities),
        p_in: a.p_in.unwrap_or(d.p_in),
        p_out: a.p_out.unwrap_or(d.p_out),
        n_articles: a.articles.unwrap_or(d.n_articles),
        fake_fraction: a.fake_fraction.unwrap_or(d.fake_fraction),
        homophily: a.homophily.unwrap_or(d.homophily),
        engagers_min: a.engagers_min.unwrap_or(d.engagers_min),
        engagers_max: a.engagers_max.unwrap_or(d.engagers_max),
        seed: g.seed,
        cross_noise: a.cross_noise.unwrap_or(d.cross_noise),
        text_noise: a.text_noise.unwrap_or(d.text_noise),
        tokens_per_article: a.tokens_per_article.unwrap_or(d.tokens_per_article),
        tokens_per_tweet: a.tokens_per_tweet.unwrap_or(d.tokens_per_tweet),
    };
    let data = generate(&spec)?;
    prepare_out(&a.out, g.force)?;
    data.emit(&a.out)?;

    let mut m = Manifest::new("synth", g);
    m.set("users", spec.n_users);
    m.set("communities", spec.n_communities);
    m.set("p_in", spec.p_in);
    m.set("p_out", spec.p_out);
    m.set("articles", spec.n_articles);
    m.set("fake_fraction", spec.fake_fraction);
    m.set("homophily", spec.homophily);
    m.set("engagers_min", spec.engagers_min);
    m.set("engagers_max", spec.engagers_max);
    m.set("cross_noise", spec.cross_noise);
    m.set("text_noise", spec.text_noise);
    m.set("tokens_per_article", spec.tokens_per_article);
    m.set("tokens_per_tweet", spec.tokens_per_tweet);
    m.set_path("out", &a.out);
    m.write(&a.out)
}

fn embed_config(g: &Globals, a: &EmbedArgs) -> EmbedConfig {
    let mut cfg = EmbedConfig::new(a.method, a.network, g.seed);
    if let Some(v) = a.walks_per_node {
        cfg.walks.walks_per_node = v;
    }
    if let Some(v) = a.walk_length {
        cfg.walks.max_len = v;
    }
    if let Some(v) = a.walk_direction {
        cfg.walks.direction_mode = v;
    }
    if let Some(v) = a.window {
        cfg.skipgram.window = v;
        cfg.gnn.window = v;
    }
    if let Some(v) = a.negatives {
        cfg.skipgram.negatives_per_pair = v;
        cfg.gnn.negatives = v;
    }
    let deepwalk = a.method == EmbedMethod::DeepWalk;
    if let Some(v) = a.dim {
        if deepwalk {
            cfg.skipgram.dim = v;
        } else {
            cfg.gnn.out_dim = v;
        }
    }
    if let Some(v) = a.epochs {
        if deepwalk {
            cfg.skipgram.epochs = v;
        } else {
            cfg.gnn.epochs = v;
        }
    }
    if let Some(v) = a.learning_rate {
        if deepwalk {
            cfg.skipgram.learning_rate = v;
        } else {
            cfg.gnn.learning_rate = v;
        }
    }
    if let Some(v) = a.min_learning_rate {
        cfg.skipgram.min_learning_rate = v;
    }
    if let Some(v) = a.hidden_dim {
        cfg.gnn.hidden_dim = v;
    }
    if let Some(v) = a.layers {
        cfg.gnn.layers = v;
    }
    if let Some(v) = a.features {
        cfg.gnn.features.mode = match v {
            FeatureArg::Lookup => FeatureMode::TrainableLookup,
            FeatureArg::Degree => FeatureMode::DegreeBuckets,
        };
    }
    if let Some(v) = a.feature_dim {
        cfg.gnn.features = NodeFeatures {
            dim: v,
            ..cfg.gnn.features
        };
    }
    if let Some(v) = a.batch_size {
        cfg.gnn.batch_size = v;
    }
    if let Some(v) = &a.sample_sizes {
        cfg.gnn.sample_sizes = v.clone();
    }
    if let Some(v) = a.partitions {
        cfg.gnn.n_partitions = v;
    }
    cfg
}

fn embed(g: &Globals, a: &EmbedArgs) -> CliResult<()> {
    let dataset = load_dataset(&a.dataset)?;
    let cfg = embed_config(g, a);
    prepare_out(&a.out, g.force)?;
    let emb = embed_users(&dataset, &cfg)?;
    let file = match a.format {
        EmbeddingFormat::Text => "embedding.txt",
        EmbeddingFormat::Binary => "embedding.bin",
    };
    emb.write(&a.out.join(file))?;

    let mut m = Manifest::new("embed", g);
    m.set_path("dataset", &a.dataset);
    m.set("method", cfg.method);
    m.set("network", cfg.network);
    m.set("format", if a.format == EmbeddingFormat::Text { "text" } else { "binary" });
    m.set("walks_per_node", cfg.walks.walks_per_node);
    m.set("walk_length", cfg.walks.max_len);
    m.set("walk_direction", cfg.walks.direction_mode);
    m.set("dim", cfg.dim());
    if a.method == EmbedMethod::DeepWalk {
        let p = &cfg.skipgram;
        m.set("window", p.window);
        m.set("negatives", p.negatives_per_pair);
        m.set("epochs", p.epochs);
        m.set("learning_rate", p.learning_rate);
        m.set("min_learning_rate", p.min_learning_rate);
    } else {
        let p = &cfg.gnn;
        m.set("window", p.window);
        m.set("negatives", p.negatives);
        m.set("epochs", p.epochs);
        m.set("learning_rate", p.learning_rate);
        m.set("hidden_dim", p.hidden_dim);
        m.set("layers", p.layers);
        m.set(
            "features",
            match p.features.mode {
                FeatureMode::TrainableLookup => "lookup",
                FeatureMode::DegreeBuckets => "degree",
            },
        );
        m.set("feature_dim", p.features.dim);
        m.set("batch_size", p.batch_size);
        m.set_list("sample_sizes", &p.sample_sizes);
        m.set("partitions", p.n_partitions);
    }
    m.set_path("out", &a.out);
    m.write(&a.out)
}

struct SweepRow {
    fraction: f64,
    seed: u64,
    metrics: Metrics,
}

fn sweep_seeds(g: &Globals, s: &SweepArgs) -> Vec<u64> {
    s.seeds.clone().unwrap_or_else(|| vec![g.seed])
}

/// Runs `fit` for every fraction and seed, writing splits, predictions,
/// `metrics.csv` (one row per run) and `summary.csv` (one row per fraction).
fn run_sweep(
    out: &Path,
    articles: &[NewsArticle],
    fractions: &[f64],
    seeds: &[u64],
    mut fit: impl FnMut(&SplitPlan, u64) -> netnews::Result<RunResult>,
) -> CliResult<()> {
    if fractions.is_empty() || seeds.is_empty() {
        return Err(CliError::Usage("need at least one fraction and one seed".into()));
    }
    let splits = out.join("splits");
    let preds = out.join("predictions");
    fs::create_dir_all(&splits)?;
    fs::create_dir_all(&preds)?;
    let mut rows = Vec::new();
    for &fraction in fractions {
        for &seed in seeds {
            let plan = make_splits(articles, fraction, seed)?;
            let tag = format!("f{fraction}_s{seed}");
            plan.write(&splits.join(format!("{tag}.tsv")))?;
            let result = fit(&plan, seed)?;
            write_predictions(&preds.join(format!("{tag}.csv")), &result.predictions)?;
            rows.push(SweepRow {
                fraction,
                seed,
                metrics: result.metrics,
            });
        }
    }
    write_metrics(&out.join("metrics.csv"), &rows)?;
    write_summary(&out.join("summary.csv"), fractions, &rows)
}

fn write_metrics(path: &Path, rows: &[SweepRow]) -> CliResult<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "fraction,seed,n_test,accuracy,precision,recall,f1,auc")?;
    for r in rows {
        let m = &r.metrics;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.fraction,
            r.seed,
            m.n(),
            m.accuracy,
            m.macro_precision,
            m.macro_recall,
            m.macro_f1,
            m.auc
        )?;
    }
    w.flush()?;
    Ok(())
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn write_summary(path: &Path, fractions: &[f64], rows: &[SweepRow]) -> CliResult<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(
        w,
        "fraction,runs,accuracy_mean,accuracy_std,precision_mean,recall_mean,f1_mean,f1_std,auc_mean,auc_std"
    )?;
    for &f in fractions {
        let group: Vec<&Metrics> = rows.iter().filter(|r| r.fraction == f).map(|r| &r.metrics).collect();
        let col = |get: fn(&Metrics) -> f64| mean_std(&group.iter().map(|m| get(m)).collect::<Vec<_>>());
        let acc = col(|m| m.accuracy);
        let f1 = col(|m| m.macro_f1);
        let auc = col(|m| m.auc);
        writeln!(
            w,
            "{f},{},{},{},{},{},{},{},{},{}",
            group.len(),
            acc.0,
            acc.1,
            col(|m| m.macro_precision).0,
            col(|m| m.macro_recall).0,
            f1.0,
            f1.1,
            auc.0,
            auc.1
        )?;
    }
    w.flush()?;
    Ok(())
}

fn experiment(g: &Globals, a: &ExperimentArgs) -> CliResult<()> {
    if a.embedding.is_none() && a.compare.len() < 2 {
        return Err(CliError::Usage(
            "experiment needs --embedding, or at least two --compare prediction files".into(),
        ));
    }
    if a.compare.len() == 1 {
        return Err(CliError::Usage("--compare needs at least two prediction files".into()));
    }
    for p in &a.compare {
        require_file(p, "prediction")?;
    }
    let dataset = load_dataset(&a.dataset)?;
    let emb = a.embedding.as_deref().map(|p| load_embedding(p, &dataset)).transpose()?;
    prepare_out(&a.out, g.force)?;
    let seeds = sweep_seeds(g, &a.sweep);

    let mut m = Manifest::new("experiment", g);
    m.set_path("dataset", &a.dataset);
    if let (Some(emb), Some(path)) = (&emb, &a.embedding) {
        run_sweep(&a.out, &dataset.articles, &a.sweep.fractions, &seeds, |plan, seed| {
            let params = ClassifierParams {
                epochs: a.epochs,
                learning_rate: a.learning_rate,
                seed,
            };
            classify_with_embeddings(&dataset, emb, plan, &params)
        })?;
        m.set_path("embedding", path);
        m.set_list("fractions", &a.sweep.fractions);
        m.set_list("seeds", &seeds);
        m.set("epochs", a.epochs);
        m.set("learning_rate", a.learning_rate);
    }
    if !a.compare.is_empty() {
        write_mcnemar(&a.out.join("mcnemar.csv"), &dataset, &a.compare)?;
        let abs: Vec<String> = a
            .compare
            .iter()
            .map(|p| fs::canonicalize(p).unwrap_or_else(|_| p.clone()).display().to_string())
            .collect();
        m.set_list("compare", &abs);
    }
    m.set_path("out", &a.out);
    m.write(&a.out)
}

/// Pairwise McNemar over the articles both files predict.
fn write_mcnemar(path: &Path, dataset: &Dataset, files: &[PathBuf]) -> CliResult<()> {
    let loaded = files
        .iter()
        .map(|p| read_predictions(p))
        .collect::<netnews::Result<Vec<_>>>()?;
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "first,second,n,first_only_correct,second_only_correct,statistic,p_value")?;
    for i in 0..files.len() {
        for j in i + 1..files.len() {
            let (mut truth, mut xs, mut ys) = (Vec::new(), Vec::new(), Vec::new());
            for p in &loaded[i] {
                if let Some(q) = loaded[j].iter().find(|q| q.article_id == p.article_id) {
                    truth.push(dataset.article(&p.article_id)?.label);
                    xs.push(p.label);
                    ys.push(q.label);
                }
            }
            if truth.is_empty() {
                return Err(CliError::Data(netnews::Error::InvalidArgument(format!(
                    "{} and {} share no articles",
                    files[i].display(),
                    files[j].display()
                ))));
            }
            let (b, c) = disagreements(&truth, &xs, &ys)?;
            let (stat, p) = mcnemar(b, c)?;
            writeln!(
                w,
                "{},{},{},{b},{c},{stat},{p}",
                files[i].display(),
                files[j].display(),
                truth.len()
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

fn analyze(g: &Globals, a: &AnalyzeArgs) -> CliResult<()> {
    let dataset = load_dataset(&a.dataset)?;
    let emb = load_embedding(&a.embedding, &dataset)?;
    let groups = match a.articles.as_deref() {
        Some([first, second]) => article_pair_groups(&dataset, &emb, first, second)?,
        Some(_) => return Err(CliError::Usage("--articles takes exactly two ids".into())),
        None => engaged_user_groups(&dataset, &emb),
    };
    let n = groups.len();
    let d = emb.dim();
    if n < 3 || d < 2 {
        return Err(CliError::Data(netnews::Error::InvalidArgument(format!(
            "analysis needs at least 3 embedded users and 2 dimensions, got {n} users of dim {d}"
        ))));
    }
    let k = a.k.min(d).min(n - 1);
    let rows: Vec<&[f64]> = groups.iter().map(|&(u, _)| emb.row(u)).collect();
    let tags: Vec<String> = groups.iter().map(|(_, t)| t.clone()).collect();
    let model = pca_fit(&rows, k.max(2))?;
    let trained = cev(&model, k)?;
    let control = random_embeddings(n, d, g.seed);
    let control_rows: Vec<&[f64]> = (0..n).map(|i| control.row(i)).collect();
    let random = cev(&pca_fit(&control_rows, k)?, k)?;

    prepare_out(&a.out, g.force)?;
    write_projection(&a.out.join("projection.csv"), &project2d(&model, &rows, &tags)?)?;
    let mut report: Vec<(String, String)> = vec![
        ("k_requested".into(), a.k.to_string()),
        ("k".into(), k.to_string()),
        ("users".into(), n.to_string()),
        ("dim".into(), d.to_string()),
        ("cev_trained".into(), trained.to_string()),
        ("cev_random".into(), random.to_string()),
    ];
    let mut names: Vec<&str> = match a.articles.as_deref() {
        Some(_) => tags.iter().map(String::as_str).collect(),
        None => vec![FAKE_ENGAGED, FACTUAL_ONLY],
    };
    names.sort_unstable();
    names.dedup();
    for name in names {
        let count = tags.iter().filter(|t| *t == name).count();
        report.push((format!("group.{name}"), count.to_string()));
    }
    write_report(&a.out.join("cev.txt"), &report)?;

    let mut m = Manifest::new("analyze", g);
    m.set_path("dataset", &a.dataset);
    m.set_path("embedding", &a.embedding);
    m.set("k", a.k);
    if let Some(ids) = &a.articles {
        m.set_list("articles", ids);
    }
    m.set_path("out", &a.out);
    m.write(&a.out)
}

fn baseline(g: &Globals, a: &BaselineArgs) -> CliResult<()> {
    let dataset = load_dataset(&a.dataset)?;
    prepare_out(&a.out, g.force)?;
    let seeds = sweep_seeds(g, &a.sweep);
    run_sweep(&a.out, &dataset.articles, &a.sweep.fractions, &seeds, |plan, seed| {
        let svm = SvmParams {
            c: a.c,
            gamma: a.gamma,
            seed,
            ..SvmParams::default()
        };
        text_baseline(&dataset.articles, plan, a.classifier, &svm)
    })?;

    let mut m = Manifest::new("baseline", g);
    m.set_path("dataset", &a.dataset);
    m.set(
        "classifier",
        match a.classifier {
            netnews::pipeline::TextClassifier::Svm => "svm",
            netnews::pipeline::TextClassifier::Logistic => "logistic",
        },
    );
    m.set_list("fractions", &a.sweep.fractions);
    m.set_list("seeds", &seeds);
    m.set("c", a.c);
    m.set("gamma", a.gamma);
    m.set_path("out", &a.out);
    m.write(&a.out)
}
