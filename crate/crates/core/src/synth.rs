//! Synthetic echo-chamber data: a directed stochastic block model for the
//! follower graph and community-biased article engagement.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::dataset::{write_articles, ArticleRecord, Label};
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::rng::{rng_from, stream, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_users: usize,
    pub n_communities: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub n_articles: usize,
    pub fake_fraction: f64,
    /// Probability that an engager of a fake article comes from community 0.
    pub homophily: f64,
    pub engagers_min: usize,
    pub engagers_max: usize,
    pub seed: u64,
    /// Extra one-directional follows: each cross-community pair with no edge
    /// gets one, in a random direction, with this probability.
    pub cross_noise: f64,
    /// Probability that an article's text topic is drawn at random instead
    /// of following its label.
    pub text_noise: f64,
    pub tokens_per_article: usize,
    pub tokens_per_tweet: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_users: 2000,
            n_communities: 2,
            p_in: 0.02,
            p_out: 0.001,
            n_articles: 400,
            fake_fraction: 0.45,
            homophily: 0.95,
            engagers_min: 20,
            engagers_max: 20,
            seed: 0,
            cross_noise: 0.0,
            text_noise: 0.5,
            tokens_per_article: 60,
            tokens_per_tweet: 8,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.n_users == 0 || self.n_communities == 0 || self.n_communities > self.n_users {
            return Err(Error::invalid("need 1 <= n_communities <= n_users"));
        }
        if !(prob(self.p_in) && prob(self.p_out) && self.p_out <= self.p_in) {
            return Err(Error::invalid("need 0 <= p_out <= p_in <= 1"));
        }
        if !(prob(self.homophily) && prob(self.fake_fraction) && prob(self.cross_noise) && prob(self.text_noise)) {
            return Err(Error::invalid("probabilities must lie in [0, 1]"));
        }
        if self.engagers_min > self.engagers_max {
            return Err(Error::invalid("engagers_min exceeds engagers_max"));
        }
        // Engagers are distinct, so fake articles with homophily 1 need that
        // many users inside community 0.
        let smallest = self.n_users / self.n_communities;
        if self.engagers_max > smallest {
            return Err(Error::invalid("engagers_max exceeds the smallest community"));
        }
        Ok(())
    }

    pub fn user_id(i: usize) -> String {
        format!("u{i}")
    }

    /// Contiguous, nearly equal blocks.
    pub fn community_of(&self, user: usize) -> usize {
        user * self.n_communities / self.n_users
    }

    pub fn members(&self, community: usize) -> std::ops::Range<usize> {
        let start = (community * self.n_users).div_ceil(self.n_communities);
        let end = ((community + 1) * self.n_users).div_ceil(self.n_communities);
        start..end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub spec: SyntheticSpec,
    pub graph: DirectedGraph,
    pub communities: Vec<usize>,
    pub articles: Vec<ArticleRecord>,
}

/// Each ordered pair `(i, j)`, `i != j`, gets an edge with probability
/// `p_in` inside a community and `p_out` across, then cross noise.
pub fn gen_graph(spec: &SyntheticSpec) -> Result<(DirectedGraph, Vec<usize>)> {
    spec.validate()?;
    let n = spec.n_users;
    let communities: Vec<usize> = (0..n).map(|i| spec.community_of(i)).collect();
    let mut rng = rng_from(&[stream::SYNTH_GRAPH, spec.seed]);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let p = if communities[i] == communities[j] { spec.p_in } else { spec.p_out };
            if p > 0.0 && rng.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    let mut graph = DirectedGraph::from_edges(n, edges.iter().copied());
    if spec.cross_noise > 0.0 {
        let mut rng = rng_from(&[stream::SYNTH_GRAPH, spec.seed, 1]);
        for i in 0..n {
            for j in (i + 1)..n {
                if communities[i] == communities[j] || graph.has_edge(i, j) || graph.has_edge(j, i) {
                    continue;
                }
                if rng.gen_bool(spec.cross_noise) {
                    edges.push(if rng.gen_bool(0.5) { (i, j) } else { (j, i) });
                }
            }
        }
        graph = DirectedGraph::from_edges(n, edges);
    }
    Ok((graph, communities))
}

struct TopicText {
    n_topics: usize,
    topic_vocab: usize,
    shared_vocab: usize,
}

impl TopicText {
    const DEFAULT: TopicText = TopicText {
        n_topics: 2,
        topic_vocab: 200,
        shared_vocab: 1000,
    };

    /// Half the tokens come from the topic's own vocabulary, half from a
    /// shared one.
    fn sample(&self, topic: usize, len: usize, rng: &mut Rng) -> String {
        let words: Vec<String> = (0..len)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    format!("t{topic}w{}", rng.gen_range(0..self.topic_vocab))
                } else {
                    format!("w{}", rng.gen_range(0..self.shared_vocab))
                }
            })
            .collect();
        words.join(" ")
    }
}

/// Labels follow `fake_fraction` (rounded); fake articles draw each engager
/// from community 0 with probability `homophily`, otherwise from one of the
/// other communities, uniformly inside the community. Factual articles draw
/// uniformly over all users. Engagers of one article are distinct.
pub fn gen_articles(spec: &SyntheticSpec, communities: &[usize]) -> Result<Vec<ArticleRecord>> {
    spec.validate()?;
    if communities.len() != spec.n_users {
        return Err(Error::DimensionMismatch {
            expected: spec.n_users,
            got: communities.len(),
        });
    }
    let mut rng = rng_from(&[stream::SYNTH_ARTICLES, spec.seed]);
    let n_fake = (spec.fake_fraction * spec.n_articles as f64).round() as usize;
    let mut labels: Vec<Label> = (0..spec.n_articles).map(|i| Label::from_fake(i < n_fake)).collect();
    labels.shuffle(&mut rng);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); spec.n_communities];
    for (u, &c) in communities.iter().enumerate() {
        members[c].push(u);
    }
    let text = TopicText::DEFAULT;
    let mut out = Vec::with_capacity(spec.n_articles);
    for (k, &label) in labels.iter().enumerate() {
        let size = rng.gen_range(spec.engagers_min..=spec.engagers_max);
        let mut engaged: Vec<usize> = Vec::with_capacity(size);
        while engaged.len() < size {
            let u = if label.is_fake() {
                let c = if spec.n_communities == 1 || rng.gen_bool(spec.homophily) {
                    0
                } else {
                    rng.gen_range(1..spec.n_communities)
                };
                members[c][rng.gen_range(0..members[c].len())]
            } else {
                rng.gen_range(0..spec.n_users)
            };
            if !engaged.contains(&u) {
                engaged.push(u);
            }
        }
        let topic = if rng.gen_bool(spec.text_noise) {
            rng.gen_range(0..text.n_topics)
        } else {
            usize::from(!label.is_fake())
        };
        let body = text.sample(topic, spec.tokens_per_article, &mut rng);
        let tweets = (0..engaged.len())
            .map(|_| text.sample(topic, spec.tokens_per_tweet, &mut rng))
            .collect();
        out.push(ArticleRecord {
            article_id: format!("a{k}"),
            label,
            text: Some(body),
            tweets,
            engaged_users: engaged.into_iter().map(SyntheticSpec::user_id).collect(),
        });
    }
    Ok(out)
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticData> {
    let (graph, communities) = gen_graph(spec)?;
    let articles = gen_articles(spec, &communities)?;
    Ok(SyntheticData {
        spec: spec.clone(),
        graph,
        communities,
        articles,
    })
}

/// Randomly permutes the labels across articles, destroying any signal.
pub fn shuffle_labels(records: &[ArticleRecord], seed: u64) -> Vec<ArticleRecord> {
    let mut labels: Vec<Label> = records.iter().map(|r| r.label).collect();
    labels.shuffle(&mut rng_from(&[stream::SHUFFLE_LABELS, seed]));
    records
        .iter()
        .zip(labels)
        .map(|(r, label)| ArticleRecord { label, ..r.clone() })
        .collect()
}

impl SyntheticData {
    /// Edge list with `u<i>` ids.
    pub fn edge_pairs(&self) -> Vec<(String, String)> {
        self.graph
            .edges()
            .map(|(s, d)| (SyntheticSpec::user_id(s), SyntheticSpec::user_id(d)))
            .collect()
    }

    /// Writes `edges.tsv`, `articles.jsonl` and `communities.tsv`.
    pub fn emit(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = BufWriter::new(fs::File::create(dir.join("edges.tsv"))?);
        for (s, d) in self.edge_pairs() {
            writeln!(w, "{s}\t{d}")?;
        }
        w.flush()?;
        write_articles(&dir.join("articles.jsonl"), &self.articles)?;
        let mut w = BufWriter::new(fs::File::create(dir.join("communities.tsv"))?);
        for (u, c) in self.communities.iter().enumerate() {
            writeln!(w, "{}\t{c}", SyntheticSpec::user_id(u))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            n_users: 200,
            n_articles: 60,
            engagers_min: 5,
            engagers_max: 10,
            p_in: 0.1,
            p_out: 0.01,
            ..Default::default()
        }
    }

    #[test]
    fn no_cross_edges_without_p_out() {
        let spec = SyntheticSpec { p_out: 0.0, ..small() };
        let (g, comm) = gen_graph(&spec).unwrap();
        assert!(g.edges().all(|(s, d)| comm[s] == comm[d]));
        assert!(g.n_edges() > 0);
    }

    #[test]
    fn complete_digraph() {
        let spec = SyntheticSpec { n_users: 7, n_communities: 1, p_in: 1.0, p_out: 0.0, engagers_max: 3, engagers_min: 1, ..small() };
        let (g, _) = gen_graph(&spec).unwrap();
        assert_eq!(g.n_edges(), 42);
    }

    #[test]
    fn edge_count_within_four_sigma() {
        for seed in 0..5 {
            let spec = SyntheticSpec { n_users: 600, n_communities: 3, seed, ..small() };
            let (g, _) = gen_graph(&spec).unwrap();
            let sizes: Vec<f64> = (0..3).map(|c| spec.members(c).len() as f64).collect();
            let intra: f64 = sizes.iter().map(|m| m * (m - 1.0)).sum();
            let total = 600.0 * 599.0;
            let cross = total - intra;
            let mean = intra * spec.p_in + cross * spec.p_out;
            let var = intra * spec.p_in * (1.0 - spec.p_in) + cross * spec.p_out * (1.0 - spec.p_out);
            assert!((g.n_edges() as f64 - mean).abs() < 4.0 * var.sqrt());
        }
    }

    #[test]
    fn members_match_community_of() {
        for (n, k) in [(10, 3), (2000, 2), (7, 7)] {
            let spec = SyntheticSpec { n_users: n, n_communities: k, engagers_max: 1, engagers_min: 1, ..small() };
            for c in 0..k {
                for u in spec.members(c) {
                    assert_eq!(spec.community_of(u), c);
                }
            }
        }
    }

    #[test]
    fn full_homophily() {
        let spec = SyntheticSpec { homophily: 1.0, ..small() };
        let (_, comm) = gen_graph(&spec).unwrap();
        let arts = gen_articles(&spec, &comm).unwrap();
        for a in arts.iter().filter(|a| a.label.is_fake()) {
            for u in &a.engaged_users {
                let idx: usize = u[1..].parse().unwrap();
                assert_eq!(comm[idx], 0);
            }
        }
        for a in &arts {
            assert!((5..=10).contains(&a.engaged_users.len()));
            let mut ids = a.engaged_users.clone();
            ids.sort();
            ids.dedup();
            assert_eq!(ids.len(), a.engaged_users.len());
        }
    }

    #[test]
    fn no_fake_articles() {
        let spec = SyntheticSpec { fake_fraction: 0.0, ..small() };
        let (_, comm) = gen_graph(&spec).unwrap();
        assert!(gen_articles(&spec, &comm).unwrap().iter().all(|a| a.label == Label::Factual));
    }

    #[test]
    fn neutral_homophily_is_uniform() {
        // 10^4 engagement draws from fake articles, tallied over 10 equal
        // user bins; chi-square with 9 dof, critical value 21.666 at 0.01.
        let spec = SyntheticSpec {
            n_users: 1000,
            n_communities: 2,
            homophily: 0.5,
            fake_fraction: 1.0,
            n_articles: 1000,
            engagers_min: 10,
            engagers_max: 10,
            ..small()
        };
        let comm: Vec<usize> = (0..1000).map(|u| spec.community_of(u)).collect();
        let arts = gen_articles(&spec, &comm).unwrap();
        let mut bins = [0f64; 10];
        let mut total = 0.0;
        for a in &arts {
            for u in &a.engaged_users {
                let idx: usize = u[1..].parse().unwrap();
                bins[idx / 100] += 1.0;
                total += 1.0;
            }
        }
        assert_eq!(total, 10_000.0);
        let expected = total / 10.0;
        let chi2: f64 = bins.iter().map(|o| (o - expected).powi(2) / expected).sum();
        assert!(chi2 < 21.666, "chi2 = {chi2}");
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = generate(&small()).unwrap();
        assert_eq!(a, generate(&small()).unwrap());
        assert_ne!(a.graph, generate(&SyntheticSpec { seed: 1, ..small() }).unwrap().graph);
    }

    #[test]
    fn cross_noise_adds_one_way_edges() {
        let base = generate(&small()).unwrap();
        let noisy = generate(&SyntheticSpec { cross_noise: 0.05, ..small() }).unwrap();
        assert!(noisy.graph.n_edges() > base.graph.n_edges());
        for (s, d) in base.graph.edges() {
            assert!(noisy.graph.has_edge(s, d));
        }
        let friendship = |g: &DirectedGraph| crate::graph::derive_friendship(g).n_edges();
        assert_eq!(friendship(&noisy.graph), friendship(&base.graph));
    }

    #[test]
    fn shuffled_labels_keep_counts() {
        let arts = gen_articles(&small(), &(0..200).map(|u| small().community_of(u)).collect::<Vec<_>>()).unwrap();
        let shuffled = shuffle_labels(&arts, 1);
        let count = |v: &[ArticleRecord]| v.iter().filter(|a| a.label.is_fake()).count();
        assert_eq!(count(&arts), count(&shuffled));
        assert_ne!(arts, shuffled);
    }

    #[test]
    fn invalid_specs() {
        assert!(SyntheticSpec { p_out: 0.5, p_in: 0.1, ..small() }.validate().is_err());
        assert!(SyntheticSpec { homophily: 1.5, ..small() }.validate().is_err());
        assert!(SyntheticSpec { engagers_min: 11, ..small() }.validate().is_err());
    }

    #[test]
    fn emit_files() {
        let data = generate(&small()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        data.emit(dir.path()).unwrap();
        let edges = crate::graph::read_edge_list(&dir.path().join("edges.tsv")).unwrap();
        assert_eq!(edges.len(), data.graph.n_edges());
        let arts = crate::dataset::read_articles(&dir.path().join("articles.jsonl")).unwrap();
        assert_eq!(arts, data.articles);
    }
}
