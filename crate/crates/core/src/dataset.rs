//! News articles, their engaged users, and the assembled dataset bundle.

use std::collections::HashSet;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    derive_friendship, ingest_edges, prune_low_degree, read_edge_list, write_edge_list,
    DirectedGraph, UserTable,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Fake,
    Factual,
}

impl Label {
    /// `1.0` for fake (the positive class), `0.0` for factual.
    pub fn as_target(self) -> f64 {
        match self {
            Label::Fake => 1.0,
            Label::Factual => 0.0,
        }
    }

    pub fn is_fake(self) -> bool {
        self == Label::Fake
    }

    pub fn from_fake(fake: bool) -> Self {
        if fake {
            Label::Fake
        } else {
            Label::Factual
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Fake => "fake",
            Label::Factual => "factual",
        })
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fake" => Ok(Label::Fake),
            "factual" => Ok(Label::Factual),
            other => Err(Error::invalid(format!("unknown label `{other}`"))),
        }
    }
}

/// Which user graph to embed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Network {
    /// `fo`: directed follower graph.
    Follower,
    /// `fr`: mutual-follow graph.
    Friendship,
}

impl FromStr for Network {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fo" => Ok(Network::Follower),
            "fr" => Ok(Network::Friendship),
            other => Err(Error::invalid(format!("unknown network `{other}` (fo|fr)"))),
        }
    }
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Network::Follower => "fo",
            Network::Friendship => "fr",
        })
    }
}

/// One line of the article file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub article_id: String,
    pub label: Label,
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub tweets: Vec<String>,
    #[serde(default)]
    pub engaged_users: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewsArticle {
    pub article_id: String,
    pub label: Label,
    pub text: Option<String>,
    pub tweets: Vec<String>,
    /// Sorted, duplicate-free user indices.
    pub engaged_users: Vec<usize>,
}

impl NewsArticle {
    /// Article text followed by every engaged tweet.
    pub fn full_text(&self) -> String {
        let mut parts: Vec<&str> = Vec::with_capacity(self.tweets.len() + 1);
        if let Some(text) = &self.text {
            parts.push(text);
        }
        parts.extend(self.tweets.iter().map(String::as_str));
        parts.join(" ")
    }
}

pub fn parse_articles<R: BufRead>(reader: R, name: &str) -> Result<Vec<ArticleRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ArticleRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(name, lineno + 1, e.to_string()))?;
        out.push(record);
    }
    Ok(out)
}

pub fn read_articles(path: &Path) -> Result<Vec<ArticleRecord>> {
    let file = File::open(path)?;
    parse_articles(BufReader::new(file), &path.display().to_string())
}

pub fn write_articles(path: &Path, records: &[ArticleRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::invalid(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Follower graph, user table and labelled articles.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub users: UserTable,
    pub follow: DirectedGraph,
    pub articles: Vec<NewsArticle>,
}

impl Dataset {
    /// Assembles a dataset from raw follower edges and article records.
    ///
    /// Users referenced by articles but absent from the edge list are added
    /// as missing. With `min_edges > 0`, unengaged users with fewer edges
    /// are pruned.
    pub fn assemble(
        edges: &[(String, String)],
        records: &[ArticleRecord],
        min_edges: usize,
    ) -> Result<Dataset> {
        let (graph, mut users) = ingest_edges(edges.iter().map(|(s, d)| (s.as_str(), d.as_str())));
        for r in records {
            for u in &r.engaged_users {
                users.intern_missing(u);
            }
        }
        let follow = if users.len() > graph.n_nodes() {
            DirectedGraph::from_edges(users.len(), graph.edges())
        } else {
            graph
        };
        let mut protected = vec![false; users.len()];
        for r in records {
            for u in &r.engaged_users {
                protected[users.get(u).unwrap()] = true;
            }
        }
        let (follow, users) = if min_edges > 0 {
            let (pruned, remap) = prune_low_degree(&follow, min_edges, &protected);
            (pruned, users.remap(&remap))
        } else {
            (follow, users)
        };
        let articles = resolve_articles(records, &users)?;
        Ok(Dataset {
            users,
            follow,
            articles,
        })
    }

    pub fn friendship(&self) -> DirectedGraph {
        derive_friendship(&self.follow)
    }

    pub fn network(&self, network: Network) -> DirectedGraph {
        match network {
            Network::Follower => self.follow.clone(),
            Network::Friendship => self.friendship(),
        }
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn article(&self, id: &str) -> Result<&NewsArticle> {
        self.articles
            .iter()
            .find(|a| a.article_id == id)
            .ok_or_else(|| Error::UnknownArticle(id.to_string()))
    }

    pub fn labels(&self) -> Vec<Label> {
        self.articles.iter().map(|a| a.label).collect()
    }

    /// Users that engaged with at least one article.
    pub fn engaged_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n_users()];
        for a in &self.articles {
            for &u in &a.engaged_users {
                mask[u] = true;
            }
        }
        mask
    }

    /// Users that engaged with at least one fake article.
    pub fn fake_engaged_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n_users()];
        for a in self.articles.iter().filter(|a| a.label.is_fake()) {
            for &u in &a.engaged_users {
                mask[u] = true;
            }
        }
        mask
    }

    pub fn records(&self) -> Vec<ArticleRecord> {
        self.articles
            .iter()
            .map(|a| ArticleRecord {
                article_id: a.article_id.clone(),
                label: a.label,
                text: a.text.clone(),
                tweets: a.tweets.clone(),
                engaged_users: a
                    .engaged_users
                    .iter()
                    .map(|&u| self.users.external_id(u).to_string())
                    .collect(),
            })
            .collect()
    }

    /// Writes `users.tsv`, `follow.tsv`, `friendship.tsv` and
    /// `articles.jsonl` into `dir`.
    pub fn save_bundle(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.users.write_tsv(&dir.join("users.tsv"))?;
        write_edge_list(&dir.join("follow.tsv"), &self.follow, &self.users)?;
        write_edge_list(&dir.join("friendship.tsv"), &self.friendship(), &self.users)?;
        write_articles(&dir.join("articles.jsonl"), &self.records())
    }

    pub fn load_bundle(dir: &Path) -> Result<Dataset> {
        let users = UserTable::read_tsv(&dir.join("users.tsv"))?;
        let follow_path = dir.join("follow.tsv");
        let edges = read_edge_list(&follow_path)?;
        let mut pairs = Vec::with_capacity(edges.len());
        for (src, dst) in &edges {
            let s = users.get(src).ok_or_else(|| Error::UnknownUser(src.clone()))?;
            let d = users.get(dst).ok_or_else(|| Error::UnknownUser(dst.clone()))?;
            pairs.push((s, d));
        }
        let follow = DirectedGraph::from_edges(users.len(), pairs);
        let records = read_articles(&dir.join("articles.jsonl"))?;
        let articles = resolve_articles(&records, &users)?;
        Ok(Dataset {
            users,
            follow,
            articles,
        })
    }
}

fn resolve_articles(records: &[ArticleRecord], users: &UserTable) -> Result<Vec<NewsArticle>> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        if !seen.insert(r.article_id.as_str()) {
            return Err(Error::invalid(format!("duplicate article id `{}`", r.article_id)));
        }
        let mut engaged = r
            .engaged_users
            .iter()
            .map(|u| users.get(u).ok_or_else(|| Error::UnknownUser(u.clone())))
            .collect::<Result<Vec<_>>>()?;
        engaged.sort_unstable();
        engaged.dedup();
        out.push(NewsArticle {
            article_id: r.article_id.clone(),
            label: r.label,
            text: r.text.clone(),
            tweets: r.tweets.clone(),
            engaged_users: engaged,
        });
    }
    Ok(out)
}
