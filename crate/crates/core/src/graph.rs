//! Directed user graphs: follower edges, derived friendship edges, pruning
//! and degree statistics.
//!
//! Node indices are dense and assigned in first-seen order by [`UserTable`].
//! An edge `i -> j` in a follower graph means user `i` follows user `j`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Platforms cap the number of friends/followers returned per account.
pub const NEIGHBOR_CAP: usize = 5000;

/// Bijection between opaque external account ids and dense indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UserTable {
    ids: Vec<String>,
    lookup: HashMap<String, usize>,
    missing: Vec<bool>,
}

impl UserTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the index of `id`, assigning the next free index if unseen.
    pub fn intern(&mut self, id: &str) -> usize {
        if let Some(&idx) = self.lookup.get(id) {
            return idx;
        }
        let idx = self.ids.len();
        self.ids.push(id.to_string());
        self.lookup.insert(id.to_string(), idx);
        self.missing.push(false);
        idx
    }

    /// Adds a user that has no observable network (private or deleted
    /// account). Existing users are left untouched.
    pub fn intern_missing(&mut self, id: &str) -> usize {
        let before = self.ids.len();
        let idx = self.intern(id);
        if idx == before {
            self.missing[idx] = true;
        }
        idx
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn external_id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn is_missing(&self, index: usize) -> bool {
        self.missing[index]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Rebuilds the table after pruning so that indices follow `remap`.
    pub fn remap(&self, remap: &IndexRemap) -> UserTable {
        let mut out = UserTable::new();
        for &old in &remap.new_to_old {
            let idx = out.intern(&self.ids[old]);
            out.missing[idx] = self.missing[old];
        }
        out
    }

    /// Writes `index<TAB>external_id<TAB>present|missing` lines.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for (i, id) in self.ids.iter().enumerate() {
            let status = if self.missing[i] { "missing" } else { "present" };
            writeln!(w, "{i}\t{id}\t{status}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_tsv(path: &Path) -> Result<UserTable> {
        let name = path.display().to_string();
        let reader = BufReader::new(File::open(path)?);
        let mut table = UserTable::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(&name, lineno + 1, "expected 3 tab-separated fields"));
            }
            let index: usize = fields[0]
                .parse()
                .map_err(|_| Error::parse(&name, lineno + 1, "bad index"))?;
            if index != table.len() {
                return Err(Error::parse(&name, lineno + 1, "indices must be contiguous"));
            }
            let idx = match fields[2] {
                "present" => table.intern(fields[1]),
                "missing" => table.intern_missing(fields[1]),
                other => {
                    return Err(Error::parse(&name, lineno + 1, format!("bad status `{other}`")))
                }
            };
            if idx != index {
                return Err(Error::parse(&name, lineno + 1, "duplicate external id"));
            }
        }
        Ok(table)
    }
}

/// Old/new index correspondence produced by [`prune_low_degree`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexRemap {
    pub old_to_new: Vec<Option<usize>>,
    pub new_to_old: Vec<usize>,
}

/// Adjacency lists in both directions over dense node indices.
///
/// Lists are sorted and duplicate free, self-loops are never stored, and
/// `in_adj` is the exact transpose of `out_adj`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DirectedGraph {
    out_adj: Vec<Vec<u32>>,
    in_adj: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
}

impl DirectedGraph {
    pub fn empty(n_nodes: usize) -> Self {
        DirectedGraph {
            out_adj: vec![Vec::new(); n_nodes],
            in_adj: vec![Vec::new(); n_nodes],
        }
    }

    /// Builds a graph from index pairs. Duplicates collapse and self-loops
    /// are dropped.
    ///
    /// Panics if an index is `>= n_nodes`.
    pub fn from_edges<I>(n_nodes: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut out_adj = vec![Vec::new(); n_nodes];
        for (src, dst) in edges {
            assert!(src < n_nodes && dst < n_nodes, "edge ({src}, {dst}) out of range");
            if src != dst {
                out_adj[src].push(dst as u32);
            }
        }
        for list in &mut out_adj {
            list.sort_unstable();
            list.dedup();
        }
        Self::from_out_adj(out_adj)
    }

    fn from_out_adj(out_adj: Vec<Vec<u32>>) -> Self {
        let mut in_adj = vec![Vec::new(); out_adj.len()];
        // Visiting sources in increasing order keeps every in-list sorted.
        for (src, list) in out_adj.iter().enumerate() {
            for &dst in list {
                in_adj[dst as usize].push(src as u32);
            }
        }
        DirectedGraph { out_adj, in_adj }
    }

    pub fn n_nodes(&self) -> usize {
        self.out_adj.len()
    }

    pub fn n_edges(&self) -> usize {
        self.out_adj.iter().map(Vec::len).sum()
    }

    pub fn out_neighbors(&self, node: usize) -> &[u32] {
        &self.out_adj[node]
    }

    pub fn in_neighbors(&self, node: usize) -> &[u32] {
        &self.in_adj[node]
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.out_adj[node].len()
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.in_adj[node].len()
    }

    /// Undirected incidence: in-degree plus out-degree.
    pub fn degree(&self, node: usize) -> usize {
        self.out_degree(node) + self.in_degree(node)
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        self.out_adj[src].binary_search(&(dst as u32)).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(src, list)| list.iter().map(move |&dst| (src, dst as usize)))
    }

    /// The graph with every edge made bidirectional.
    pub fn symmetrized(&self) -> DirectedGraph {
        let out_adj = (0..self.n_nodes())
            .map(|i| merge_sorted(&self.out_adj[i], &self.in_adj[i]))
            .collect();
        Self::from_out_adj(out_adj)
    }

    pub fn is_symmetric(&self) -> bool {
        self.out_adj == self.in_adj
    }

    /// Subgraph induced by `nodes`; node `k` of the result is `nodes[k]`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> DirectedGraph {
        let mut local = HashMap::with_capacity(nodes.len());
        for (k, &node) in nodes.iter().enumerate() {
            local.insert(node as u32, k);
        }
        let edges = nodes.iter().enumerate().flat_map(|(k, &node)| {
            let local = &local;
            self.out_adj[node]
                .iter()
                .filter_map(move |dst| local.get(dst).map(|&j| (k, j)))
        });
        DirectedGraph::from_edges(nodes.len(), edges)
    }

    /// Appends a node with the given out- and in-neighbours, returning its
    /// index.
    pub fn with_node(&self, successors: &[usize], predecessors: &[usize]) -> (DirectedGraph, usize) {
        let new = self.n_nodes();
        let edges = self
            .edges()
            .chain(successors.iter().map(|&d| (new, d)))
            .chain(predecessors.iter().map(|&s| (s, new)))
            .collect::<Vec<_>>();
        (DirectedGraph::from_edges(new + 1, edges), new)
    }

    pub fn degrees(&self, direction: Direction) -> Vec<usize> {
        let adj = match direction {
            Direction::Out => &self.out_adj,
            Direction::In => &self.in_adj,
        };
        adj.iter().map(Vec::len).collect()
    }
}

fn merge_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Builds a graph from external-id pairs, interning ids into `table` in
/// first-seen order.
pub fn ingest_edges_into<I, S>(table: &mut UserTable, edges: I) -> DirectedGraph
where
    I: IntoIterator<Item = (S, S)>,
    S: AsRef<str>,
{
    let pairs: Vec<(usize, usize)> = edges
        .into_iter()
        .map(|(src, dst)| {
            let s = table.intern(src.as_ref());
            let d = table.intern(dst.as_ref());
            (s, d)
        })
        .collect();
    DirectedGraph::from_edges(table.len(), pairs)
}

pub fn ingest_edges<I, S>(edges: I) -> (DirectedGraph, UserTable)
where
    I: IntoIterator<Item = (S, S)>,
    S: AsRef<str>,
{
    let mut table = UserTable::new();
    let graph = ingest_edges_into(&mut table, edges);
    (graph, table)
}

/// Parses `src<TAB>dst` lines. Blank lines and lines starting with `#` are
/// skipped.
pub fn parse_edge_list<R: BufRead>(reader: R, name: &str) -> Result<Vec<(String, String)>> {
    let mut edges = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split('\t');
        match (fields.next(), fields.next(), fields.next()) {
            (Some(src), Some(dst), None) if !src.is_empty() && !dst.is_empty() => {
                edges.push((src.to_string(), dst.to_string()))
            }
            _ => {
                return Err(Error::parse(
                    name,
                    lineno + 1,
                    "expected `src<TAB>dst`",
                ))
            }
        }
    }
    Ok(edges)
}

pub fn read_edge_list(path: &Path) -> Result<Vec<(String, String)>> {
    let file = File::open(path)?;
    parse_edge_list(BufReader::new(file), &path.display().to_string())
}

pub fn write_edge_list(path: &Path, graph: &DirectedGraph, table: &UserTable) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (src, dst) in graph.edges() {
        writeln!(w, "{}\t{}", table.external_id(src), table.external_id(dst))?;
    }
    w.flush()?;
    Ok(())
}

/// Mutual-follow subgraph: `i -> j` survives iff `j -> i` also exists.
pub fn derive_friendship(follow: &DirectedGraph) -> DirectedGraph {
    let out_adj = (0..follow.n_nodes())
        .map(|i| intersect_sorted(follow.out_neighbors(i), follow.in_neighbors(i)))
        .collect();
    DirectedGraph::from_out_adj(out_adj)
}

fn intersect_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Removes every unprotected node whose in+out degree is below `min_edges`.
///
/// Degrees are measured once on the input graph; nodes whose degree drops
/// because a neighbour was removed are kept.
pub fn prune_low_degree(
    graph: &DirectedGraph,
    min_edges: usize,
    protected: &[bool],
) -> (DirectedGraph, IndexRemap) {
    let n = graph.n_nodes();
    let keep: Vec<bool> = (0..n)
        .map(|i| protected.get(i).copied().unwrap_or(false) || graph.degree(i) >= min_edges)
        .collect();
    let mut old_to_new = vec![None; n];
    let mut new_to_old = Vec::new();
    for i in 0..n {
        if keep[i] {
            old_to_new[i] = Some(new_to_old.len());
            new_to_old.push(i);
        }
    }
    let edges = graph.edges().filter_map(|(s, d)| match (old_to_new[s], old_to_new[d]) {
        (Some(s), Some(d)) => Some((s, d)),
        _ => None,
    });
    let pruned = DirectedGraph::from_edges(new_to_old.len(), edges);
    (
        pruned,
        IndexRemap {
            old_to_new,
            new_to_old,
        },
    )
}

/// Per-node edge-count summary in the layout of a friend/follower table.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeStats {
    pub avg: f64,
    pub max: f64,
    pub std: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub count_over_cap: usize,
}

/// Nearest-rank percentile of an ascending slice.
fn nearest_rank(sorted: &[usize], pct: f64) -> f64 {
    let n = sorted.len();
    let rank = ((pct / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1] as f64
}

pub fn degree_stats(graph: &DirectedGraph, direction: Direction) -> Result<DegreeStats> {
    degree_stats_of(graph.degrees(direction))
}

pub fn degree_stats_of(mut degrees: Vec<usize>) -> Result<DegreeStats> {
    if degrees.is_empty() {
        return Err(Error::EmptyGraph);
    }
    degrees.sort_unstable();
    let n = degrees.len() as f64;
    let avg = degrees.iter().sum::<usize>() as f64 / n;
    let var = degrees
        .iter()
        .map(|&d| (d as f64 - avg).powi(2))
        .sum::<f64>()
        / n;
    Ok(DegreeStats {
        avg,
        max: *degrees.last().unwrap() as f64,
        std: var.sqrt(),
        p25: nearest_rank(&degrees, 25.0),
        p50: nearest_rank(&degrees, 50.0),
        p75: nearest_rank(&degrees, 75.0),
        count_over_cap: degrees.iter().filter(|&&d| d > NEIGHBOR_CAP).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn edge_set(g: &DirectedGraph) -> Vec<(usize, usize)> {
        g.edges().collect()
    }

    #[test]
    fn duplicates_collapse() {
        let (g, t) = ingest_edges([("a", "b"), ("a", "b"), ("b", "a")]);
        assert_eq!(g.n_nodes(), 2);
        assert_eq!(t.get("a"), Some(0));
        assert_eq!(edge_set(&g), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn self_loop_dropped() {
        let (g, _) = ingest_edges([("a", "a")]);
        assert_eq!(g.n_nodes(), 1);
        assert_eq!(g.n_edges(), 0);
    }

    #[test]
    fn three_cycle_degrees() {
        let (g, _) = ingest_edges([("a", "b"), ("b", "c"), ("c", "a")]);
        for i in 0..3 {
            assert_eq!(g.out_degree(i), 1);
            assert_eq!(g.in_degree(i), 1);
        }
    }

    #[test]
    fn empty_stream_is_valid() {
        let (g, t) = ingest_edges(Vec::<(String, String)>::new());
        assert_eq!(g.n_nodes(), 0);
        assert!(t.is_empty());
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "# comment\na\tb\n\nbroken line\n";
        let err = parse_edge_list(text.as_bytes(), "edges.tsv").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn friendship_keeps_mutual_pairs_only() {
        let (g, t) = ingest_edges([("a", "b"), ("b", "a"), ("a", "c")]);
        let fr = derive_friendship(&g);
        let (a, b) = (t.get("a").unwrap(), t.get("b").unwrap());
        assert_eq!(edge_set(&fr), vec![(a, b), (b, a)]);
        assert!(derive_friendship(&DirectedGraph::empty(0)).n_nodes() == 0);
    }

    #[test]
    fn friendship_of_complete_digraph_is_complete() {
        let edges = (0..3).flat_map(|i| (0..3).map(move |j| (i, j)));
        let g = DirectedGraph::from_edges(3, edges);
        let fr = derive_friendship(&g);
        assert_eq!(fr, g);
        assert!(fr.is_symmetric());
    }

    #[test]
    fn prune_path() {
        let g = DirectedGraph::from_edges(2, [(0, 1)]);
        let (p, _) = prune_low_degree(&g, 2, &[false, false]);
        assert_eq!(p.n_nodes(), 0);
        let (p, remap) = prune_low_degree(&g, 2, &[true, false]);
        assert_eq!(p.n_nodes(), 1);
        assert_eq!(remap.new_to_old, vec![0]);
        assert_eq!(remap.old_to_new, vec![Some(0), None]);
    }

    #[test]
    fn prune_star_keeps_center() {
        let g = DirectedGraph::from_edges(6, (1..6).map(|leaf| (0, leaf)));
        let (p, remap) = prune_low_degree(&g, 2, &[false; 6]);
        assert_eq!(p.n_nodes(), 1);
        assert_eq!(remap.new_to_old, vec![0]);
        assert_eq!(p.n_edges(), 0);
    }

    #[test]
    fn prune_is_single_pass() {
        // 0 - 1 - 2 chain plus 1 -> 3: node 1 keeps degree 3, leaves go.
        // A second pass then removes 1, whose degree fell to 0.
        let g = DirectedGraph::from_edges(4, [(0, 1), (1, 2), (1, 3)]);
        let (p, remap) = prune_low_degree(&g, 2, &[false; 4]);
        assert_eq!(remap.new_to_old, vec![1]);
        let (q, _) = prune_low_degree(&p, 2, &[false]);
        assert_eq!(q.n_nodes(), 0);
    }

    #[test]
    fn user_table_remap_keeps_missing_flag() {
        let mut t = UserTable::new();
        t.intern("a");
        t.intern_missing("m");
        t.intern("b");
        let remap = IndexRemap {
            old_to_new: vec![None, Some(0), Some(1)],
            new_to_old: vec![1, 2],
        };
        let r = t.remap(&remap);
        assert_eq!(r.ids(), &["m".to_string(), "b".to_string()]);
        assert!(r.is_missing(0));
        assert!(!r.is_missing(1));
    }

    #[test]
    fn stats_regular_graph() {
        let g = DirectedGraph::from_edges(3, [(0, 1), (1, 2), (2, 0)]);
        let s = degree_stats(&g, Direction::Out).unwrap();
        assert_eq!((s.avg, s.max, s.std), (1.0, 1.0, 0.0));
    }

    #[test]
    fn stats_nearest_rank() {
        let s = degree_stats_of(vec![0, 0, 10]).unwrap();
        assert!((s.avg - 10.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.p50, 0.0);
        assert_eq!(s.p75, 10.0);
        assert!(matches!(degree_stats_of(vec![]), Err(Error::EmptyGraph)));
    }

    #[test]
    fn stats_cap_count() {
        let s = degree_stats_of(vec![4999, 5000, 5001, 9000]).unwrap();
        assert_eq!(s.count_over_cap, 2);
    }

    fn arb_graph() -> impl Strategy<Value = DirectedGraph> {
        (1usize..12).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n), 0..40)
                .prop_map(move |edges| DirectedGraph::from_edges(n, edges))
        })
    }

    proptest! {
        #[test]
        fn transpose_consistent(g in arb_graph()) {
            for i in 0..g.n_nodes() {
                for j in 0..g.n_nodes() {
                    prop_assert_eq!(
                        g.out_neighbors(i).contains(&(j as u32)),
                        g.in_neighbors(j).contains(&(i as u32))
                    );
                }
                prop_assert!(!g.has_edge(i, i));
            }
        }

        #[test]
        fn handshake(g in arb_graph()) {
            let out: usize = g.degrees(Direction::Out).iter().sum();
            let inn: usize = g.degrees(Direction::In).iter().sum();
            prop_assert_eq!(out, inn);
        }

        #[test]
        fn friendship_idempotent_subset(g in arb_graph()) {
            let fr = derive_friendship(&g);
            prop_assert!(fr.is_symmetric());
            prop_assert_eq!(derive_friendship(&fr), fr.clone());
            for (s, d) in fr.edges() {
                prop_assert!(g.has_edge(s, d));
            }
        }

        #[test]
        fn prune_respects_protection(g in arb_graph(), mask in proptest::collection::vec(any::<bool>(), 12)) {
            let protected = &mask[..g.n_nodes()];
            let (_, remap) = prune_low_degree(&g, 2, protected);
            for i in 0..g.n_nodes() {
                if protected[i] || g.degree(i) >= 2 {
                    prop_assert!(remap.old_to_new[i].is_some());
                } else {
                    prop_assert!(remap.old_to_new[i].is_none());
                }
            }
        }

        #[test]
        fn stats_ordered(degs in proptest::collection::vec(0usize..100, 1..50)) {
            let s = degree_stats_of(degs).unwrap();
            prop_assert!(s.p25 <= s.p50 && s.p50 <= s.p75 && s.p75 <= s.max);
            prop_assert!(s.avg >= 0.0);
        }
    }
}
