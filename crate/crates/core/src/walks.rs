//! Truncated uniform random walks, the corpus shared by the skip-gram and
//! GNN trainers.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::rng::{rng_from, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionMode {
    /// Follow edges in their stored direction only.
    OutEdges,
    /// Treat every edge as undirected.
    Symmetrized,
}

impl FromStr for DirectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "out" | "out_edges" => Ok(DirectionMode::OutEdges),
            "sym" | "symmetrized" => Ok(DirectionMode::Symmetrized),
            other => Err(Error::invalid(format!("unknown direction mode `{other}`"))),
        }
    }
}

impl fmt::Display for DirectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DirectionMode::OutEdges => "out_edges",
            DirectionMode::Symmetrized => "symmetrized",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkParams {
    pub walks_per_node: usize,
    pub max_len: usize,
    pub seed: u64,
    pub direction_mode: DirectionMode,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams {
            walks_per_node: 10,
            max_len: 80,
            seed: 0,
            direction_mode: DirectionMode::Symmetrized,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkCorpus {
    pub walks: Vec<Vec<u32>>,
    pub params: WalkParams,
    pub n_nodes: usize,
}

impl WalkCorpus {
    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    pub fn n_tokens(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }

    /// Occurrence count of every node across all walks.
    pub fn node_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_nodes];
        for walk in &self.walks {
            for &v in walk {
                counts[v as usize] += 1;
            }
        }
        counts
    }

    /// One walk per line, space-separated node indices.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for walk in &self.walks {
            let line: Vec<String> = walk.iter().map(u32::to_string).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Generates `walks_per_node` walks from every node.
///
/// Walk `k` from node `v` is drawn from its own RNG seeded by
/// `(seed, v, k)`, so the corpus does not depend on the thread count. Walks
/// are ordered by start node, then walk index.
pub fn generate_walks(graph: &DirectedGraph, params: WalkParams) -> WalkCorpus {
    assert!(params.walks_per_node >= 1 && params.max_len >= 1);
    let traversal;
    let graph = match params.direction_mode {
        DirectionMode::OutEdges => graph,
        DirectionMode::Symmetrized => {
            traversal = graph.symmetrized();
            &traversal
        }
    };
    let walks = (0..graph.n_nodes())
        .into_par_iter()
        .flat_map_iter(|start| {
            (0..params.walks_per_node).map(move |k| single_walk(graph, start, k, &params))
        })
        .collect();
    WalkCorpus {
        walks,
        params,
        n_nodes: graph.n_nodes(),
    }
}

fn single_walk(graph: &DirectedGraph, start: usize, k: usize, params: &WalkParams) -> Vec<u32> {
    let mut rng = rng_from(&[stream::WALKS, params.seed, start as u64, k as u64]);
    let mut walk = Vec::with_capacity(params.max_len);
    let mut cur = start;
    walk.push(cur as u32);
    while walk.len() < params.max_len {
        let nbrs = graph.out_neighbors(cur);
        if nbrs.is_empty() {
            break;
        }
        cur = nbrs[rng.gen_range(0..nbrs.len())] as usize;
        walk.push(cur as u32);
    }
    walk
}

/// All `(walk[i], walk[j])` with `0 < |i - j| <= window` inside each walk.
pub fn context_pairs(corpus: &WalkCorpus, window: usize) -> impl Iterator<Item = (u32, u32)> + '_ {
    assert!(window >= 1);
    corpus.walks.iter().flat_map(move |walk| walk_pairs(walk, window))
}

pub(crate) fn walk_pairs(walk: &[u32], window: usize) -> impl Iterator<Item = (u32, u32)> + '_ {
    (0..walk.len()).flat_map(move |i| {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(walk.len() - 1);
        (lo..=hi).filter(move |&j| j != i).map(move |j| (walk[i], walk[j]))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn corpus_of(walks: Vec<Vec<u32>>) -> WalkCorpus {
        let n = walks.iter().flatten().map(|&v| v as usize + 1).max().unwrap_or(0);
        WalkCorpus {
            walks,
            params: WalkParams::default(),
            n_nodes: n,
        }
    }

    #[test]
    fn isolated_node_walks_have_length_one() {
        let g = DirectedGraph::from_edges(3, [(0, 1)]);
        let c = generate_walks(&g, WalkParams { seed: 3, ..Default::default() });
        for walk in c.walks.iter().filter(|w| w[0] == 2) {
            assert_eq!(walk, &vec![2]);
        }
    }

    #[test]
    fn two_cycle_is_forced() {
        let g = DirectedGraph::from_edges(2, [(0, 1), (1, 0)]);
        let params = WalkParams {
            walks_per_node: 1,
            max_len: 4,
            seed: 9,
            direction_mode: DirectionMode::OutEdges,
        };
        let c = generate_walks(&g, params);
        assert_eq!(c.walks[0], vec![0, 1, 0, 1]);
    }

    #[test]
    fn out_edges_mode_stops_at_sinks() {
        let g = DirectedGraph::from_edges(2, [(0, 1)]);
        let params = WalkParams {
            direction_mode: DirectionMode::OutEdges,
            ..Default::default()
        };
        let c = generate_walks(&g, params);
        assert!(c.walks.iter().all(|w| w.len() <= 2));
    }

    #[test]
    fn walk_count() {
        let g = DirectedGraph::from_edges(7, [(0, 1), (2, 3), (4, 5)]);
        let c = generate_walks(&g, WalkParams { walks_per_node: 3, ..Default::default() });
        assert_eq!(c.walks.len(), 21);
        for v in 0..7u32 {
            assert_eq!(c.walks.iter().filter(|w| w[0] == v).count(), 3);
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let edges = (0..50).flat_map(|i| [(i, (i * 7 + 3) % 50), (i, (i + 1) % 50)]);
        let g = DirectedGraph::from_edges(50, edges);
        let params = WalkParams { seed: 42, ..Default::default() };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| generate_walks(&g, params));
        let b = four.install(|| generate_walks(&g, params));
        assert_eq!(a, b);
    }

    #[test]
    fn pairs_small_cases() {
        let c = corpus_of(vec![vec![0, 1]]);
        assert_eq!(context_pairs(&c, 10).collect::<Vec<_>>(), vec![(0, 1), (1, 0)]);
        let c = corpus_of(vec![vec![0, 1, 2]]);
        assert_eq!(
            context_pairs(&c, 1).collect::<Vec<_>>(),
            vec![(0, 1), (1, 0), (1, 2), (2, 1)]
        );
    }

    #[test]
    fn pair_count_full_window() {
        // Brute-force enumeration of ordered index pairs.
        for len in 1..12u32 {
            let walk: Vec<u32> = (0..len).collect();
            let c = corpus_of(vec![walk]);
            let expected = (0..len)
                .flat_map(|i| (0..len).map(move |j| (i, j)))
                .filter(|(i, j)| i != j)
                .count();
            assert_eq!(context_pairs(&c, len as usize).count(), expected);
            assert_eq!(expected, (len * len.saturating_sub(1)) as usize);
        }
    }

    fn arb_graph() -> impl Strategy<Value = DirectedGraph> {
        (1usize..15).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n), 0..40)
                .prop_map(move |edges| DirectedGraph::from_edges(n, edges))
        })
    }

    proptest! {
        #[test]
        fn steps_follow_edges(g in arb_graph(), seed in any::<u64>(), sym in any::<bool>()) {
            let mode = if sym { DirectionMode::Symmetrized } else { DirectionMode::OutEdges };
            let params = WalkParams { walks_per_node: 2, max_len: 12, seed, direction_mode: mode };
            let c = generate_walks(&g, params);
            let sg = g.symmetrized();
            let check = if sym { &sg } else { &g };
            prop_assert_eq!(c.walks.len(), g.n_nodes() * 2);
            for w in &c.walks {
                prop_assert!(!w.is_empty() && w.len() <= 12);
                for step in w.windows(2) {
                    prop_assert!(check.has_edge(step[0] as usize, step[1] as usize));
                }
                if w.len() < 12 {
                    prop_assert!(check.out_degree(*w.last().unwrap() as usize) == 0);
                }
            }
        }
    }
}
