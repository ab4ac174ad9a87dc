//! Graph partitioning for cluster-batched GCN training: label propagation
//! to find communities, then balanced packing of communities into bins.

use std::collections::{BTreeMap, VecDeque};

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::rng::{rng_from, stream};

const MAX_SWEEPS: usize = 30;

/// Asynchronous label propagation on the symmetrized graph. Ties go to the
/// smallest label. Returns one label per node.
pub fn label_propagation(graph: &DirectedGraph, seed: u64) -> Vec<usize> {
    let sym = graph.symmetrized();
    let n = sym.n_nodes();
    let mut labels: Vec<usize> = (0..n).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng_from(&[stream::PARTITION, seed]);
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for _ in 0..MAX_SWEEPS {
        order.shuffle(&mut rng);
        let mut changed = false;
        for &v in &order {
            let nbrs = sym.out_neighbors(v);
            if nbrs.is_empty() {
                continue;
            }
            counts.clear();
            for &u in nbrs {
                *counts.entry(labels[u as usize]).or_default() += 1;
            }
            let best = counts.values().copied().max().unwrap();
            // Keep the current label when it is among the most frequent, so
            // the process settles.
            let current_ok = counts.get(&labels[v]) == Some(&best);
            if !current_ok {
                let pick = counts.iter().find(|(_, &c)| c == best).map(|(&l, _)| l).unwrap();
                labels[v] = pick;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

/// Assigns every node to one of `n_partitions` parts.
///
/// Communities found by label propagation stay whole unless larger than
/// `ceil(n / n_partitions)`, in which case they are cut into BFS-ordered
/// chunks of that size. Chunks are packed largest-first into the currently
/// smallest part. No part is left empty and no part exceeds twice the
/// balanced size.
pub fn partition_graph(graph: &DirectedGraph, n_partitions: usize, seed: u64) -> Result<Vec<usize>> {
    let n = graph.n_nodes();
    if n_partitions == 0 {
        return Err(Error::invalid("n_partitions must be >= 1"));
    }
    if n_partitions > n {
        return Err(Error::invalid(format!(
            "n_partitions ({n_partitions}) exceeds node count ({n})"
        )));
    }
    if n_partitions == 1 {
        return Ok(vec![0; n]);
    }
    let labels = label_propagation(graph, seed);
    let mut communities: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (v, &l) in labels.iter().enumerate() {
        communities.entry(l).or_default().push(v);
    }
    let cap = n.div_ceil(n_partitions);
    let sym = graph.symmetrized();
    let mut chunks: Vec<Vec<usize>> = Vec::new();
    for members in communities.into_values() {
        if members.len() <= cap {
            chunks.push(members);
        } else {
            let ordered = bfs_order(&sym, &members);
            chunks.extend(ordered.chunks(cap).map(<[usize]>::to_vec));
        }
    }
    chunks.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));

    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); n_partitions];
    for chunk in chunks {
        let lightest = (0..n_partitions).min_by_key(|&p| (bins[p].len(), p)).unwrap();
        bins[lightest].extend(chunk);
    }
    // Fewer chunks than parts: move nodes from the fullest bin.
    while let Some(empty) = bins.iter().position(Vec::is_empty) {
        let fullest = (0..n_partitions).max_by_key(|&p| (bins[p].len(), usize::MAX - p)).unwrap();
        let take = bins[fullest].len() / 2;
        let moved: Vec<usize> = bins[fullest].drain(..take).collect();
        bins[empty] = moved;
    }
    let mut assignment = vec![0usize; n];
    for (p, bin) in bins.iter().enumerate() {
        for &v in bin {
            assignment[v] = p;
        }
    }
    Ok(assignment)
}

fn bfs_order(sym: &DirectedGraph, members: &[usize]) -> Vec<usize> {
    let in_set: std::collections::HashSet<usize> = members.iter().copied().collect();
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(members.len());
    for &start in members {
        if !seen.insert(start) {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            out.push(v);
            for &u in sym.out_neighbors(v) {
                let u = u as usize;
                if in_set.contains(&u) && seen.insert(u) {
                    queue.push_back(u);
                }
            }
        }
    }
    out
}

/// Nodes of each part, ascending.
pub fn partition_members(assignment: &[usize], n_partitions: usize) -> Vec<Vec<usize>> {
    let mut parts = vec![Vec::new(); n_partitions];
    for (v, &p) in assignment.iter().enumerate() {
        parts[p].push(v);
    }
    parts
}
