// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Seeded random sampling and perturbation of graphs.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Graph, NodeId, NodeMapping, QueryPattern};
use crate::error::{Error, Result};

/// The generator used for every seeded operation in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Grows a connected node set of exactly `size` nodes from `start` by
/// repeatedly picking a uniformly random frontier node. Returns `None` when
/// the component of `start` is smaller than `size`.
pub fn sample_connected_indices<R: Rng + ?Sized>(
    g: &Graph,
    rng: &mut R,
    start: usize,
    size: usize,
) -> Option<Vec<usize>> {
    let mut selected = vec![start];
    let mut in_set = vec![false; g.node_count()];
    let mut on_frontier = vec![false; g.node_count()];
    in_set[start] = true;
    let mut frontier: Vec<usize> = Vec::new();
    for &nb in g.neighbors(start) {
        on_frontier[nb] = true;
        frontier.push(nb);
    }
    while selected.len() < size {
        if frontier.is_empty() {
            return None;
        }
        let pick = frontier.swap_remove(rng.random_range(0..frontier.len()));
        on_frontier[pick] = false;
        in_set[pick] = true;
        selected.push(pick);
        for &nb in g.neighbors(pick) {
            if !in_set[nb] && !on_frontier[nb] {
                on_frontier[nb] = true;
                frontier.push(nb);
            }
        }
    }
    Some(selected)
}

/// Random connected induced subgraph with between `min_size` and `max_size`
/// nodes, plus the identity mapping of its nodes back into `g`.
pub fn sample_connected_subgraph<R: Rng + ?Sized>(
    g: &Graph,
    rng: &mut R,
    min_size: usize,
    max_size: usize,
) -> Result<(QueryPattern, NodeMapping)> {
    let n = g.node_count();
    if min_size < 1 || min_size > max_size || max_size > n {
        return Err(Error::InvalidSizeRange {
            min: min_size,
            max: max_size,
            available: n,
        });
    }
    let size = rng.random_range(min_size..=max_size);
    // Connected inputs succeed on the first start node; the retry loop only
    // matters for disconnected graphs.
    for _ in 0..4 * n {
        let start = rng.random_range(0..n);
        if let Some(nodes) = sample_connected_indices(g, rng, start, size) {
            let sub = g.induced_subgraph(&nodes);
            let mapping = sub.nodes().iter().map(|node| (node.id, node.id)).collect();
            return Ok((QueryPattern::new(sub)?, mapping));
        }
    }
    Err(Error::InvalidSizeRange {
        min: min_size,
        max: max_size,
        available: n,
    })
}

/// Copy of `g` with `n` distinct previously absent edges chosen uniformly.
pub fn perturb_add_edges<R: Rng + ?Sized>(g: &Graph, rng: &mut R, n: usize) -> Result<Graph> {
    let count = g.node_count();
    let mut non_edges = Vec::new();
    for a in 0..count {
        for b in a + 1..count {
            if !g.has_edge(a, b) {
                non_edges.push((a, b));
            }
        }
    }
    if n == 0 || non_edges.len() < n {
        return Err(Error::NoNonEdge { requested: n });
    }
    let mut chosen = rand::seq::index::sample(rng, non_edges.len(), n).into_vec();
    chosen.sort_unstable();
    let extra: Vec<_> = chosen.into_iter().map(|i| non_edges[i]).collect();
    Ok(g.with_added_edges(&extra))
}

/// Removes the minimum-degree node (lowest id on ties) and reports whether
/// what remains is still connected.
pub fn remove_lowest_degree_node(g: &Graph) -> Result<(Graph, NodeId, bool)> {
    if g.node_count() < 2 {
        return Err(Error::TooSmall);
    }
    let victim = (0..g.node_count())
        .min_by_key(|&i| (g.degree(i), i))
        .expect("non-empty graph");
    let keep: Vec<usize> = (0..g.node_count()).filter(|&i| i != victim).collect();
    let rest = g.induced_subgraph(&keep);
    let connected = rest.is_connected();
    Ok((rest, g.node_id(victim), connected))
}
