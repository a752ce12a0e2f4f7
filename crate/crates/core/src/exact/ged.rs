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

//! Beam-search upper bound on graph edit distance with unit costs.
//!
//! Node substitution costs 1 when labels differ; node insertion and deletion,
//! edge insertion and deletion each cost 1.

use crate::graph::Graph;

const UNSET: usize = usize::MAX;

/// Symmetric approximate edit distance: the better of the two directed beam
/// searches.
pub fn approx_graph_edit_distance(g1: &Graph, g2: &Graph, beam: usize) -> f64 {
    let beam = beam.max(1);
    directed(g1, g2, beam).min(directed(g2, g1, beam)) as f64
}

#[derive(Clone)]
struct Partial {
    cost: usize,
    /// g1 index -> g2 index, `DELETED`, or `UNSET` for unprocessed nodes.
    forward: Vec<usize>,
    /// g2 index -> g1 index or `UNSET`.
    backward: Vec<usize>,
}

const DELETED: usize = usize::MAX - 1;

fn directed(g1: &Graph, g2: &Graph, beam: usize) -> usize {
    let mut order: Vec<usize> = (0..g1.node_count()).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(g1.degree(v)), v));

    let mut frontier = vec![Partial {
        cost: 0,
        forward: vec![UNSET; g1.node_count()],
        backward: vec![UNSET; g2.node_count()],
    }];
    for &v in &order {
        let mut next = Vec::with_capacity(frontier.len() * (g2.node_count() + 1));
        for state in &frontier {
            for w in 0..g2.node_count() {
                if state.backward[w] == UNSET {
                    let mut s = state.clone();
                    s.cost += substitution_cost(g1, g2, &s, v, w);
                    s.forward[v] = w;
                    s.backward[w] = v;
                    next.push(s);
                }
            }
            let mut s = state.clone();
            s.cost += 1 + g1
                .neighbors(v)
                .iter()
                .filter(|&&nb| s.forward[nb] != UNSET)
                .count();
            s.forward[v] = DELETED;
            next.push(s);
        }
        next.sort_by(|a, b| a.cost.cmp(&b.cost).then_with(|| a.forward.cmp(&b.forward)));
        next.truncate(beam);
        frontier = next;
    }
    frontier
        .iter()
        .map(|s| s.cost + completion_cost(g2, s))
        .min()
        .unwrap_or(0)
}

/// Cost of mapping `v` to `w` given the already processed nodes.
fn substitution_cost(g1: &Graph, g2: &Graph, s: &Partial, v: usize, w: usize) -> usize {
    let mut cost = usize::from(g1.label(v) != g2.label(w));
    for &nb in g1.neighbors(v) {
        match s.forward[nb] {
            UNSET => {}
            DELETED => cost += 1,
            image => cost += usize::from(!g2.has_edge(w, image)),
        }
    }
    for &nb in g2.neighbors(w) {
        let pre = s.backward[nb];
        if pre != UNSET && !g1.has_edge(v, pre) {
            cost += 1;
        }
    }
    cost
}

/// Insert every untouched g2 node and every g2 edge incident to one.
fn completion_cost(g2: &Graph, s: &Partial) -> usize {
    let inserted_nodes = s.backward.iter().filter(|&&b| b == UNSET).count();
    let inserted_edges = g2
        .edges()
        .filter(|&(a, b)| s.backward[a] == UNSET || s.backward[b] == UNSET)
        .count();
    inserted_nodes + inserted_edges
}
