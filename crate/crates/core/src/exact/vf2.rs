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

//! VF2-style backtracking for edge-induced subgraph isomorphism.

use std::time::Instant;

use super::MatchOptions;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeMapping};

const UNMAPPED: usize = usize::MAX;
const CLOCK_INTERVAL: u64 = 1024;

/// Finds one embedding of `q` into `t`, or `None` when there is none.
pub fn vf2_match(q: &Graph, t: &Graph, opts: &MatchOptions) -> Result<Option<NodeMapping>> {
    Ok(vf2_match_indices(q, t, opts)?.map(|image| NodeMapping::from_indices(q, t, &image)))
}

/// Like [`vf2_match`] but returns `image[q] = target index`.
pub fn vf2_match_indices(q: &Graph, t: &Graph, opts: &MatchOptions) -> Result<Option<Vec<usize>>> {
    let mut found = None;
    State::new(q, t, opts).run(&mut |image| {
        found = Some(image.to_vec());
        false
    })?;
    Ok(found)
}

/// All distinct embeddings up to `opts.max_matches`, in search order.
pub fn enumerate_matches(q: &Graph, t: &Graph, opts: &MatchOptions) -> Result<Vec<NodeMapping>> {
    Ok(enumerate_match_indices(q, t, opts)?
        .into_iter()
        .map(|image| NodeMapping::from_indices(q, t, &image))
        .collect())
}

pub fn enumerate_match_indices(
    q: &Graph,
    t: &Graph,
    opts: &MatchOptions,
) -> Result<Vec<Vec<usize>>> {
    let cap = opts.max_matches.max(1);
    let mut out = Vec::new();
    State::new(q, t, opts).run(&mut |image| {
        out.push(image.to_vec());
        out.len() < cap
    })?;
    Ok(out)
}

struct State<'a> {
    q: &'a Graph,
    t: &'a Graph,
    label_aware: bool,
    deadline: Option<Instant>,
    expansions: u64,
    /// Query nodes in matching order.
    order: Vec<usize>,
    /// For each position in `order`, an earlier-matched query neighbor.
    parent: Vec<Option<usize>>,
    /// Target nodes ranked ascending by (degree, index).
    t_by_degree: Vec<usize>,
    /// Neighbor lists of the target ranked the same way.
    t_neighbors_by_degree: Vec<Vec<usize>>,
    q_map: Vec<usize>,
    t_map: Vec<usize>,
    /// Number of matched neighbors per node; > 0 on an unmatched node means
    /// it belongs to the terminal set.
    q_touch: Vec<usize>,
    t_touch: Vec<usize>,
}

impl<'a> State<'a> {
    fn new(q: &'a Graph, t: &'a Graph, opts: &MatchOptions) -> Self {
        let rank = |v: usize| (t.degree(v), v);
        let mut t_by_degree: Vec<usize> = (0..t.node_count()).collect();
        t_by_degree.sort_by_key(|&v| rank(v));
        let t_neighbors_by_degree = (0..t.node_count())
            .map(|v| {
                let mut list = t.neighbors(v).to_vec();
                list.sort_by_key(|&u| rank(u));
                list
            })
            .collect();
        let (order, parent) = matching_order(q);
        Self {
            q,
            t,
            label_aware: opts.label_aware,
            deadline: opts.time_budget.map(|b| Instant::now() + b),
            expansions: 0,
            order,
            parent,
            t_by_degree,
            t_neighbors_by_degree,
            q_map: vec![UNMAPPED; q.node_count()],
            t_map: vec![UNMAPPED; t.node_count()],
            q_touch: vec![0; q.node_count()],
            t_touch: vec![0; t.node_count()],
        }
    }

    fn run(&mut self, emit: &mut dyn FnMut(&[usize]) -> bool) -> Result<()> {
        if self.q.node_count() > self.t.node_count() || self.q.edge_count() > self.t.edge_count() {
            return Ok(());
        }
        if self.label_aware && !label_counts_fit(self.q, self.t) {
            return Ok(());
        }
        if self.q.node_count() == 0 {
            emit(&[]);
            return Ok(());
        }
        self.descend(0, emit).map(|_| ())
    }

    /// Returns `Ok(false)` once `emit` asks to stop.
    fn descend(&mut self, depth: usize, emit: &mut dyn FnMut(&[usize]) -> bool) -> Result<bool> {
        if depth == self.order.len() {
            return Ok(emit(&self.q_map));
        }
        self.tick()?;
        let qv = self.order[depth];
        let candidates: Vec<usize> = match self.parent[depth] {
            Some(p) => self.t_neighbors_by_degree[self.q_map[p]]
                .iter()
                .copied()
                .filter(|&c| self.t_map[c] == UNMAPPED)
                .collect(),
            None => self
                .t_by_degree
                .iter()
                .copied()
                .filter(|&c| self.t_map[c] == UNMAPPED)
                .collect(),
        };
        for tv in candidates {
            if !self.feasible(qv, tv) {
                continue;
            }
            self.push(qv, tv);
            let keep_going = self.descend(depth + 1, emit);
            self.pop(qv, tv);
            if !keep_going? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn tick(&mut self) -> Result<()> {
        self.expansions += 1;
        if self.expansions % CLOCK_INTERVAL == 0 {
            if let Some(deadline) = self.deadline {
                if Instant::now() >= deadline {
                    return Err(Error::Timeout);
                }
            }
        }
        Ok(())
    }

    fn feasible(&self, qv: usize, tv: usize) -> bool {
        let (q, t) = (self.q, self.t);
        if self.label_aware && q.label(qv) != t.label(tv) {
            return false;
        }
        if q.degree(qv) > t.degree(tv) {
            return false;
        }
        let mut q_term = 0;
        let mut q_new = 0;
        for &nb in q.neighbors(qv) {
            let image = self.q_map[nb];
            if image != UNMAPPED {
                if !t.has_edge(tv, image) {
                    return false;
                }
            } else if self.q_touch[nb] > 0 {
                q_term += 1;
            } else {
                q_new += 1;
            }
        }
        let mut t_term = 0;
        let mut t_free = 0;
        for &nb in t.neighbors(tv) {
            if self.t_map[nb] == UNMAPPED {
                t_free += 1;
                if self.t_touch[nb] > 0 {
                    t_term += 1;
                }
            }
        }
        // Unmatched terminal query neighbors need terminal target images, and
        // every unmatched query neighbor needs some unmatched target neighbor.
        q_term <= t_term && q_term + q_new <= t_free
    }

    fn push(&mut self, qv: usize, tv: usize) {
        self.q_map[qv] = tv;
        self.t_map[tv] = qv;
        for &nb in self.q.neighbors(qv) {
            self.q_touch[nb] += 1;
        }
        for &nb in self.t.neighbors(tv) {
            self.t_touch[nb] += 1;
        }
    }

    fn pop(&mut self, qv: usize, tv: usize) {
        self.q_map[qv] = UNMAPPED;
        self.t_map[tv] = UNMAPPED;
        for &nb in self.q.neighbors(qv) {
            self.q_touch[nb] -= 1;
        }
        for &nb in self.t.neighbors(tv) {
            self.t_touch[nb] -= 1;
        }
    }
}

fn label_counts_fit(q: &Graph, t: &Graph) -> bool {
    let size = q.max_label().max(t.max_label()).map_or(0, |m| m + 1);
    let mut counts = vec![0isize; size];
    for n in t.nodes() {
        counts[n.label] += 1;
    }
    for n in q.nodes() {
        counts[n.label] -= 1;
        if counts[n.label] < 0 {
            return false;
        }
    }
    true
}

/// Static matching order: each component starts at its highest-degree node,
/// then repeatedly takes the unordered node with the most ordered neighbors
/// (ties: higher degree, then lower index). The parent of a node is its
/// lowest-position ordered neighbor.
fn matching_order(q: &Graph) -> (Vec<usize>, Vec<Option<usize>>) {
    let n = q.node_count();
    let mut placed = vec![false; n];
    let mut links = vec![0usize; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let next = (0..n)
            .filter(|&v| !placed[v])
            .max_by(|&a, &b| {
                (links[a], q.degree(a))
                    .cmp(&(links[b], q.degree(b)))
                    .then(b.cmp(&a))
            })
            .expect("unplaced node exists");
        placed[next] = true;
        order.push(next);
        for &nb in q.neighbors(next) {
            links[nb] += 1;
        }
    }
    let mut position = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        position[v] = i;
    }
    let parent = order
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            q.neighbors(v)
                .iter()
                .copied()
                .filter(|&nb| position[nb] < i)
                .min_by_key(|&nb| position[nb])
        })
        .collect();
    (order, parent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures;
    use std::time::Duration;

    #[test]
    fn triangle_in_k4() {
        let m = vf2_match(
            &fixtures::complete(3),
            &fixtures::complete(4),
            &MatchOptions::label_blind(),
        )
        .unwrap()
        .unwrap();
        assert!(m.is_subgraph_embedding(&fixtures::complete(3), &fixtures::complete(4), false));
    }

    #[test]
    fn triangle_not_in_star() {
        let m = vf2_match(
            &fixtures::complete(3),
            &fixtures::star(3),
            &MatchOptions::label_blind(),
        )
        .unwrap();
        assert!(m.is_none());
    }

    #[test]
    fn labels_matter() {
        // red = 0, blue = 1
        let target = Graph::from_labels(&[0, 1, 0], &[(0, 1), (1, 2)]).unwrap();
        let red_blue = Graph::from_labels(&[0, 1], &[(0, 1)]).unwrap();
        let red_red = Graph::from_labels(&[0, 0], &[(0, 1)]).unwrap();
        let opts = MatchOptions::default();
        let m = vf2_match(&red_blue, &target, &opts).unwrap().unwrap();
        assert!(m.is_subgraph_embedding(&red_blue, &target, true));
        assert!(vf2_match(&red_red, &target, &opts).unwrap().is_none());
        assert!(vf2_match(&red_red, &target, &MatchOptions::label_blind())
            .unwrap()
            .is_some());
    }

    #[test]
    fn enumerates_all_triangle_embeddings_in_k4() {
        let all = enumerate_matches(
            &fixtures::complete(3),
            &fixtures::complete(4),
            &MatchOptions::label_blind(),
        )
        .unwrap();
        assert_eq!(all.len(), 24);
        let mut unique = all.clone();
        unique.sort_by_key(|m| m.iter().collect::<Vec<_>>());
        unique.dedup();
        assert_eq!(unique.len(), 24);
        let capped = enumerate_matches(
            &fixtures::complete(3),
            &fixtures::complete(4),
            &MatchOptions::label_blind().with_max_matches(5),
        )
        .unwrap();
        assert_eq!(capped.len(), 5);
        assert_eq!(&capped[..], &all[..5]);
    }

    #[test]
    fn single_node_query_counts_label_occurrences() {
        let q = Graph::from_labels(&[2], &[]).unwrap();
        let t = Graph::from_labels(&[2, 0, 2, 2, 1], &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let all = enumerate_matches(&q, &t, &MatchOptions::default()).unwrap();
        assert_eq!(all.len(), 3);
    }

    #[test]
    fn edge_induced_semantics() {
        // A path maps into a triangle even though the triangle has an extra edge.
        assert!(vf2_match(
            &fixtures::path(3),
            &fixtures::complete(3),
            &MatchOptions::label_blind()
        )
        .unwrap()
        .is_some());
    }

    #[test]
    fn timeout_is_reported() {
        // A 14-node path into a 13-clique with one pendant node: embeddings
        // exist, but there are factorially many of them.
        let q = fixtures::path(14);
        let mut edges = Vec::new();
        for a in 0..13u32 {
            for b in a + 1..13 {
                edges.push((a, b));
            }
        }
        edges.push((0, 13));
        let t = Graph::unlabeled(14, &edges).unwrap();
        let opts = MatchOptions {
            label_aware: false,
            max_matches: usize::MAX,
            time_budget: Some(Duration::from_millis(20)),
        };
        assert!(vf2_match(&q, &t, &opts).unwrap().is_some());
        assert!(matches!(
            enumerate_matches(&q, &t, &opts),
            Err(Error::Timeout)
        ));
    }
}
