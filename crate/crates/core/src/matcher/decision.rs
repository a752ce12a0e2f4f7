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

use super::{violation, MatchModel};
use crate::error::Result;
use crate::exact::{vf2_match_indices, MatchOptions};
use crate::graph::{khop_indices, Graph};
use crate::nn::Tensor;

/// Local containment test between query node `q` and target node `t`.
pub trait LocalComparator {
    fn query_len(&self) -> usize;
    fn target_len(&self) -> usize;
    fn local_match(&self, q: usize, t: usize) -> bool;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decision {
    pub decision: bool,
    /// `local_matches[q][t]`
    pub local_matches: Vec<Vec<bool>>,
}

/// Evaluates every (query node, target node) pair once, then accepts when
/// every query node has at least one local match.
pub fn subgraph_decision<C: LocalComparator + ?Sized>(comparator: &C) -> Decision {
    let local_matches: Vec<Vec<bool>> = (0..comparator.query_len())
        .map(|q| {
            (0..comparator.target_len())
                .map(|t| comparator.local_match(q, t))
                .collect()
        })
        .collect();
    let decision = local_matches.iter().all(|row| row.iter().any(|&m| m));
    Decision {
        decision,
        local_matches,
    }
}

/// `out[q][t] = order_violation(query[q], target[t])`.
pub fn violation_matrix(query: &Tensor, target: &Tensor) -> Tensor {
    let (nq, nt) = (query.rows(), target.rows());
    let mut out = Tensor::matrix(nq, nt);
    for q in 0..nq {
        let zq = query.row(q);
        for t in 0..nt {
            out.set(q, t, violation(zq, target.row(t)));
        }
    }
    out
}

/// `max_q min_t violations[q][t]`: the graph-level decision at threshold
/// `t` is true exactly when this value is below `t`. Infinite when the
/// target is empty.
pub fn decision_statistic(violations: &Tensor) -> f64 {
    (0..violations.rows())
        .map(|q| {
            violations
                .row(q)
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Thresholded order violation between precomputed embeddings.
pub struct EmbeddingComparator<'a> {
    query: &'a Tensor,
    target: &'a Tensor,
    threshold: f64,
}

impl<'a> EmbeddingComparator<'a> {
    pub fn new(query: &'a Tensor, target: &'a Tensor, threshold: f64) -> Self {
        Self {
            query,
            target,
            threshold,
        }
    }
}

impl LocalComparator for EmbeddingComparator<'_> {
    fn query_len(&self) -> usize {
        self.query.rows()
    }

    fn target_len(&self) -> usize {
        self.target.rows()
    }

    fn local_match(&self, q: usize, t: usize) -> bool {
        violation(self.query.row(q), self.target.row(t)) < self.threshold
    }
}

/// Exact local comparator: runs the exact matcher on the two k-hop
/// neighborhoods. Useful as a reference and in tests.
pub struct NeighborhoodVf2Comparator<'a> {
    query: &'a Graph,
    target: &'a Graph,
    hops: usize,
    cap: usize,
}

impl<'a> NeighborhoodVf2Comparator<'a> {
    pub fn new(query: &'a Graph, target: &'a Graph, hops: usize, cap: usize) -> Self {
        Self {
            query,
            target,
            hops,
            cap,
        }
    }
}

impl LocalComparator for NeighborhoodVf2Comparator<'_> {
    fn query_len(&self) -> usize {
        self.query.node_count()
    }

    fn target_len(&self) -> usize {
        self.target.node_count()
    }

    fn local_match(&self, q: usize, t: usize) -> bool {
        if self.query.label(q) != self.target.label(t) {
            return false;
        }
        let gq = self
            .query
            .induced_subgraph(&khop_indices(self.query, q, self.hops, self.cap));
        let gt = self
            .target
            .induced_subgraph(&khop_indices(self.target, t, self.hops, self.cap));
        matches!(
            vf2_match_indices(&gq, &gt, &MatchOptions::default()),
            Ok(Some(_))
        )
    }
}

impl MatchModel {
    /// Convenience wrapper embedding both graphs from scratch.
    pub fn decide(&self, query: &Graph, target: &Graph) -> Result<Decision> {
        let zq = self.embed_all(query)?;
        let zt = self.embed_all(target)?;
        Ok(subgraph_decision(&EmbeddingComparator::new(
            &zq,
            &zt,
            self.comparator().threshold,
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::cell::Cell;

    #[test]
    fn statistic_examples() {
        let v = Tensor::from_rows(&[vec![0.5, 0.1], vec![0.3, 0.7]]).unwrap();
        assert_eq!(decision_statistic(&v), 0.3);
        assert_eq!(decision_statistic(&Tensor::matrix(2, 0)), f64::INFINITY);
    }

    proptest! {
        #[test]
        fn statistic_agrees_with_thresholded_decision(
            rows in 1usize..5,
            cols in 1usize..6,
            seed in any::<u64>(),
            threshold in 0.0f64..1.0,
        ) {
            use rand::Rng;
            let mut rng = crate::graph::seeded_rng(seed);
            let zq: Vec<Vec<f64>> = (0..rows).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let zt: Vec<Vec<f64>> = (0..cols).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let (zq, zt) = (Tensor::from_rows(&zq).unwrap(), Tensor::from_rows(&zt).unwrap());
            let decided = subgraph_decision(&EmbeddingComparator::new(&zq, &zt, threshold)).decision;
            prop_assert_eq!(decided, decision_statistic(&violation_matrix(&zq, &zt)) < threshold);
        }
    }

    #[test]
    fn exact_stub_on_single_nodes() {
        let target = Graph::from_labels(&[0, 1, 2], &[(0, 1), (1, 2)]).unwrap();
        let present = Graph::from_labels(&[2], &[]).unwrap();
        let absent = Graph::from_labels(&[3], &[]).unwrap();
        assert!(
            subgraph_decision(&NeighborhoodVf2Comparator::new(&present, &target, 3, 30)).decision
        );
        assert!(
            !subgraph_decision(&NeighborhoodVf2Comparator::new(&absent, &target, 3, 30)).decision
        );
    }

    struct Counting<'a> {
        inner: EmbeddingComparator<'a>,
        calls: Cell<usize>,
    }

    impl LocalComparator for Counting<'_> {
        fn query_len(&self) -> usize {
            self.inner.query_len()
        }
        fn target_len(&self) -> usize {
            self.inner.target_len()
        }
        fn local_match(&self, q: usize, t: usize) -> bool {
            self.calls.set(self.calls.get() + 1);
            self.inner.local_match(q, t)
        }
    }

    #[test]
    fn matrix_shape_and_call_count() {
        let zq = Tensor::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![5.0, 0.0]]).unwrap();
        let zt = Tensor::from_rows(&[
            vec![1.0, 1.0],
            vec![2.0, 0.5],
            vec![0.0, 3.0],
            vec![0.1, 0.1],
        ])
        .unwrap();
        let cmp = Counting {
            inner: EmbeddingComparator::new(&zq, &zt, 0.5),
            calls: Cell::new(0),
        };
        let d = subgraph_decision(&cmp);
        assert_eq!(cmp.calls.get(), 12);
        assert_eq!(d.local_matches.len(), 3);
        assert!(d.local_matches.iter().all(|r| r.len() == 4));
        // row 2 (5, 0) is violated by every target: (5-2)^2 = 9 at best.
        assert!(!d.decision);
        assert_eq!(d.local_matches[1], vec![true, true, false, false]);
    }

    #[test]
    fn dropping_query_rows_never_breaks_a_match() {
        let zt = Tensor::from_rows(&[vec![1.0, 1.0], vec![2.0, 0.5]]).unwrap();
        let full = Tensor::from_rows(&[vec![0.0, 0.0], vec![1.5, 0.2], vec![0.9, 0.9]]).unwrap();
        assert!(subgraph_decision(&EmbeddingComparator::new(&full, &zt, 0.1)).decision);
        for keep in [vec![0usize, 1], vec![1, 2], vec![2]] {
            let rows: Vec<Vec<f64>> = keep.iter().map(|&r| full.row(r).to_vec()).collect();
            let part = Tensor::from_rows(&rows).unwrap();
            assert!(subgraph_decision(&EmbeddingComparator::new(&part, &zt, 0.1)).decision);
        }
    }
}
