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

//! Training pairs of neighborhood graphs, verified with the exact matcher.

use std::time::Duration;

use rand::Rng;

use crate::error::{Error, Result};
use crate::exact::{vf2_match_indices, MatchOptions};
use crate::graph::{khop_indices, perturb_add_edges, sample_connected_indices, Graph};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairLabel {
    Positive,
    Negative,
}

/// What [`sample_training_pair`] should produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairKind {
    Positive,
    /// Query neighborhood drawn from a different graph.
    Negative,
    /// A positive pair whose query gained random edges until containment broke.
    HardNegative,
}

/// Two neighborhood graphs and their anchors. `query_anchor` and
/// `target_anchor` are node indices inside the respective graphs.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingPair {
    pub query: Graph,
    pub query_anchor: usize,
    pub target: Graph,
    pub target_anchor: usize,
    pub label: PairLabel,
    pub hard: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    pub hops: usize,
    pub neighborhood_cap: usize,
    /// Attempts per pair before giving up with `SamplingExhausted`.
    pub max_attempts: usize,
    /// Edges added to a positive query to build a hard negative: `1..=max`.
    pub max_added_edges: usize,
    pub verify_budget: Duration,
    /// Largest query piece; `None` lets it grow to the whole target neighborhood.
    pub max_query_nodes: Option<usize>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            hops: 3,
            neighborhood_cap: 30,
            max_attempts: 200,
            max_added_edges: 3,
            verify_budget: Duration::from_millis(200),
            max_query_nodes: None,
        }
    }
}

/// The k-hop neighborhood of a random (graph, anchor) and the anchor index in it.
fn random_neighborhood<R: Rng + ?Sized>(
    db: &[Graph],
    rng: &mut R,
    cfg: &SamplerConfig,
    graph: usize,
) -> (Graph, usize) {
    let g = &db[graph];
    let anchor = rng.random_range(0..g.node_count());
    let keep = khop_indices(g, anchor, cfg.hops, cfg.neighborhood_cap);
    let sub = g.induced_subgraph(&keep);
    let local = sub.index_of(g.node_id(anchor)).expect("anchor kept");
    (sub, local)
}

/// Random connected piece of `g` containing `anchor`, re-truncated to the
/// anchor's k-hop neighborhood inside the piece.
fn anchored_piece<R: Rng + ?Sized>(
    g: &Graph,
    anchor: usize,
    rng: &mut R,
    cfg: &SamplerConfig,
    max_size: usize,
) -> (Graph, usize) {
    let cap = cfg.max_query_nodes.unwrap_or(usize::MAX);
    let size = rng.random_range(1..=max_size.min(cap).min(g.node_count()).max(1));
    let nodes = sample_connected_indices(g, rng, anchor, size).unwrap_or_else(|| vec![anchor]);
    let piece = g.induced_subgraph(&nodes);
    let local = piece.index_of(g.node_id(anchor)).expect("anchor kept");
    let keep = khop_indices(&piece, local, cfg.hops, cfg.neighborhood_cap);
    let piece = piece.induced_subgraph(&keep);
    let local = piece.index_of(g.node_id(anchor)).expect("anchor kept");
    (piece, local)
}

fn contained(q: &Graph, t: &Graph, cfg: &SamplerConfig) -> Option<bool> {
    let opts = MatchOptions::default().with_budget(cfg.verify_budget);
    match vf2_match_indices(q, t, &opts) {
        Ok(found) => Some(found.is_some()),
        Err(_) => None,
    }
}

pub fn sample_training_pair<R: Rng + ?Sized>(
    db: &[Graph],
    rng: &mut R,
    cfg: &SamplerConfig,
    want: PairKind,
) -> Result<TrainingPair> {
    if db.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for _ in 0..cfg.max_attempts {
        let source = rng.random_range(0..db.len());
        let (target, target_anchor) = random_neighborhood(db, rng, cfg, source);
        match want {
            PairKind::Positive | PairKind::HardNegative => {
                let (query, query_anchor) =
                    anchored_piece(&target, target_anchor, rng, cfg, target.node_count());
                if want == PairKind::Positive {
                    return Ok(TrainingPair {
                        query,
                        query_anchor,
                        target,
                        target_anchor,
                        label: PairLabel::Positive,
                        hard: false,
                    });
                }
                let free = query.node_count() * (query.node_count().saturating_sub(1)) / 2
                    - query.edge_count();
                if free == 0 {
                    continue;
                }
                let added = rng.random_range(1..=cfg.max_added_edges.min(free).max(1));
                let perturbed = perturb_add_edges(&query, rng, added)?;
                if contained(&perturbed, &target, cfg) == Some(false) {
                    return Ok(TrainingPair {
                        query: perturbed,
                        query_anchor,
                        target,
                        target_anchor,
                        label: PairLabel::Negative,
                        hard: true,
                    });
                }
            }
            PairKind::Negative => {
                let other = if db.len() > 1 {
                    let j = rng.random_range(0..db.len() - 1);
                    if j >= source {
                        j + 1
                    } else {
                        j
                    }
                } else {
                    source
                };
                let (pool, pool_anchor) = random_neighborhood(db, rng, cfg, other);
                let (query, query_anchor) =
                    anchored_piece(&pool, pool_anchor, rng, cfg, target.node_count());
                if contained(&query, &target, cfg) == Some(false) {
                    return Ok(TrainingPair {
                        query,
                        query_anchor,
                        target,
                        target_anchor,
                        label: PairLabel::Negative,
                        hard: false,
                    });
                }
            }
        }
    }
    Err(Error::SamplingExhausted {
        attempts: cfg.max_attempts,
    })
}

/// Half positives, a quarter plain negatives and a quarter hard negatives,
/// interleaved by position.
pub fn sample_batch<R: Rng + ?Sized>(
    db: &[Graph],
    rng: &mut R,
    cfg: &SamplerConfig,
    size: usize,
) -> Result<Vec<TrainingPair>> {
    (0..size)
        .map(|i| {
            let kind = match i % 4 {
                0 | 1 => PairKind::Positive,
                2 => PairKind::Negative,
                _ => PairKind::HardNegative,
            };
            sample_training_pair(db, rng, cfg, kind).or_else(|err| match (kind, err) {
                // Databases of near-complete graphs may admit no hard negatives.
                (PairKind::HardNegative, Error::SamplingExhausted { .. }) => {
                    sample_training_pair(db, rng, cfg, PairKind::Negative)
                }
                (_, err) => Err(err),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::vf2_match;
    use crate::graph::seeded_rng;

    fn db() -> Vec<Graph> {
        let mut rng = seeded_rng(17);
        (0..6)
            .map(|i| {
                let n = 8 + i;
                let mut edges = std::collections::BTreeSet::new();
                for v in 1..n as u32 {
                    edges.insert((rng.random_range(0..v), v));
                }
                for _ in 0..n / 2 {
                    let a = rng.random_range(0..n as u32);
                    let b = rng.random_range(0..n as u32);
                    if a != b {
                        edges.insert((a.min(b), a.max(b)));
                    }
                }
                let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
                Graph::from_labels(&labels, &edges.into_iter().collect::<Vec<_>>()).unwrap()
            })
            .collect()
    }

    #[test]
    fn labels_are_verified() {
        let db = db();
        let mut rng = seeded_rng(3);
        let cfg = SamplerConfig::default();
        let opts = MatchOptions::default();
        for kind in [
            PairKind::Positive,
            PairKind::Negative,
            PairKind::HardNegative,
        ] {
            for _ in 0..40 {
                let p = sample_training_pair(&db, &mut rng, &cfg, kind).unwrap();
                let found = vf2_match(&p.query, &p.target, &opts).unwrap();
                assert_eq!(found.is_some(), p.label == PairLabel::Positive, "{kind:?}");
                assert!(p.query.is_connected());
                assert!(p.query_anchor < p.query.node_count());
                assert!(p.target_anchor < p.target.node_count());
                assert_eq!(p.hard, kind == PairKind::HardNegative);
            }
        }
    }

    #[test]
    fn positive_anchor_maps_to_anchor() {
        let db = db();
        let mut rng = seeded_rng(8);
        let cfg = SamplerConfig::default();
        for _ in 0..30 {
            let p = sample_training_pair(&db, &mut rng, &cfg, PairKind::Positive).unwrap();
            assert_eq!(
                p.query.node_id(p.query_anchor),
                p.target.node_id(p.target_anchor)
            );
        }
    }

    #[test]
    fn seeded_stream_is_reproducible() {
        let db = db();
        let cfg = SamplerConfig::default();
        let stream = |seed| {
            let mut rng = seeded_rng(seed);
            (0..1000 / 8)
                .flat_map(|_| sample_batch(&db, &mut rng, &cfg, 8).unwrap())
                .collect::<Vec<_>>()
        };
        let a = stream(21);
        assert_eq!(a.len(), 1000);
        assert_eq!(a, stream(21));
    }

    #[test]
    fn empty_database() {
        let mut rng = seeded_rng(0);
        assert!(matches!(
            sample_training_pair(&[], &mut rng, &SamplerConfig::default(), PairKind::Positive),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn exhaustion_is_reported() {
        // Single-node graphs cannot yield hard negatives.
        let db = vec![Graph::from_labels(&[0], &[]).unwrap()];
        let mut rng = seeded_rng(0);
        let cfg = SamplerConfig {
            max_attempts: 5,
            ..SamplerConfig::default()
        };
        assert!(matches!(
            sample_training_pair(&db, &mut rng, &cfg, PairKind::HardNegative),
            Err(Error::SamplingExhausted { attempts: 5 })
        ));
    }
}
