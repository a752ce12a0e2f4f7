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

//! Seeded synthetic databases of connected labeled graphs.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Database;
use crate::error::{Error, Result};
use crate::graph::{seeded_rng, Graph, LabelVocabulary, Node, NodeId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_graphs: usize,
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub n_labels: usize,
    /// Fraction of node pairs joined by an edge. Values below spanning-tree
    /// density are raised to a spanning tree.
    pub edge_density: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_graphs: 300,
            min_nodes: 10,
            max_nodes: 30,
            n_labels: 6,
            edge_density: 0.15,
            seed: 0,
        }
    }
}

const CATEGORIES: [&str; 3] = ["small", "medium", "large"];

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Database> {
    if cfg.n_graphs == 0 || cfg.n_labels == 0 || cfg.min_nodes == 0 || cfg.min_nodes > cfg.max_nodes
    {
        return Err(Error::Config(format!(
            "invalid synthetic corpus parameters {cfg:?}"
        )));
    }
    let density_ok = cfg.edge_density.is_finite()
        && cfg.edge_density <= 1.0
        && (cfg.edge_density > 0.0 || cfg.max_nodes == 1);
    if !density_ok {
        return Err(Error::InvalidDensity(cfg.edge_density));
    }
    let mut rng = seeded_rng(cfg.seed);
    let span = cfg.max_nodes - cfg.min_nodes + 1;
    let graphs = (0..cfg.n_graphs)
        .map(|i| {
            let n = rng.random_range(cfg.min_nodes..=cfg.max_nodes);
            let bucket = (n - cfg.min_nodes) * CATEGORIES.len() / span;
            random_connected_graph(&mut rng, n, cfg.n_labels, cfg.edge_density)
                .with_graph_id(format!("syn-{i:04}"))
                .with_category(Some(CATEGORIES[bucket].to_string()))
        })
        .collect();
    Ok(Database {
        name: format!("synthetic-{}", cfg.seed),
        vocabulary: LabelVocabulary::numeric(cfg.n_labels),
        graphs,
    })
}

/// Random recursive tree plus uniformly chosen extra edges up to the target
/// density, with uniform labels.
pub fn random_connected_graph<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    n_labels: usize,
    density: f64,
) -> Graph {
    let pairs = n * n.saturating_sub(1) / 2;
    let target = ((density * pairs as f64).round() as usize).clamp(n.saturating_sub(1), pairs);
    let mut edges = BTreeSet::new();
    for v in 1..n {
        let parent = rng.random_range(0..v);
        edges.insert((parent, v));
    }
    while edges.len() < target {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    let nodes = (0..n)
        .map(|i| Node::new(i as u32, rng.random_range(0..n_labels)))
        .collect();
    let edges: Vec<_> = edges
        .into_iter()
        .map(|(a, b)| (NodeId(a as u32), NodeId(b as u32)))
        .collect();
    Graph::new("", nodes, &edges).expect("generated edges are simple")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_corpus_contract() {
        let db = generate_synthetic(&SynthConfig::default()).unwrap();
        assert_eq!(db.graphs.len(), 300);
        for g in &db.graphs {
            assert!(g.is_connected());
            assert!((10..=30).contains(&g.node_count()));
            assert!(g.nodes().iter().all(|n| n.label < 6));
        }
    }

    #[test]
    fn seeded() {
        let cfg = SynthConfig {
            n_graphs: 20,
            seed: 9,
            ..SynthConfig::default()
        };
        assert_eq!(
            generate_synthetic(&cfg).unwrap(),
            generate_synthetic(&cfg).unwrap()
        );
    }

    #[test]
    fn zero_density_is_infeasible() {
        let cfg = SynthConfig {
            edge_density: 0.0,
            ..SynthConfig::default()
        };
        assert!(matches!(
            generate_synthetic(&cfg),
            Err(Error::InvalidDensity(_))
        ));
        let single = SynthConfig {
            edge_density: 0.0,
            min_nodes: 1,
            max_nodes: 1,
            ..SynthConfig::default()
        };
        assert!(generate_synthetic(&single).is_ok());
    }
}
