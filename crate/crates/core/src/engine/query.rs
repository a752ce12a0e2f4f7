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

//! Database scans: exact and approximate pattern queries.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::store::{precompute_store, EmbeddingStore};
use crate::aligner::{greedy_assign, AlignModel, ProbabilityMatrix};
use crate::data::Database;
use crate::error::{Error, Result};
use crate::exact::{vf2_match, vf2_match_indices, MatchOptions};
use crate::graph::{remove_lowest_degree_node, Graph, NodeId, NodeMapping, QueryPattern};
use crate::matcher::{subgraph_decision, EmbeddingComparator, MatchModel};
use crate::nn::Tensor;

/// Number of per-node alternatives reported with each result.
pub const ALTERNATIVES: usize = 3;

/// A node mapping with the probabilities it was read from, when available.
#[derive(Clone, Debug, PartialEq)]
pub struct Alignment {
    pub mapping: NodeMapping,
    pub probabilities: Option<ProbabilityMatrix>,
}

/// Something that can decide containment and align a query against the
/// graphs of a database.
pub trait MatchBackend {
    /// Per-query state computed once per scan.
    type Prepared;

    fn graphs(&self) -> &[Graph];
    fn prepare(&self, query: &Graph) -> Result<Self::Prepared>;
    fn decide(&self, prepared: &Self::Prepared, query: &Graph, target: usize) -> Result<bool>;
    fn align(&self, prepared: &Self::Prepared, query: &Graph, target: usize) -> Result<Alignment>;
}

/// Trained matcher and aligner over a precomputed embedding store.
#[derive(Clone, Debug)]
pub struct NeuralEngine {
    db: Database,
    matcher: MatchModel,
    aligner: AlignModel,
    store: EmbeddingStore,
}

/// Query-side embeddings for [`NeuralEngine`].
#[derive(Clone, Debug)]
pub struct NeuralQuery {
    pub order: Tensor,
    pub align: Tensor,
}

impl NeuralEngine {
    /// Checks that the store was built from these models and this database.
    pub fn new(
        db: Database,
        matcher: MatchModel,
        aligner: AlignModel,
        store: EmbeddingStore,
    ) -> Result<Self> {
        store.check_models(&matcher, &aligner)?;
        store.check_database(&db.graphs)?;
        Ok(Self {
            db,
            matcher,
            aligner,
            store,
        })
    }

    /// Builds the store on the spot.
    pub fn precompute(db: Database, matcher: MatchModel, aligner: AlignModel) -> Result<Self> {
        let store = precompute_store(&db.graphs, &matcher, &aligner)?;
        Self::new(db, matcher, aligner, store)
    }

    pub fn database(&self) -> &Database {
        &self.db
    }

    pub fn matcher(&self) -> &MatchModel {
        &self.matcher
    }

    pub fn aligner(&self) -> &AlignModel {
        &self.aligner
    }

    pub fn store(&self) -> &EmbeddingStore {
        &self.store
    }

    /// Order violations between every query node and every node of `target`.
    pub fn violations(&self, prepared: &NeuralQuery, target: usize) -> Tensor {
        crate::matcher::violation_matrix(&prepared.order, &self.store.graphs[target].order)
    }
}

impl MatchBackend for NeuralEngine {
    type Prepared = NeuralQuery;

    fn graphs(&self) -> &[Graph] {
        &self.db.graphs
    }

    fn prepare(&self, query: &Graph) -> Result<NeuralQuery> {
        Ok(NeuralQuery {
            order: self.matcher.embed_all(query)?,
            align: self.aligner.embed_graph(query)?,
        })
    }

    fn decide(&self, prepared: &NeuralQuery, _query: &Graph, target: usize) -> Result<bool> {
        let stored = &self.store.graphs[target].order;
        let comparator =
            EmbeddingComparator::new(&prepared.order, stored, self.matcher.comparator().threshold);
        Ok(subgraph_decision(&comparator).decision)
    }

    fn align(&self, prepared: &NeuralQuery, query: &Graph, target: usize) -> Result<Alignment> {
        let g = &self.db.graphs[target];
        let attention = self.aligner.attention_from_embeddings(
            query,
            &prepared.align,
            g,
            &self.store.graphs[target].align,
        )?;
        let probabilities = ProbabilityMatrix::from_scores(&attention);
        Ok(Alignment {
            mapping: greedy_assign(&probabilities)?,
            probabilities: Some(probabilities),
        })
    }
}

/// Exact matching used as a reference backend.
#[derive(Clone, Debug)]
pub struct ExactBackend {
    graphs: Vec<Graph>,
    options: MatchOptions,
}

impl ExactBackend {
    pub fn new(graphs: Vec<Graph>, options: MatchOptions) -> Self {
        Self { graphs, options }
    }
}

impl MatchBackend for ExactBackend {
    type Prepared = ();

    fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    fn prepare(&self, _query: &Graph) -> Result<()> {
        Ok(())
    }

    fn decide(&self, _: &(), query: &Graph, target: usize) -> Result<bool> {
        Ok(vf2_match_indices(query, &self.graphs[target], &self.options)?.is_some())
    }

    fn align(&self, _: &(), query: &Graph, target: usize) -> Result<Alignment> {
        let mapping = vf2_match(query, &self.graphs[target], &self.options)?
            .ok_or_else(|| Error::InvalidGraph("no exact match to align".into()))?;
        Ok(Alignment {
            mapping,
            probabilities: None,
        })
    }
}

/// Most probable targets of one query node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeAlternatives {
    pub query_node: NodeId,
    pub candidates: Vec<Candidate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub target_node: NodeId,
    pub probability: f64,
}

/// One matched database graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub graph_id: String,
    pub decision: bool,
    pub alignment: Option<NodeMapping>,
    /// Mean probability of the assigned pairs.
    pub score: Option<f64>,
    pub alternatives: Vec<NodeAlternatives>,
    /// Query nodes removed before this graph matched; 0 for the exact query.
    pub perturbation_depth: usize,
    /// Why no alignment is attached, e.g. an oversize target.
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryFilters {
    /// Only graphs in this category.
    #[serde(default)]
    pub category: Option<String>,
}

impl QueryFilters {
    fn admits(&self, g: &Graph) -> bool {
        self.category
            .as_deref()
            .is_none_or(|c| g.category() == Some(c))
    }
}

fn satisfies(
    constraints: &BTreeMap<NodeId, BTreeMap<String, String>>,
    mapping: &NodeMapping,
    target: &Graph,
) -> bool {
    constraints.iter().all(|(q, wanted)| {
        let Some(node) = mapping
            .get(*q)
            .and_then(|t| target.index_of(t))
            .map(|i| target.node(i))
        else {
            return false;
        };
        wanted.iter().all(|(k, v)| node.attrs.get(k) == Some(v))
    })
}

fn build_result<B: MatchBackend>(
    backend: &B,
    prepared: &B::Prepared,
    pattern: &QueryPattern,
    target: usize,
) -> Result<Option<QueryResult>> {
    let query = pattern.graph();
    let g = &backend.graphs()[target];
    let mut result = QueryResult {
        graph_id: g.graph_id().to_string(),
        decision: true,
        alignment: None,
        score: None,
        alternatives: Vec::new(),
        perturbation_depth: 0,
        note: None,
    };
    match backend.align(prepared, query, target) {
        Ok(alignment) => {
            if !satisfies(pattern.constraints(), &alignment.mapping, g) {
                return Ok(None);
            }
            if let Some(p) = &alignment.probabilities {
                let cols = alignment
                    .mapping
                    .to_indices(query, g)
                    .expect("mapping covers the query");
                let total: f64 = cols.iter().enumerate().map(|(q, &t)| p.get(q, t)).sum();
                result.score = Some(total / cols.len() as f64);
                result.alternatives = (0..p.rows())
                    .map(|q| NodeAlternatives {
                        query_node: p.query_ids[q],
                        candidates: p
                            .top_k(q, ALTERNATIVES)
                            .into_iter()
                            .map(|(target_node, probability)| Candidate {
                                target_node,
                                probability,
                            })
                            .collect(),
                    })
                    .collect();
            }
            result.alignment = Some(alignment.mapping);
        }
        Err(err @ (Error::TargetTooLarge { .. } | Error::Infeasible { .. })) => {
            if !pattern.constraints().is_empty() {
                return Ok(None);
            }
            result.note = Some(err.to_string());
        }
        Err(err) => return Err(err),
    }
    Ok(Some(result))
}

/// Orders by descending score (unscored last), then graph id.
fn sort_results(results: &mut [QueryResult]) {
    results.sort_by(|a, b| {
        let (sa, sb) = (
            a.score.unwrap_or(f64::NEG_INFINITY),
            b.score.unwrap_or(f64::NEG_INFINITY),
        );
        sb.total_cmp(&sa).then_with(|| a.graph_id.cmp(&b.graph_id))
    });
}

/// Linear scan over the database: containment decision per graph, then an
/// alignment for each accepted graph.
pub fn query<B: MatchBackend>(
    backend: &B,
    pattern: &QueryPattern,
    filters: &QueryFilters,
) -> Result<Vec<QueryResult>> {
    let prepared = backend.prepare(pattern.graph())?;
    let mut results = Vec::new();
    for (t, g) in backend.graphs().iter().enumerate() {
        if !filters.admits(g) || !backend.decide(&prepared, pattern.graph(), t)? {
            continue;
        }
        if let Some(r) = build_result(backend, &prepared, pattern, t)? {
            results.push(r);
        }
    }
    sort_results(&mut results);
    Ok(results)
}

/// Repeats the query while dropping the lowest-degree query node, up to
/// `max_steps` times or until the pattern would fall apart. Graphs first
/// matched after `d` removals are appended with depth `d`.
pub fn approximate_query<B: MatchBackend>(
    backend: &B,
    pattern: &QueryPattern,
    filters: &QueryFilters,
    max_steps: usize,
) -> Result<Vec<QueryResult>> {
    let mut results = query(backend, pattern, filters)?;
    let mut seen: BTreeSet<String> = results.iter().map(|r| r.graph_id.clone()).collect();
    let mut current = pattern.clone();
    for depth in 1..=max_steps {
        if current.graph().node_count() < 2 {
            break;
        }
        let (rest, removed, connected) = remove_lowest_degree_node(current.graph())?;
        if !connected {
            break;
        }
        let mut constraints = current.constraints().clone();
        constraints.remove(&removed);
        current = QueryPattern::with_constraints(rest, constraints)?;
        for mut r in query(backend, &current, filters)? {
            if seen.insert(r.graph_id.clone()) {
                r.perturbation_depth = depth;
                results.push(r);
            }
        }
    }
    Ok(results)
}
