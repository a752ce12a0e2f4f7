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

//! Native JSON graph records.
//!
//! ```json
//! {"graph_id": "g0", "name": "optional", "category": "optional",
//!  "nodes": [{"id": 0, "label": "C", "attrs": {"kind": "x"}}],
//!  "edges": [[0, 1]]}
//! ```
//!
//! Labels may be strings or integers; integers are treated as their decimal
//! names. Attribute values may be any JSON scalar and are kept as strings.

use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::Database;
use crate::error::{Error, Result};
use crate::graph::{Graph, LabelVocabulary, Node, NodeId, QueryPattern};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelValue {
    Index(u64),
    Name(String),
}

impl LabelValue {
    pub fn name(&self) -> String {
        match self {
            LabelValue::Index(i) => i.to_string(),
            LabelValue::Name(s) => s.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: u32,
    pub label: LabelValue,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attrs: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphRecord {
    #[serde(default)]
    pub graph_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    pub nodes: Vec<NodeRecord>,
    #[serde(default)]
    pub edges: Vec<[u32; 2]>,
}

/// A query pattern file or request body: a graph record plus optional
/// per-node attribute constraints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternRecord {
    #[serde(flatten)]
    pub graph: GraphRecord,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constraints: BTreeMap<u32, BTreeMap<String, String>>,
}

fn scalar_string(context: &str, key: &str, v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        _ => Err(Error::format(
            context,
            format!("attribute {key:?} must be a scalar"),
        )),
    }
}

/// Normalises edges: drops self-loops, merges both directions and
/// duplicates, rejects unknown endpoints.
fn clean_edges(
    context: &str,
    ids: &BTreeSet<u32>,
    edges: &[[u32; 2]],
) -> Result<Vec<(NodeId, NodeId)>> {
    let mut seen = BTreeSet::new();
    let mut loops = 0;
    for &[a, b] in edges {
        for end in [a, b] {
            if !ids.contains(&end) {
                return Err(Error::format(
                    context,
                    format!("edge endpoint {end} is not a node"),
                ));
            }
        }
        if a == b {
            loops += 1;
            continue;
        }
        seen.insert((a.min(b), a.max(b)));
    }
    if loops > 0 {
        warn!("{context}: dropped {loops} self-loop(s)");
    }
    Ok(seen
        .into_iter()
        .map(|(a, b)| (NodeId(a), NodeId(b)))
        .collect())
}

/// Keeps the largest connected component (lowest first node index on ties).
pub(crate) fn largest_component(context: &str, g: Graph) -> Graph {
    let comps = g.components();
    if comps.len() <= 1 {
        return g;
    }
    let best = comps
        .iter()
        .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
        .expect("non-empty graph")
        .clone();
    warn!(
        "{context}: {} components, keeping the largest ({} of {} nodes)",
        comps.len(),
        best.len(),
        g.node_count()
    );
    let mut keep = best;
    keep.sort_unstable();
    g.induced_subgraph(&keep)
}

impl GraphRecord {
    /// Builds a graph, adding unseen labels to `vocab` when `grow` is set and
    /// rejecting them otherwise.
    pub fn to_graph(
        &self,
        context: &str,
        vocab: &mut LabelVocabulary,
        grow: bool,
    ) -> Result<Graph> {
        if self.nodes.is_empty() {
            return Err(Error::format(context, "graph has no nodes"));
        }
        let mut ids = BTreeSet::new();
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            if !ids.insert(n.id) {
                return Err(Error::format(
                    context,
                    format!("duplicate node id {}", n.id),
                ));
            }
            let name = n.label.name();
            let label = match vocab.id_of(&name) {
                Some(l) => l,
                None if grow => vocab.intern(&name),
                None => {
                    return Err(Error::format(
                        context,
                        format!("label {name:?} is not in the vocabulary"),
                    ))
                }
            };
            let mut node = Node::new(n.id, label);
            for (k, v) in &n.attrs {
                node.attrs.insert(k.clone(), scalar_string(context, k, v)?);
            }
            nodes.push(node);
        }
        let edges = clean_edges(context, &ids, &self.edges)?;
        Graph::new(self.graph_id.clone(), nodes, &edges)
            .map(|g| {
                g.with_name(self.name.clone())
                    .with_category(self.category.clone())
            })
            .map_err(|e| Error::format(context, e.to_string()))
    }

    pub fn from_graph(g: &Graph, vocab: &LabelVocabulary) -> Self {
        Self {
            graph_id: g.graph_id().to_string(),
            name: g.name().map(str::to_string),
            category: g.category().map(str::to_string),
            nodes: g
                .nodes()
                .iter()
                .map(|n| NodeRecord {
                    id: n.id.0,
                    label: LabelValue::Name(
                        vocab
                            .name(n.label)
                            .map(str::to_string)
                            .unwrap_or_else(|| n.label.to_string()),
                    ),
                    attrs: n
                        .attrs
                        .iter()
                        .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                        .collect(),
                })
                .collect(),
            edges: g.edge_ids().into_iter().map(|(a, b)| [a.0, b.0]).collect(),
        }
    }
}

impl PatternRecord {
    /// Validates against a fixed vocabulary; the pattern must be connected.
    pub fn to_pattern(&self, vocab: &LabelVocabulary) -> Result<QueryPattern> {
        let mut vocab = vocab.clone();
        let graph = self.graph.to_graph("query pattern", &mut vocab, false)?;
        let constraints = self
            .constraints
            .iter()
            .map(|(k, v)| (NodeId(*k), v.clone()))
            .collect();
        QueryPattern::with_constraints(graph, constraints)
    }

    pub fn from_pattern(pattern: &QueryPattern, vocab: &LabelVocabulary) -> Self {
        Self {
            graph: GraphRecord::from_graph(pattern.graph(), vocab),
            constraints: pattern
                .constraints()
                .iter()
                .map(|(k, v)| (k.0, v.clone()))
                .collect(),
        }
    }
}

fn record_context(i: usize, raw: &Value) -> String {
    match raw.get("graph_id").and_then(Value::as_str) {
        Some(id) => format!("record {i} (graph_id {id:?})"),
        None => format!("record {i}"),
    }
}

/// Parses a JSON array of graph records into a database. Disconnected
/// graphs are reduced to their largest component. When `vocabulary` is
/// given it must cover every label.
pub fn parse_native(
    name: &str,
    text: &str,
    vocabulary: Option<LabelVocabulary>,
) -> Result<Database> {
    let raw: Vec<Value> = serde_json::from_str(text).map_err(|e| {
        Error::format(
            name,
            format!("line {} column {}: {e}", e.line(), e.column()),
        )
    })?;
    if raw.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let grow = vocabulary.is_none();
    let mut vocab = vocabulary.unwrap_or_default();
    let mut graphs = Vec::with_capacity(raw.len());
    let mut ids = BTreeSet::new();
    for (i, value) in raw.iter().enumerate() {
        let context = record_context(i, value);
        let mut record: GraphRecord = serde_json::from_value(value.clone())
            .map_err(|e| Error::format(&context, e.to_string()))?;
        if record.graph_id.is_empty() {
            record.graph_id = format!("{name}-{i:04}");
        }
        if !ids.insert(record.graph_id.clone()) {
            return Err(Error::format(&context, "duplicate graph_id"));
        }
        let g = record.to_graph(&context, &mut vocab, grow)?;
        graphs.push(largest_component(&context, g));
    }
    Ok(Database {
        name: name.to_string(),
        vocabulary: vocab,
        graphs,
    })
}

/// On-disk form of a whole database.
#[derive(Serialize, Deserialize)]
struct DatabaseFile {
    name: String,
    vocabulary: Vec<String>,
    graphs: Vec<GraphRecord>,
}

impl Database {
    pub fn to_json(&self) -> String {
        let file = DatabaseFile {
            name: self.name.clone(),
            vocabulary: self.vocabulary.labels().map(|l| l.name).collect(),
            graphs: self
                .graphs
                .iter()
                .map(|g| GraphRecord::from_graph(g, &self.vocabulary))
                .collect(),
        };
        serde_json::to_string(&file).expect("records serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DatabaseFile = serde_json::from_str(text)
            .map_err(|e| Error::format("database file", e.to_string()))?;
        let mut vocab = LabelVocabulary::from_names(file.vocabulary)?;
        let graphs = file
            .graphs
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.to_graph(
                    &format!("record {i} (graph_id {:?})", r.graph_id),
                    &mut vocab,
                    false,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        if graphs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            name: file.name,
            vocabulary: vocab,
            graphs,
        })
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = r#"[
        {"graph_id": "a", "category": "small", "nodes": [{"id": 0, "label": "C"}, {"id": 1, "label": "O"}], "edges": [[0, 1], [1, 0]]},
        {"graph_id": "b", "nodes": [{"id": 5, "label": "C", "attrs": {"charge": -1}}, {"id": 6, "label": "N"}, {"id": 7, "label": "C"}], "edges": [[5, 6], [6, 7], [7, 5]]},
        {"graph_id": "c", "nodes": [{"id": 0, "label": 2}], "edges": []}
    ]"#;

    #[test]
    fn parses_fixture() {
        let db = parse_native("fixture", FIXTURE, None).unwrap();
        assert_eq!(db.len(), 3);
        let counts: Vec<_> = db
            .graphs
            .iter()
            .map(|g| (g.node_count(), g.edge_count()))
            .collect();
        assert_eq!(counts, vec![(2, 1), (3, 3), (1, 0)]);
        assert_eq!(db.vocabulary.len(), 4);
        assert_eq!(db.graphs[0].category(), Some("small"));
        assert_eq!(db.graphs[1].node(0).attrs["charge"], "-1");
        assert_eq!(db.vocabulary.name(db.graphs[2].label(0)), Some("2"));
    }

    #[test]
    fn reingest_is_idempotent_and_round_trips() {
        let a = parse_native("fixture", FIXTURE, None).unwrap();
        assert_eq!(a, parse_native("fixture", FIXTURE, None).unwrap());
        assert_eq!(Database::from_json(&a.to_json()).unwrap(), a);
    }

    #[test]
    fn malformed_record_is_named() {
        let text = r#"[{"graph_id": "ok", "nodes": [{"id": 0, "label": "A"}]}, {"graph_id": "bad", "nodes": [{"id": "x"}]}]"#;
        match parse_native("t", text, None) {
            Err(Error::Format { context, .. }) => {
                assert!(context.contains("record 1") && context.contains("bad"))
            }
            other => panic!("{other:?}"),
        }
        let dangling = r#"[{"nodes": [{"id": 0, "label": "A"}], "edges": [[0, 3]]}]"#;
        assert!(matches!(
            parse_native("t", dangling, None),
            Err(Error::Format { .. })
        ));
        assert!(matches!(
            parse_native("t", "[", None),
            Err(Error::Format { .. })
        ));
        assert!(matches!(
            parse_native("t", "[]", None),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn keeps_largest_component() {
        let text = r#"[{"graph_id": "split", "nodes": [{"id": 0, "label": "A"}, {"id": 1, "label": "A"}, {"id": 2, "label": "B"}, {"id": 3, "label": "B"}, {"id": 4, "label": "B"}],
                        "edges": [[0, 1], [2, 3], [3, 4]]}]"#;
        let db = parse_native("t", text, None).unwrap();
        let ids: Vec<u32> = db.graphs[0].nodes().iter().map(|n| n.id.0).collect();
        assert_eq!(ids, vec![2, 3, 4]);
    }

    #[test]
    fn fixed_vocabulary_must_cover_labels() {
        let vocab = LabelVocabulary::from_names(["C", "O"]).unwrap();
        assert!(matches!(
            parse_native("t", FIXTURE, Some(vocab)),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn pattern_records() {
        let vocab = LabelVocabulary::from_names(["A", "B"]).unwrap();
        let text = r#"{"nodes": [{"id": 3, "label": "A"}, {"id": 4, "label": "B"}], "edges": [[3, 4]], "constraints": {"3": {"kind": "x"}}}"#;
        let record: PatternRecord = serde_json::from_str(text).unwrap();
        let p = record.to_pattern(&vocab).unwrap();
        assert_eq!(p.constraints()[&NodeId(3)]["kind"], "x");
        assert_eq!(
            PatternRecord::from_pattern(&p, &vocab)
                .to_pattern(&vocab)
                .unwrap(),
            p
        );
        let split: PatternRecord = serde_json::from_str(
            r#"{"nodes": [{"id": 0, "label": "A"}, {"id": 1, "label": "A"}]}"#,
        )
        .unwrap();
        assert!(matches!(
            split.to_pattern(&vocab),
            Err(Error::InvalidGraph(_))
        ));
    }
}
