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

//! Undirected labeled graphs and the structural primitives built on them.
//!
//! A [`Graph`] stores its nodes sorted by [`NodeId`], so a node's dense index
//! and its id order agree. Every tie-break that says "ascending node id" can
//! therefore be implemented on indices.

mod neighborhood;
mod sample;

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use neighborhood::{khop_indices, khop_neighborhood, Neighborhood};
pub use sample::{
    perturb_add_edges, remove_lowest_degree_node, sample_connected_indices,
    sample_connected_subgraph, seeded_rng, SeededRng,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

/// Entry of a dataset-level label vocabulary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Label {
    pub id: usize,
    pub name: String,
}

/// Dataset-level label vocabulary. Ids are dense and names are unique.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVocabulary {
    names: Vec<String>,
}

impl LabelVocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Self::new();
        for name in names {
            let name = name.into();
            if vocab.id_of(&name).is_some() {
                return Err(Error::InvalidGraph(format!(
                    "duplicate label name {name:?}"
                )));
            }
            vocab.names.push(name);
        }
        Ok(vocab)
    }

    /// Labels named `0`, `1`, ... `n-1`.
    pub fn numeric(n: usize) -> Self {
        Self {
            names: (0..n).map(|i| i.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    /// Returns the id for `name`, appending it when absent.
    pub fn intern(&mut self, name: &str) -> usize {
        match self.id_of(name) {
            Some(id) => id,
            None => {
                self.names.push(name.to_string());
                self.names.len() - 1
            }
        }
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.names.iter().enumerate().map(|(id, name)| Label {
            id,
            name: name.clone(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub label: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attrs: BTreeMap<String, String>,
}

impl Node {
    pub fn new(id: impl Into<NodeId>, label: usize) -> Self {
        Self {
            id: id.into(),
            label,
            attrs: BTreeMap::new(),
        }
    }

    pub fn with_attr(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.attrs.insert(key.into(), value.into());
        self
    }
}

/// Undirected simple graph with labeled nodes.
///
/// Immutable once built. Structural edits return new graphs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    graph_id: String,
    name: Option<String>,
    category: Option<String>,
    nodes: Vec<Node>,
    adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph, rejecting duplicate node ids, self-loops, duplicate
    /// edges and edges with unknown endpoints.
    pub fn new(
        graph_id: impl Into<String>,
        mut nodes: Vec<Node>,
        edges: &[(NodeId, NodeId)],
    ) -> Result<Self> {
        nodes.sort_by_key(|n| n.id);
        if let Some(w) = nodes.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::InvalidGraph(format!(
                "duplicate node id {}",
                w[0].id
            )));
        }
        let index = |id: NodeId| {
            nodes
                .binary_search_by_key(&id, |n| n.id)
                .map_err(|_| Error::NodeNotFound(id))
        };
        let mut adj = vec![Vec::new(); nodes.len()];
        for &(u, v) in edges {
            let (a, b) = (index(u)?, index(v)?);
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on node {u}")));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut edge_count = 0;
        for (i, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge at node {}",
                    nodes[i].id
                )));
            }
            edge_count += list.len();
        }
        Ok(Self {
            graph_id: graph_id.into(),
            name: None,
            category: None,
            nodes,
            adj,
            edge_count: edge_count / 2,
        })
    }

    /// Graph with node ids `0..labels.len()`.
    pub fn from_labels(labels: &[usize], edges: &[(u32, u32)]) -> Result<Self> {
        let nodes = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| Node::new(i as u32, l))
            .collect();
        let edges: Vec<_> = edges.iter().map(|&(u, v)| (NodeId(u), NodeId(v))).collect();
        Self::new("", nodes, &edges)
    }

    /// Unlabeled (all label 0) graph with node ids `0..n`.
    pub fn unlabeled(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        Self::from_labels(&vec![0; n], edges)
    }

    pub fn with_graph_id(mut self, id: impl Into<String>) -> Self {
        self.graph_id = id.into();
        self
    }

    pub fn with_name(mut self, name: Option<String>) -> Self {
        self.name = name;
        self
    }

    pub fn with_category(mut self, category: Option<String>) -> Self {
        self.category = category;
        self
    }

    pub fn graph_id(&self) -> &str {
        &self.graph_id
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn category(&self) -> Option<&str> {
        self.category.as_deref()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> &Node {
        &self.nodes[idx]
    }

    pub fn node_id(&self, idx: usize) -> NodeId {
        self.nodes[idx].id
    }

    pub fn label(&self, idx: usize) -> usize {
        self.nodes[idx].label
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok()
    }

    pub fn require_index(&self, id: NodeId) -> Result<usize> {
        self.index_of(id).ok_or(Error::NodeNotFound(id))
    }

    pub fn neighbors(&self, idx: usize) -> &[usize] {
        &self.adj[idx]
    }

    pub fn degree(&self, idx: usize) -> usize {
        self.adj[idx].len()
    }

    pub fn max_label(&self) -> Option<usize> {
        self.nodes.iter().map(|n| n.label).max()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    /// Edges as index pairs `(a, b)` with `a < b`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(a, list)| list.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
    }

    pub fn edge_ids(&self) -> Vec<(NodeId, NodeId)> {
        self.edges()
            .map(|(a, b)| (self.node_id(a), self.node_id(b)))
            .collect()
    }

    /// Node-induced subgraph on `indices`, keeping the original node ids.
    pub fn induced_subgraph(&self, indices: &[usize]) -> Graph {
        let mut keep = indices.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let mut position = vec![usize::MAX; self.nodes.len()];
        for (new, &old) in keep.iter().enumerate() {
            position[old] = new;
        }
        let nodes: Vec<Node> = keep.iter().map(|&i| self.nodes[i].clone()).collect();
        let mut edge_count = 0;
        let adj: Vec<Vec<usize>> = keep
            .iter()
            .map(|&old| {
                let list: Vec<usize> = self.adj[old]
                    .iter()
                    .filter_map(|&nb| (position[nb] != usize::MAX).then_some(position[nb]))
                    .collect();
                edge_count += list.len();
                list
            })
            .collect();
        Graph {
            graph_id: self.graph_id.clone(),
            name: self.name.clone(),
            category: self.category.clone(),
            nodes,
            adj,
            edge_count: edge_count / 2,
        }
    }

    /// Copy of this graph containing the extra index-pair edges.
    pub(crate) fn with_added_edges(&self, extra: &[(usize, usize)]) -> Graph {
        let mut out = self.clone();
        for &(a, b) in extra {
            out.adj[a].push(b);
            out.adj[b].push(a);
        }
        for list in &mut out.adj {
            list.sort_unstable();
        }
        out.edge_count += extra.len();
        out
    }

    /// Connected components as sorted index lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.nodes.len()];
        let mut out = Vec::new();
        for start in 0..self.nodes.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &nb in &self.adj[v] {
                    if !seen[nb] {
                        seen[nb] = true;
                        comp.push(nb);
                        queue.push_back(nb);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        !self.nodes.is_empty() && self.components().len() == 1
    }

    /// Hop distances from `source`; unreachable nodes get `usize::MAX`.
    pub fn bfs_distances(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.nodes.len()];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            for &nb in &self.adj[v] {
                if dist[nb] == usize::MAX {
                    dist[nb] = dist[v] + 1;
                    queue.push_back(nb);
                }
            }
        }
        dist
    }
}

/// A query graph plus optional per-node attribute constraints.
///
/// Node ids refer to the nodes of the graph the pattern was selected from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryPattern {
    graph: Graph,
    constraints: BTreeMap<NodeId, BTreeMap<String, String>>,
}

impl QueryPattern {
    pub fn new(graph: Graph) -> Result<Self> {
        Self::with_constraints(graph, BTreeMap::new())
    }

    pub fn with_constraints(
        graph: Graph,
        constraints: BTreeMap<NodeId, BTreeMap<String, String>>,
    ) -> Result<Self> {
        if graph.is_empty() {
            return Err(Error::InvalidGraph("query pattern is empty".into()));
        }
        if !graph.is_connected() {
            return Err(Error::InvalidGraph("query pattern is disconnected".into()));
        }
        for id in constraints.keys() {
            graph.require_index(*id)?;
        }
        Ok(Self { graph, constraints })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn constraints(&self) -> &BTreeMap<NodeId, BTreeMap<String, String>> {
        &self.constraints
    }

    pub fn into_graph(self) -> Graph {
        self.graph
    }
}

/// Query-node id to target-node id correspondence.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeMapping {
    pairs: BTreeMap<NodeId, NodeId>,
}

impl NodeMapping {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query: NodeId, target: NodeId) {
        self.pairs.insert(query, target);
    }

    /// Builds a mapping from `target_of[q]` = target index of query index `q`.
    pub fn from_indices(query: &Graph, target: &Graph, target_of: &[usize]) -> Self {
        let pairs = target_of
            .iter()
            .enumerate()
            .map(|(q, &t)| (query.node_id(q), target.node_id(t)))
            .collect();
        Self { pairs }
    }

    /// Inverse of [`NodeMapping::from_indices`]; `None` when the mapping
    /// references nodes outside the two graphs or is not total.
    pub fn to_indices(&self, query: &Graph, target: &Graph) -> Option<Vec<usize>> {
        if self.pairs.len() != query.node_count() {
            return None;
        }
        (0..query.node_count())
            .map(|q| {
                let t = *self.pairs.get(&query.node_id(q))?;
                target.index_of(t)
            })
            .collect()
    }

    pub fn get(&self, query: NodeId) -> Option<NodeId> {
        self.pairs.get(&query).copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.pairs.iter().map(|(&q, &t)| (q, t))
    }

    pub fn is_injective(&self) -> bool {
        let mut images: Vec<NodeId> = self.pairs.values().copied().collect();
        images.sort_unstable();
        images.windows(2).all(|w| w[0] != w[1])
    }

    /// True iff this is a total, injective mapping of `query` into `target`
    /// under which every query edge lands on a target edge, and labels agree
    /// when `label_aware`.
    pub fn is_subgraph_embedding(&self, query: &Graph, target: &Graph, label_aware: bool) -> bool {
        let Some(image) = self.to_indices(query, target) else {
            return false;
        };
        if !self.is_injective() {
            return false;
        }
        if label_aware && (0..query.node_count()).any(|q| query.label(q) != target.label(image[q]))
        {
            return false;
        }
        query
            .edges()
            .all(|(a, b)| target.has_edge(image[a], image[b]))
    }
}

impl FromIterator<(NodeId, NodeId)> for NodeMapping {
    fn from_iter<I: IntoIterator<Item = (NodeId, NodeId)>>(iter: I) -> Self {
        Self {
            pairs: iter.into_iter().collect(),
        }
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::Graph;

    pub fn path(n: usize) -> Graph {
        let edges: Vec<_> = (1..n as u32).map(|i| (i - 1, i)).collect();
        Graph::unlabeled(n, &edges).unwrap()
    }

    pub fn complete(n: usize) -> Graph {
        let mut edges = Vec::new();
        for a in 0..n as u32 {
            for b in a + 1..n as u32 {
                edges.push((a, b));
            }
        }
        Graph::unlabeled(n, &edges).unwrap()
    }

    pub fn star(leaves: usize) -> Graph {
        let edges: Vec<_> = (1..=leaves as u32).map(|i| (0, i)).collect();
        Graph::unlabeled(leaves + 1, &edges).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_self_loops_and_duplicates() {
        assert!(matches!(
            Graph::unlabeled(2, &[(0, 0)]),
            Err(Error::InvalidGraph(_))
        ));
        assert!(matches!(
            Graph::unlabeled(2, &[(0, 1), (1, 0)]),
            Err(Error::InvalidGraph(_))
        ));
        assert!(matches!(
            Graph::unlabeled(2, &[(0, 5)]),
            Err(Error::NodeNotFound(NodeId(5)))
        ));
    }

    #[test]
    fn nodes_are_sorted_by_id() {
        let g = Graph::new(
            "g",
            vec![Node::new(9, 0), Node::new(3, 1)],
            &[(NodeId(9), NodeId(3))],
        )
        .unwrap();
        assert_eq!(g.node_id(0), NodeId(3));
        assert_eq!(g.label(1), 0);
        assert!(g.has_edge(0, 1));
        assert_eq!(g.edge_ids(), vec![(NodeId(3), NodeId(9))]);
    }

    #[test]
    fn induced_subgraph_keeps_ids() {
        let g = fixtures::path(5);
        let sub = g.induced_subgraph(&[3, 1, 2]);
        assert_eq!(sub.node_count(), 3);
        assert_eq!(sub.edge_count(), 2);
        assert_eq!(sub.node_id(0), NodeId(1));
        let split = g.induced_subgraph(&[0, 2]);
        assert!(!split.is_connected());
    }

    #[test]
    fn query_pattern_must_be_connected() {
        let g = Graph::unlabeled(3, &[(0, 1)]).unwrap();
        assert!(QueryPattern::new(g).is_err());
        assert!(QueryPattern::new(Graph::unlabeled(0, &[]).unwrap()).is_err());
    }

    #[test]
    fn mapping_verification() {
        let q = fixtures::path(3);
        let t = fixtures::complete(3);
        let m = NodeMapping::from_indices(&q, &t, &[2, 0, 1]);
        assert!(m.is_subgraph_embedding(&q, &t, true));
        let bad = NodeMapping::from_indices(&q, &t, &[0, 0, 1]);
        assert!(!bad.is_subgraph_embedding(&q, &t, false));
        let p = fixtures::path(3);
        let m = NodeMapping::from_indices(&q, &p, &[0, 2, 1]);
        assert!(!m.is_subgraph_embedding(&q, &p, false));
    }
}
