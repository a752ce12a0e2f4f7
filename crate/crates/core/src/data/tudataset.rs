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

//! Reader for the plain-text TUDataset layout: `<name>_A.txt` (global
//! 1-based edge list), `<name>_graph_indicator.txt` (graph of each node),
//! optional `<name>_node_labels.txt` and `<name>_graph_labels.txt` (used as
//! the graph category).

use std::path::Path;

use super::native::largest_component;
use super::Database;
use crate::error::{Error, Result};
use crate::graph::{Graph, LabelVocabulary, Node, NodeId};

fn read_lines(dir: &Path, file: &str) -> Result<Option<Vec<String>>> {
    let path = dir.join(file);
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path)?;
    Ok(Some(
        text.lines()
            .map(str::trim)
            .map(str::to_string)
            .filter(|l| !l.is_empty())
            .collect(),
    ))
}

fn require_lines(dir: &Path, file: &str) -> Result<Vec<String>> {
    read_lines(dir, file)?.ok_or_else(|| Error::format(file, "file not found"))
}

fn parse_int(file: &str, line: usize, s: &str) -> Result<i64> {
    s.trim().parse().map_err(|_| {
        Error::format(
            format!("{file} line {}", line + 1),
            format!("expected an integer, got {s:?}"),
        )
    })
}

/// Reads dataset `name` from `dir`. Graph ids are `<name>-<index>`, node
/// ids restart at 0 in every graph.
pub fn read_tudataset(
    dir: impl AsRef<Path>,
    name: &str,
    vocabulary: Option<LabelVocabulary>,
) -> Result<Database> {
    let dir = dir.as_ref();
    let a_file = format!("{name}_A.txt");
    let gi_file = format!("{name}_graph_indicator.txt");
    let nl_file = format!("{name}_node_labels.txt");
    let gl_file = format!("{name}_graph_labels.txt");
    let indicator = require_lines(dir, &gi_file)?
        .iter()
        .enumerate()
        .map(|(i, l)| parse_int(&gi_file, i, l))
        .collect::<Result<Vec<_>>>()?;
    if indicator.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n_graphs = *indicator.iter().max().expect("non-empty") as usize;
    if indicator.iter().any(|&g| g < 1) {
        return Err(Error::format(&gi_file, "graph indices start at 1"));
    }
    let node_labels = match read_lines(dir, &nl_file)? {
        Some(lines) => {
            if lines.len() != indicator.len() {
                return Err(Error::format(
                    &nl_file,
                    format!("{} labels for {} nodes", lines.len(), indicator.len()),
                ));
            }
            lines
                .iter()
                .map(|l| l.split(',').next().unwrap_or("").trim().to_string())
                .collect()
        }
        None => vec!["0".to_string(); indicator.len()],
    };
    let graph_labels = read_lines(dir, &gl_file)?;
    if let Some(gl) = &graph_labels {
        if gl.len() != n_graphs {
            return Err(Error::format(
                &gl_file,
                format!("{} labels for {n_graphs} graphs", gl.len()),
            ));
        }
    }

    // Position of every global node inside its graph.
    let mut local = vec![0u32; indicator.len()];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_graphs];
    for (node, &g) in indicator.iter().enumerate() {
        let g = g as usize - 1;
        local[node] = members[g].len() as u32;
        members[g].push(node);
    }
    let mut edges: Vec<Vec<(NodeId, NodeId)>> = vec![Vec::new(); n_graphs];
    for (i, line) in require_lines(dir, &a_file)?.iter().enumerate() {
        let mut parts = line.split(',');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::format(
                format!("{a_file} line {}", i + 1),
                "expected \"a, b\"",
            ));
        };
        let (a, b) = (parse_int(&a_file, i, a)?, parse_int(&a_file, i, b)?);
        let valid = |v: i64| v >= 1 && v as usize <= indicator.len();
        if !valid(a) || !valid(b) {
            return Err(Error::format(
                format!("{a_file} line {}", i + 1),
                "node index out of range",
            ));
        }
        let (a, b) = (a as usize - 1, b as usize - 1);
        if indicator[a] != indicator[b] {
            return Err(Error::format(
                format!("{a_file} line {}", i + 1),
                "edge joins two graphs",
            ));
        }
        if a < b {
            edges[indicator[a] as usize - 1].push((NodeId(local[a]), NodeId(local[b])));
        } else if b < a {
            edges[indicator[a] as usize - 1].push((NodeId(local[b]), NodeId(local[a])));
        }
    }

    let grow = vocabulary.is_none();
    let mut vocab = vocabulary.unwrap_or_default();
    let mut graphs = Vec::with_capacity(n_graphs);
    for (g, nodes) in members.iter().enumerate() {
        let context = format!("{name} graph {}", g + 1);
        if nodes.is_empty() {
            return Err(Error::format(&context, "graph has no nodes"));
        }
        let mut list = Vec::with_capacity(nodes.len());
        for &node in nodes {
            let label = match vocab.id_of(&node_labels[node]) {
                Some(l) => l,
                None if grow => vocab.intern(&node_labels[node]),
                None => {
                    return Err(Error::format(
                        &context,
                        format!("label {:?} is not in the vocabulary", node_labels[node]),
                    ))
                }
            };
            list.push(Node::new(local[node], label));
        }
        let mut e = std::mem::take(&mut edges[g]);
        e.sort_unstable();
        e.dedup();
        let graph = Graph::new(format!("{name}-{:04}", g + 1), list, &e)
            .map_err(|err| Error::format(&context, err.to_string()))?
            .with_category(graph_labels.as_ref().map(|gl| gl[g].clone()));
        graphs.push(largest_component(&context, graph));
    }
    Ok(Database {
        name: name.to_string(),
        vocabulary: vocab,
        graphs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) {
        std::fs::write(dir.join(name), body).unwrap();
    }

    #[test]
    fn reads_two_graphs() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path();
        // Graph 1: triangle 1-2-3 listed in both directions. Graph 2: edge 4-5.
        write(p, "T_A.txt", "1, 2\n2, 1\n2, 3\n3, 1\n1, 3\n4, 5\n5, 4\n");
        write(p, "T_graph_indicator.txt", "1\n1\n1\n2\n2\n");
        write(p, "T_node_labels.txt", "0\n1\n0\n2\n2\n");
        write(p, "T_graph_labels.txt", "1\n-1\n");
        let db = read_tudataset(p, "T", None).unwrap();
        assert_eq!(db.len(), 2);
        assert_eq!(
            (db.graphs[0].node_count(), db.graphs[0].edge_count()),
            (3, 3)
        );
        assert_eq!(
            (db.graphs[1].node_count(), db.graphs[1].edge_count()),
            (2, 1)
        );
        assert_eq!(db.graphs[1].category(), Some("-1"));
        assert_eq!(db.vocabulary.len(), 3);
        assert_eq!(db.graphs[1].graph_id(), "T-0002");
        assert_eq!(db, read_tudataset(p, "T", None).unwrap());
    }

    #[test]
    fn bad_lines_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path();
        write(p, "T_A.txt", "1, 2\n2; 1\n");
        write(p, "T_graph_indicator.txt", "1\n1\n");
        match read_tudataset(p, "T", None) {
            Err(Error::Format { context, .. }) => assert_eq!(context, "T_A.txt line 2"),
            other => panic!("{other:?}"),
        }
        write(p, "T_A.txt", "1, 3\n");
        write(p, "T_graph_indicator.txt", "1\n2\n2\n");
        assert!(matches!(
            read_tudataset(p, "T", None),
            Err(Error::Format { .. })
        ));
        assert!(read_tudataset(p, "missing", None).is_err());
    }
}
