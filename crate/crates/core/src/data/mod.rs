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

//! Graph databases: ingestion, synthetic generation and persistence.

mod native;
mod synth;
mod tudataset;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, LabelVocabulary};

pub use native::{parse_native, GraphRecord, LabelValue, NodeRecord, PatternRecord};
pub use synth::{generate_synthetic, random_connected_graph, SynthConfig};
pub use tudataset::read_tudataset;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    /// A JSON array of graph records.
    NativeJson,
    /// A directory of TUDataset text files.
    Tudataset,
}

/// Where a dataset lives and how to read it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub format: DatasetFormat,
    /// File for native JSON, directory for TUDataset. Relative paths are
    /// resolved against the manifest file's directory by [`DatasetManifest::load`].
    pub path: PathBuf,
    /// Fixed label order; built from the data when absent.
    #[serde(default)]
    pub vocabulary: Option<Vec<String>>,
    /// Category overrides by graph id.
    #[serde(default)]
    pub categories: BTreeMap<String, String>,
}

impl DatasetManifest {
    /// Reads a TOML manifest.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut manifest: Self = toml::from_str(&text)
            .map_err(|e| Error::format(path.display().to_string(), e.to_string()))?;
        if manifest.path.is_relative() {
            if let Some(parent) = path.parent() {
                manifest.path = parent.join(&manifest.path);
            }
        }
        Ok(manifest)
    }
}

/// Loads and validates a dataset: edges are made undirected and
/// deduplicated, disconnected graphs keep their largest component, and
/// categories from the manifest are attached.
pub fn ingest_dataset(manifest: &DatasetManifest) -> Result<Database> {
    let vocabulary = manifest
        .vocabulary
        .as_ref()
        .map(|names| LabelVocabulary::from_names(names.iter().cloned()))
        .transpose()?;
    let mut db = match manifest.format {
        DatasetFormat::NativeJson => {
            let text = std::fs::read_to_string(&manifest.path)?;
            parse_native(&manifest.name, &text, vocabulary)?
        }
        DatasetFormat::Tudataset => read_tudataset(&manifest.path, &manifest.name, vocabulary)?,
    };
    for (id, category) in &manifest.categories {
        let pos = db.position(id).ok_or_else(|| {
            Error::format("manifest categories", format!("unknown graph_id {id:?}"))
        })?;
        db.graphs[pos] = db.graphs[pos].clone().with_category(Some(category.clone()));
    }
    if db.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(db)
}

/// An ordered collection of graphs sharing one label vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct Database {
    pub name: String,
    pub vocabulary: LabelVocabulary,
    pub graphs: Vec<Graph>,
}

impl Database {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn position(&self, graph_id: &str) -> Option<usize> {
        self.graphs.iter().position(|g| g.graph_id() == graph_id)
    }

    pub fn get(&self, graph_id: &str) -> Option<&Graph> {
        self.position(graph_id).map(|i| &self.graphs[i])
    }

    pub fn max_nodes(&self) -> usize {
        self.graphs.iter().map(Graph::node_count).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_ingest() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("graphs.json"),
            r#"[{"graph_id": "x", "nodes": [{"id": 0, "label": "A"}, {"id": 1, "label": "B"}], "edges": [[0, 1]]}]"#,
        )
        .unwrap();
        std::fs::write(
            dir.path().join("manifest.toml"),
            "name = \"demo\"\nformat = \"native-json\"\npath = \"graphs.json\"\nvocabulary = [\"B\", \"A\"]\n[categories]\nx = \"tiny\"\n",
        )
        .unwrap();
        let manifest = DatasetManifest::load(dir.path().join("manifest.toml")).unwrap();
        let db = ingest_dataset(&manifest).unwrap();
        assert_eq!(db.name, "demo");
        assert_eq!(db.graphs[0].category(), Some("tiny"));
        assert_eq!(db.vocabulary.id_of("A"), Some(1));
        let mut wrong = manifest.clone();
        wrong.categories.insert("nope".into(), "c".into());
        assert!(ingest_dataset(&wrong).is_err());
    }
}
