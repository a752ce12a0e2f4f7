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

//! Python bindings: databases, the exact matcher, assignment solvers and the
//! trained query engine. Graphs cross the boundary as plain dicts in the
//! native record format.

use std::time::Duration;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyKeyError, PyOSError};
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sgmatch::aligner::{greedy_assign_scores, hungarian_assign_scores, AlignModel};
use sgmatch::config::RunConfig;
use sgmatch::data::{
    generate_synthetic, parse_native, Database, GraphRecord, PatternRecord, SynthConfig,
};
use sgmatch::engine::{approximate_query, evaluate, EmbeddingStore, NeuralEngine, QueryFilters};
use sgmatch::exact::{approx_graph_edit_distance, vf2_match, MatchOptions};
use sgmatch::graph::{Graph, LabelVocabulary};
use sgmatch::matcher::MatchModel;
use sgmatch::nn::{Checkpoint, Tensor};

create_exception!(
    sgmatch_py,
    SgmatchError,
    PyException,
    "Raised for invalid input or failed engine operations."
);

fn to_py_err(e: sgmatch::Error) -> PyErr {
    match e {
        sgmatch::Error::Io(io) => PyOSError::new_err(io.to_string()),
        other => SgmatchError::new_err(other.to_string()),
    }
}

/// Python object to a serde value through the standard `json` module.
fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let json = obj.py().import("json")?;
    let text: String = json.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| SgmatchError::new_err(e.to_string()))
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| SgmatchError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_config(config: Option<&str>) -> PyResult<RunConfig> {
    match config {
        Some(text) => RunConfig::from_toml(text).map_err(to_py_err),
        None => Ok(RunConfig::default()),
    }
}

fn score_tensor(scores: Vec<Vec<f64>>) -> PyResult<Tensor> {
    Tensor::from_rows(&scores).map_err(to_py_err)
}

/// Graph records sharing one label vocabulary built from their labels.
fn graphs_from_records(records: &[GraphRecord]) -> PyResult<Vec<Graph>> {
    let mut vocab = LabelVocabulary::new();
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.to_graph(&format!("graph {i}"), &mut vocab, true)
                .map_err(to_py_err)
        })
        .collect()
}

/// A validated collection of labeled graphs.
#[pyclass(name = "Database", frozen, skip_from_py_object, module = "sgmatch_py")]
#[derive(Clone)]
pub struct PyDatabase {
    inner: Database,
}

#[pymethods]
impl PyDatabase {
    /// Seeded connected random graphs with uniform labels.
    #[staticmethod]
    #[pyo3(signature = (n_graphs=300, min_nodes=10, max_nodes=30, n_labels=6, edge_density=0.15, seed=0))]
    fn synthetic(
        n_graphs: usize,
        min_nodes: usize,
        max_nodes: usize,
        n_labels: usize,
        edge_density: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let cfg = SynthConfig {
            n_graphs,
            min_nodes,
            max_nodes,
            n_labels,
            edge_density,
            seed,
        };
        Ok(Self {
            inner: generate_synthetic(&cfg).map_err(to_py_err)?,
        })
    }

    /// Builds a database from a list of graph record dicts.
    #[staticmethod]
    fn from_records(name: &str, records: &Bound<'_, PyAny>) -> PyResult<Self> {
        let value: serde_json::Value = from_py(records)?;
        Ok(Self {
            inner: parse_native(name, &value.to_string(), None).map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: Database::load(path).map_err(to_py_err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(to_py_err)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Database(name={:?}, graphs={})",
            self.inner.name,
            self.inner.len()
        )
    }

    fn graph_ids(&self) -> Vec<String> {
        self.inner
            .graphs
            .iter()
            .map(|g| g.graph_id().to_string())
            .collect()
    }

    fn labels(&self) -> Vec<String> {
        (0..self.inner.vocabulary.len())
            .map(|i| {
                self.inner
                    .vocabulary
                    .name(i)
                    .unwrap_or_default()
                    .to_string()
            })
            .collect()
    }

    /// The graph as a record dict; raises KeyError for unknown ids.
    fn graph<'py>(&self, py: Python<'py>, graph_id: &str) -> PyResult<Bound<'py, PyAny>> {
        let g = self
            .inner
            .get(graph_id)
            .ok_or_else(|| PyKeyError::new_err(graph_id.to_string()))?;
        to_py(py, &GraphRecord::from_graph(g, &self.inner.vocabulary))
    }
}

/// Trained matcher and aligner over a database with precomputed embeddings.
#[pyclass(name = "Engine", frozen, module = "sgmatch_py")]
pub struct PyEngine {
    inner: NeuralEngine,
}

#[pymethods]
impl PyEngine {
    /// Trains both models with the given TOML run configuration (defaults
    /// when omitted) and embeds the database.
    #[staticmethod]
    #[pyo3(signature = (database, config=None))]
    fn train(py: Python<'_>, database: &PyDatabase, config: Option<&str>) -> PyResult<Self> {
        let cfg = parse_config(config)?;
        let db = database.inner.clone();
        let engine = py
            .detach(move || sgmatch::pipeline::train_engine(db, &cfg))
            .map_err(to_py_err)?;
        Ok(Self { inner: engine })
    }

    /// Loads checkpoints; the store is rebuilt when no path is given.
    #[staticmethod]
    #[pyo3(signature = (database, matcher, aligner, store=None))]
    fn load(database: &str, matcher: &str, aligner: &str, store: Option<&str>) -> PyResult<Self> {
        let db = Database::load(database).map_err(to_py_err)?;
        let matcher = Checkpoint::load(matcher)
            .and_then(|c| MatchModel::from_checkpoint(&c))
            .map_err(to_py_err)?;
        let aligner = Checkpoint::load(aligner)
            .and_then(|c| AlignModel::from_checkpoint(&c))
            .map_err(to_py_err)?;
        let inner = match store {
            Some(path) => {
                EmbeddingStore::load(path).and_then(|s| NeuralEngine::new(db, matcher, aligner, s))
            }
            None => NeuralEngine::precompute(db, matcher, aligner),
        }
        .map_err(to_py_err)?;
        Ok(Self { inner })
    }

    /// Writes both checkpoints and the embedding store.
    fn save(&self, matcher: &str, aligner: &str, store: &str) -> PyResult<()> {
        self.inner
            .matcher()
            .to_checkpoint()
            .save(matcher)
            .map_err(to_py_err)?;
        self.inner
            .aligner()
            .to_checkpoint()
            .save(aligner)
            .map_err(to_py_err)?;
        self.inner.store().save(store).map_err(to_py_err)
    }

    #[getter]
    fn database(&self) -> PyDatabase {
        PyDatabase {
            inner: self.inner.database().clone(),
        }
    }

    #[getter]
    fn matcher_fingerprint(&self) -> String {
        self.inner.matcher().fingerprint()
    }

    #[getter]
    fn aligner_fingerprint(&self) -> String {
        self.inner.aligner().fingerprint()
    }

    #[getter]
    fn threshold(&self) -> f64 {
        self.inner.matcher().comparator().threshold
    }

    /// Matching graphs for a pattern dict; `max_steps` > 0 adds results of
    /// progressively relaxed patterns.
    #[pyo3(signature = (pattern, max_steps=0, category=None))]
    fn query<'py>(
        &self,
        py: Python<'py>,
        pattern: &Bound<'py, PyAny>,
        max_steps: usize,
        category: Option<String>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let record: PatternRecord = from_py(pattern)?;
        let pattern = record
            .to_pattern(&self.inner.database().vocabulary)
            .map_err(to_py_err)?;
        let filters = QueryFilters { category };
        let results = py
            .detach(|| approximate_query(&self.inner, &pattern, &filters, max_steps))
            .map_err(to_py_err)?;
        to_py(py, &results)
    }

    /// Decision and alignment report as a dict.
    #[pyo3(signature = (config=None))]
    fn evaluate<'py>(&self, py: Python<'py>, config: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
        let cfg = parse_config(config)?;
        let report = py
            .detach(|| evaluate(&self.inner, &cfg.evaluation()))
            .map_err(to_py_err)?;
        to_py(py, &report)
    }
}

/// First label-aware subgraph embedding of `query` into `target` as a
/// `{query_node: target_node}` dict, or None.
#[pyfunction]
#[pyo3(signature = (query, target, label_aware=true, budget_ms=None))]
fn vf2<'py>(
    py: Python<'py>,
    query: &Bound<'py, PyAny>,
    target: &Bound<'py, PyAny>,
    label_aware: bool,
    budget_ms: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let graphs = graphs_from_records(&[from_py(query)?, from_py(target)?])?;
    let mut opts = MatchOptions {
        label_aware,
        ..MatchOptions::default()
    };
    if let Some(ms) = budget_ms {
        opts = opts.with_budget(Duration::from_millis(ms));
    }
    let found = vf2_match(&graphs[0], &graphs[1], &opts).map_err(to_py_err)?;
    to_py(py, &found)
}

/// Beam-search upper bound on the label-aware edit distance.
#[pyfunction]
#[pyo3(signature = (a, b, beam=8))]
fn graph_edit_distance(a: &Bound<'_, PyAny>, b: &Bound<'_, PyAny>, beam: usize) -> PyResult<f64> {
    let graphs = graphs_from_records(&[from_py(a)?, from_py(b)?])?;
    Ok(approx_graph_edit_distance(&graphs[0], &graphs[1], beam))
}

/// Column per row, scanning scores in descending order.
#[pyfunction]
fn greedy_assign(scores: Vec<Vec<f64>>) -> PyResult<Vec<usize>> {
    greedy_assign_scores(&score_tensor(scores)?).map_err(to_py_err)
}

/// Column per row maximizing the total score.
#[pyfunction]
fn hungarian_assign(scores: Vec<Vec<f64>>) -> PyResult<Vec<usize>> {
    hungarian_assign_scores(&score_tensor(scores)?).map_err(to_py_err)
}

/// The default run configuration as TOML.
#[pyfunction]
fn default_config() -> String {
    RunConfig::default().to_toml()
}

#[pymodule]
mod sgmatch_py {
    #[pymodule_export]
    use super::{
        default_config, graph_edit_distance, greedy_assign, hungarian_assign, vf2, PyDatabase,
        PyEngine, SgmatchError,
    };
}
