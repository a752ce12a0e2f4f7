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

use thiserror::Error;

use crate::graph::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node {0} not found")]
    NodeNotFound(NodeId),
    #[error("invalid size range: min {min}, max {max}, graph has {available} nodes")]
    InvalidSizeRange {
        min: usize,
        max: usize,
        available: usize,
    },
    #[error("graph has fewer than {requested} non-edges")]
    NoNonEdge { requested: usize },
    #[error("graph is too small for this operation")]
    TooSmall,
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("exact matching exceeded its time budget")]
    Timeout,
    #[error("query has {nodes} nodes, brute force supports at most {limit}")]
    TooLarge { nodes: usize, limit: usize },
    #[error("label id {label} outside vocabulary of size {vocab}")]
    LabelOutOfVocabulary { label: usize, vocab: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value encountered: {0}")]
    Numerical(String),
    #[error("no verified training pair after {attempts} attempts")]
    SamplingExhausted { attempts: usize },
    #[error("target graph has {nodes} nodes, above the cap of {cap}")]
    TargetTooLarge { nodes: usize, cap: usize },
    #[error("assignment infeasible: {rows} query rows exceed {cols} target columns")]
    Infeasible { rows: usize, cols: usize },
    #[error("model checkpoint missing: {0}")]
    ModelMissing(String),
    #[error("model fingerprint mismatch: store has {stored}, model has {loaded}")]
    FingerprintMismatch { stored: String, loaded: String },
    #[error("format error in {context}: {message}")]
    Format { context: String, message: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("edge density {0} cannot produce connected graphs")]
    InvalidDensity(f64),
    #[error("unknown attribute key {0:?}")]
    UnknownAttribute(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Format {
            context: context.into(),
            message: message.to_string(),
        }
    }
}
