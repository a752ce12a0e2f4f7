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

//! Shared fixtures: a small database with tiny untrained models.

#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use serde_json::Value;
use sgmatch::aligner::{AlignModel, AlignerConfig};
use sgmatch::data::{generate_synthetic, Database, SynthConfig};
use sgmatch::engine::NeuralEngine;
use sgmatch::matcher::{ComparatorConfig, MatchModel};
use sgmatch::nn::{Aggregation, EncoderConfig, MlpConfig};
use sgmatch_cli::server::AppState;

pub fn database(n_graphs: usize) -> Database {
    generate_synthetic(&SynthConfig {
        n_graphs,
        min_nodes: 6,
        max_nodes: 12,
        n_labels: 3,
        edge_density: 0.3,
        seed: 7,
    })
    .unwrap()
}

fn encoder(vocab: usize, seed: u64) -> EncoderConfig {
    EncoderConfig {
        num_layers: 2,
        hidden_dim: 8,
        input_dim: vocab + 1,
        aggregation: Aggregation::Mean,
        seed,
    }
}

/// A matcher whose threshold admits every target, so results carry alignments.
pub fn engine(db: Database) -> NeuralEngine {
    let vocab = db.vocabulary.len();
    let matcher = MatchModel::new(
        encoder(vocab, 1),
        ComparatorConfig {
            threshold: 1e9,
            ..ComparatorConfig::default()
        },
    )
    .unwrap();
    let aligner = AlignModel::new(AlignerConfig {
        encoder: encoder(vocab, 2),
        scorer: MlpConfig {
            layer_dims: vec![16, 12, 1],
            seed: 3,
        },
        target_cap: db.max_nodes(),
    })
    .unwrap();
    NeuralEngine::precompute(db, matcher, aligner).unwrap()
}

pub fn state(n_graphs: usize) -> Arc<AppState> {
    let engine = engine(database(n_graphs));
    let overview = (0..engine.database().len())
        .map(|i| [i as f64, -(i as f64)])
        .collect();
    Arc::new(AppState::new(engine, overview))
}

pub fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(format!("{name}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn assert_valid(name: &str, instance: &Value) {
    let validator = jsonschema::validator_for(&schema(name)).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(instance)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect();
    assert!(
        errors.is_empty(),
        "{name} schema violations: {errors:?}\n{instance}"
    );
}
