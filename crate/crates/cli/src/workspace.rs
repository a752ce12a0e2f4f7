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

//! On-disk layout of a pipeline run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sgmatch::aligner::AlignModel;
use sgmatch::data::Database;
use sgmatch::engine::{EmbeddingStore, NeuralEngine};
use sgmatch::matcher::MatchModel;
use sgmatch::nn::Checkpoint;
use sgmatch::{Error, Result};

/// Overview coordinates keyed by graph id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Overview {
    pub graph_ids: Vec<String>,
    pub coordinates: Vec<[f64; 2]>,
}

/// A directory holding the database, checkpoints, store and overview.
#[derive(Clone, Debug)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn database_path(&self) -> PathBuf {
        self.root.join("database.json")
    }

    pub fn matcher_path(&self) -> PathBuf {
        self.root.join("matcher.json")
    }

    pub fn aligner_path(&self) -> PathBuf {
        self.root.join("aligner.json")
    }

    pub fn store_path(&self) -> PathBuf {
        self.root.join("store.bin")
    }

    pub fn overview_path(&self) -> PathBuf {
        self.root.join("overview.json")
    }

    pub fn load_database(&self) -> Result<Database> {
        let path = self.database_path();
        if !path.exists() {
            return Err(Error::Config(format!(
                "no database at {}; run `synth` or `ingest` first",
                path.display()
            )));
        }
        Database::load(path)
    }

    pub fn load_matcher(&self) -> Result<MatchModel> {
        MatchModel::from_checkpoint(&Checkpoint::load(self.matcher_path())?)
    }

    pub fn load_aligner(&self) -> Result<AlignModel> {
        AlignModel::from_checkpoint(&Checkpoint::load(self.aligner_path())?)
    }

    pub fn load_engine(&self) -> Result<NeuralEngine> {
        let db = self.load_database()?;
        let matcher = self.load_matcher()?;
        let aligner = self.load_aligner()?;
        let store_path = self.store_path();
        if !store_path.exists() {
            return Err(Error::ModelMissing(format!(
                "no embedding store at {}; run `precompute` first",
                store_path.display()
            )));
        }
        NeuralEngine::new(db, matcher, aligner, EmbeddingStore::load(store_path)?)
    }

    pub fn save_overview(&self, overview: &Overview) -> Result<()> {
        std::fs::write(
            self.overview_path(),
            serde_json::to_string(overview).expect("serializes"),
        )?;
        Ok(())
    }

    /// Coordinates aligned with `db`; all zeros when no overview was saved.
    pub fn load_overview(&self, db: &Database) -> Result<Vec<[f64; 2]>> {
        let path = self.overview_path();
        if !path.exists() {
            return Ok(vec![[0.0; 2]; db.len()]);
        }
        let text = std::fs::read_to_string(&path)?;
        let overview: Overview = serde_json::from_str(&text).map_err(|e| Error::Format {
            context: path.display().to_string(),
            message: e.to_string(),
        })?;
        if overview.graph_ids.len() != db.len()
            || overview
                .graph_ids
                .iter()
                .zip(&db.graphs)
                .any(|(id, g)| id != g.graph_id())
        {
            return Err(Error::Format {
                context: path.display().to_string(),
                message: "overview does not match the database".into(),
            });
        }
        Ok(overview.coordinates)
    }
}
