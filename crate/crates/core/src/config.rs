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

//! Run configuration: every hyperparameter of a synth/train/eval pipeline
//! in one TOML file. Missing keys take their defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aligner::{AlignerConfig, AlignerTrainConfig};
use crate::data::SynthConfig;
use crate::engine::{BenchConfig, EvalConfig};
use crate::error::{Error, Result};
use crate::matcher::{ComparatorConfig, DecisionCalibration, MatcherTrainConfig, SamplerConfig};
use crate::nn::{Aggregation, EncoderConfig, MlpConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSection {
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub aggregation: Aggregation,
}

impl Default for EncoderSection {
    fn default() -> Self {
        Self {
            num_layers: 8,
            hidden_dim: 64,
            aggregation: Aggregation::Mean,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatcherSection {
    pub encoder: EncoderSection,
    pub margin: f64,
    pub hops: usize,
    pub neighborhood_cap: usize,
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub validation_pairs: usize,
    pub max_added_edges: usize,
    pub verify_budget_ms: u64,
    /// Largest training query piece; unbounded when absent.
    pub max_query_nodes: Option<usize>,
    /// Held-out query patterns for whole-graph threshold calibration, sized
    /// like the evaluation queries; 0 calibrates on neighborhood pairs.
    pub calibration_queries: usize,
}

impl Default for MatcherSection {
    fn default() -> Self {
        Self {
            encoder: EncoderSection::default(),
            margin: 1.0,
            hops: 3,
            neighborhood_cap: 30,
            steps: 1000,
            batch_size: 128,
            learning_rate: 1e-4,
            validation_pairs: 512,
            max_added_edges: 3,
            verify_budget_ms: 200,
            max_query_nodes: None,
            calibration_queries: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignerSection {
    pub encoder: EncoderSection,
    pub attention_hidden: Vec<usize>,
    /// Largest accepted target; the largest database graph when absent.
    pub target_cap: Option<usize>,
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub query_min: usize,
    pub query_max: usize,
}

impl Default for AlignerSection {
    fn default() -> Self {
        Self {
            encoder: EncoderSection::default(),
            attention_hidden: vec![256, 64],
            target_cap: None,
            steps: 1000,
            batch_size: 128,
            learning_rate: 1e-4,
            query_min: 3,
            query_max: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Base seed; each stage derives its own stream from it.
    pub seed: u64,
    pub synth: SynthConfig,
    pub matcher: MatcherSection,
    pub aligner: AlignerSection,
    pub eval: EvalConfig,
    pub bench: BenchConfig,
    /// Log training progress every this many steps (0 = never).
    pub log_every: usize,
    /// Beam width of the edit-distance estimate behind the overview layout.
    pub overview_beam: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            synth: SynthConfig::default(),
            matcher: MatcherSection::default(),
            aligner: AlignerSection::default(),
            eval: EvalConfig::default(),
            bench: BenchConfig::default(),
            log_every: 100,
            overview_beam: 8,
        }
    }
}

/// Stage offsets mixed into the base seed.
const MATCHER_STREAM: u64 = 0x6d61_7463;
const ALIGNER_STREAM: u64 = 0x616c_6967;
const EVAL_STREAM: u64 = 0x6576_616c;
const BENCH_STREAM: u64 = 0x6265_6e63;

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        for (name, e) in [
            ("matcher", &self.matcher.encoder),
            ("aligner", &self.aligner.encoder),
        ] {
            if e.num_layers == 0 || e.hidden_dim == 0 {
                return Err(Error::Config(format!(
                    "{name} encoder needs layers and width"
                )));
            }
        }
        let m = &self.matcher;
        if !(m.margin > 0.0)
            || m.hops == 0
            || m.neighborhood_cap == 0
            || m.batch_size == 0
            || !(m.learning_rate > 0.0)
        {
            return bad("matcher margin, hops, cap, batch size and learning rate must be positive");
        }
        let a = &self.aligner;
        if a.attention_hidden.is_empty() || a.attention_hidden.contains(&0) {
            return bad("aligner attention_hidden needs at least one positive width");
        }
        if a.batch_size == 0
            || !(a.learning_rate > 0.0)
            || a.query_min == 0
            || a.query_min > a.query_max
        {
            return bad("aligner batch size, learning rate and query size range must be valid");
        }
        if self.eval.query_min == 0 || self.eval.query_min > self.eval.query_max {
            return bad("eval query size range must be valid");
        }
        if m.max_query_nodes == Some(0) {
            return bad("matcher max_query_nodes must be positive");
        }
        if self.overview_beam == 0 {
            return bad("overview_beam must be positive");
        }
        if a.target_cap == Some(0) {
            return bad("aligner target_cap must be positive");
        }
        Ok(())
    }

    fn encoder(section: &EncoderSection, vocab: usize, seed: u64) -> EncoderConfig {
        EncoderConfig {
            num_layers: section.num_layers,
            hidden_dim: section.hidden_dim,
            input_dim: vocab + 1,
            aggregation: section.aggregation,
            seed,
        }
    }

    pub fn matcher_encoder(&self, vocab: usize) -> EncoderConfig {
        Self::encoder(&self.matcher.encoder, vocab, self.seed ^ MATCHER_STREAM)
    }

    pub fn comparator(&self) -> ComparatorConfig {
        ComparatorConfig {
            margin: self.matcher.margin,
            threshold: 0.5,
            hops: self.matcher.hops,
            neighborhood_cap: self.matcher.neighborhood_cap,
        }
    }

    pub fn matcher_training(&self) -> MatcherTrainConfig {
        let m = &self.matcher;
        MatcherTrainConfig {
            steps: m.steps,
            batch_size: m.batch_size,
            learning_rate: m.learning_rate,
            seed: self.seed ^ MATCHER_STREAM,
            validation_pairs: m.validation_pairs,
            sampler: SamplerConfig {
                hops: m.hops,
                neighborhood_cap: m.neighborhood_cap,
                max_added_edges: m.max_added_edges,
                verify_budget: std::time::Duration::from_millis(m.verify_budget_ms),
                max_query_nodes: m.max_query_nodes,
                ..SamplerConfig::default()
            },
            decision_calibration: (m.calibration_queries > 0).then(|| DecisionCalibration {
                queries: m.calibration_queries,
                query_min: self.eval.query_min,
                query_max: self.eval.query_max,
                oracle_budget: std::time::Duration::from_millis(self.eval.oracle_budget_ms),
            }),
            log_every: self.log_every,
        }
    }

    pub fn aligner_model(&self, vocab: usize, largest_graph: usize) -> AlignerConfig {
        let a = &self.aligner;
        let encoder = Self::encoder(&a.encoder, vocab, self.seed ^ ALIGNER_STREAM);
        let mut dims = vec![2 * encoder.hidden_dim];
        dims.extend(&a.attention_hidden);
        dims.push(1);
        AlignerConfig {
            encoder,
            scorer: MlpConfig {
                layer_dims: dims,
                seed: self.seed ^ ALIGNER_STREAM ^ 1,
            },
            target_cap: a.target_cap.unwrap_or(largest_graph.max(1)),
        }
    }

    pub fn aligner_training(&self) -> AlignerTrainConfig {
        let a = &self.aligner;
        AlignerTrainConfig {
            steps: a.steps,
            batch_size: a.batch_size,
            learning_rate: a.learning_rate,
            seed: self.seed ^ ALIGNER_STREAM,
            query_min: a.query_min,
            query_max: a.query_max,
            log_every: self.log_every,
        }
    }

    pub fn evaluation(&self) -> EvalConfig {
        EvalConfig {
            seed: self.eval.seed ^ self.seed ^ EVAL_STREAM,
            ..self.eval.clone()
        }
    }

    pub fn benchmark(&self) -> BenchConfig {
        BenchConfig {
            seed: self.bench.seed ^ self.seed ^ BENCH_STREAM,
            ..self.bench.clone()
        }
    }

    pub fn synthetic(&self) -> SynthConfig {
        SynthConfig {
            seed: self.synth.seed ^ self.seed,
            ..self.synth.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_reference_setup() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.matcher.encoder.num_layers, 8);
        assert_eq!(cfg.matcher.encoder.hidden_dim, 64);
        assert_eq!(cfg.aligner.attention_hidden, vec![256, 64]);
        assert_eq!(cfg.matcher.learning_rate, 1e-4);
        assert_eq!(cfg.matcher.batch_size, 128);
        assert_eq!((cfg.matcher.hops, cfg.matcher.neighborhood_cap), (3, 30));
        assert_eq!(
            cfg.aligner_model(6, 30).scorer.layer_dims,
            vec![128, 256, 64, 1]
        );
    }

    #[test]
    fn toml_round_trip_and_overrides() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        let partial = RunConfig::from_toml(
            "seed = 7\n[matcher]\nsteps = 12\n[matcher.encoder]\nnum_layers = 2\n",
        )
        .unwrap();
        assert_eq!(partial.seed, 7);
        assert_eq!(partial.matcher.steps, 12);
        assert_eq!(partial.matcher.encoder.num_layers, 2);
        assert_eq!(partial.matcher.encoder.hidden_dim, 64);
        assert_eq!(partial.aligner.steps, 1000);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(RunConfig::from_toml("[matcher]\nmargin = 0.0\n").is_err());
        assert!(RunConfig::from_toml("[aligner]\nquery_min = 9\nquery_max = 3\n").is_err());
        assert!(RunConfig::from_toml("unknown = 1\n").is_err());
        assert!(RunConfig::from_toml("[matcher.encoder]\nnum_layers = 0\n").is_err());
    }
}
