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

//! Subgraph decisions from neighborhood order embeddings.
//!
//! Every node is represented by the encoder output at that node when its
//! k-hop neighborhood is encoded with the node flagged as anchor. A query
//! neighborhood is predicted to be contained in a target neighborhood when
//! the query embedding is (nearly) dominated componentwise by the target
//! embedding, as measured by [`order_violation`].

mod decision;
mod sampling;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{khop_indices, Graph, NodeId};
use crate::nn::{Checkpoint, Encoder, EncoderConfig, ModelKind, Tensor};

pub use decision::{
    decision_statistic, subgraph_decision, violation_matrix, Decision, EmbeddingComparator,
    LocalComparator, NeighborhoodVf2Comparator,
};
pub use sampling::{
    sample_batch, sample_training_pair, PairKind, PairLabel, SamplerConfig, TrainingPair,
};
pub use train::{
    calibrate_decision_threshold, calibrate_threshold, comparator_loss, comparator_loss_and_grad,
    pair_accuracy, train_matcher, train_matcher_on_pairs, DecisionCalibration, MatcherTrainConfig,
    TrainedMatcher,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparatorConfig {
    /// Margin for negative pairs in the max-margin loss.
    pub margin: f64,
    /// Local matches are violations strictly below this value.
    pub threshold: f64,
    pub hops: usize,
    pub neighborhood_cap: usize,
}

impl Default for ComparatorConfig {
    fn default() -> Self {
        Self {
            margin: 1.0,
            threshold: 0.5,
            hops: 3,
            neighborhood_cap: 30,
        }
    }
}

impl ComparatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin > 0.0)
            || !(self.threshold >= 0.0)
            || self.hops < 1
            || self.neighborhood_cap < 1
        {
            return Err(Error::Config(format!("invalid comparator config {self:?}")));
        }
        Ok(())
    }
}

/// Anchor embedding of a neighborhood.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrderEmbedding(pub Vec<f64>);

/// `sum_i max(0, q_i - t_i)^2`
pub fn order_violation(query: &OrderEmbedding, target: &OrderEmbedding) -> Result<f64> {
    if query.0.len() != target.0.len() {
        return Err(Error::Shape(format!(
            "order embeddings of length {} and {}",
            query.0.len(),
            target.0.len()
        )));
    }
    Ok(violation(&query.0, &target.0))
}

#[inline]
pub(crate) fn violation(query: &[f64], target: &[f64]) -> f64 {
    query
        .iter()
        .zip(target)
        .map(|(q, t)| {
            let d = q - t;
            if d > 0.0 {
                d * d
            } else {
                0.0
            }
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct MatcherCheckpointConfig {
    encoder: EncoderConfig,
    comparator: ComparatorConfig,
}

/// Encoder weights plus the comparator settings.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchModel {
    encoder: Encoder,
    params: Vec<f64>,
    comparator: ComparatorConfig,
}

impl MatchModel {
    /// Freshly initialised model.
    pub fn new(encoder: EncoderConfig, comparator: ComparatorConfig) -> Result<Self> {
        comparator.validate()?;
        let encoder = Encoder::new(encoder, 0)?;
        let mut params = vec![0.0; encoder.param_count()];
        encoder.init(&mut params);
        Ok(Self {
            encoder,
            params,
            comparator,
        })
    }

    pub fn with_params(mut self, params: Vec<f64>) -> Result<Self> {
        if params.len() != self.encoder.param_count() {
            return Err(Error::Shape(format!(
                "matcher expects {} parameters, got {}",
                self.encoder.param_count(),
                params.len()
            )));
        }
        self.params = params;
        Ok(self)
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut Vec<f64> {
        &mut self.params
    }

    pub fn comparator(&self) -> &ComparatorConfig {
        &self.comparator
    }

    pub fn set_threshold(&mut self, threshold: f64) {
        self.comparator.threshold = threshold;
    }

    pub fn embedding_dim(&self) -> usize {
        self.encoder.output_dim()
    }

    /// Order embedding of the k-hop neighborhood around `anchor`.
    pub fn neighborhood_embedding(&self, g: &Graph, anchor: NodeId) -> Result<OrderEmbedding> {
        let idx = g.require_index(anchor)?;
        Ok(OrderEmbedding(self.embed_anchor_index(g, idx)?))
    }

    pub(crate) fn embed_anchor_index(&self, g: &Graph, anchor: usize) -> Result<Vec<f64>> {
        let keep = khop_indices(
            g,
            anchor,
            self.comparator.hops,
            self.comparator.neighborhood_cap,
        );
        let sub = g.induced_subgraph(&keep);
        let local = sub
            .index_of(g.node_id(anchor))
            .expect("anchor kept in its neighborhood");
        let out = self.encoder.forward(&self.params, &sub, Some(local))?;
        Ok(out.row(local).to_vec())
    }

    /// Embeddings of a neighborhood graph whose anchor is given by index.
    pub(crate) fn embed_neighborhood_graph(&self, g: &Graph, anchor: usize) -> Result<Vec<f64>> {
        let out = self.encoder.forward(&self.params, g, Some(anchor))?;
        Ok(out.row(anchor).to_vec())
    }

    /// One order embedding per node, in node index order (`n x dim`).
    pub fn embed_all(&self, g: &Graph) -> Result<Tensor> {
        let d = self.embedding_dim();
        let mut data = Vec::with_capacity(g.node_count() * d);
        for v in 0..g.node_count() {
            data.extend(self.embed_anchor_index(g, v)?);
        }
        Tensor::from_vec(&[g.node_count(), d], data)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let config = MatcherCheckpointConfig {
            encoder: self.encoder.config().clone(),
            comparator: self.comparator.clone(),
        };
        Checkpoint::new(ModelKind::Matcher, &config, self.params.clone())
            .expect("config serializes")
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.kind != ModelKind::Matcher {
            return Err(Error::ModelMissing(format!(
                "expected a matcher checkpoint, got {:?}",
                ckpt.kind
            )));
        }
        let config: MatcherCheckpointConfig = ckpt.config_as()?;
        Self::new(config.encoder, config.comparator)?.with_params(ckpt.params.clone())
    }

    pub fn fingerprint(&self) -> String {
        self.to_checkpoint().fingerprint()
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::graph::fixtures;
    use crate::nn::Aggregation;

    pub fn tiny_encoder(vocab: usize) -> EncoderConfig {
        EncoderConfig {
            num_layers: 3,
            hidden_dim: 8,
            input_dim: vocab + 1,
            aggregation: Aggregation::Mean,
            seed: 4,
        }
    }

    #[test]
    fn violation_examples() {
        let e = |v: &[f64]| OrderEmbedding(v.to_vec());
        assert_eq!(
            order_violation(&e(&[1.0, 2.0]), &e(&[1.0, 2.0])).unwrap(),
            0.0
        );
        assert_eq!(
            order_violation(&e(&[1.0, 2.0]), &e(&[2.0, 3.0])).unwrap(),
            0.0
        );
        assert_eq!(
            order_violation(&e(&[3.0, 1.0]), &e(&[2.0, 3.0])).unwrap(),
            1.0
        );
        assert!(matches!(
            order_violation(&e(&[1.0]), &e(&[1.0, 2.0])),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn zero_parameters_embed_to_zero() {
        let model = MatchModel::new(tiny_encoder(1), ComparatorConfig::default()).unwrap();
        let n = model.params().len();
        let model = model.with_params(vec![0.0; n]).unwrap();
        let z = model
            .neighborhood_embedding(&fixtures::path(4), NodeId(1))
            .unwrap();
        assert!(z.0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn embedding_only_sees_the_neighborhood() {
        let model = MatchModel::new(
            tiny_encoder(2),
            ComparatorConfig {
                hops: 2,
                ..ComparatorConfig::default()
            },
        )
        .unwrap();
        let base = Graph::from_labels(
            &[0, 1, 0, 1, 0, 1, 0],
            &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6)],
        )
        .unwrap();
        // Relabel and rewire beyond distance 2 of node 1.
        let edited = Graph::from_labels(
            &[0, 1, 0, 1, 1, 0, 0],
            &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (4, 6), (5, 6)],
        )
        .unwrap();
        let a = model.neighborhood_embedding(&base, NodeId(1)).unwrap();
        let b = model.neighborhood_embedding(&edited, NodeId(1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, model.neighborhood_embedding(&base, NodeId(1)).unwrap());
        let c = model.neighborhood_embedding(&edited, NodeId(2)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn checkpoint_round_trip() {
        let model = MatchModel::new(tiny_encoder(3), ComparatorConfig::default()).unwrap();
        let back = MatchModel::from_checkpoint(
            &Checkpoint::from_json(&model.to_checkpoint().to_json()).unwrap(),
        )
        .unwrap();
        assert_eq!(back, model);
        assert_eq!(back.fingerprint(), model.fingerprint());
    }
}
