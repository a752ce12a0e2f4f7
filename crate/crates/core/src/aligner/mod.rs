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

//! Node alignment from cross-graph attention.
//!
//! Both graphs are encoded whole (no anchor flag). Every query/target node
//! pair is scored by a small MLP over the concatenated embeddings, and each
//! query row is normalised with a softmax into a distribution over target
//! nodes.

mod assign;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId, NodeMapping};
use crate::nn::{
    relu_backward_in_place, Checkpoint, Encoder, EncoderConfig, EncoderTrace, Mlp, MlpConfig,
    MlpTrace, ModelKind, Tensor,
};

pub use assign::{
    greedy_assign, greedy_assign_scores, hungarian_assign, hungarian_assign_scores, mapping_score,
};
pub use train::{
    alignment_loss_and_grad, sample_alignment_sample, top_k_accuracy, train_aligner,
    train_aligner_on_samples, AlignerTrainConfig, AlignmentSample, TrainedAligner,
};

/// Raw pair scores, rows indexed by query nodes and columns by target nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionMatrix {
    pub scores: Tensor,
    pub query_ids: Vec<NodeId>,
    pub target_ids: Vec<NodeId>,
}

/// Row-stochastic alignment probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityMatrix {
    pub probs: Tensor,
    pub query_ids: Vec<NodeId>,
    pub target_ids: Vec<NodeId>,
}

impl ProbabilityMatrix {
    pub fn from_scores(attention: &AttentionMatrix) -> Self {
        Self {
            probs: softmax_rows(&attention.scores),
            query_ids: attention.query_ids.clone(),
            target_ids: attention.target_ids.clone(),
        }
    }

    /// Wraps an existing row-stochastic matrix, checking shape and rows.
    pub fn new(probs: Tensor, query_ids: Vec<NodeId>, target_ids: Vec<NodeId>) -> Result<Self> {
        if probs.shape().len() != 2
            || probs.rows() != query_ids.len()
            || probs.cols() != target_ids.len()
        {
            return Err(Error::Shape(format!(
                "probability matrix of shape {:?} for {} x {} nodes",
                probs.shape(),
                query_ids.len(),
                target_ids.len()
            )));
        }
        for r in 0..probs.rows() {
            let row = probs.row(r);
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-6 {
                return Err(Error::Numerical(format!("row {r} is not a distribution")));
            }
        }
        Ok(Self {
            probs,
            query_ids,
            target_ids,
        })
    }

    pub fn rows(&self) -> usize {
        self.probs.rows()
    }

    pub fn cols(&self) -> usize {
        self.probs.cols()
    }

    pub fn get(&self, q: usize, t: usize) -> f64 {
        self.probs.get(q, t)
    }

    /// The `k` most probable targets of query row `q`, ties by column.
    pub fn top_k(&self, q: usize, k: usize) -> Vec<(NodeId, f64)> {
        let row = self.probs.row(q);
        let mut cols: Vec<usize> = (0..row.len()).collect();
        cols.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        cols.into_iter()
            .take(k)
            .map(|c| (self.target_ids[c], row[c]))
            .collect()
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(scores: &Tensor) -> Tensor {
    let (rows, cols) = (scores.rows(), scores.cols());
    let mut out = Tensor::matrix(rows, cols);
    for r in 0..rows {
        let row = scores.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let dst = out.row_mut(r);
        let mut sum = 0.0;
        for (d, &s) in dst.iter_mut().zip(row) {
            *d = (s - max).exp();
            sum += *d;
        }
        for d in dst.iter_mut() {
            *d /= sum;
        }
    }
    out
}

pub(crate) const LOG_FLOOR: f64 = 1e-12;

/// `-sum_q log P[q, truth[q]]`, probabilities clamped at `1e-12`.
pub fn alignment_loss(p: &ProbabilityMatrix, truth: &[usize]) -> Result<f64> {
    if truth.len() != p.rows() {
        return Err(Error::Shape(format!(
            "{} truth entries for {} query rows",
            truth.len(),
            p.rows()
        )));
    }
    let mut loss = 0.0;
    for (q, &t) in truth.iter().enumerate() {
        if t >= p.cols() {
            return Err(Error::Shape(format!(
                "truth index {t} outside {} targets",
                p.cols()
            )));
        }
        loss -= p.get(q, t).max(LOG_FLOOR).ln();
    }
    Ok(loss)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignerConfig {
    pub encoder: EncoderConfig,
    pub scorer: MlpConfig,
    /// Largest accepted target graph.
    pub target_cap: usize,
}

impl AlignerConfig {
    pub fn for_vocabulary(vocab_size: usize, target_cap: usize) -> Self {
        let encoder = EncoderConfig::for_vocabulary(vocab_size);
        let scorer = MlpConfig::pair_scorer(encoder.hidden_dim);
        Self {
            encoder,
            scorer,
            target_cap,
        }
    }
}

/// Intermediate values of a scoring pass.
pub(crate) struct ScoreTrace {
    query: EncoderTrace,
    target: EncoderTrace,
    hq: Tensor,
    ht: Tensor,
    /// First scorer layer pre-activations, `n*m x width`.
    pre: Vec<f64>,
    scorer: MlpTrace,
}

/// Encoder and pair scorer sharing one flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignModel {
    config: AlignerConfig,
    encoder: Encoder,
    scorer: Mlp,
    params: Vec<f64>,
}

impl AlignModel {
    pub fn new(config: AlignerConfig) -> Result<Self> {
        let encoder = Encoder::new(config.encoder.clone(), 0)?;
        let scorer = Mlp::new(config.scorer.clone(), encoder.end())?;
        if scorer.input_dim() != 2 * encoder.output_dim() || scorer.output_dim() != 1 {
            return Err(Error::Config(format!(
                "scorer dims {:?} do not fit embeddings of size {}",
                config.scorer.layer_dims,
                encoder.output_dim()
            )));
        }
        if config.scorer.layer_dims.len() < 3 {
            return Err(Error::Config(
                "scorer needs at least one hidden layer".into(),
            ));
        }
        if config.target_cap == 0 {
            return Err(Error::Config("target_cap must be positive".into()));
        }
        let mut params = vec![0.0; scorer.end()];
        encoder.init(&mut params);
        scorer.init(&mut params);
        Ok(Self {
            config,
            encoder,
            scorer,
            params,
        })
    }

    pub fn with_params(mut self, params: Vec<f64>) -> Result<Self> {
        if params.len() != self.params.len() {
            return Err(Error::Shape(format!(
                "aligner expects {} parameters, got {}",
                self.params.len(),
                params.len()
            )));
        }
        self.params = params;
        Ok(self)
    }

    pub fn config(&self) -> &AlignerConfig {
        &self.config
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn scorer(&self) -> &Mlp {
        &self.scorer
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut Vec<f64> {
        &mut self.params
    }

    pub fn target_cap(&self) -> usize {
        self.config.target_cap
    }

    pub fn set_target_cap(&mut self, cap: usize) {
        self.config.target_cap = cap.max(1);
    }

    /// Whole-graph node embeddings (no anchor).
    pub fn embed_graph(&self, g: &Graph) -> Result<Tensor> {
        self.encoder.forward(&self.params, g, None)
    }

    fn check_target(&self, target: &Graph) -> Result<()> {
        if target.node_count() > self.config.target_cap {
            return Err(Error::TargetTooLarge {
                nodes: target.node_count(),
                cap: self.config.target_cap,
            });
        }
        Ok(())
    }

    /// Scores all pairs from precomputed embeddings. The first scorer layer
    /// acts on `[h_q ; h_t]`, so it splits into a query half and a target
    /// half evaluated once per node.
    fn score_embeddings(&self, hq: &Tensor, ht: &Tensor) -> Result<(Tensor, Vec<f64>, MlpTrace)> {
        let (n, m, d) = (hq.rows(), ht.rows(), hq.cols());
        let first = self.scorer.layers()[0];
        let w = first.weight(&self.params);
        let b = first.bias(&self.params);
        let width = first.out_dim;
        let half = |h: &Tensor, rows: usize, col0: usize, bias: bool| {
            let mut out = vec![0.0; rows * width];
            for r in 0..rows {
                let x = h.row(r);
                for j in 0..width {
                    let wj = &w[j * 2 * d + col0..j * 2 * d + col0 + d];
                    out[r * width + j] = crate::nn::dot(wj, x) + if bias { b[j] } else { 0.0 };
                }
            }
            out
        };
        let aq = half(hq, n, 0, false);
        let at = half(ht, m, d, true);
        let mut pre = vec![0.0; n * m * width];
        for q in 0..n {
            for t in 0..m {
                let dst = &mut pre[(q * m + t) * width..(q * m + t + 1) * width];
                for ((o, a), c) in dst
                    .iter_mut()
                    .zip(&aq[q * width..(q + 1) * width])
                    .zip(&at[t * width..(t + 1) * width])
                {
                    *o = a + c;
                }
            }
        }
        let (out, trace) = self.scorer.forward_from(1, &self.params, &pre, n * m);
        let scores = Tensor::from_vec(&[n, m], out)
            .map_err(|_| Error::Numerical("non-finite attention score".into()))?;
        Ok((scores, pre, trace))
    }

    /// Attention scores from embeddings computed elsewhere, e.g. a store.
    pub fn attention_from_embeddings(
        &self,
        query: &Graph,
        hq: &Tensor,
        target: &Graph,
        ht: &Tensor,
    ) -> Result<AttentionMatrix> {
        self.check_target(target)?;
        let d = self.encoder.output_dim();
        if hq.rows() != query.node_count()
            || ht.rows() != target.node_count()
            || hq.cols() != d
            || ht.cols() != d
        {
            return Err(Error::Shape("embeddings do not match the graphs".into()));
        }
        let (scores, _, _) = self.score_embeddings(hq, ht)?;
        Ok(AttentionMatrix {
            scores,
            query_ids: ids(query),
            target_ids: ids(target),
        })
    }

    pub(crate) fn scores_traced(
        &self,
        query: &Graph,
        target: &Graph,
    ) -> Result<(Tensor, ScoreTrace)> {
        self.check_target(target)?;
        let (hq, query_trace) = self.encoder.forward_traced(&self.params, query, None)?;
        let (ht, target_trace) = self.encoder.forward_traced(&self.params, target, None)?;
        let (scores, pre, scorer) = self.score_embeddings(&hq, &ht)?;
        Ok((
            scores,
            ScoreTrace {
                query: query_trace,
                target: target_trace,
                hq,
                ht,
                pre,
                scorer,
            },
        ))
    }

    /// Accumulates parameter gradients given `d_scores` (`n x m`).
    pub(crate) fn backward_scores(
        &self,
        query: &Graph,
        target: &Graph,
        trace: &ScoreTrace,
        d_scores: &[f64],
        grad: &mut [f64],
    ) {
        let (n, m, d) = (trace.hq.rows(), trace.ht.rows(), trace.hq.cols());
        let mut dpre = self
            .scorer
            .backward(&self.params, &trace.scorer, d_scores, grad);
        relu_backward_in_place(&trace.pre, &mut dpre);
        let first = self.scorer.layers()[0];
        let width = first.out_dim;
        let mut gq = vec![0.0; n * width];
        let mut gt = vec![0.0; m * width];
        for q in 0..n {
            for t in 0..m {
                let src = &dpre[(q * m + t) * width..(q * m + t + 1) * width];
                for j in 0..width {
                    gq[q * width + j] += src[j];
                    gt[t * width + j] += src[j];
                }
            }
        }
        let w_start = first.offset;
        let b_start = first.offset + first.in_dim * width;
        let w = first.weight(&self.params);
        let mut dhq = vec![0.0; n * d];
        let mut dht = vec![0.0; m * d];
        for j in 0..width {
            let row = w_start + j * 2 * d;
            for q in 0..n {
                let g = gq[q * width + j];
                if g == 0.0 {
                    continue;
                }
                crate::nn::axpy(g, trace.hq.row(q), &mut grad[row..row + d]);
                crate::nn::axpy(
                    g,
                    &w[j * 2 * d..j * 2 * d + d],
                    &mut dhq[q * d..(q + 1) * d],
                );
            }
            for t in 0..m {
                let g = gt[t * width + j];
                if g == 0.0 {
                    continue;
                }
                grad[b_start + j] += g;
                crate::nn::axpy(g, trace.ht.row(t), &mut grad[row + d..row + 2 * d]);
                crate::nn::axpy(
                    g,
                    &w[j * 2 * d + d..(j + 1) * 2 * d],
                    &mut dht[t * d..(t + 1) * d],
                );
            }
        }
        self.encoder
            .backward(&self.params, query, &trace.query, &dhq, grad);
        self.encoder
            .backward(&self.params, target, &trace.target, &dht, grad);
    }

    pub fn attention_probabilities(
        &self,
        query: &Graph,
        target: &Graph,
    ) -> Result<(AttentionMatrix, ProbabilityMatrix)> {
        let (scores, _) = self.scores_traced(query, target)?;
        let attention = AttentionMatrix {
            scores,
            query_ids: ids(query),
            target_ids: ids(target),
        };
        let probs = ProbabilityMatrix::from_scores(&attention);
        Ok((attention, probs))
    }

    /// Greedy assignment over the attention probabilities. Does not check
    /// that the query is actually contained in the target.
    pub fn predict_alignment(
        &self,
        query: &Graph,
        target: &Graph,
    ) -> Result<(NodeMapping, ProbabilityMatrix)> {
        let (_, probs) = self.attention_probabilities(query, target)?;
        Ok((greedy_assign(&probs)?, probs))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint::new(ModelKind::Aligner, &self.config, self.params.clone())
            .expect("config serializes")
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.kind != ModelKind::Aligner {
            return Err(Error::ModelMissing(format!(
                "expected an aligner checkpoint, got {:?}",
                ckpt.kind
            )));
        }
        let config: AlignerConfig = ckpt.config_as()?;
        Self::new(config)?.with_params(ckpt.params.clone())
    }

    pub fn fingerprint(&self) -> String {
        self.to_checkpoint().fingerprint()
    }
}

fn ids(g: &Graph) -> Vec<NodeId> {
    g.nodes().iter().map(|n| n.id).collect()
}

/// Baseline alignment from the matcher: greedy assignment on negated order
/// violations between query and target node embeddings.
pub fn violation_alignment(
    violations: &Tensor,
    query: &Graph,
    target: &Graph,
) -> Result<NodeMapping> {
    let mut scores = violations.clone();
    for v in scores.data_mut() {
        *v = -*v;
    }
    let cols = greedy_assign_scores(&scores)?;
    Ok(NodeMapping::from_indices(query, target, &cols))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::graph::fixtures;
    use crate::nn::Aggregation;

    pub fn tiny_config(vocab: usize, cap: usize) -> AlignerConfig {
        AlignerConfig {
            encoder: EncoderConfig {
                num_layers: 2,
                hidden_dim: 6,
                input_dim: vocab + 1,
                aggregation: Aggregation::Mean,
                seed: 2,
            },
            scorer: MlpConfig {
                layer_dims: vec![12, 10, 5, 1],
                seed: 3,
            },
            target_cap: cap,
        }
    }

    fn pm(rows: &[Vec<f64>]) -> ProbabilityMatrix {
        let t = Tensor::from_rows(rows).unwrap();
        let q = (0..t.rows() as u32).map(NodeId).collect();
        let c = (0..t.cols() as u32).map(NodeId).collect();
        ProbabilityMatrix::new(t, q, c).unwrap()
    }

    #[test]
    fn softmax_examples() {
        let p = softmax_rows(&Tensor::from_rows(&[vec![0.0, 0.0], vec![3f64.ln(), 0.0]]).unwrap());
        assert_eq!(p.row(0), &[0.5, 0.5]);
        assert!((p.get(1, 0) - 0.75).abs() < 1e-15);
        assert!((p.get(1, 1) - 0.25).abs() < 1e-15);
        let big = softmax_rows(&Tensor::from_rows(&[vec![1000.0, 999.0, -1000.0]]).unwrap());
        assert!(big.is_finite());
        assert!((big.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_scorer_gives_uniform_rows() {
        let model = AlignModel::new(tiny_config(2, 10)).unwrap();
        let n = model.params().len();
        let model = model.with_params(vec![0.0; n]).unwrap();
        let q = Graph::from_labels(&[0, 1], &[(0, 1)]).unwrap();
        let t = Graph::from_labels(&[0, 1, 1, 0], &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let (_, p) = model.attention_probabilities(&q, &t).unwrap();
        assert!(p.probs.data().iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn loss_examples() {
        assert_eq!(
            alignment_loss(&pm(&[vec![1.0, 0.0], vec![0.0, 1.0]]), &[0, 1]).unwrap(),
            0.0
        );
        let u = pm(&[vec![0.25; 4], vec![0.25; 4], vec![0.25; 4]]);
        assert!((alignment_loss(&u, &[0, 1, 3]).unwrap() - 3.0 * 4f64.ln()).abs() < 1e-12);
        let hard = pm(&[vec![1.0, 0.0]]);
        assert!((alignment_loss(&hard, &[1]).unwrap() + LOG_FLOOR.ln()).abs() < 1e-9);
        assert!(alignment_loss(&hard, &[2]).is_err());
        assert!(alignment_loss(&hard, &[0, 0]).is_err());
    }

    #[test]
    fn oversize_target_rejected() {
        let model = AlignModel::new(tiny_config(1, 3)).unwrap();
        let err = model
            .attention_probabilities(&fixtures::path(2), &fixtures::path(4))
            .unwrap_err();
        assert!(matches!(err, Error::TargetTooLarge { nodes: 4, cap: 3 }));
    }

    #[test]
    fn rows_are_distributions() {
        let model = AlignModel::new(tiny_config(1, 10)).unwrap();
        let (a, p) = model
            .attention_probabilities(&fixtures::star(3), &fixtures::complete(5))
            .unwrap();
        assert_eq!(a.scores.shape(), &[4, 5]);
        for r in 0..p.rows() {
            assert!((p.probs.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
        assert_eq!(p.top_k(0, 2).len(), 2);
    }

    #[test]
    fn single_node_aligns_to_itself() {
        let model = AlignModel::new(tiny_config(1, 10)).unwrap();
        let g = fixtures::path(1);
        let (mapping, p) = model.predict_alignment(&g, &g).unwrap();
        assert_eq!(mapping.get(NodeId(0)), Some(NodeId(0)));
        assert_eq!(p.probs.row(0), &[1.0]);
    }

    #[test]
    fn factored_scores_match_concatenated_input() {
        let model = AlignModel::new(tiny_config(2, 10)).unwrap();
        let q = Graph::from_labels(&[0, 1, 1], &[(0, 1), (1, 2)]).unwrap();
        let t = Graph::from_labels(&[1, 0, 1, 0], &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let (a, _) = model.attention_probabilities(&q, &t).unwrap();
        let hq = model.embed_graph(&q).unwrap();
        let ht = model.embed_graph(&t).unwrap();
        for i in 0..3 {
            for j in 0..4 {
                let x: Vec<f64> = hq.row(i).iter().chain(ht.row(j)).copied().collect();
                let direct = model.scorer().forward(model.params(), &x).unwrap()[0];
                assert!((direct - a.scores.get(i, j)).abs() < 1e-12);
            }
        }
        let again = model.attention_from_embeddings(&q, &hq, &t, &ht).unwrap();
        assert_eq!(again, a);
    }

    #[test]
    fn baseline_examples() {
        let q = fixtures::path(1);
        let t = fixtures::path(3);
        let v = Tensor::from_rows(&[vec![0.4, 0.1, 0.3]]).unwrap();
        assert_eq!(
            violation_alignment(&v, &q, &t).unwrap().get(NodeId(0)),
            Some(NodeId(1))
        );
        let q2 = fixtures::path(2);
        let flat = Tensor::from_rows(&[vec![0.2; 3], vec![0.2; 3]]).unwrap();
        let m = violation_alignment(&flat, &q2, &t).unwrap();
        assert_eq!(m.get(NodeId(0)), Some(NodeId(0)));
        assert_eq!(m.get(NodeId(1)), Some(NodeId(1)));
    }

    #[test]
    fn checkpoint_round_trip() {
        let model = AlignModel::new(tiny_config(3, 12)).unwrap();
        let back = AlignModel::from_checkpoint(&model.to_checkpoint()).unwrap();
        assert_eq!(back, model);
        assert_ne!(
            back.fingerprint(),
            crate::matcher::MatchModel::new(
                tiny_config(3, 12).encoder,
                crate::matcher::ComparatorConfig::default()
            )
            .unwrap()
            .fingerprint()
        );
    }
}
