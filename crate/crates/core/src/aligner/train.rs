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

//! Cross-entropy training of the aligner on sampled subgraph pairs.

use log::info;
use rand::Rng;

use super::{AlignModel, ProbabilityMatrix, LOG_FLOOR};
use crate::error::{Error, Result};
use crate::graph::{sample_connected_subgraph, seeded_rng, Graph};
use crate::nn::AdamState;

/// A query, a target containing it, and the target index of every query node.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentSample {
    pub query: Graph,
    pub target: Graph,
    pub truth: Vec<usize>,
}

impl AlignmentSample {
    pub fn new(query: Graph, target: Graph, truth: Vec<usize>) -> Result<Self> {
        let n = query.node_count();
        let mut used = vec![false; target.node_count()];
        let valid = truth.len() == n
            && truth
                .iter()
                .all(|&t| t < used.len() && !std::mem::replace(&mut used[t], true))
            && query
                .edges()
                .all(|(a, b)| target.has_edge(truth[a], truth[b]));
        if !valid {
            return Err(Error::InvalidGraph(
                "alignment truth is not an injective edge-preserving mapping".into(),
            ));
        }
        Ok(Self {
            query,
            target,
            truth,
        })
    }
}

/// Samples a whole database graph (at most `target_cap` nodes) as target and
/// a connected subgraph of it as query.
pub fn sample_alignment_sample<R: Rng + ?Sized>(
    db: &[Graph],
    rng: &mut R,
    min_size: usize,
    max_size: usize,
    target_cap: usize,
) -> Result<AlignmentSample> {
    let eligible: Vec<&Graph> = db
        .iter()
        .filter(|g| g.node_count() >= min_size && g.node_count() <= target_cap)
        .collect();
    if eligible.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let target = eligible[rng.random_range(0..eligible.len())];
    let (pattern, _) =
        sample_connected_subgraph(target, rng, min_size, max_size.min(target.node_count()))?;
    let query = pattern.into_graph();
    let truth = query
        .nodes()
        .iter()
        .map(|n| target.index_of(n.id).expect("subgraph keeps ids"))
        .collect();
    AlignmentSample::new(query, target.clone(), truth)
}

/// Fraction of query rows whose true target is among the `k` most probable.
pub fn top_k_accuracy(p: &ProbabilityMatrix, truth: &[usize], k: usize) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = truth
        .iter()
        .enumerate()
        .filter(|&(q, &t)| {
            let row = p.probs.row(q);
            // Rank with the same (probability desc, column asc) order as top_k.
            let better = row
                .iter()
                .enumerate()
                .filter(|&(c, &v)| v > row[t] || (v == row[t] && c < t))
                .count();
            better < k
        })
        .count();
    hits as f64 / truth.len() as f64
}

/// Mean alignment loss over `samples` and its parameter gradient.
pub fn alignment_loss_and_grad(
    model: &AlignModel,
    samples: &[AlignmentSample],
) -> Result<(f64, Vec<f64>)> {
    if samples.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    let scale = 1.0 / samples.len() as f64;
    let mut grad = vec![0.0; model.params().len()];
    let mut total = 0.0;
    for s in samples {
        let (scores, trace) = model.scores_traced(&s.query, &s.target)?;
        let probs = super::softmax_rows(&scores);
        let m = probs.cols();
        let mut d = probs.data().to_vec();
        for (q, &t) in s.truth.iter().enumerate() {
            let p = probs.get(q, t);
            total -= p.max(LOG_FLOOR).ln();
            if p < LOG_FLOOR {
                // Clamped: the loss is locally constant in this row.
                d[q * m..(q + 1) * m].fill(0.0);
            } else {
                d[q * m + t] -= 1.0;
            }
        }
        for v in &mut d {
            *v *= scale;
        }
        model.backward_scores(&s.query, &s.target, &trace, &d, &mut grad);
    }
    Ok((total * scale, grad))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignerTrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub query_min: usize,
    pub query_max: usize,
    pub log_every: usize,
}

impl Default for AlignerTrainConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            batch_size: 128,
            learning_rate: 1e-4,
            seed: 0,
            query_min: 3,
            query_max: 8,
            log_every: 100,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainedAligner {
    pub model: AlignModel,
    pub losses: Vec<f64>,
}

/// Trains on freshly sampled positive pairs; no exact matching is needed
/// because every sample carries its own ground truth.
pub fn train_aligner(
    db: &[Graph],
    mut model: AlignModel,
    cfg: &AlignerTrainConfig,
) -> Result<TrainedAligner> {
    let mut rng = seeded_rng(cfg.seed);
    let mut adam = AdamState::new(model.params().len(), cfg.learning_rate);
    let mut losses = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let batch = (0..cfg.batch_size)
            .map(|_| {
                sample_alignment_sample(
                    db,
                    &mut rng,
                    cfg.query_min,
                    cfg.query_max,
                    model.target_cap(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let (loss, grad) = alignment_loss_and_grad(&model, &batch)?;
        adam.step(model.params_mut(), &grad)?;
        losses.push(loss);
        if cfg.log_every > 0 && (step + 1) % cfg.log_every == 0 {
            let window = &losses[losses.len().saturating_sub(cfg.log_every)..];
            info!(
                "aligner step {} mean loss {:.5}",
                step + 1,
                window.iter().sum::<f64>() / window.len() as f64
            );
        }
    }
    Ok(TrainedAligner { model, losses })
}

/// Full-batch training on a fixed sample set.
pub fn train_aligner_on_samples(
    mut model: AlignModel,
    samples: &[AlignmentSample],
    steps: usize,
    learning_rate: f64,
) -> Result<TrainedAligner> {
    let mut adam = AdamState::new(model.params().len(), learning_rate);
    let mut losses = Vec::with_capacity(steps);
    for _ in 0..steps {
        let (loss, grad) = alignment_loss_and_grad(&model, samples)?;
        adam.step(model.params_mut(), &grad)?;
        losses.push(loss);
    }
    Ok(TrainedAligner { model, losses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aligner::alignment_loss;
    use crate::aligner::tests::tiny_config;
    use crate::data::{generate_synthetic, SynthConfig};
    use crate::graph::NodeId;
    use crate::nn::{grad_check, Tensor};

    fn corpus() -> Vec<Graph> {
        generate_synthetic(&SynthConfig {
            n_graphs: 6,
            min_nodes: 5,
            max_nodes: 8,
            n_labels: 3,
            ..SynthConfig::default()
        })
        .unwrap()
        .graphs
    }

    #[test]
    fn sampled_truth_is_valid() {
        let db = corpus();
        let mut rng = seeded_rng(1);
        for _ in 0..50 {
            let s = sample_alignment_sample(&db, &mut rng, 2, 5, 8).unwrap();
            assert!((2..=5).contains(&s.query.node_count()));
            for (q, &t) in s.truth.iter().enumerate() {
                assert_eq!(s.query.label(q), s.target.label(t));
            }
        }
        assert!(matches!(
            sample_alignment_sample(&db, &mut rng, 2, 5, 3),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn invalid_truth_rejected() {
        let q = Graph::from_labels(&[0, 0], &[(0, 1)]).unwrap();
        let t = Graph::from_labels(&[0, 0, 0], &[(0, 1)]).unwrap();
        assert!(AlignmentSample::new(q.clone(), t.clone(), vec![0, 1]).is_ok());
        assert!(AlignmentSample::new(q.clone(), t.clone(), vec![0, 2]).is_err());
        assert!(AlignmentSample::new(q.clone(), t.clone(), vec![1, 1]).is_err());
        assert!(AlignmentSample::new(q, t, vec![0, 3]).is_err());
    }

    #[test]
    fn loss_matches_probability_matrix() {
        let db = corpus();
        let model = AlignModel::new(tiny_config(3, 8)).unwrap();
        let s = sample_alignment_sample(&db, &mut seeded_rng(2), 3, 4, 8).unwrap();
        let (_, p) = model.attention_probabilities(&s.query, &s.target).unwrap();
        let (loss, _) = alignment_loss_and_grad(&model, std::slice::from_ref(&s)).unwrap();
        assert!((loss - alignment_loss(&p, &s.truth).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let db = corpus();
        let model = AlignModel::new(tiny_config(3, 8)).unwrap();
        let mut rng = seeded_rng(3);
        let batch: Vec<_> = (0..2)
            .map(|_| sample_alignment_sample(&db, &mut rng, 2, 4, 8).unwrap())
            .collect();
        let loss = |p: &[f64]| {
            let m = model.clone().with_params(p.to_vec()).unwrap();
            alignment_loss_and_grad(&m, &batch).unwrap()
        };
        let err = grad_check(loss, model.params(), 1e-5);
        assert!(err <= 1e-4, "max relative error {err}");
    }

    #[test]
    fn fixed_batch_loss_decreases() {
        let db = corpus();
        let model = AlignModel::new(tiny_config(3, 8)).unwrap();
        let mut rng = seeded_rng(4);
        let batch: Vec<_> = (0..4)
            .map(|_| sample_alignment_sample(&db, &mut rng, 3, 5, 8).unwrap())
            .collect();
        let trained = train_aligner_on_samples(model, &batch, 100, 1e-2).unwrap();
        assert!(trained.losses.last().unwrap() < &trained.losses[0]);
    }

    #[test]
    fn small_step_descent_is_monotone() {
        let db = corpus();
        let mut model = AlignModel::new(tiny_config(3, 8)).unwrap();
        let s = vec![sample_alignment_sample(&db, &mut seeded_rng(5), 3, 5, 8).unwrap()];
        let mut last = f64::INFINITY;
        for _ in 0..100 {
            let (loss, grad) = alignment_loss_and_grad(&model, &s).unwrap();
            assert!(loss <= last + 1e-12, "{loss} > {last}");
            last = loss;
            for (p, g) in model.params_mut().iter_mut().zip(&grad) {
                *p -= 1e-3 * g;
            }
        }
    }

    #[test]
    fn top_k_examples() {
        let p = ProbabilityMatrix::new(
            Tensor::from_rows(&[vec![0.5, 0.3, 0.2], vec![0.2, 0.2, 0.6]]).unwrap(),
            vec![NodeId(0), NodeId(1)],
            vec![NodeId(0), NodeId(1), NodeId(2)],
        )
        .unwrap();
        assert_eq!(top_k_accuracy(&p, &[0, 2], 1), 1.0);
        assert_eq!(top_k_accuracy(&p, &[1, 1], 1), 0.0);
        // Tied with column 0, which ranks first.
        assert_eq!(top_k_accuracy(&p, &[1, 1], 2), 0.5);
        assert_eq!(top_k_accuracy(&p, &[2, 1], 3), 1.0);
    }
}
