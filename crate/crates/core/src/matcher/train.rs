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

//! Max-margin training of the order-embedding comparator.

use std::time::Duration;

use log::info;
use rand::Rng;

use super::decision::{decision_statistic, violation_matrix};
use super::sampling::{sample_batch, PairLabel, SamplerConfig, TrainingPair};
use super::{violation, MatchModel};
use crate::error::{Error, Result};
use crate::exact::{vf2_match_indices, MatchOptions};
use crate::graph::{sample_connected_subgraph, seeded_rng, Graph};
use crate::nn::AdamState;

#[derive(Clone, Debug, PartialEq)]
pub struct MatcherTrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Pairs sampled before training for threshold calibration.
    pub validation_pairs: usize,
    pub sampler: SamplerConfig,
    /// When set, the threshold is calibrated on whole-graph decisions
    /// instead of neighborhood pairs.
    pub decision_calibration: Option<DecisionCalibration>,
    pub log_every: usize,
}

/// Held-out (query pattern, database graph) pairs used to pick the
/// threshold for the aggregated decision.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionCalibration {
    pub queries: usize,
    pub query_min: usize,
    pub query_max: usize,
    /// Per-pair exact-matcher budget; timed-out pairs are skipped.
    pub oracle_budget: Duration,
}

impl Default for MatcherTrainConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            batch_size: 128,
            learning_rate: 1e-4,
            seed: 0,
            validation_pairs: 512,
            sampler: SamplerConfig::default(),
            decision_calibration: None,
            log_every: 100,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainedMatcher {
    pub model: MatchModel,
    /// Training loss per step.
    pub losses: Vec<f64>,
    /// Validation F1 at the calibrated threshold: graph-level when
    /// decision calibration is configured, pair-level otherwise.
    pub validation_f1: f64,
}

fn pair_violation(model: &MatchModel, pair: &TrainingPair) -> Result<f64> {
    let zq = model.embed_neighborhood_graph(&pair.query, pair.query_anchor)?;
    let zt = model.embed_neighborhood_graph(&pair.target, pair.target_anchor)?;
    Ok(violation(&zq, &zt))
}

pub fn pair_violations(model: &MatchModel, pairs: &[TrainingPair]) -> Result<Vec<f64>> {
    pairs.iter().map(|p| pair_violation(model, p)).collect()
}

/// Loss contribution of one pair and its derivative with respect to `E`.
fn pair_term(label: PairLabel, e: f64, margin: f64) -> (f64, f64) {
    match label {
        PairLabel::Positive => (e, 1.0),
        PairLabel::Negative if e < margin => (margin - e, -1.0),
        PairLabel::Negative => (0.0, 0.0),
    }
}

/// Mean over pairs of `E` for positives and `max(0, margin - E)` for negatives.
pub fn comparator_loss(batch: &[TrainingPair], model: &MatchModel) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    let margin = model.comparator().margin;
    let mut total = 0.0;
    for pair in batch {
        total += pair_term(pair.label, pair_violation(model, pair)?, margin).0;
    }
    Ok(total / batch.len() as f64)
}

/// [`comparator_loss`] and its gradient with respect to the encoder
/// parameters.
pub fn comparator_loss_and_grad(
    batch: &[TrainingPair],
    model: &MatchModel,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    let encoder = model.encoder();
    let params = model.params();
    let margin = model.comparator().margin;
    let d = encoder.output_dim();
    let scale = 1.0 / batch.len() as f64;
    let mut grad = vec![0.0; params.len()];
    let mut total = 0.0;
    for pair in batch {
        let (out_q, trace_q) =
            encoder.forward_traced(params, &pair.query, Some(pair.query_anchor))?;
        let (out_t, trace_t) =
            encoder.forward_traced(params, &pair.target, Some(pair.target_anchor))?;
        let zq = out_q.row(pair.query_anchor);
        let zt = out_t.row(pair.target_anchor);
        let e = violation(zq, zt);
        let (value, slope) = pair_term(pair.label, e, margin);
        total += value;
        if slope == 0.0 || e == 0.0 {
            continue;
        }
        let mut dq = vec![0.0; pair.query.node_count() * d];
        let mut dt = vec![0.0; pair.target.node_count() * d];
        for i in 0..d {
            let diff = zq[i] - zt[i];
            if diff > 0.0 {
                let g = slope * scale * 2.0 * diff;
                dq[pair.query_anchor * d + i] = g;
                dt[pair.target_anchor * d + i] = -g;
            }
        }
        encoder.backward(params, &pair.query, &trace_q, &dq, &mut grad);
        encoder.backward(params, &pair.target, &trace_t, &dt, &mut grad);
    }
    Ok((total * scale, grad))
}

/// Threshold maximising pair-level F1 when predicting "contained" for
/// violations strictly below it. Candidates are midpoints between
/// consecutive distinct violations plus one value above the maximum; the
/// smallest threshold wins ties. Returns `(threshold, f1)`.
pub fn calibrate_threshold(violations: &[f64], labels: &[PairLabel]) -> (f64, f64) {
    let mut items: Vec<(f64, bool)> = violations
        .iter()
        .zip(labels)
        .map(|(&e, &l)| (e, l == PairLabel::Positive))
        .collect();
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let positives = items.iter().filter(|x| x.1).count();
    if items.is_empty() || positives == 0 {
        return (0.0, 0.0);
    }
    let mut best = (0.0, 0.0);
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < items.len() {
        let value = items[i].0;
        while i < items.len() && items[i].0 == value {
            if items[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let threshold = if i < items.len() {
            0.5 * (value + items[i].0)
        } else {
            value + 1.0
        };
        let f1 = 2.0 * tp as f64 / (2 * tp + fp + (positives - tp)) as f64;
        if f1 > best.1 {
            best = (threshold, f1);
        }
    }
    best
}

/// Fraction of pairs classified correctly at the model's threshold.
pub fn pair_accuracy(model: &MatchModel, pairs: &[TrainingPair]) -> Result<f64> {
    let t = model.comparator().threshold;
    let violations = pair_violations(model, pairs)?;
    let correct = violations
        .iter()
        .zip(pairs)
        .filter(|(&e, p)| (e < t) == (p.label == PairLabel::Positive))
        .count();
    Ok(correct as f64 / pairs.len().max(1) as f64)
}

fn calibrate(model: &mut MatchModel, validation: &[TrainingPair]) -> Result<f64> {
    let violations = pair_violations(model, validation)?;
    let labels: Vec<PairLabel> = validation.iter().map(|p| p.label).collect();
    let (threshold, f1) = calibrate_threshold(&violations, &labels);
    model.set_threshold(threshold);
    Ok(f1)
}

/// Sets the threshold maximising F1 of the aggregated decision over
/// held-out whole-graph pairs. Queries are connected subgraphs cut from
/// uniformly chosen database graphs and labelled against every database
/// graph by the exact matcher. Returns the F1 reached.
pub fn calibrate_decision_threshold(
    model: &mut MatchModel,
    db: &[Graph],
    cal: &DecisionCalibration,
    seed: u64,
) -> Result<f64> {
    let sources: Vec<&Graph> = db
        .iter()
        .filter(|g| g.node_count() >= cal.query_min)
        .collect();
    if sources.is_empty() || cal.queries == 0 {
        return Err(Error::EmptyDataset);
    }
    let targets = db
        .iter()
        .map(|g| model.embed_all(g))
        .collect::<Result<Vec<_>>>()?;
    let opts = MatchOptions::default().with_budget(cal.oracle_budget);
    let mut rng = seeded_rng(seed);
    let (mut stats, mut labels) = (Vec::new(), Vec::new());
    for _ in 0..cal.queries {
        let g = sources[rng.random_range(0..sources.len())];
        let max = cal.query_max.min(g.node_count());
        let (query, _) = sample_connected_subgraph(g, &mut rng, cal.query_min.min(max), max)?;
        let zq = model.embed_all(query.graph())?;
        for (t, zt) in db.iter().zip(&targets) {
            let truth = match vf2_match_indices(query.graph(), t, &opts) {
                Ok(found) => found.is_some(),
                Err(Error::Timeout) => continue,
                Err(e) => return Err(e),
            };
            stats.push(decision_statistic(&violation_matrix(&zq, zt)));
            labels.push(if truth {
                PairLabel::Positive
            } else {
                PairLabel::Negative
            });
        }
    }
    let (threshold, f1) = calibrate_threshold(&stats, &labels);
    model.set_threshold(threshold);
    Ok(f1)
}

/// Trains on freshly sampled batches, then calibrates the decision threshold
/// on validation data drawn independently of the training stream.
pub fn train_matcher(
    db: &[Graph],
    mut model: MatchModel,
    cfg: &MatcherTrainConfig,
) -> Result<TrainedMatcher> {
    let mut val_rng = seeded_rng(cfg.seed ^ 0x5eed_0f_0a1d);
    let validation = sample_batch(db, &mut val_rng, &cfg.sampler, cfg.validation_pairs)?;
    let mut rng = seeded_rng(cfg.seed);
    let mut adam = AdamState::new(model.params().len(), cfg.learning_rate);
    let mut losses = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let batch = sample_batch(db, &mut rng, &cfg.sampler, cfg.batch_size)?;
        let (loss, grad) = comparator_loss_and_grad(&batch, &model)?;
        adam.step(model.params_mut(), &grad)?;
        losses.push(loss);
        if cfg.log_every > 0 && (step + 1) % cfg.log_every == 0 {
            let window = &losses[losses.len().saturating_sub(cfg.log_every)..];
            info!(
                "matcher step {} mean loss {:.5}",
                step + 1,
                window.iter().sum::<f64>() / window.len() as f64
            );
        }
    }
    let mut validation_f1 = calibrate(&mut model, &validation)?;
    if let Some(cal) = &cfg.decision_calibration {
        info!(
            "pair-level threshold {:.5}, F1 {:.3}",
            model.comparator().threshold,
            validation_f1
        );
        validation_f1 = calibrate_decision_threshold(&mut model, db, cal, cfg.seed ^ 0xca1_1b7a7e)?;
    }
    info!(
        "matcher threshold {:.5}, validation F1 {:.3}",
        model.comparator().threshold,
        validation_f1
    );
    Ok(TrainedMatcher {
        model,
        losses,
        validation_f1,
    })
}

/// Full-batch training on a fixed pair set; the threshold is calibrated on
/// the same pairs.
pub fn train_matcher_on_pairs(
    mut model: MatchModel,
    pairs: &[TrainingPair],
    steps: usize,
    learning_rate: f64,
) -> Result<TrainedMatcher> {
    let mut adam = AdamState::new(model.params().len(), learning_rate);
    let mut losses = Vec::with_capacity(steps);
    for _ in 0..steps {
        let (loss, grad) = comparator_loss_and_grad(pairs, &model)?;
        adam.step(model.params_mut(), &grad)?;
        losses.push(loss);
    }
    let validation_f1 = calibrate(&mut model, pairs)?;
    Ok(TrainedMatcher {
        model,
        losses,
        validation_f1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::tests::tiny_encoder;
    use crate::matcher::ComparatorConfig;
    use crate::nn::grad_check;

    fn pair(q: Graph, t: Graph, label: PairLabel) -> TrainingPair {
        TrainingPair {
            query: q,
            query_anchor: 0,
            target: t,
            target_anchor: 0,
            label,
            hard: false,
        }
    }

    #[test]
    fn loss_examples() {
        let model = MatchModel::new(tiny_encoder(2), ComparatorConfig::default()).unwrap();
        let g = Graph::from_labels(&[0, 1, 1], &[(0, 1), (1, 2)]).unwrap();
        // Identical neighborhoods embed identically, so E = 0.
        let pos = vec![pair(g.clone(), g.clone(), PairLabel::Positive); 3];
        assert_eq!(comparator_loss(&pos, &model).unwrap(), 0.0);
        let neg = vec![pair(g.clone(), g, PairLabel::Negative)];
        assert_eq!(comparator_loss(&neg, &model).unwrap(), 1.0);
        assert_eq!(pair_term(PairLabel::Negative, 1.0, 1.0), (0.0, 0.0));
        assert_eq!(pair_term(PairLabel::Negative, 3.5, 1.0), (0.0, 0.0));
        assert_eq!(pair_term(PairLabel::Negative, 0.25, 1.0), (0.75, -1.0));
        assert_eq!(pair_term(PairLabel::Positive, 0.25, 1.0), (0.25, 1.0));
        assert!(comparator_loss(&[], &model).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let model = MatchModel::new(
            tiny_encoder(2),
            ComparatorConfig {
                margin: 50.0,
                ..ComparatorConfig::default()
            },
        )
        .unwrap();
        let a = Graph::from_labels(&[0, 1, 1, 0], &[(0, 1), (1, 2), (2, 3), (0, 2)]).unwrap();
        let b = Graph::from_labels(&[1, 0, 1], &[(0, 1), (1, 2)]).unwrap();
        let batch = vec![
            pair(a.clone(), b.clone(), PairLabel::Positive),
            pair(b.clone(), a.clone(), PairLabel::Negative),
            TrainingPair {
                query_anchor: 2,
                target_anchor: 1,
                ..pair(a.clone(), a.clone(), PairLabel::Positive)
            },
        ];
        let loss = |p: &[f64]| {
            let m = model.clone().with_params(p.to_vec()).unwrap();
            comparator_loss_and_grad(&batch, &m).unwrap()
        };
        let err = grad_check(loss, model.params(), 1e-6);
        assert!(err <= 1e-4, "max relative error {err}");
    }

    #[test]
    fn decision_calibration_with_constant_embeddings() {
        let db = crate::data::generate_synthetic(&crate::data::SynthConfig {
            n_graphs: 6,
            min_nodes: 4,
            max_nodes: 7,
            n_labels: 2,
            edge_density: 0.4,
            seed: 3,
        })
        .unwrap();
        let model = MatchModel::new(tiny_encoder(2), ComparatorConfig::default()).unwrap();
        let mut zero = model
            .clone()
            .with_params(vec![0.0; model.params().len()])
            .unwrap();
        let cal = DecisionCalibration {
            queries: 4,
            query_min: 2,
            query_max: 3,
            oracle_budget: Duration::from_secs(1),
        };
        // Every statistic is 0, so the only useful cut accepts everything.
        let f1 = calibrate_decision_threshold(&mut zero, &db.graphs, &cal, 1).unwrap();
        assert_eq!(zero.comparator().threshold, 1.0);
        assert!(f1 > 0.0 && f1 <= 1.0);
        let mut a = model.clone();
        let mut b = model;
        let fa = calibrate_decision_threshold(&mut a, &db.graphs, &cal, 9).unwrap();
        let fb = calibrate_decision_threshold(&mut b, &db.graphs, &cal, 9).unwrap();
        assert_eq!(fa, fb);
        assert_eq!(a.comparator().threshold, b.comparator().threshold);
    }

    #[test]
    fn threshold_calibration() {
        use PairLabel::*;
        let (t, f1) = calibrate_threshold(
            &[0.0, 0.1, 0.5, 0.9],
            &[Positive, Positive, Negative, Negative],
        );
        assert!((t - 0.3).abs() < 1e-12);
        assert_eq!(f1, 1.0);
        let (t, f1) = calibrate_threshold(&[0.2, 0.2, 0.4], &[Positive, Negative, Positive]);
        assert!(t > 0.4);
        assert!((f1 - 0.8).abs() < 1e-12);
    }
}
