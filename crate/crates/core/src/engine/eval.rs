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

//! Retrieval and alignment quality against exact ground truth, and query
//! runtime against an exact scan.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::query::{query, MatchBackend, NeuralEngine, QueryFilters};
use crate::aligner::{greedy_assign_scores, hungarian_assign_scores, ProbabilityMatrix};
use crate::error::{Error, Result};
use crate::exact::{enumerate_match_indices, vf2_match_indices, MatchOptions};
use crate::graph::{sample_connected_subgraph, seeded_rng, Graph, QueryPattern};
use crate::nn::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub queries_per_graph: usize,
    pub query_min: usize,
    pub query_max: usize,
    pub seed: u64,
    /// Per-pair budget for the exact oracle.
    pub oracle_budget_ms: u64,
    /// Ground-truth mappings enumerated per pair when scoring alignments.
    pub enumeration_cap: usize,
    /// Upper bound on scored alignment pairs (first ones in scan order).
    pub max_alignment_pairs: Option<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            queries_per_graph: 5,
            query_min: 3,
            query_max: 8,
            seed: 0,
            oracle_budget_ms: 2000,
            enumeration_cap: 1000,
            max_alignment_pairs: None,
        }
    }
}

impl EvalConfig {
    fn budget(&self) -> Duration {
        Duration::from_millis(self.oracle_budget_ms)
    }
}

/// `queries_per_graph` random connected patterns from every graph, in
/// database order.
pub fn sample_eval_queries(db: &[Graph], cfg: &EvalConfig) -> Result<Vec<QueryPattern>> {
    let mut rng = seeded_rng(cfg.seed);
    let mut out = Vec::with_capacity(db.len() * cfg.queries_per_graph);
    for g in db {
        let max = cfg.query_max.min(g.node_count());
        let min = cfg.query_min.min(max);
        for _ in 0..cfg.queries_per_graph {
            out.push(sample_connected_subgraph(g, &mut rng, min, max)?.0);
        }
    }
    Ok(out)
}

/// Exact containment per (query, target); `None` where the oracle timed out.
pub fn ground_truth(
    db: &[Graph],
    queries: &[QueryPattern],
    budget: Duration,
) -> Result<Vec<Vec<Option<bool>>>> {
    let opts = MatchOptions::default().with_budget(budget);
    queries
        .iter()
        .map(|q| {
            db.iter()
                .map(|t| match vf2_match_indices(q.graph(), t, &opts) {
                    Ok(found) => Ok(Some(found.is_some())),
                    Err(Error::Timeout) => Ok(None),
                    Err(e) => Err(e),
                })
                .collect()
        })
        .collect()
}

/// Rates are percentages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionReport {
    pub queries: usize,
    pub pairs: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// Pairs dropped because the oracle timed out.
    pub excluded: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

/// Scores the backend's decisions on every (query, target) pair.
pub fn decision_report<B: MatchBackend>(
    backend: &B,
    queries: &[QueryPattern],
    truth: &[Vec<Option<bool>>],
) -> Result<DecisionReport> {
    let (mut tp, mut fp, mut fneg, mut excluded, mut pairs) = (0, 0, 0, 0, 0);
    for (q, row) in queries.iter().zip(truth) {
        let prepared = backend.prepare(q.graph())?;
        for (t, &label) in row.iter().enumerate() {
            let Some(label) = label else {
                excluded += 1;
                continue;
            };
            pairs += 1;
            match (backend.decide(&prepared, q.graph(), t)?, label) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                (false, false) => {}
            }
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fneg);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(DecisionReport {
        queries: queries.len(),
        pairs,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fneg,
        excluded,
        precision,
        recall,
        f1,
    })
}

pub fn evaluate_decision<B: MatchBackend>(backend: &B, cfg: &EvalConfig) -> Result<DecisionReport> {
    let queries = sample_eval_queries(backend.graphs(), cfg)?;
    let truth = ground_truth(backend.graphs(), &queries, cfg.budget())?;
    decision_report(backend, &queries, &truth)
}

/// Per-pair alignment accuracies in `[0, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AlignmentScores {
    pub top: [f64; 3],
    pub greedy: f64,
    pub hungarian: f64,
}

/// Columns ranked by descending score, ties by column.
fn rank_of(row: &[f64], col: usize) -> usize {
    row.iter()
        .enumerate()
        .filter(|&(c, &v)| v > row[col] || (v == row[col] && c < col))
        .count()
}

fn best_agreement(truths: &[Vec<usize>], hit: impl Fn(usize, usize) -> bool) -> f64 {
    truths
        .iter()
        .map(|truth| {
            truth
                .iter()
                .enumerate()
                .filter(|&(q, &t)| hit(q, t))
                .count()
        })
        .max()
        .unwrap_or(0) as f64
}

/// Scores a row-score matrix against a set of valid ground-truth mappings,
/// each metric against the mapping it agrees with most.
pub fn score_alignment(scores: &Tensor, truths: &[Vec<usize>]) -> Result<AlignmentScores> {
    let n = scores.rows();
    if n == 0 || truths.is_empty() {
        return Err(Error::Shape(
            "alignment scoring needs rows and a ground truth".into(),
        ));
    }
    let greedy = greedy_assign_scores(scores)?;
    let hungarian = hungarian_assign_scores(scores)?;
    let mut top = [0.0; 3];
    for (k, slot) in top.iter_mut().enumerate() {
        *slot = best_agreement(truths, |q, t| rank_of(scores.row(q), t) <= k) / n as f64;
    }
    Ok(AlignmentScores {
        top,
        greedy: best_agreement(truths, |q, t| greedy[q] == t) / n as f64,
        hungarian: best_agreement(truths, |q, t| hungarian[q] == t) / n as f64,
    })
}

/// Mean accuracies in percent over the scored pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodScores {
    pub top1: f64,
    pub top2: f64,
    pub top3: f64,
    pub with_assignment: f64,
    pub with_optimal_assignment: f64,
}

impl MethodScores {
    fn mean(all: &[AlignmentScores]) -> Self {
        let n = all.len().max(1) as f64;
        let avg = |f: &dyn Fn(&AlignmentScores) -> f64| 100.0 * all.iter().map(f).sum::<f64>() / n;
        Self {
            top1: avg(&|s| s.top[0]),
            top2: avg(&|s| s.top[1]),
            top3: avg(&|s| s.top[2]),
            with_assignment: avg(&|s| s.greedy),
            with_optimal_assignment: avg(&|s| s.hungarian),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub pairs: usize,
    /// Pairs where ground-truth enumeration timed out and only the first
    /// mapping was used.
    pub truncated: usize,
    pub aligner: MethodScores,
    pub matcher_baseline: MethodScores,
}

/// Alignment accuracy on pairs that are truly contained and were also
/// retrieved by the engine.
pub fn alignment_report(
    engine: &NeuralEngine,
    queries: &[QueryPattern],
    truth: &[Vec<Option<bool>>],
    cfg: &EvalConfig,
) -> Result<AlignmentReport> {
    let db = engine.graphs();
    let enum_opts = MatchOptions::default()
        .with_max_matches(cfg.enumeration_cap)
        .with_budget(cfg.budget());
    let first_opts = MatchOptions::default();
    let limit = cfg.max_alignment_pairs.unwrap_or(usize::MAX);
    let mut aligner = Vec::new();
    let mut baseline = Vec::new();
    let mut truncated = 0;
    'outer: for (q, row) in queries.iter().zip(truth) {
        let graph = q.graph();
        let prepared = engine.prepare(graph)?;
        for (t, &label) in row.iter().enumerate() {
            if aligner.len() >= limit {
                break 'outer;
            }
            if label != Some(true) || !engine.decide(&prepared, graph, t)? {
                continue;
            }
            let target = &db[t];
            let truths = match enumerate_match_indices(graph, target, &enum_opts) {
                Ok(all) => all,
                Err(Error::Timeout) => {
                    truncated += 1;
                    vf2_match_indices(graph, target, &first_opts)?
                        .into_iter()
                        .collect()
                }
                Err(e) => return Err(e),
            };
            let attention = match engine.aligner().attention_from_embeddings(
                graph,
                &prepared.align,
                target,
                &engine.store().graphs[t].align,
            ) {
                Ok(a) => a,
                Err(Error::TargetTooLarge { .. }) => continue,
                Err(e) => return Err(e),
            };
            let probs = ProbabilityMatrix::from_scores(&attention);
            aligner.push(score_alignment(&probs.probs, &truths)?);
            let mut negated = engine.violations(&prepared, t);
            for v in negated.data_mut() {
                *v = -*v;
            }
            baseline.push(score_alignment(&negated, &truths)?);
        }
    }
    Ok(AlignmentReport {
        pairs: aligner.len(),
        truncated,
        aligner: MethodScores::mean(&aligner),
        matcher_baseline: MethodScores::mean(&baseline),
    })
}

pub fn evaluate_alignment(engine: &NeuralEngine, cfg: &EvalConfig) -> Result<AlignmentReport> {
    let queries = sample_eval_queries(engine.graphs(), cfg)?;
    let truth = ground_truth(engine.graphs(), &queries, cfg.budget())?;
    alignment_report(engine, &queries, &truth, cfg)
}

/// Decision and alignment results on one shared query sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub decision: DecisionReport,
    pub alignment: AlignmentReport,
}

impl EvalReport {
    /// Plain-text tables: retrieval quality, then alignment accuracy.
    pub fn to_table(&self) -> String {
        let d = &self.decision;
        let mut s = String::new();
        s.push_str("subgraph decision\n");
        s.push_str(&format!(
            "{:<12}{:>10}{:>10}{:>10}\n",
            "", "precision", "recall", "f1"
        ));
        s.push_str(&format!(
            "{:<12}{:>10.1}{:>10.1}{:>10.1}\n",
            "matcher", d.precision, d.recall, d.f1
        ));
        s.push_str(&format!(
            "pairs {} (tp {}, fp {}, fn {}, excluded {})\n\n",
            d.pairs, d.true_positives, d.false_positives, d.false_negatives, d.excluded
        ));
        s.push_str("node alignment\n");
        s.push_str(&format!(
            "{:<12}{:>8}{:>8}{:>8}{:>12}{:>12}\n",
            "", "top1", "top2", "top3", "greedy", "hungarian"
        ));
        for (name, m) in [
            ("aligner", &self.alignment.aligner),
            ("baseline", &self.alignment.matcher_baseline),
        ] {
            s.push_str(&format!(
                "{:<12}{:>8.1}{:>8.1}{:>8.1}{:>12.1}{:>12.1}\n",
                name, m.top1, m.top2, m.top3, m.with_assignment, m.with_optimal_assignment
            ));
        }
        s.push_str(&format!(
            "pairs {} (truncated {})\n",
            self.alignment.pairs, self.alignment.truncated
        ));
        s
    }
}

pub fn evaluate(engine: &NeuralEngine, cfg: &EvalConfig) -> Result<EvalReport> {
    let queries = sample_eval_queries(engine.graphs(), cfg)?;
    let truth = ground_truth(engine.graphs(), &queries, cfg.budget())?;
    Ok(EvalReport {
        config: cfg.clone(),
        decision: decision_report(engine, &queries, &truth)?,
        alignment: alignment_report(engine, &queries, &truth, cfg)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuntimeRow {
    pub query_size: usize,
    pub trials: usize,
    /// Mean seconds per database scan.
    pub exact_seconds: f64,
    pub neural_seconds: f64,
    /// Exact-matcher calls that hit the budget and were counted at it.
    pub exact_censored: usize,
    pub speedup: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r_squared = if sxx > 0.0 && syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuntimeReport {
    pub rows: Vec<RuntimeRow>,
    pub neural_fit: LinearFit,
}

impl RuntimeReport {
    pub fn to_csv(&self) -> String {
        let mut s =
            String::from("query_size,trials,exact_seconds,neural_seconds,exact_censored,speedup\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{:.6},{:.6},{},{:.2}\n",
                r.query_size,
                r.trials,
                r.exact_seconds,
                r.neural_seconds,
                r.exact_censored,
                r.speedup
            ));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub query_sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub exact_budget_ms: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            query_sizes: vec![5, 10, 15, 20, 25, 30],
            trials: 5,
            seed: 0,
            exact_budget_ms: 10_000,
        }
    }
}

/// Times a full exact scan and a full neural query (decision plus
/// alignment, store already built) on the same sampled queries.
pub fn benchmark_runtime(engine: &NeuralEngine, cfg: &BenchConfig) -> Result<RuntimeReport> {
    let db = engine.graphs();
    let mut rng = seeded_rng(cfg.seed);
    let budget = Duration::from_millis(cfg.exact_budget_ms);
    let opts = MatchOptions::default().with_budget(budget);
    let mut rows = Vec::new();
    for &size in &cfg.query_sizes {
        let sources: Vec<&Graph> = db.iter().filter(|g| g.node_count() >= size).collect();
        if sources.is_empty() {
            continue;
        }
        let (mut exact, mut neural, mut censored) = (0.0, 0.0, 0);
        for trial in 0..cfg.trials {
            let source = sources[(trial * 7919 + size) % sources.len()];
            let (pattern, _) = sample_connected_subgraph(source, &mut rng, size, size)?;
            let start = Instant::now();
            let mut over_budget = Duration::ZERO;
            for t in db {
                let call = Instant::now();
                match crate::exact::vf2_match(pattern.graph(), t, &opts) {
                    Ok(_) => {}
                    Err(Error::Timeout) => {
                        censored += 1;
                        over_budget += call.elapsed().saturating_sub(budget);
                    }
                    Err(e) => return Err(e),
                }
            }
            exact += (start.elapsed() - over_budget).as_secs_f64();
            let start = Instant::now();
            std::hint::black_box(query(engine, &pattern, &QueryFilters::default())?);
            neural += start.elapsed().as_secs_f64();
        }
        let trials = cfg.trials.max(1) as f64;
        let (exact_seconds, neural_seconds) = (exact / trials, neural / trials);
        rows.push(RuntimeRow {
            query_size: size,
            trials: cfg.trials,
            exact_seconds,
            neural_seconds,
            exact_censored: censored,
            speedup: exact_seconds / neural_seconds.max(1e-12),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.query_size as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.neural_seconds).collect();
    Ok(RuntimeReport {
        neural_fit: linear_fit(&xs, &ys),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SynthConfig};
    use crate::engine::query::{Alignment, ExactBackend};
    use rand::Rng;

    fn small_db() -> Vec<Graph> {
        generate_synthetic(&SynthConfig {
            n_graphs: 12,
            min_nodes: 5,
            max_nodes: 10,
            n_labels: 3,
            ..SynthConfig::default()
        })
        .unwrap()
        .graphs
    }

    struct Constant(Vec<Graph>, bool);

    impl MatchBackend for Constant {
        type Prepared = ();
        fn graphs(&self) -> &[Graph] {
            &self.0
        }
        fn prepare(&self, _: &Graph) -> Result<()> {
            Ok(())
        }
        fn decide(&self, _: &(), _: &Graph, _: usize) -> Result<bool> {
            Ok(self.1)
        }
        fn align(&self, _: &(), _: &Graph, _: usize) -> Result<Alignment> {
            Err(Error::Infeasible { rows: 0, cols: 0 })
        }
    }

    #[test]
    fn exact_backend_is_perfect() {
        let db = small_db();
        let cfg = EvalConfig {
            queries_per_graph: 2,
            ..EvalConfig::default()
        };
        let report =
            evaluate_decision(&ExactBackend::new(db, MatchOptions::default()), &cfg).unwrap();
        assert_eq!(
            (report.precision, report.recall, report.f1),
            (100.0, 100.0, 100.0)
        );
        assert_eq!(report.pairs, 24 * 12);
    }

    #[test]
    fn always_false_has_zero_recall() {
        let report =
            evaluate_decision(&Constant(small_db(), false), &EvalConfig::default()).unwrap();
        assert_eq!(report.recall, 0.0);
        assert_eq!(report.true_positives + report.false_positives, 0);
        let report =
            evaluate_decision(&Constant(small_db(), true), &EvalConfig::default()).unwrap();
        assert_eq!(report.recall, 100.0);
    }

    #[test]
    fn perfect_prediction_scores_full_marks() {
        let scores = Tensor::from_rows(&[vec![0.8, 0.1, 0.1], vec![0.2, 0.1, 0.7]]).unwrap();
        let s = score_alignment(&scores, &[vec![0, 2]]).unwrap();
        assert_eq!(
            s,
            AlignmentScores {
                top: [1.0; 3],
                greedy: 1.0,
                hungarian: 1.0
            }
        );
        // Scored against the closer of two valid mappings.
        let s = score_alignment(&scores, &[vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(s.top[0], 0.5);
        assert_eq!(s.top[1], 1.0);
    }

    #[test]
    fn uniform_rows_hit_one_in_m() {
        let m = 5;
        let mut rng = seeded_rng(11);
        let uniform = Tensor::from_rows(&[vec![1.0 / m as f64; m]]).unwrap();
        let trials = 1000;
        let hits: f64 = (0..trials)
            .map(|_| {
                score_alignment(&uniform, &[vec![rng.random_range(0..m)]])
                    .unwrap()
                    .top[0]
            })
            .sum();
        assert!((hits / trials as f64 - 1.0 / m as f64).abs() <= 0.05);
    }

    #[test]
    fn linear_fit_examples() {
        let fit = linear_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[1.0, 2.0, 3.0, 4.0], &[1.0, 4.0, 1.0, 4.0]).r_squared < 0.5);
    }
}
