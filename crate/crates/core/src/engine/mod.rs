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

//! Database-level retrieval on top of the matcher and aligner.

mod eval;
mod projection;
mod query;
mod store;

pub use eval::{
    alignment_report, benchmark_runtime, decision_report, evaluate, evaluate_alignment,
    evaluate_decision, ground_truth, linear_fit, sample_eval_queries, score_alignment,
    AlignmentReport, AlignmentScores, BenchConfig, DecisionReport, EvalConfig, EvalReport,
    LinearFit, MethodScores, RuntimeReport, RuntimeRow,
};
pub use projection::{classical_mds, distance_matrix, overview_projection};
pub use query::{
    approximate_query, query, Alignment, Candidate, ExactBackend, MatchBackend, NeuralEngine,
    NeuralQuery, NodeAlternatives, QueryFilters, QueryResult, ALTERNATIVES,
};
pub use store::{precompute_store, EmbeddingStore, StoredGraph};
