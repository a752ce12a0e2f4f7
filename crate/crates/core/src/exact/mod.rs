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

//! Exact subgraph matching and approximate graph edit distance.
//!
//! Matching is edge-induced: an injective node map under which every query
//! edge lands on a target edge. Extra target edges among mapped nodes are
//! allowed.

mod brute;
mod ged;
mod vf2;

use std::time::Duration;

pub use brute::{brute_force_match, BRUTE_FORCE_LIMIT};
pub use ged::approx_graph_edit_distance;
pub use vf2::{enumerate_match_indices, enumerate_matches, vf2_match, vf2_match_indices};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchOptions {
    pub label_aware: bool,
    /// Upper bound on the number of mappings [`enumerate_matches`] returns.
    pub max_matches: usize,
    pub time_budget: Option<Duration>,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            label_aware: true,
            max_matches: 1000,
            time_budget: None,
        }
    }
}

impl MatchOptions {
    pub fn label_blind() -> Self {
        Self {
            label_aware: false,
            ..Self::default()
        }
    }

    pub fn with_budget(mut self, budget: Duration) -> Self {
        self.time_budget = Some(budget);
        self
    }

    pub fn with_max_matches(mut self, max: usize) -> Self {
        self.max_matches = max.max(1);
        self
    }
}
