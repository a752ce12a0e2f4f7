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

use super::{Graph, NodeId};
use crate::error::Result;

/// Induced subgraph around an anchor, limited to `hops` and a node cap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Neighborhood {
    pub anchor: NodeId,
    pub hops: usize,
    pub subgraph: Graph,
}

impl Neighborhood {
    /// Index of the anchor inside `subgraph`.
    pub fn anchor_index(&self) -> usize {
        self.subgraph
            .index_of(self.anchor)
            .expect("anchor is always part of its neighborhood")
    }
}

/// Indices of the nodes within `hops` of `anchor`, nearest first with ties
/// broken by ascending index, truncated to `cap` entries.
pub fn khop_indices(g: &Graph, anchor: usize, hops: usize, cap: usize) -> Vec<usize> {
    let dist = g.bfs_distances(anchor);
    let mut within: Vec<(usize, usize)> = dist
        .iter()
        .enumerate()
        .filter(|&(_, &d)| d <= hops)
        .map(|(i, &d)| (d, i))
        .collect();
    within.sort_unstable();
    within.truncate(cap.max(1));
    within.into_iter().map(|(_, i)| i).collect()
}

pub fn khop_neighborhood(
    g: &Graph,
    anchor: NodeId,
    hops: usize,
    cap: usize,
) -> Result<Neighborhood> {
    let idx = g.require_index(anchor)?;
    let keep = khop_indices(g, idx, hops, cap);
    Ok(Neighborhood {
        anchor,
        hops,
        subgraph: g.induced_subgraph(&keep),
    })
}
