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

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeMapping};

pub const BRUTE_FORCE_LIMIT: usize = 8;

/// Exhaustive search over injective assignments of query nodes (in index
/// order) to target nodes. Serves as an independent check on [`super::vf2_match`].
pub fn brute_force_match(q: &Graph, t: &Graph, label_aware: bool) -> Result<Option<NodeMapping>> {
    if q.node_count() > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            nodes: q.node_count(),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut image = Vec::with_capacity(q.node_count());
    let mut used = vec![false; t.node_count()];
    if assign(q, t, label_aware, &mut image, &mut used) {
        Ok(Some(NodeMapping::from_indices(q, t, &image)))
    } else {
        Ok(None)
    }
}

fn assign(
    q: &Graph,
    t: &Graph,
    label_aware: bool,
    image: &mut Vec<usize>,
    used: &mut [bool],
) -> bool {
    let next = image.len();
    if next == q.node_count() {
        return true;
    }
    for cand in 0..t.node_count() {
        if used[cand] || (label_aware && q.label(next) != t.label(cand)) {
            continue;
        }
        let consistent =
            (0..next).all(|prev| !q.has_edge(prev, next) || t.has_edge(image[prev], cand));
        if !consistent {
            continue;
        }
        used[cand] = true;
        image.push(cand);
        if assign(q, t, label_aware, image, used) {
            return true;
        }
        image.pop();
        used[cand] = false;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures;

    #[test]
    fn basic_decisions() {
        assert!(
            brute_force_match(&fixtures::complete(3), &fixtures::complete(4), false)
                .unwrap()
                .is_some()
        );
        assert!(
            brute_force_match(&fixtures::complete(3), &fixtures::star(3), false)
                .unwrap()
                .is_none()
        );
    }

    #[test]
    fn rejects_large_queries() {
        assert!(matches!(
            brute_force_match(&fixtures::path(9), &fixtures::path(9), false),
            Err(Error::TooLarge { nodes: 9, limit: 8 })
        ));
    }
}
