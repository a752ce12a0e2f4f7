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

//! Conflict-free assignment of query rows to target columns.

use super::ProbabilityMatrix;
use crate::error::{Error, Result};
use crate::graph::NodeMapping;
use crate::nn::Tensor;

fn check_feasible(scores: &Tensor) -> Result<()> {
    if scores.rows() > scores.cols() {
        return Err(Error::Infeasible {
            rows: scores.rows(),
            cols: scores.cols(),
        });
    }
    Ok(())
}

fn to_mapping(p: &ProbabilityMatrix, cols: &[usize]) -> NodeMapping {
    cols.iter()
        .enumerate()
        .map(|(q, &t)| (p.query_ids[q], p.target_ids[t]))
        .collect::<NodeMapping>()
}

/// Scans cells by descending score, ties by `(row, col)`, and accepts a cell
/// when both its row and column are still free. Returns the column of every
/// row.
pub fn greedy_assign_scores(scores: &Tensor) -> Result<Vec<usize>> {
    check_feasible(scores)?;
    let (n, m) = (scores.rows(), scores.cols());
    let data = scores.data();
    let mut cells: Vec<usize> = (0..n * m).collect();
    // Row-major cell index order is exactly (row, col) order.
    cells.sort_by(|&a, &b| data[b].total_cmp(&data[a]).then(a.cmp(&b)));
    let mut row_of_col = vec![false; m];
    let mut assigned = vec![usize::MAX; n];
    let mut remaining = n;
    for cell in cells {
        if remaining == 0 {
            break;
        }
        let (q, t) = (cell / m, cell % m);
        if assigned[q] == usize::MAX && !row_of_col[t] {
            assigned[q] = t;
            row_of_col[t] = true;
            remaining -= 1;
        }
    }
    Ok(assigned)
}

pub fn greedy_assign(p: &ProbabilityMatrix) -> Result<NodeMapping> {
    Ok(to_mapping(p, &greedy_assign_scores(&p.probs)?))
}

/// Maximum-total-score injective assignment (shortest augmenting paths with
/// potentials, `O(n^2 m)`). Columns without a row behave like zero-score
/// dummies.
pub fn hungarian_assign_scores(scores: &Tensor) -> Result<Vec<usize>> {
    check_feasible(scores)?;
    let (n, m) = (scores.rows(), scores.cols());
    if n == 0 {
        return Ok(Vec::new());
    }
    let cost = |i: usize, j: usize| -scores.get(i - 1, j - 1);
    // 1-based; column 0 is the virtual root of each augmenting search.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut row_at = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        row_at[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = row_at[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = cost(i0, j) - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[row_at[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_at[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_at[j0] = row_at[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assigned = vec![0usize; n];
    for j in 1..=m {
        if row_at[j] != 0 {
            assigned[row_at[j] - 1] = j - 1;
        }
    }
    Ok(assigned)
}

pub fn hungarian_assign(p: &ProbabilityMatrix) -> Result<NodeMapping> {
    Ok(to_mapping(p, &hungarian_assign_scores(&p.probs)?))
}

/// Total score of an assignment given as one column per row.
pub fn mapping_score(scores: &Tensor, cols: &[usize]) -> f64 {
    cols.iter()
        .enumerate()
        .map(|(q, &t)| scores.get(q, t))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeId;
    use proptest::prelude::*;

    fn t(rows: &[Vec<f64>]) -> Tensor {
        Tensor::from_rows(rows).unwrap()
    }

    fn identity_dominant() -> Tensor {
        t(&[
            vec![0.9, 0.05, 0.05],
            vec![0.04, 0.9, 0.06],
            vec![0.05, 0.05, 0.9],
        ])
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(
            greedy_assign_scores(&identity_dominant()).unwrap(),
            vec![0, 1, 2]
        );
        let p = t(&[vec![0.7, 0.2, 0.1], vec![0.6, 0.3, 0.1]]);
        assert_eq!(greedy_assign_scores(&p).unwrap(), vec![0, 1]);
        assert_eq!(
            greedy_assign_scores(&t(&[vec![0.5, 0.5], vec![0.5, 0.5]])).unwrap(),
            vec![0, 1]
        );
    }

    #[test]
    fn hungarian_examples() {
        assert_eq!(
            hungarian_assign_scores(&identity_dominant()).unwrap(),
            vec![0, 1, 2]
        );
        let p = t(&[vec![0.9, 0.8], vec![0.85, 0.1]]);
        let h = hungarian_assign_scores(&p).unwrap();
        assert_eq!(h, vec![1, 0]);
        assert!((mapping_score(&p, &h) - 1.65).abs() < 1e-12);
        assert_eq!(mapping_score(&p, &greedy_assign_scores(&p).unwrap()), 1.0);
        assert_eq!(hungarian_assign_scores(&t(&[vec![0.3]])).unwrap(), vec![0]);
    }

    #[test]
    fn more_rows_than_columns_is_infeasible() {
        let p = t(&[vec![1.0], vec![1.0]]);
        assert!(matches!(
            greedy_assign_scores(&p),
            Err(Error::Infeasible { rows: 2, cols: 1 })
        ));
        assert!(matches!(
            hungarian_assign_scores(&p),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn mappings_carry_node_ids() {
        let probs = t(&[vec![0.1, 0.9]]);
        let p = ProbabilityMatrix::new(probs, vec![NodeId(7)], vec![NodeId(3), NodeId(4)]).unwrap();
        assert_eq!(greedy_assign(&p).unwrap().get(NodeId(7)), Some(NodeId(4)));
        assert_eq!(
            hungarian_assign(&p).unwrap().get(NodeId(7)),
            Some(NodeId(4))
        );
    }

    fn best_by_enumeration(scores: &Tensor) -> f64 {
        fn go(scores: &Tensor, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == scores.rows() {
                *best = best.max(acc);
                return;
            }
            for c in 0..scores.cols() {
                if !used[c] {
                    used[c] = true;
                    go(scores, row + 1, used, acc + scores.get(row, c), best);
                    used[c] = false;
                }
            }
        }
        let mut best = f64::NEG_INFINITY;
        go(scores, 0, &mut vec![false; scores.cols()], 0.0, &mut best);
        best
    }

    fn matrix() -> impl Strategy<Value = Tensor> {
        (1usize..6, 0usize..4).prop_flat_map(|(n, extra)| {
            let m = n + extra;
            prop::collection::vec(0.0f64..1.0, n * m)
                .prop_map(move |d| Tensor::from_vec(&[n, m], d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn hungarian_is_optimal(scores in matrix()) {
            let h = hungarian_assign_scores(&scores).unwrap();
            let mut seen = h.clone();
            seen.sort();
            seen.dedup();
            prop_assert_eq!(seen.len(), h.len());
            prop_assert!((mapping_score(&scores, &h) - best_by_enumeration(&scores)).abs() < 1e-9);
        }

        #[test]
        fn greedy_is_injective_and_dominated(scores in matrix()) {
            let g = greedy_assign_scores(&scores).unwrap();
            let mut seen = g.clone();
            seen.sort();
            seen.dedup();
            prop_assert_eq!(seen.len(), g.len());
            let h = hungarian_assign_scores(&scores).unwrap();
            prop_assert!(mapping_score(&scores, &h) >= mapping_score(&scores, &g) - 1e-12);
        }

        #[test]
        fn distinct_argmaxes_are_kept(scores in matrix()) {
            let argmax: Vec<usize> = (0..scores.rows())
                .map(|r| {
                    let row = scores.row(r);
                    (0..row.len()).fold(0, |b, c| if row[c] > row[b] { c } else { b })
                })
                .collect();
            let mut distinct = argmax.clone();
            distinct.sort();
            distinct.dedup();
            prop_assume!(distinct.len() == argmax.len());
            prop_assert_eq!(greedy_assign_scores(&scores).unwrap(), argmax);
        }
    }
}
