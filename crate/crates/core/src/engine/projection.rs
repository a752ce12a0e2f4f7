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

//! Two-dimensional overview layout of a database.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::exact::approx_graph_edit_distance;
use crate::graph::Graph;

/// Pairwise approximate edit distances (symmetric, zero diagonal).
pub fn distance_matrix(db: &[Graph], beam: usize) -> Vec<Vec<f64>> {
    let n = db.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = approx_graph_edit_distance(&db[i], &db[j], beam);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

/// Classical metric MDS into two dimensions. Each axis is oriented so its
/// largest-magnitude coordinate is positive, which makes the layout a pure
/// function of the distance matrix.
pub fn classical_mds(distances: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let n = distances.len();
    if n == 0 {
        return Vec::new();
    }
    let sq = DMatrix::from_fn(n, n, |i, j| distances[i][j] * distances[i][j]);
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).mean()).collect();
    let total = sq.mean();
    let b = DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + total)
    });
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| {
        eig.eigenvalues[c]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&c))
    });
    let mut coords = vec![[0.0; 2]; n];
    for (axis, &k) in order.iter().take(2).enumerate() {
        let scale = eig.eigenvalues[k].max(0.0).sqrt();
        let v = eig.eigenvectors.column(k);
        let pivot = (0..n).fold(0, |best, i| {
            if v[i].abs() > v[best].abs() + 1e-12 {
                i
            } else {
                best
            }
        });
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            coords[i][axis] = sign * scale * v[i];
        }
    }
    coords
}

/// Overview coordinates per graph, in database order.
pub fn overview_projection(db: &[Graph], beam: usize) -> Vec<[f64; 2]> {
    classical_mds(&distance_matrix(db, beam))
}
