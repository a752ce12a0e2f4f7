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

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{axpy, dot};

/// Location of an affine layer inside a flat parameter vector: an
/// `out_dim x in_dim` row-major weight followed by `out_dim` biases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Linear {
    pub offset: usize,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn new(offset: usize, in_dim: usize, out_dim: usize) -> Self {
        Self {
            offset,
            in_dim,
            out_dim,
        }
    }

    pub fn param_count(&self) -> usize {
        self.out_dim * (self.in_dim + 1)
    }

    pub fn end(&self) -> usize {
        self.offset + self.param_count()
    }

    pub fn weight<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[self.offset..self.offset + self.in_dim * self.out_dim]
    }

    pub fn bias<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[self.offset + self.in_dim * self.out_dim..self.end()]
    }

    fn row<'a>(&self, params: &'a [f64], j: usize) -> &'a [f64] {
        let start = self.offset + j * self.in_dim;
        &params[start..start + self.in_dim]
    }

    /// Xavier-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(&self, params: &mut [f64], rng: &mut R) {
        let limit = (6.0 / (self.in_dim + self.out_dim) as f64).sqrt();
        let w = self.in_dim * self.out_dim;
        for p in &mut params[self.offset..self.offset + w] {
            *p = rng.random_range(-limit..=limit);
        }
        for p in &mut params[self.offset + w..self.end()] {
            *p = 0.0;
        }
    }

    /// `y = W x + b` for a single row.
    pub fn forward_row(&self, params: &[f64], x: &[f64], y: &mut [f64]) {
        let bias = self.bias(params);
        for (j, yj) in y.iter_mut().enumerate() {
            *yj = dot(self.row(params, j), x) + bias[j];
        }
    }

    /// Row-batched forward over `rows` inputs stored contiguously.
    pub fn forward(&self, params: &[f64], x: &[f64], rows: usize) -> Vec<f64> {
        let (i, o) = (self.in_dim, self.out_dim);
        assert!(x.len() >= rows * i, "input shorter than {rows} rows");
        let mut y = Vec::with_capacity(rows * o);
        for _ in 0..rows {
            y.extend_from_slice(self.bias(params));
        }
        if rows > 0 && i > 0 && o > 0 {
            // y += x * W^T, with W row-major out x in.
            let w = self.weight(params);
            unsafe {
                matrixmultiply::dgemm(
                    rows,
                    i,
                    o,
                    1.0,
                    x.as_ptr(),
                    i as isize,
                    1,
                    w.as_ptr(),
                    1,
                    i as isize,
                    1.0,
                    y.as_mut_ptr(),
                    o as isize,
                    1,
                );
            }
        }
        y
    }

    /// Accumulates weight and bias gradients for one row and, when asked,
    /// adds the input gradient into `dx`.
    pub fn backward_row(
        &self,
        params: &[f64],
        x: &[f64],
        dy: &[f64],
        grad: &mut [f64],
        dx: Option<&mut [f64]>,
    ) {
        let w = self.in_dim * self.out_dim;
        for (j, &g) in dy.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let start = self.offset + j * self.in_dim;
            axpy(g, x, &mut grad[start..start + self.in_dim]);
            grad[self.offset + w + j] += g;
        }
        if let Some(dx) = dx {
            for (j, &g) in dy.iter().enumerate() {
                if g != 0.0 {
                    axpy(g, self.row(params, j), dx);
                }
            }
        }
    }

    /// Batched [`Linear::backward_row`] over `rows` contiguous rows.
    pub fn backward(
        &self,
        params: &[f64],
        x: &[f64],
        dy: &[f64],
        rows: usize,
        grad: &mut [f64],
        dx: Option<&mut [f64]>,
    ) {
        let (i, o) = (self.in_dim, self.out_dim);
        if rows == 0 || i == 0 || o == 0 {
            return;
        }
        assert!(
            x.len() >= rows * i && dy.len() >= rows * o,
            "batch shorter than {rows} rows"
        );
        let w_len = i * o;
        let (head, tail) = grad[self.offset..self.end()].split_at_mut(w_len);
        // dW += dy^T * x
        unsafe {
            matrixmultiply::dgemm(
                o,
                rows,
                i,
                1.0,
                dy.as_ptr(),
                1,
                o as isize,
                x.as_ptr(),
                i as isize,
                1,
                1.0,
                head.as_mut_ptr(),
                i as isize,
                1,
            );
        }
        for r in 0..rows {
            for (b, g) in tail.iter_mut().zip(&dy[r * o..(r + 1) * o]) {
                *b += g;
            }
        }
        if let Some(dx) = dx {
            assert!(
                dx.len() >= rows * i,
                "input gradient shorter than {rows} rows"
            );
            // dx += dy * W
            let w = self.weight(params);
            unsafe {
                matrixmultiply::dgemm(
                    rows,
                    o,
                    i,
                    1.0,
                    dy.as_ptr(),
                    o as isize,
                    1,
                    w.as_ptr(),
                    i as isize,
                    1,
                    1.0,
                    dx.as_mut_ptr(),
                    i as isize,
                    1,
                );
            }
        }
    }
}

pub fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Zeroes `grad` wherever the pre-activation was not positive.
pub fn relu_backward_in_place(pre: &[f64], grad: &mut [f64]) {
    for (g, &z) in grad.iter_mut().zip(pre) {
        if z <= 0.0 {
            *g = 0.0;
        }
    }
}
