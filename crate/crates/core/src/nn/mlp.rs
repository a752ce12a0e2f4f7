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

use serde::{Deserialize, Serialize};

use super::linear::{relu_backward_in_place, relu_in_place, Linear};
use crate::error::{Error, Result};
use crate::graph::seeded_rng;

/// Multi-layer perceptron with rectified hidden layers and an affine output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpConfig {
    /// `[input, hidden..., output]`
    pub layer_dims: Vec<usize>,
    pub seed: u64,
}

impl MlpConfig {
    /// Scores a concatenated pair of `embed_dim` vectors with the default
    /// 256 and 64 unit hidden layers.
    pub fn pair_scorer(embed_dim: usize) -> Self {
        Self {
            layer_dims: vec![2 * embed_dim, 256, 64, 1],
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_dims.len() < 2 || self.layer_dims.contains(&0) {
            return Err(Error::Config(format!(
                "mlp needs at least input and output dims, all positive: {:?}",
                self.layer_dims
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct MlpTrace {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    rows: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    config: MlpConfig,
    layers: Vec<Linear>,
}

impl Mlp {
    pub fn new(config: MlpConfig, offset: usize) -> Result<Self> {
        config.validate()?;
        let mut cursor = offset;
        let layers = config
            .layer_dims
            .windows(2)
            .map(|w| {
                let layer = Linear::new(cursor, w[0], w[1]);
                cursor = layer.end();
                layer
            })
            .collect();
        Ok(Self { config, layers })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Linear] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.config.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.config.layer_dims.last().expect("validated")
    }

    pub fn end(&self) -> usize {
        self.layers.last().expect("validated").end()
    }

    pub fn param_count(&self) -> usize {
        self.end() - self.layers[0].offset
    }

    pub fn init(&self, params: &mut [f64]) {
        let mut rng = seeded_rng(self.config.seed);
        for layer in &self.layers {
            layer.init(params, &mut rng);
        }
    }

    pub fn forward(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "mlp expects {} inputs, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        Ok(self.forward_traced(params, x, 1).0)
    }

    /// Batched forward over `rows` contiguous input rows.
    pub fn forward_traced(&self, params: &[f64], x: &[f64], rows: usize) -> (Vec<f64>, MlpTrace) {
        self.forward_from(0, params, x, rows)
    }

    /// Runs layers `first..` only; `x` must already be the pre-activation
    /// of layer `first - 1` when `first > 0`, or the raw input otherwise.
    pub(crate) fn forward_from(
        &self,
        first: usize,
        params: &[f64],
        x: &[f64],
        rows: usize,
    ) -> (Vec<f64>, MlpTrace) {
        let mut trace = MlpTrace {
            inputs: Vec::new(),
            pre: Vec::new(),
            rows,
        };
        let mut h = x.to_vec();
        if first > 0 {
            relu_in_place(&mut h);
        }
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate().skip(first) {
            let z = layer.forward(params, &h, rows);
            let mut next = z.clone();
            if l < last {
                relu_in_place(&mut next);
            }
            trace.inputs.push(h);
            trace.pre.push(z);
            h = next;
        }
        (h, trace)
    }

    /// Accumulates parameter gradients of layers covered by `trace` and
    /// returns the gradient with respect to that trace's first input.
    pub fn backward(
        &self,
        params: &[f64],
        trace: &MlpTrace,
        d_out: &[f64],
        grad: &mut [f64],
    ) -> Vec<f64> {
        let first = self.layers.len() - trace.inputs.len();
        let last = self.layers.len() - 1;
        let mut dh = d_out.to_vec();
        for (k, l) in (first..self.layers.len()).enumerate().rev() {
            let layer = &self.layers[l];
            let mut dz = dh;
            if l < last {
                relu_backward_in_place(&trace.pre[k], &mut dz);
            }
            let mut dx = vec![0.0; trace.rows * layer.in_dim];
            layer.backward(
                params,
                &trace.inputs[k],
                &dz,
                trace.rows,
                grad,
                Some(&mut dx),
            );
            dh = dx;
        }
        dh
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::grad_check;

    #[test]
    fn zero_network_outputs_zero() {
        let mlp = Mlp::new(
            MlpConfig {
                layer_dims: vec![3, 4, 2],
                seed: 0,
            },
            0,
        )
        .unwrap();
        let mut params = vec![0.0; mlp.param_count()];
        mlp.init(&mut params);
        for l in mlp.layers() {
            for b in &mut params[l.end() - l.out_dim..l.end()] {
                *b = 0.0;
            }
        }
        assert_eq!(mlp.forward(&params, &[0.0; 3]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn single_affine_layer() {
        let mlp = Mlp::new(
            MlpConfig {
                layer_dims: vec![1, 1],
                seed: 0,
            },
            0,
        )
        .unwrap();
        assert_eq!(mlp.forward(&[2.0, 1.0], &[3.0]).unwrap(), vec![7.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let mlp = Mlp::new(
            MlpConfig {
                layer_dims: vec![2, 1],
                seed: 0,
            },
            0,
        )
        .unwrap();
        assert!(matches!(
            mlp.forward(&[0.0; 3], &[1.0]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mlp = Mlp::new(
            MlpConfig {
                layer_dims: vec![4, 6, 5, 2],
                seed: 3,
            },
            0,
        )
        .unwrap();
        let mut params = vec![0.0; mlp.param_count()];
        mlp.init(&mut params);
        let x = [0.3, -1.2, 0.7, 2.0];
        let loss = |p: &[f64]| {
            let (y, trace) = mlp.forward_traced(p, &x, 1);
            let value = y[0] * 1.5 - y[1] * 0.5 + y[0] * y[1];
            let mut grad = vec![0.0; p.len()];
            mlp.backward(p, &trace, &[1.5 + y[1], -0.5 + y[0]], &mut grad);
            (value, grad)
        };
        let err = grad_check(loss, &params, 1e-6);
        assert!(err <= 1e-4, "max relative error {err}");
    }

    #[test]
    fn linear_layer_gradient_is_tight() {
        let mlp = Mlp::new(
            MlpConfig {
                layer_dims: vec![5, 3],
                seed: 8,
            },
            0,
        )
        .unwrap();
        let mut params = vec![0.0; mlp.param_count()];
        mlp.init(&mut params);
        let x = [1.0, -2.0, 0.5, 0.25, 3.0];
        let loss = |p: &[f64]| {
            let (y, trace) = mlp.forward_traced(p, &x, 1);
            let value: f64 = y.iter().map(|v| 0.5 * v * v).sum();
            let mut grad = vec![0.0; p.len()];
            mlp.backward(p, &trace, &y, &mut grad);
            (value, grad)
        };
        let err = grad_check(loss, &params, 1e-5);
        assert!(err <= 1e-6, "max relative error {err}");
    }
}
