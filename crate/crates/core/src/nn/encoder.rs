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

//! Message-passing graph encoder.
//!
//! Each layer computes `h' = relu(W [h_v ; agg_{u in N(v)} h_u] + b)`; the last
//! layer stays linear. Inputs are the one-hot node label followed by a single
//! anchor-flag channel.

use serde::{Deserialize, Serialize};

use super::linear::{relu_backward_in_place, relu_in_place, Linear};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::graph::{seeded_rng, Graph, NodeId};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Mean,
    Sum,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub num_layers: usize,
    pub hidden_dim: usize,
    /// Label vocabulary size plus one anchor-flag channel.
    pub input_dim: usize,
    #[serde(default)]
    pub aggregation: Aggregation,
    pub seed: u64,
}

impl EncoderConfig {
    pub fn for_vocabulary(vocab_size: usize) -> Self {
        Self {
            num_layers: 8,
            hidden_dim: 64,
            input_dim: vocab_size + 1,
            aggregation: Aggregation::Mean,
            seed: 0,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.input_dim - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 || self.hidden_dim == 0 || self.input_dim < 2 {
            return Err(Error::Config(format!(
                "encoder needs >= 1 layer, hidden_dim >= 1 and input_dim >= 2, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Per-node output vectors of an encoder pass.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeEmbeddingSet {
    pub node_ids: Vec<NodeId>,
    pub embeddings: Tensor,
}

impl NodeEmbeddingSet {
    pub fn get(&self, id: NodeId) -> Option<&[f64]> {
        let i = self.node_ids.binary_search(&id).ok()?;
        Some(self.embeddings.row(i))
    }
}

/// Intermediate values kept for the backward pass.
#[derive(Clone, Debug)]
pub struct EncoderTrace {
    /// Per layer, the `n x 2d` concatenation `[h ; agg]` fed to the layer.
    inputs: Vec<Vec<f64>>,
    /// Per layer, the `n x hidden` pre-activations.
    pre: Vec<Vec<f64>>,
}

/// Layout of the encoder weights inside a flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoder {
    config: EncoderConfig,
    layers: Vec<Linear>,
}

impl Encoder {
    /// Lays the encoder out starting at `offset`.
    pub fn new(config: EncoderConfig, offset: usize) -> Result<Self> {
        config.validate()?;
        let mut layers = Vec::with_capacity(config.num_layers);
        let mut cursor = offset;
        let mut in_dim = config.input_dim;
        for _ in 0..config.num_layers {
            let layer = Linear::new(cursor, 2 * in_dim, config.hidden_dim);
            cursor = layer.end();
            layers.push(layer);
            in_dim = config.hidden_dim;
        }
        Ok(Self { config, layers })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Linear] {
        &self.layers
    }

    pub fn offset(&self) -> usize {
        self.layers[0].offset
    }

    pub fn end(&self) -> usize {
        self.layers.last().expect("at least one layer").end()
    }

    pub fn param_count(&self) -> usize {
        self.end() - self.offset()
    }

    pub fn output_dim(&self) -> usize {
        self.config.hidden_dim
    }

    /// Xavier-uniform initialisation of this encoder's slice of `params`.
    pub fn init(&self, params: &mut [f64]) {
        let mut rng = seeded_rng(self.config.seed);
        for layer in &self.layers {
            layer.init(params, &mut rng);
        }
    }

    fn features(&self, g: &Graph, anchor: Option<usize>) -> Result<Vec<f64>> {
        let d = self.config.input_dim;
        let vocab = self.config.vocab_size();
        let mut x = vec![0.0; g.node_count() * d];
        for (i, node) in g.nodes().iter().enumerate() {
            if node.label >= vocab {
                return Err(Error::LabelOutOfVocabulary {
                    label: node.label,
                    vocab,
                });
            }
            x[i * d + node.label] = 1.0;
        }
        if let Some(a) = anchor {
            x[a * d + vocab] = 1.0;
        }
        Ok(x)
    }

    /// Builds `[h_v ; agg(h_u)]` rows. Neighbor rows are reduced in
    /// lexicographic order of their values so the result does not depend on
    /// node numbering.
    fn concat_with_neighbors(&self, g: &Graph, h: &[f64], d: usize) -> Vec<f64> {
        let n = g.node_count();
        let mut out = vec![0.0; n * 2 * d];
        let mut order: Vec<usize> = Vec::new();
        for v in 0..n {
            let row = &mut out[v * 2 * d..(v + 1) * 2 * d];
            row[..d].copy_from_slice(&h[v * d..(v + 1) * d]);
            let nbs = g.neighbors(v);
            if nbs.is_empty() {
                continue;
            }
            order.clear();
            order.extend_from_slice(nbs);
            order.sort_by(|&a, &b| {
                let (ra, rb) = (&h[a * d..(a + 1) * d], &h[b * d..(b + 1) * d]);
                ra.iter()
                    .zip(rb)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            let agg = &mut row[d..];
            for &u in &order {
                for (a, x) in agg.iter_mut().zip(&h[u * d..(u + 1) * d]) {
                    *a += x;
                }
            }
            if self.config.aggregation == Aggregation::Mean {
                let inv = 1.0 / nbs.len() as f64;
                for a in agg.iter_mut() {
                    *a *= inv;
                }
            }
        }
        out
    }

    /// Forward pass keeping the trace needed by [`Encoder::backward`].
    /// Returns the `n x hidden_dim` output.
    pub fn forward_traced(
        &self,
        params: &[f64],
        g: &Graph,
        anchor: Option<usize>,
    ) -> Result<(Tensor, EncoderTrace)> {
        let n = g.node_count();
        let mut h = self.features(g, anchor)?;
        let mut d = self.config.input_dim;
        let mut trace = EncoderTrace {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
        };
        for (l, layer) in self.layers.iter().enumerate() {
            let cat = self.concat_with_neighbors(g, &h, d);
            let z = layer.forward(params, &cat, n);
            let mut next = z.clone();
            if l + 1 < self.layers.len() {
                relu_in_place(&mut next);
            }
            trace.inputs.push(cat);
            trace.pre.push(z);
            h = next;
            d = self.config.hidden_dim;
        }
        Ok((Tensor::from_vec(&[n, d], h)?, trace))
    }

    pub fn forward(&self, params: &[f64], g: &Graph, anchor: Option<usize>) -> Result<Tensor> {
        Ok(self.forward_traced(params, g, anchor)?.0)
    }

    pub fn encode_graph(
        &self,
        params: &[f64],
        g: &Graph,
        anchor: Option<NodeId>,
    ) -> Result<NodeEmbeddingSet> {
        let anchor = anchor.map(|a| g.require_index(a)).transpose()?;
        Ok(NodeEmbeddingSet {
            node_ids: g.nodes().iter().map(|n| n.id).collect(),
            embeddings: self.forward(params, g, anchor)?,
        })
    }

    /// Accumulates parameter gradients given `d_out`, the gradient of the loss
    /// with respect to the `n x hidden_dim` output.
    pub fn backward(
        &self,
        params: &[f64],
        g: &Graph,
        trace: &EncoderTrace,
        d_out: &[f64],
        grad: &mut [f64],
    ) {
        let n = g.node_count();
        let hidden = self.config.hidden_dim;
        let mut dh = d_out.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let mut dz = dh;
            if l + 1 < self.layers.len() {
                relu_backward_in_place(&trace.pre[l], &mut dz);
            }
            let in_d = layer.in_dim / 2;
            let need_input = l > 0;
            let mut dcat = if need_input {
                vec![0.0; n * 2 * in_d]
            } else {
                Vec::new()
            };
            layer.backward(
                params,
                &trace.inputs[l],
                &dz,
                n,
                grad,
                need_input.then_some(dcat.as_mut_slice()),
            );
            if !need_input {
                break;
            }
            let mut next = vec![0.0; n * in_d];
            for v in 0..n {
                let row = &dcat[v * 2 * in_d..(v + 1) * 2 * in_d];
                for (a, b) in next[v * in_d..(v + 1) * in_d].iter_mut().zip(&row[..in_d]) {
                    *a += b;
                }
                let nbs = g.neighbors(v);
                if nbs.is_empty() {
                    continue;
                }
                let scale = match self.config.aggregation {
                    Aggregation::Mean => 1.0 / nbs.len() as f64,
                    Aggregation::Sum => 1.0,
                };
                for &u in nbs {
                    for (a, b) in next[u * in_d..(u + 1) * in_d].iter_mut().zip(&row[in_d..]) {
                        *a += scale * b;
                    }
                }
            }
            debug_assert_eq!(in_d, hidden);
            dh = next;
        }
    }
}
