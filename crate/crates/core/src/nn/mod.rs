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

//! Small dense neural substrate: tensors, affine layers, the graph encoder,
//! MLPs, Adam and finite-difference gradient checking.
//!
//! Parameters of a model live in one flat `Vec<f64>`; layers are views into
//! it described by [`Linear`]. Gradients use the same layout.

mod adam;
pub mod checkpoint;
mod encoder;
pub mod gradcheck;
mod linear;
mod mlp;
mod tensor;

pub use adam::AdamState;
pub use checkpoint::{Checkpoint, ModelKind};
pub use encoder::{Aggregation, Encoder, EncoderConfig, EncoderTrace, NodeEmbeddingSet};
pub use gradcheck::grad_check;
pub use linear::{relu_backward_in_place, relu_in_place, Linear};
pub use mlp::{Mlp, MlpConfig, MlpTrace};
pub use tensor::{axpy, dot, Tensor};
