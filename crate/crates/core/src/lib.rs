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

//! Learned subgraph matching over a database of labeled graphs.

pub mod aligner;
pub mod config;
pub mod data;
pub mod engine;
pub mod error;
pub mod exact;
pub mod graph;
pub mod matcher;
pub mod nn;
pub mod pipeline;

pub use error::{Error, Result};
