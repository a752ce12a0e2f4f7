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

//! Precomputed per-node embeddings for every database graph.
//!
//! File layout (all integers little-endian `u32`, floats little-endian `f64`):
//!
//! ```text
//! magic      8 bytes  "SGMSTORE"
//! version    u32      1
//! matcher    u32 length + UTF-8 fingerprint
//! aligner    u32 length + UTF-8 fingerprint
//! order_dim  u32
//! align_dim  u32
//! graphs     u32
//! per graph:
//!   graph_id u32 length + UTF-8
//!   nodes    u32
//!   order    nodes * order_dim f64, row-major
//!   align    nodes * align_dim f64, row-major
//! ```

use std::io::{Read, Write};
use std::path::Path;

use crate::aligner::AlignModel;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matcher::MatchModel;
use crate::nn::Tensor;

const MAGIC: &[u8; 8] = b"SGMSTORE";
const VERSION: u32 = 1;

/// Embeddings of one graph, rows in node index order.
#[derive(Clone, Debug, PartialEq)]
pub struct StoredGraph {
    pub graph_id: String,
    pub order: Tensor,
    pub align: Tensor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingStore {
    pub matcher_fingerprint: String,
    pub aligner_fingerprint: String,
    pub order_dim: usize,
    pub align_dim: usize,
    pub graphs: Vec<StoredGraph>,
}

/// Computes both embedding families for every graph.
pub fn precompute_store(
    db: &[Graph],
    matcher: &MatchModel,
    aligner: &AlignModel,
) -> Result<EmbeddingStore> {
    let graphs = db
        .iter()
        .map(|g| {
            Ok(StoredGraph {
                graph_id: g.graph_id().to_string(),
                order: matcher.embed_all(g)?,
                align: aligner.embed_graph(g)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EmbeddingStore {
        matcher_fingerprint: matcher.fingerprint(),
        aligner_fingerprint: aligner.fingerprint(),
        order_dim: matcher.embedding_dim(),
        align_dim: aligner.encoder().output_dim(),
        graphs,
    })
}

impl EmbeddingStore {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn node_vectors(&self) -> usize {
        self.graphs.iter().map(|g| g.order.rows()).sum()
    }

    /// Fails unless both fingerprints match the given models.
    pub fn check_models(&self, matcher: &MatchModel, aligner: &AlignModel) -> Result<()> {
        for (stored, loaded) in [
            (&self.matcher_fingerprint, matcher.fingerprint()),
            (&self.aligner_fingerprint, aligner.fingerprint()),
        ] {
            if *stored != loaded {
                return Err(Error::FingerprintMismatch {
                    stored: stored.clone(),
                    loaded,
                });
            }
        }
        Ok(())
    }

    /// Fails unless the store lists exactly the graphs of `db`, in order and
    /// with matching node counts.
    pub fn check_database(&self, db: &[Graph]) -> Result<()> {
        let consistent = self.graphs.len() == db.len()
            && self.graphs.iter().zip(db).all(|(s, g)| {
                s.graph_id == g.graph_id()
                    && s.order.rows() == g.node_count()
                    && s.align.rows() == g.node_count()
            });
        if !consistent {
            return Err(Error::format(
                "embedding store",
                "does not match the database graphs",
            ));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, VERSION);
        put_str(&mut out, &self.matcher_fingerprint);
        put_str(&mut out, &self.aligner_fingerprint);
        put_u32(&mut out, self.order_dim as u32);
        put_u32(&mut out, self.align_dim as u32);
        put_u32(&mut out, self.graphs.len() as u32);
        for g in &self.graphs {
            put_str(&mut out, &g.graph_id);
            put_u32(&mut out, g.order.rows() as u32);
            for v in g.order.data().iter().chain(g.align.data()) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::format("embedding store", "bad magic"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::format(
                "embedding store",
                format!("unsupported version {version}"),
            ));
        }
        let matcher_fingerprint = r.string()?;
        let aligner_fingerprint = r.string()?;
        let order_dim = r.u32()? as usize;
        let align_dim = r.u32()? as usize;
        let count = r.u32()? as usize;
        let mut graphs = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let graph_id = r.string()?;
            let nodes = r.u32()? as usize;
            let order = r.tensor(nodes, order_dim)?;
            let align = r.tensor(nodes, align_dim)?;
            graphs.push(StoredGraph {
                graph_id,
                order,
                align,
            });
        }
        if r.pos != bytes.len() {
            return Err(Error::format("embedding store", "trailing bytes"));
        }
        Ok(Self {
            matcher_fingerprint,
            aligner_fingerprint,
            order_dim,
            align_dim,
            graphs,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| {
            Error::format("embedding store", format!("truncated at byte {}", self.pos))
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|e| Error::format("embedding store", e.to_string()))
    }

    fn tensor(&mut self, rows: usize, cols: usize) -> Result<Tensor> {
        let raw = self.take(rows * cols * 8)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Tensor::from_vec(&[rows, cols], data)
            .map_err(|e| Error::format("embedding store", e.to_string()))
    }
}
