//! `HGC1` checkpoint files.
//!
//! Layout (little-endian): magic, `u32` version, `u32` header length, JSON
//! header, then every array of the header's `arrays` and `cl_arrays` lists as
//! raw `f32` values, in that order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cl_head::{ClHead, ClHeadConfig};
use super::network::{Architecture, Model};
use super::ordinal::DecodeRule;
use super::params::ParamStore;
use crate::fsio::{self, put_f32s, Reader};
use crate::numerics::Tensor;
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"HGC1";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub seed: u64,
    /// Epoch the weights were taken from (1-based; 0 for untrained weights).
    pub epoch: usize,
    pub val_macro_recall: Option<f64>,
    #[serde(default)]
    pub decode_rule: DecodeRule,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub meta: CheckpointMeta,
}

#[derive(Serialize, Deserialize)]
struct ArraySpec {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    architecture: Architecture,
    cl_head: Option<ClHeadConfig>,
    #[serde(flatten)]
    meta: CheckpointMeta,
    arrays: Vec<ArraySpec>,
    cl_arrays: Vec<ArraySpec>,
}

fn specs(store: &ParamStore) -> Vec<ArraySpec> {
    store
        .iter()
        .map(|(name, t)| ArraySpec {
            name: name.to_string(),
            shape: t.shape().to_vec(),
        })
        .collect()
}

fn fill(store: &mut ParamStore, declared: &[ArraySpec], r: &mut Reader, path: &Path) -> Result<()> {
    let expected = specs(store);
    if expected.len() != declared.len() {
        return Err(Error::format(
            path,
            format!(
                "{} arrays declared, architecture has {}",
                declared.len(),
                expected.len()
            ),
        ));
    }
    for ((e, d), t) in expected.iter().zip(declared).zip(store.tensors_mut()) {
        if e.name != d.name || e.shape != d.shape {
            return Err(Error::format(
                path,
                format!(
                    "array {} {:?} does not match expected {} {:?}",
                    d.name, d.shape, e.name, e.shape
                ),
            ));
        }
        let values = r.f32s(t.len())?;
        *t = Tensor::new(d.shape.clone(), values).map_err(|e| Error::format(path, e.to_string()))?;
    }
    Ok(())
}

impl Checkpoint {
    pub fn encode(&self) -> Result<Vec<u8>> {
        let header = Header {
            architecture: self.model.arch.clone(),
            cl_head: self.model.cl_head.as_ref().map(|h| h.config),
            meta: self.meta.clone(),
            arrays: specs(&self.model.params),
            cl_arrays: self
                .model
                .cl_head
                .as_ref()
                .map(|h| specs(&h.params))
                .unwrap_or_default(),
        };
        let json = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(12 + json.len() + 4 * self.model.params.num_values());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, t) in self.model.params.iter() {
            put_f32s(&mut out, t.data());
        }
        if let Some(h) = &self.model.cl_head {
            for (_, t) in h.params.iter() {
                put_f32s(&mut out, t.data());
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut r = Reader::new(bytes, path);
        r.magic(CHECKPOINT_MAGIC)?;
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::format(path, format!("unsupported checkpoint version {version}")));
        }
        let len = r.u32()? as usize;
        let header: Header =
            serde_json::from_slice(r.take(len)?).map_err(|e| Error::format(path, format!("bad header: {e}")))?;
        let mut model = Model::init(header.architecture, 0).map_err(|e| Error::format(path, e.to_string()))?;
        fill(&mut model.params, &header.arrays, &mut r, path)?;
        if let Some(cfg) = header.cl_head {
            let mut head = ClHead::init(cfg, 0);
            fill(&mut head.params, &header.cl_arrays, &mut r, path)?;
            model = model
                .with_cl_head(head)
                .map_err(|e| Error::format(path, e.to_string()))?;
        } else if !header.cl_arrays.is_empty() {
            return Err(Error::format(path, "projection arrays without a projection head"));
        }
        r.finish()?;
        Ok(Self {
            model,
            meta: header.meta,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fsio::write_atomic(path, &self.encode()?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::decode(&fsio::read(path)?, path)
    }
}
