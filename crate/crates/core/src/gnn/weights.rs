//! Binary weight file.
//!
//! Little-endian layout:
//!
//! ```text
//! magic        "RGWT"
//! version      u32                (1)
//! num_blocks   u32
//! num_heads    u32
//! hidden_dim   u32
//! input_dim    u32
//! pe_mode      u8                 (0 none, 1 degree, 2 laplacian eigenvalues)
//! tensor_count u32
//! tensor_count × {
//!     name_len u16, name (UTF-8), rank u8, dims u32 × rank, data f32 × Π dims (row-major)
//! }
//! ```

use std::path::Path;

use thiserror::Error;

use super::{GnnConfig, GnnModel, Tensor};
use crate::features::PeMode;

pub const WEIGHT_MAGIC: &[u8; 4] = b"RGWT";
pub const WEIGHT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeightError {
    #[error("weight file format error: {0}")]
    Format(String),
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("tensor `{tensor}`: {detail}")]
    Integrity { tensor: String, detail: String },
    #[error("cannot read weight file: {0}")]
    Io(String),
}

impl WeightError {
    pub(crate) fn integrity(tensor: &str, detail: impl Into<String>) -> Self {
        WeightError::Integrity {
            tensor: tensor.to_string(),
            detail: detail.into(),
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let out = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(out)
    }

    fn u8(&mut self) -> Option<u8> {
        self.take(1).map(|b| b[0])
    }

    fn u16(&mut self) -> Option<u16> {
        self.take(2).map(|b| u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

impl GnnModel {
    /// Parses a weight file. Nothing is returned unless every tensor is
    /// present with the shape implied by the embedded configuration.
    pub fn load_weights(bytes: &[u8]) -> Result<Self, WeightError> {
        let mut r = Reader { bytes, pos: 0 };
        let header = |what: &str| WeightError::Format(format!("truncated header ({what})"));
        if r.take(4).ok_or_else(|| header("magic"))? != WEIGHT_MAGIC {
            return Err(WeightError::Format("bad magic, expected RGWT".into()));
        }
        let version = r.u32().ok_or_else(|| header("version"))?;
        if version != WEIGHT_FORMAT_VERSION {
            return Err(WeightError::Format(format!(
                "unsupported version {version}, expected {WEIGHT_FORMAT_VERSION}"
            )));
        }
        let num_blocks = r.u32().ok_or_else(|| header("num_blocks"))? as usize;
        let num_heads = r.u32().ok_or_else(|| header("num_heads"))? as usize;
        let hidden_dim = r.u32().ok_or_else(|| header("hidden_dim"))? as usize;
        let input_dim = r.u32().ok_or_else(|| header("input_dim"))? as usize;
        let pe_code = r.u8().ok_or_else(|| header("pe_mode"))?;
        let pe_mode = PeMode::from_code(pe_code)
            .ok_or_else(|| WeightError::Config(format!("unknown pe_mode code {pe_code}")))?;
        let config = GnnConfig {
            num_blocks,
            num_heads,
            hidden_dim,
            pe_mode,
        };
        config.validate()?;
        if input_dim != config.input_dim() {
            return Err(WeightError::Config(format!(
                "input_dim {input_dim} inconsistent with pe_mode {pe_mode:?} (expects {})",
                config.input_dim()
            )));
        }
        let count = r.u32().ok_or_else(|| header("tensor count"))? as usize;
        let expected = config.tensor_specs().len();
        if count != expected {
            return Err(WeightError::Format(format!(
                "file declares {count} tensors, configuration requires {expected}"
            )));
        }

        let mut tensors = Vec::with_capacity(count);
        for index in 0..count {
            let unnamed = format!("#{index}");
            let truncated = |name: &str| WeightError::integrity(name, "file truncated inside tensor record");
            let name_len = r.u16().ok_or_else(|| truncated(&unnamed))? as usize;
            let name = r.take(name_len).ok_or_else(|| truncated(&unnamed))?;
            let name = std::str::from_utf8(name)
                .map_err(|_| WeightError::integrity(&unnamed, "tensor name is not UTF-8"))?
                .to_string();
            let rank = r.u8().ok_or_else(|| truncated(&name))? as usize;
            let dims = (0..rank)
                .map(|_| r.u32().map(|d| d as usize))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| truncated(&name))?;
            let elements = dims
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| WeightError::integrity(&name, "shape overflows"))?;
            let raw = elements
                .checked_mul(4)
                .and_then(|len| r.take(len))
                .ok_or_else(|| truncated(&name))?;
            let data = raw
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            tensors.push(Tensor { name, dims, data });
        }
        if r.pos != bytes.len() {
            return Err(WeightError::Format(format!(
                "{} trailing bytes after last tensor",
                bytes.len() - r.pos
            )));
        }
        GnnModel::from_tensors(config, tensors)
    }

    pub fn load_weights_file(path: impl AsRef<Path>) -> Result<Self, WeightError> {
        let path = path.as_ref();
        let bytes =
            std::fs::read(path).map_err(|e| WeightError::Io(format!("{}: {e}", path.display())))?;
        Self::load_weights(&bytes)
    }

    /// Serializes the model; tensors in canonical order.
    pub fn to_weight_bytes(&self) -> Vec<u8> {
        let c = self.config();
        let mut out = Vec::new();
        out.extend_from_slice(WEIGHT_MAGIC);
        out.extend_from_slice(&WEIGHT_FORMAT_VERSION.to_le_bytes());
        for v in [c.num_blocks, c.num_heads, c.hidden_dim, c.input_dim()] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.push(c.pe_mode.code());
        out.extend_from_slice(&(self.tensors().len() as u32).to_le_bytes());
        for t in self.tensors() {
            out.extend_from_slice(&(t.name.len() as u16).to_le_bytes());
            out.extend_from_slice(t.name.as_bytes());
            out.push(t.dims.len() as u8);
            for &d in &t.dims {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }
}
