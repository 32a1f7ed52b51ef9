//! Binary parameter checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "CAMRLQN\0"
//! version  u32      1
//! dtype    u8 length + ASCII tag ("f32" or "f64")
//! obs_dim, hidden_size, n_actions   u64 each
//! w_ih, w_hh, b, head_w, head_b     row-major values of the dtype
//! ```

use std::path::Path;

use super::params::{NetworkShape, QNetworkParams, TENSOR_NAMES};
use super::NeuralError;
use crate::scalar::Scalar;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CAMRLQN\0";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_params<T: Scalar>(params: &QNetworkParams<T>) -> Vec<u8> {
    let shape = params.shape();
    let mut out = Vec::with_capacity(64 + params.n_params() * T::BYTES);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.push(T::DTYPE.len() as u8);
    out.extend_from_slice(T::DTYPE.as_bytes());
    for dim in [shape.obs_dim, shape.hidden_size, shape.n_actions] {
        out.extend_from_slice(&(dim as u64).to_le_bytes());
    }
    for tensor in params.tensors() {
        for &x in tensor {
            x.write_le(&mut out);
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], NeuralError> {
        if self.bytes.len() - self.offset < n {
            return Err(self.error(format!(
                "truncated while reading {what}: need {n} bytes, {} left",
                self.bytes.len() - self.offset
            )));
        }
        let out = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(out)
    }

    fn u64(&mut self, what: &str) -> Result<u64, NeuralError> {
        let raw = self.take(8, what)?;
        Ok(u64::from_le_bytes(raw.try_into().expect("8 bytes")))
    }

    fn error(&self, message: String) -> NeuralError {
        NeuralError::Checkpoint {
            offset: self.offset,
            message,
        }
    }
}

pub fn read_params<T: Scalar>(bytes: &[u8]) -> Result<QNetworkParams<T>, NeuralError> {
    let mut r = Reader { bytes, offset: 0 };
    if r.take(8, "magic")? != CHECKPOINT_MAGIC {
        return Err(NeuralError::Checkpoint {
            offset: 0,
            message: "not a Q-network checkpoint (bad magic)".into(),
        });
    }
    let version = u32::from_le_bytes(r.take(4, "version")?.try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(r.error(format!("unsupported checkpoint version {version}")));
    }
    let tag_len = r.take(1, "dtype length")?[0] as usize;
    let tag = r.take(tag_len, "dtype")?;
    if tag != T::DTYPE.as_bytes() {
        return Err(r.error(format!(
            "checkpoint holds {} values, expected {}",
            String::from_utf8_lossy(tag),
            T::DTYPE
        )));
    }
    let mut dims = [0usize; 3];
    for (d, name) in dims.iter_mut().zip(["obs_dim", "hidden_size", "n_actions"]) {
        let v = r.u64(name)?;
        *d = usize::try_from(v)
            .ok()
            .filter(|&v| v > 0 && v < (1 << 24))
            .ok_or_else(|| r.error(format!("implausible {name} {v}")))?;
    }
    let shape = NetworkShape::new(dims[0], dims[1], dims[2])?;
    let mut params = QNetworkParams::<T>::zeros(shape);
    for (tensor, name) in params.tensors_mut().into_iter().zip(TENSOR_NAMES) {
        let raw = r.take(tensor.len() * T::BYTES, name)?;
        for (x, chunk) in tensor.iter_mut().zip(raw.chunks_exact(T::BYTES)) {
            *x = T::read_le(chunk);
        }
    }
    if r.offset != bytes.len() {
        return Err(r.error(format!("{} trailing bytes", bytes.len() - r.offset)));
    }
    Ok(params)
}

pub fn save_params<T: Scalar>(params: &QNetworkParams<T>, path: &Path) -> Result<(), NeuralError> {
    std::fs::write(path, write_params(params)).map_err(|e| NeuralError::Io(format!("{}: {e}", path.display())))
}

pub fn load_params<T: Scalar>(path: &Path) -> Result<QNetworkParams<T>, NeuralError> {
    let bytes = std::fs::read(path).map_err(|e| NeuralError::Io(format!("{}: {e}", path.display())))?;
    read_params(&bytes)
}
