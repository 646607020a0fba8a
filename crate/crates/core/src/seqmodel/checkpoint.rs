//! Binary checkpoints: magic, format version, element width, the model
//! configuration as JSON, then named arrays with shape headers. All integers
//! and floats little-endian.

use std::io::{Read, Write};

use crate::scalar::Scalar;

use super::params::ParamSet;
use super::tensor::Tensor;
use super::{ModelConfig, ModelError, SequenceModel};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"SKFM";
pub const CHECKPOINT_VERSION: u32 = 1;

fn err(e: impl std::fmt::Display) -> ModelError {
    ModelError::Checkpoint(e.to_string())
}

/// Writes `model` with elements stored at the width of `T` (4 or 8 bytes).
pub fn save_checkpoint<T: Scalar>(model: &SequenceModel<T>, mut w: impl Write) -> Result<(), ModelError> {
    let width = std::mem::size_of::<T>() as u8;
    let config = serde_json::to_vec(&model.config).map_err(err)?;
    w.write_all(&CHECKPOINT_MAGIC).map_err(err)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes()).map_err(err)?;
    w.write_all(&[width]).map_err(err)?;
    w.write_all(&(config.len() as u32).to_le_bytes()).map_err(err)?;
    w.write_all(&config).map_err(err)?;
    w.write_all(&(model.params.len() as u32).to_le_bytes()).map_err(err)?;
    for (name, t) in model.params.iter() {
        w.write_all(&(name.len() as u32).to_le_bytes()).map_err(err)?;
        w.write_all(name.as_bytes()).map_err(err)?;
        w.write_all(&(t.rows as u32).to_le_bytes()).map_err(err)?;
        w.write_all(&(t.cols as u32).to_le_bytes()).map_err(err)?;
        let mut buf = Vec::with_capacity(t.data.len() * width as usize);
        for v in &t.data {
            let v = v.to_f64_lossy();
            if width == 4 {
                buf.extend_from_slice(&(v as f32).to_le_bytes());
            } else {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        w.write_all(&buf).map_err(err)?;
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32, ModelError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(err)?;
    Ok(u32::from_le_bytes(b))
}

fn read_bytes(r: &mut impl Read, n: usize) -> Result<Vec<u8>, ModelError> {
    let mut b = Vec::new();
    r.take(n as u64).read_to_end(&mut b).map_err(err)?;
    if b.len() != n {
        return Err(err("truncated checkpoint"));
    }
    Ok(b)
}

/// Reads a checkpoint, converting elements to `T`.
pub fn load_checkpoint<T: Scalar>(mut r: impl Read) -> Result<SequenceModel<T>, ModelError> {
    let magic = read_bytes(&mut r, 4)?;
    if magic != CHECKPOINT_MAGIC {
        return Err(err("bad magic"));
    }
    let version = read_u32(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(err(format!("unsupported version {version}")));
    }
    let width = read_bytes(&mut r, 1)?[0] as usize;
    if width != 4 && width != 8 {
        return Err(err(format!("unsupported element width {width}")));
    }
    let n = read_u32(&mut r)? as usize;
    let config: ModelConfig = serde_json::from_slice(&read_bytes(&mut r, n)?).map_err(err)?;
    let count = read_u32(&mut r)?;
    let mut params = ParamSet::default();
    for _ in 0..count {
        let n = read_u32(&mut r)? as usize;
        let name = String::from_utf8(read_bytes(&mut r, n)?).map_err(err)?;
        let rows = read_u32(&mut r)? as usize;
        let cols = read_u32(&mut r)? as usize;
        let len = rows.checked_mul(cols).ok_or_else(|| err("shape overflow"))?;
        let raw = read_bytes(&mut r, len.checked_mul(width).ok_or_else(|| err("shape overflow"))?)?;
        let data: Vec<T> = raw
            .chunks_exact(width)
            .map(|c| {
                let v = if width == 4 {
                    f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes")))
                } else {
                    f64::from_le_bytes(c.try_into().expect("8 bytes"))
                };
                T::lit(v)
            })
            .collect();
        params.insert(name, Tensor::from_vec(rows, cols, data));
    }
    if !params.all_finite() {
        return Err(err("non-finite parameter"));
    }
    SequenceModel::from_params(config, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqmodel::ModelKind;

    #[test]
    fn round_trip_is_exact() {
        let m = SequenceModel::<f32>::new(ModelConfig::tiny(ModelKind::Constraint)).unwrap();
        let mut buf = Vec::new();
        save_checkpoint(&m, &mut buf).unwrap();
        let back: SequenceModel<f32> = load_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back.config, m.config);
        for ((a, x), (b, y)) in m.params.iter().zip(back.params.iter()) {
            assert_eq!(a, b);
            assert_eq!(x, y);
        }
        assert!(load_checkpoint::<f32>(&buf[..buf.len() - 3]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(load_checkpoint::<f32>(bad.as_slice()).is_err());
    }
}
