//! Model files: `SMX1` magic, u32 header length, JSON header, then the
//! weights (row-major) and biases as little-endian f64.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SoftmaxModel;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SMX1";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    num_classes: usize,
    pooling: usize,
    feature_dim: usize,
    validation_accuracy: Vec<f64>,
}

pub fn write_model(path: &Path, model: &SoftmaxModel) -> Result<()> {
    let header = serde_json::to_vec(&Header {
        num_classes: model.num_classes,
        pooling: model.pooling,
        feature_dim: model.feature_dim,
        validation_accuracy: model.validation_accuracy.clone(),
    })
    .expect("header serializes");
    let mut out =
        Vec::with_capacity(8 + header.len() + 8 * (model.weights.len() + model.biases.len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for v in model.weights.iter().chain(&model.biases) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: &Path) -> Result<SoftmaxModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(Error::format(path, "missing SMX1 header"));
    }
    let hlen = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let body = bytes
        .get(8..8 + hlen)
        .ok_or_else(|| Error::format(path, "truncated header"))?;
    let h: Header = serde_json::from_slice(body).map_err(|e| Error::format(path, e.to_string()))?;
    let payload = &bytes[8 + hlen..];
    let nw = h.num_classes * h.feature_dim;
    if payload.len() != 8 * (nw + h.num_classes) {
        return Err(Error::format(
            path,
            format!(
                "payload holds {} bytes, header implies {}",
                payload.len(),
                8 * (nw + h.num_classes)
            ),
        ));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::format(path, "non-finite parameter"));
    }
    Ok(SoftmaxModel {
        num_classes: h.num_classes,
        pooling: h.pooling,
        feature_dim: h.feature_dim,
        weights: values[..nw].to_vec(),
        biases: values[nw..].to_vec(),
        validation_accuracy: h.validation_accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut m = SoftmaxModel::zeros(3, 4, 2);
        m.weights = (0..12).map(|i| i as f64 * 0.1 - 0.3).collect();
        m.biases = vec![0.5, -1.0, 1e-300];
        m.validation_accuracy = vec![0.9, 0.8, 0.7];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.smx");
        write_model(&p, &m).unwrap();
        assert_eq!(read_model(&p).unwrap(), m);
        let mut bytes = fs::read(&p).unwrap();
        bytes.pop();
        fs::write(&p, bytes).unwrap();
        assert!(matches!(read_model(&p), Err(Error::Format { .. })));
        assert!(matches!(
            read_model(&dir.path().join("nope")),
            Err(Error::Io { .. })
        ));
    }
}
