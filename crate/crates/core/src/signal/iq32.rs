//! Raw `iq32` files: little-endian f32 pairs (I then Q) with a JSON sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::IqSignal;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqSidecar {
    pub sample_rate_hz: f64,
    pub emitter_id: Option<u32>,
    pub snr_db: Option<f64>,
    pub num_samples: u64,
}

/// Sidecar path for a data file: `name.iq32` -> `name.iq32.json`.
pub fn sidecar_path(data: &Path) -> PathBuf {
    let mut s = data.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_iq32(path: &Path, signal: &IqSignal) -> Result<()> {
    let mut bytes = Vec::with_capacity(signal.len() * 8);
    for s in signal.samples() {
        bytes.extend_from_slice(&(s.re as f32).to_le_bytes());
        bytes.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let sidecar = IqSidecar {
        sample_rate_hz: signal.sample_rate_hz(),
        emitter_id: signal.emitter_id,
        snr_db: signal.snr_db,
        num_samples: signal.len() as u64,
    };
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    fs::write(&side, json).map_err(|e| Error::io(&side, e))
}

pub fn read_iq32(path: &Path) -> Result<IqSignal> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: IqSidecar =
        serde_json::from_str(&text).map_err(|e| Error::format(&side, e.to_string()))?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() as u64 != meta.num_samples * 8 {
        return Err(Error::format(
            path,
            format!(
                "sidecar declares {} samples ({} bytes) but file holds {} bytes",
                meta.num_samples,
                meta.num_samples * 8,
                bytes.len()
            ),
        ));
    }
    let samples = bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[0..4].try_into().unwrap());
            let im = f32::from_le_bytes(c[4..8].try_into().unwrap());
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    Ok(IqSignal::new(samples, meta.sample_rate_hz)?.with_labels(meta.emitter_id, meta.snr_db))
}
