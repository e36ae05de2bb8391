//! Raw IQ files: a 16-byte little-endian header (`MRIQ`, version `u16`,
//! two reserved zero bytes, sample count `u64`) followed by interleaved
//! `f32` real/imaginary pairs. Parameters go to a JSON sidecar at
//! `<path>.json`.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use super::realization::{realize, RealizationParams, RealizationSpec};
use crate::error::{Error, Result};

pub const IQ_MAGIC: [u8; 4] = *b"MRIQ";
pub const IQ_VERSION: u16 = 1;
pub const IQ_HEADER_LEN: usize = 16;

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Write samples, narrowed to `f32`.
pub fn write_iq(path: &Path, samples: &[Complex64]) -> Result<()> {
    let mut buf = Vec::with_capacity(IQ_HEADER_LEN + 8 * samples.len());
    buf.extend_from_slice(&IQ_MAGIC);
    buf.extend_from_slice(&IQ_VERSION.to_le_bytes());
    buf.extend_from_slice(&[0, 0]);
    buf.extend_from_slice(&(samples.len() as u64).to_le_bytes());
    for s in samples {
        buf.extend_from_slice(&(s.re as f32).to_le_bytes());
        buf.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_iq(path: &Path) -> Result<Vec<Complex64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: String| Error::Format(format!("{}: {m}", path.display()));
    if bytes.len() < IQ_HEADER_LEN {
        return Err(bad("truncated header".into()));
    }
    if bytes[..4] != IQ_MAGIC {
        return Err(bad("bad magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != IQ_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let payload = &bytes[IQ_HEADER_LEN..];
    if count.checked_mul(8) != Some(payload.len() as u64) {
        return Err(bad(format!("header says {count} samples, payload has {} bytes", payload.len())));
    }
    Ok(payload
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[..4].try_into().expect("4 bytes"));
            let im = f32::from_le_bytes(c[4..].try_into().expect("4 bytes"));
            Complex64::new(re.into(), im.into())
        })
        .collect())
}

pub fn read_sidecar(path: &Path) -> Result<RealizationParams> {
    let p = sidecar_path(path);
    let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Generate one realization and write it with its sidecar.
pub fn export_iq(spec: &RealizationSpec, path: &Path) -> Result<RealizationParams> {
    let (params, samples) = realize(spec)?;
    write_iq(path, &samples)?;
    let p = sidecar_path(path);
    fs::write(&p, serde_json::to_string_pretty(&params)?).map_err(|e| Error::io(&p, e))?;
    Ok(params)
}
