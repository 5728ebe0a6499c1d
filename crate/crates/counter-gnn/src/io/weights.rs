//! Binary weight file.
//!
//! | offset | size | field |
//! |-------:|-----:|-------|
//! | 0  | 4 | magic `CGNN` |
//! | 4  | 4 | format version (u32 LE) |
//! | 8  | 4 | node width F |
//! | 12 | 4 | edge width S |
//! | 16 | 4 | dense width H |
//! | 20 | 4 | conv layer count |
//! | 24 | 8 | parameter count (u64 LE) |
//! | 32 | 4 | CRC-32 of bytes 0..32 followed by the payload |
//! | 36 | 8·n | parameters, f64 LE, in [`ModelParams`] order |

use std::path::Path;

use counter_gnn_core::gnn::{ModelDims, ModelParams};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"CGNN";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 36;

fn crc(header: &[u8], payload: &[u8]) -> u32 {
    let mut h = crc32fast::Hasher::new();
    h.update(header);
    h.update(payload);
    h.finalize()
}

pub fn encode(params: &ModelParams) -> Vec<u8> {
    let d = params.dims();
    let data = params.as_slice();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * data.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for v in [d.node_width, d.edge_width, d.dense_width, d.layers] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&(data.len() as u64).to_le_bytes());
    let payload: Vec<u8> = data.iter().flat_map(|v| v.to_le_bytes()).collect();
    out.extend_from_slice(&crc(&out[..32], &payload).to_le_bytes());
    out.extend_from_slice(&payload);
    out
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

/// Decode a weight file image. Any truncation or corruption after the
/// header fails the checksum.
pub fn decode(path: &Path, bytes: &[u8]) -> Result<ModelParams> {
    if bytes.len() < 8 || bytes[..4] != MAGIC {
        return Err(Error::format(path, "not a CGNN weight file"));
    }
    let version = u32_at(bytes, 4);
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            path: path.to_path_buf(),
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Checksum {
            path: path.to_path_buf(),
            stored: 0,
            computed: crc(bytes, &[]),
        });
    }
    let stored = u32_at(bytes, 32);
    let computed = crc(&bytes[..32], &bytes[HEADER_LEN..]);
    if stored != computed {
        return Err(Error::Checksum {
            path: path.to_path_buf(),
            stored,
            computed,
        });
    }
    let dims = ModelDims {
        node_width: u32_at(bytes, 8) as usize,
        edge_width: u32_at(bytes, 12) as usize,
        dense_width: u32_at(bytes, 16) as usize,
        layers: u32_at(bytes, 20) as usize,
    };
    dims.validate()?;
    let n = u64::from_le_bytes(bytes[24..32].try_into().expect("8 bytes"));
    let payload = &bytes[HEADER_LEN..];
    if n != dims.len() as u64 || payload.len() as u64 != 8 * n {
        return Err(Error::format(
            path,
            format!(
                "parameter count {n} and payload of {} bytes do not fit dims {dims:?}",
                payload.len()
            ),
        ));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(ModelParams::from_vec(dims, data)?)
}

pub fn save_weights(path: &Path, params: &ModelParams) -> Result<()> {
    let mut w = super::create(path)?;
    std::io::Write::write_all(&mut w, &encode(params)).map_err(|e| Error::io(path, e))?;
    std::io::Write::flush(&mut w).map_err(|e| Error::io(path, e))
}

/// Parameters plus the version hash of the exact file contents.
pub fn load_weights(path: &Path) -> Result<(ModelParams, String)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let params = decode(path, &bytes)?;
    Ok((params, version_hash(&bytes)))
}

/// First 16 hex digits of the SHA-256 of a weight file image.
pub fn version_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes)[..8].iter().map(|b| format!("{b:02x}")).collect()
}
