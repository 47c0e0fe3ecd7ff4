//! Binary cache for eigendecompositions.
//!
//! Layout, all little-endian: `"FLSE"`, version `u32`, `n u32`, `d u32`,
//! `eps f64`, kernel tag `u8`, seed `u64`, then `n` eigenvalues and the
//! `n × n` eigenvector matrix column-major.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spectral::SpectralDecomposition;

pub const CACHE_MAGIC: &[u8; 4] = b"FLSE";
pub const CACHE_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8 + 1 + 8;

/// Provenance stored ahead of the payload.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheHeader {
    pub n: u32,
    pub d: u32,
    pub eps: f64,
    pub kernel_tag: u8,
    pub seed: u64,
}

impl CacheHeader {
    /// Field-wise equality with `eps` compared bitwise.
    pub fn matches(&self, other: &CacheHeader) -> bool {
        self.n == other.n
            && self.d == other.d
            && self.eps.to_bits() == other.eps.to_bits()
            && self.kernel_tag == other.kernel_tag
            && self.seed == other.seed
    }
}

pub fn encode_cache(header: &CacheHeader, spec: &SpectralDecomposition) -> Result<Vec<u8>> {
    let n = spec.len();
    if header.n as usize != n {
        return Err(Error::Cache(format!("header says n = {}, decomposition has {n}", header.n)));
    }
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * (n + n * n));
    buf.extend_from_slice(CACHE_MAGIC);
    buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    buf.extend_from_slice(&header.n.to_le_bytes());
    buf.extend_from_slice(&header.d.to_le_bytes());
    buf.extend_from_slice(&header.eps.to_le_bytes());
    buf.push(header.kernel_tag);
    buf.extend_from_slice(&header.seed.to_le_bytes());
    for v in spec.eigenvalues() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    // nalgebra storage is column-major already
    for v in spec.eigenvectors().as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(buf)
}

fn take<const N: usize>(bytes: &[u8], at: &mut usize) -> [u8; N] {
    let out = bytes[*at..*at + N].try_into().expect("length checked");
    *at += N;
    out
}

pub fn decode_cache(bytes: &[u8]) -> Result<(CacheHeader, SpectralDecomposition)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Cache(format!(
            "truncated header: expected {HEADER_LEN} bytes, found {}",
            bytes.len()
        )));
    }
    if &bytes[..4] != CACHE_MAGIC {
        return Err(Error::Cache(format!("bad magic {:?}", &bytes[..4])));
    }
    let mut at = 4;
    let version = u32::from_le_bytes(take(bytes, &mut at));
    if version != CACHE_VERSION {
        return Err(Error::Cache(format!(
            "unsupported format version {version} (expected {CACHE_VERSION})"
        )));
    }
    let header = CacheHeader {
        n: u32::from_le_bytes(take(bytes, &mut at)),
        d: u32::from_le_bytes(take(bytes, &mut at)),
        eps: f64::from_le_bytes(take(bytes, &mut at)),
        kernel_tag: take::<1>(bytes, &mut at)[0],
        seed: u64::from_le_bytes(take(bytes, &mut at)),
    };
    let n = header.n as usize;
    let expected = n
        .checked_mul(n)
        .and_then(|nn| nn.checked_add(n))
        .and_then(|c| c.checked_mul(8))
        .and_then(|c| c.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Cache(format!("n = {n} is too large")))?;
    if bytes.len() != expected {
        let what = if bytes.len() < expected { "truncated" } else { "trailing data" };
        return Err(Error::Cache(format!(
            "{what}: expected {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let mut floats = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")));
    let eigenvalues: Vec<f64> = floats.by_ref().take(n).collect();
    let eigenvectors = DMatrix::from_iterator(n, n, floats);
    let spec = SpectralDecomposition::from_parts(eigenvalues, eigenvectors)
        .map_err(|e| Error::Cache(format!("invalid payload: {e}")))?;
    Ok((header, spec))
}

pub fn write_cache(path: impl AsRef<Path>, header: &CacheHeader, spec: &SpectralDecomposition) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_cache(header, spec)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_cache(path: impl AsRef<Path>) -> Result<(CacheHeader, SpectralDecomposition)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_cache(&bytes)
}

/// Writes then reads back.
pub fn cache_roundtrip(
    spec: &SpectralDecomposition,
    header: &CacheHeader,
    path: impl AsRef<Path>,
) -> Result<SpectralDecomposition> {
    write_cache(&path, header, spec)?;
    read_cache(&path).map(|(_, s)| s)
}
