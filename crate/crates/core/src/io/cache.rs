//! On-disk cache of dense numerical arrays.
//!
//! Layout of a cache file, all integers little-endian:
//! `b"TWODISK\0"`, format version `u32`, sha256 of the cache key (32 bytes),
//! kind tag `u32`, element count `u64`, the `f64` payload, then the sha256
//! of every preceding byte. A file that fails any check is reported as
//! corrupt and the caller recomputes.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use log::{debug, warn};
use nalgebra::DMatrix;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::assembly::{AsymmetryResidual, MatrixTriple};
use crate::basis::{hex, BasisSet, Exclusion};
use crate::error::{Error, Result};
use crate::special::GridSpec;

const MAGIC: &[u8; 8] = b"TWODISK\0";
pub const FORMAT_VERSION: u32 = 1;
pub const CACHE_DIR_ENV: &str = "TWODISK_CACHE_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u32)]
pub enum BlobKind {
    Matrices = 1,
    Coefficients = 2,
}

pub fn key_digest<K: Serialize>(key: &K) -> [u8; 32] {
    let json = serde_json::to_vec(key).expect("cache keys serialize");
    Sha256::digest(&json).into()
}

pub fn encode(kind: BlobKind, digest: &[u8; 32], payload: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 4 + 32 + 4 + 8 + 8 * payload.len() + 32);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(digest);
    out.extend_from_slice(&(kind as u32).to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    for x in payload {
        out.extend_from_slice(&x.to_le_bytes());
    }
    let check = Sha256::digest(&out);
    out.extend_from_slice(&check);
    out
}

pub fn decode(bytes: &[u8], kind: BlobKind, digest: &[u8; 32]) -> Result<Vec<f64>> {
    let corrupt = |why: &str| Error::CacheCorrupt(why.to_string());
    let header = 8 + 4 + 32 + 4 + 8;
    if bytes.len() < header + 32 {
        return Err(corrupt("truncated header"));
    }
    let (body, check) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != check {
        return Err(corrupt("checksum mismatch"));
    }
    if &body[..8] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u32::from_le_bytes(body[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(corrupt(&format!("format version {version}, expected {FORMAT_VERSION}")));
    }
    if &body[12..44] != digest {
        return Err(corrupt("key digest mismatch"));
    }
    if u32::from_le_bytes(body[44..48].try_into().unwrap()) != kind as u32 {
        return Err(corrupt("wrong blob kind"));
    }
    let count = u64::from_le_bytes(body[48..56].try_into().unwrap()) as usize;
    let data = &body[header..];
    if data.len() != 8 * count {
        return Err(corrupt("payload length mismatch"));
    }
    Ok(data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

/// Everything that determines an assembled block.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixKey {
    pub sigma: f64,
    pub exclusion: Exclusion,
    pub l_z: i32,
    pub m: usize,
    pub k_max: u32,
    pub n_max: u32,
    pub grid: GridSpec,
    pub hermiticity: String,
}

pub struct Cache {
    root: PathBuf,
    corrupt_seen: AtomicUsize,
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root, corrupt_seen: AtomicUsize::new(0) })
    }

    /// `$TWODISK_CACHE_DIR` when set, otherwise `fallback`.
    pub fn from_env_or(fallback: impl AsRef<Path>) -> Result<Self> {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(dir) => Self::new(PathBuf::from(dir)),
            None => Self::new(fallback.as_ref()),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Number of corrupt entries met (and replaced) so far.
    pub fn corrupt_count(&self) -> usize {
        self.corrupt_seen.load(Ordering::Relaxed)
    }

    fn path(&self, kind: BlobKind, digest: &[u8; 32]) -> PathBuf {
        let prefix = match kind {
            BlobKind::Matrices => "mat",
            BlobKind::Coefficients => "coef",
        };
        self.root.join(format!("{prefix}-{}.bin", hex(&digest[..16])))
    }

    pub fn load(&self, kind: BlobKind, digest: &[u8; 32]) -> Option<Vec<f64>> {
        let path = self.path(kind, digest);
        let bytes = fs::read(&path).ok()?;
        match decode(&bytes, kind, digest) {
            Ok(v) => {
                debug!("cache hit {}", path.display());
                Some(v)
            }
            Err(e) => {
                warn!("discarding cache entry {}: {e}", path.display());
                self.corrupt_seen.fetch_add(1, Ordering::Relaxed);
                None
            }
        }
    }

    pub fn store(&self, kind: BlobKind, digest: &[u8; 32], payload: &[f64]) -> Result<()> {
        let path = self.path(kind, digest);
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, encode(kind, digest, payload))?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    pub fn load_matrices(&self, key: &MatrixKey, basis: &BasisSet) -> Option<MatrixTriple> {
        let dim = basis.len();
        let data = self.load(BlobKind::Matrices, &key_digest(key))?;
        if data.len() != 3 * dim * dim + 4 {
            warn!("cached block has the wrong size; recomputing");
            self.corrupt_seen.fetch_add(1, Ordering::Relaxed);
            return None;
        }
        let block = |i: usize| DMatrix::from_column_slice(dim, dim, &data[i * dim * dim..(i + 1) * dim * dim]);
        let tail = &data[3 * dim * dim..];
        Some(MatrixTriple {
            h: block(0),
            n: block(1),
            d: block(2),
            asymmetry: AsymmetryResidual { h: tail[0], n: tail[1], d: tail[2], pairs_checked: tail[3] as usize },
            basis: basis.clone(),
            exclusion: key.exclusion,
            grid: key.grid,
        })
    }

    pub fn store_matrices(&self, key: &MatrixKey, mats: &MatrixTriple) -> Result<()> {
        let mut payload = Vec::with_capacity(3 * mats.h.len() + 4);
        for m in [&mats.h, &mats.n, &mats.d] {
            payload.extend_from_slice(m.as_slice());
        }
        let a = mats.asymmetry;
        payload.extend_from_slice(&[a.h, a.n, a.d, a.pairs_checked as f64]);
        self.store(BlobKind::Matrices, &key_digest(key), &payload)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_corruption_detection() {
        let digest = key_digest(&("k", 1));
        let payload = vec![1.5, -2.0, f64::MIN_POSITIVE, 0.1];
        let bytes = encode(BlobKind::Coefficients, &digest, &payload);
        assert_eq!(decode(&bytes, BlobKind::Coefficients, &digest).unwrap(), payload);

        let mut flipped = bytes.clone();
        flipped[60] ^= 1;
        assert!(matches!(decode(&flipped, BlobKind::Coefficients, &digest), Err(Error::CacheCorrupt(_))));
        assert!(decode(&bytes[..bytes.len() - 1], BlobKind::Coefficients, &digest).is_err());
        assert!(decode(&bytes, BlobKind::Matrices, &digest).is_err());
        assert!(decode(&bytes, BlobKind::Coefficients, &key_digest(&("k", 2))).is_err());
    }

    #[test]
    fn corrupt_file_is_counted_and_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path()).unwrap();
        let digest = key_digest(&"x");
        cache.store(BlobKind::Coefficients, &digest, &[1.0, 2.0]).unwrap();
        assert_eq!(cache.load(BlobKind::Coefficients, &digest), Some(vec![1.0, 2.0]));
        let path = cache.path(BlobKind::Coefficients, &digest);
        let mut bytes = fs::read(&path).unwrap();
        let last = bytes.len() - 40;
        bytes[last] ^= 0xff;
        fs::write(&path, bytes).unwrap();
        assert_eq!(cache.load(BlobKind::Coefficients, &digest), None);
        assert_eq!(cache.corrupt_count(), 1);
    }
}
