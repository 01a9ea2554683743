//! On-disk spectrum cache.
//!
//! Layout: `<root>/<model>/<hash>/{meta.json, evals.bin, evecs.bin}` where
//! `hash` is the SHA-256 of a canonical parameter key. Both binary files are
//! little-endian `f64`; complex entries are interleaved `re, im` and every
//! block is stored column-major. `meta.json` carries the key, the block
//! layout and the SHA-256 of both payloads, which is checked on load.
//!
//! Entries are written into a temporary sibling directory and renamed into
//! place, so concurrent writers never expose a half-written entry.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::spectra::{ModelParams, SectorBlock, SectorVectors, SpectralBasis};
use crate::spin::Parity;

/// Bumped whenever the way spectra are computed or stored changes.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum VectorKind {
    Identity,
    Real,
    Complex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BlockMeta {
    parity: Option<Parity>,
    indices: Vec<usize>,
    vectors: VectorKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Meta {
    key: String,
    format_version: u32,
    params: ModelParams,
    dim: usize,
    blocks: Vec<BlockMeta>,
    evals_sha256: String,
    /// `None` when only eigenvalues were stored.
    evecs_sha256: Option<String>,
}

/// Parity-split spectrum cache rooted at a directory.
#[derive(Debug, Clone)]
pub struct SpectrumCache {
    root: PathBuf,
    /// Largest dimension for which eigenvectors are written.
    pub max_vector_dim: usize,
}

/// What a cache lookup produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Cached {
    /// Eigenvalues and eigenvectors.
    Full(SpectralBasis),
    /// Eigenvalues per block only; vectors must be recomputed.
    EigenvaluesOnly(Vec<(Option<Parity>, Vec<f64>)>),
}

fn f64_key(x: f64) -> String {
    // Exact bits, so that 0.84 and 0.8400000000000001 differ.
    format!("{x:?}")
}

/// Canonical key for a parity-split solve of `params`.
pub fn cache_key(params: &ModelParams) -> String {
    format!(
        "model={};alpha={};k={};J={};split=parity;format={}",
        params.model,
        f64_key(params.alpha),
        f64_key(params.k),
        params.j,
        FORMAT_VERSION
    )
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn push_f64(buf: &mut Vec<u8>, x: f64) {
    buf.extend_from_slice(&x.to_le_bytes());
}

fn read_f64s(bytes: &[u8]) -> impl Iterator<Item = f64> + '_ {
    bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
}

impl SpectrumCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            max_vector_dim: 4001,
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entry_dir(&self, params: &ModelParams) -> PathBuf {
        let key = cache_key(params);
        self.root.join(params.model.name()).join(sha256_hex(key.as_bytes()))
    }

    /// Loads an entry; `Ok(None)` when absent, `CacheCorruption` when the
    /// entry exists but fails its checks.
    pub fn load(&self, params: &ModelParams) -> Result<Option<Cached>> {
        let dir = self.entry_dir(params);
        let meta_path = dir.join("meta.json");
        if !meta_path.exists() {
            return Ok(None);
        }
        let corrupt = |reason: String| Error::CacheCorruption {
            path: dir.clone(),
            reason,
        };
        let meta: Meta = serde_json::from_slice(&fs::read(&meta_path)?)
            .map_err(|e| corrupt(format!("unreadable meta.json: {e}")))?;
        let key = cache_key(params);
        if meta.key != key {
            return Err(corrupt(format!("key mismatch: stored '{}', wanted '{key}'", meta.key)));
        }
        let evals = fs::read(dir.join("evals.bin")).map_err(|e| corrupt(format!("evals.bin: {e}")))?;
        if sha256_hex(&evals) != meta.evals_sha256 {
            return Err(corrupt("evals.bin content hash mismatch".into()));
        }
        let total: usize = meta.blocks.iter().map(|b| b.indices.len()).sum();
        if evals.len() != 8 * total || total != meta.dim {
            return Err(corrupt(format!("expected {} eigenvalues, found {} bytes", meta.dim, evals.len())));
        }
        let mut values = read_f64s(&evals);
        let block_values: Vec<Vec<f64>> = meta
            .blocks
            .iter()
            .map(|b| values.by_ref().take(b.indices.len()).collect())
            .collect();

        let Some(evecs_hash) = &meta.evecs_sha256 else {
            return Ok(Some(Cached::EigenvaluesOnly(
                meta.blocks.iter().map(|b| b.parity).zip(block_values).collect(),
            )));
        };
        let evecs = fs::read(dir.join("evecs.bin")).map_err(|e| corrupt(format!("evecs.bin: {e}")))?;
        if &sha256_hex(&evecs) != evecs_hash {
            return Err(corrupt("evecs.bin content hash mismatch".into()));
        }
        let expected: usize = meta
            .blocks
            .iter()
            .map(|b| {
                let n = b.indices.len();
                match b.vectors {
                    VectorKind::Identity => 0,
                    VectorKind::Real => 8 * n * n,
                    VectorKind::Complex => 16 * n * n,
                }
            })
            .sum();
        if evecs.len() != expected {
            return Err(corrupt(format!("evecs.bin has {} bytes, expected {expected}", evecs.len())));
        }
        let mut data = read_f64s(&evecs);
        let mut blocks = Vec::with_capacity(meta.blocks.len());
        for (b, eigenvalues) in meta.blocks.iter().zip(block_values) {
            let n = b.indices.len();
            let vectors = match b.vectors {
                VectorKind::Identity => SectorVectors::Identity,
                VectorKind::Real => SectorVectors::Real(DMatrix::from_iterator(n, n, data.by_ref().take(n * n))),
                VectorKind::Complex => {
                    let flat: Vec<f64> = data.by_ref().take(2 * n * n).collect();
                    SectorVectors::Complex(DMatrix::from_iterator(
                        n,
                        n,
                        flat.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])),
                    ))
                }
            };
            blocks.push(SectorBlock {
                parity: b.parity,
                indices: b.indices.clone(),
                eigenvalues,
                vectors,
            });
        }
        Ok(Some(Cached::Full(SpectralBasis {
            params: Some(meta.params),
            space: meta.params.space(),
            blocks,
        })))
    }

    /// Writes an entry, replacing any existing one. Eigenvectors are omitted
    /// above `max_vector_dim`.
    pub fn store(&self, params: &ModelParams, basis: &SpectralBasis) -> Result<PathBuf> {
        let with_vectors = basis.dim() <= self.max_vector_dim;
        let mut evals = Vec::with_capacity(8 * basis.dim());
        for b in &basis.blocks {
            for &e in &b.eigenvalues {
                push_f64(&mut evals, e);
            }
        }
        let mut evecs = Vec::new();
        if with_vectors {
            for b in &basis.blocks {
                match &b.vectors {
                    SectorVectors::Identity => {}
                    SectorVectors::Real(v) => v.iter().for_each(|&x| push_f64(&mut evecs, x)),
                    SectorVectors::Complex(v) => v.iter().for_each(|z| {
                        push_f64(&mut evecs, z.re);
                        push_f64(&mut evecs, z.im);
                    }),
                }
            }
        }
        let meta = Meta {
            key: cache_key(params),
            format_version: FORMAT_VERSION,
            params: *params,
            dim: basis.dim(),
            blocks: basis
                .blocks
                .iter()
                .map(|b| BlockMeta {
                    parity: b.parity,
                    indices: b.indices.clone(),
                    vectors: match b.vectors {
                        SectorVectors::Identity => VectorKind::Identity,
                        SectorVectors::Real(_) => VectorKind::Real,
                        SectorVectors::Complex(_) => VectorKind::Complex,
                    },
                })
                .collect(),
            evals_sha256: sha256_hex(&evals),
            evecs_sha256: with_vectors.then(|| sha256_hex(&evecs)),
        };

        let dest = self.entry_dir(params);
        let parent = dest.parent().expect("entry has a parent");
        fs::create_dir_all(parent)?;
        let tmp = parent.join(format!(
            ".tmp-{}-{}-{:?}",
            dest.file_name().unwrap().to_string_lossy(),
            std::process::id(),
            std::thread::current().id()
        ));
        if tmp.exists() {
            fs::remove_dir_all(&tmp)?;
        }
        fs::create_dir(&tmp)?;
        fs::write(tmp.join("evals.bin"), &evals)?;
        if with_vectors {
            fs::write(tmp.join("evecs.bin"), &evecs)?;
        }
        fs::write(tmp.join("meta.json"), serde_json::to_vec_pretty(&meta)?)?;
        if dest.exists() {
            fs::remove_dir_all(&dest)?;
        }
        if let Err(e) = fs::rename(&tmp, &dest) {
            // Another writer got there first; its content is equivalent.
            let _ = fs::remove_dir_all(&tmp);
            if !dest.join("meta.json").exists() {
                return Err(e.into());
            }
        }
        Ok(dest)
    }

    /// Removes an entry if present.
    pub fn evict(&self, params: &ModelParams) -> Result<()> {
        let dir = self.entry_dir(params);
        if dir.exists() {
            fs::remove_dir_all(dir)?;
        }
        Ok(())
    }
}
