//! On-disk index snapshots.
//!
//! A snapshot directory holds `manifest.json` (versions, sizes, encoder
//! binding, SHA-256 checksums), `postings.bin`, `vectors.tvec` in the packed
//! corpus format, `metadata.jsonl` with ids and metadata in ordinal order,
//! and `codebook.json` for subvector encoders. Vectors are stored as `f32`
//! and stay on disk after opening; rerank reads only the rows it needs.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::postings::{read_postings, write_postings};
use super::{Index, VectorStore};
use crate::corpus::{read_sidecar, write_packed_vectors, write_sidecar};
use crate::encoder::{load_codebook, save_codebook, Encoder, EncoderDesc, RoundingConfig};
use crate::{Error, Result};

pub const SNAPSHOT_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";
const POSTINGS: &str = "postings.bin";
const VECTORS: &str = "vectors.tvec";
const METADATA: &str = "metadata.jsonl";
const CODEBOOK: &str = "codebook.json";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format_version: u32,
    n: usize,
    d: usize,
    encoder: EncoderDesc,
    token_count: usize,
    files: BTreeMap<String, FileEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileEntry {
    bytes: u64,
    sha256: String,
}

fn checksum(path: &Path) -> Result<FileEntry> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let read = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if read == 0 {
            break;
        }
        bytes += read as u64;
        hasher.update(&buf[..read]);
    }
    Ok(FileEntry {
        bytes,
        sha256: hex::encode(hasher.finalize()),
    })
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    body(&mut out)?;
    out.flush().map_err(|e| Error::io(path, e))
}

impl Index {
    /// Writes the index to `dir`, creating it if needed.
    pub fn snapshot(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let postings_path = dir.join(POSTINGS);
        write_file(&postings_path, |out| {
            let mut entries: Vec<_> = self.tokens().collect();
            entries.sort_unstable_by_key(|(t, _)| *t);
            write_postings(out, entries).map_err(|e| Error::io(&postings_path, e))
        })?;

        let vectors_path = dir.join(VECTORS);
        write_file(&vectors_path, |out| {
            let mut rows = Vec::with_capacity(self.len() * self.dimension);
            let mut scratch = Vec::new();
            for ordinal in 0..self.len() {
                rows.extend_from_slice(self.vectors.get(ordinal, &mut scratch)?);
            }
            let iter = rows
                .chunks_exact(self.dimension)
                .zip(&self.ids)
                .map(|(v, id)| (id.as_str(), v));
            write_packed_vectors(out, self.dimension, iter)
        })?;

        let metadata_path = dir.join(METADATA);
        write_file(&metadata_path, |out| {
            write_sidecar(out, self.ids.iter().map(String::as_str).zip(&self.metadata))
                .map_err(|e| Error::io(&metadata_path, e))
        })?;

        let mut files = BTreeMap::new();
        files.insert("postings".to_string(), checksum(&postings_path)?);
        files.insert("vectors".to_string(), checksum(&vectors_path)?);
        files.insert("metadata".to_string(), checksum(&metadata_path)?);
        if let Encoder::Subvector(codebook) = &self.encoder {
            let path = dir.join(CODEBOOK);
            save_codebook(codebook, &path)?;
            files.insert("codebook".to_string(), checksum(&path)?);
        }

        let manifest = Manifest {
            format_version: SNAPSHOT_VERSION,
            n: self.len(),
            d: self.dimension,
            encoder: self.encoder.describe(),
            token_count: self.token_count(),
            files,
        };
        let manifest_path = dir.join(MANIFEST);
        write_file(&manifest_path, |out| {
            serde_json::to_writer_pretty(&mut *out, &manifest)
                .map_err(|e| Error::io(&manifest_path, e.into()))
        })
    }

    /// Opens a snapshot written by [`Index::snapshot`], verifying checksums.
    /// Vectors remain file-backed.
    pub fn open_snapshot(dir: impl AsRef<Path>) -> Result<Index> {
        let dir = dir.as_ref();
        let manifest_path = dir.join(MANIFEST);
        let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let raw: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::corrupted(MANIFEST, e))?;
        let version = raw.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0);
        if version != SNAPSHOT_VERSION as u64 {
            return Err(Error::VersionMismatch {
                what: "snapshot",
                found: version,
                expected: SNAPSHOT_VERSION as u64,
            });
        }
        let manifest: Manifest = serde_json::from_value(raw).map_err(|e| Error::corrupted(MANIFEST, e))?;

        let verified = |key: &str, name: &str| -> Result<std::path::PathBuf> {
            let path = dir.join(name);
            let expected = manifest
                .files
                .get(key)
                .ok_or_else(|| Error::corrupted(MANIFEST, format!("no entry for {key}")))?;
            let actual = checksum(&path)?;
            if actual.bytes != expected.bytes || actual.sha256 != expected.sha256 {
                return Err(Error::Checksum(name.to_string()));
            }
            Ok(path)
        };

        let encoder = match &manifest.encoder {
            EncoderDesc::Rounding { p, m } => Encoder::Rounding(RoundingConfig::new(*p, *m)),
            EncoderDesc::Subvector { .. } => {
                let codebook = load_codebook(verified("codebook", CODEBOOK)?)?;
                let encoder = Encoder::subvector(codebook);
                if encoder.describe() != manifest.encoder {
                    return Err(Error::corrupted(CODEBOOK, "codebook does not match the manifest"));
                }
                encoder
            }
        };
        encoder.check_dimension(manifest.d)?;

        let postings_path = verified("postings", POSTINGS)?;
        let bytes = fs::read(&postings_path).map_err(|e| Error::io(&postings_path, e))?;
        let postings = read_postings(&bytes, manifest.n)?;
        if postings.len() != manifest.token_count {
            return Err(Error::corrupted(
                POSTINGS,
                format!("{} tokens, manifest says {}", postings.len(), manifest.token_count),
            ));
        }

        let records = read_sidecar(&verified("metadata", METADATA)?)?;
        if records.len() != manifest.n {
            return Err(Error::corrupted(
                METADATA,
                format!("{} records, manifest says {}", records.len(), manifest.n),
            ));
        }

        let vectors = VectorStore::open_file(&verified("vectors", VECTORS)?)?;
        if vectors.len() != manifest.n || vectors.dimension() != manifest.d {
            return Err(Error::corrupted(VECTORS, "shape does not match the manifest"));
        }

        let (ids, metadata) = records.into_iter().map(|r| (r.id, r.metadata)).unzip();
        Ok(Index::assemble(manifest.d, encoder, postings, vectors, ids, metadata))
    }
}
