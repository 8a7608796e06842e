//! Ordinal-addressed forward vector storage.

use std::fs::File;
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use crate::corpus::{PackedHeader, PACKED_HEADER_LEN};
use crate::{Error, Result};

/// Fixed-stride vector rows, either resident or read on demand from a
/// packed vectors file.
#[derive(Debug)]
pub struct VectorStore {
    dimension: usize,
    rows: usize,
    backing: Backing,
    rows_read: AtomicU64,
}

#[derive(Debug)]
enum Backing {
    Memory(Vec<f64>),
    File { path: PathBuf, file: File },
}

impl VectorStore {
    pub fn in_memory(dimension: usize, data: Vec<f64>) -> Self {
        assert!(dimension > 0 && data.len().is_multiple_of(dimension));
        Self {
            dimension,
            rows: data.len() / dimension,
            backing: Backing::Memory(data),
            rows_read: AtomicU64::new(0),
        }
    }

    /// Opens a packed vectors file without loading its body.
    pub fn open_file(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
        let header = PackedHeader::read(&mut &file)?;
        if len != PACKED_HEADER_LEN + header.body_len() {
            return Err(Error::corrupted(
                path.display().to_string(),
                format!("file is {len} bytes, header promises {}", PACKED_HEADER_LEN + header.body_len()),
            ));
        }
        Ok(Self {
            dimension: header.dimension as usize,
            rows: header.rows as usize,
            backing: Backing::File {
                path: path.to_path_buf(),
                file,
            },
            rows_read: AtomicU64::new(0),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn is_resident(&self) -> bool {
        matches!(self.backing, Backing::Memory(_))
    }

    /// Number of rows fetched through [`VectorStore::get`] so far.
    pub fn rows_read(&self) -> u64 {
        self.rows_read.load(Ordering::Relaxed)
    }

    /// Row `ordinal`. File-backed stores decode into `scratch`.
    pub fn get<'a>(&'a self, ordinal: usize, scratch: &'a mut Vec<f64>) -> Result<&'a [f64]> {
        if ordinal >= self.rows {
            return Err(Error::InvalidParameter(format!(
                "ordinal {ordinal} out of range for {} rows",
                self.rows
            )));
        }
        self.rows_read.fetch_add(1, Ordering::Relaxed);
        match &self.backing {
            Backing::Memory(data) => Ok(&data[ordinal * self.dimension..(ordinal + 1) * self.dimension]),
            Backing::File { path, file } => {
                let mut raw = vec![0u8; self.dimension * 4];
                let offset = PACKED_HEADER_LEN + (ordinal * self.dimension * 4) as u64;
                file.read_exact_at(&mut raw, offset).map_err(|e| Error::io(path, e))?;
                scratch.clear();
                scratch.extend(
                    raw.chunks_exact(4)
                        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64),
                );
                Ok(scratch.as_slice())
            }
        }
    }
}
