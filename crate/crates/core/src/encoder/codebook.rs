use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans, nearest_centroid, KMeansParams};
use super::TokenSet;
use crate::corpus::Corpus;
use crate::{Error, Result};

pub const CODEBOOK_VERSION: u32 = 1;

/// Per-position k-means centroids for the subvector encoder.
///
/// Position `i` covers entries `i * d/m .. (i + 1) * d/m` of a vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    dimension: usize,
    positions: usize,
    clusters: usize,
    /// One flat `clusters * (dimension / positions)` block per position.
    centroids: Vec<Vec<f64>>,
    training_seed: u64,
}

impl Codebook {
    /// Builds a codebook from `centroids[position][cluster][entry]`.
    pub fn new(
        dimension: usize,
        positions: usize,
        clusters: usize,
        centroids: Vec<Vec<Vec<f64>>>,
        training_seed: u64,
    ) -> Result<Self> {
        check_divisible(dimension, positions)?;
        if clusters == 0 {
            return Err(Error::InvalidParameter("codebook needs at least one cluster".into()));
        }
        if centroids.len() != positions {
            return Err(Error::InvalidParameter(format!(
                "expected centroids for {positions} positions, got {}",
                centroids.len()
            )));
        }
        let width = dimension / positions;
        let mut flat = Vec::with_capacity(positions);
        for (position, list) in centroids.into_iter().enumerate() {
            if list.len() != clusters {
                return Err(Error::InvalidParameter(format!(
                    "position {} has {} centroids, expected {clusters}",
                    position + 1,
                    list.len()
                )));
            }
            let mut block = Vec::with_capacity(clusters * width);
            for centroid in list {
                if centroid.len() != width {
                    return Err(Error::InvalidParameter(format!(
                        "position {} has a centroid of length {}, expected {width}",
                        position + 1,
                        centroid.len()
                    )));
                }
                if centroid.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "position {} has a non-finite centroid entry",
                        position + 1
                    )));
                }
                block.extend(centroid);
            }
            flat.push(block);
        }
        Ok(Self {
            dimension,
            positions,
            clusters,
            centroids: flat,
            training_seed,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn positions(&self) -> usize {
        self.positions
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn training_seed(&self) -> u64 {
        self.training_seed
    }

    pub fn subvector_len(&self) -> usize {
        self.dimension / self.positions
    }

    /// Centroid `cluster` (0-based) of `position` (0-based).
    pub fn centroid(&self, position: usize, cluster: usize) -> &[f64] {
        let width = self.subvector_len();
        &self.centroids[position][cluster * width..(cluster + 1) * width]
    }

    /// 0-based nearest centroid of a subvector at `position`; ties go to the lowest index.
    pub fn assign(&self, position: usize, subvector: &[f64]) -> usize {
        nearest_centroid(subvector, &self.centroids[position]).0
    }

    pub fn check_dimension(&self, dimension: usize) -> Result<()> {
        if dimension != self.dimension {
            return Err(Error::DimensionMismatch {
                id: "<codebook>".into(),
                expected: self.dimension,
                actual: dimension,
            });
        }
        Ok(())
    }

    fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        let width = self.subvector_len();
        self.centroids
            .iter()
            .map(|block| block.chunks_exact(width).map(<[f64]>::to_vec).collect())
            .collect()
    }
}

fn check_divisible(dimension: usize, positions: usize) -> Result<()> {
    if positions == 0 || dimension == 0 || !dimension.is_multiple_of(positions) {
        return Err(Error::Indivisible {
            dimension,
            positions,
        });
    }
    Ok(())
}

/// `pos{i}cluster{j}` for each of the `m` positions, both 1-based.
pub fn encode_subvector(values: &[f64], codebook: &Codebook) -> Result<TokenSet> {
    codebook.check_dimension(values.len())?;
    let tokens = values
        .chunks_exact(codebook.subvector_len())
        .enumerate()
        .map(|(position, sub)| {
            format!("pos{}cluster{}", position + 1, codebook.assign(position, sub) + 1)
        })
        .collect();
    Ok(TokenSet::from_ordered(tokens))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingOptions {
    /// Train on at most this many vectors, sampled uniformly without replacement.
    pub sample_cap: usize,
}

impl Default for TrainingOptions {
    fn default() -> Self {
        Self {
            sample_cap: 100_000,
        }
    }
}

/// Runs k-means independently on each position's subvectors.
pub fn train_codebook(
    corpus: &Corpus,
    positions: usize,
    params: &KMeansParams,
    options: &TrainingOptions,
) -> Result<Codebook> {
    let dimension = corpus.dimension();
    check_divisible(dimension, positions)?;
    if options.sample_cap == 0 {
        return Err(Error::InvalidParameter("sample cap must be positive".into()));
    }
    let n = corpus.len();
    let rows: Vec<usize> = if n > options.sample_cap {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut picked = rand::seq::index::sample(&mut rng, n, options.sample_cap).into_vec();
        picked.sort_unstable();
        picked
    } else {
        (0..n).collect()
    };
    if rows.len() < params.k {
        return Err(Error::InsufficientPoints {
            required: params.k,
            available: rows.len(),
        });
    }

    let width = dimension / positions;
    let blocks = (0..positions)
        .into_par_iter()
        .map(|position| {
            let mut data = Vec::with_capacity(rows.len() * width);
            for &row in &rows {
                let values = &corpus.documents()[row].vector.values;
                data.extend_from_slice(&values[position * width..(position + 1) * width]);
            }
            let position_params = KMeansParams {
                seed: position_seed(params.seed, position),
                ..params.clone()
            };
            let result = kmeans(&data, width, &position_params)?;
            tracing::debug!(
                position = position + 1,
                objective = result.objective,
                iterations = result.history.len() - 1,
                "trained codebook position"
            );
            Ok(result.centroids)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Codebook {
        dimension,
        positions,
        clusters: params.k,
        centroids: blocks,
        training_seed: params.seed,
    })
}

fn position_seed(seed: u64, position: usize) -> u64 {
    seed ^ (position as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodebookFile {
    version: u32,
    d: usize,
    m: usize,
    k: usize,
    seed: u64,
    centroids: Vec<Vec<Vec<f64>>>,
}

pub fn save_codebook(codebook: &Codebook, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = CodebookFile {
        version: CODEBOOK_VERSION,
        d: codebook.dimension,
        m: codebook.positions,
        k: codebook.clusters,
        seed: codebook.training_seed,
        centroids: codebook.to_nested(),
    };
    let mut out = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    serde_json::to_writer(&mut out, &file).map_err(|e| Error::io(path, e.into()))?;
    out.write_all(b"\n")
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_codebook(path: impl AsRef<Path>) -> Result<Codebook> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let value: serde_json::Value = serde_json::from_reader(reader)
        .map_err(|e| Error::corrupted(path.display().to_string(), e))?;
    let version = value.get("version").and_then(|v| v.as_u64());
    if version != Some(CODEBOOK_VERSION as u64) {
        return Err(Error::VersionMismatch {
            what: "codebook",
            found: version.unwrap_or(0),
            expected: CODEBOOK_VERSION as u64,
        });
    }
    let file: CodebookFile =
        serde_json::from_value(value).map_err(|e| Error::corrupted(path.display().to_string(), e))?;
    Codebook::new(file.d, file.m, file.k, file.centroids, file.seed)
}
