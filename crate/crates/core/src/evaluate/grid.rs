use std::fmt;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gold::{brute_force_knn, precision_at_k, GoldStandard};
use crate::corpus::Corpus;
use crate::encoder::{train_codebook, Encoder, KMeansParams, TrainingOptions};
use crate::index::Index;
use crate::search::{search, Query};
use crate::{Error, Result};

/// One encoder configuration of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum EncoderSpec {
    /// `p` decimal places, top `m` entries.
    Rounding { p: u32, m: usize },
    /// `k` clusters per position, `m` positions.
    Subvector { k: usize, m: usize },
}

impl EncoderSpec {
    pub fn scheme(&self) -> &'static str {
        match self {
            EncoderSpec::Rounding { .. } => "rounding",
            EncoderSpec::Subvector { .. } => "subvector",
        }
    }

    /// `p` for rounding, `k` for subvector.
    pub fn param(&self) -> usize {
        match *self {
            EncoderSpec::Rounding { p, .. } => p as usize,
            EncoderSpec::Subvector { k, .. } => k,
        }
    }

    pub fn positions(&self) -> usize {
        match *self {
            EncoderSpec::Rounding { m, .. } | EncoderSpec::Subvector { m, .. } => m,
        }
    }

    pub fn from_parts(scheme: &str, param: usize, m: usize) -> Result<Self> {
        match scheme {
            "rounding" => Ok(EncoderSpec::Rounding {
                p: u32::try_from(param).map_err(|_| Error::InvalidParameter(format!("p = {param}")))?,
                m,
            }),
            "subvector" => Ok(EncoderSpec::Subvector { k: param, m }),
            other => Err(Error::InvalidParameter(format!("unknown scheme `{other}`"))),
        }
    }
}

impl fmt::Display for EncoderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EncoderSpec::Rounding { p, m } => write!(f, "rounding p={p} m={m}"),
            EncoderSpec::Subvector { k, m } => write!(f, "subvector k={k} m={m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub encoders: Vec<EncoderSpec>,
    pub windows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub k_eval: usize,
    /// Leave a corpus-member query out of both its gold standard and its results.
    pub exclude_self: bool,
    /// Seed for codebook training.
    pub seed: u64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub restarts: usize,
    pub training: TrainingOptions,
}

impl Default for EvalOptions {
    fn default() -> Self {
        let kmeans = KMeansParams::new(1, 0);
        Self {
            k_eval: 24,
            exclude_self: true,
            seed: 0,
            max_iterations: kmeans.max_iterations,
            tolerance: kmeans.tolerance,
            restarts: kmeans.restarts,
            training: TrainingOptions::default(),
        }
    }
}

impl EvalOptions {
    pub fn kmeans(&self, k: usize) -> KMeansParams {
        KMeansParams {
            k,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            seed: self.seed,
            restarts: self.restarts,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalQuery {
    pub id: String,
    pub vector: Vec<f64>,
}

/// `count` distinct corpus members drawn uniformly with `seed`.
pub fn sample_queries(corpus: &Corpus, count: usize, seed: u64) -> Result<Vec<EvalQuery>> {
    if count == 0 || count > corpus.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot sample {count} queries from {} documents",
            corpus.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, corpus.len(), count)
        .into_iter()
        .map(|o| {
            let doc = &corpus.documents()[o];
            EvalQuery {
                id: doc.id().to_string(),
                vector: doc.vector.values.clone(),
            }
        })
        .collect())
}

/// Seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
}

impl LatencyStats {
    /// Nearest-rank percentiles.
    pub fn from_samples(samples: &[f64]) -> Self {
        assert!(!samples.is_empty());
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let rank = |q: f64| sorted[((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1];
        Self {
            mean: samples.iter().sum::<f64>() / samples.len() as f64,
            p50: rank(0.50),
            p95: rank(0.95),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatencyStat {
    Mean,
    P50,
    P95,
}

impl LatencyStats {
    pub fn get(&self, stat: LatencyStat) -> f64 {
        match stat {
            LatencyStat::Mean => self.mean,
            LatencyStat::P50 => self.p50,
            LatencyStat::P95 => self.p95,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    Measured {
        mean_precision: f64,
        latency: LatencyStats,
        query_count: usize,
    },
    Skipped {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub encoder: EncoderSpec,
    pub window: usize,
    pub outcome: CellOutcome,
}

impl EvalRecord {
    pub fn mean_precision(&self) -> Option<f64> {
        match self.outcome {
            CellOutcome::Measured { mean_precision, .. } => Some(mean_precision),
            CellOutcome::Skipped { .. } => None,
        }
    }

    pub fn latency(&self) -> Option<LatencyStats> {
        match self.outcome {
            CellOutcome::Measured { latency, .. } => Some(latency),
            CellOutcome::Skipped { .. } => None,
        }
    }
}

/// Builds the encoder for one grid cell, training a codebook when needed.
pub fn build_encoder(corpus: &Corpus, spec: &EncoderSpec, options: &EvalOptions) -> Result<Encoder> {
    let encoder = match *spec {
        EncoderSpec::Rounding { p, m } => Encoder::rounding(p, m),
        EncoderSpec::Subvector { k, m } => {
            Encoder::subvector(train_codebook(corpus, m, &options.kmeans(k), &options.training)?)
        }
    };
    encoder.check_dimension(corpus.dimension())?;
    Ok(encoder)
}

/// Gold standards for every query, computed once and shared by all cells.
pub fn gold_standards(corpus: &Corpus, queries: &[EvalQuery], options: &EvalOptions) -> Result<Vec<GoldStandard>> {
    queries
        .iter()
        .map(|q| brute_force_knn(corpus, &q.id, &q.vector, options.k_eval, options.exclude_self))
        .collect()
}

/// Runs every query against `index` at `window`, timing each full search.
pub fn measure_cell(
    index: &Index,
    queries: &[EvalQuery],
    golds: &[GoldStandard],
    window: usize,
    options: &EvalOptions,
) -> Result<CellOutcome> {
    if window < options.k_eval {
        return Ok(CellOutcome::Skipped {
            reason: format!("window {window} is smaller than k_eval {}", options.k_eval),
        });
    }
    let mut precision_sum = 0.0;
    let mut latencies = Vec::with_capacity(queries.len());
    for (query, gold) in queries.iter().zip(golds) {
        let member = options.exclude_self && index.ordinal_of(&query.id).is_some();
        // A member query finds itself; ask for one extra hit to make room.
        let size = if member {
            (options.k_eval + 1).min(window)
        } else {
            options.k_eval
        };
        let request = Query::new(query.vector.clone(), size, window);
        let started = Instant::now();
        let result = search(index, &request)?;
        latencies.push(started.elapsed().as_secs_f64());

        let retrieved = result
            .hits
            .iter()
            .map(|h| h.id.as_str())
            .filter(|id| !member || *id != query.id)
            .take(options.k_eval);
        precision_sum += precision_at_k(retrieved, gold);
    }
    Ok(CellOutcome::Measured {
        mean_precision: precision_sum / queries.len() as f64,
        latency: LatencyStats::from_samples(&latencies),
        query_count: queries.len(),
    })
}

/// Evaluates every (encoder, window) cell. Encoders that cannot be built for
/// this corpus produce skipped records rather than failing the run.
pub fn run_grid(
    corpus: &Corpus,
    queries: &[EvalQuery],
    grid: &Grid,
    options: &EvalOptions,
) -> Result<Vec<EvalRecord>> {
    if queries.is_empty() || grid.encoders.is_empty() || grid.windows.is_empty() {
        return Err(Error::InvalidParameter(
            "grid evaluation needs queries, encoders and windows".into(),
        ));
    }
    let golds = gold_standards(corpus, queries, options)?;

    let mut records = Vec::with_capacity(grid.encoders.len() * grid.windows.len());
    for spec in &grid.encoders {
        let built = build_encoder(corpus, spec, options).and_then(|encoder| Index::build(corpus, encoder));
        let index = match built {
            Ok(index) => index,
            Err(err @ (Error::Indivisible { .. } | Error::InsufficientPoints { .. } | Error::InvalidParameter(_))) => {
                tracing::warn!(encoder = %spec, error = %err, "skipping grid cell");
                records.extend(grid.windows.iter().map(|&window| EvalRecord {
                    encoder: *spec,
                    window,
                    outcome: CellOutcome::Skipped {
                        reason: err.to_string(),
                    },
                }));
                continue;
            }
            Err(other) => return Err(other),
        };
        for &window in &grid.windows {
            let outcome = measure_cell(&index, queries, &golds, window, options)?;
            if let CellOutcome::Measured { mean_precision, latency, .. } = &outcome {
                tracing::info!(encoder = %spec, window, mean_precision, latency_mean = latency.mean, "grid cell");
            }
            records.push(EvalRecord {
                encoder: *spec,
                window,
                outcome,
            });
        }
    }
    Ok(records)
}
