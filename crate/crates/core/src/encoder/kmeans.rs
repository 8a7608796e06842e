//! Lloyd's k-means with k-means++ seeding.
//!
//! Points are passed as one flat row-major slice. Every run is a pure
//! function of the input and `KMeansParams::seed`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub max_iterations: usize,
    /// Stop once the objective decreases by less than this fraction.
    pub tolerance: f64,
    pub seed: u64,
    /// Independent seeded runs; the lowest objective wins.
    pub restarts: usize,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            max_iterations: 100,
            tolerance: 1e-4,
            seed,
            restarts: 1,
        }
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        if self.max_iterations == 0 || self.restarts == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations and restarts must be positive".into(),
            ));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be a non-negative number, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub dim: usize,
    /// `k * dim` values, row-major.
    pub centroids: Vec<f64>,
    /// 0-based cluster of each point; always a nearest centroid.
    pub assignments: Vec<usize>,
    /// Within-cluster sum of squared distances.
    pub objective: f64,
    /// Objective after each assignment step of the winning run.
    pub history: Vec<f64>,
}

impl KMeansResult {
    pub fn k(&self) -> usize {
        self.centroids.len() / self.dim
    }

    pub fn centroid(&self, cluster: usize) -> &[f64] {
        &self.centroids[cluster * self.dim..(cluster + 1) * self.dim]
    }
}

pub fn kmeans(data: &[f64], dim: usize, params: &KMeansParams) -> Result<KMeansResult> {
    params.validate()?;
    if dim == 0 || !data.len().is_multiple_of(dim) {
        return Err(Error::InvalidParameter(format!(
            "{} values do not form points of dimension {dim}",
            data.len()
        )));
    }
    let n = data.len() / dim;
    if n == 0 || params.k > n {
        return Err(Error::InsufficientPoints {
            required: params.k,
            available: n,
        });
    }
    if let Some(position) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            id: format!("<point {}>", position / dim),
            position: position % dim,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..params.restarts {
        let run = lloyd(data, dim, params, &mut rng);
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn lloyd(data: &[f64], dim: usize, params: &KMeansParams, rng: &mut ChaCha8Rng) -> KMeansResult {
    let k = params.k;
    let mut centroids = seed_plus_plus(data, dim, k, rng);
    let (mut assignments, mut distances) = assign(data, dim, &centroids);
    repair_empty(data, dim, &mut centroids, &mut assignments, &mut distances);
    let mut current = distances.iter().sum::<f64>();
    let mut history = vec![current];

    for _ in 0..params.max_iterations {
        let updated = update(data, dim, k, &assignments);
        let (mut next, mut next_distances) = assign(data, dim, &updated);
        let mut candidate = updated;
        repair_empty(data, dim, &mut candidate, &mut next, &mut next_distances);
        let value = next_distances.iter().sum::<f64>();
        let unchanged = next == assignments;

        centroids = candidate;
        assignments = next;
        let previous = current;
        current = value;
        history.push(current);

        if unchanged || current == 0.0 || (previous - current) < params.tolerance * previous {
            break;
        }
    }

    KMeansResult {
        dim,
        centroids,
        assignments,
        objective: current,
        history,
    }
}

/// k-means++: the first center uniformly, then each next one with
/// probability proportional to the squared distance to the nearest center.
fn seed_plus_plus(data: &[f64], dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = data.len() / dim;
    let point = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(point(first));

    let mut nearest: Vec<f64> = (0..n).map(|i| squared_distance(point(i), point(first))).collect();
    for _ in 1..k {
        let total: f64 = nearest.iter().sum();
        let chosen = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if w > 0.0 && target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            // Guard against the running subtraction stepping past the last
            // positive weight.
            if nearest[chosen] == 0.0 {
                chosen = nearest.iter().rposition(|&w| w > 0.0).unwrap();
            }
            chosen
        } else {
            // All points coincide with a center already.
            rng.random_range(0..n)
        };
        let center = point(chosen);
        centroids.extend_from_slice(center);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(squared_distance(point(i), center));
        }
    }
    centroids
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid (lowest index on ties) and its squared distance.
pub(crate) fn nearest_centroid(point: &[f64], centroids: &[f64]) -> (usize, f64) {
    let dim = point.len();
    let mut best = (0, f64::INFINITY);
    for (j, centroid) in centroids.chunks_exact(dim).enumerate() {
        let d = squared_distance(point, centroid);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign(data: &[f64], dim: usize, centroids: &[f64]) -> (Vec<usize>, Vec<f64>) {
    data.par_chunks_exact(dim)
        .map(|p| nearest_centroid(p, centroids))
        .unzip()
}

fn update(data: &[f64], dim: usize, k: usize, assignments: &[usize]) -> Vec<f64> {
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for (p, &c) in data.chunks_exact(dim).zip(assignments) {
        counts[c] += 1;
        for (s, v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        // repair_empty guarantees non-empty clusters
        debug_assert!(count > 0);
        for s in &mut sums[c * dim..(c + 1) * dim] {
            *s /= count as f64;
        }
    }
    sums
}

/// Gives every empty cluster the point farthest from its own centroid,
/// taken from a cluster that keeps at least one other member.
fn repair_empty(
    data: &[f64],
    dim: usize,
    centroids: &mut [f64],
    assignments: &mut [usize],
    distances: &mut [f64],
) {
    let k = centroids.len() / dim;
    let mut counts = vec![0usize; k];
    for &c in assignments.iter() {
        counts[c] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut donor: Option<usize> = None;
        for (i, &d) in distances.iter().enumerate() {
            if counts[assignments[i]] > 1 && donor.is_none_or(|j| d > distances[j]) {
                donor = Some(i);
            }
        }
        let Some(i) = donor else { break };
        counts[assignments[i]] -= 1;
        counts[empty] += 1;
        assignments[i] = empty;
        distances[i] = 0.0;
        centroids[empty * dim..(empty + 1) * dim].copy_from_slice(&data[i * dim..(i + 1) * dim]);
    }
}

/// Within-cluster sum of squared distances for the given assignment.
pub fn objective(data: &[f64], dim: usize, centroids: &[f64], assignments: &[usize]) -> f64 {
    data.chunks_exact(dim)
        .zip(assignments)
        .map(|(p, &c)| squared_distance(p, &centroids[c * dim..(c + 1) * dim]))
        .sum()
}
