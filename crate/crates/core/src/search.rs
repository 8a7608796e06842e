//! Two-phase search: encode the query, take the top `window` documents by
//! token overlap, rerank them by exact Euclidean distance, return the best
//! `size`.

use crate::corpus::Metadata;
use crate::index::{Candidate, Filter, Index};
use crate::{Error, Result};

/// Square root of the summed squared differences, accumulated in `f64`.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            id: "<vector>".into(),
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(squared(a, b).sqrt())
}

fn squared(a: &[f64], b: &[f64]) -> f64 {
    // (a - b)^2 == (b - a)^2 exactly, so the result is symmetric bit for bit.
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub vector: Vec<f64>,
    /// Number of hits to return.
    pub size: usize,
    /// Number of overlap-ranked candidates to rerank.
    pub window: usize,
    pub filters: Vec<Filter>,
}

impl Query {
    pub fn new(vector: Vec<f64>, size: usize, window: usize) -> Self {
        Self {
            vector,
            size,
            window,
            filters: Vec::new(),
        }
    }

    pub fn with_filters(mut self, filters: Vec<Filter>) -> Self {
        self.filters = filters;
        self
    }

    pub fn validate(&self, dimension: usize) -> Result<()> {
        if self.size == 0 || self.size > self.window {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= size <= window, got size {} and window {}",
                self.size, self.window
            )));
        }
        if self.vector.len() != dimension {
            return Err(Error::DimensionMismatch {
                id: "<query>".into(),
                expected: dimension,
                actual: self.vector.len(),
            });
        }
        if let Some(position) = self.vector.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                id: "<query>".into(),
                position,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub ordinal: u32,
    pub id: String,
    pub distance: f64,
    pub overlap_score: u32,
    pub metadata: Metadata,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// Ascending by distance, ties by ordinal.
    pub hits: Vec<Hit>,
    /// Fewer candidates than `size` were available.
    pub exhausted: bool,
}

/// Exact distances for every candidate, sorted ascending (ties by ordinal),
/// truncated to `size`.
pub fn rerank(index: &Index, candidates: &[Candidate], query: &[f64], size: usize) -> Result<Vec<Hit>> {
    if query.len() != index.dimension() {
        return Err(Error::DimensionMismatch {
            id: "<query>".into(),
            expected: index.dimension(),
            actual: query.len(),
        });
    }
    let mut scratch = Vec::with_capacity(index.dimension());
    let mut scored = Vec::with_capacity(candidates.len());
    for candidate in candidates {
        let values = index.vectors().get(candidate.ordinal as usize, &mut scratch)?;
        scored.push((squared(values, query).sqrt(), *candidate));
    }
    scored.sort_unstable_by(|(da, a), (db, b)| da.total_cmp(db).then(a.ordinal.cmp(&b.ordinal)));
    scored.truncate(size);
    Ok(scored
        .into_iter()
        .map(|(distance, c)| Hit {
            ordinal: c.ordinal,
            id: index.id(c.ordinal).to_string(),
            distance,
            overlap_score: c.overlap_score,
            metadata: index.metadata(c.ordinal).clone(),
        })
        .collect())
}

/// `rerank(retrieve_candidates(encode(query)))` against the index's own encoder.
pub fn search(index: &Index, query: &Query) -> Result<SearchResult> {
    query.validate(index.dimension())?;
    index.check_filters(&query.filters)?;
    let tokens = index.encoder().encode(&query.vector)?;
    let candidates = index.retrieve_candidates(&tokens, query.window, &query.filters)?;
    let hits = rerank(index, &candidates, &query.vector, query.size)?;
    Ok(SearchResult {
        exhausted: hits.len() < query.size,
        hits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, Document};
    use crate::encoder::{Codebook, Encoder};

    #[test]
    fn distances() {
        assert_eq!(euclidean_distance(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(euclidean_distance(&[0.0, 3.0], &[4.0, 0.0]).unwrap(), 5.0);
        let x = [0.3, -7.1, 1e-9];
        assert_eq!(euclidean_distance(&x, &x).unwrap(), 0.0);
        assert!(euclidean_distance(&[1.0], &[1.0, 2.0]).is_err());
    }

    /// One shared cluster for every document, so all are candidates.
    fn flat_index(points: &[[f64; 2]]) -> Index {
        let cb = Codebook::new(2, 1, 1, vec![vec![vec![0.0, 0.0]]], 0).unwrap();
        let corpus = Corpus::from_documents(
            2,
            points.iter().enumerate().map(|(i, p)| Document::new(format!("{}", (b'A' + i as u8) as char), p.to_vec())),
        )
        .unwrap();
        Index::build(&corpus, Encoder::subvector(cb)).unwrap()
    }

    fn candidates(n: u32) -> Vec<Candidate> {
        (0..n).map(|ordinal| Candidate { ordinal, overlap_score: 1 }).collect()
    }

    #[test]
    fn rerank_orders_by_distance() {
        let idx = flat_index(&[[0.0, 0.0], [1.0, 1.0], [3.0, 3.0]]);
        let hits = rerank(&idx, &candidates(3), &[0.9, 0.9], 2).unwrap();
        let ids: Vec<_> = hits.iter().map(|h| h.id.as_str()).collect();
        assert_eq!(ids, ["B", "A"]);
        assert!((hits[0].distance - 0.02f64.sqrt()).abs() < 1e-12);

        let all = rerank(&idx, &candidates(3), &[0.9, 0.9], 10).unwrap();
        assert_eq!(all.len(), 3);
        assert_eq!(all[2].id, "C");
    }

    #[test]
    fn equal_distances_keep_ordinal_order() {
        let idx = flat_index(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]]);
        let hits = rerank(&idx, &candidates(3), &[0.0, 0.0], 3).unwrap();
        assert_eq!(hits.iter().map(|h| h.ordinal).collect::<Vec<_>>(), [0, 1, 2]);
    }

    #[test]
    fn search_composes_and_flags_shortfall() {
        let idx = flat_index(&[[0.0, 0.0], [5.0, 5.0]]);
        let result = search(&idx, &Query::new(vec![5.0, 5.0], 1, 2)).unwrap();
        assert_eq!(result.hits[0].id, "B");
        assert_eq!(result.hits[0].distance, 0.0);
        assert!(!result.exhausted);

        let result = search(&idx, &Query::new(vec![5.0, 5.0], 3, 3)).unwrap();
        assert_eq!(result.hits.len(), 2);
        assert!(result.exhausted);

        assert!(matches!(
            search(&idx, &Query::new(vec![1.0], 1, 1)),
            Err(Error::DimensionMismatch { expected: 2, actual: 1, .. })
        ));
        assert!(search(&idx, &Query::new(vec![1.0, 1.0], 3, 2)).is_err());
    }
}
