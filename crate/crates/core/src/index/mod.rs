//! Inverted index over encoded tokens, with a forward vector store and
//! per-document metadata.
//!
//! Candidate retrieval scores every document by the number of query tokens
//! it shares (each matching token contributes one), drops documents that
//! share none or fail a filter, and keeps the best `window` by score with
//! ordinal as the tie-break.

mod filter;
mod postings;
mod snapshot;
mod store;

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use filter::{apply_filters, Filter};
pub use snapshot::SNAPSHOT_VERSION;
pub use store::VectorStore;

use crate::corpus::{Corpus, Metadata};
use crate::encoder::{Encoder, EncoderDesc, TokenSet};
use crate::{Error, Result};

/// A document ordinal together with its token-overlap score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub ordinal: u32,
    pub overlap_score: u32,
}

impl Candidate {
    /// Higher score first, then lower ordinal.
    pub fn rank_cmp(&self, other: &Self) -> Ordering {
        other
            .overlap_score
            .cmp(&self.overlap_score)
            .then(self.ordinal.cmp(&other.ordinal))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexStats {
    pub n: usize,
    pub d: usize,
    pub encoder: EncoderDesc,
    pub token_count: usize,
}

/// An immutable, searchable index. Safe to share across threads.
#[derive(Debug)]
pub struct Index {
    dimension: usize,
    encoder: Encoder,
    postings: HashMap<String, Vec<u32>>,
    vectors: VectorStore,
    ids: Vec<String>,
    ordinals: HashMap<String, u32>,
    metadata: Vec<Metadata>,
    string_fields: BTreeSet<String>,
    numeric_fields: BTreeSet<String>,
}

impl Index {
    /// Encodes every document with `encoder` and indexes it in corpus order.
    pub fn build(corpus: &Corpus, encoder: Encoder) -> Result<Self> {
        encoder.check_dimension(corpus.dimension())?;
        if corpus.len() > u32::MAX as usize {
            return Err(Error::InvalidParameter("corpus exceeds u32 ordinals".into()));
        }
        let token_sets = corpus
            .documents()
            .par_iter()
            .map(|doc| encoder.encode(&doc.vector.values))
            .collect::<Result<Vec<TokenSet>>>()?;

        let mut postings: HashMap<String, Vec<u32>> = HashMap::new();
        for (ordinal, tokens) in token_sets.into_iter().enumerate() {
            for token in tokens.into_vec() {
                postings.entry(token).or_default().push(ordinal as u32);
            }
        }

        let mut data = Vec::with_capacity(corpus.len() * corpus.dimension());
        for values in corpus.vectors() {
            data.extend_from_slice(values);
        }
        let ids = corpus.documents().iter().map(|d| d.id().to_string()).collect();
        let metadata = corpus.documents().iter().map(|d| d.metadata.clone()).collect();
        Ok(Self::assemble(
            corpus.dimension(),
            encoder,
            postings,
            VectorStore::in_memory(corpus.dimension(), data),
            ids,
            metadata,
        ))
    }

    fn assemble(
        dimension: usize,
        encoder: Encoder,
        postings: HashMap<String, Vec<u32>>,
        vectors: VectorStore,
        ids: Vec<String>,
        metadata: Vec<Metadata>,
    ) -> Self {
        let ordinals = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        let mut string_fields = BTreeSet::new();
        let mut numeric_fields = BTreeSet::new();
        for meta in &metadata {
            string_fields.extend(meta.string_fields.keys().cloned());
            numeric_fields.extend(meta.numeric_fields.keys().cloned());
        }
        Self {
            dimension,
            encoder,
            postings,
            vectors,
            ids,
            ordinals,
            metadata,
            string_fields,
            numeric_fields,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn vectors(&self) -> &VectorStore {
        &self.vectors
    }

    /// Number of distinct tokens.
    pub fn token_count(&self) -> usize {
        self.postings.len()
    }

    pub fn posting(&self, token: &str) -> Option<&[u32]> {
        self.postings.get(token).map(Vec::as_slice)
    }

    pub fn tokens(&self) -> impl Iterator<Item = (&str, &[u32])> + '_ {
        self.postings.iter().map(|(t, p)| (t.as_str(), p.as_slice()))
    }

    pub fn id(&self, ordinal: u32) -> &str {
        &self.ids[ordinal as usize]
    }

    pub fn ordinal_of(&self, id: &str) -> Option<u32> {
        self.ordinals.get(id).copied()
    }

    pub fn metadata(&self, ordinal: u32) -> &Metadata {
        &self.metadata[ordinal as usize]
    }

    pub fn stats(&self) -> IndexStats {
        IndexStats {
            n: self.len(),
            d: self.dimension,
            encoder: self.encoder.describe(),
            token_count: self.token_count(),
        }
    }

    /// Checks filters against the fields present in the index.
    pub fn check_filters(&self, filters: &[Filter]) -> Result<()> {
        for filter in filters {
            filter.validate()?;
            let known = match filter {
                Filter::Term { field, .. } => self.string_fields.contains(field),
                Filter::Range { field, .. } => self.numeric_fields.contains(field),
            };
            if !known {
                return Err(Error::UnknownField(filter.field().to_string()));
            }
        }
        Ok(())
    }

    /// Documents passing all filters that share at least one token with the
    /// query, best `window` by overlap (ties by ordinal).
    pub fn retrieve_candidates(
        &self,
        query_tokens: &TokenSet,
        window: usize,
        filters: &[Filter],
    ) -> Result<Vec<Candidate>> {
        if window == 0 {
            return Err(Error::InvalidParameter("window must be at least 1".into()));
        }
        if query_tokens.is_empty() {
            return Err(Error::InvalidParameter("query has no tokens".into()));
        }
        self.check_filters(filters)?;

        let mut scores = vec![0u32; self.len()];
        let mut touched = Vec::new();
        for token in query_tokens.iter() {
            for &ordinal in self.posting(token).unwrap_or_default() {
                let score = &mut scores[ordinal as usize];
                if *score == 0 {
                    touched.push(ordinal);
                }
                *score += 1;
            }
        }

        let mut candidates: Vec<Candidate> = touched
            .into_iter()
            .filter(|&o| apply_filters(&self.metadata[o as usize], filters))
            .map(|ordinal| Candidate {
                ordinal,
                overlap_score: scores[ordinal as usize],
            })
            .collect();
        if candidates.len() > window {
            candidates.select_nth_unstable_by(window - 1, Candidate::rank_cmp);
            candidates.truncate(window);
        }
        candidates.sort_unstable_by(Candidate::rank_cmp);
        Ok(candidates)
    }
}
