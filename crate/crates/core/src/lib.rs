//! Approximate nearest-neighbor search on top of an inverted index.
//!
//! Dense vectors are turned into small sets of string tokens by an
//! [`encoder`], the tokens are indexed in posting lists, and a query is
//! answered in two phases: candidates are ranked by how many tokens they
//! share with the encoded query, then the best `window` of them are reranked
//! by exact Euclidean distance.
//!
//! ```no_run
//! use tokvec::corpus::{load_corpus, CorpusFormat};
//! use tokvec::encoder::{train_codebook, Encoder, KMeansParams, TrainingOptions};
//! use tokvec::index::Index;
//! use tokvec::search::{search, Query};
//!
//! let corpus = load_corpus("corpus.jsonl", CorpusFormat::Jsonl)?;
//! let codebook = train_codebook(&corpus, 16, &KMeansParams::new(64, 7), &TrainingOptions::default())?;
//! let index = Index::build(&corpus, Encoder::subvector(codebook))?;
//! let hits = search(&index, &Query::new(corpus.documents()[0].vector.values.clone(), 10, 200))?;
//! # Ok::<(), tokvec::Error>(())
//! ```

pub mod corpus;
pub mod encoder;
mod error;
pub mod evaluate;
pub mod index;
pub mod search;

pub use error::{Error, Result};
