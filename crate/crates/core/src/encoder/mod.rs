//! Vector-to-token encoders.
//!
//! Two schemes are provided. [`encode_rounding`] keeps the `m` largest
//! entries by magnitude and emits `pos{i}val{v}` with `v` rounded to `p`
//! decimal places. [`encode_subvector`] splits the vector into `m` contiguous
//! subvectors and emits `pos{i}cluster{j}`, where `j` is the 1-based nearest
//! centroid in a per-position codebook trained with k-means.

mod codebook;
mod kmeans;
mod rounding;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use codebook::{
    encode_subvector, load_codebook, save_codebook, train_codebook, Codebook, TrainingOptions,
    CODEBOOK_VERSION,
};
pub use kmeans::{kmeans, objective, KMeansParams, KMeansResult};
pub use rounding::{encode_rounding, format_rounded_token, RoundingConfig};

use crate::Result;

/// The tokens produced for one vector, in ascending position order.
///
/// Each token starts with a distinct `pos{i}` prefix, so the set never holds
/// duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSet(Vec<String>);

impl TokenSet {
    pub(crate) fn from_ordered(tokens: Vec<String>) -> Self {
        Self(tokens)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &str> + '_ {
        self.0.iter().map(String::as_str)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.iter().any(|t| t == token)
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<String> {
        self.0
    }
}

impl<'a> IntoIterator for &'a TokenSet {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// An encoder bound to its parameters. Cheap to clone.
#[derive(Debug, Clone, PartialEq)]
pub enum Encoder {
    Rounding(RoundingConfig),
    Subvector(Arc<Codebook>),
}

impl Encoder {
    pub fn rounding(decimals: u32, positions: usize) -> Self {
        Encoder::Rounding(RoundingConfig::new(decimals, positions))
    }

    pub fn subvector(codebook: Codebook) -> Self {
        Encoder::Subvector(Arc::new(codebook))
    }

    pub fn encode(&self, values: &[f64]) -> Result<TokenSet> {
        match self {
            Encoder::Rounding(config) => encode_rounding(values, config),
            Encoder::Subvector(codebook) => encode_subvector(values, codebook),
        }
    }

    /// Checks that vectors of `dimension` can be encoded.
    pub fn check_dimension(&self, dimension: usize) -> Result<()> {
        match self {
            Encoder::Rounding(config) => config.validate(),
            Encoder::Subvector(codebook) => codebook.check_dimension(dimension),
        }
    }

    pub fn describe(&self) -> EncoderDesc {
        match self {
            Encoder::Rounding(c) => EncoderDesc::Rounding {
                p: c.decimals,
                m: c.positions,
            },
            Encoder::Subvector(cb) => EncoderDesc::Subvector {
                d: cb.dimension(),
                m: cb.positions(),
                k: cb.clusters(),
                seed: cb.training_seed(),
            },
        }
    }
}

/// Serializable summary of an encoder binding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum EncoderDesc {
    Rounding { p: u32, m: usize },
    Subvector { d: usize, m: usize, k: usize, seed: u64 },
}
