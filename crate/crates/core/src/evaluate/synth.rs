use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document, Metadata};
use crate::{Error, Result};

pub const COLORS: [&str; 5] = ["red", "green", "blue", "black", "white"];

/// Seeded Gaussian mixture: component means are standard normal, each point
/// adds `sigma`-scaled standard normal noise to a uniformly chosen mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n: usize,
    pub d: usize,
    pub components: usize,
    pub sigma: f64,
    pub seed: u64,
}

/// Values are rounded to `f32` so the corpus survives packed storage exactly.
/// Each document gets a `color` string field and a `price` numeric field.
pub fn generate(config: &GeneratorConfig) -> Result<Corpus> {
    if config.d == 0 || config.components == 0 || !(config.sigma >= 0.0 && config.sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "generator needs d > 0, components > 0 and a finite sigma >= 0: {config:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let means: Vec<f64> = (0..config.components * config.d)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();

    let mut corpus = Corpus::new(config.d)?;
    for i in 0..config.n {
        let c = rng.random_range(0..config.components);
        let mean = &means[c * config.d..(c + 1) * config.d];
        let values = mean
            .iter()
            .map(|&mu| (mu + config.sigma * rng.sample::<f64, _>(StandardNormal)) as f32 as f64)
            .collect();
        let metadata = Metadata::default()
            .with_string("color", COLORS[rng.random_range(0..COLORS.len())])
            .with_number("price", rng.random_range(0..100_000u32) as f64 / 100.0);
        corpus.push(Document::new(format!("doc{i}"), values).with_metadata(metadata))?;
    }
    Ok(corpus)
}
