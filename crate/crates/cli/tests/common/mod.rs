#![allow(dead_code)]

use tokio::net::TcpListener;
use tokvec::corpus::Corpus;
use tokvec::encoder::{train_codebook, Encoder, KMeansParams, TrainingOptions};
use tokvec::evaluate::{generate, GeneratorConfig};
use tokvec::index::Index;
use tokvec_cli::server::{serve, AppState};

pub fn mixture(n: usize, d: usize, seed: u64) -> Corpus {
    generate(&GeneratorConfig {
        n,
        d,
        components: 6,
        sigma: 0.3,
        seed,
    })
    .unwrap()
}

pub fn subvector_index(corpus: &Corpus, m: usize, k: usize, seed: u64) -> Index {
    let codebook = train_codebook(corpus, m, &KMeansParams::new(k, seed), &TrainingOptions::default()).unwrap();
    Index::build(corpus, Encoder::subvector(codebook)).unwrap()
}

/// Starts the service on an ephemeral port and returns its base URL.
pub async fn spawn(state: AppState) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { serve(listener, state).await.unwrap() });
    format!("http://{addr}")
}
