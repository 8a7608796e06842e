//! End-to-end checks of the search pipeline, snapshots, corpus files and
//! encoder locality.

use std::collections::HashSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tokvec::corpus::{load_corpus, save_corpus, Corpus, CorpusFormat, Document, Metadata};
use tokvec::encoder::{train_codebook, Encoder, KMeansParams, TrainingOptions};
use tokvec::evaluate::{brute_force_knn, generate, GeneratorConfig};
use tokvec::index::{Filter, Index};
use tokvec::search::{euclidean_distance, rerank, search, Query};

fn mixture(n: usize, d: usize, seed: u64) -> Corpus {
    generate(&GeneratorConfig {
        n,
        d,
        components: 5,
        sigma: 0.3,
        seed,
    })
    .unwrap()
}

fn subvector_index(corpus: &Corpus, m: usize, k: usize) -> Index {
    let codebook = train_codebook(corpus, m, &KMeansParams::new(k, 17), &TrainingOptions::default()).unwrap();
    Index::build(corpus, Encoder::subvector(codebook)).unwrap()
}

#[test]
fn search_is_retrieve_then_rerank() {
    let corpus = mixture(400, 8, 1);
    for index in [subvector_index(&corpus, 4, 8), Index::build(&corpus, Encoder::rounding(1, 4)).unwrap()] {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..30 {
            let q: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
            let (size, window) = (rng.random_range(1..10), rng.random_range(10..120));
            let query = Query::new(q.clone(), size, window).with_filters(vec![Filter::range("price", Some(100.0), None)]);
            let composed = {
                let tokens = index.encoder().encode(&q).unwrap();
                let candidates = index.retrieve_candidates(&tokens, window, &query.filters).unwrap();
                rerank(&index, &candidates, &q, size).unwrap()
            };
            let result = search(&index, &query).unwrap();
            assert_eq!(result.hits, composed);
            assert_eq!(result.exhausted, composed.len() < size);
            assert!(result.hits.windows(2).all(|w| w[0].distance <= w[1].distance));
        }
    }
}

#[test]
fn full_window_self_queries_are_exact() {
    let corpus = mixture(300, 8, 3);
    let index = subvector_index(&corpus, 4, 4);
    for ordinal in (0..corpus.len()).step_by(7) {
        let doc = &corpus.documents()[ordinal];
        let result = search(&index, &Query::new(doc.vector.values.clone(), 10, corpus.len())).unwrap();
        assert_eq!(result.hits[0].id, doc.id());
        assert_eq!(result.hits[0].distance, 0.0);
        assert_eq!(result.hits[0].overlap_score, 4);

        // Every document sharing a token is a candidate at window = n, so
        // the top hits agree with the exact scan restricted to those.
        let gold = brute_force_knn(&corpus, doc.id(), &doc.vector.values, 10, false).unwrap();
        let tokens: HashSet<String> = index.encoder().encode(&doc.vector.values).unwrap().into_vec().into_iter().collect();
        let reachable = gold.neighbor_ids.iter().all(|id| {
            let v = &corpus.documents()[corpus.ordinal_of(id).unwrap()].vector.values;
            index.encoder().encode(v).unwrap().iter().any(|t| tokens.contains(t))
        });
        if reachable {
            let ids: Vec<_> = result.hits.iter().map(|h| h.id.clone()).collect();
            assert_eq!(ids, gold.neighbor_ids);
        }
    }
}

#[test]
fn filters_excluding_everything_give_empty_hits() {
    let corpus = mixture(50, 4, 4);
    let index = subvector_index(&corpus, 2, 3);
    let query = Query::new(corpus.documents()[0].vector.values.clone(), 5, 50)
        .with_filters(vec![Filter::term("color", "purple")]);
    let result = search(&index, &query).unwrap();
    assert!(result.hits.is_empty());
    assert!(result.exhausted);
}

#[test]
fn snapshot_pages_only_reranked_vectors() {
    let corpus = mixture(500, 8, 5);
    let index = subvector_index(&corpus, 4, 8);
    let dir = tempfile::tempdir().unwrap();
    index.snapshot(dir.path()).unwrap();
    let opened = Index::open_snapshot(dir.path()).unwrap();
    assert!(!opened.vectors().is_resident());

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut reranked = 0u64;
    for _ in 0..10 {
        let q: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
        let query = Query::new(q.clone(), 5, 40);
        let tokens = index.encoder().encode(&q).unwrap();
        assert_eq!(
            index.retrieve_candidates(&tokens, 40, &[]).unwrap(),
            opened.retrieve_candidates(&tokens, 40, &[]).unwrap()
        );
        reranked += opened.retrieve_candidates(&tokens, 40, &[]).unwrap().len() as u64;
        // Generated values are f32-exact, so distances agree bit for bit.
        assert_eq!(search(&index, &query).unwrap(), search(&opened, &query).unwrap());
    }
    assert_eq!(opened.vectors().rows_read(), reranked);
    assert!(reranked < 10 * corpus.len() as u64);
}

#[test]
fn distances_are_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let a: Vec<f64> = (0..16).map(|_| rng.random_range(-1e3..1e3)).collect();
        let b: Vec<f64> = (0..16).map(|_| rng.random_range(-1e3..1e3)).collect();
        let ab = euclidean_distance(&a, &b).unwrap();
        assert_eq!(ab.to_bits(), euclidean_distance(&b, &a).unwrap().to_bits());
        assert!(ab >= 0.0);
    }
}

/// Spearman rank correlation with average ranks for ties.
fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for &k in &idx[i..=j] {
                r[k] = (i + j) as f64 / 2.0 + 1.0;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[test]
fn closer_pairs_share_more_tokens() {
    let corpus = mixture(2000, 16, 8);
    let codebook = train_codebook(&corpus, 8, &KMeansParams::new(16, 9), &TrainingOptions::default()).unwrap();
    let encoder = Encoder::subvector(codebook);
    let tokens: Vec<HashSet<String>> = corpus
        .vectors()
        .map(|v| encoder.encode(v).unwrap().into_vec().into_iter().collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut distances, mut overlaps) = (Vec::new(), Vec::new());
    for _ in 0..2000 {
        let (a, b) = (rng.random_range(0..corpus.len()), rng.random_range(0..corpus.len()));
        let docs = corpus.documents();
        distances.push(euclidean_distance(&docs[a].vector.values, &docs[b].vector.values).unwrap());
        overlaps.push(tokens[a].intersection(&tokens[b]).count() as f64);
    }
    let rho = spearman(&distances, &overlaps);
    assert!(rho < 0.0, "spearman {rho}");
}

fn arbitrary_corpus() -> impl Strategy<Value = Corpus> {
    (1usize..6).prop_flat_map(|d| {
        prop::collection::vec(
            (
                prop::collection::vec(any::<f32>().prop_filter("finite", |v| v.is_finite()), d),
                prop::option::of("[a-z ]{0,8}"),
                prop::option::of(-1e6f64..1e6),
            ),
            0..20,
        )
        .prop_map(move |rows| {
            Corpus::from_documents(
                d,
                rows.into_iter().enumerate().map(|(i, (v, s, x))| {
                    let mut meta = Metadata::default();
                    if let Some(s) = s {
                        meta = meta.with_string("s", s);
                    }
                    if let Some(x) = x {
                        meta = meta.with_number("x", x);
                    }
                    Document::new(format!("id-{i}"), v.into_iter().map(f64::from).collect()).with_metadata(meta)
                }),
            )
            .unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn corpus_files_round_trip(corpus in arbitrary_corpus()) {
        let dir = tempfile::tempdir().unwrap();
        for (name, format) in [("c.jsonl", CorpusFormat::Jsonl), ("c.tvec", CorpusFormat::PackedBinary)] {
            let path = dir.path().join(name);
            save_corpus(&corpus, &path, format).unwrap();
            prop_assert_eq!(&load_corpus(&path, format).unwrap(), &corpus);
        }
    }
}

#[test]
fn packed_corruption_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.tvec");
    save_corpus(&mixture(10, 4, 11), &path, CorpusFormat::PackedBinary).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(load_corpus(&path, CorpusFormat::PackedBinary).is_err());
}
