use std::collections::HashSet;

use crate::corpus::Corpus;
use crate::search::euclidean_distance;
use crate::{Error, Result};

/// The exact `k_eval` nearest neighbors of a query, ascending by distance.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldStandard {
    pub query_id: String,
    pub neighbor_ids: Vec<String>,
    pub distances: Vec<f64>,
}

impl GoldStandard {
    pub fn k_eval(&self) -> usize {
        self.neighbor_ids.len()
    }
}

/// Linear scan over the corpus, ties by ordinal. With `exclude_self`, the
/// document whose id equals `query_id` (if any) is left out.
pub fn brute_force_knn(
    corpus: &Corpus,
    query_id: &str,
    query: &[f64],
    k_eval: usize,
    exclude_self: bool,
) -> Result<GoldStandard> {
    let skip = if exclude_self {
        corpus.ordinal_of(query_id)
    } else {
        None
    };
    let available = corpus.len() - usize::from(skip.is_some());
    if k_eval == 0 || k_eval > available {
        return Err(Error::InvalidParameter(format!(
            "k_eval {k_eval} must be between 1 and the {available} available documents"
        )));
    }
    if query.len() != corpus.dimension() {
        return Err(Error::DimensionMismatch {
            id: query_id.to_string(),
            expected: corpus.dimension(),
            actual: query.len(),
        });
    }

    let mut scored = Vec::with_capacity(available);
    for (ordinal, values) in corpus.vectors().enumerate() {
        if Some(ordinal) != skip {
            scored.push((euclidean_distance(values, query)?, ordinal));
        }
    }
    let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k_eval < scored.len() {
        scored.select_nth_unstable_by(k_eval - 1, by_distance);
        scored.truncate(k_eval);
    }
    scored.sort_unstable_by(by_distance);

    Ok(GoldStandard {
        query_id: query_id.to_string(),
        neighbor_ids: scored
            .iter()
            .map(|&(_, o)| corpus.documents()[o].id().to_string())
            .collect(),
        distances: scored.into_iter().map(|(d, _)| d).collect(),
    })
}

/// Fraction of the gold neighbors found among `retrieved`.
pub fn precision_at_k<'a>(retrieved: impl IntoIterator<Item = &'a str>, gold: &GoldStandard) -> f64 {
    let gold_ids: HashSet<&str> = gold.neighbor_ids.iter().map(String::as_str).collect();
    let found: HashSet<&str> = retrieved.into_iter().filter(|id| gold_ids.contains(id)).collect();
    found.len() as f64 / gold.k_eval() as f64
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::corpus::Document;

    fn line(points: &[f64]) -> Corpus {
        Corpus::from_documents(
            1,
            points.iter().enumerate().map(|(i, &p)| Document::new(format!("p{i}"), vec![p])),
        )
        .unwrap()
    }

    fn gold(ids: &[&str]) -> GoldStandard {
        GoldStandard {
            query_id: "q".into(),
            neighbor_ids: ids.iter().map(|s| s.to_string()).collect(),
            distances: vec![0.0; ids.len()],
        }
    }

    #[test]
    fn nearest_on_a_line() {
        let corpus = line(&[0.0, 1.0, 5.0]);
        let g = brute_force_knn(&corpus, "q", &[0.4], 2, true).unwrap();
        assert_eq!(g.neighbor_ids, ["p0", "p1"]);
        assert!((g.distances[0] - 0.4).abs() < 1e-15);

        let all = brute_force_knn(&corpus, "q", &[0.4], 3, true).unwrap();
        assert_eq!(all.neighbor_ids, ["p0", "p1", "p2"]);
    }

    #[test]
    fn self_exclusion() {
        let corpus = line(&[0.0, 1.0, 5.0]);
        let g = brute_force_knn(&corpus, "p1", &[1.0], 2, true).unwrap();
        assert_eq!(g.neighbor_ids, ["p0", "p2"]);
        let g = brute_force_knn(&corpus, "p1", &[1.0], 2, false).unwrap();
        assert_eq!(g.neighbor_ids, ["p1", "p0"]);
        assert!(brute_force_knn(&corpus, "p1", &[1.0], 3, true).is_err());
        assert!(brute_force_knn(&corpus, "q", &[1.0], 0, true).is_err());
    }

    #[test]
    fn precision_definition() {
        let g = gold(&["a", "b", "c", "d"]);
        assert_eq!(precision_at_k(["d", "c", "b", "a"], &g), 1.0);
        assert_eq!(precision_at_k(["x", "y"], &g), 0.0);
        assert_eq!(precision_at_k(["a", "x", "c"], &g), 0.5);
        let ids: Vec<String> = (0..24).map(|i| i.to_string()).collect();
        let half: Vec<String> = (12..36).map(|i| i.to_string()).collect();
        let g24 = gold(&ids.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(precision_at_k(half.iter().map(String::as_str), &g24), 0.5);
    }

    proptest! {
        #[test]
        fn full_scan_is_a_sorted_permutation(points in prop::collection::vec(-100.0f64..100.0, 1..60), q in -100.0f64..100.0) {
            let corpus = line(&points);
            let g = brute_force_knn(&corpus, "q", &[q], points.len(), true).unwrap();
            let mut ids = g.neighbor_ids.clone();
            ids.sort();
            let mut expected: Vec<String> = (0..points.len()).map(|i| format!("p{i}")).collect();
            expected.sort();
            prop_assert_eq!(ids, expected);
            prop_assert!(g.distances.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn precision_is_order_free_and_bounded(mut picks in prop::collection::vec(0usize..20, 0..10)) {
            let g = gold(&["0", "1", "2", "3", "4", "5", "6", "7", "8", "9"]);
            let ids: Vec<String> = picks.iter().map(|i| i.to_string()).collect();
            let p = precision_at_k(ids.iter().map(String::as_str), &g);
            prop_assert!((0.0..=1.0).contains(&p));
            picks.reverse();
            let reversed: Vec<String> = picks.iter().map(|i| i.to_string()).collect();
            prop_assert_eq!(p, precision_at_k(reversed.iter().map(String::as_str), &g));
        }
    }
}
