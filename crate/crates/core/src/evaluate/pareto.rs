use serde::{Deserialize, Serialize};

use super::grid::{EvalRecord, LatencyStat};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub latency: f64,
    pub precision: f64,
    /// The configuration that produced the point.
    pub label: String,
}

/// Non-dominated (latency, precision) points among the measured records,
/// sorted by latency with strictly increasing precision.
pub fn pareto_frontier(records: &[EvalRecord], stat: LatencyStat) -> Vec<ParetoPoint> {
    let mut points: Vec<ParetoPoint> = records
        .iter()
        .filter_map(|r| {
            Some(ParetoPoint {
                latency: r.latency()?.get(stat),
                precision: r.mean_precision()?,
                label: format!("{} r={}", r.encoder, r.window),
            })
        })
        .collect();
    frontier_of(&mut points)
}

pub(crate) fn frontier_of(points: &mut [ParetoPoint]) -> Vec<ParetoPoint> {
    points.sort_by(|a, b| {
        a.latency
            .total_cmp(&b.latency)
            .then(b.precision.total_cmp(&a.precision))
    });
    let mut frontier: Vec<ParetoPoint> = Vec::new();
    for point in points.iter() {
        if frontier.last().is_none_or(|best| point.precision > best.precision) {
            frontier.push(point.clone());
        }
    }
    frontier
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn pts(raw: &[(f64, f64)]) -> Vec<ParetoPoint> {
        raw.iter()
            .map(|&(latency, precision)| ParetoPoint {
                latency,
                precision,
                label: String::new(),
            })
            .collect()
    }

    fn pairs(points: &[ParetoPoint]) -> Vec<(f64, f64)> {
        points.iter().map(|p| (p.latency, p.precision)).collect()
    }

    #[test]
    fn dominated_points_drop_out() {
        let mut p = pts(&[(0.1, 0.5), (0.2, 0.7), (0.3, 0.6)]);
        assert_eq!(pairs(&frontier_of(&mut p)), [(0.1, 0.5), (0.2, 0.7)]);
        let mut single = pts(&[(0.4, 0.4)]);
        assert_eq!(pairs(&frontier_of(&mut single)), [(0.4, 0.4)]);
        let mut same_latency = pts(&[(0.2, 0.3), (0.2, 0.9)]);
        assert_eq!(pairs(&frontier_of(&mut same_latency)), [(0.2, 0.9)]);
    }

    fn dominates(a: (f64, f64), b: (f64, f64)) -> bool {
        a.0 <= b.0 && a.1 >= b.1 && (a.0 < b.0 || a.1 > b.1)
    }

    proptest! {
        #[test]
        fn frontier_properties(raw in prop::collection::vec((0u8..20, 0u8..20), 1..40)) {
            let raw: Vec<(f64, f64)> = raw.into_iter().map(|(l, p)| (l as f64, p as f64)).collect();
            let frontier = pairs(&frontier_of(&mut pts(&raw)));
            for (i, a) in frontier.iter().enumerate() {
                for (j, b) in frontier.iter().enumerate() {
                    prop_assert!(i == j || !dominates(*a, *b));
                }
            }
            for r in &raw {
                prop_assert!(frontier.iter().any(|f| f == r || dominates(*f, *r)));
            }
            prop_assert!(frontier.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
        }
    }
}
