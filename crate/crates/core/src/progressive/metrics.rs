//! Precision, recall and Progressive Geometry Recall of a trace.

use serde::Serialize;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub pgr: f64,
    /// Metrics whose denominator was zero; they are reported as 0.
    pub undefined: Vec<&'static str>,
}

/// `related[i]` tells whether the `i+1`-th examined pair was related.
///
/// PGR is the area under the cumulative related curve divided by the area
/// under the best possible curve, which puts all `min(budget, total)`
/// reachable related pairs first.
pub fn compute_metrics(related: &[bool], total_related: u64, budget: u64) -> Metrics {
    let mut m = Metrics::default();
    let examined = related.len() as u64;
    let found = related.iter().filter(|&&r| r).count() as u64;
    let mut ratio = |num: f64, den: f64, name| {
        if den > 0.0 {
            num / den
        } else {
            m.undefined.push(name);
            0.0
        }
    };
    let precision = ratio(found as f64, examined as f64, "precision");
    let recall = ratio(found as f64, budget.min(total_related) as f64, "recall");
    let reachable = budget.min(total_related);
    let (mut auc, mut best, mut c) = (0u64, 0u64, 0u64);
    for (i, &r) in related.iter().enumerate() {
        c += r as u64;
        auc += c;
        best += (i as u64 + 1).min(reachable);
    }
    let pgr = ratio(auc as f64, best as f64, "pgr");
    m.precision = precision;
    m.recall = recall;
    m.pgr = pgr;
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        let m = compute_metrics(&[true, true, false, false], 2, 4);
        assert_eq!((m.pgr, m.precision, m.recall), (1.0, 0.5, 1.0));
        let m = compute_metrics(&[false, false, true, true], 2, 4);
        assert_eq!(m.pgr, 3.0 / 7.0);
        let m = compute_metrics(&[true, false, true], 5, 3);
        assert_eq!(m.recall, 2.0 / 3.0);
        assert!(m.undefined.is_empty());
    }

    #[test]
    fn zero_denominators_are_flagged() {
        let m = compute_metrics(&[], 0, 10);
        assert_eq!((m.precision, m.recall, m.pgr), (0.0, 0.0, 0.0));
        assert_eq!(m.undefined, vec!["precision", "recall", "pgr"]);
    }
}
