use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NLL_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub true_label: usize,
    pub predicted: usize,
    pub probabilities: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    /// Prevalence-weighted one-vs-rest AUC; NaN with fewer than two classes present.
    pub auc: f64,
    pub nll: f64,
    /// Classes with no test case, left out of the balanced accuracy and AUC.
    pub absent_classes: Vec<usize>,
}

pub fn compute_metrics(records: &[CaseRecord], n_classes: usize) -> Result<Metrics> {
    if records.is_empty() || n_classes == 0 {
        return Err(Error::InvalidParams("metrics need at least one record and one class".into()));
    }
    for r in records {
        if r.probabilities.len() != n_classes || r.true_label >= n_classes {
            return Err(Error::InvalidParams(format!(
                "record has {} probabilities and label {} for {n_classes} classes",
                r.probabilities.len(),
                r.true_label
            )));
        }
    }
    let n = records.len() as f64;
    let mut support = vec![0usize; n_classes];
    let mut hits = vec![0usize; n_classes];
    for r in records {
        support[r.true_label] += 1;
        if r.predicted == r.true_label {
            hits[r.true_label] += 1;
        }
    }
    let accuracy = hits.iter().sum::<usize>() as f64 / n;
    let present: Vec<usize> = (0..n_classes).filter(|&c| support[c] > 0).collect();
    let absent_classes = (0..n_classes).filter(|&c| support[c] == 0).collect();
    let balanced_accuracy =
        present.iter().map(|&c| hits[c] as f64 / support[c] as f64).sum::<f64>() / present.len() as f64;

    let auc = if present.len() < 2 {
        f64::NAN
    } else {
        present
            .iter()
            .map(|&c| {
                let scored: Vec<(f64, bool)> = records
                    .iter()
                    .map(|r| (r.probabilities[c], r.true_label == c))
                    .collect();
                support[c] as f64 / n * binary_auc(&scored)
            })
            .sum()
    };

    let nll = -records
        .iter()
        .map(|r| r.probabilities[r.true_label].max(NLL_FLOOR).ln())
        .sum::<f64>()
        / n;

    Ok(Metrics {
        accuracy,
        balanced_accuracy,
        auc,
        nll,
        absent_classes,
    })
}

/// Area under the ROC curve via the Mann-Whitney statistic; tied scores
/// count one half.
pub fn binary_auc(scored: &[(f64, bool)]) -> f64 {
    let mut sorted = scored.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let positives = sorted.iter().filter(|s| s.1).count() as f64;
    let negatives = sorted.len() as f64 - positives;
    if positives == 0.0 || negatives == 0.0 {
        return f64::NAN;
    }
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            j += 1;
        }
        let midrank = (i + j + 1) as f64 / 2.0;
        rank_sum += midrank * sorted[i..j].iter().filter(|s| s.1).count() as f64;
        i = j;
    }
    (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(y: usize, p: &[f64]) -> CaseRecord {
        let predicted = crate::boss::argmax(p);
        CaseRecord {
            true_label: y,
            predicted,
            probabilities: p.to_vec(),
        }
    }

    #[test]
    fn perfect_predictions() {
        let r = vec![rec(0, &[1.0, 0.0]), rec(1, &[0.0, 1.0]), rec(1, &[0.0, 1.0])];
        let m = compute_metrics(&r, 2).unwrap();
        assert_eq!((m.accuracy, m.balanced_accuracy, m.auc, m.nll), (1.0, 1.0, 1.0, 0.0));
    }

    #[test]
    fn four_case_hand_example() {
        let r = vec![
            rec(1, &[0.1, 0.9]),
            rec(1, &[0.2, 0.8]),
            rec(0, &[0.7, 0.3]),
            rec(0, &[0.6, 0.4]),
        ];
        let m = compute_metrics(&r, 2).unwrap();
        assert_eq!(m.auc, 1.0);
        let expect = -(0.9f64.ln() + 0.8f64.ln() + 0.7f64.ln() + 0.6f64.ln()) / 4.0;
        assert!((m.nll - expect).abs() < 1e-15);
        assert!((m.nll - 0.2990).abs() < 1e-4);
    }

    #[test]
    fn uniform_predictor_nll_is_log_c() {
        for c in 2..7 {
            let p = vec![1.0 / c as f64; c];
            let r: Vec<CaseRecord> = (0..c).map(|y| rec(y, &p)).collect();
            let m = compute_metrics(&r, c).unwrap();
            assert!((m.nll - (c as f64).ln()).abs() < 1e-15);
            assert!((m.auc - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn absent_class_is_flagged() {
        let r = vec![rec(0, &[0.8, 0.1, 0.1]), rec(1, &[0.5, 0.3, 0.2])];
        let m = compute_metrics(&r, 3).unwrap();
        assert_eq!(m.absent_classes, vec![2]);
        assert_eq!(m.balanced_accuracy, 0.5);
    }

    #[test]
    fn auc_ties_count_half() {
        assert_eq!(binary_auc(&[(0.5, true), (0.5, false)]), 0.5);
        assert_eq!(binary_auc(&[(0.2, true), (0.5, false), (0.9, true)]), 0.5);
    }

    fn brute_auc(scored: &[(f64, bool)]) -> f64 {
        let mut s = 0.0;
        let mut pairs = 0.0;
        for a in scored.iter().filter(|x| x.1) {
            for b in scored.iter().filter(|x| !x.1) {
                pairs += 1.0;
                s += if a.0 > b.0 {
                    1.0
                } else if a.0 == b.0 {
                    0.5
                } else {
                    0.0
                };
            }
        }
        s / pairs
    }

    proptest! {
        #[test]
        fn auc_matches_pair_count(scored in proptest::collection::vec((0u8..5, any::<bool>()), 2..30)) {
            let scored: Vec<(f64, bool)> = scored.into_iter().map(|(s, b)| (s as f64 / 4.0, b)).collect();
            prop_assume!(scored.iter().any(|s| s.1) && scored.iter().any(|s| !s.1));
            prop_assert!((binary_auc(&scored) - brute_auc(&scored)).abs() < 1e-12);
        }

        #[test]
        fn metrics_ignore_case_order(
            cases in proptest::collection::vec((0usize..3, 1u8..10, 1u8..10, 1u8..10), 3..25),
            rot in 0usize..25,
        ) {
            let records: Vec<CaseRecord> = cases
                .iter()
                .map(|&(y, a, b, c)| {
                    let s = (a + b + c) as f64;
                    rec(y, &[a as f64 / s, b as f64 / s, c as f64 / s])
                })
                .collect();
            let mut shuffled = records.clone();
            shuffled.rotate_left(rot % records.len());
            shuffled.reverse();
            let a = compute_metrics(&records, 3).unwrap();
            let b = compute_metrics(&shuffled, 3).unwrap();
            prop_assert_eq!(a.accuracy, b.accuracy);
            prop_assert!((a.balanced_accuracy - b.balanced_accuracy).abs() < 1e-12);
            prop_assert!((a.nll - b.nll).abs() < 1e-12);
            prop_assert!(a.auc.is_nan() && b.auc.is_nan() || (a.auc - b.auc).abs() < 1e-12);
        }

        #[test]
        fn balanced_equals_plain_on_balanced_data(hits in proptest::collection::vec(any::<bool>(), 10)) {
            // Five cases per class.
            let records: Vec<CaseRecord> = hits
                .iter()
                .enumerate()
                .map(|(i, &h)| {
                    let y = i / 5;
                    let pred = if h { y } else { 1 - y };
                    let mut p = vec![0.2, 0.2];
                    p[pred] = 0.8;
                    rec(y, &p)
                })
                .collect();
            let m = compute_metrics(&records, 2).unwrap();
            prop_assert!((m.accuracy - m.balanced_accuracy).abs() < 1e-12);
        }
    }
}
