use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const DRAW_TOLERANCE: f64 = 1e-12;
const EXACT_LIMIT: usize = 20;
const MIN_PAIRS: usize = 5;

/// Midranks (1-based) of `values`; ties share the mean of their ranks.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank p-value for paired scores.
///
/// Zero differences are dropped and tied magnitudes midranked. Up to 20
/// non-zero pairs the null distribution is enumerated exactly; beyond that a
/// normal approximation with continuity and tie corrections is used.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Stats(format!("paired samples differ in length: {} vs {}", a.len(), b.len())));
    }
    if a.len() < MIN_PAIRS {
        return Err(Error::Stats(format!("need at least {MIN_PAIRS} pairs, got {}", a.len())));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|&v| v != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Ok(1.0);
    }
    let ranks = midranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let w_plus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();

    if n <= EXACT_LIMIT {
        // Doubled midranks are integers, so the null distribution of 2W+ is a
        // subset-sum count.
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let total: usize = doubled.iter().sum();
        let mut ways = vec![0.0f64; total + 1];
        ways[0] = 1.0;
        for &r in &doubled {
            for s in (r..=total).rev() {
                ways[s] += ways[s - r];
            }
        }
        let all = 2f64.powi(n as i32);
        let obs = (2.0 * w_plus).round() as usize;
        let lower: f64 = ways[..=obs].iter().sum::<f64>() / all;
        let upper: f64 = ways[obs..].iter().sum::<f64>() / all;
        return Ok((2.0 * lower.min(upper)).min(1.0));
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut ties = 0.0;
    let mut sorted = ranks.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
    if var <= 0.0 {
        return Ok(1.0);
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::standard();
    Ok((2.0 * (1.0 - normal.cdf(z))).clamp(0.0, 1.0))
}

/// Holm step-down decisions, in the input order: reject while
/// `p_(i) < alpha / (k - i)` over ascending p-values, stopping at the first
/// failure.
pub fn holm_correct(p_values: &[f64], alpha: f64) -> Vec<bool> {
    let k = p_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));
    let mut reject = vec![false; k];
    for (i, &idx) in order.iter().enumerate() {
        if p_values[idx] < alpha / (k - i) as f64 {
            reject[idx] = true;
        } else {
            break;
        }
    }
    reject
}

/// Counts of `a > b`, `a == b` (within 1e-12) and `a < b`.
pub fn win_draw_loss(a: &[f64], b: &[f64]) -> (usize, usize, usize) {
    let mut out = (0, 0, 0);
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() <= DRAW_TOLERANCE {
            out.1 += 1;
        } else if x > y {
            out.0 += 1;
        } else {
            out.2 += 1;
        }
    }
    out
}

/// Mean rank of each classifier over datasets, rank 1 for the highest score.
/// `scores[c][d]` is classifier `c` on dataset `d`; every entry must be present.
pub fn mean_ranks(scores: &[Vec<f64>]) -> Vec<f64> {
    let k = scores.len();
    let n_datasets = scores.first().map_or(0, Vec::len);
    let mut sums = vec![0.0; k];
    for d in 0..n_datasets {
        let neg: Vec<f64> = scores.iter().map(|s| -s[d]).collect();
        for (c, r) in midranks(&neg).into_iter().enumerate() {
            sums[c] += r;
        }
    }
    sums.into_iter().map(|s| s / n_datasets.max(1) as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonMatrix {
    pub classifiers: Vec<String>,
    pub datasets: Vec<String>,
    /// Mean score over the datasets each classifier completed.
    pub mean_scores: Vec<f64>,
    /// Mean rank over datasets complete for every classifier.
    pub mean_ranks: Vec<f64>,
    /// Symmetric; `None` on the diagonal or with too few shared datasets.
    pub p_values: Vec<Vec<Option<f64>>>,
    pub raw_decisions: Vec<Vec<Option<bool>>>,
    pub holm_decisions: Vec<Vec<Option<bool>>>,
    /// Row classifier against column classifier.
    pub win_draw_loss: Vec<Vec<Option<(usize, usize, usize)>>>,
}

/// Pairwise comparison with complete-case handling: each pair uses the
/// datasets both classifiers completed. `scores[c][d]` is `None` for a
/// failed or missing run.
pub fn compare(
    classifiers: &[String],
    datasets: &[String],
    scores: &[Vec<Option<f64>>],
    alpha: f64,
) -> Result<ComparisonMatrix> {
    let k = classifiers.len();
    if scores.len() != k || scores.iter().any(|s| s.len() != datasets.len()) {
        return Err(Error::Stats("score matrix does not match classifier and dataset lists".into()));
    }
    let mean_scores = scores
        .iter()
        .map(|s| {
            let v: Vec<f64> = s.iter().flatten().copied().collect();
            if v.is_empty() {
                f64::NAN
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        })
        .collect();
    let complete: Vec<usize> = (0..datasets.len()).filter(|&d| scores.iter().all(|s| s[d].is_some())).collect();
    let full: Vec<Vec<f64>> = scores
        .iter()
        .map(|s| complete.iter().map(|&d| s[d].unwrap_or(f64::NAN)).collect())
        .collect();
    let ranks = if complete.is_empty() { vec![f64::NAN; k] } else { mean_ranks(&full) };

    let mut p_values = vec![vec![None; k]; k];
    let mut wdl = vec![vec![None; k]; k];
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let (a, b): (Vec<f64>, Vec<f64>) = (0..datasets.len())
                .filter_map(|d| Some((scores[i][d]?, scores[j][d]?)))
                .unzip();
            let (w, dr, l) = win_draw_loss(&a, &b);
            wdl[i][j] = Some((w, dr, l));
            wdl[j][i] = Some((l, dr, w));
            if a.len() >= MIN_PAIRS {
                let p = wilcoxon_signed_rank(&a, &b)?;
                p_values[i][j] = Some(p);
                p_values[j][i] = Some(p);
                pairs.push((i, j, p));
            }
        }
    }
    let holm = holm_correct(&pairs.iter().map(|x| x.2).collect::<Vec<_>>(), alpha);
    let mut raw_decisions = vec![vec![None; k]; k];
    let mut holm_decisions = vec![vec![None; k]; k];
    for (&(i, j, p), &h) in pairs.iter().zip(&holm) {
        raw_decisions[i][j] = Some(p < alpha);
        raw_decisions[j][i] = Some(p < alpha);
        holm_decisions[i][j] = Some(h);
        holm_decisions[j][i] = Some(h);
    }
    Ok(ComparisonMatrix {
        classifiers: classifiers.to_vec(),
        datasets: datasets.to_vec(),
        mean_scores,
        mean_ranks: ranks,
        p_values,
        raw_decisions,
        holm_decisions,
        win_draw_loss: wdl,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Two-sided p by enumerating all sign patterns: the share of patterns
    /// whose W+ is at least as far from its mean as the observed one.
    fn enumerate_p(a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|&v| v != 0.0).collect();
        if d.is_empty() {
            return 1.0;
        }
        let r = midranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
        let mean: f64 = r.iter().sum::<f64>() / 2.0;
        let obs: f64 = d.iter().zip(&r).filter(|(v, _)| **v > 0.0).map(|(_, x)| x).sum();
        let n = d.len();
        let mut extreme = 0u64;
        for mask in 0u64..(1 << n) {
            let w: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| r[i]).sum();
            if (w - mean).abs() >= (obs - mean).abs() - 1e-9 {
                extreme += 1;
            }
        }
        extreme as f64 / (1u64 << n) as f64
    }

    #[test]
    fn identical_samples_give_one() {
        let a = [0.1, 0.5, 0.3, 0.9, 0.7];
        assert_eq!(wilcoxon_signed_rank(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn strict_dominance_on_ten() {
        let a: Vec<f64> = (0..10).map(|i| 0.5 + i as f64 * 0.01).collect();
        let b: Vec<f64> = a.iter().map(|v| v - 0.1 - v * 0.01).collect();
        let p = wilcoxon_signed_rank(&a, &b).unwrap();
        assert!((p - 2.0 / 1024.0).abs() < 1e-15);
        assert!((p - 0.001953).abs() < 1e-6);
    }

    #[test]
    fn textbook_eight_pairs() {
        let a = [125.0, 115.0, 130.0, 140.0, 140.0, 115.0, 140.0, 125.0, 140.0, 135.0];
        let b = [110.0, 122.0, 125.0, 120.0, 140.0, 124.0, 123.0, 137.0, 135.0, 145.0];
        let p = wilcoxon_signed_rank(&a, &b).unwrap();
        assert!((p - enumerate_p(&a, &b)).abs() < 1e-12);
        assert!(p > 0.5);
    }

    #[test]
    fn too_few_pairs() {
        assert!(wilcoxon_signed_rank(&[1.0; 4], &[0.0; 4]).is_err());
        assert!(wilcoxon_signed_rank(&[1.0; 6], &[0.0; 5]).is_err());
    }

    #[test]
    fn normal_approximation_is_close_to_exact() {
        // At n = 21 the approximation takes over; compare against a DP run
        // on the same ranks by checking the large-sample p lies near the
        // exact p at n = 20 with one extra small win.
        let a: Vec<f64> = (0..21).map(|i| i as f64 + if i % 3 == 0 { -0.5 } else { 0.7 }).collect();
        let b: Vec<f64> = (0..21).map(|i| i as f64).collect();
        let p_approx = wilcoxon_signed_rank(&a, &b).unwrap();
        let p_exact20 = wilcoxon_signed_rank(&a[..20], &b[..20]).unwrap();
        assert!(p_approx > 0.0 && p_approx < 1.0);
        assert!((p_approx - p_exact20).abs() < 0.05);
    }

    #[test]
    fn holm_on_published_p_values() {
        let p = [0.463, 0.005, 0.0005, 0.0245, 0.048, 0.877];
        assert_eq!(holm_correct(&p, 0.05), vec![false, true, true, false, false, false]);
        assert_eq!(holm_correct(&[0.04], 0.05), vec![true]);
        assert_eq!(holm_correct(&[1.0; 4], 0.05), vec![false; 4]);
    }

    #[test]
    fn wdl_examples() {
        let a = [0.1, 0.2, 0.3];
        assert_eq!(win_draw_loss(&a, &a), (0, 3, 0));
        assert_eq!(win_draw_loss(&[0.5, 0.1, 0.3], &[0.4, 0.2, 0.3]), (1, 1, 1));
    }

    #[test]
    fn ranks_with_ties() {
        let scores = vec![vec![0.9, 0.8], vec![0.9, 0.7], vec![0.5, 0.9]];
        assert_eq!(mean_ranks(&scores), vec![(1.5 + 2.0) / 2.0, (1.5 + 3.0) / 2.0, (3.0 + 1.0) / 2.0]);
    }

    #[test]
    fn comparison_with_injected_offsets() {
        let names: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let datasets: Vec<String> = (0..12).map(|d| format!("d{d}")).collect();
        let base: Vec<f64> = (0..12).map(|d| 0.5 + 0.03 * d as f64).collect();
        let offsets = [0.0, 0.01, 0.05, -0.02];
        let noise = |c: usize, d: usize| (((c * 7 + d * 13) % 11) as f64 - 5.0) * 0.004;
        let scores: Vec<Vec<Option<f64>>> = (0..4)
            .map(|c| (0..12).map(|d| Some(base[d] + offsets[c] + noise(c, d))).collect())
            .collect();
        let cm = compare(&names, &datasets, &scores, 0.05).unwrap();
        let mut flat = Vec::new();
        for i in 0..4 {
            for j in i + 1..4 {
                let a: Vec<f64> = scores[i].iter().flatten().copied().collect();
                let b: Vec<f64> = scores[j].iter().flatten().copied().collect();
                let p = enumerate_p(&a, &b);
                assert!((cm.p_values[i][j].unwrap() - p).abs() < 1e-9);
                flat.push(p);
            }
        }
        let holm = holm_correct(&flat, 0.05);
        let mut k = 0;
        for i in 0..4 {
            assert_eq!(cm.p_values[i][i], None);
            for j in i + 1..4 {
                assert_eq!(cm.holm_decisions[i][j], Some(holm[k]));
                assert_eq!(cm.holm_decisions[j][i], Some(holm[k]));
                k += 1;
            }
        }
    }

    #[test]
    fn identical_classifiers_all_draw() {
        let names = vec!["x".to_string(), "y".to_string()];
        let datasets: Vec<String> = (0..6).map(|d| d.to_string()).collect();
        let s: Vec<Option<f64>> = (0..6).map(|d| Some(d as f64 / 10.0)).collect();
        let cm = compare(&names, &datasets, &[s.clone(), s], 0.05).unwrap();
        assert_eq!(cm.p_values[0][1], Some(1.0));
        assert_eq!(cm.win_draw_loss[0][1], Some((0, 6, 0)));
    }

    #[test]
    fn failed_runs_are_dropped_pairwise() {
        let names = vec!["x".to_string(), "y".to_string()];
        let datasets: Vec<String> = (0..7).map(|d| d.to_string()).collect();
        let x: Vec<Option<f64>> = (0..7).map(|d| Some(0.6 + d as f64 / 100.0)).collect();
        let mut y: Vec<Option<f64>> = (0..7).map(|d| Some(0.5 + d as f64 / 100.0)).collect();
        y[3] = None;
        let cm = compare(&names, &datasets, &[x, y], 0.05).unwrap();
        assert_eq!(cm.win_draw_loss[0][1], Some((6, 0, 0)));
        assert!((cm.p_values[0][1].unwrap() - 2.0 / 64.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn exact_p_matches_enumeration(
            pairs in proptest::collection::vec((0u8..8, 0u8..8), 5..=12)
        ) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64 / 8.0).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64 / 8.0).collect();
            let p = wilcoxon_signed_rank(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!((p - enumerate_p(&a, &b)).abs() < 1e-9);
        }

        #[test]
        fn holm_rejects_an_ascending_prefix(ps in proptest::collection::vec(0.0f64..0.2, 1..12)) {
            let r = holm_correct(&ps, 0.05);
            let mut order: Vec<usize> = (0..ps.len()).collect();
            order.sort_by(|&a, &b| ps[a].total_cmp(&ps[b]).then(a.cmp(&b)));
            let flags: Vec<bool> = order.iter().map(|&i| r[i]).collect();
            prop_assert!(flags.windows(2).all(|w| w[0] || !w[1]));
        }

        #[test]
        fn wdl_partitions(a in proptest::collection::vec(0u8..4, 10), b in proptest::collection::vec(0u8..4, 10)) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let (w, d, l) = win_draw_loss(&a, &b);
            prop_assert_eq!(w + d + l, 10);
        }
    }
}
