//! Spatial BOSS: BOSS members extended with a pyramid of localised bags.
//!
//! Level `k` of a pyramid splits the series into `2^k` segments by recursive
//! halving (the left half takes the odd point) and holds one bag per segment.
//! Each counted window belongs to the segment containing its start index, so
//! deeper levels are built from the stored word positions without
//! re-transforming the series. Level `k` of a height-`h` pyramid is weighted
//! `2^(k - (h - 1))`: the finest level has weight 1.

use serde::{Deserialize, Serialize};

use crate::boss::{
    boss_distance, boss_distance_bounded, nearest_neighbour, loocv_accuracy, retain_within, stack,
    training_coefficients, bags_from_coefficients, vote, window_grid, BossMember, WordBag,
};
use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::sfa::{fit_mcb, BinningStrategy, SfaParams};

pub const MAX_HEIGHT: usize = 3;

/// Segment boundaries `[start, end)` of every level up to `height - 1`.
pub fn pyramid_segments(m: usize, height: usize) -> Vec<Vec<(usize, usize)>> {
    let mut levels = vec![vec![(0, m)]];
    for _ in 1..height {
        let prev = levels.last().unwrap();
        let next = prev
            .iter()
            .flat_map(|&(a, b)| {
                let mid = a + (b - a).div_ceil(2);
                [(a, mid), (mid, b)]
            })
            .collect();
        levels.push(next);
    }
    levels
}

fn segment_of(segments: &[(usize, usize)], start: usize) -> usize {
    segments.partition_point(|&(_, end)| end <= start)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PyramidBag {
    /// `levels[k]` holds `2^k` segment bags. Only the level-0 bag keeps
    /// word positions.
    pub levels: Vec<Vec<WordBag>>,
    pub level_weights: Vec<f64>,
}

impl PyramidBag {
    pub fn from_bag(bag: WordBag) -> Self {
        Self {
            levels: vec![vec![bag]],
            level_weights: vec![1.0],
        }
    }

    pub fn height(&self) -> usize {
        self.levels.len()
    }

    pub fn global(&self) -> &WordBag {
        &self.levels[0][0]
    }

    /// Adds one level by splitting the deepest segments in half.
    pub fn deepen(&self, m: usize) -> Result<Self> {
        let events = self.global().events().ok_or(Error::PositionsUnavailable)?;
        let height = self.height() + 1;
        let segments = pyramid_segments(m, height).pop().unwrap();
        let mut buckets: Vec<Vec<(usize, crate::sfa::Word)>> = vec![Vec::new(); segments.len()];
        for &(start, w) in events {
            buckets[segment_of(&segments, start)].push((start, w));
        }
        let mut levels = self.levels.clone();
        levels.push(buckets.into_iter().map(|b| WordBag::from_events(b, false)).collect());
        Ok(Self {
            levels,
            level_weights: level_weights(height),
        })
    }

    pub fn heap_bytes(&self) -> usize {
        self.levels
            .iter()
            .flatten()
            .map(|b| b.heap_bytes() + std::mem::size_of::<WordBag>())
            .sum::<usize>()
            + self.level_weights.capacity() * 8
    }
}

pub fn level_weights(height: usize) -> Vec<f64> {
    (0..height).map(|k| 2f64.powi(k as i32 - (height as i32 - 1))).collect()
}

/// Pyramid built directly from a position-carrying bag.
pub fn build_pyramid(bag: WordBag, m: usize, height: usize) -> Result<PyramidBag> {
    if height == 0 || height > MAX_HEIGHT {
        return Err(Error::InvalidParams(format!("pyramid height {height} outside 1..={MAX_HEIGHT}")));
    }
    let mut p = PyramidBag::from_bag(bag);
    for _ in 1..height {
        p = p.deepen(m)?;
    }
    Ok(p)
}

/// `Σ_level weight × Σ_segment boss_distance(a_seg, b_seg)`.
pub fn pyramid_distance(a: &PyramidBag, b: &PyramidBag) -> Result<f64> {
    if a.height() != b.height() {
        return Err(Error::InvalidParams(format!(
            "pyramid heights differ: {} vs {}",
            a.height(),
            b.height()
        )));
    }
    let mut total = 0.0;
    for (k, (la, lb)) in a.levels.iter().zip(&b.levels).enumerate() {
        let level: f64 = la.iter().zip(lb).map(|(x, y)| boss_distance(x, y)).sum();
        total += a.level_weights[k] * level;
    }
    Ok(total)
}

/// Pyramid distance scaled by `2^(h-1)` to integers, abandoning once the sum
/// exceeds `limit`. Orders pairs exactly like [`pyramid_distance`].
fn scaled_distance_bounded(a: &PyramidBag, b: &PyramidBag, limit: u64) -> u64 {
    let mut sum = 0u64;
    for (k, (la, lb)) in a.levels.iter().zip(&b.levels).enumerate() {
        let weight = 1u64 << k;
        for (x, y) in la.iter().zip(lb) {
            let d = boss_distance_bounded(x, y, (limit - sum) / weight);
            sum = sum.saturating_add(d.saturating_mul(weight));
            if sum > limit {
                return sum;
            }
        }
    }
    sum
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SBossMember {
    /// Base classifier; its training bags keep word positions.
    pub base: BossMember,
    pub height: usize,
    pub pyramid_bags: Vec<PyramidBag>,
    pub train_accuracy: f64,
}

impl SBossMember {
    /// Height-1 member; identical to the base classifier.
    pub fn from_base(base: BossMember) -> Self {
        let pyramid_bags = base.train_bags.iter().cloned().map(PyramidBag::from_bag).collect();
        Self {
            train_accuracy: base.train_accuracy,
            height: 1,
            pyramid_bags,
            base,
        }
    }

    /// The same member one pyramid level deeper, rescored by LOOCV.
    pub fn divide_and_concatenate_bags(&self) -> Result<Self> {
        if self.height >= MAX_HEIGHT {
            return Err(Error::InvalidParams(format!("pyramid height is capped at {MAX_HEIGHT}")));
        }
        let m = self.base.series_length;
        let pyramid_bags = self
            .pyramid_bags
            .iter()
            .map(|p| p.deepen(m))
            .collect::<Result<Vec<_>>>()?;
        let train_accuracy = loocv_accuracy(&self.base.train_labels, |i, j, limit| {
            scaled_distance_bounded(&pyramid_bags[i], &pyramid_bags[j], limit)
        });
        Ok(Self {
            base: self.base.clone(),
            height: self.height + 1,
            pyramid_bags,
            train_accuracy,
        })
    }

    pub fn transform(&self, series: &[f64]) -> Result<PyramidBag> {
        let bag = self.base.transform(series, true)?;
        build_pyramid(bag, self.base.series_length, self.height)
    }

    pub fn classify(&self, series: &[f64]) -> Result<usize> {
        let query = self.transform(series)?;
        let nn = nearest_neighbour(self.pyramid_bags.len(), None, |j, limit| {
            scaled_distance_bounded(&query, &self.pyramid_bags[j], limit)
        });
        Ok(nn.map_or(0, |j| self.base.train_labels[j]))
    }

    pub fn heap_bytes(&self) -> usize {
        self.base.heap_bytes()
            + self
                .pyramid_bags
                .iter()
                .map(|p| p.heap_bytes() + std::mem::size_of::<PyramidBag>())
                .sum::<usize>()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SBossConfig {
    pub word_lengths: Vec<usize>,
    pub alphabet_size: usize,
    pub normalise_options: Vec<bool>,
    pub max_height: usize,
    pub retention: f64,
}

impl Default for SBossConfig {
    fn default() -> Self {
        Self {
            word_lengths: vec![16, 14, 12, 10, 8],
            alphabet_size: 4,
            normalise_options: vec![true, false],
            max_height: MAX_HEIGHT,
            retention: 0.92,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SBossEnsemble {
    pub members: Vec<SBossMember>,
    pub retention_threshold: f64,
    pub n_classes: usize,
    pub series_length: usize,
}

impl SBossEnsemble {
    /// For each word length, the best `(w, p)` by LOOCV (first strict
    /// improvement wins), then the best pyramid height, each height built on
    /// the previous one. Members within the retention fraction of the best
    /// are kept.
    pub fn fit(train: &TimeSeriesDataset, cfg: &SBossConfig) -> Result<Self> {
        if cfg.max_height == 0 || cfg.max_height > MAX_HEIGHT {
            return Err(Error::InvalidParams(format!("max height {} outside 1..={MAX_HEIGHT}", cfg.max_height)));
        }
        let m = train.series_length();
        let mut best: Vec<Option<BossMember>> = vec![None; cfg.word_lengths.len()];
        // The (w, p) sweep is the outer loop so each DFT is computed once;
        // candidates are still visited in the same order for every l.
        for w in window_grid(m) {
            for &p in &cfg.normalise_options {
                let valid: Vec<(usize, SfaParams)> = cfg
                    .word_lengths
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| (i, SfaParams::new(l, cfg.alphabet_size, w, p)))
                    .filter(|(_, params)| params.validate(m).is_ok())
                    .collect();
                let Some(l_max) = valid.iter().map(|(_, q)| q.word_length).max() else {
                    continue;
                };
                let per_series = training_coefficients(train, w, l_max, p)?;
                let full = fit_mcb(&stack(&per_series), cfg.alphabet_size, BinningStrategy::EquiDepth, None)?;
                for (i, params) in valid {
                    let l = params.word_length;
                    let breakpoints = full.truncated(l);
                    let bags = bags_from_coefficients(&per_series, &breakpoints, l, true);
                    let member = BossMember::from_parts(train, params, breakpoints, bags);
                    if best[i].as_ref().is_none_or(|b| member.train_accuracy > b.train_accuracy) {
                        best[i] = Some(member);
                    }
                }
            }
        }
        if best.iter().all(Option::is_none) {
            return Err(Error::EmptyParameterSpace(m));
        }

        let mut members = Vec::new();
        for base in best.into_iter().flatten() {
            let mut current = SBossMember::from_base(base);
            let mut chosen = current.clone();
            for _ in 1..cfg.max_height {
                current = current.divide_and_concatenate_bags()?;
                if current.train_accuracy > chosen.train_accuracy {
                    chosen = current.clone();
                }
            }
            members.push(chosen);
        }
        retain_within(&mut members, cfg.retention, |m| m.train_accuracy);
        Ok(Self {
            members,
            retention_threshold: cfg.retention,
            n_classes: train.n_classes(),
            series_length: m,
        })
    }

    pub fn predict(&self, series: &[f64]) -> Result<(usize, Vec<f64>)> {
        if series.len() != self.series_length {
            return Err(Error::InvalidParams(format!(
                "series of length {} given to a model fitted on length {}",
                series.len(),
                self.series_length
            )));
        }
        let mut votes = vec![0.0; self.n_classes];
        for m in &self.members {
            votes[m.classify(series)?] += 1.0;
        }
        Ok(vote(votes))
    }

    pub fn heap_bytes(&self) -> usize {
        self.members.iter().map(SBossMember::heap_bytes).sum()
    }
}

pub fn fit_sboss(train: &TimeSeriesDataset) -> Result<SBossEnsemble> {
    SBossEnsemble::fit(train, &SBossConfig::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boss::{build_bag, reduce_numerosity};
    use crate::sfa::{sfa_word, BreakpointMatrix, Word};
    use crate::simulator::{simulate, SimConfig};
    use proptest::prelude::*;

    fn bag(pairs: &[(u64, u32)]) -> WordBag {
        WordBag::from_counts(pairs.iter().map(|&(w, c)| (Word(w), c)))
    }

    fn member_on(seed: u64, m: usize, w: usize, l: usize) -> (TimeSeriesDataset, BossMember) {
        let cfg = SimConfig {
            n_per_class: 5,
            m,
            noise_sigma: 0.5,
            seed,
            counts_per_class: vec![vec![2, 0], vec![0, 2]],
            ..SimConfig::default()
        }
        .with_shape_len(10);
        let train = simulate(&cfg).unwrap().dataset;
        let member = BossMember::fit(&train, SfaParams::new(l, 4, w, seed % 2 == 0), true).unwrap();
        (train, member)
    }

    #[test]
    fn segments_halve_recursively() {
        let segs = pyramid_segments(10, 3);
        assert_eq!(segs[0], vec![(0, 10)]);
        assert_eq!(segs[1], vec![(0, 5), (5, 10)]);
        assert_eq!(segs[2], vec![(0, 3), (3, 5), (5, 8), (8, 10)]);
        assert_eq!(pyramid_segments(7, 2)[1], vec![(0, 4), (4, 7)]);
    }

    #[test]
    fn weights_favour_fine_levels() {
        assert_eq!(level_weights(1), vec![1.0]);
        assert_eq!(level_weights(3), vec![0.25, 0.5, 1.0]);
    }

    #[test]
    fn words_only_in_first_half() {
        let events = vec![(0, Word(1)), (2, Word(2)), (4, Word(1))];
        let p = build_pyramid(WordBag::from_events(events, true), 20, 2).unwrap();
        assert_eq!(p.levels[1][0].total(), 3);
        assert!(p.levels[1][1].is_empty());
    }

    #[test]
    fn missing_positions_rejected() {
        let p = PyramidBag::from_bag(bag(&[(1, 2)]));
        assert!(matches!(p.deepen(10), Err(Error::PositionsUnavailable)));
        let (_, member) = member_on(1, 60, 12, 4);
        let mut no_pos = member.clone();
        no_pos.train_bags = member.train_bags.iter().map(|b| WordBag::from_counts(b.iter())).collect();
        assert!(matches!(
            SBossMember::from_base(no_pos).divide_and_concatenate_bags(),
            Err(Error::PositionsUnavailable)
        ));
    }

    #[test]
    fn hand_summed_two_level_distance() {
        let a = PyramidBag {
            levels: vec![vec![bag(&[(1, 3), (2, 1)])], vec![bag(&[(1, 2)]), bag(&[(1, 1), (2, 1)])]],
            level_weights: level_weights(2),
        };
        let b = PyramidBag {
            levels: vec![vec![bag(&[(1, 1), (2, 2)])], vec![bag(&[(2, 2)]), bag(&[(1, 1)])]],
            level_weights: level_weights(2),
        };
        // Level 0: (3-1)^2 + (1-2)^2 = 5, weight 0.5.
        // Level 1: (2-0)^2 = 4 and (1-1)^2 + (1-0)^2 = 1, weight 1.
        assert_eq!(pyramid_distance(&a, &b).unwrap(), 0.5 * 5.0 + 5.0);
        assert_eq!(pyramid_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(scaled_distance_bounded(&a, &b, u64::MAX), 15);
        let short = PyramidBag::from_bag(bag(&[(1, 1)]));
        assert!(pyramid_distance(&a, &short).is_err());
    }

    fn brute_force_pyramid(series: &[f64], params: &SfaParams, bp: &BreakpointMatrix, height: usize) -> Vec<Vec<WordBag>> {
        let w = params.window_length;
        let words: Vec<Word> = (0..=series.len() - w)
            .map(|s| sfa_word(&series[s..s + w], params, bp).unwrap())
            .collect();
        let events = reduce_numerosity(words);
        pyramid_segments(series.len(), height)
            .into_iter()
            .map(|level| {
                level
                    .into_iter()
                    .map(|(a, b)| {
                        let inside: Vec<_> = events.iter().copied().filter(|&(s, _)| s >= a && s < b).collect();
                        WordBag::from_events(inside, false)
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn pyramid_matches_rebuild() {
        let (train, member) = member_on(4, 90, 16, 6);
        let sm = SBossMember::from_base(member)
            .divide_and_concatenate_bags()
            .unwrap()
            .divide_and_concatenate_bags()
            .unwrap();
        for (i, series) in train.all_series().iter().enumerate() {
            let oracle = brute_force_pyramid(series, &sm.base.params, &sm.base.breakpoints, 3);
            let got = &sm.pyramid_bags[i];
            for k in 1..3 {
                assert_eq!(got.levels[k], oracle[k]);
            }
            assert_eq!(WordBag::from_counts(got.global().iter()), oracle[0][0]);
            assert_eq!(&sm.transform(series).unwrap(), got);
        }
    }

    #[test]
    fn location_dependent_data_prefers_deeper_pyramids() {
        // One spike per series, in the first half for class 0 and the second
        // half for class 1. Global bags are identical across classes.
        let m = 96;
        let spike = crate::simulator::spike(8);
        let mut series = Vec::new();
        let mut labels = Vec::new();
        for class in 0..2 {
            for k in 0..6 {
                let start = if class == 0 { 12 + 3 * k } else { 60 + 3 * k };
                let mut x = vec![0.0; m];
                x[start..start + 8].copy_from_slice(&spike);
                series.push(x);
                labels.push(class);
            }
        }
        let train = TimeSeriesDataset::new("halves", series, labels, vec!["a".into(), "b".into()]).unwrap();
        let base = BossMember::fit(&train, SfaParams::new(4, 4, 12, false), true).unwrap();
        let h1 = SBossMember::from_base(base);
        let h2 = h1.divide_and_concatenate_bags().unwrap();
        assert!(h2.train_accuracy > h1.train_accuracy);
        assert_eq!(h2.train_accuracy, 1.0);

        assert_eq!(h1.train_accuracy, 0.5);

        let ens = SBossEnsemble::fit(&train, &SBossConfig::default()).unwrap();
        for i in 0..train.len() {
            assert_eq!(ens.predict(train.series(i)).unwrap().0, train.label(i));
        }
    }

    #[test]
    fn location_free_data_keeps_height_one_on_ties() {
        // Class is the spike count; every height separates perfectly, so
        // deeper pyramids never strictly improve.
        let spike = crate::simulator::spike(8);
        let mut series = Vec::new();
        let mut labels = Vec::new();
        for class in 0..2 {
            for k in 0..5 {
                let mut x = vec![0.0; 64];
                x[4 + k..12 + k].copy_from_slice(&spike);
                if class == 1 {
                    x[36 + k..44 + k].copy_from_slice(&spike);
                }
                series.push(x);
                labels.push(class);
            }
        }
        let train = TimeSeriesDataset::new("count", series, labels, vec!["a".into(), "b".into()]).unwrap();
        let ens = SBossEnsemble::fit(&train, &SBossConfig::default()).unwrap();
        for m in &ens.members {
            if m.base.train_accuracy == 1.0 {
                assert_eq!(m.height, 1);
            }
        }
    }

    #[test]
    fn at_most_one_member_per_word_length() {
        let (train, _) = member_on(5, 60, 12, 4);
        let ens = SBossEnsemble::fit(&train, &SBossConfig::default()).unwrap();
        assert!(!ens.members.is_empty() && ens.members.len() <= 5);
        let mut ls: Vec<usize> = ens.members.iter().map(|m| m.base.params.word_length).collect();
        ls.dedup();
        assert_eq!(ls.len(), ens.members.len());
        assert!(ens.members.iter().all(|m| (1..=3).contains(&m.height)));
        let base = BossMember::fit(&train, ens.members[0].base.params, false).unwrap();
        assert!(ens.members[0].heap_bytes() >= base.heap_bytes());
    }

    #[test]
    fn height_one_classify_matches_boss() {
        let (train, member) = member_on(6, 60, 12, 4);
        let sm = SBossMember::from_base(member.clone());
        for s in train.all_series() {
            assert_eq!(sm.classify(s).unwrap(), member.classify(s).unwrap());
        }
        let bag = build_bag(train.series(0), &member.params, &member.breakpoints, true).unwrap();
        assert_eq!(bag, member.train_bags[0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn partition_identity(seed in 0u64..1000, w in 8usize..20) {
            let (_, member) = member_on(seed, 70, w, 4);
            let sm = SBossMember::from_base(member.clone())
                .divide_and_concatenate_bags()
                .unwrap()
                .divide_and_concatenate_bags()
                .unwrap();
            for p in &sm.pyramid_bags {
                for k in 1..p.height() {
                    for (parent, pair) in p.levels[k - 1].iter().zip(p.levels[k].chunks(2)) {
                        let merged = WordBag::merged(&[&pair[0], &pair[1]]);
                        prop_assert_eq!(&merged, &WordBag::from_counts(parent.iter()));
                    }
                }
            }
            for (a, b) in sm.pyramid_bags.iter().zip(&member.train_bags).take(3) {
                let pa = PyramidBag::from_bag(b.clone());
                let pb = PyramidBag::from_bag(a.global().clone());
                prop_assert_eq!(
                    pyramid_distance(&pa, &pb).unwrap().to_bits(),
                    boss_distance(b, a.global()).to_bits()
                );
            }
        }
    }
}
