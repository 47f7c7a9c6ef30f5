//! Bags of SFA words, the asymmetric BOSS distance, the single-parameter
//! 1-NN classifier and the grid-searched BOSS ensemble.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::sfa::{fit_mcb, sliding_dft, BinningStrategy, BreakpointMatrix, CoefficientRows, SfaParams, Word};

/// Histogram of words over a series' sliding windows.
///
/// Counts are stored sorted by word. When positions are kept, every counted
/// window contributes one `(start, word)` event, in start order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordBag {
    counts: Vec<(Word, u32)>,
    positions: Option<Vec<(usize, Word)>>,
}

impl WordBag {
    /// Bag over counted `(start, word)` events.
    pub fn from_events(events: Vec<(usize, Word)>, keep_positions: bool) -> Self {
        let mut map: HashMap<Word, u32> = HashMap::with_capacity(events.len());
        for &(_, w) in &events {
            *map.entry(w).or_default() += 1;
        }
        let mut counts: Vec<(Word, u32)> = map.into_iter().collect();
        counts.sort_unstable();
        Self {
            counts,
            positions: keep_positions.then_some(events),
        }
    }

    pub fn from_counts(counts: impl IntoIterator<Item = (Word, u32)>) -> Self {
        let mut map: HashMap<Word, u32> = HashMap::new();
        for (w, c) in counts {
            if c > 0 {
                *map.entry(w).or_default() += c;
            }
        }
        let mut counts: Vec<(Word, u32)> = map.into_iter().collect();
        counts.sort_unstable();
        Self {
            counts,
            positions: None,
        }
    }

    pub fn count(&self, word: Word) -> u32 {
        self.counts
            .binary_search_by_key(&word, |&(w, _)| w)
            .map_or(0, |i| self.counts[i].1)
    }

    /// Number of distinct words.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&(_, c)| c as u64).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Word, u32)> + '_ {
        self.counts.iter().copied()
    }

    pub fn has_positions(&self) -> bool {
        self.positions.is_some()
    }

    pub fn events(&self) -> Option<&[(usize, Word)]> {
        self.positions.as_deref()
    }

    pub fn positions_of(&self, word: Word) -> Option<Vec<usize>> {
        self.positions
            .as_ref()
            .map(|ev| ev.iter().filter(|&&(_, w)| w == word).map(|&(s, _)| s).collect())
    }

    /// Elementwise sum of counts; positions are dropped.
    pub fn merged(bags: &[&WordBag]) -> WordBag {
        WordBag::from_counts(bags.iter().flat_map(|b| b.iter()))
    }

    /// Heap bytes held by this bag.
    pub fn heap_bytes(&self) -> usize {
        self.counts.capacity() * std::mem::size_of::<(Word, u32)>()
            + self
                .positions
                .as_ref()
                .map_or(0, |p| p.capacity() * std::mem::size_of::<(usize, Word)>())
    }
}

/// Sum of squared count differences over the words present in `a`.
///
/// Words occurring only in `b` are ignored, so the distance is asymmetric.
pub fn boss_distance(a: &WordBag, b: &WordBag) -> f64 {
    boss_distance_bounded(a, b, u64::MAX) as f64
}

/// Integer BOSS distance, abandoning once the running sum exceeds `limit`.
/// Any returned value above `limit` is only a lower bound.
pub(crate) fn boss_distance_bounded(a: &WordBag, b: &WordBag, limit: u64) -> u64 {
    let bc = &b.counts;
    let mut j = 0;
    let mut sum = 0u64;
    for &(w, ca) in &a.counts {
        while j < bc.len() && bc[j].0 < w {
            j += 1;
        }
        let cb = if j < bc.len() && bc[j].0 == w { bc[j].1 } else { 0 };
        let d = ca.abs_diff(cb) as u64;
        sum += d * d;
        if sum > limit {
            return sum;
        }
    }
    sum
}

/// Words of every window of `series`, in window order.
pub fn window_words(series: &[f64], params: &SfaParams, breakpoints: &BreakpointMatrix) -> Result<Vec<Word>> {
    if series.len() < params.window_length {
        return Err(Error::InvalidParams(format!(
            "window length {} exceeds series length {}",
            params.window_length,
            series.len()
        )));
    }
    params.validate(series.len())?;
    if breakpoints.word_length() != params.word_length
        || breakpoints.alphabet_size() != params.alphabet_size
    {
        return Err(Error::InvalidParams("breakpoints do not match parameters".into()));
    }
    let rows = sliding_dft(series, params.window_length, params.word_length, params.normalise)?;
    let mut symbols = Vec::with_capacity(params.word_length);
    Ok(rows
        .rows()
        .map(|q| {
            breakpoints.symbols(q, &mut symbols);
            Word::pack(&symbols, params.alphabet_size)
        })
        .collect())
}

/// Numerosity reduction: a window is counted only when its word differs from
/// the previous window's word.
pub(crate) fn reduce_numerosity(words: impl IntoIterator<Item = Word>) -> Vec<(usize, Word)> {
    let mut events = Vec::new();
    let mut prev: Option<Word> = None;
    for (start, w) in words.into_iter().enumerate() {
        if prev != Some(w) {
            events.push((start, w));
        }
        prev = Some(w);
    }
    events
}

/// Numerosity-reduced bag of words over the windows of `series`.
pub fn build_bag(
    series: &[f64],
    params: &SfaParams,
    breakpoints: &BreakpointMatrix,
    keep_positions: bool,
) -> Result<WordBag> {
    let words = window_words(series, params, breakpoints)?;
    Ok(WordBag::from_events(reduce_numerosity(words), keep_positions))
}

/// Sliding DFTs of every training series, stacked.
pub(crate) fn training_coefficients(train: &TimeSeriesDataset, w: usize, l: usize, normalise: bool) -> Result<Vec<CoefficientRows>> {
    train
        .all_series()
        .iter()
        .map(|s| sliding_dft(s, w, l, normalise))
        .collect()
}

pub(crate) fn stack(rows: &[CoefficientRows]) -> CoefficientRows {
    let mut all = CoefficientRows::new(rows.first().map_or(0, CoefficientRows::width));
    for r in rows {
        all.extend(r);
    }
    all
}

/// Bags for each series from per-window coefficients, using the first `l`
/// coefficients and breakpoint rows.
pub(crate) fn bags_from_coefficients(
    per_series: &[CoefficientRows],
    breakpoints: &BreakpointMatrix,
    l: usize,
    keep_positions: bool,
) -> Vec<WordBag> {
    let alphabet = breakpoints.alphabet_size();
    let mut symbols = Vec::with_capacity(l);
    per_series
        .iter()
        .map(|rows| {
            let words = rows.rows().map(|q| {
                breakpoints.symbols(&q[..l], &mut symbols);
                Word::pack(&symbols, alphabet)
            });
            WordBag::from_events(reduce_numerosity(words), keep_positions)
        })
        .collect()
}

/// Index of the nearest candidate under `dist(query, candidate, limit)`;
/// ties go to the lowest index. `skip` excludes one candidate.
pub(crate) fn nearest_neighbour<F>(n: usize, skip: Option<usize>, mut dist: F) -> Option<usize>
where
    F: FnMut(usize, u64) -> u64,
{
    let mut best: Option<(u64, usize)> = None;
    for j in 0..n {
        if Some(j) == skip {
            continue;
        }
        let limit = best.map_or(u64::MAX, |(d, _)| d);
        let d = dist(j, limit);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, j));
        }
    }
    best.map(|(_, j)| j)
}

/// Leave-one-out 1-NN accuracy over `n` cases; 0 when `n < 2`.
pub(crate) fn loocv_accuracy<F>(labels: &[usize], mut dist: F) -> f64
where
    F: FnMut(usize, usize, u64) -> u64,
{
    let n = labels.len();
    if n < 2 {
        return 0.0;
    }
    let correct = (0..n)
        .filter(|&i| {
            let nn = nearest_neighbour(n, Some(i), |j, limit| dist(i, j, limit));
            nn.is_some_and(|j| labels[j] == labels[i])
        })
        .count();
    correct as f64 / n as f64
}

/// One fitted single-parameter BOSS classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BossMember {
    pub params: SfaParams,
    pub breakpoints: BreakpointMatrix,
    pub train_bags: Vec<WordBag>,
    pub train_labels: Vec<usize>,
    pub n_classes: usize,
    pub series_length: usize,
    pub train_accuracy: f64,
}

impl BossMember {
    /// Fits breakpoints on all training windows, builds the training bags and
    /// scores the member by leave-one-out 1-NN accuracy.
    pub fn fit(train: &TimeSeriesDataset, params: SfaParams, keep_positions: bool) -> Result<Self> {
        params.validate(train.series_length())?;
        let per_series = training_coefficients(train, params.window_length, params.word_length, params.normalise)?;
        let breakpoints = fit_mcb(&stack(&per_series), params.alphabet_size, BinningStrategy::EquiDepth, None)?;
        let train_bags = bags_from_coefficients(&per_series, &breakpoints, params.word_length, keep_positions);
        Ok(Self::from_parts(train, params, breakpoints, train_bags))
    }

    pub(crate) fn from_parts(
        train: &TimeSeriesDataset,
        params: SfaParams,
        breakpoints: BreakpointMatrix,
        train_bags: Vec<WordBag>,
    ) -> Self {
        let train_labels = train.labels().to_vec();
        let train_accuracy = loocv_accuracy(&train_labels, |i, j, limit| {
            boss_distance_bounded(&train_bags[i], &train_bags[j], limit)
        });
        Self {
            params,
            breakpoints,
            train_bags,
            train_labels,
            n_classes: train.n_classes(),
            series_length: train.series_length(),
            train_accuracy,
        }
    }

    pub fn transform(&self, series: &[f64], keep_positions: bool) -> Result<WordBag> {
        if series.len() != self.series_length {
            return Err(Error::InvalidParams(format!(
                "series of length {} given to a model fitted on length {}",
                series.len(),
                self.series_length
            )));
        }
        build_bag(series, &self.params, &self.breakpoints, keep_positions)
    }

    /// Label of the nearest training bag.
    pub fn classify_bag(&self, bag: &WordBag) -> usize {
        let nn = nearest_neighbour(self.train_bags.len(), None, |j, limit| {
            boss_distance_bounded(bag, &self.train_bags[j], limit)
        });
        nn.map_or(0, |j| self.train_labels[j])
    }

    pub fn classify(&self, series: &[f64]) -> Result<usize> {
        Ok(self.classify_bag(&self.transform(series, false)?))
    }

    pub fn heap_bytes(&self) -> usize {
        self.train_bags.iter().map(|b| b.heap_bytes() + std::mem::size_of::<WordBag>()).sum::<usize>()
            + self.train_labels.capacity() * std::mem::size_of::<usize>()
            + self.breakpoints.word_length() * self.breakpoints.alphabet_size() * 8
    }
}

/// Fits one BOSS classifier with fixed parameters.
pub fn fit_base_boss(train: &TimeSeriesDataset, params: SfaParams) -> Result<BossMember> {
    BossMember::fit(train, params, false)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BossConfig {
    pub word_lengths: Vec<usize>,
    pub alphabet_size: usize,
    pub normalise_options: Vec<bool>,
    pub retention: f64,
}

impl Default for BossConfig {
    fn default() -> Self {
        Self {
            word_lengths: vec![16, 14, 12, 10, 8],
            alphabet_size: 4,
            normalise_options: vec![true, false],
            retention: 0.92,
        }
    }
}

/// Window lengths searched for series length `m`: `m / 4` evenly spaced
/// integers from 10 to `m`, rounded and deduplicated; `{m}` when `m < 10`.
pub fn window_grid(m: usize) -> Vec<usize> {
    if m < 10 {
        return vec![m];
    }
    let count = (m / 4).max(2);
    let span = (m - 10) as f64;
    let mut grid: Vec<usize> = (0..count)
        .map(|i| (10.0 + span * i as f64 / (count - 1) as f64).round() as usize)
        .collect();
    grid.dedup();
    grid
}

/// Every valid `(l, alpha, w, p)` combination for series length `m`, in
/// window-major order. Word lengths longer than the window are skipped.
pub fn parameter_grid(m: usize, cfg: &BossConfig) -> Vec<SfaParams> {
    let mut out = Vec::new();
    for w in window_grid(m) {
        for &p in &cfg.normalise_options {
            for &l in &cfg.word_lengths {
                let params = SfaParams::new(l, cfg.alphabet_size, w, p);
                if params.validate(m).is_ok() {
                    out.push(params);
                }
            }
        }
    }
    out
}

/// Normalised vote proportions and the winning class (lowest index on ties).
pub(crate) fn vote(weights_by_class: Vec<f64>) -> (usize, Vec<f64>) {
    let c = weights_by_class.len();
    let total: f64 = weights_by_class.iter().sum();
    let probs = if total > 0.0 {
        weights_by_class.iter().map(|w| w / total).collect()
    } else {
        vec![1.0 / c as f64; c]
    };
    (argmax(&probs), probs)
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Members whose train accuracy is at least `retention` times the best.
pub(crate) fn retain_within<T>(members: &mut Vec<T>, retention: f64, acc: impl Fn(&T) -> f64) {
    let best = members.iter().map(&acc).fold(0.0, f64::max);
    members.retain(|m| acc(m) >= retention * best);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BossEnsemble {
    pub members: Vec<BossMember>,
    pub retention_threshold: f64,
    pub n_classes: usize,
    pub series_length: usize,
}

impl BossEnsemble {
    /// Evaluates the whole parameter grid, keeping members within the
    /// retention fraction of the best train accuracy seen so far.
    ///
    /// Per `(w, p)` the DFT and breakpoints are computed once for the longest
    /// word length; shorter words use the leading coefficients, which is
    /// identical to fitting them separately because binning is per column.
    pub fn fit(train: &TimeSeriesDataset, cfg: &BossConfig) -> Result<Self> {
        let m = train.series_length();
        let grid = parameter_grid(m, cfg);
        if grid.is_empty() {
            return Err(Error::EmptyParameterSpace(m));
        }
        let mut members: Vec<BossMember> = Vec::new();
        let mut best = 0.0f64;
        let mut i = 0;
        while i < grid.len() {
            let (w, p) = (grid[i].window_length, grid[i].normalise);
            let mut j = i;
            while j < grid.len() && grid[j].window_length == w && grid[j].normalise == p {
                j += 1;
            }
            let group = &grid[i..j];
            i = j;

            let l_max = group.iter().map(|g| g.word_length).max().unwrap_or(0);
            let per_series = training_coefficients(train, w, l_max, p)?;
            let full = fit_mcb(&stack(&per_series), cfg.alphabet_size, BinningStrategy::EquiDepth, None)?;
            for params in group {
                let l = params.word_length;
                let breakpoints = full.truncated(l);
                let bags = bags_from_coefficients(&per_series, &breakpoints, l, false);
                let member = BossMember::from_parts(train, *params, breakpoints, bags);
                let acc = member.train_accuracy;
                if acc > best {
                    best = acc;
                    members.retain(|m| m.train_accuracy >= cfg.retention * best);
                }
                if acc >= cfg.retention * best {
                    members.push(member);
                }
            }
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
        self.members.iter().map(BossMember::heap_bytes).sum()
    }
}

/// Fits the BOSS ensemble with the default grid.
pub fn fit_boss_ensemble(train: &TimeSeriesDataset) -> Result<BossEnsemble> {
    BossEnsemble::fit(train, &BossConfig::default())
}
