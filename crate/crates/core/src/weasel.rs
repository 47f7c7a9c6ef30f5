//! WEASEL: unigram and bigram SFA features over many window sizes, filtered
//! by a chi-squared score and classified by logistic regression.
//!
//! Per window size, Fourier coefficients are ranked by ANOVA F and the top
//! `l` are discretised with information-gain breakpoints. A series becomes a
//! sparse histogram of `(w, word)` unigrams and `(w, word[j - w], word[j])`
//! bigrams, counted without numerosity reduction.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boss::argmax;
use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::logistic::{LogisticConfig, LogisticModel, SparseRow};
use crate::sfa::{
    anova_f_select, available_coefficients, fit_mcb, sliding_dft, BinningStrategy, BreakpointMatrix, CoefficientRows,
    SfaParams, Word,
};

pub const PROBABILITY_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FeatureKey {
    pub window: u32,
    /// Bigram predecessor: the word `w` positions earlier.
    pub prev: Option<Word>,
    pub word: Word,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeaselConfig {
    pub word_lengths: Vec<usize>,
    pub normalise_options: Vec<bool>,
    pub alphabet_size: usize,
    pub chi_threshold: f64,
    /// Window sweep step; `None` is 1 for `m <= 64`, else `ceil(m / 64)`.
    pub window_step: Option<usize>,
    pub folds: usize,
    pub logistic: LogisticConfig,
    pub seed: u64,
}

impl Default for WeaselConfig {
    fn default() -> Self {
        Self {
            word_lengths: vec![4, 6, 8],
            normalise_options: vec![true, false],
            alphabet_size: 4,
            chi_threshold: 2.0,
            window_step: None,
            folds: 10,
            logistic: LogisticConfig::default(),
            seed: 0,
        }
    }
}

/// Window sizes swept for series length `m` and word length `l`: from the
/// smallest window that supplies `l` coefficients up to `m`.
pub fn window_sweep(m: usize, l: usize, normalise: bool, step: Option<usize>) -> Vec<usize> {
    let step = step.unwrap_or(if m <= 64 { 1 } else { m.div_ceil(64) }).max(1);
    let Some(start) = (2..=m).find(|&w| SfaParams::new(l, 4, w, normalise).validate(m).is_ok()) else {
        return Vec::new();
    };
    (start..=m).step_by(step).collect()
}

/// Per-window-size selection and binning learned on the training set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowTransform {
    pub window: usize,
    /// Number of leading DFT values the selection draws from.
    pub pool: usize,
    pub selected: Vec<usize>,
    pub breakpoints: BreakpointMatrix,
}

impl WindowTransform {
    fn words_from_rows(&self, rows: &CoefficientRows) -> Vec<Word> {
        let alpha = self.breakpoints.alphabet_size();
        let mut projected = Vec::with_capacity(self.selected.len());
        let mut symbols = Vec::with_capacity(self.selected.len());
        rows.rows()
            .map(|q| {
                projected.clear();
                projected.extend(self.selected.iter().map(|&j| q[j]));
                self.breakpoints.symbols(&projected, &mut symbols);
                Word::pack(&symbols, alpha)
            })
            .collect()
    }

    pub fn words(&self, series: &[f64], normalise: bool) -> Result<Vec<Word>> {
        let rows = sliding_dft(series, self.window, self.pool, normalise)?;
        Ok(self.words_from_rows(&rows))
    }
}

/// Unigram and bigram events of one window size, in emission order.
pub fn window_features(window: usize, words: &[Word]) -> impl Iterator<Item = FeatureKey> + '_ {
    let w = window as u32;
    let unigrams = words.iter().map(move |&word| FeatureKey { window: w, prev: None, word });
    let bigrams = (window..words.len()).map(move |j| FeatureKey {
        window: w,
        prev: Some(words[j - window]),
        word: words[j],
    });
    unigrams.chain(bigrams)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeaselFeatures {
    pub transforms: Vec<WindowTransform>,
    pub keys: Vec<FeatureKey>,
    pub rows: Vec<SparseRow>,
}

/// Learns per-window transforms on `train` and returns its feature matrix.
/// Column `k` of `rows` counts `keys[k]`.
pub fn extract_weasel_features(
    train: &TimeSeriesDataset,
    l: usize,
    normalise: bool,
    cfg: &WeaselConfig,
) -> Result<WeaselFeatures> {
    let m = train.series_length();
    let windows = window_sweep(m, l, normalise, cfg.window_step);
    if windows.is_empty() {
        return Err(Error::InvalidParams(format!("no window of a length-{m} series supplies {l} coefficients")));
    }
    let mut index: HashMap<FeatureKey, usize> = HashMap::new();
    let mut keys = Vec::new();
    let mut counts: Vec<HashMap<usize, u32>> = vec![HashMap::new(); train.len()];
    let mut transforms = Vec::with_capacity(windows.len());

    for w in windows {
        let pool = (2 * available_coefficients(w, normalise)).min(2 * l);
        let per_series: Vec<CoefficientRows> = train
            .all_series()
            .iter()
            .map(|s| sliding_dft(s, w, pool, normalise))
            .collect::<Result<_>>()?;
        let mut stacked = CoefficientRows::new(pool);
        let mut window_labels = Vec::new();
        for (i, rows) in per_series.iter().enumerate() {
            stacked.extend(rows);
            window_labels.extend(std::iter::repeat_n(train.label(i), rows.len()));
        }
        let selected = anova_f_select(&stacked, &window_labels, l)?;
        let projected = CoefficientRows::from_rows(
            l,
            stacked.rows().map(|q| selected.iter().map(|&j| q[j]).collect::<Vec<_>>()),
        );
        let breakpoints = fit_mcb(
            &projected,
            cfg.alphabet_size,
            BinningStrategy::InformationGain,
            Some(&window_labels),
        )?;
        let t = WindowTransform {
            window: w,
            pool,
            selected,
            breakpoints,
        };
        for (i, rows) in per_series.iter().enumerate() {
            let words = t.words_from_rows(rows);
            for key in window_features(w, &words) {
                let col = *index.entry(key).or_insert_with(|| {
                    keys.push(key);
                    keys.len() - 1
                });
                *counts[i].entry(col).or_default() += 1;
            }
        }
        transforms.push(t);
    }

    let rows = counts
        .into_iter()
        .map(|c| {
            let mut row: SparseRow = c.into_iter().map(|(j, v)| (j as u32, v as f64)).collect();
            row.sort_unstable_by_key(|&(j, _)| j);
            row
        })
        .collect();
    Ok(WeaselFeatures { transforms, keys, rows })
}

/// One-vs-rest chi-squared score of every feature: per class, the feature's
/// total count in that class against the share expected from class priors,
/// maximised over classes.
pub fn chi2_scores(rows: &[SparseRow], labels: &[usize], n_classes: usize, n_features: usize) -> Vec<f64> {
    let n = labels.len() as f64;
    let mut priors = vec![0.0; n_classes];
    for &y in labels {
        priors[y] += 1.0 / n;
    }
    let mut observed = vec![0.0; n_features * n_classes];
    for (row, &y) in rows.iter().zip(labels) {
        for &(j, v) in row {
            observed[j as usize * n_classes + y] += v;
        }
    }
    observed
        .chunks(n_classes)
        .map(|o| {
            let total: f64 = o.iter().sum();
            let mut best = 0.0f64;
            for c in 0..n_classes {
                let (e_in, e_out) = (total * priors[c], total * (1.0 - priors[c]));
                let (o_in, o_out) = (o[c], total - o[c]);
                let mut stat = 0.0;
                if e_in > 0.0 {
                    stat += (o_in - e_in).powi(2) / e_in;
                }
                if e_out > 0.0 {
                    stat += (o_out - e_out).powi(2) / e_out;
                }
                best = best.max(stat);
            }
            best
        })
        .collect()
}

/// Indices of features scoring at least `threshold`, ascending.
pub fn chi2_filter(
    rows: &[SparseRow],
    labels: &[usize],
    n_classes: usize,
    n_features: usize,
    threshold: f64,
) -> Result<Vec<usize>> {
    let kept: Vec<usize> = chi2_scores(rows, labels, n_classes, n_features)
        .iter()
        .enumerate()
        .filter(|&(_, &s)| s >= threshold)
        .map(|(j, _)| j)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyFeatureSpace);
    }
    Ok(kept)
}

/// Fold id of every case: each class is shuffled and dealt round-robin, so
/// fold sizes differ by at most one within each class.
pub fn stratified_folds(labels: &[usize], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut out = vec![0; labels.len()];
    let mut next = 0;
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        members.shuffle(&mut rng);
        for i in members {
            out[i] = next % folds;
            next += 1;
        }
    }
    out
}

/// Feature matrix restricted to the chi-squared survivors, with columns
/// ordered by key.
struct FilteredFeatures {
    transforms: Vec<WindowTransform>,
    keys: Vec<FeatureKey>,
    rows: Vec<SparseRow>,
    threshold: f64,
}

fn filtered_features(train: &TimeSeriesDataset, l: usize, p: bool, cfg: &WeaselConfig) -> Result<FilteredFeatures> {
    let f = extract_weasel_features(train, l, p, cfg)?;
    let c = train.n_classes();
    let (kept, threshold) = match chi2_filter(&f.rows, train.labels(), c, f.keys.len(), cfg.chi_threshold) {
        Ok(k) => (k, cfg.chi_threshold),
        Err(Error::EmptyFeatureSpace) => (chi2_filter(&f.rows, train.labels(), c, f.keys.len(), 0.0)?, 0.0),
        Err(e) => return Err(e),
    };
    let mut order: Vec<usize> = kept;
    order.sort_by_key(|&j| f.keys[j]);
    let mut remap = vec![u32::MAX; f.keys.len()];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new as u32;
    }
    let keys = order.iter().map(|&j| f.keys[j]).collect();
    let rows = f
        .rows
        .into_iter()
        .map(|row| {
            let mut r: SparseRow = row
                .into_iter()
                .filter_map(|(j, v)| (remap[j as usize] != u32::MAX).then(|| (remap[j as usize], v)))
                .collect();
            r.sort_unstable_by_key(|&(j, _)| j);
            r
        })
        .collect();
    Ok(FilteredFeatures {
        transforms: f.transforms,
        keys,
        rows,
        threshold,
    })
}

/// Stratified k-fold accuracy of logistic regression on the features of
/// one `(l, p)` candidate.
pub fn cross_validate(train: &TimeSeriesDataset, l: usize, p: bool, cfg: &WeaselConfig) -> Result<f64> {
    let f = filtered_features(train, l, p, cfg)?;
    Ok(cv_accuracy(&f, train, cfg))
}

fn cv_accuracy(f: &FilteredFeatures, train: &TimeSeriesDataset, cfg: &WeaselConfig) -> f64 {
    let n = train.len();
    let k = cfg.folds.min(n).max(1);
    if k < 2 {
        return 0.0;
    }
    let fold = stratified_folds(train.labels(), k, cfg.seed);
    let mut correct = 0;
    for held in 0..k {
        let (mut rows, mut labels) = (Vec::new(), Vec::new());
        for i in (0..n).filter(|&i| fold[i] != held) {
            rows.push(f.rows[i].clone());
            labels.push(train.label(i));
        }
        let model = LogisticModel::fit(&rows, &labels, train.n_classes(), f.keys.len(), &cfg.logistic);
        correct += (0..n)
            .filter(|&i| fold[i] == held)
            .filter(|&i| argmax(&model.decision(&f.rows[i])) == train.label(i))
            .count();
    }
    correct as f64 / n as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeaselModel {
    pub word_length: usize,
    pub normalise: bool,
    pub transforms: Vec<WindowTransform>,
    /// Retained features, sorted; column `k` of the linear model is `keys[k]`.
    pub keys: Vec<FeatureKey>,
    pub linear: LogisticModel,
    pub chi_threshold: f64,
    pub cv_accuracy: f64,
    pub n_classes: usize,
    pub series_length: usize,
    /// Set when training data had one class; prediction is then constant.
    pub single_class: Option<usize>,
}

impl WeaselModel {
    /// Selects `(l, p)` by cross-validated accuracy (ties to the smaller `l`,
    /// then `p = true` in the default order) and refits on all of `train`.
    pub fn fit(train: &TimeSeriesDataset, cfg: &WeaselConfig) -> Result<Self> {
        let m = train.series_length();
        let present: Vec<usize> = train.class_counts().iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, _)| i).collect();
        if present.len() == 1 {
            return Ok(Self {
                word_length: 0,
                normalise: false,
                transforms: Vec::new(),
                keys: Vec::new(),
                linear: LogisticModel::zeros(train.n_classes(), 0),
                chi_threshold: cfg.chi_threshold,
                cv_accuracy: 1.0,
                n_classes: train.n_classes(),
                series_length: m,
                single_class: Some(present[0]),
            });
        }
        let mut lengths = cfg.word_lengths.clone();
        lengths.sort_unstable();
        let mut best: Option<(f64, usize, bool, FilteredFeatures)> = None;
        for &l in &lengths {
            for &p in &cfg.normalise_options {
                let f = match filtered_features(train, l, p, cfg) {
                    Ok(f) => f,
                    Err(Error::InvalidParams(_)) => continue,
                    Err(e) => return Err(e),
                };
                let acc = cv_accuracy(&f, train, cfg);
                if best.as_ref().is_none_or(|b| acc > b.0) {
                    best = Some((acc, l, p, f));
                }
            }
        }
        let (acc, l, p, f) = best.ok_or(Error::EmptyParameterSpace(m))?;
        let linear = LogisticModel::fit(&f.rows, train.labels(), train.n_classes(), f.keys.len(), &cfg.logistic);
        Ok(Self {
            word_length: l,
            normalise: p,
            transforms: f.transforms,
            keys: f.keys,
            linear,
            chi_threshold: f.threshold,
            cv_accuracy: acc,
            n_classes: train.n_classes(),
            series_length: m,
            single_class: None,
        })
    }

    /// Sparse feature row of `series`; words never retained are dropped.
    pub fn features(&self, series: &[f64]) -> Result<SparseRow> {
        if series.len() != self.series_length {
            return Err(Error::InvalidParams(format!(
                "series of length {} given to a model fitted on length {}",
                series.len(),
                self.series_length
            )));
        }
        let mut counts: HashMap<u32, f64> = HashMap::new();
        for t in &self.transforms {
            let words = t.words(series, self.normalise)?;
            for key in window_features(t.window, &words) {
                if let Ok(j) = self.keys.binary_search(&key) {
                    *counts.entry(j as u32).or_default() += 1.0;
                }
            }
        }
        let mut row: SparseRow = counts.into_iter().collect();
        row.sort_unstable_by_key(|&(j, _)| j);
        Ok(row)
    }

    /// Clamped softmax probabilities and the most probable class.
    pub fn predict(&self, series: &[f64]) -> Result<(usize, Vec<f64>)> {
        if let Some(c) = self.single_class {
            if series.len() != self.series_length {
                return Err(Error::InvalidParams("series length mismatch".into()));
            }
            let mut p = vec![0.0; self.n_classes];
            p[c] = 1.0;
            return Ok((c, p));
        }
        let probs = clamp_probabilities(&self.linear.predict_proba(&self.features(series)?));
        Ok((argmax(&probs), probs))
    }

    pub fn heap_bytes(&self) -> usize {
        self.linear.heap_bytes()
            + self.keys.capacity() * std::mem::size_of::<FeatureKey>()
            + self
                .transforms
                .iter()
                .map(|t| t.selected.capacity() * 8 + t.breakpoints.word_length() * t.breakpoints.alphabet_size() * 8)
                .sum::<usize>()
    }
}

/// Clamps to `[1e-8, 1 - 1e-8]` and renormalises.
pub fn clamp_probabilities(p: &[f64]) -> Vec<f64> {
    let clamped: Vec<f64> = p
        .iter()
        .map(|&v| v.clamp(PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR))
        .collect();
    let s: f64 = clamped.iter().sum();
    clamped.into_iter().map(|v| v / s).collect()
}

pub fn fit_weasel(train: &TimeSeriesDataset) -> Result<WeaselModel> {
    WeaselModel::fit(train, &WeaselConfig::default())
}
