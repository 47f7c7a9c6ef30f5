//! Symbolic Fourier approximation: truncated windowed DFTs, per-coefficient
//! breakpoint learning (MCB) and discretisation of windows into words.
//!
//! DFT output is the unnormalised forward transform, laid out as interleaved
//! `[re(q_k), im(q_k), re(q_k+1), ...]`. With normalisation on, the window is
//! z-normalised first and the mean coefficient `q_0` is skipped.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dataset::{mean_std, z_normalise, NORM_TOLERANCE};
use crate::error::{Error, Result};

/// Sliding transforms recompute exactly after this many incremental steps.
const RESYNC_INTERVAL: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SfaParams {
    pub word_length: usize,
    pub alphabet_size: usize,
    pub window_length: usize,
    pub normalise: bool,
}

impl SfaParams {
    pub fn new(word_length: usize, alphabet_size: usize, window_length: usize, normalise: bool) -> Self {
        Self {
            word_length,
            alphabet_size,
            window_length,
            normalise,
        }
    }

    /// Checks the parameters against a series length `m`.
    pub fn validate(&self, m: usize) -> Result<()> {
        let SfaParams {
            word_length: l,
            alphabet_size: a,
            window_length: w,
            normalise,
        } = *self;
        if l == 0 || l % 2 != 0 {
            return Err(Error::InvalidParams(format!("word length {l} must be positive and even")));
        }
        if a < 2 {
            return Err(Error::InvalidParams(format!("alphabet size {a} must be at least 2")));
        }
        if w == 0 || w > m {
            return Err(Error::InvalidParams(format!("window length {w} outside 1..={m}")));
        }
        if l > w || l / 2 > available_coefficients(w, normalise) {
            return Err(Error::InvalidParams(format!(
                "word length {l} needs more coefficients than window {w} supplies"
            )));
        }
        if (a as u64).checked_pow(l as u32).is_none() {
            return Err(Error::InvalidParams(format!("{a}^{l} words do not fit a 64-bit key")));
        }
        Ok(())
    }

    pub fn num_windows(&self, m: usize) -> usize {
        (m + 1).saturating_sub(self.window_length)
    }
}

/// Distinct complex coefficients a real window of length `w` supplies,
/// excluding the mean term when normalising.
pub fn available_coefficients(w: usize, normalise: bool) -> usize {
    if normalise {
        w / 2
    } else {
        w / 2 + 1
    }
}

fn check_dft_args(w: usize, l: usize, normalise: bool) -> Result<()> {
    if l % 2 != 0 {
        return Err(Error::InvalidParams(format!("coefficient count {l} must be even")));
    }
    if l / 2 > available_coefficients(w, normalise) {
        return Err(Error::InvalidParams(format!(
            "{l} values requested but a window of {w} supplies {}",
            2 * available_coefficients(w, normalise)
        )));
    }
    Ok(())
}

/// First `l / 2` retained complex DFT coefficients of one window, interleaved.
pub fn windowed_dft(window: &[f64], l: usize, normalise: bool) -> Result<Vec<f64>> {
    let w = window.len();
    check_dft_args(w, l, normalise)?;
    let normed;
    let x = if normalise {
        normed = z_normalise(window);
        &normed[..]
    } else {
        window
    };
    let start = usize::from(normalise);
    let mut out = Vec::with_capacity(l);
    for k in start..start + l / 2 {
        let (mut re, mut im) = (0.0, 0.0);
        for (t, &v) in x.iter().enumerate() {
            let angle = 2.0 * PI * ((k * t) % w) as f64 / w as f64;
            re += v * angle.cos();
            im -= v * angle.sin();
        }
        out.push(re);
        out.push(im);
    }
    Ok(out)
}

/// Bits of precision kept below the window's energy scale by [`snap_coefficients`].
const SNAP_BITS: i32 = 28;

fn snap_with_scale(values: &mut [f64], scale: f64) {
    if !(scale > 0.0 && scale.is_finite()) {
        return;
    }
    let step = 2f64.powi(scale.log2().ceil() as i32 - SNAP_BITS);
    for v in values {
        *v = (*v / step).round() * step;
    }
}

fn window_scale(w: usize, sum_sq: f64, normalise: bool) -> f64 {
    if normalise {
        w as f64
    } else {
        w as f64 * (sum_sq / w as f64).max(0.0).sqrt()
    }
}

/// Rounds DFT coefficients onto a power-of-two grid about `2^-28` of the
/// window's energy, so that equal windows reached through different
/// arithmetic give equal values. Used before discretisation.
pub fn snap_coefficients(values: &mut [f64], window: &[f64], normalise: bool) {
    let sum_sq = window.iter().map(|v| v * v).sum();
    snap_with_scale(values, window_scale(window.len(), sum_sq, normalise));
}

/// Row-major matrix of per-window coefficient vectors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoefficientRows {
    width: usize,
    data: Vec<f64>,
}

impl CoefficientRows {
    pub fn new(width: usize) -> Self {
        Self {
            width,
            data: Vec::new(),
        }
    }

    pub fn from_rows(width: usize, rows: impl IntoIterator<Item = Vec<f64>>) -> Self {
        let mut out = Self::new(width);
        for r in rows {
            out.push(&r);
        }
        out
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        if self.width == 0 {
            0
        } else {
            self.data.len() / self.width
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.width.max(1))
    }

    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.width, "row width mismatch");
        self.data.extend_from_slice(row);
    }

    pub fn extend(&mut self, other: &CoefficientRows) {
        assert_eq!(other.width, self.width, "row width mismatch");
        self.data.extend_from_slice(&other.data);
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }
}

/// DFT of every window of `series`, equivalent to calling [`windowed_dft`]
/// and [`snap_coefficients`] per window but updated incrementally (momentary
/// Fourier transform). Constant windows are computed exactly.
pub fn sliding_dft(series: &[f64], w: usize, l: usize, normalise: bool) -> Result<CoefficientRows> {
    let m = series.len();
    if w == 0 || w > m {
        return Err(Error::InvalidParams(format!("window length {w} outside 1..={m}")));
    }
    check_dft_args(w, l, normalise)?;
    let n_windows = m - w + 1;
    let n_coef = l / 2;
    let start = usize::from(normalise);
    let twiddle: Vec<(f64, f64)> = (start..start + n_coef)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / w as f64;
            (a.cos(), a.sin())
        })
        .collect();
    let table: Vec<(f64, f64)> = (0..w)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / w as f64;
            (a.cos(), a.sin())
        })
        .collect();

    let mut rows = CoefficientRows {
        width: l,
        data: Vec::with_capacity(n_windows * l),
    };
    let mut q = vec![(0.0f64, 0.0f64); n_coef];
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    // Length of the run of equal values ending at the window's last element.
    let mut run = 1 + series[..w].windows(2).rev().take_while(|p| p[0] == p[1]).count();
    for t in 0..n_windows {
        let window = &series[t..t + w];
        if t > 0 {
            run = if series[t + w - 1] == series[t + w - 2] { run + 1 } else { 1 };
        }
        if run >= w {
            for (c, k) in (start..start + n_coef).enumerate() {
                q[c] = if k == 0 { (window.iter().sum(), 0.0) } else { (0.0, 0.0) };
            }
            sum = window.iter().sum();
            sum_sq = window.iter().map(|v| v * v).sum();
        } else if t % RESYNC_INTERVAL == 0 {
            for (c, k) in (start..start + n_coef).enumerate() {
                let (mut re, mut im) = (0.0, 0.0);
                for (j, &v) in window.iter().enumerate() {
                    let (cos, sin) = table[(k * j) % w];
                    re += v * cos;
                    im -= v * sin;
                }
                q[c] = (re, im);
            }
            sum = window.iter().sum();
            sum_sq = window.iter().map(|v| v * v).sum();
        } else {
            let (leave, enter) = (series[t - 1], series[t + w - 1]);
            for (c, &(cos, sin)) in twiddle.iter().enumerate() {
                let re = q[c].0 - leave + enter;
                let im = q[c].1;
                q[c] = (re * cos - im * sin, re * sin + im * cos);
            }
            sum += enter - leave;
            sum_sq += enter * enter - leave * leave;
        }

        if normalise {
            let n = w as f64;
            let mean = sum / n;
            let mut var = sum_sq / n - mean * mean;
            // Cancellation in the running moments is only a concern near zero
            // variance, where the constant-window rule decides the output.
            if var <= 1e-6 * (1.0 + mean * mean) {
                var = mean_std(window).1.powi(2);
            }
            let std = var.max(0.0).sqrt();
            if std <= NORM_TOLERANCE {
                rows.data.extend(std::iter::repeat_n(0.0, l));
                continue;
            }
            for &(re, im) in &q {
                rows.data.push(re / std);
                rows.data.push(im / std);
            }
        } else {
            for &(re, im) in &q {
                rows.data.push(re);
                rows.data.push(im);
            }
        }
        let row = rows.data.len() - l;
        snap_with_scale(&mut rows.data[row..], window_scale(w, sum_sq, normalise));
    }
    Ok(rows)
}

/// Per-coefficient breakpoints; row `i` holds the `alpha - 1` ascending
/// thresholds for coefficient `i`. Unused thresholds are `+inf`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakpointMatrix {
    alphabet_size: usize,
    #[serde(with = "crate::persist::inf_as_null")]
    rows: Vec<Vec<f64>>,
}

impl BreakpointMatrix {
    pub fn new(alphabet_size: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        if alphabet_size < 2 {
            return Err(Error::InvalidParams("alphabet size must be at least 2".into()));
        }
        for r in &rows {
            if r.len() != alphabet_size - 1 {
                return Err(Error::InvalidParams(format!(
                    "breakpoint row has {} entries, expected {}",
                    r.len(),
                    alphabet_size - 1
                )));
            }
            if r.windows(2).any(|p| p[0] > p[1]) || r.iter().any(|v| v.is_nan()) {
                return Err(Error::InvalidParams("breakpoint row must be non-decreasing".into()));
            }
        }
        Ok(Self { alphabet_size, rows })
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn word_length(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    /// Symbol for `value` under coefficient `i`: the number of thresholds at
    /// or below it.
    #[inline]
    pub fn lookup(&self, i: usize, value: f64) -> u8 {
        self.rows[i].partition_point(|&b| b <= value) as u8
    }

    /// Breakpoints for the first `l` coefficients only.
    pub fn truncated(&self, l: usize) -> Self {
        Self {
            alphabet_size: self.alphabet_size,
            rows: self.rows[..l.min(self.rows.len())].to_vec(),
        }
    }

    /// Symbols for one coefficient vector.
    pub fn symbols(&self, coefficients: &[f64], out: &mut Vec<u8>) {
        out.clear();
        out.extend(coefficients.iter().enumerate().map(|(i, &v)| self.lookup(i, v)));
    }
}

/// A discretised window packed as a base-`alpha` integer, first symbol most
/// significant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Word(pub u64);

impl Word {
    pub fn pack(symbols: &[u8], alphabet_size: usize) -> Self {
        let a = alphabet_size as u64;
        Word(symbols.iter().fold(0u64, |acc, &s| acc * a + s as u64))
    }

    pub fn unpack(self, word_length: usize, alphabet_size: usize) -> Vec<u8> {
        let a = alphabet_size as u64;
        let mut key = self.0;
        let mut out = vec![0u8; word_length];
        for slot in out.iter_mut().rev() {
            *slot = (key % a) as u8;
            key /= a;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinningStrategy {
    EquiDepth,
    InformationGain,
}

/// Learns one breakpoint row per coefficient column of `coefficients`.
///
/// Columns with fewer samples than `alpha` fall back to equal-width bins
/// over the observed range.
pub fn fit_mcb(
    coefficients: &CoefficientRows,
    alphabet_size: usize,
    strategy: BinningStrategy,
    labels: Option<&[usize]>,
) -> Result<BreakpointMatrix> {
    if alphabet_size < 2 {
        return Err(Error::InvalidParams("alphabet size must be at least 2".into()));
    }
    if coefficients.is_empty() {
        return Err(Error::InvalidParams("no training windows to bin".into()));
    }
    if strategy == BinningStrategy::InformationGain {
        match labels {
            Some(l) if l.len() == coefficients.len() => {}
            Some(l) => {
                return Err(Error::InvalidParams(format!(
                    "{} labels for {} windows",
                    l.len(),
                    coefficients.len()
                )))
            }
            None => return Err(Error::InvalidParams("information-gain binning needs labels".into())),
        }
    }
    let n = coefficients.len();
    let mut rows = Vec::with_capacity(coefficients.width());
    for j in 0..coefficients.width() {
        let column = coefficients.column(j);
        let row = if n < alphabet_size {
            uniform_breakpoints(&column, alphabet_size)
        } else {
            match strategy {
                BinningStrategy::EquiDepth => equi_depth_breakpoints(column, alphabet_size),
                BinningStrategy::InformationGain => {
                    information_gain_breakpoints(&column, labels.unwrap_or_default(), alphabet_size)
                }
            }
        };
        rows.push(row);
    }
    BreakpointMatrix::new(alphabet_size, rows)
}

fn uniform_breakpoints(column: &[f64], alphabet_size: usize) -> Vec<f64> {
    let min = column.iter().copied().fold(f64::INFINITY, f64::min);
    let max = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (1..alphabet_size)
        .map(|j| min + (max - min) * j as f64 / alphabet_size as f64)
        .collect()
}

fn equi_depth_breakpoints(mut column: Vec<f64>, alphabet_size: usize) -> Vec<f64> {
    column.sort_by(f64::total_cmp);
    let n = column.len();
    (1..alphabet_size)
        .map(|j| column[j * n / alphabet_size])
        .collect()
}

fn entropy(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / t;
            -p * p.log2()
        })
        .sum()
}

/// Greedy top-down splitting: each round adds the threshold giving the
/// largest class-entropy reduction, until `alpha - 1` thresholds exist or no
/// split improves purity.
fn information_gain_breakpoints(column: &[f64], labels: &[usize], alphabet_size: usize) -> Vec<f64> {
    let n_classes = labels.iter().copied().max().map_or(1, |m| m + 1);
    let mut order: Vec<usize> = (0..column.len()).collect();
    order.sort_by(|&a, &b| column[a].total_cmp(&column[b]));
    let values: Vec<f64> = order.iter().map(|&i| column[i]).collect();
    let n = values.len();

    // prefix[i * c + k]: count of class k among the first i sorted values.
    let mut prefix = vec![0usize; (n + 1) * n_classes];
    for (i, &idx) in order.iter().enumerate() {
        let (head, tail) = prefix.split_at_mut((i + 1) * n_classes);
        tail[..n_classes].copy_from_slice(&head[i * n_classes..]);
        tail[labels[idx]] += 1;
    }
    let seg_entropy = |a: usize, b: usize, buf: &mut Vec<usize>| {
        buf.clear();
        buf.extend((0..n_classes).map(|k| prefix[b * n_classes + k] - prefix[a * n_classes + k]));
        entropy(buf, b - a) * (b - a) as f64
    };

    let mut cuts: Vec<usize> = vec![0, n];
    let mut buf = Vec::with_capacity(n_classes);
    while cuts.len() - 1 < alphabet_size {
        let mut best: Option<(f64, usize)> = None;
        for seg in cuts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let whole = seg_entropy(a, b, &mut buf);
            for s in a + 1..b {
                if values[s - 1] == values[s] {
                    continue;
                }
                let gain = whole - seg_entropy(a, s, &mut buf) - seg_entropy(s, b, &mut buf);
                if gain > 1e-12 && best.is_none_or(|(g, _)| gain > g) {
                    best = Some((gain, s));
                }
            }
        }
        match best {
            Some((_, s)) => {
                let pos = cuts.partition_point(|&c| c < s);
                cuts.insert(pos, s);
            }
            None => break,
        }
    }
    let mut row: Vec<f64> = cuts[1..cuts.len() - 1]
        .iter()
        .map(|&s| 0.5 * (values[s - 1] + values[s]))
        .collect();
    row.resize(alphabet_size - 1, f64::INFINITY);
    row
}

/// The word for one window under fitted breakpoints.
pub fn sfa_word(window: &[f64], params: &SfaParams, breakpoints: &BreakpointMatrix) -> Result<Word> {
    if breakpoints.word_length() != params.word_length
        || breakpoints.alphabet_size() != params.alphabet_size
    {
        return Err(Error::InvalidParams(format!(
            "breakpoints are {}x{}, params want {}x{}",
            breakpoints.word_length(),
            breakpoints.alphabet_size(),
            params.word_length,
            params.alphabet_size
        )));
    }
    if window.len() != params.window_length {
        return Err(Error::InvalidParams(format!(
            "window of {} values, params want {}",
            window.len(),
            params.window_length
        )));
    }
    let mut q = windowed_dft(window, params.word_length, params.normalise)?;
    snap_coefficients(&mut q, window, params.normalise);
    let mut symbols = Vec::with_capacity(q.len());
    breakpoints.symbols(&q, &mut symbols);
    Ok(Word::pack(&symbols, params.alphabet_size))
}

/// One-way ANOVA F statistic of every column against the class labels.
///
/// Constant columns score 0; columns with zero within-class variance but
/// differing class means score `+inf`.
pub fn anova_f_scores(coefficients: &CoefficientRows, labels: &[usize]) -> Result<Vec<f64>> {
    if labels.len() != coefficients.len() {
        return Err(Error::InvalidParams(format!(
            "{} labels for {} rows",
            labels.len(),
            coefficients.len()
        )));
    }
    let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut class_n = vec![0usize; n_classes];
    for &l in labels {
        class_n[l] += 1;
    }
    let present = class_n.iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::InvalidParams("ANOVA F needs at least two classes".into()));
    }
    let n = labels.len();
    if n <= present {
        return Err(Error::InvalidParams("ANOVA F needs more samples than classes".into()));
    }

    let width = coefficients.width();
    let mut scores = Vec::with_capacity(width);
    let mut class_sum = vec![0.0; n_classes];
    for j in 0..width {
        class_sum.iter_mut().for_each(|s| *s = 0.0);
        let mut total = 0.0;
        for (row, &l) in coefficients.rows().zip(labels) {
            class_sum[l] += row[j];
            total += row[j];
        }
        let grand = total / n as f64;
        let class_mean: Vec<f64> = class_sum
            .iter()
            .zip(&class_n)
            .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
            .collect();
        let mut ss_within = 0.0;
        let mut ss_total = 0.0;
        for (row, &l) in coefficients.rows().zip(labels) {
            ss_within += (row[j] - class_mean[l]).powi(2);
            ss_total += (row[j] - grand).powi(2);
        }
        let ss_between = class_n
            .iter()
            .zip(&class_mean)
            .filter(|(&c, _)| c > 0)
            .map(|(&c, &mu)| c as f64 * (mu - grand).powi(2))
            .sum::<f64>();
        let scale = 1e-12 * (1.0 + grand * grand) * n as f64;
        let f = if ss_total <= scale {
            0.0
        } else if ss_within <= 1e-12 * ss_total {
            f64::INFINITY
        } else {
            (ss_between / (present - 1) as f64) / (ss_within / (n - present) as f64)
        };
        scores.push(f);
    }
    Ok(scores)
}

/// Indices of the `l` columns with the largest F statistic, returned in
/// ascending order. Ties go to the lower index.
pub fn anova_f_select(coefficients: &CoefficientRows, labels: &[usize], l: usize) -> Result<Vec<usize>> {
    if l > coefficients.width() {
        return Err(Error::InvalidParams(format!(
            "cannot select {l} of {} columns",
            coefficients.width()
        )));
    }
    let scores = anova_f_scores(coefficients, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut chosen = order[..l].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}
