//! Labelled collections of equal-length univariate series, file ingestion,
//! stratified resampling and z-normalisation.
//!
//! Two text formats are understood:
//!
//! * `ucr-ts`: `@`-prefixed header lines, an `@data` sentinel, then one case
//!   per line as comma-separated values followed by `:label` (a label after
//!   the final comma is also accepted).
//! * `csv`: one case per line, values first, label last.
//!
//! [`load_dataset`] sniffs the first meaningful line for `@` when no format
//! is given.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Standard deviations at or below this are treated as a constant window.
pub const NORM_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesDataset {
    name: String,
    series: Vec<Vec<f64>>,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl TimeSeriesDataset {
    /// Builds a dataset from already-indexed labels.
    pub fn new(
        name: impl Into<String>,
        series: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if series.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if series.len() != labels.len() {
            return Err(Error::InvalidParams(format!(
                "{} series but {} labels",
                series.len(),
                labels.len()
            )));
        }
        let m = series[0].len();
        if m == 0 {
            return Err(Error::InvalidParams("series length must be at least 1".into()));
        }
        for (i, s) in series.iter().enumerate() {
            if s.len() != m {
                return Err(Error::UnequalLength {
                    line: i + 1,
                    expected: m,
                    found: s.len(),
                });
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::MissingValues { line: i + 1 });
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::InvalidParams(format!(
                "label index {bad} outside {} classes",
                class_names.len()
            )));
        }
        Ok(Self {
            name: name.into(),
            series,
            labels,
            class_names,
        })
    }

    /// Builds a dataset from textual labels, remapping them onto `0..c`.
    ///
    /// Class order is numeric when every label parses as a number and
    /// lexicographic otherwise.
    pub fn from_text_labels(
        name: impl Into<String>,
        series: Vec<Vec<f64>>,
        labels: &[String],
    ) -> Result<Self> {
        let class_names = ordered_class_names(labels.iter().map(String::as_str));
        let index: HashMap<&str, usize> = class_names
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let labels = labels.iter().map(|l| index[l.as_str()]).collect();
        Self::new(name, series, labels, class_names)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn series_length(&self) -> usize {
        self.series[0].len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn series(&self, i: usize) -> &[f64] {
        &self.series[i]
    }

    pub fn all_series(&self) -> &[Vec<f64>] {
        &self.series
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Cases at `indices`, in that order, sharing this dataset's class set.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            series: indices.iter().map(|&i| self.series[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Hex SHA-256 over the series values and labels.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.len() as u64).to_le_bytes());
        hasher.update((self.series_length() as u64).to_le_bytes());
        for (s, &l) in self.series.iter().zip(&self.labels) {
            hasher.update((l as u64).to_le_bytes());
            for v in s {
                hasher.update(v.to_bits().to_le_bytes());
            }
        }
        for c in &self.class_names {
            hasher.update(c.as_bytes());
            hasher.update([0]);
        }
        hex::encode(hasher.finalize())
    }

    /// Re-expresses labels against `class_names`, which must contain every
    /// class of this dataset.
    fn relabel(self, class_names: &[String]) -> Result<Self> {
        let index: HashMap<&str, usize> = class_names
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let mut labels = Vec::with_capacity(self.labels.len());
        for &l in &self.labels {
            let name = &self.class_names[l];
            match index.get(name.as_str()) {
                Some(&j) => labels.push(j),
                None => {
                    return Err(Error::IncompatibleDatasets(format!(
                        "class {name:?} missing from the shared label set"
                    )))
                }
            }
        }
        Ok(Self {
            labels,
            class_names: class_names.to_vec(),
            ..self
        })
    }
}

fn ordered_class_names<'a>(labels: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut names: Vec<String> = labels.map(str::to_owned).collect();
    names.sort();
    names.dedup();
    let numeric: Option<Vec<f64>> = names.iter().map(|n| n.parse::<f64>().ok()).collect();
    if let Some(values) = numeric {
        let mut paired: Vec<(f64, String)> = values.into_iter().zip(names).collect();
        paired.sort_by(|a, b| a.0.total_cmp(&b.0));
        names = paired.into_iter().map(|(_, n)| n).collect();
    }
    names
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataFormat {
    UcrTs,
    Csv,
}

/// Loads a dataset; `format: None` sniffs for a `@` header.
pub fn load_dataset(path: impl AsRef<Path>, format: Option<DataFormat>) -> Result<TimeSeriesDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = dataset_name_from_path(path);
    parse_dataset(&text, &name, format)
}

/// Loads a train/test pair and expresses both against one class set.
pub fn load_train_test(
    train_path: impl AsRef<Path>,
    test_path: impl AsRef<Path>,
) -> Result<(TimeSeriesDataset, TimeSeriesDataset)> {
    let train = load_dataset(train_path, None)?;
    let test = load_dataset(test_path, None)?;
    align_classes(train, test)
}

/// Rewrites both datasets' labels against the union of their class names.
pub fn align_classes(
    train: TimeSeriesDataset,
    test: TimeSeriesDataset,
) -> Result<(TimeSeriesDataset, TimeSeriesDataset)> {
    if train.class_names == test.class_names {
        return Ok((train, test));
    }
    let union = ordered_class_names(
        train
            .class_names
            .iter()
            .chain(&test.class_names)
            .map(String::as_str),
    );
    Ok((train.relabel(&union)?, test.relabel(&union)?))
}

fn dataset_name_from_path(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    for suffix in ["_TRAIN", "_TEST"] {
        if let Some(base) = stem.strip_suffix(suffix) {
            return base.to_owned();
        }
    }
    stem
}

pub fn parse_dataset(text: &str, name: &str, format: Option<DataFormat>) -> Result<TimeSeriesDataset> {
    let format = format.unwrap_or_else(|| sniff_format(text));
    let mut header_classes: Option<Vec<String>> = None;
    let mut problem_name: Option<String> = None;
    let mut in_data = format == DataFormat::Csv;
    let mut series = Vec::new();
    let mut labels = Vec::new();
    let mut expected_len: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !in_data {
            if !line.starts_with('@') {
                return Err(Error::Parse {
                    line: line_no,
                    message: "data row before @data".into(),
                });
            }
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap_or("").to_ascii_lowercase();
            match key.as_str() {
                "@data" => in_data = true,
                "@problemname" => problem_name = parts.next().map(str::to_owned),
                "@classlabel" => {
                    if parts.next().map(|v| v.eq_ignore_ascii_case("true")) == Some(true) {
                        header_classes = Some(parts.map(str::to_owned).collect());
                    }
                }
                "@univariate" => {
                    if parts.next().map(|v| v.eq_ignore_ascii_case("false")) == Some(true) {
                        return Err(Error::Parse {
                            line: line_no,
                            message: "multivariate series are not supported".into(),
                        });
                    }
                }
                _ => {}
            }
            continue;
        }

        let (values_part, label) = split_label(line, format, line_no)?;
        let mut values = Vec::new();
        for field in values_part.split(',') {
            let field = field.trim();
            if field.is_empty() || field == "?" || field.eq_ignore_ascii_case("nan") {
                return Err(Error::MissingValues { line: line_no });
            }
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("not a number: {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::MissingValues { line: line_no });
            }
            values.push(v);
        }
        match expected_len {
            None => expected_len = Some(values.len()),
            Some(m) if m != values.len() => {
                return Err(Error::UnequalLength {
                    line: line_no,
                    expected: m,
                    found: values.len(),
                })
            }
            _ => {}
        }
        series.push(values);
        labels.push(label.to_owned());
    }

    if series.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let name = problem_name.unwrap_or_else(|| name.to_owned());
    match header_classes {
        Some(classes) => {
            let index: HashMap<&str, usize> = classes
                .iter()
                .enumerate()
                .map(|(i, c)| (c.as_str(), i))
                .collect();
            let mut idx = Vec::with_capacity(labels.len());
            for (row, l) in labels.iter().enumerate() {
                let j = index.get(l.as_str()).ok_or_else(|| Error::Parse {
                    line: row + 1,
                    message: format!("label {l:?} not declared in @classLabel"),
                })?;
                idx.push(*j);
            }
            TimeSeriesDataset::new(name, series, idx, classes)
        }
        None => TimeSeriesDataset::from_text_labels(name, series, &labels),
    }
}

fn sniff_format(text: &str) -> DataFormat {
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'));
    match first {
        Some(l) if l.starts_with('@') => DataFormat::UcrTs,
        _ => DataFormat::Csv,
    }
}

fn split_label(line: &str, format: DataFormat, line_no: usize) -> Result<(&str, &str)> {
    if format == DataFormat::UcrTs {
        let colons = line.matches(':').count();
        if colons > 1 {
            return Err(Error::Parse {
                line: line_no,
                message: "multivariate series are not supported".into(),
            });
        }
        if let Some((values, label)) = line.rsplit_once(':') {
            return Ok((values, label.trim()));
        }
    }
    match line.rsplit_once(',') {
        Some((values, label)) => Ok((values, label.trim())),
        None => Err(Error::Parse {
            line: line_no,
            message: "expected at least one value and a label".into(),
        }),
    }
}

/// Writes `dataset` in the `ucr-ts` format read by [`load_dataset`].
pub fn write_ts(dataset: &TimeSeriesDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    let _ = writeln!(out, "@problemName {}", dataset.name());
    let _ = writeln!(out, "@timeStamps false");
    let _ = writeln!(out, "@missing false");
    let _ = writeln!(out, "@univariate true");
    let _ = writeln!(out, "@equalLength true");
    let _ = writeln!(out, "@seriesLength {}", dataset.series_length());
    let _ = writeln!(out, "@classLabel true {}", dataset.class_names().join(" "));
    let _ = writeln!(out, "@data");
    for (s, &l) in dataset.series.iter().zip(&dataset.labels) {
        push_values(&mut out, s);
        let _ = writeln!(out, ":{}", dataset.class_names[l]);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes `dataset` as csv, one case per row with the label last.
pub fn write_csv(dataset: &TimeSeriesDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for (s, &l) in dataset.series.iter().zip(&dataset.labels) {
        push_values(&mut out, s);
        let _ = writeln!(out, ",{}", dataset.class_names[l]);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn push_values(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        // `{}` on f64 prints the shortest representation that round-trips.
        let _ = write!(out, "{v}");
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResamplePlan {
    pub resample_id: u64,
}

impl ResamplePlan {
    pub fn new(resample_id: u64) -> Self {
        Self { resample_id }
    }

    pub fn seed(&self) -> u64 {
        self.resample_id
    }
}

/// Stratified reshuffle of the pooled train and test cases.
///
/// Resample 0 returns the original split. Any other id pools both sets,
/// shuffles each class with a generator seeded by the id, and refills the
/// train set with the original per-class train counts.
pub fn resample(
    train: &TimeSeriesDataset,
    test: &TimeSeriesDataset,
    plan: ResamplePlan,
) -> Result<(TimeSeriesDataset, TimeSeriesDataset)> {
    if train.series_length() != test.series_length() {
        return Err(Error::IncompatibleDatasets(format!(
            "series lengths {} and {}",
            train.series_length(),
            test.series_length()
        )));
    }
    if train.class_names != test.class_names {
        return Err(Error::IncompatibleDatasets("label sets differ".into()));
    }
    if plan.resample_id == 0 {
        return Ok((train.clone(), test.clone()));
    }

    let n_train = train.len();
    let label_of = |i: usize| {
        if i < n_train {
            train.labels[i]
        } else {
            test.labels[i - n_train]
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed());
    let train_counts = train.class_counts();
    let mut train_idx = Vec::with_capacity(n_train);
    let mut test_idx = Vec::with_capacity(test.len());
    for (class, &want) in train_counts.iter().enumerate() {
        let mut pool: Vec<usize> = (0..n_train + test.len())
            .filter(|&i| label_of(i) == class)
            .collect();
        pool.shuffle(&mut rng);
        train_idx.extend_from_slice(&pool[..want]);
        test_idx.extend_from_slice(&pool[want..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();

    let pick = |idx: &[usize]| {
        let series = idx
            .iter()
            .map(|&i| {
                if i < n_train {
                    train.series[i].clone()
                } else {
                    test.series[i - n_train].clone()
                }
            })
            .collect();
        let labels = idx.iter().map(|&i| label_of(i)).collect();
        (series, labels)
    };
    let (tr_series, tr_labels) = pick(&train_idx);
    let (te_series, te_labels) = pick(&test_idx);
    Ok((
        TimeSeriesDataset {
            name: train.name.clone(),
            series: tr_series,
            labels: tr_labels,
            class_names: train.class_names.clone(),
        },
        TimeSeriesDataset {
            name: test.name.clone(),
            series: te_series,
            labels: te_labels,
            class_names: test.class_names.clone(),
        },
    ))
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.max(0.0).sqrt())
}

/// Zero mean, unit population standard deviation; constant windows map to
/// all zeros.
pub fn z_normalise(window: &[f64]) -> Vec<f64> {
    let (mean, std) = mean_std(window);
    if std <= NORM_TOLERANCE {
        return vec![0.0; window.len()];
    }
    window.iter().map(|v| (v - mean) / std).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(name: &str, rows: &[(&[f64], &str)]) -> TimeSeriesDataset {
        let series = rows.iter().map(|(s, _)| s.to_vec()).collect();
        let labels: Vec<String> = rows.iter().map(|(_, l)| l.to_string()).collect();
        TimeSeriesDataset::from_text_labels(name, series, &labels).unwrap()
    }

    #[test]
    fn single_row_csv() {
        let ds = parse_dataset("1.0,2.0,3.0,lab\n", "x", None).unwrap();
        assert_eq!((ds.len(), ds.series_length(), ds.n_classes()), (1, 3, 1));
        assert_eq!(ds.class_names(), ["lab".to_string()]);
    }

    #[test]
    fn ts_format_with_header_order() {
        let text = "# comment\n@problemName Toy\n@classLabel true b a\n@data\n1,2,3:a\n4,5,6:b\n";
        let ds = parse_dataset(text, "ignored", None).unwrap();
        assert_eq!(ds.name(), "Toy");
        assert_eq!(ds.labels(), &[1, 0]);
        assert_eq!(ds.series(1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn numeric_labels_sort_numerically() {
        let ds = parse_dataset("1,2\n3,10\n5,9\n", "x", Some(DataFormat::Csv)).unwrap();
        assert_eq!(ds.class_names(), ["2", "9", "10"]);
        assert_eq!(ds.labels(), &[0, 2, 1]);
    }

    #[test]
    fn unequal_rows_rejected() {
        let err = parse_dataset("1,2,3,a\n1,2,b\n", "x", None).unwrap_err();
        assert!(matches!(err, Error::UnequalLength { line: 2, expected: 3, found: 2 }));
    }

    #[test]
    fn missing_values_rejected() {
        for text in ["1,?,3,a\n", "1,NaN,3,a\n", "1,,3,a\n", "@data\n1,?,3:a\n"] {
            let err = parse_dataset(text, "x", None).unwrap_err();
            assert!(matches!(err, Error::MissingValues { line: _ }), "{text}");
        }
    }

    #[test]
    fn multivariate_rejected() {
        let err = parse_dataset("@data\n1,2:3,4:a\n", "x", None).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn write_then_load_round_trips() {
        let ds = toy("rt", &[(&[0.1, -2.5, 3.0], "x"), (&[1e-9, 7.0, 1.0 / 3.0], "y")]);
        let dir = tempfile::tempdir().unwrap();
        let ts = dir.path().join("rt_TRAIN.ts");
        let csv = dir.path().join("rt.csv");
        write_ts(&ds, &ts).unwrap();
        write_csv(&ds, &csv).unwrap();
        assert_eq!(load_dataset(&ts, None).unwrap(), ds);
        assert_eq!(load_dataset(&csv, None).unwrap(), ds);
    }

    #[test]
    fn align_unions_class_sets() {
        let a = toy("a", &[(&[1.0], "1"), (&[2.0], "3")]);
        let b = toy("b", &[(&[1.0], "2"), (&[2.0], "3")]);
        let (a, b) = align_classes(a, b).unwrap();
        assert_eq!(a.class_names(), ["1", "2", "3"]);
        assert_eq!(a.labels(), &[0, 2]);
        assert_eq!(b.labels(), &[1, 2]);
    }

    fn split() -> (TimeSeriesDataset, TimeSeriesDataset) {
        let mut rows_tr = Vec::new();
        let mut rows_te = Vec::new();
        let vals: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, 0.5 * i as f64]).collect();
        for i in 0..30 {
            let label = if i % 3 == 0 { "a" } else { "b" };
            if i < 12 {
                rows_tr.push((vals[i].as_slice(), label));
            } else {
                rows_te.push((vals[i].as_slice(), label));
            }
        }
        (toy("s", &rows_tr), toy("s", &rows_te))
    }

    #[test]
    fn resample_zero_is_identity() {
        let (tr, te) = split();
        let (a, b) = resample(&tr, &te, ResamplePlan::new(0)).unwrap();
        assert_eq!((a, b), (tr, te));
    }

    #[test]
    fn resample_is_deterministic_and_stratified() {
        let (tr, te) = split();
        let first = resample(&tr, &te, ResamplePlan::new(1)).unwrap();
        let second = resample(&tr, &te, ResamplePlan::new(1)).unwrap();
        assert_eq!(first, second);
        assert_eq!(first.0.class_counts(), tr.class_counts());
        assert_eq!(first.1.class_counts(), te.class_counts());
        assert_ne!(first.0, tr);

        let mut pooled: Vec<(Vec<u64>, usize)> = first
            .0
            .all_series()
            .iter()
            .zip(first.0.labels())
            .chain(first.1.all_series().iter().zip(first.1.labels()))
            .map(|(s, &l)| (s.iter().map(|v| v.to_bits()).collect(), l))
            .collect();
        let mut original: Vec<(Vec<u64>, usize)> = tr
            .all_series()
            .iter()
            .zip(tr.labels())
            .chain(te.all_series().iter().zip(te.labels()))
            .map(|(s, &l)| (s.iter().map(|v| v.to_bits()).collect(), l))
            .collect();
        pooled.sort();
        original.sort();
        assert_eq!(pooled, original);
    }

    #[test]
    fn resample_rejects_mismatch() {
        let (tr, _) = split();
        let other = toy("o", &[(&[1.0, 2.0, 3.0], "a")]);
        assert!(matches!(
            resample(&tr, &other, ResamplePlan::new(2)),
            Err(Error::IncompatibleDatasets(_))
        ));
    }

    #[test]
    fn z_normalise_examples() {
        assert_eq!(z_normalise(&[3.0, 3.0, 3.0]), vec![0.0; 3]);
        assert_eq!(z_normalise(&[0.0, 1.0]), vec![-1.0, 1.0]);
    }

    #[test]
    fn content_hash_tracks_values() {
        let (tr, te) = split();
        assert_eq!(tr.content_hash(), tr.clone().content_hash());
        assert_ne!(tr.content_hash(), te.content_hash());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn z_normalise_moments_and_idempotence(w in prop::collection::vec(-1e3f64..1e3, 1..64)) {
                let z = z_normalise(&w);
                let (mean, std) = mean_std(&z);
                prop_assert!(mean.abs() < 1e-9);
                let (_, raw_std) = mean_std(&w);
                if raw_std > NORM_TOLERANCE {
                    prop_assert!((std - 1.0).abs() < 1e-9);
                } else {
                    prop_assert!(z.iter().all(|&v| v == 0.0));
                }
                let zz = z_normalise(&z);
                for (a, b) in z.iter().zip(&zz) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
            }

            #[test]
            fn resample_preserves_multiset(id in 0u64..50) {
                let (tr, te) = split();
                let (a, b) = resample(&tr, &te, ResamplePlan::new(id)).unwrap();
                prop_assert_eq!(a.len(), tr.len());
                prop_assert_eq!(b.len(), te.len());
                prop_assert_eq!(a.class_counts(), tr.class_counts());
                let mut got: Vec<u64> = a.all_series().iter().chain(b.all_series()).map(|s| s[0].to_bits()).collect();
                let mut want: Vec<u64> = tr.all_series().iter().chain(te.all_series()).map(|s| s[0].to_bits()).collect();
                got.sort();
                want.sort();
                prop_assert_eq!(got, want);
            }
        }
    }
}
