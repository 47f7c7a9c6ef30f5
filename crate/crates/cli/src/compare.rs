use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use tsdict::evaluation::{compare as compare_scores, read_results, ComparisonMatrix};

use crate::{CompareArgs, UsageError};

/// Reads `<results>/<classifier>/<dataset>/resample*.csv`, averages accuracy
/// per dataset and writes the comparison tables. Returns false when no
/// classifier had any usable result.
pub fn compare(args: &CompareArgs) -> Result<bool, UsageError> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(UsageError(format!("--alpha must lie in (0, 1), got {}", args.alpha)));
    }
    if !args.results.is_dir() {
        return Err(UsageError(format!("{} is not a directory", args.results.display())));
    }
    let output = args.output.clone().unwrap_or_else(|| args.results.join("comparison"));
    let classifiers = if args.classifier.is_empty() {
        subdirs(&args.results)
            .into_iter()
            .filter(|c| tsdict::classifier::CLASSIFIER_NAMES.contains(&c.as_str()))
            .collect()
    } else {
        args.classifier.clone()
    };
    if classifiers.is_empty() {
        return Err(UsageError(format!("no classifier results under {}", args.results.display())));
    }
    let datasets: Vec<String> = if args.datasets.is_empty() {
        let all: BTreeSet<String> = classifiers
            .iter()
            .flat_map(|c| subdirs(&args.results.join(c)))
            .collect();
        all.into_iter().collect()
    } else {
        args.datasets.clone()
    };

    let scores: Vec<Vec<Option<f64>>> = classifiers
        .iter()
        .map(|c| {
            datasets
                .iter()
                .map(|d| mean_accuracy(&args.results.join(c).join(d)))
                .collect()
        })
        .collect();
    let any = scores.iter().flatten().any(Option::is_some);
    let matrix = compare_scores(&classifiers, &datasets, &scores, args.alpha).map_err(|e| UsageError(e.to_string()))?;

    fs::create_dir_all(&output).map_err(|e| UsageError(format!("{}: {e}", output.display())))?;
    let mut files = vec![
        ("accuracy.csv", accuracy_table(&matrix, &scores)),
        ("ranks.csv", rank_table(&matrix)),
    ];
    if classifiers.len() >= 2 {
        files.push(("pvalues.csv", square(&matrix, |i, j| opt(matrix.p_values[i][j]))));
        files.push(("decisions_raw.csv", square(&matrix, |i, j| opt(matrix.raw_decisions[i][j]))));
        files.push(("decisions_holm.csv", square(&matrix, |i, j| opt(matrix.holm_decisions[i][j]))));
        files.push((
            "wdl.csv",
            square(&matrix, |i, j| {
                matrix.win_draw_loss[i][j].map_or(String::new(), |(w, d, l)| format!("{w}/{d}/{l}"))
            }),
        ));
    }
    for (name, text) in files {
        let path = output.join(name);
        fs::write(&path, text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    }
    eprintln!("wrote comparison of {} classifiers over {} datasets to {}", classifiers.len(), datasets.len(), output.display());
    Ok(any)
}

fn subdirs(dir: &Path) -> Vec<String> {
    let mut out: Vec<String> = fs::read_dir(dir)
        .into_iter()
        .flatten()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| !n.starts_with('.') && n != "comparison")
        .collect();
    out.sort();
    out
}

fn result_files(dir: &Path) -> Vec<PathBuf> {
    fs::read_dir(dir)
        .into_iter()
        .flatten()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("resample") && n.ends_with(".csv"))
        })
        .collect()
}

fn mean_accuracy(dir: &Path) -> Option<f64> {
    let acc: Vec<f64> = result_files(dir)
        .iter()
        .filter_map(|p| read_results(p).ok())
        .map(|r| r.metrics.accuracy)
        .collect();
    (!acc.is_empty()).then(|| acc.iter().sum::<f64>() / acc.len() as f64)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

fn accuracy_table(m: &ComparisonMatrix, scores: &[Vec<Option<f64>>]) -> String {
    let mut out = format!("dataset,{}\n", m.classifiers.join(","));
    for (d, name) in m.datasets.iter().enumerate() {
        out.push_str(name);
        for s in scores {
            let _ = write!(out, ",{}", opt(s[d]));
        }
        out.push('\n');
    }
    out
}

fn rank_table(m: &ComparisonMatrix) -> String {
    let mut out = String::from("classifier,mean_accuracy,mean_rank\n");
    for (i, c) in m.classifiers.iter().enumerate() {
        let _ = writeln!(out, "{c},{},{}", m.mean_scores[i], m.mean_ranks[i]);
    }
    out
}

fn square(m: &ComparisonMatrix, cell: impl Fn(usize, usize) -> String) -> String {
    let mut out = format!("classifier,{}\n", m.classifiers.join(","));
    for (i, c) in m.classifiers.iter().enumerate() {
        out.push_str(c);
        for j in 0..m.classifiers.len() {
            let _ = write!(out, ",{}", cell(i, j));
        }
        out.push('\n');
    }
    out
}
