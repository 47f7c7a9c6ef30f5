//! Per-resample results files.
//!
//! ```text
//! dataset,classifier,resample_id
//! <parameter string>
//! accuracy,balanced_accuracy,auc,nll,fit_time_ns,predict_time_ns,peak_mem_bytes
//! true_label,predicted_label,,p_0,p_1,...
//! ```
//!
//! The first and third lines hold values in the order shown; one case line
//! follows per test case.

use std::fmt::Write as _;
use std::path::Path;

use super::experiment::EvaluationResult;
use super::metrics::{compute_metrics, CaseRecord};
use crate::error::{Error, Result};

pub fn write_results(r: &EvaluationResult) -> String {
    let mut out = String::new();
    let m = &r.metrics;
    let _ = writeln!(out, "{},{},{}", r.dataset, r.classifier, r.resample_id);
    let _ = writeln!(out, "{}", r.params.replace('\n', " "));
    let _ = writeln!(
        out,
        "{},{},{},{},{},{},{}",
        m.accuracy, m.balanced_accuracy, m.auc, m.nll, r.fit_time_ns, r.predict_time_ns, r.peak_memory_bytes
    );
    for c in &r.records {
        let _ = write!(out, "{},{},", c.true_label, c.predicted);
        for p in &c.probabilities {
            let _ = write!(out, ",{p}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_results(text: &str) -> Result<EvaluationResult> {
    let mut lines = text.lines();
    let mut next = |line: usize| {
        lines.next().ok_or(Error::Parse {
            line,
            message: "results file is truncated".into(),
        })
    };
    let bad = |line: usize, message: &str| Error::Parse {
        line,
        message: message.to_string(),
    };

    let header: Vec<&str> = next(1)?.rsplitn(3, ',').collect();
    if header.len() != 3 {
        return Err(bad(1, "expected dataset,classifier,resample_id"));
    }
    let resample_id = header[0].parse().map_err(|_| bad(1, "bad resample id"))?;
    let classifier = header[1].to_string();
    let dataset = header[2].to_string();
    let params = next(2)?.to_string();

    let stats: Vec<&str> = next(3)?.split(',').collect();
    if stats.len() != 7 {
        return Err(bad(3, "expected seven summary fields"));
    }
    let float = |i: usize| stats[i].parse::<f64>().map_err(|_| bad(3, "bad metric"));
    let int = |i: usize| stats[i].parse::<u64>().map_err(|_| bad(3, "bad counter"));
    let (accuracy, balanced, auc, nll) = (float(0)?, float(1)?, float(2)?, float(3)?);
    let (fit_time_ns, predict_time_ns, peak_memory_bytes) = (int(4)?, int(5)?, int(6)?);

    let mut records = Vec::new();
    for (k, line) in lines.enumerate() {
        let line_no = k + 4;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 4 || !fields[2].is_empty() {
            return Err(bad(line_no, "expected true,predicted,,p_0,..."));
        }
        let true_label = fields[0].parse().map_err(|_| bad(line_no, "bad label"))?;
        let predicted = fields[1].parse().map_err(|_| bad(line_no, "bad prediction"))?;
        let probabilities = fields[3..]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| bad(line_no, "bad probability")))
            .collect::<Result<Vec<_>>>()?;
        records.push(CaseRecord {
            true_label,
            predicted,
            probabilities,
        });
    }
    let n_classes = records.first().map_or(0, |r| r.probabilities.len());
    if records.iter().any(|r| r.probabilities.len() != n_classes) {
        return Err(bad(4, "probability vectors differ in length"));
    }
    let mut metrics = compute_metrics(&records, n_classes)?;
    metrics.accuracy = accuracy;
    metrics.balanced_accuracy = balanced;
    metrics.auc = auc;
    metrics.nll = nll;
    Ok(EvaluationResult {
        dataset,
        classifier,
        resample_id,
        params,
        n_classes,
        records,
        metrics,
        fit_time_ns,
        predict_time_ns,
        peak_memory_bytes,
        final_memory_bytes: 0,
    })
}

pub fn read_results(path: impl AsRef<Path>) -> Result<EvaluationResult> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_results(&text)
}
