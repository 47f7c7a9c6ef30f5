use std::ops::Range;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, CaseRecord, Metrics};
use crate::alloc;
use crate::classifier::ClassifierSpec;
use crate::dataset::{resample, ResamplePlan, TimeSeriesDataset};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub dataset: String,
    pub classifier: String,
    pub resample_id: u64,
    pub params: String,
    pub n_classes: usize,
    pub records: Vec<CaseRecord>,
    pub metrics: Metrics,
    pub fit_time_ns: u64,
    pub predict_time_ns: u64,
    /// Peak live heap during the fit on the fitting thread; 0 when not
    /// instrumented.
    pub peak_memory_bytes: u64,
    /// Heap still held when the fit returned (the model itself).
    pub final_memory_bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ResampleOutcome {
    Completed(EvaluationResult),
    Failed { resample_id: u64, message: String },
}

impl ResampleOutcome {
    pub fn resample_id(&self) -> u64 {
        match self {
            Self::Completed(r) => r.resample_id,
            Self::Failed { resample_id, .. } => *resample_id,
        }
    }

    pub fn completed(&self) -> Option<&EvaluationResult> {
        match self {
            Self::Completed(r) => Some(r),
            Self::Failed { .. } => None,
        }
    }
}

/// Fits and scores one resample. The classifier seed is offset by the
/// resample id. With `instrument`, peak heap during the fit is measured.
pub fn evaluate_resample(
    spec: &ClassifierSpec,
    train: &TimeSeriesDataset,
    test: &TimeSeriesDataset,
    resample_id: u64,
    instrument: bool,
) -> Result<EvaluationResult> {
    let (train, test) = resample(train, test, ResamplePlan::new(resample_id))?;
    let base_seed = match spec {
        ClassifierSpec::CBoss(c) => c.seed,
        ClassifierSpec::Weasel(c) => c.seed,
        _ => 0,
    };
    let spec = spec.with_seed(base_seed.wrapping_add(resample_id));

    let started = Instant::now();
    let (model, usage) = if instrument {
        alloc::measure(|| spec.fit(&train))
    } else {
        (spec.fit(&train), alloc::MemoryUsage::default())
    };
    let model = model?;
    let fit_time_ns = started.elapsed().as_nanos() as u64;

    let started = Instant::now();
    let records = test
        .all_series()
        .iter()
        .zip(test.labels())
        .map(|(s, &y)| {
            let (predicted, probabilities) = model.predict(s)?;
            Ok(CaseRecord {
                true_label: y,
                predicted,
                probabilities,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let predict_time_ns = started.elapsed().as_nanos() as u64;
    let metrics = compute_metrics(&records, test.n_classes())?;
    Ok(EvaluationResult {
        dataset: train.name().to_string(),
        classifier: spec.name().to_string(),
        resample_id,
        params: spec.param_string(),
        n_classes: test.n_classes(),
        records,
        metrics,
        fit_time_ns,
        predict_time_ns,
        peak_memory_bytes: usage.peak_bytes as u64,
        final_memory_bytes: usage.retained_bytes as u64,
    })
}

/// Runs every resample in `resamples`. Failures are recorded and do not stop
/// the run. Resamples run in parallel unless `instrument` is set.
pub fn run_experiment(
    spec: &ClassifierSpec,
    train: &TimeSeriesDataset,
    test: &TimeSeriesDataset,
    resamples: Range<u64>,
    instrument: bool,
) -> Vec<ResampleOutcome> {
    let ids: Vec<u64> = resamples.collect();
    run_resamples(spec, train, test, &ids, instrument)
}

/// [`run_experiment`] over an explicit list of resample ids, in that order.
pub fn run_resamples(
    spec: &ClassifierSpec,
    train: &TimeSeriesDataset,
    test: &TimeSeriesDataset,
    ids: &[u64],
    instrument: bool,
) -> Vec<ResampleOutcome> {
    let one = |id: u64| match evaluate_resample(spec, train, test, id, instrument) {
        Ok(r) => ResampleOutcome::Completed(r),
        Err(e) => ResampleOutcome::Failed {
            resample_id: id,
            message: e.to_string(),
        },
    };
    if instrument {
        ids.iter().map(|&id| one(id)).collect()
    } else {
        ids.par_iter().map(|&id| one(id)).collect()
    }
}
