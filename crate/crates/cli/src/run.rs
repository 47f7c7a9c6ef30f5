use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use tsdict::dataset::load_train_test;
use tsdict::evaluation::{evaluate_resample, read_results, run_resamples, write_results, ResampleOutcome};
use tsdict::simulator::{simulate_split, SimConfig};
use tsdict::{ClassifierSpec, TimeSeriesDataset};

use crate::{RunArgs, UsageError};

pub fn run(args: &RunArgs) -> Result<bool, UsageError> {
    let spec = build_spec(args)?;
    let ids = parse_range(&args.resamples)?;
    let (train, test) = load_data(&args.data)?;
    let dir = args.results.join(spec.name()).join(train.name());
    fs::create_dir_all(&dir).map_err(|e| UsageError(format!("cannot create {}: {e}", dir.display())))?;
    if let Some(cp) = &args.checkpoint {
        fs::create_dir_all(cp).map_err(|e| UsageError(format!("cannot create {}: {e}", cp.display())))?;
    }

    let pending: Vec<u64> = ids
        .into_iter()
        .filter(|&id| {
            let done = !args.force && read_results(result_path(&dir, id)).is_ok();
            if done {
                eprintln!("{} {} resample {id}: already done", spec.name(), train.name());
            }
            !done
        })
        .collect();

    let outcomes: Vec<ResampleOutcome> = match &args.checkpoint {
        None => run_resamples(&spec, &train, &test, &pending, args.instrument),
        Some(cp) => pending
            .iter()
            .map(|&id| {
                let mut spec = spec.clone();
                if let ClassifierSpec::CBoss(c) = &mut spec {
                    c.checkpoint_path = Some(cp.join(format!("{}_resample{id}.json", train.name())));
                }
                match evaluate_resample(&spec, &train, &test, id, args.instrument) {
                    Ok(r) => ResampleOutcome::Completed(r),
                    Err(e) => ResampleOutcome::Failed {
                        resample_id: id,
                        message: e.to_string(),
                    },
                }
            })
            .collect(),
    };

    let mut all_ok = true;
    for outcome in outcomes {
        let id = outcome.resample_id();
        let written = match &outcome {
            ResampleOutcome::Completed(r) => {
                eprintln!(
                    "{} {} resample {id}: accuracy {:.4}",
                    spec.name(),
                    train.name(),
                    r.metrics.accuracy
                );
                let _ = fs::remove_file(failure_path(&dir, id));
                atomic_write(&result_path(&dir, id), &write_results(r))
            }
            ResampleOutcome::Failed { message, .. } => {
                eprintln!("{} {} resample {id}: failed: {message}", spec.name(), train.name());
                all_ok = false;
                atomic_write(&failure_path(&dir, id), &format!("{message}\n"))
            }
        };
        if let Err(e) = written {
            eprintln!("resample {id}: cannot write results: {e}");
            all_ok = false;
        }
    }
    Ok(all_ok)
}

fn build_spec(args: &RunArgs) -> Result<ClassifierSpec, UsageError> {
    let mut spec = ClassifierSpec::from_name(&args.classifier).map_err(|e| UsageError(e.to_string()))?;
    match &mut spec {
        ClassifierSpec::CBoss(c) => {
            if let Some(secs) = args.contract_seconds {
                let limit = Duration::try_from_secs_f64(secs)
                    .map_err(|_| UsageError(format!("--contract-seconds {secs} is not a valid duration")))?;
                c.contract = Some(limit);
            }
        }
        _ => {
            if args.contract_seconds.is_some() || args.checkpoint.is_some() {
                return Err(UsageError(
                    "--contract-seconds and --checkpoint only apply to cboss".into(),
                ));
            }
        }
    }
    Ok(spec.with_seed(args.seed))
}

/// `A..B` (half-open) or a single id.
pub fn parse_range(text: &str) -> Result<Vec<u64>, UsageError> {
    let bad = || UsageError(format!("--resamples expects A..B or N, got {text:?}"));
    let (lo, hi) = match text.split_once("..") {
        Some((a, b)) => (
            a.trim().parse::<u64>().map_err(|_| bad())?,
            b.trim().parse::<u64>().map_err(|_| bad())?,
        ),
        None => {
            let n = text.trim().parse::<u64>().map_err(|_| bad())?;
            (n, n + 1)
        }
    };
    if lo >= hi {
        return Err(UsageError(format!("--resamples range {text:?} is empty")));
    }
    Ok((lo..hi).collect())
}

fn load_data(path: &Path) -> Result<(TimeSeriesDataset, TimeSeriesDataset), UsageError> {
    let usage = |e: tsdict::Error| UsageError(format!("{}: {e}", path.display()));
    if path.extension().is_some_and(|e| e == "sim") {
        let cfg = SimConfig::load(path).map_err(usage)?;
        let name = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let (train, test) = simulate_split(&cfg, cfg.n_per_class).map_err(usage)?;
        return Ok((train.dataset.with_name(&name), test.dataset.with_name(name)));
    }
    let train_path = if path.is_dir() { find_train_file(path)? } else { path.to_path_buf() };
    let test_path = test_partner(&train_path)
        .ok_or_else(|| UsageError(format!("{} is not a *_TRAIN file", train_path.display())))?;
    load_train_test(&train_path, &test_path).map_err(usage)
}

fn find_train_file(dir: &Path) -> Result<PathBuf, UsageError> {
    let entries = fs::read_dir(dir).map_err(|e| UsageError(format!("{}: {e}", dir.display())))?;
    let mut found: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && test_partner(p).is_some_and(|t| t.is_file()))
        .collect();
    found.sort();
    match found.len() {
        1 => Ok(found.remove(0)),
        0 => Err(UsageError(format!("no NAME_TRAIN/NAME_TEST pair in {}", dir.display()))),
        _ => Err(UsageError(format!("several datasets in {}; pass the *_TRAIN file", dir.display()))),
    }
}

fn test_partner(train: &Path) -> Option<PathBuf> {
    let stem = train.file_stem()?.to_str()?;
    let base = stem.strip_suffix("_TRAIN")?;
    let mut name = format!("{base}_TEST");
    if let Some(ext) = train.extension().and_then(|e| e.to_str()) {
        name = format!("{name}.{ext}");
    }
    Some(train.with_file_name(name))
}

pub fn result_path(dir: &Path, id: u64) -> PathBuf {
    dir.join(format!("resample{id}.csv"))
}

fn failure_path(dir: &Path, id: u64) -> PathBuf {
    dir.join(format!("resample{id}.failed"))
}

/// Writes beside the target and renames, so readers never see partial files.
fn atomic_write(path: &Path, contents: &str) -> std::io::Result<()> {
    let name = path.file_name().unwrap_or_default().to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(contents.as_bytes())?;
    f.sync_all()?;
    fs::rename(&tmp, path)
}
