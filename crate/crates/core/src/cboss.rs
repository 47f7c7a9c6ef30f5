//! Contractable BOSS: a randomly sampled, size-capped ensemble of BOSS
//! members, each trained on a stratified subsample and weighted by its
//! train accuracy to the fourth power.
//!
//! Fitting is a resumable loop. The sampled parameter order is drawn up
//! front and stored with the ensemble state, so a run restored from a
//! checkpoint continues exactly where it stopped.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boss::{parameter_grid, vote, BossConfig, BossMember};
use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::persist;
use crate::sfa::SfaParams;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Per-iteration subsample generators use this stream offset so they never
/// share a stream with parameter sampling.
const SUBSAMPLE_STREAM: u64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CBossConfig {
    /// Maximum number of parameter samples (ignored under a contract).
    pub max_samples: usize,
    pub ensemble_size: usize,
    pub contract: Option<Duration>,
    pub checkpoint_path: Option<PathBuf>,
    pub subsample_fraction: f64,
    pub seed: u64,
    pub grid: BossConfig,
}

impl Default for CBossConfig {
    fn default() -> Self {
        Self {
            max_samples: 250,
            ensemble_size: 50,
            contract: None,
            checkpoint_path: None,
            subsample_fraction: 0.7,
            seed: 0,
            grid: BossConfig::default(),
        }
    }
}

impl CBossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_samples == 0 || self.ensemble_size == 0 {
            return Err(Error::InvalidParams("cBOSS needs positive k and s".into()));
        }
        if self.ensemble_size > self.max_samples {
            return Err(Error::InvalidParams(format!(
                "ensemble size {} exceeds parameter samples {}",
                self.ensemble_size, self.max_samples
            )));
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "subsample fraction {} outside (0, 1]",
                self.subsample_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedMember {
    pub member: BossMember,
    pub weight: f64,
    pub subsample_indices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CBossEnsemble {
    pub members: Vec<WeightedMember>,
    pub n_classes: usize,
    pub series_length: usize,
    /// Set when the parameter space was empty and no member could be built.
    pub empty_parameter_space: bool,
    /// Parameter samples evaluated.
    pub iterations: usize,
}

impl CBossEnsemble {
    /// Accuracy-weighted vote; uniform when the total weight is zero.
    pub fn predict(&self, series: &[f64]) -> Result<(usize, Vec<f64>)> {
        if series.len() != self.series_length {
            return Err(Error::InvalidParams(format!(
                "series of length {} given to a model fitted on length {}",
                series.len(),
                self.series_length
            )));
        }
        let mut weights = vec![0.0; self.n_classes];
        for m in &self.members {
            weights[m.member.classify(series)?] += m.weight;
        }
        Ok(vote(weights))
    }

    pub fn heap_bytes(&self) -> usize {
        self.members
            .iter()
            .map(|m| m.member.heap_bytes() + m.subsample_indices.capacity() * 8)
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct FitState {
    sampled: Vec<SfaParams>,
    next: usize,
    members: Vec<WeightedMember>,
    lowest: Option<(f64, usize)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    format_version: u32,
    dataset_hash: String,
    seed: u64,
    max_samples: usize,
    ensemble_size: usize,
    subsample_fraction: f64,
    iteration: usize,
    state: FitState,
}

/// Stepwise cBOSS fit.
pub struct CBossFitter<'a> {
    train: &'a TimeSeriesDataset,
    cfg: CBossConfig,
    state: FitState,
    empty_parameter_space: bool,
}

impl<'a> CBossFitter<'a> {
    pub fn new(train: &'a TimeSeriesDataset, cfg: CBossConfig) -> Result<Self> {
        cfg.validate()?;
        let mut space = parameter_grid(train.series_length(), &cfg.grid);
        let empty = space.is_empty();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        space.shuffle(&mut rng);
        if cfg.contract.is_none() {
            space.truncate(cfg.max_samples);
        }
        Ok(Self {
            train,
            cfg,
            state: FitState {
                sampled: space,
                next: 0,
                members: Vec::new(),
                lowest: None,
            },
            empty_parameter_space: empty,
        })
    }

    /// Restores a fit from `path`, refusing checkpoints written for another
    /// dataset or configuration.
    pub fn resume(train: &'a TimeSeriesDataset, cfg: CBossConfig, path: impl AsRef<Path>) -> Result<Self> {
        cfg.validate()?;
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ck: Checkpoint = serde_json::from_str(&text)
            .map_err(|e| Error::CheckpointInvalid(format!("unreadable checkpoint: {e}")))?;
        if ck.format_version != CHECKPOINT_VERSION {
            return Err(Error::CheckpointInvalid(format!(
                "format version {} (expected {CHECKPOINT_VERSION})",
                ck.format_version
            )));
        }
        if ck.dataset_hash != train.content_hash() {
            return Err(Error::CheckpointInvalid("dataset hash mismatch".into()));
        }
        if ck.seed != cfg.seed
            || ck.max_samples != cfg.max_samples
            || ck.ensemble_size != cfg.ensemble_size
            || ck.subsample_fraction != cfg.subsample_fraction
        {
            return Err(Error::CheckpointInvalid("configuration mismatch".into()));
        }
        let fresh = Self::new(train, cfg)?;
        if ck.iteration != ck.state.next
            || ck.state.next > ck.state.sampled.len()
            || ck.state.sampled[..ck.state.next] != fresh.state.sampled[..ck.state.next]
        {
            return Err(Error::CheckpointInvalid("inconsistent sampling state".into()));
        }
        Ok(Self {
            state: ck.state,
            ..fresh
        })
    }

    /// Resumes from the configured checkpoint when it exists.
    pub fn resume_or_new(train: &'a TimeSeriesDataset, cfg: CBossConfig) -> Result<Self> {
        match cfg.checkpoint_path.clone() {
            Some(path) if path.exists() => Self::resume(train, cfg, path),
            _ => Self::new(train, cfg),
        }
    }

    pub fn iteration(&self) -> usize {
        self.state.next
    }

    pub fn is_done(&self) -> bool {
        self.state.next >= self.state.sampled.len()
    }

    pub fn members(&self) -> &[WeightedMember] {
        &self.state.members
    }

    /// Fits the next sampled parameter set. Returns `false` once the sample
    /// sequence is exhausted.
    pub fn step(&mut self) -> Result<bool> {
        if self.is_done() {
            return Ok(false);
        }
        let i = self.state.next;
        let params = self.state.sampled[i];
        let indices = stratified_subsample(self.train, self.cfg.subsample_fraction, self.cfg.seed, i as u64);
        let sub = self.train.subset(&indices);
        let member = BossMember::fit(&sub, params, false)?;
        let acc = member.train_accuracy;
        let candidate = WeightedMember {
            member,
            weight: acc.powi(4),
            subsample_indices: indices,
        };

        let members = &mut self.state.members;
        if members.len() < self.cfg.ensemble_size {
            if self.state.lowest.is_none_or(|(low, _)| acc < low) {
                self.state.lowest = Some((acc, members.len()));
            }
            members.push(candidate);
        } else if let Some((low, idx)) = self.state.lowest {
            if acc > low {
                members[idx] = candidate;
                self.state.lowest = lowest_member(members);
            }
        }
        self.state.next += 1;
        Ok(true)
    }

    pub fn checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        let ck = Checkpoint {
            format_version: CHECKPOINT_VERSION,
            dataset_hash: self.train.content_hash(),
            seed: self.cfg.seed,
            max_samples: self.cfg.max_samples,
            ensemble_size: self.cfg.ensemble_size,
            subsample_fraction: self.cfg.subsample_fraction,
            iteration: self.state.next,
            state: self.state.clone(),
        };
        persist::save(&ck, path)
    }

    /// Steps until the samples run out or the contract expires, writing a
    /// checkpoint after every member when a path is configured. The contract
    /// is checked between members only.
    pub fn run(mut self) -> Result<CBossEnsemble> {
        let started = Instant::now();
        loop {
            if let Some(limit) = self.cfg.contract {
                if started.elapsed() >= limit {
                    if self.state.members.is_empty() && !self.is_done() {
                        return Err(Error::ContractTooSmall(limit));
                    }
                    break;
                }
            }
            if !self.step()? {
                break;
            }
            if let Some(path) = self.cfg.checkpoint_path.clone() {
                self.checkpoint(path)?;
            }
        }
        Ok(self.into_ensemble())
    }

    pub fn into_ensemble(self) -> CBossEnsemble {
        CBossEnsemble {
            members: self.state.members,
            n_classes: self.train.n_classes(),
            series_length: self.train.series_length(),
            empty_parameter_space: self.empty_parameter_space,
            iterations: self.state.next,
        }
    }
}

fn lowest_member(members: &[WeightedMember]) -> Option<(f64, usize)> {
    let mut lowest: Option<(f64, usize)> = None;
    for (i, m) in members.iter().enumerate() {
        let acc = m.member.train_accuracy;
        if lowest.is_none_or(|(l, _)| acc < l) {
            lowest = Some((acc, i));
        }
    }
    lowest
}

/// Fits cBOSS, resuming from the configured checkpoint if one exists.
pub fn fit_cboss(train: &TimeSeriesDataset, cfg: CBossConfig) -> Result<CBossEnsemble> {
    CBossFitter::resume_or_new(train, cfg)?.run()
}

/// `ceil(fraction * n)` case indices, sorted, with per-class quotas set by
/// largest remainder so class proportions hold to within one case.
pub fn stratified_subsample(train: &TimeSeriesDataset, fraction: f64, seed: u64, iteration: u64) -> Vec<usize> {
    let n = train.len();
    let target = ((fraction * n as f64).ceil() as usize).clamp(1, n);
    let counts = train.class_counts();
    let exact: Vec<f64> = counts.iter().map(|&c| fraction * c as f64).collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut missing = target - quota.iter().sum::<usize>().min(target);
    for &c in order.iter().cycle().take(order.len() * 2) {
        if missing == 0 {
            break;
        }
        if quota[c] < counts[c] {
            quota[c] += 1;
            missing -= 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SUBSAMPLE_STREAM + iteration);
    let mut chosen = Vec::with_capacity(target);
    for (class, &q) in quota.iter().enumerate() {
        let mut pool: Vec<usize> = (0..n).filter(|&i| train.label(i) == class).collect();
        pool.shuffle(&mut rng);
        chosen.extend_from_slice(&pool[..q]);
    }
    chosen.sort_unstable();
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{simulate, SimConfig};

    fn sim(seed: u64, m: usize, n_per_class: usize) -> TimeSeriesDataset {
        let cfg = SimConfig {
            n_per_class,
            m,
            noise_sigma: 0.3,
            counts_per_class: vec![vec![2, 0], vec![0, 2]],
            seed,
            ..SimConfig::default()
        }
        .with_shape_len(6);
        simulate(&cfg).unwrap().dataset
    }

    fn cfg(k: usize, s: usize) -> CBossConfig {
        CBossConfig {
            max_samples: k,
            ensemble_size: s,
            seed: 17,
            ..CBossConfig::default()
        }
    }

    #[test]
    fn single_sample_single_member() {
        let train = sim(1, 60, 6);
        let ens = fit_cboss(&train, cfg(1, 1)).unwrap();
        assert_eq!(ens.members.len(), 1);
        let m = &ens.members[0];
        assert!((m.weight - m.member.train_accuracy.powi(4)).abs() <= 1e-12);
    }

    #[test]
    fn exhausted_space_stops_early() {
        // m = 12: windows {10, 12}; l = 8, 10 (and 12 at w = 12) per p.
        let train = sim(2, 12, 4);
        let space = parameter_grid(12, &BossConfig::default()).len();
        let ens = fit_cboss(&train, cfg(space + 5, space + 5)).unwrap();
        assert_eq!(ens.members.len(), space);
        assert_eq!(ens.iterations, space);
    }

    #[test]
    fn empty_space_is_flagged() {
        let train = sim(3, 60, 4);
        let mut c = cfg(5, 5);
        c.grid.word_lengths = vec![];
        let ens = fit_cboss(&train, c).unwrap();
        assert!(ens.empty_parameter_space && ens.members.is_empty());
        let (_, p) = ens.predict(train.series(0)).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn zero_contract_is_too_small() {
        let train = sim(4, 60, 4);
        let mut c = cfg(5, 5);
        c.contract = Some(Duration::ZERO);
        assert!(matches!(fit_cboss(&train, c), Err(Error::ContractTooSmall(_))));
    }

    #[test]
    fn keeps_the_most_accurate_samples() {
        let train = sim(5, 60, 8);
        let all = fit_cboss(&train, cfg(30, 30)).unwrap();
        let top = fit_cboss(&train, cfg(30, 5)).unwrap();
        let mut every: Vec<f64> = all.members.iter().map(|m| m.member.train_accuracy).collect();
        every.sort_by(|a, b| b.total_cmp(a));
        let mut kept: Vec<f64> = top.members.iter().map(|m| m.member.train_accuracy).collect();
        kept.sort_by(|a, b| b.total_cmp(a));
        assert_eq!(kept, every[..5].to_vec());
    }

    #[test]
    fn weighted_vote_arithmetic() {
        let train = sim(6, 60, 4);
        let mut ens = fit_cboss(&train, cfg(2, 2)).unwrap();
        assert_eq!(ens.members.len(), 2);
        // Force the two members to disagree by pinning their training labels.
        for (m, label) in ens.members.iter_mut().zip([0usize, 1]) {
            m.member.train_labels.iter_mut().for_each(|l| *l = label);
        }
        ens.members[0].weight = 0.8f64.powi(4);
        ens.members[1].weight = 0.4f64.powi(4);
        let (label, p) = ens.predict(train.series(0)).unwrap();
        assert_eq!(label, 0);
        assert!((p[0] - 0.9412).abs() < 1e-4);

        ens.members.truncate(1);
        ens.members[0].weight = 0.5;
        assert_eq!(ens.predict(train.series(0)).unwrap().1, vec![1.0, 0.0]);

        ens.members[0].weight = 0.0;
        assert_eq!(ens.predict(train.series(0)).unwrap().1, vec![0.5, 0.5]);
    }

    #[test]
    fn subsample_sizes_and_strata() {
        let train = sim(7, 60, 7).subset(&(0..13).collect::<Vec<_>>());
        let counts = train.class_counts();
        for it in 0..20 {
            let idx = stratified_subsample(&train, 0.7, 3, it);
            assert_eq!(idx.len(), (0.7f64 * 13.0).ceil() as usize);
            let sub = train.subset(&idx).class_counts();
            for (c, &k) in sub.iter().enumerate() {
                assert!((k as f64 - 0.7 * counts[c] as f64).abs() <= 1.0);
            }
            assert!(idx.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn checkpoint_resume_reproduces_run() {
        let train = sim(8, 60, 6);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.json");
        let full = fit_cboss(&train, cfg(6, 4)).unwrap();

        for stop_after in [0usize, 3] {
            let mut fitter = CBossFitter::new(&train, cfg(6, 4)).unwrap();
            for _ in 0..stop_after {
                fitter.step().unwrap();
            }
            fitter.checkpoint(&path).unwrap();
            drop(fitter);
            let resumed = CBossFitter::resume(&train, cfg(6, 4), &path).unwrap().run().unwrap();
            assert_eq!(persist::to_json(&resumed).unwrap(), persist::to_json(&full).unwrap());
        }
    }

    #[test]
    fn checkpoint_rejects_other_dataset() {
        let train = sim(9, 60, 6);
        let other = sim(10, 60, 6);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.json");
        let mut fitter = CBossFitter::new(&train, cfg(6, 4)).unwrap();
        fitter.step().unwrap();
        fitter.checkpoint(&path).unwrap();
        assert!(matches!(
            CBossFitter::resume(&other, cfg(6, 4), &path),
            Err(Error::CheckpointInvalid(_))
        ));
        let mut c = cfg(6, 4);
        c.seed = 99;
        assert!(matches!(CBossFitter::resume(&train, c, &path), Err(Error::CheckpointInvalid(_))));
        std::fs::write(&path, "{ not json").unwrap();
        assert!(matches!(
            CBossFitter::resume(&train, cfg(6, 4), &path),
            Err(Error::CheckpointInvalid(_))
        ));
    }

    #[test]
    fn config_validation() {
        assert!(cfg(5, 6).validate().is_err());
        let mut c = cfg(5, 5);
        c.subsample_fraction = 0.0;
        assert!(c.validate().is_err());
        c.subsample_fraction = 1.0;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn lowest_accuracy_never_drops_after_fill() {
        let train = sim(11, 60, 8);
        let mut fitter = CBossFitter::new(&train, cfg(25, 4)).unwrap();
        let mut prev_low = f64::NEG_INFINITY;
        while fitter.step().unwrap() {
            assert!(fitter.members().len() <= 4);
            if fitter.members().len() == 4 {
                let low = fitter
                    .members()
                    .iter()
                    .map(|m| m.member.train_accuracy)
                    .fold(f64::INFINITY, f64::min);
                assert!(low >= prev_low);
                prev_low = low;
            }
        }
    }
}
