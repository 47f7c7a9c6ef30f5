//! Dictionary-based time series classification.
//!
//! Four classifiers share one symbolic front end ([`sfa`]): sliding windows
//! are Fourier transformed, truncated and discretised into words, and each
//! series becomes a histogram of words.
//!
//! * [`boss`]: 1-NN over word histograms, ensembled by grid search.
//! * [`cboss`]: randomised, contractable BOSS with weighted members and
//!   checkpointing.
//! * [`sboss`]: BOSS with spatial pyramids over word positions.
//! * [`weasel`]: multi-window unigram and bigram features with chi-squared
//!   filtering and logistic regression.
//!
//! [`simulator`] generates shape-frequency data, and [`evaluation`] holds
//! metrics, significance tests and the experiment harness.

pub mod alloc;
pub mod boss;
pub mod cboss;
pub mod classifier;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod logistic;
pub mod persist;
pub mod sboss;
pub mod sfa;
pub mod simulator;
pub mod weasel;

pub use crate::boss::{boss_distance, build_bag, BossConfig, BossEnsemble, BossMember, WordBag};
pub use crate::cboss::{CBossConfig, CBossEnsemble, CBossFitter};
pub use crate::classifier::{ClassifierSpec, FittedModel};
pub use crate::dataset::{load_dataset, resample, z_normalise, DataFormat, ResamplePlan, TimeSeriesDataset};
pub use crate::error::{Error, Result};
pub use crate::sboss::{SBossConfig, SBossEnsemble, SBossMember};
pub use crate::sfa::{BreakpointMatrix, SfaParams, Word};
pub use crate::simulator::{simulate, SimConfig, SimInstance};
pub use crate::weasel::{WeaselConfig, WeaselModel};
