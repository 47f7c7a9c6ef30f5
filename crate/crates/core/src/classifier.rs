//! Uniform entry point over the four classifiers.

use serde::{Deserialize, Serialize};

use crate::boss::{BossConfig, BossEnsemble};
use crate::cboss::{fit_cboss, CBossConfig, CBossEnsemble};
use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::sboss::{SBossConfig, SBossEnsemble};
use crate::weasel::{WeaselConfig, WeaselModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "classifier", rename_all = "lowercase")]
pub enum ClassifierSpec {
    Boss(BossConfig),
    CBoss(CBossConfig),
    SBoss(SBossConfig),
    Weasel(WeaselConfig),
}

pub const CLASSIFIER_NAMES: [&str; 4] = ["boss", "cboss", "sboss", "weasel"];

impl ClassifierSpec {
    /// Default configuration for a classifier name.
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "boss" => Ok(Self::Boss(BossConfig::default())),
            "cboss" => Ok(Self::CBoss(CBossConfig::default())),
            "sboss" => Ok(Self::SBoss(SBossConfig::default())),
            "weasel" => Ok(Self::Weasel(WeaselConfig::default())),
            other => Err(Error::InvalidParams(format!(
                "unknown classifier {other:?}; expected one of {}",
                CLASSIFIER_NAMES.join(", ")
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Boss(_) => "boss",
            Self::CBoss(_) => "cboss",
            Self::SBoss(_) => "sboss",
            Self::Weasel(_) => "weasel",
        }
    }

    /// Copy with its random seed replaced; deterministic classifiers are
    /// returned unchanged.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut out = self.clone();
        match &mut out {
            Self::CBoss(c) => c.seed = seed,
            Self::Weasel(c) => c.seed = seed,
            Self::Boss(_) | Self::SBoss(_) => {}
        }
        out
    }

    /// Single-line description of the configuration.
    pub fn param_string(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }

    pub fn fit(&self, train: &TimeSeriesDataset) -> Result<FittedModel> {
        Ok(match self {
            Self::Boss(c) => FittedModel::Boss(BossEnsemble::fit(train, c)?),
            Self::CBoss(c) => FittedModel::CBoss(fit_cboss(train, c.clone())?),
            Self::SBoss(c) => FittedModel::SBoss(SBossEnsemble::fit(train, c)?),
            Self::Weasel(c) => FittedModel::Weasel(WeaselModel::fit(train, c)?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FittedModel {
    Boss(BossEnsemble),
    CBoss(CBossEnsemble),
    SBoss(SBossEnsemble),
    Weasel(WeaselModel),
}

impl FittedModel {
    pub fn predict(&self, series: &[f64]) -> Result<(usize, Vec<f64>)> {
        match self {
            Self::Boss(m) => m.predict(series),
            Self::CBoss(m) => m.predict(series),
            Self::SBoss(m) => m.predict(series),
            Self::Weasel(m) => m.predict(series),
        }
    }

    /// Approximate heap held by the fitted model.
    pub fn heap_bytes(&self) -> usize {
        match self {
            Self::Boss(m) => m.heap_bytes(),
            Self::CBoss(m) => m.heap_bytes(),
            Self::SBoss(m) => m.heap_bytes(),
            Self::Weasel(m) => m.heap_bytes(),
        }
    }
}
