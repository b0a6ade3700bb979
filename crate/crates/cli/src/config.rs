//! Settings read from `--config`, merged under the command-line flags.

use std::path::Path;

use dprel::hdtest::{BranchPolicy, GumbelScale, HdTestConfig};
use dprel::privacy::Regularizer;
use dprel::Error;
use serde::Deserialize;

use crate::args::{BranchChoice, DataArgs, ScaleChoice, TestArgs};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Thresholds {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FileConfig {
    pub alpha: Option<f64>,
    pub rho: Option<f64>,
    pub dp_delta: Option<f64>,
    #[serde(rename = "B")]
    pub bootstrap: Option<usize>,
    pub gamma: Option<f64>,
    pub branch: Option<BranchPolicy>,
    pub gap_budget_fraction: Option<f64>,
    pub gumbel_scale: Option<GumbelScale>,
    pub delta: Option<Thresholds>,
    pub seed: Option<u64>,
    pub band: Option<usize>,
    pub jitter: Option<f64>,
    pub penalty: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Error> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Parameter(format!("bad config {}: {e}", path.display())))
    }
}

/// Privacy and data-handling settings after merging.
#[derive(Debug, Clone)]
pub struct Common {
    pub rho: f64,
    pub dp_delta: Option<f64>,
    pub seed: u64,
    pub band: Option<usize>,
    pub jitter: Option<f64>,
    pub penalty: Option<f64>,
}

impl Common {
    pub fn resolve(args: &DataArgs, file: &FileConfig) -> Result<Self, Error> {
        let rho = args
            .rho
            .or(file.rho)
            .ok_or_else(|| Error::Parameter("a privacy budget is required: pass --rho".into()))?;
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Parameter(format!("--rho must be positive and finite, got {rho}")));
        }
        Ok(Self {
            rho,
            dp_delta: args.dp_delta.or(file.dp_delta),
            // without an explicit seed the noise must not be predictable
            seed: args.seed.or(file.seed).unwrap_or_else(rand::random),
            band: args.band.or(file.band),
            jitter: args.jitter.or(file.jitter),
            penalty: args.penalty.or(file.penalty),
        })
    }

    pub fn dp_delta(&self, n: usize) -> f64 {
        self.dp_delta.unwrap_or(1.0 / n as f64)
    }

    pub fn regularizer(&self, n: usize) -> Regularizer {
        match self.penalty {
            Some(c) => Regularizer::Linear { c, n },
            None => Regularizer::None,
        }
    }
}

pub fn test_config(args: &TestArgs, file: &FileConfig, common: &Common, n: usize) -> HdTestConfig {
    let d = HdTestConfig::default();
    HdTestConfig {
        alpha: args.alpha.or(file.alpha).unwrap_or(d.alpha),
        rho: common.rho,
        dp_delta: common.dp_delta(n),
        bootstrap_reps: args.bootstrap.or(file.bootstrap).unwrap_or(d.bootstrap_reps),
        gamma: args.gamma.or(file.gamma).unwrap_or(d.gamma),
        gumbel_scale: args
            .gumbel_scale
            .map(|s| match s {
                ScaleChoice::Squared => GumbelScale::Squared,
                ScaleChoice::Literal => GumbelScale::Literal,
            })
            .or(file.gumbel_scale)
            .unwrap_or(d.gumbel_scale),
        gap_budget_fraction: args
            .gap_budget_fraction
            .or(file.gap_budget_fraction)
            .unwrap_or(d.gap_budget_fraction),
        regularizer: common.regularizer(n),
        branch: args
            .branch
            .map(|b| match b {
                BranchChoice::Auto => BranchPolicy::Auto,
                BranchChoice::Gumbel => BranchPolicy::Gumbel,
                BranchChoice::Hoeffding => BranchPolicy::Hoeffding,
                BranchChoice::Finite => BranchPolicy::Finite,
            })
            .or(file.branch)
            .unwrap_or(d.branch),
    }
}

pub fn thresholds(args: &TestArgs, file: &FileConfig) -> Option<Vec<f64>> {
    args.delta.clone().or_else(|| {
        file.delta.clone().map(|t| match t {
            Thresholds::One(v) => vec![v],
            Thresholds::Many(v) => v,
        })
    })
}
