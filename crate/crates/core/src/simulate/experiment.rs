//! Monte-Carlo rejection rates over a grid of thresholds.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::design::{build_tau, CopulaSampler, Design, TauModel};
use crate::error::{Error, Result};
use crate::hdtest::{hd_release, BranchPolicy, HdTestConfig};
use crate::privacy::PrivacyBudget;
use crate::rng::{streams, Seed};
use crate::ustat::KendallKernel;

/// A test whose rejection rate is recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// The adaptive test: bootstrap on the extremal set, Gumbel fallback.
    Hdtest,
    Hoeffding,
    Gumbel,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Hdtest => "hdtest",
            Method::Hoeffding => "hoeffding",
            Method::Gumbel => "gumbel",
        }
    }

    fn policy(self) -> BranchPolicy {
        match self {
            Method::Hdtest => BranchPolicy::Auto,
            Method::Hoeffding => BranchPolicy::Hoeffding,
            Method::Gumbel => BranchPolicy::Gumbel,
        }
    }

    fn stream(self) -> u64 {
        match self {
            Method::Hdtest => 1,
            Method::Hoeffding => 2,
            Method::Gumbel => 3,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hdtest" => Ok(Method::Hdtest),
            "hoeffding" => Ok(Method::Hoeffding),
            "gumbel" => Ok(Method::Gumbel),
            _ => Err(Error::param(format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: TauModel,
    pub n: usize,
    pub rho_list: Vec<f64>,
    /// Strictly descending thresholds.
    pub delta_grid: Vec<f64>,
    pub alpha: f64,
    pub bootstrap_reps: usize,
    pub reps: usize,
    pub seed: u64,
    /// PTR slack; `1/n` when absent.
    pub dp_delta: Option<f64>,
    pub gamma: f64,
    pub gap_budget_fraction: f64,
    pub methods: Vec<Method>,
}

impl ExperimentConfig {
    /// Defaults: `α = 0.05`, `B = 200`, 200 replications, the adaptive test
    /// only.
    pub fn new(design: Design, n: usize, d: usize, rho_list: Vec<f64>, delta_grid: Vec<f64>) -> Result<Self> {
        Ok(Self {
            model: build_tau(design, d)?,
            n,
            rho_list,
            delta_grid,
            alpha: 0.05,
            bootstrap_reps: 200,
            reps: 200,
            seed: 0,
            dp_delta: None,
            gamma: 0.0,
            gap_budget_fraction: 1.0 / 3.0,
            methods: vec![Method::Hdtest],
        })
    }

    fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::param("reps must be at least 1"));
        }
        if self.n < 3 {
            return Err(Error::param("n must be at least 3"));
        }
        if self.rho_list.is_empty() || self.delta_grid.is_empty() || self.methods.is_empty() {
            return Err(Error::param("rho list, threshold grid and methods must be nonempty"));
        }
        if self.delta_grid.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::param("threshold grid must be strictly descending"));
        }
        Ok(())
    }

    fn test_config(&self, method: Method, rho: f64) -> HdTestConfig {
        HdTestConfig {
            alpha: self.alpha,
            rho,
            dp_delta: self.dp_delta.unwrap_or(1.0 / self.n as f64),
            bootstrap_reps: self.bootstrap_reps,
            gamma: self.gamma,
            gap_budget_fraction: self.gap_budget_fraction,
            branch: method.policy(),
            ..HdTestConfig::default()
        }
    }
}

/// One CSV row: the rejection frequency of a method at `(ρ, Δ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: String,
    pub n: usize,
    pub d: usize,
    pub rho: f64,
    #[serde(rename = "Delta")]
    pub delta: f64,
    pub method: String,
    #[serde(rename = "rejectRate")]
    pub reject_rate: f64,
    pub reps: usize,
    pub seed: u64,
}

/// Seed of replicate `rep` under the `rho_index`-th privacy level.
pub fn replicate_seed(seed: u64, rho_index: usize, rep: usize) -> Seed {
    Seed(seed).child(rho_index as u64).child(rep as u64)
}

/// For every `(ρ, rep)`: fresh data, one release per method, and decisions
/// at every grid point from that release.
pub fn run_power_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let sampler = CopulaSampler::new(&config.model)?;
    let kernel = KendallKernel::new(config.model.d())?;
    let grid = &config.delta_grid;
    let mut rows = Vec::new();

    for (ri, &rho) in config.rho_list.iter().enumerate() {
        // decisions[rep][method][delta]
        let decisions: Vec<Vec<Vec<bool>>> = (0..config.reps)
            .into_par_iter()
            .map(|rep| -> Result<Vec<Vec<bool>>> {
                let seed = replicate_seed(config.seed, ri, rep);
                let data = sampler.sample(config.n, &mut seed.stream(streams::DATA))?;
                config
                    .methods
                    .iter()
                    .map(|&m| {
                        let cfg = config.test_config(m, rho);
                        let (r, d) = cfg.charge();
                        let mut budget = PrivacyBudget::new(r, d.min(0.999_999))?;
                        let release = hd_release(&data, &kernel, &cfg, &mut budget, seed.child(m.stream()))?;
                        Ok(grid.iter().map(|&delta| release.decide(delta)).collect())
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;

        for (mi, m) in config.methods.iter().enumerate() {
            for (gi, &delta) in grid.iter().enumerate() {
                let hits = decisions.iter().filter(|rep| rep[mi][gi]).count();
                rows.push(ResultRow {
                    model: config.model.design.to_string(),
                    n: config.n,
                    d: config.model.d(),
                    rho,
                    delta,
                    method: m.name().to_string(),
                    reject_rate: hits as f64 / config.reps as f64,
                    reps: config.reps,
                    seed: config.seed,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_results_csv<W: Write>(rows: &[ResultRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// The rate of `method` at `(rho, delta)`, if present.
pub fn lookup_rate(rows: &[ResultRow], method: Method, rho: f64, delta: f64) -> Option<f64> {
    rows.iter()
        .find(|r| r.method == method.name() && r.rho == rho && r.delta == delta)
        .map(|r| r.reject_rate)
}
