//! Reproducible Monte Carlo experiments and their reports.
//!
//! Every experiment fans its trials out with seeds derived from one master
//! seed and collects rows in trial order, so a report is a pure function of
//! its configuration.

mod census_runs;
pub mod cli;
mod search_runs;
mod survival;

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{critical_p0, Params, ToleranceSchedule};
use crate::sampling::derive_trial_seed;
use crate::{Error, Result};

pub use census_runs::{
    giant_checks, run_giant, run_shadow, run_sprinkling, run_subcritical, shadow_bound, shadow_checks,
    sprinkle_checks, sprinkle_split, subcritical_bound, subcritical_checks, GiantTrial, ShadowRow,
    SprinkleTrial, SubcriticalTrial,
};
pub use search_runs::{
    hypertree_checks, run_hypertree, run_smoothness, smoothness_checks, HypertreeTrial, SmoothRow,
    SmoothnessOutput,
};
pub use survival::{run_survival_mc, survival_checks, SurvivalOutput, SurvivalRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Sub,
    Super,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: u32,
    pub k: u32,
    pub j: u32,
    /// Distance from criticality, `|p / p0 - 1|`.
    pub eps: f64,
    pub regime: Regime,
    pub p: f64,
    pub p0: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub schedule: ToleranceSchedule,
    /// Query budget fraction: explorations stop after `alpha n^k` queries.
    /// Defaults to `4 rho1`.
    pub alpha: Option<f64>,
    /// Second-round probability for sprinkling; the default is
    /// `(ln n)^2 / (rho1^2 n^(k-j+1))`.
    pub sprinkle_p2: Option<f64>,
    /// Survival proxy caps for branching simulations.
    pub size_cap: u64,
    pub generation_cap: usize,
}

impl ExperimentConfig {
    /// `p = (1 + eps) p0` for the supercritical regime, `(1 - eps) p0` for the subcritical one.
    pub fn new(n: u32, k: u32, j: u32, eps: f64, regime: Regime, trials: usize, master_seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::Config(format!("eps = {eps} must lie in [0, 1)")));
        }
        let signed = match regime {
            Regime::Super => eps,
            Regime::Sub => -eps,
        };
        let params = Params::from_eps(n, k, j, signed)?;
        ExperimentConfig::assemble(params, eps, regime, trials, master_seed)
    }

    /// Explicit edge probability; `eps` and the regime are read off `p / p0`.
    pub fn with_p(n: u32, k: u32, j: u32, p: f64, trials: usize, master_seed: u64) -> Result<Self> {
        let params = Params::new(n, k, j, p)?;
        let ratio = p / critical_p0(&params)? - 1.0;
        let regime = if ratio < 0.0 { Regime::Sub } else { Regime::Super };
        ExperimentConfig::assemble(params, ratio.abs(), regime, trials, master_seed)
    }

    fn assemble(params: Params, eps: f64, regime: Regime, trials: usize, master_seed: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        Ok(ExperimentConfig {
            n: params.n,
            k: params.k,
            j: params.j,
            eps,
            regime,
            p: params.p,
            p0: critical_p0(&params)?,
            trials,
            master_seed,
            schedule: ToleranceSchedule::for_eps(eps, params.n),
            alpha: None,
            sprinkle_p2: None,
            size_cap: 100_000,
            generation_cap: 1_000,
        })
    }

    pub fn params(&self) -> Params {
        Params {
            n: self.n,
            k: self.k,
            j: self.j,
            p: self.p,
            eps: Some(self.signed_eps()),
        }
    }

    pub fn signed_eps(&self) -> f64 {
        match self.regime {
            Regime::Super => self.eps,
            Regime::Sub => -self.eps,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(4.0 * self.schedule.rho1)
    }

    /// `rho1 n^j`, the size at which a component counts as large.
    pub fn large_threshold(&self) -> f64 {
        self.schedule.rho1 * (self.n as f64).powi(self.j as i32)
    }

    /// The configuration with every default made explicit.
    pub fn resolved(&self) -> Self {
        ExperimentConfig { alpha: Some(self.alpha()), ..self.clone() }
    }

    pub fn trial_seed(&self, index: usize) -> u64 {
        derive_trial_seed(self.master_seed, index as u64)
    }

    pub(crate) fn require(&self, regime: Regime, what: &str) -> Result<()> {
        if self.regime != regime {
            return Err(Error::Config(format!("{what} needs the {regime:?} regime")));
        }
        Ok(())
    }

    /// Logs every violated ordering of the tolerance hierarchy.
    pub fn warn_hierarchy(&self) -> Vec<String> {
        let warnings = self.schedule.hierarchy_warnings(self.n, self.eps, self.j);
        for w in &warnings {
            log::warn!("tolerance hierarchy: {w}");
        }
        warnings
    }
}

/// Runs `f(index, seed)` for every trial in parallel and returns results in index order.
pub(crate) fn run_trials<T, F>(count: usize, master_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync + Send,
{
    run_range(0..count, master_seed, f)
}

pub(crate) fn run_range<T, F>(range: std::ops::Range<usize>, master_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync + Send,
{
    range
        .into_par_iter()
        .map(|i| f(i, derive_trial_seed(master_seed, i as u64)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// Per-trial rows plus aggregates, tagged with the resolved configuration.
#[derive(Clone, Debug, Serialize)]
pub struct Report<R> {
    pub config: ExperimentConfig,
    pub trials: Vec<R>,
    pub aggregate: BTreeMap<String, f64>,
}

impl<R: Serialize> Report<R> {
    pub fn new(config: &ExperimentConfig, trials: Vec<R>) -> Self {
        Report { config: config.resolved(), trials, aggregate: BTreeMap::new() }
    }

    pub fn set(&mut self, key: &str, value: f64) {
        self.aggregate.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> f64 {
        self.aggregate.get(key).copied().unwrap_or(f64::NAN)
    }

    /// Header, one row per trial, then `# aggregate: key=value` and
    /// `# config: {json}` comment lines.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        {
            let mut out = csv::Writer::from_writer(&mut w);
            for row in &self.trials {
                out.serialize(row).map_err(|e| Error::Io(std::io::Error::other(e)))?;
            }
            out.flush()?;
        }
        for (k, v) in &self.aggregate {
            writeln!(w, "# aggregate: {k}={v}")?;
        }
        let config = serde_json::to_string(&self.config).map_err(|e| Error::Parse(e.to_string()))?;
        writeln!(w, "# config: {config}")?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self).map_err(|e| Error::Parse(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    }

    pub fn write<W: Write>(&self, w: W, format: Format) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(w),
            Format::Json => self.write_json(w),
        }
    }
}

/// Named pass/fail verdict of a report against its expected behaviour.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Check { name: name.to_string(), passed, detail }
    }
}

pub(crate) fn fraction(flags: impl Iterator<Item = bool>) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for f in flags {
        hit += f as usize;
        total += 1;
    }
    if total == 0 {
        f64::NAN
    } else {
        hit as f64 / total as f64
    }
}
