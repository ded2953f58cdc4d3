use serde::{Deserialize, Serialize};

use super::{run_trials, Check, ExperimentConfig, Regime, Report};
use crate::branching::{
    dual_expected_total, simulate, survival_probability, OffspringLaw, Trajectory, DEFAULT_TOL,
};
use crate::sampling::derive_trial_seed;
use crate::stats::{binomial_sigma, ks_critical, ks_statistic, mean};
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRow {
    /// `upper` (T_≥), `lower` (T_<) or `dual` (T̂).
    pub process: String,
    pub litter: u64,
    pub trials_per_individual: u64,
    pub prob: f64,
    pub runs: u64,
    pub survived: u64,
    pub frequency: f64,
    pub solver: f64,
    pub sigma: f64,
    /// `(frequency - solver) / sigma`.
    pub z: f64,
    pub extinct_mean_total: f64,
}

#[derive(Clone, Debug)]
pub struct SurvivalOutput {
    pub report: Report<SurvivalRow>,
    /// Totals of the extinct `T_≥` runs.
    pub upper_extinct_totals: Vec<u64>,
    pub dual_totals: Vec<u64>,
}

fn stream(master: u64, tag: u64) -> u64 {
    derive_trial_seed(master, (1 << 63) | tag)
}

fn row(name: &str, law: &OffspringLaw, runs: &[Trajectory], solver: f64) -> SurvivalRow {
    let survived = runs.iter().filter(|t| t.survived()).count() as u64;
    let freq = survived as f64 / runs.len() as f64;
    let sigma = binomial_sigma(solver, runs.len() as u64);
    let extinct: Vec<f64> = runs.iter().filter(|t| !t.survived()).map(|t| t.total as f64).collect();
    SurvivalRow {
        process: name.to_string(),
        litter: law.litter,
        trials_per_individual: law.trials,
        prob: law.prob,
        runs: runs.len() as u64,
        survived,
        frequency: freq,
        solver,
        sigma,
        z: if sigma > 0.0 { (freq - solver) / sigma } else { 0.0 },
        extinct_mean_total: mean(&extinct),
    }
}

/// Survival frequencies of `T_≥` and `T_<` against the solver, and the
/// extinct `T_≥` totals against the dual process `T̂`.
pub fn run_survival_mc(cfg: &ExperimentConfig) -> Result<SurvivalOutput> {
    cfg.require(Regime::Super, "survival")?;
    let params = cfg.params();
    let upper = OffspringLaw::upper(&params)?;
    let lower = OffspringLaw::lower(&params, cfg.schedule.gamma)?;
    let rho = survival_probability(&upper, DEFAULT_TOL)?;
    let rho_star = survival_probability(&lower, DEFAULT_TOL)?;
    let dual = upper.dual(rho)?;

    let sim = |law: OffspringLaw, tag: u64| {
        run_trials(cfg.trials, stream(cfg.master_seed, tag), move |_, seed| {
            Ok(simulate(&law, cfg.size_cap, cfg.generation_cap, seed))
        })
    };
    let up_runs = sim(upper, 0)?;
    let low_runs = sim(lower, 1)?;
    let dual_runs = sim(dual, 2)?;

    let upper_extinct_totals: Vec<u64> =
        up_runs.iter().filter(|t| !t.survived()).map(|t| t.total).collect();
    let dual_totals: Vec<u64> = dual_runs.iter().map(|t| t.total).collect();
    let a: Vec<f64> = upper_extinct_totals.iter().map(|&x| x as f64).collect();
    let b: Vec<f64> = dual_totals.iter().map(|&x| x as f64).collect();

    let rows = vec![
        row("upper", &upper, &up_runs, rho),
        row("lower", &lower, &low_runs, rho_star),
        row("dual", &dual, &dual_runs, 0.0),
    ];
    let expected_dual = dual_expected_total(&dual)?;
    let mut report = Report::new(cfg, rows);
    report.set("rho", rho);
    report.set("rho_star", rho_star);
    report.set("rho_star_relative_gap", (rho - rho_star) / rho);
    report.set("asymptotic_rho", 2.0 * cfg.eps / params.cconst() as f64);
    report.set("mu_dual", dual.mean());
    report.set("dual_expected_total", expected_dual);
    report.set("upper_extinct_mean_total", mean(&a));
    report.set("extinct_total_relative_error", (mean(&a) / expected_dual - 1.0).abs());
    report.set("ks_statistic", ks_statistic(&a, &b));
    report.set("ks_critical_1pct", ks_critical(0.01, a.len(), b.len()));
    Ok(SurvivalOutput { report, upper_extinct_totals, dual_totals })
}

pub fn survival_checks(out: &SurvivalOutput) -> Vec<Check> {
    let r = &out.report;
    let up = &r.trials[0];
    let err = r.get("extinct_total_relative_error");
    let (ks, crit) = (r.get("ks_statistic"), r.get("ks_critical_1pct"));
    vec![
        Check::new("upper_survival", up.z.abs() <= 3.0, format!("z = {:.3}", up.z)),
        Check::new("extinct_total", err <= 0.15, format!("relative error {err:.4}")),
        Check::new("dual_ks", ks <= crit, format!("KS {ks:.5} vs critical {crit:.5}")),
    ]
}
