use serde::{Deserialize, Serialize};

use super::{fraction, run_trials, Check, ExperimentConfig, Regime, Report};
use crate::branching::{survival_probability, OffspringLaw, DEFAULT_TOL};
use crate::combinatorics::{Params, Universe};
use crate::components::{census, check_census_capacity, count_in_large, DEFAULT_MEMORY_BOUND, largest_two, ComponentCensus};
use crate::sampling::{derive_trial_seed, sample_edge_set};
use crate::smoothness::degree_counts;
use crate::stats::{mean, std_dev};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GiantTrial {
    pub trial: usize,
    pub seed: u64,
    pub edges: u64,
    pub l1: u64,
    pub l2: u64,
    pub x: u64,
    pub l1_fraction: f64,
    pub x_fraction: f64,
    pub l2_over_l1: f64,
}

fn census_universe(params: &Params) -> Result<Universe> {
    let u = Universe::from_params(params)?;
    check_census_capacity(&u, DEFAULT_MEMORY_BOUND)?;
    Ok(u)
}

/// Largest components of `H^k(n, p)` against the survival probability.
pub fn run_giant(cfg: &ExperimentConfig) -> Result<Report<GiantTrial>> {
    cfg.require(Regime::Super, "giant")?;
    cfg.warn_hierarchy();
    let params = cfg.params();
    let u = census_universe(&params)?;
    let total = u.num_jsets as f64;
    let threshold = cfg.large_threshold();
    let rows = run_trials(cfg.trials, cfg.master_seed, |trial, seed| {
        let es = sample_edge_set(&params, seed)?;
        let c = census(&u, &es)?;
        let (l1, l2) = largest_two(&c);
        let x = count_in_large(&c, threshold);
        Ok(GiantTrial {
            trial,
            seed,
            edges: es.len() as u64,
            l1,
            l2,
            x,
            l1_fraction: l1 as f64 / total,
            x_fraction: x as f64 / total,
            l2_over_l1: l2 as f64 / l1 as f64,
        })
    })?;
    let rho = survival_probability(&OffspringLaw::upper(&params)?, DEFAULT_TOL)?;
    let mut r = Report::new(cfg, rows);
    let l1: Vec<f64> = r.trials.iter().map(|t| t.l1 as f64).collect();
    let x: Vec<f64> = r.trials.iter().map(|t| t.x as f64).collect();
    let max_ratio = r.trials.iter().map(|t| t.l2_over_l1).fold(0.0, f64::max);
    r.set("num_jsets", total);
    r.set("large_threshold", threshold);
    r.set("rho_solver", rho);
    r.set("solver_target", rho * total);
    r.set("asymptotic_target", 2.0 * cfg.eps / params.cconst() as f64 * total);
    r.set("mean_l1", mean(&l1));
    r.set("sd_l1", std_dev(&l1));
    r.set("mean_x", mean(&x));
    r.set("sd_x", std_dev(&x));
    r.set("mean_l1_over_solver", mean(&l1) / (rho * total));
    r.set("mean_x_over_solver", mean(&x) / (rho * total));
    r.set("max_l2_over_l1", max_ratio);
    r.set("frac_l2_over_l1_le_0.05", fraction(r.trials.iter().map(|t| t.l2_over_l1 <= 0.05)));
    Ok(r)
}

/// Mean `L1` within 3% (graphs) or 10% (hypergraphs) of the solver value and
/// `L2 / L1 <= 0.05` in at least 90% of trials.
pub fn giant_checks(r: &Report<GiantTrial>) -> Vec<Check> {
    let graph = r.config.k == 2 && r.config.j == 1;
    let tol = if graph { 0.03 } else { 0.10 };
    let dev = (r.get("mean_l1_over_solver") - 1.0).abs();
    let mut checks =
        vec![Check::new("mean_l1", dev <= tol, format!("|mean L1 / (rho C(n,j)) - 1| = {dev:.4} (tol {tol})"))];
    if graph {
        let max = r.get("max_l2_over_l1");
        checks.push(Check::new("l2_over_l1", max <= 0.01, format!("max L2/L1 = {max:.4} (tol 0.01)")));
    } else {
        let dev_x = (r.get("mean_x_over_solver") - 1.0).abs();
        let frac = r.get("frac_l2_over_l1_le_0.05");
        checks.push(Check::new("mean_x", dev_x <= tol, format!("|mean X / (rho C(n,j)) - 1| = {dev_x:.4} (tol {tol})")));
        checks.push(Check::new("l2_over_l1", frac >= 0.9, format!("fraction with L2/L1 <= 0.05: {frac}")));
    }
    checks
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubcriticalTrial {
    pub trial: usize,
    pub seed: u64,
    pub edges: u64,
    pub max_size: u64,
    pub bound: f64,
    pub within: bool,
}

/// `3 C k eps^-2 ln n`.
pub fn subcritical_bound(params: &Params, eps: f64) -> f64 {
    3.0 * params.cconst() as f64 * params.k as f64 / (eps * eps) * (params.n as f64).ln()
}

pub fn run_subcritical(cfg: &ExperimentConfig) -> Result<Report<SubcriticalTrial>> {
    cfg.require(Regime::Sub, "subcritical")?;
    let params = cfg.params();
    let u = census_universe(&params)?;
    let bound = subcritical_bound(&params, cfg.eps);
    let rows = run_trials(cfg.trials, cfg.master_seed, |trial, seed| {
        let es = sample_edge_set(&params, seed)?;
        let max_size = census(&u, &es)?.max_size();
        Ok(SubcriticalTrial {
            trial,
            seed,
            edges: es.len() as u64,
            max_size,
            bound,
            within: max_size as f64 <= bound,
        })
    })?;
    let mut r = Report::new(cfg, rows);
    let sizes: Vec<f64> = r.trials.iter().map(|t| t.max_size as f64).collect();
    r.set("bound", bound);
    r.set("max_size", sizes.iter().copied().fold(0.0, f64::max));
    r.set("mean_max_size", mean(&sizes));
    r.set("frac_within", fraction(r.trials.iter().map(|t| t.within)));
    Ok(r)
}

pub fn subcritical_checks(r: &Report<SubcriticalTrial>) -> Vec<Check> {
    let frac = r.get("frac_within");
    vec![Check::new("bound", frac == 1.0, format!("max size {} vs bound {}", r.get("max_size"), r.get("bound")))]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SprinkleTrial {
    pub trial: usize,
    pub seed: u64,
    pub p1: f64,
    pub p2: f64,
    /// `|p1 + p2 - p1 p2 - p| / p`.
    pub split_residual: f64,
    pub large_before: u64,
    pub large_after: u64,
    /// All large components of the first round lie in one component after the second.
    pub merged: bool,
    pub l1_after: u64,
    pub l2_after: u64,
}

/// `(p1, p2)` with `p1 + p2 - p1 p2 = p`.
pub fn sprinkle_split(cfg: &ExperimentConfig) -> Result<(f64, f64)> {
    let n = cfg.n as f64;
    let rho1 = cfg.schedule.rho1;
    let p2 = cfg
        .sprinkle_p2
        .unwrap_or_else(|| n.ln().powi(2) / (rho1 * rho1 * n.powi((cfg.k - cfg.j + 1) as i32)));
    if !(p2 >= 0.0 && p2 < cfg.p) {
        return Err(Error::Config(format!(
            "sprinkle probability p2 = {p2} is not below p = {}; n is too small for the split",
            cfg.p
        )));
    }
    Ok(((cfg.p - p2) / (1.0 - p2), p2))
}

fn large_representatives(c: &ComponentCensus, threshold: f64) -> Vec<u64> {
    let count = c.components.iter().take_while(|x| x.size as f64 >= threshold).count();
    let mut reps = vec![u64::MAX; count];
    let mut found = 0;
    for (r, &l) in c.labels.iter().enumerate() {
        if (l as usize) < count && reps[l as usize] == u64::MAX {
            reps[l as usize] = r as u64;
            found += 1;
            if found == count {
                break;
            }
        }
    }
    reps
}

/// Two-round exposure: `H1` at `p1`, then the union with an independent `H2` at `p2`.
pub fn run_sprinkling(cfg: &ExperimentConfig) -> Result<Report<SprinkleTrial>> {
    cfg.require(Regime::Super, "sprinkling")?;
    let (p1, p2) = sprinkle_split(cfg)?;
    let params = cfg.params();
    let first = Params { p: p1, ..params };
    let second = Params { p: p2, ..params };
    let u = census_universe(&params)?;
    let threshold = cfg.large_threshold();
    let rows = run_trials(cfg.trials, cfg.master_seed, |trial, seed| {
        let h1 = sample_edge_set(&first, derive_trial_seed(seed, 0))?;
        let h2 = sample_edge_set(&second, derive_trial_seed(seed, 1))?;
        let c1 = census(&u, &h1)?;
        let reps = large_representatives(&c1, threshold);
        let c2 = census(&u, &h1.union(&h2)?)?;
        let merged = reps.windows(2).all(|w| c2.labels[w[0] as usize] == c2.labels[w[1] as usize]);
        let (l1_after, l2_after) = largest_two(&c2);
        Ok(SprinkleTrial {
            trial,
            seed,
            p1,
            p2,
            split_residual: ((p1 + p2 - p1 * p2) - cfg.p).abs() / cfg.p,
            large_before: reps.len() as u64,
            large_after: large_representatives(&c2, threshold).len() as u64,
            merged,
            l1_after,
            l2_after,
        })
    })?;
    let mut r = Report::new(cfg, rows);
    r.set("p1", p1);
    r.set("p2", p2);
    r.set("split_residual", (p1 + p2 - p1 * p2 - cfg.p).abs() / cfg.p);
    r.set("frac_merged", fraction(r.trials.iter().map(|t| t.merged)));
    r.set("mean_large_before", mean(&r.trials.iter().map(|t| t.large_before as f64).collect::<Vec<_>>()));
    r.set("frac_several_large_before", fraction(r.trials.iter().map(|t| t.large_before >= 2)));
    r.set("mean_large_after", mean(&r.trials.iter().map(|t| t.large_after as f64).collect::<Vec<_>>()));
    r.set(
        "mean_l2_over_l1_after",
        mean(&r.trials.iter().map(|t| t.l2_after as f64 / t.l1_after as f64).collect::<Vec<_>>()),
    );
    Ok(r)
}

pub fn sprinkle_checks(r: &Report<SprinkleTrial>) -> Vec<Check> {
    let res = r.get("split_residual");
    let frac = r.get("frac_merged");
    vec![
        Check::new("split", res <= 1e-12, format!("relative residual {res:e}")),
        Check::new("merged", frac >= 0.9, format!("fraction merged {frac}")),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowRow {
    pub trial: usize,
    pub seed: u64,
    pub ell: u32,
    pub component_size: u64,
    pub large: bool,
    /// Fewest component j-sets containing one ℓ-set.
    pub min_count: u64,
    pub bound: f64,
    pub within: bool,
    /// `Σ_L count_L == C(j, ℓ) |component|`.
    pub sum_identity: bool,
}

/// `rho1 n^(j-ℓ) (2 C(k,j)^2)^(-ℓ)`.
pub fn shadow_bound(cfg: &ExperimentConfig, ell: u32) -> f64 {
    let ckj = (Params::cconst(&cfg.params()) + 1) as f64;
    cfg.schedule.rho1 * (cfg.n as f64).powi((cfg.j - ell) as i32) * (2.0 * ckj * ckj).powi(-(ell as i32))
}

/// ℓ-set shadows of the largest component.
pub fn run_shadow(cfg: &ExperimentConfig) -> Result<Report<ShadowRow>> {
    cfg.require(Regime::Super, "shadow")?;
    let params = cfg.params();
    let u = census_universe(&params)?;
    let threshold = cfg.large_threshold();
    let per_trial = run_trials(cfg.trials, cfg.master_seed, |trial, seed| {
        let c = census(&u, &sample_edge_set(&params, seed)?)?;
        let members = c.members(0);
        let size = members.len() as u64;
        (0..cfg.j)
            .map(|ell| {
                let counts = degree_counts(&u, &members, ell);
                let sum_identity = counts.is_ok();
                let min_count = counts?.iter().copied().min().unwrap_or(0);
                let bound = shadow_bound(cfg, ell);
                Ok(ShadowRow {
                    trial,
                    seed,
                    ell,
                    component_size: size,
                    large: size as f64 >= threshold,
                    min_count,
                    bound,
                    within: min_count as f64 >= bound,
                    sum_identity,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let rows: Vec<ShadowRow> = per_trial.into_iter().flatten().collect();
    let mut r = Report::new(cfg, rows);
    for ell in 0..cfg.j {
        let sel = || r.trials.iter().filter(move |t| t.ell == ell);
        let frac = fraction(sel().map(|t| t.within));
        let min = sel().map(|t| t.min_count as f64).fold(f64::INFINITY, f64::min);
        r.set(&format!("ell{ell}_frac_within"), frac);
        r.set(&format!("ell{ell}_min_count"), min);
        r.set(&format!("ell{ell}_bound"), shadow_bound(cfg, ell));
    }
    r.set("frac_large", fraction(r.trials.iter().filter(|t| t.ell == 0).map(|t| t.large)));
    Ok(r)
}

pub fn shadow_checks(r: &Report<ShadowRow>) -> Vec<Check> {
    (0..r.config.j)
        .map(|ell| {
            let frac = r.get(&format!("ell{ell}_frac_within"));
            Check::new(&format!("shadow_ell{ell}"), frac >= 0.9, format!("fraction above bound {frac}"))
        })
        .collect()
}
