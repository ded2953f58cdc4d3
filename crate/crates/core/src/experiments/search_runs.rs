use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{fraction, run_range, Check, ExperimentConfig, Regime, Report};
use crate::branching::{survival_probability, OffspringLaw, DEFAULT_TOL};
use crate::combinatorics::Universe;
use crate::exploration::{bfs_component, bfs_tree, ExplorationState, StopConfig, StopReason};
use crate::sampling::{derive_trial_seed, make_oracle, trial_rng, OracleMode, QueryLog};
use crate::smoothness::{degree_counts, degree_profile, smoothing_schedule, DegreeProfile, SampleMode};
use crate::stats::{binomial_sigma, median};
use crate::Result;

/// Uniform root j-set and an independent lazy instance for one trial seed.
fn explore_trial(
    cfg: &ExperimentConfig,
    u: &Universe,
    seed: u64,
    stop: &StopConfig,
    tree: bool,
) -> Result<ExplorationState> {
    let root = trial_rng(seed).random_range(0..u.num_jsets);
    let mut oracle = make_oracle(&cfg.params(), derive_trial_seed(seed, 1), OracleMode::Lazy, None)?
        .with_log(QueryLog::EdgesOnly);
    if tree {
        bfs_tree(u, root, &mut oracle, stop)
    } else {
        bfs_component(u, root, &mut oracle, stop)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothRow {
    /// Attempt index; attempts stopping with an exhausted component are not reported.
    pub trial: usize,
    pub seed: u64,
    pub ell: u32,
    pub stop_reason: StopReason,
    pub i_stop: usize,
    pub component_size: u64,
    pub final_boundary: u64,
    pub i_ell: Option<usize>,
    pub s_ell: u64,
    pub i_ell_plus: Option<usize>,
    /// `i_stop >= i_ell_plus`.
    pub reached_plus: bool,
    pub spread_at_i_ell: Option<f64>,
    pub spread_at_plus: Option<f64>,
    pub spread_at_plus2: Option<f64>,
    pub spread_at_stop: f64,
    /// Degree-sum identity held at every generation for every `ℓ < j`.
    pub identity_ok: bool,
}

#[derive(Clone, Debug)]
pub struct SmoothnessOutput {
    pub report: Report<SmoothRow>,
    /// Degree profiles at `i_ℓ`, `i_ℓ⁺`, `i_ℓ⁺ + 2` and `i_stop` of the reported runs.
    pub profiles: Vec<DegreeProfile>,
    pub attempts: usize,
    pub excluded_small: usize,
}

struct Attempt {
    rows: Vec<SmoothRow>,
    profiles: Vec<DegreeProfile>,
}

fn smooth_attempt(cfg: &ExperimentConfig, u: &Universe, stop: &StopConfig, trial: usize, seed: u64) -> Result<Option<Attempt>> {
    let state = explore_trial(cfg, u, seed, stop, false)?;
    if state.stop_reason == StopReason::Exhausted {
        return Ok(None);
    }
    let identity_ok = state
        .generations
        .iter()
        .all(|g| (0..u.j).all(|ell| degree_counts(u, g, ell).is_ok()));
    let sizes = state.generation_sizes();
    let schedule = smoothing_schedule(cfg.n, cfg.k, cfg.j, cfg.eps, cfg.schedule.lambda, cfg.schedule.delta, &sizes)?;
    let i_stop = state.i_stop();
    let mut rows = Vec::new();
    let mut profiles = Vec::new();
    for e in &schedule.entries {
        let mut spread_at = |g: Option<usize>| -> Result<Option<f64>> {
            match g {
                Some(g) if g <= i_stop => {
                    let p = degree_profile(&state, g, e.ell, SampleMode::All)?;
                    let s = p.spread;
                    profiles.push(DegreeProfile { degrees: Vec::new(), ..p });
                    Ok(Some(s))
                }
                _ => Ok(None),
            }
        };
        let spread_at_i_ell = spread_at(e.i_ell)?;
        let spread_at_plus = spread_at(e.i_ell_plus)?;
        let spread_at_plus2 = spread_at(e.i_ell_plus.map(|i| i + 2))?;
        let spread_at_stop = spread_at(Some(i_stop))?.expect("last generation exists");
        rows.push(SmoothRow {
            trial,
            seed,
            ell: e.ell,
            stop_reason: state.stop_reason,
            i_stop,
            component_size: state.size(),
            final_boundary: *sizes.last().unwrap(),
            i_ell: e.i_ell,
            s_ell: e.s_ell,
            i_ell_plus: e.i_ell_plus,
            reached_plus: e.i_ell_plus.is_some_and(|i| i_stop >= i),
            spread_at_i_ell,
            spread_at_plus,
            spread_at_plus2,
            spread_at_stop,
            identity_ok,
        });
    }
    Ok(Some(Attempt { rows, profiles }))
}

/// Boundary smoothness of explorations that reach the size or boundary
/// threshold. Attempts are drawn in index order until `trials` of them
/// qualify, up to `50 trials` attempts.
pub fn run_smoothness(cfg: &ExperimentConfig) -> Result<SmoothnessOutput> {
    cfg.require(Regime::Super, "smoothness")?;
    if cfg.j < 2 {
        return Err(crate::Error::Config("smoothness needs j >= 2".into()));
    }
    cfg.warn_hierarchy();
    let u = Universe::from_params(&cfg.params())?;
    let stop = StopConfig::standard(&cfg.params(), cfg.schedule.rho1, cfg.alpha());
    let max_attempts = 50 * cfg.trials;
    let mut kept: Vec<Attempt> = Vec::new();
    let mut attempts = 0;
    let mut excluded_small = 0;
    while kept.len() < cfg.trials && attempts < max_attempts {
        let batch = cfg.trials.min(max_attempts - attempts);
        let results = run_range(attempts..attempts + batch, cfg.master_seed, |i, seed| {
            smooth_attempt(cfg, &u, &stop, i, seed)
        })?;
        for r in results {
            attempts += 1;
            match r {
                Some(a) => kept.push(a),
                None => excluded_small += 1,
            }
            if kept.len() == cfg.trials {
                break;
            }
        }
    }
    if kept.len() < cfg.trials {
        log::warn!("only {} of {} runs reached the size or boundary threshold", kept.len(), cfg.trials);
    }
    let profiles = kept.iter().flat_map(|a| a.profiles.iter().cloned()).collect();
    let rows: Vec<SmoothRow> = kept.into_iter().flat_map(|a| a.rows).collect();
    let mut report = Report::new(cfg, rows);
    report.set("attempts", attempts as f64);
    report.set("excluded_small", excluded_small as f64);
    report.set("qualifying", report.trials.iter().filter(|t| t.ell == 1).count() as f64);
    report.set("identity_ok", fraction(report.trials.iter().map(|t| t.identity_ok)));
    for ell in 1..cfg.j {
        let sel: Vec<&SmoothRow> = report.trials.iter().filter(|t| t.ell == ell).collect();
        let med = |f: &dyn Fn(&SmoothRow) -> Option<f64>| {
            let v: Vec<f64> = sel.iter().filter_map(|t| f(t)).collect();
            median(&v)
        };
        let entries = [
            ("frac_spread_stop_le_0.5", fraction(sel.iter().map(|t| t.spread_at_stop <= 0.5))),
            ("frac_i_ell_reached", fraction(sel.iter().map(|t| t.i_ell.is_some()))),
            ("frac_reached_plus", fraction(sel.iter().map(|t| t.reached_plus))),
            ("median_spread_stop", med(&|t| Some(t.spread_at_stop))),
            ("median_spread_i_ell", med(&|t| t.spread_at_i_ell)),
            ("median_spread_plus2", med(&|t| t.spread_at_plus2)),
            ("median_i_stop", med(&|t| Some(t.i_stop as f64))),
            ("s_ell", sel.first().map_or(f64::NAN, |t| t.s_ell as f64)),
        ];
        for (k, v) in entries {
            report.set(&format!("ell{ell}_{k}"), v);
        }
    }
    Ok(SmoothnessOutput { report, profiles, attempts, excluded_small })
}

pub fn smoothness_checks(out: &SmoothnessOutput) -> Vec<Check> {
    let r = &out.report;
    let frac = r.get("ell1_frac_spread_stop_le_0.5");
    let (a, b) = (r.get("ell1_median_spread_plus2"), r.get("ell1_median_spread_i_ell"));
    vec![
        Check::new("spread_at_stop", frac >= 0.9, format!("fraction with spread <= 0.5: {frac}")),
        Check::new("spread_trend", a <= b, format!("median spread at i1+ + 2 = {a}, at i1 = {b}")),
        Check::new("identity", r.get("identity_ok") == 1.0, "degree-sum identity".into()),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypertreeTrial {
    pub trial: usize,
    pub seed: u64,
    pub root: u64,
    pub size: u64,
    pub edges: u64,
    /// `size - (C e + 1)`.
    pub tree_excess: i64,
    pub reached: bool,
    pub stop_reason: StopReason,
}

/// Tree searches from random roots on independent instances: how often they
/// grow to `rho1 n^j` j-sets.
pub fn run_hypertree(cfg: &ExperimentConfig) -> Result<Report<HypertreeTrial>> {
    cfg.require(Regime::Super, "hypertree")?;
    let params = cfg.params();
    let u = Universe::from_params(&params)?;
    let stop = StopConfig::secondary(&params, cfg.schedule.rho1, cfg.alpha());
    let rows = run_range(0..cfg.trials, cfg.master_seed, |trial, seed| {
        let s = explore_trial(cfg, &u, seed, &stop, true)?;
        Ok(HypertreeTrial {
            trial,
            seed,
            root: s.root,
            size: s.size(),
            edges: s.edges.len() as u64,
            tree_excess: s.tree_excess(),
            reached: s.stop_reason == StopReason::Size,
            stop_reason: s.stop_reason,
        })
    })?;
    let rho = survival_probability(&OffspringLaw::upper(&params)?, DEFAULT_TOL)?;
    let rho_star = survival_probability(&OffspringLaw::lower(&params, cfg.schedule.gamma)?, DEFAULT_TOL)?;
    let mut r = Report::new(cfg, rows);
    let frac = fraction(r.trials.iter().map(|t| t.reached));
    r.set("fraction_reached", frac);
    r.set("rho_star", rho_star);
    r.set("rho", rho);
    r.set("asymptotic_rho", 2.0 * cfg.eps / params.cconst() as f64);
    r.set("sigma", binomial_sigma(rho_star, cfg.trials as u64));
    r.set("z_vs_rho_star", (frac - rho_star) / binomial_sigma(rho_star, cfg.trials as u64));
    r.set("tree_identity", fraction(r.trials.iter().map(|t| t.tree_excess == 0)));
    Ok(r)
}

pub fn hypertree_checks(r: &Report<HypertreeTrial>) -> Vec<Check> {
    let z = r.get("z_vs_rho_star");
    vec![
        Check::new("tree_identity", r.get("tree_identity") == 1.0, "|j-sets| = C e + 1".into()),
        Check::new("fraction", z.abs() <= 3.0, format!("z = {z:.3} against rho*")),
    ]
}
