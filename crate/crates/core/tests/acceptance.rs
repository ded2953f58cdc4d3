//! Acceptance criteria 1 to 12. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Pass criterion numbers as arguments to run a subset.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use hypergiant::combinatorics::{critical_p0_exact, Params, Universe};
use hypergiant::components::{canonical, census};
use hypergiant::exploration::{bfs_component, bfs_sweep, StopConfig};
use hypergiant::experiments::{
    run_giant, run_hypertree, run_smoothness, run_sprinkling, run_subcritical, run_survival_mc,
    ExperimentConfig, Regime,
};
use hypergiant::branching::{survival_probability, OffspringLaw, DEFAULT_TOL};
use hypergiant::sampling::{derive_trial_seed, make_oracle, sample_edge_set, trial_rng, OracleMode};
use hypergiant::smoothness::{degree_counts, f_sum};
use num_rational::Ratio;
use rand::Rng;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn pascal(rows: usize) -> Vec<Vec<u128>> {
    let mut t = vec![vec![0u128; rows + 1]; rows + 1];
    for m in 0..=rows {
        t[m][0] = 1;
        for r in 1..=m {
            t[m][r] = t[m - 1][r - 1] + t[m - 1][r];
        }
    }
    t
}

fn choose(n: u64, r: u64) -> f64 {
    (0..r).map(|i| (n - i) as f64 / (i + 1) as f64).product()
}

/// Survival probability by iterating the offspring generating function
/// `G(s) = (1 - p + p s^C)^N` from zero to its smallest fixed point.
fn rho_by_iteration(litter: u64, trials: u64, p: f64) -> f64 {
    let g = |s: f64| ((trials as f64) * (-p * (1.0 - s.powi(litter as i32))).ln_1p()).exp();
    let mut s = 0.0f64;
    for _ in 0..10_000_000 {
        let next = g(s);
        if (next - s).abs() < 1e-15 {
            s = next;
            break;
        }
        s = next;
    }
    1.0 - s
}

fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn threshold_identity() -> Verdict {
    let t = pascal(100);
    let mut checked = 0;
    for k in 2..=8usize {
        for j in 1..k {
            for n in k..=100usize {
                let params = Params::new(n as u32, k as u32, j as u32, 0.0).unwrap();
                let p0 = critical_p0_exact(&params).unwrap();
                let factor = Ratio::from_integer((t[k][j] - 1) * t[n][k - j]);
                if factor * p0 != Ratio::from_integer(1) {
                    return verdict(false, format!("identity fails at n={n} k={k} j={j}: p0 = {p0}"));
                }
                checked += 1;
            }
        }
    }
    verdict(true, format!("(C(k,j)-1) C(n,k-j) p0 = 1 exactly for {checked} (n,k,j)"))
}

fn oracle_equivalence() -> Verdict {
    let shapes = [(3u32, 1u32), (3, 2), (4, 2), (4, 3)];
    for i in 0..200u64 {
        let (k, j) = shapes[i as usize % 4];
        let mut rng = trial_rng(derive_trial_seed(2, i));
        let n = rng.random_range(k + 2..=30);
        let params = Params::from_eps(n, k, j, rng.random_range(-0.5..1.0)).unwrap();
        let u = Universe::from_params(&params).unwrap();
        let es = sample_edge_set(&params, derive_trial_seed(20, i)).unwrap();
        let c = census(&u, &es).unwrap();
        let mut oracle = make_oracle(&params, 0, OracleMode::Presampled, Some(&es)).unwrap();
        let labels = bfs_sweep(&u, &mut oracle).unwrap();
        if canonical(&labels) != c.canonical_labels() {
            return verdict(false, format!("partitions differ on instance {i} ({params:?})"));
        }
    }
    verdict(true, "union-find census equals BFS sweep on 200 instances".into())
}

fn graph_giant() -> Verdict {
    let cfg = ExperimentConfig::new(200_000, 2, 1, 0.1, Regime::Super, 20, 3).unwrap();
    let r = run_giant(&cfg).unwrap();
    let rho = rho_by_iteration(1, 200_000, cfg.p);
    let mean_l1 = r.trials.iter().map(|t| t.l1 as f64).sum::<f64>() / 20.0 / 200_000.0;
    let dev = (mean_l1 / rho - 1.0).abs();
    let max_ratio = r.trials.iter().map(|t| t.l2 as f64 / t.l1 as f64).fold(0.0, f64::max);
    let solver_ok = (rho - 0.176).abs() < 5e-4 && (r.get("rho_solver") - rho).abs() < 1e-9;
    verdict(
        solver_ok && dev <= 0.03 && max_ratio <= 0.01,
        format!(
            "rho = {rho:.5} (solver {:.5}), mean L1/n = {mean_l1:.5}, deviation {dev:.4} (tol 0.03), \
             max L2/L1 = {max_ratio:.4} (tol 0.01)",
            r.get("rho_solver")
        ),
    )
}

fn hypergraph_giant() -> Verdict {
    let cfg = ExperimentConfig::new(500, 3, 2, 0.2, Regime::Super, 30, 4).unwrap();
    let r = run_giant(&cfg).unwrap();
    let rho = rho_by_iteration(2, 500, cfg.p);
    let target = rho * choose(500, 2);
    let mean = |f: &dyn Fn(&hypergiant::experiments::GiantTrial) -> f64| r.trials.iter().map(f).sum::<f64>() / 30.0;
    let dev_l1 = (mean(&|t| t.l1 as f64) / target - 1.0).abs();
    let dev_x = (mean(&|t| t.x as f64) / target - 1.0).abs();
    let frac = r.trials.iter().filter(|t| t.l2 as f64 <= 0.05 * t.l1 as f64).count() as f64 / 30.0;
    let asymptotic = 2.0 * 0.2 / 2.0 * choose(500, 2);
    verdict(
        dev_l1 <= 0.1 && dev_x <= 0.1 && frac >= 0.9 && (r.get("rho_solver") - rho).abs() < 1e-9,
        format!(
            "rho C(n,j) = {target:.1}, L1 deviation {dev_l1:.4}, X deviation {dev_x:.4} (tol 0.10), \
             L2/L1 <= 0.05 in {frac:.3} of trials; asymptotic 2eps/C C(n,j) = {asymptotic:.0}"
        ),
    )
}

fn subcritical_bound() -> Verdict {
    let cfg = ExperimentConfig::new(500, 3, 2, 0.3, Regime::Sub, 50, 5).unwrap();
    let r = run_subcritical(&cfg).unwrap();
    let bound = 3.0 * 2.0 * 3.0 / (0.3 * 0.3) * 500f64.ln();
    let max = r.trials.iter().map(|t| t.max_size).max().unwrap();
    verdict(
        r.trials.iter().all(|t| (t.max_size as f64) <= bound),
        format!("max component {max} over 50 trials, bound {bound:.1}"),
    )
}

fn solver_vs_asymptotic() -> Verdict {
    let mut worst = 0f64;
    let mut detail = Vec::new();
    for eps in [0.01, 0.05, 0.1] {
        for (k, j) in [(2u32, 1u32), (3, 2), (4, 2)] {
            let params = Params::from_eps(10_000, k, j, eps).unwrap();
            let law = OffspringLaw::upper(&params).unwrap();
            let rho = survival_probability(&law, DEFAULT_TOL).unwrap();
            let oracle = rho_by_iteration(law.litter, law.trials, law.prob);
            if (rho / oracle - 1.0).abs() > 1e-6 {
                return verdict(false, format!("solver {rho} vs iteration {oracle} at eps={eps} k={k} j={j}"));
            }
            let gap = (rho * law.litter as f64 / (2.0 * eps) - 1.0).abs();
            worst = worst.max(gap / (2.0 * eps));
            detail.push(format!("{gap:.4}"));
        }
    }
    verdict(
        worst <= 1.0,
        format!("|rho C/(2eps) - 1| = [{}], worst as a fraction of 2eps: {worst:.3}", detail.join(", ")),
    )
}

fn branching_monte_carlo() -> Verdict {
    let cfg = ExperimentConfig::new(500, 3, 2, 0.1, Regime::Super, 100_000, 7).unwrap();
    let out = run_survival_mc(&cfg).unwrap();
    let up = &out.report.trials[0];
    let rho = rho_by_iteration(2, 500, cfg.p);
    let sigma = (rho * (1.0 - rho) / 100_000.0).sqrt();
    let z = (up.frequency - rho) / sigma;

    let q = (1.0 - rho).powi(2);
    let p_hat = q * cfg.p / (1.0 - cfg.p * (1.0 - q));
    let mu_hat = 2.0 * 500.0 * p_hat;
    let expected = 1.0 / (1.0 - mu_hat);
    let a: Vec<f64> = out.upper_extinct_totals.iter().map(|&x| x as f64).collect();
    let b: Vec<f64> = out.dual_totals.iter().map(|&x| x as f64).collect();
    let mean_total = a.iter().sum::<f64>() / a.len() as f64;
    let err = (mean_total / expected - 1.0).abs();
    let ks = ks_two_sample(&a, &b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let crit = (-(0.01f64 / 2.0).ln() / 2.0).sqrt() * ((na + nb) / (na * nb)).sqrt();
    verdict(
        z.abs() <= 3.0 && err <= 0.15 && ks <= crit,
        format!(
            "survival {:.5} vs rho {rho:.5} (z = {z:.2}); extinct mean total {mean_total:.3} vs 1/(1-mu) = {expected:.3} \
             (error {err:.4}); KS {ks:.5} vs critical {crit:.5}",
            up.frequency
        ),
    )
}

fn degree_sum_identity() -> Verdict {
    let t = pascal(8);
    let mut generations = 0;
    for (run, (n, k, j)) in (0..20u64).zip([(500u32, 3u32, 2u32), (60, 4, 3)].iter().cycle()) {
        let params = Params::from_eps(*n, *k, *j, 0.2).unwrap();
        let u = Universe::from_params(&params).unwrap();
        let mut oracle = make_oracle(&params, derive_trial_seed(8, run), OracleMode::Lazy, None).unwrap();
        let stop = StopConfig::standard(&params, 0.04, 0.16);
        let root = trial_rng(run).random_range(0..u.num_jsets);
        let s = bfs_component(&u, root, &mut oracle, &stop).unwrap();
        for g in &s.generations {
            generations += 1;
            for ell in 0..*j {
                // double counting by explicit enumeration of ℓ-subsets
                let mut counts: HashMap<Vec<u32>, u64> = HashMap::new();
                for &r in g {
                    let v = u.unrank(r, *j);
                    for mask in 0u32..(1 << j) {
                        if mask.count_ones() == ell {
                            let sub: Vec<u32> = (0..*j).filter(|b| mask >> b & 1 == 1).map(|b| v[b as usize]).collect();
                            *counts.entry(sub).or_default() += 1;
                        }
                    }
                }
                let total: u64 = counts.values().sum();
                let d = degree_counts(&u, g, ell).unwrap();
                let expected = t[*j as usize][ell as usize] as u64 * g.len() as u64;
                let same = counts.iter().all(|(l, &c)| d[u.rank(l) as usize] == c) && d.iter().sum::<u64>() == total;
                if total != expected || !same {
                    return verdict(false, format!("run {run}, ell {ell}: sum {total} vs {expected}"));
                }
            }
        }
    }
    verdict(true, format!("exact at all {generations} generations of 20 runs, every ell < j"))
}

fn smoothness_property() -> Verdict {
    let cfg = ExperimentConfig::new(3000, 3, 2, 0.15, Regime::Super, 20, 9).unwrap();
    let out = run_smoothness(&cfg).unwrap();
    let rows: Vec<_> = out.report.trials.iter().filter(|t| t.ell == 1).collect();
    let frac = rows.iter().filter(|t| t.spread_at_stop <= 0.5).count() as f64 / rows.len() as f64;
    let mut at_i1: Vec<f64> = rows.iter().filter_map(|t| t.spread_at_i_ell).collect();
    let mut at_plus2: Vec<f64> = rows.iter().filter_map(|t| t.spread_at_plus2).collect();
    let (m1, m2) = (median(&mut at_i1), median(&mut at_plus2));
    let mut at_stop: Vec<f64> = rows.iter().map(|t| t.spread_at_stop).collect();
    verdict(
        rows.len() == 20 && frac >= 0.9 && m2 <= m1,
        format!(
            "{} qualifying runs of {} attempts; spread at stop <= 0.5 in {frac:.2} (median {:.3}); \
             i_1 reached in {} runs, i_1+ + 2 in {}; median spread at i_1 {m1:.3}, at i_1+ + 2 {m2:.3}",
            rows.len(),
            out.attempts,
            median(&mut at_stop),
            at_i1.len(),
            at_plus2.len()
        ),
    )
}

fn f_identity() -> Verdict {
    let t = pascal(12);
    let mut checked = 0;
    for k in 3..=12u32 {
        for j in 2..k {
            for ell in 1..j {
                let want = t[k as usize][ell as usize] as i128 - t[j as usize][ell as usize] as i128;
                if f_sum(k, j, ell).unwrap() != Ratio::from_integer(want) {
                    return verdict(false, format!("f-sum differs at k={k} j={j} ell={ell}"));
                }
                checked += 1;
            }
        }
    }
    verdict(true, format!("sum equals C(k,l) - C(j,l) exactly for {checked} triples"))
}

fn sprinkling() -> Verdict {
    let mut cfg = ExperimentConfig::new(500, 3, 2, 0.25, Regime::Super, 30, 11).unwrap();
    cfg.sprinkle_p2 = Some(0.1 * cfg.eps * cfg.p0);
    let r = run_sprinkling(&cfg).unwrap();
    let p = cfg.p;
    let worst = r.trials.iter().map(|t| ((t.p1 + t.p2 - t.p1 * t.p2) - p).abs() / p).fold(0.0, f64::max);
    let frac = r.trials.iter().filter(|t| t.merged).count() as f64 / 30.0;
    let several = r.trials.iter().filter(|t| t.large_before >= 2).count();
    verdict(
        worst <= 1e-12 && frac >= 0.9,
        format!(
            "p2 = {:.3e}, split residual {worst:.1e}; merged in {frac:.2} of trials \
             ({several} trials had two or more large components before sprinkling)",
            cfg.sprinkle_p2.unwrap()
        ),
    )
}

fn hypertree() -> Verdict {
    let cfg = ExperimentConfig::new(500, 3, 2, 0.2, Regime::Super, 500, 12).unwrap();
    let r = run_hypertree(&cfg).unwrap();
    let identity = r.trials.iter().all(|t| t.size == 2 * t.edges + 1);
    let gamma = cfg.schedule.gamma;
    let rho_star = rho_by_iteration(2, ((1.0 - gamma) * 500.0).floor() as u64, cfg.p);
    let rho = rho_by_iteration(2, 500, cfg.p);
    let frac = r.trials.iter().filter(|t| t.reached).count() as f64 / 500.0;
    let sigma = (rho_star * (1.0 - rho_star) / 500.0).sqrt();
    let z = (frac - rho_star) / sigma;
    verdict(
        identity && z.abs() <= 3.0,
        format!(
            "tree identity {}; fraction reaching rho1 n^j {frac:.3} vs rho* {rho_star:.4} (gamma {gamma:.4}), \
             z = {z:.2}; upper rho {rho:.4}",
            if identity { "holds" } else { "fails" }
        ),
    )
}

type Criterion = (u32, Duration, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 12] = [
        (1, Duration::from_secs(1), threshold_identity),
        (2, Duration::from_secs(30), oracle_equivalence),
        (3, Duration::from_secs(120), graph_giant),
        (4, Duration::from_secs(300), hypergraph_giant),
        (5, Duration::from_secs(120), subcritical_bound),
        (6, Duration::from_secs(1), solver_vs_asymptotic),
        (7, Duration::from_secs(180), branching_monte_carlo),
        (8, Duration::from_secs(60), degree_sum_identity),
        (9, Duration::from_secs(600), smoothness_property),
        (10, Duration::from_secs(1), f_identity),
        (11, Duration::from_secs(300), sprinkling),
        (12, Duration::from_secs(300), hypertree),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = Vec::new();
    for (id, budget, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| verdict(false, "panicked".into()));
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let passed = v.passed && in_time;
        println!(
            "{} criterion {id}: {} [{:.2}s, budget {}s{}]",
            if passed { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
        if !passed {
            failures.push(id);
        }
    }
    if !failures.is_empty() {
        println!("failed criteria: {failures:?}");
        std::process::exit(1);
    }
}
