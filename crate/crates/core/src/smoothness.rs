//! Boundary degree profiles: how evenly a generation of j-sets covers the
//! ℓ-sets, the schedule over which it smooths out, and the split of new
//! arrivals into jumps and neighbourhood branchings.

use std::io::Write;

use num_rational::Ratio;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, Universe};
use crate::exploration::ExplorationState;
use crate::sampling::trial_rng;
use crate::stats::quantile;
use crate::{Error, Result};

/// `θ_ℓ = (C(k-ℓ, j-ℓ) - 1) / (C(k, j) - 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub numerator: u64,
    pub denominator: u64,
    pub value: f64,
}

pub fn theta(k: u32, j: u32, ell: u32) -> Result<Theta> {
    if !(1 <= ell && ell < j && j < k) {
        return Err(Error::Validation(format!("need 1 <= ell < j < k, got k={k} j={j} ell={ell}")));
    }
    let num = binomial((k - ell) as u64, (j - ell) as u64)? as u64 - 1;
    let den = binomial(k as u64, j as u64)? as u64 - 1;
    let r = Ratio::new(num, den);
    Ok(Theta { numerator: *r.numer(), denominator: *r.denom(), value: num as f64 / den as f64 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub ell: u32,
    pub theta: f64,
    /// Smoothing time `s_ℓ`.
    pub s_ell: u64,
    /// First generation with `|∂C(i)| >= n^(ℓ+δ)`; absent if never reached.
    pub i_ell: Option<usize>,
    pub i_ell_plus: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSchedule {
    pub entries: Vec<ScheduleEntry>,
}

impl SmoothingSchedule {
    pub fn entry(&self, ell: u32) -> Option<&ScheduleEntry> {
        self.entries.iter().find(|e| e.ell == ell)
    }
}

/// `s_ℓ = ceil((j-ℓ) ln n / -ln((1 + 2λ + 2ε) θ_ℓ))`.
pub fn smoothing_time(n: u32, k: u32, j: u32, ell: u32, eps: f64, lambda: f64) -> Result<u64> {
    let th = theta(k, j, ell)?;
    let rate = (1.0 + 2.0 * lambda + 2.0 * eps) * th.value;
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::Domain(format!(
            "contraction rate (1 + 2λ + 2ε) θ_{ell} = {rate} is not in (0, 1)"
        )));
    }
    Ok(((j - ell) as f64 * (n as f64).ln() / -rate.ln()).ceil() as u64)
}

/// Schedule for `ℓ = 1..j-1` read off a generation-size trajectory.
pub fn smoothing_schedule(
    n: u32,
    k: u32,
    j: u32,
    eps: f64,
    lambda: f64,
    delta: f64,
    sizes: &[u64],
) -> Result<SmoothingSchedule> {
    let entries = (1..j)
        .map(|ell| {
            let s_ell = smoothing_time(n, k, j, ell, eps, lambda)?;
            let bar = (n as f64).powf(ell as f64 + delta);
            let i_ell = sizes.iter().position(|&x| x as f64 >= bar);
            Ok(ScheduleEntry {
                ell,
                theta: theta(k, j, ell)?.value,
                s_ell,
                i_ell,
                i_ell_plus: i_ell.map(|i| i + s_ell as usize),
            })
        })
        .collect::<Result<_>>()?;
    Ok(SmoothingSchedule { entries })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SampleMode {
    All,
    /// `m` ℓ-sets drawn without replacement with the given seed.
    Sample { m: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeProfile {
    pub ell: u32,
    pub generation: usize,
    /// `|∂C(i)|`.
    pub boundary: u64,
    /// ℓ-sets summarized.
    pub count: u64,
    pub min: u64,
    pub max: u64,
    pub mean: f64,
    /// `|∂C(i)| C(n, j-ℓ) / C(n, j)`.
    pub target: f64,
    /// `max |d_L - target| / target` over the summarized ℓ-sets.
    pub spread: f64,
    /// 5th, 25th, 50th, 75th and 95th percentiles.
    pub percentiles: [f64; 5],
    #[serde(skip)]
    pub degrees: Vec<u64>,
}

/// Degree of every ℓ-set in a collection of j-sets, indexed by ℓ-set rank.
pub fn degree_counts(universe: &Universe, jsets: &[u64], ell: u32) -> Result<Vec<u64>> {
    if ell >= universe.j {
        return Err(Error::Validation(format!("ell = {ell} must be below j = {}", universe.j)));
    }
    let mut counts = vec![0u64; universe.num_sets(ell) as usize];
    let mut vs = Vec::new();
    let mut subs = Vec::new();
    for &r in jsets {
        universe.unrank_into(r, universe.j, &mut vs);
        universe.subset_ranks(&vs, ell, &mut subs);
        for &s in &subs {
            counts[s as usize] += 1;
        }
    }
    let expected = universe.binom(universe.j, ell) * jsets.len() as u64;
    let total: u64 = counts.iter().sum();
    if total != expected {
        return Err(Error::Instrumentation(format!(
            "degree sum {total} differs from C(j,ℓ) |∂C| = {expected}"
        )));
    }
    Ok(counts)
}

/// Degree profile of one collection of j-sets at level `ell`.
pub fn profile_of(
    universe: &Universe,
    jsets: &[u64],
    generation: usize,
    ell: u32,
    mode: SampleMode,
) -> Result<DegreeProfile> {
    let all = degree_counts(universe, jsets, ell)?;
    let degrees = match mode {
        SampleMode::All => all,
        SampleMode::Sample { m, seed } => {
            let total = all.len() as u64;
            let m = if m > total {
                log::warn!("sample of {m} ℓ-sets clipped to C(n,ℓ) = {total}");
                total
            } else {
                m
            };
            let mut idx = sample(&mut trial_rng(seed), total as usize, m as usize).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| all[i]).collect()
        }
    };
    let boundary = jsets.len() as u64;
    let target = boundary as f64 * universe.num_sets(universe.j - ell) as f64 / universe.num_jsets as f64;
    let as_f: Vec<f64> = degrees.iter().map(|&d| d as f64).collect();
    let spread = as_f.iter().map(|d| (d - target).abs()).fold(0.0, f64::max) / target;
    Ok(DegreeProfile {
        ell,
        generation,
        boundary,
        count: degrees.len() as u64,
        min: degrees.iter().copied().min().unwrap_or(0),
        max: degrees.iter().copied().max().unwrap_or(0),
        mean: crate::stats::mean(&as_f),
        target,
        spread,
        percentiles: [0.05, 0.25, 0.5, 0.75, 0.95].map(|q| quantile(&as_f, q)),
        degrees,
    })
}

pub fn degree_profile(
    state: &ExplorationState,
    generation: usize,
    ell: u32,
    mode: SampleMode,
) -> Result<DegreeProfile> {
    let g = state.generations.get(generation).ok_or_else(|| {
        Error::Validation(format!(
            "generation {generation} not reached (last is {})",
            state.generations.len() - 1
        ))
    })?;
    profile_of(&state.universe, g, generation, ell, mode)
}

/// Arrivals at one ℓ-set between generations `i` and `i + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrivalEntry {
    pub ell: u32,
    pub generation: usize,
    pub l_rank: u64,
    /// Members of `∂C(i+1)` containing L whose parent does not contain L.
    pub jumps: u64,
    /// Members of `∂C(i+1)` containing L whose parent contains L.
    pub branchings: u64,
    /// `d_L(∂C(i))`.
    pub degree_before: u64,
    /// `d_L(∂C(i+1))`.
    pub degree_after: u64,
    pub predicted_jumps: f64,
    pub predicted_branchings: f64,
}

/// Expected jump arrivals at a single ℓ-set:
/// `(1+ε) C(k-ℓ, j-ℓ) (C(k,ℓ) - C(j,ℓ)) / C * |∂C(i)| / C(n,ℓ)`.
pub fn predicted_jumps(universe: &Universe, eps: f64, ell: u32, boundary: u64) -> f64 {
    let (k, j) = (universe.k, universe.j);
    let per_edge = universe.binom(k - ell, j - ell) as f64
        * (universe.binom(k, ell) - universe.binom(j, ell)) as f64
        / universe.cconst() as f64;
    (1.0 + eps) * per_edge * boundary as f64 / universe.num_sets(ell) as f64
}

/// Expected neighbourhood-branching arrivals: `(1+ε) θ_ℓ d_L(∂C(i))`.
pub fn predicted_branchings(universe: &Universe, eps: f64, ell: u32, degree: f64) -> Result<f64> {
    Ok((1.0 + eps) * theta(universe.k, universe.j, ell)?.value * degree)
}

fn parents_of(state: &ExplorationState, generation: usize) -> Result<&[crate::exploration::Discovery]> {
    let parents = state.parents.as_ref().ok_or_else(|| {
        Error::Instrumentation(
            "exploration ran without parent records; re-run with record_parents enabled".into(),
        )
    })?;
    parents.get(generation + 1).map(|v| v.as_slice()).ok_or_else(|| {
        Error::Validation(format!("generation {} not reached", generation + 1))
    })
}

fn contains_all(set: &[u32], sub: &[u32]) -> bool {
    sub.iter().all(|v| set.binary_search(v).is_ok())
}

pub fn classify_arrivals(
    state: &ExplorationState,
    generation: usize,
    ell: u32,
    l_rank: u64,
    eps: f64,
) -> Result<ArrivalEntry> {
    let u = &state.universe;
    if !(1..u.j).contains(&ell) {
        return Err(Error::Validation(format!("ell = {ell} outside 1..{}", u.j)));
    }
    u.check_rank(l_rank, ell)?;
    let parents = parents_of(state, generation)?;
    let l = u.unrank(l_rank, ell);
    let (mut jv, mut pv) = (Vec::new(), Vec::new());
    let mut degree_before = 0;
    for &r in &state.generations[generation] {
        u.unrank_into(r, u.j, &mut jv);
        degree_before += contains_all(&jv, &l) as u64;
    }
    let (mut jumps, mut branchings) = (0, 0);
    for (&r, d) in state.generations[generation + 1].iter().zip(parents) {
        u.unrank_into(r, u.j, &mut jv);
        if !contains_all(&jv, &l) {
            continue;
        }
        u.unrank_into(d.parent, u.j, &mut pv);
        if contains_all(&pv, &l) {
            branchings += 1;
        } else {
            jumps += 1;
        }
    }
    let boundary = state.generations[generation].len() as u64;
    Ok(ArrivalEntry {
        ell,
        generation,
        l_rank,
        jumps,
        branchings,
        degree_before,
        degree_after: jumps + branchings,
        predicted_jumps: predicted_jumps(u, eps, ell, boundary),
        predicted_branchings: predicted_branchings(u, eps, ell, degree_before as f64)?,
    })
}

/// Per-ℓ-set means over all `C(n, ℓ)` ℓ-sets for one generation step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrivalSummary {
    pub ell: u32,
    pub generation: usize,
    pub boundary: u64,
    pub mean_jumps: f64,
    pub predicted_jumps: f64,
    pub mean_branchings: f64,
    pub predicted_branchings: f64,
}

pub fn aggregate_arrivals(
    state: &ExplorationState,
    generation: usize,
    ell: u32,
    eps: f64,
) -> Result<ArrivalSummary> {
    let u = &state.universe;
    if !(1..u.j).contains(&ell) {
        return Err(Error::Validation(format!("ell = {ell} outside 1..{}", u.j)));
    }
    let parents = parents_of(state, generation)?;
    let (mut jv, mut pv, mut subs) = (Vec::new(), Vec::new(), Vec::new());
    let (mut jumps, mut branchings) = (0u64, 0u64);
    for (&r, d) in state.generations[generation + 1].iter().zip(parents) {
        u.unrank_into(r, u.j, &mut jv);
        u.unrank_into(d.parent, u.j, &mut pv);
        u.subset_ranks(&jv, ell, &mut subs);
        let mut lv = Vec::new();
        for &s in &subs {
            u.unrank_into(s, ell, &mut lv);
            if contains_all(&pv, &lv) {
                branchings += 1;
            } else {
                jumps += 1;
            }
        }
    }
    let boundary = state.generations[generation].len() as u64;
    let num_l = u.num_sets(ell) as f64;
    let mean_degree = (u.binom(u.j, ell) * boundary) as f64 / num_l;
    Ok(ArrivalSummary {
        ell,
        generation,
        boundary,
        mean_jumps: jumps as f64 / num_l,
        predicted_jumps: predicted_jumps(u, eps, ell, boundary),
        mean_branchings: branchings as f64 / num_l,
        predicted_branchings: predicted_branchings(u, eps, ell, mean_degree)?,
    })
}

fn factorial(m: i64) -> Ratio<i128> {
    Ratio::from_integer((1..=m as i128).product())
}

/// The jump constant as the sum
/// `(k-j)! j! / ℓ! * Σ_{ℓ'<ℓ} C(ℓ,ℓ') / ((j-ℓ')! (k-j-ℓ+ℓ')!)`,
/// with terms of negative factorial argument dropped.
pub fn f_sum(k: u32, j: u32, ell: u32) -> Result<Ratio<i128>> {
    if !(1 <= ell && ell < j && j < k) || k > 20 {
        return Err(Error::Validation(format!("need 1 <= ell < j < k <= 20, got k={k} j={j} ell={ell}")));
    }
    let (k, j, ell) = (k as i64, j as i64, ell as i64);
    let mut sum = Ratio::from_integer(0i128);
    for lp in 0..ell {
        let rest = k - j - ell + lp;
        if rest < 0 {
            continue;
        }
        let c = factorial(ell) / (factorial(lp) * factorial(ell - lp));
        sum += c / (factorial(j - lp) * factorial(rest));
    }
    Ok(factorial(k - j) * factorial(j) / factorial(ell) * sum)
}

/// `C(k, ℓ) - C(j, ℓ)`.
pub fn f_closed(k: u32, j: u32, ell: u32) -> Result<Ratio<i128>> {
    let a = binomial(k as u64, ell as u64)? as i128;
    let b = binomial(j as u64, ell as u64)? as i128;
    Ok(Ratio::from_integer(a - b))
}

/// Writes `ell,generation,min,max,mean,target,spread` rows.
pub fn write_profiles_csv<W: Write>(profiles: &[DegreeProfile], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    out.write_record(["ell", "generation", "min", "max", "mean", "target", "spread"]).map_err(err)?;
    for p in profiles {
        out.write_record([
            p.ell.to_string(),
            p.generation.to_string(),
            p.min.to_string(),
            p.max.to_string(),
            p.mean.to_string(),
            p.target.to_string(),
            p.spread.to_string(),
        ])
        .map_err(err)?;
    }
    out.flush()?;
    Ok(())
}
