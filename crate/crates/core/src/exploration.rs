//! Breadth-first exploration of j-components through an edge oracle.
//!
//! Each active j-set queries the k-sets containing it, in ascending rank.
//! `bfs_component` queries a k-set when it still has a neutral j-subset and
//! no other j-subset has been explored or forbidden; `bfs_tree` only queries
//! k-sets whose other j-subsets are all neutral. Because statuses only move
//! forward, both rules query every k-set at most once per exploration, which
//! the oracle's memo counter confirms in the tests.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::combinatorics::{next_combination, Params, Universe};
use crate::sampling::EdgeOracle;
use crate::{Error, Result};

pub const NEUTRAL: u8 = 0;
pub const ACTIVE: u8 = 1;
pub const EXPLORED: u8 = 2;
pub const FORBIDDEN: u8 = 3;

/// Parent field of the root's discovery record.
pub const NO_PARENT: u64 = u64::MAX;

/// Largest number of j-sets an exploration will allocate status for.
pub const MAX_STATUS_ENTRIES: u64 = 1 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchKind {
    Component,
    Tree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// No further j-sets reachable.
    Exhausted,
    /// The explored component reached the size threshold.
    Size,
    /// The current generation reached the boundary threshold.
    Boundary,
    /// The query count reached the budget.
    QueryBudget,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Exhausted => "exhausted",
            StopReason::Size => "size",
            StopReason::Boundary => "boundary",
            StopReason::QueryBudget => "query_budget",
        }
    }
}

/// Stopping rules, all evaluated only between generations.
#[derive(Clone, Debug, Default)]
pub struct StopConfig {
    pub size_threshold: Option<f64>,
    pub boundary_threshold: Option<f64>,
    pub query_budget: Option<f64>,
    /// j-set ranks that may not be discovered; k-sets containing one are never queried.
    pub forbidden: Vec<u64>,
    /// Keep one `(parent, edge)` record per discovered j-set.
    pub record_parents: bool,
}

impl StopConfig {
    pub fn unbounded() -> Self {
        StopConfig::default()
    }

    /// Size `rho1 n^j`, boundary `rho1^2 n^j`, budget `alpha n^k`.
    pub fn standard(params: &Params, rho1: f64, alpha: f64) -> Self {
        let nj = params.n_pow(params.j as f64);
        StopConfig {
            size_threshold: Some(rho1 * nj),
            boundary_threshold: Some(rho1 * rho1 * nj),
            query_budget: Some(alpha * params.n_pow(params.k as f64)),
            forbidden: Vec::new(),
            record_parents: false,
        }
    }

    /// As [`StopConfig::standard`] without the boundary rule.
    pub fn secondary(params: &Params, rho1: f64, alpha: f64) -> Self {
        StopConfig { boundary_threshold: None, ..StopConfig::standard(params, rho1, alpha) }
    }

    pub fn with_parents(mut self) -> Self {
        self.record_parents = true;
        self
    }

    pub fn with_forbidden(mut self, forbidden: Vec<u64>) -> Self {
        self.forbidden = forbidden;
        self
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("size threshold", self.size_threshold),
            ("boundary threshold", self.boundary_threshold),
            ("query budget", self.query_budget),
        ] {
            if let Some(x) = v {
                if !(x > 0.0) {
                    return Err(Error::Validation(format!("{name} must be positive, got {x}")));
                }
            }
        }
        Ok(())
    }
}

/// How a j-set entered the exploration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discovery {
    /// The active j-set whose query found it ([`NO_PARENT`] for the root).
    pub parent: u64,
    /// The positive k-set ([`NO_PARENT`] for the root).
    pub edge: u64,
}

#[derive(Clone, Debug)]
pub struct ExplorationState {
    pub kind: SearchKind,
    pub universe: Universe,
    pub root: u64,
    status: Vec<u8>,
    /// Generation `i` lists the ranks of `∂C(i)` in ascending order.
    pub generations: Vec<Vec<u64>>,
    /// Aligned with `generations` when parents were recorded.
    pub parents: Option<Vec<Vec<Discovery>>>,
    /// Queries made while processing each generation.
    pub queries_per_generation: Vec<u64>,
    /// Positive answers while processing each generation.
    pub positives_per_generation: Vec<u64>,
    /// Positive k-sets in discovery order.
    pub edges: Vec<u64>,
    /// Queries made by this exploration.
    pub t: u64,
    pub stop_reason: StopReason,
    /// Observed value over threshold for the rule that fired (1 if none did).
    pub overshoot: f64,
}

impl ExplorationState {
    pub fn status(&self, rank: u64) -> u8 {
        self.status[rank as usize]
    }

    /// `|C_J|`: discovered j-sets, all generations.
    pub fn size(&self) -> u64 {
        self.generations.iter().map(|g| g.len() as u64).sum()
    }

    /// Index of the last generation, `i_stop`.
    pub fn i_stop(&self) -> usize {
        self.generations.len() - 1
    }

    pub fn generation_sizes(&self) -> Vec<u64> {
        self.generations.iter().map(|g| g.len() as u64).collect()
    }

    /// All discovered j-sets, generation by generation.
    pub fn discovered(&self) -> Vec<u64> {
        self.generations.iter().flatten().copied().collect()
    }

    /// Running sums `|C_J(i)|`.
    pub fn cumulative_sizes(&self) -> Vec<u64> {
        self.generations
            .iter()
            .scan(0u64, |acc, g| {
                *acc += g.len() as u64;
                Some(*acc)
            })
            .collect()
    }

    /// Discovered j-sets minus `C * e + 1`; zero for every tree search.
    pub fn tree_excess(&self) -> i64 {
        self.size() as i64 - (self.universe.cconst() * self.edges.len() as u64) as i64 - 1
    }

    pub fn into_status(self) -> Vec<u8> {
        self.status
    }

    /// Writes one `gen i: ranks...` line per generation.
    pub fn write_trace<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, g) in self.generations.iter().enumerate() {
            write!(w, "gen {i}:")?;
            for r in g {
                write!(w, " {r}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

pub fn bfs_component(
    universe: &Universe,
    root: u64,
    oracle: &mut EdgeOracle,
    stop: &StopConfig,
) -> Result<ExplorationState> {
    explore(universe, fresh_status(universe, stop)?, root, oracle, stop, SearchKind::Component)
}

pub fn bfs_tree(
    universe: &Universe,
    root: u64,
    oracle: &mut EdgeOracle,
    stop: &StopConfig,
) -> Result<ExplorationState> {
    explore(universe, fresh_status(universe, stop)?, root, oracle, stop, SearchKind::Tree)
}

/// Component labels of every j-set from repeated unbounded explorations
/// sharing one status array; labels are numbered in order of the smallest
/// member rank.
pub fn bfs_sweep(universe: &Universe, oracle: &mut EdgeOracle) -> Result<Vec<u32>> {
    let stop = StopConfig::unbounded();
    let mut status = fresh_status(universe, &stop)?;
    let mut labels = vec![u32::MAX; universe.num_jsets as usize];
    let mut next = 0u32;
    for root in 0..universe.num_jsets {
        if status[root as usize] != NEUTRAL {
            continue;
        }
        let state = explore(universe, status, root, oracle, &stop, SearchKind::Component)?;
        for &r in state.generations.iter().flatten() {
            labels[r as usize] = next;
        }
        next += 1;
        status = state.into_status();
        // completed components block every k-set through them
        for s in status.iter_mut() {
            if *s != NEUTRAL {
                *s = FORBIDDEN;
            }
        }
    }
    Ok(labels)
}

fn fresh_status(universe: &Universe, stop: &StopConfig) -> Result<Vec<u8>> {
    if universe.num_jsets > MAX_STATUS_ENTRIES {
        return Err(Error::Capacity(format!(
            "C(n,j) = {} j-sets exceeds the exploration limit {MAX_STATUS_ENTRIES}",
            universe.num_jsets
        )));
    }
    let mut status = vec![NEUTRAL; universe.num_jsets as usize];
    for &f in &stop.forbidden {
        universe.check_rank(f, universe.j)?;
        status[f as usize] = FORBIDDEN;
    }
    Ok(status)
}

fn explore(
    u: &Universe,
    mut status: Vec<u8>,
    root: u64,
    oracle: &mut EdgeOracle,
    stop: &StopConfig,
    kind: SearchKind,
) -> Result<ExplorationState> {
    stop.validate()?;
    u.check_rank(root, u.j)?;
    if status[root as usize] == FORBIDDEN {
        return Err(Error::Validation(format!("root j-set {root} is forbidden")));
    }
    if status[root as usize] != NEUTRAL {
        return Err(Error::Validation(format!("root j-set {root} already discovered")));
    }
    status[root as usize] = ACTIVE;

    let (n, k, j) = (u.n, u.k, u.j);
    let patterns = u.jsubset_patterns().to_vec();
    let mut state = ExplorationState {
        kind,
        universe: u.clone(),
        root,
        status: Vec::new(),
        generations: vec![vec![root]],
        parents: stop
            .record_parents
            .then(|| vec![vec![Discovery { parent: NO_PARENT, edge: NO_PARENT }]]),
        queries_per_generation: Vec::new(),
        positives_per_generation: Vec::new(),
        edges: Vec::new(),
        t: 0,
        stop_reason: StopReason::Exhausted,
        overshoot: 1.0,
    };

    let mut size = 1u64;
    let mut jv = Vec::with_capacity(j as usize);
    let mut comp: Vec<u32> = Vec::with_capacity(n as usize);
    let mut idx: Vec<u32> = Vec::with_capacity((k - j) as usize);
    let mut kset = vec![0u32; k as usize];
    let mut sub_ranks = vec![0u64; patterns.len()];

    loop {
        let current = state.generations.last().unwrap();
        let boundary = current.len() as f64;
        let checks = [
            (stop.size_threshold, size as f64, StopReason::Size),
            (stop.boundary_threshold, boundary, StopReason::Boundary),
            (stop.query_budget, state.t as f64, StopReason::QueryBudget),
        ];
        if let Some((thr, val, reason)) = checks
            .iter()
            .find_map(|&(thr, val, reason)| thr.filter(|&x| val >= x).map(|x| (x, val, reason)))
        {
            state.stop_reason = reason;
            state.overshoot = val / thr;
            break;
        }

        let current = current.clone();
        let mut next: Vec<(u64, Discovery)> = Vec::new();
        let (mut queries, mut positives) = (0u64, 0u64);
        for &active in &current {
            u.unrank_into(active, j, &mut jv);
            comp.clear();
            let mut it = jv.iter().peekable();
            for v in 0..n {
                if it.peek() == Some(&&v) {
                    it.next();
                } else {
                    comp.push(v);
                }
            }
            idx.clear();
            idx.extend(0..k - j);
            loop {
                // merge J and the chosen outside vertices into the sorted k-set
                let (mut a, mut b, mut jmask) = (0usize, 0usize, 0u32);
                for (pos, slot) in kset.iter_mut().enumerate() {
                    if b >= idx.len() || (a < jv.len() && jv[a] < comp[idx[b] as usize]) {
                        *slot = jv[a];
                        a += 1;
                        jmask |= 1 << pos;
                    } else {
                        *slot = comp[idx[b] as usize];
                        b += 1;
                    }
                }
                let mut eligible = true;
                let mut any_neutral = false;
                for (slot, &pat) in sub_ranks.iter_mut().zip(&patterns) {
                    if pat == jmask {
                        *slot = active;
                        continue;
                    }
                    let r = u.rank_masked(&kset, pat);
                    *slot = r;
                    match (kind, status[r as usize]) {
                        (_, NEUTRAL) => any_neutral = true,
                        (SearchKind::Component, ACTIVE) => {}
                        _ => {
                            eligible = false;
                            break;
                        }
                    }
                }
                if eligible && any_neutral {
                    let kr = u.rank(&kset);
                    queries += 1;
                    if oracle.query_unchecked(kr) {
                        positives += 1;
                        state.edges.push(kr);
                        for (&r, &pat) in sub_ranks.iter().zip(&patterns) {
                            if pat != jmask && status[r as usize] == NEUTRAL {
                                status[r as usize] = ACTIVE;
                                next.push((r, Discovery { parent: active, edge: kr }));
                            }
                        }
                    }
                }
                if !next_combination(&mut idx, n - j) {
                    break;
                }
            }
            status[active as usize] = EXPLORED;
        }
        state.t += queries;
        state.queries_per_generation.push(queries);
        state.positives_per_generation.push(positives);

        if next.is_empty() {
            state.stop_reason = StopReason::Exhausted;
            break;
        }
        next.sort_unstable_by_key(|&(r, _)| r);
        size += next.len() as u64;
        if let Some(p) = state.parents.as_mut() {
            p.push(next.iter().map(|&(_, d)| d).collect());
        }
        state.generations.push(next.into_iter().map(|(r, _)| r).collect());
    }
    state.status = status;
    Ok(state)
}

/// Maximum `ℓ`-degree of a collection of j-sets: the most members sharing one
/// ℓ-set. `ℓ = 0` gives the collection size.
pub fn max_ell_degree(universe: &Universe, jsets: &[u64], ell: u32) -> Result<u64> {
    if ell >= universe.j {
        return Err(Error::Validation(format!("ell = {ell} must be below j = {}", universe.j)));
    }
    if ell == 0 {
        return Ok(jsets.len() as u64);
    }
    let mut counts: HashMap<u64, u64> = HashMap::new();
    let mut vs = Vec::new();
    let mut subs = Vec::new();
    for &r in jsets {
        universe.unrank_into(r, universe.j, &mut vs);
        universe.subset_ranks(&vs, ell, &mut subs);
        for &s in &subs {
            *counts.entry(s).or_default() += 1;
        }
    }
    Ok(counts.values().copied().max().unwrap_or(0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeCheck {
    pub ell: u32,
    pub max_degree: u64,
    /// `Δ_ℓ / (α n^(j-ℓ))`.
    pub ratio: f64,
    pub within: bool,
}

/// Bounded-degree check `Δ_ℓ(D) <= c α n^(j-ℓ)` for every `ℓ < j`.
pub fn check_bounded_degree(
    universe: &Universe,
    discovered: &[u64],
    t: u64,
    alpha: f64,
    c: f64,
) -> Result<Vec<DegreeCheck>> {
    let budget = alpha * (universe.n as f64).powi(universe.k as i32);
    if t as f64 > budget {
        log::warn!("degree check at t = {t} beyond the budget alpha n^k = {budget}");
    }
    (0..universe.j)
        .map(|ell| {
            let d = max_ell_degree(universe, discovered, ell)?;
            let ratio = d as f64 / (alpha * (universe.n as f64).powi((universe.j - ell) as i32));
            Ok(DegreeCheck { ell, max_degree: d, ratio, within: ratio <= c })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionStep {
    pub generation: usize,
    pub size: u64,
    pub next_size: u64,
    /// Whether `size >= n^(1-δ)`, where the two-sided window applies.
    pub large: bool,
    pub lower: f64,
    pub upper: f64,
    pub within: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub steps: Vec<ExpansionStep>,
}

impl ExpansionReport {
    pub fn fraction_within(&self, large_only: bool) -> f64 {
        let sel: Vec<&ExpansionStep> =
            self.steps.iter().filter(|s| !large_only || s.large).collect();
        if sel.is_empty() {
            return 1.0;
        }
        sel.iter().filter(|s| s.within).count() as f64 / sel.len() as f64
    }

    pub fn all_within(&self) -> bool {
        self.steps.iter().all(|s| s.within)
    }
}

/// Generation-to-generation growth against the expansion windows:
/// `(1 ± 2γ)(1 + ε) x` when `x >= n^(1-δ)`, otherwise at most `2 max(x, n^δ)`.
pub fn check_expansion(state: &ExplorationState, eps: f64, gamma: f64, delta: f64) -> ExpansionReport {
    let n = state.universe.n as f64;
    let cut = n.powf(1.0 - delta);
    let cap = n.powf(delta);
    let sizes = state.generation_sizes();
    let steps = sizes
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (x, y) = (w[0] as f64, w[1] as f64);
            let large = x >= cut;
            let (lower, upper) = if large {
                ((1.0 - 2.0 * gamma) * (1.0 + eps) * x, (1.0 + 2.0 * gamma) * (1.0 + eps) * x)
            } else {
                (0.0, 2.0 * x.max(cap))
            };
            ExpansionStep {
                generation: i,
                size: w[0],
                next_size: w[1],
                large,
                lower,
                upper,
                within: y >= lower && y <= upper,
            }
        })
        .collect();
    ExpansionReport { steps }
}

/// Edge-count window after `t` queries at edge probability `p`:
/// `(1 ± λ0) p t` when `p t >= n^δ`, otherwise at most `(1 + λ0) n^δ`.
pub fn edge_count_within(edges: u64, t: u64, p: f64, lambda0: f64, n: u32, delta: f64) -> bool {
    let expected = p * t as f64;
    let nd = (n as f64).powf(delta);
    let e = edges as f64;
    if expected >= nd {
        e >= (1.0 - lambda0) * expected && e <= (1.0 + lambda0) * expected
    } else {
        e <= (1.0 + lambda0) * nd
    }
}
