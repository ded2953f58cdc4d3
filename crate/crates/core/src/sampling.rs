//! Randomness: trial seeds, the edge oracle queried by explorations, and
//! full i.i.d. edge-set sampling for the census.
//!
//! The lazy oracle is counter based: the answer for a k-set is a pure
//! function of `(seed, rank)`, drawn from the SplitMix64 output at position
//! `rank` of a seed-keyed stream. One seed therefore fixes one hypergraph
//! instance, revealed lazily, and repeated queries agree without storage.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, Params};
use crate::error::{Error, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master`. Injective in `index` for a fixed master.
pub fn derive_trial_seed(master: u64, index: u64) -> u64 {
    mix64(master.wrapping_add(mix64(index.wrapping_add(GOLDEN))))
}

/// The standard trial RNG.
pub fn trial_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform in `[0, 1)` with 53 bits.
#[inline]
fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// An explicit edge set: sorted, distinct k-set ranks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSet {
    pub n: u32,
    pub k: u32,
    edges: Vec<u64>,
}

impl EdgeSet {
    pub fn new(n: u32, k: u32, mut edges: Vec<u64>) -> Result<Self> {
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Validation("duplicate edge rank".into()));
        }
        let total = binomial(n as u64, k as u64)?;
        if let Some(&last) = edges.last() {
            if last as u128 >= total {
                return Err(Error::Validation(format!(
                    "edge rank {last} out of range for {k}-subsets of {n} vertices"
                )));
            }
        }
        Ok(EdgeSet { n, k, edges })
    }

    pub fn empty(n: u32, k: u32) -> Self {
        EdgeSet { n, k, edges: Vec::new() }
    }

    pub fn ranks(&self) -> &[u64] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, rank: u64) -> bool {
        self.edges.binary_search(&rank).is_ok()
    }

    /// Edges present in either set.
    pub fn union(&self, other: &EdgeSet) -> Result<EdgeSet> {
        if (self.n, self.k) != (other.n, other.k) {
            return Err(Error::Validation("edge sets over different universes".into()));
        }
        let mut edges = Vec::with_capacity(self.len() + other.len());
        let (a, b) = (&self.edges, &other.edges);
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&x), Some(&y)) if x == y => {
                    i += 1;
                    j += 1;
                    x
                }
                (Some(&x), Some(&y)) if x < y => {
                    i += 1;
                    x
                }
                (Some(_), Some(&y)) => {
                    j += 1;
                    y
                }
                (Some(&x), None) => {
                    i += 1;
                    x
                }
                (None, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            edges.push(next);
        }
        Ok(EdgeSet { n: self.n, k: self.k, edges })
    }

    /// Writes the file format: header `n k seed`, then one rank per line.
    pub fn write_to<W: Write>(&self, mut w: W, seed: u64) -> Result<()> {
        writeln!(w, "{} {} {}", self.n, self.k, seed)?;
        for r in &self.edges {
            writeln!(w, "{r}")?;
        }
        Ok(())
    }

    /// Reads the file format; returns the set and the recorded seed.
    pub fn read_from<R: BufRead>(r: R) -> Result<(EdgeSet, u64)> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty edge-set file".into()))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!("bad header line {header:?}, want `n k seed`")));
        }
        let parse = |s: &str| s.parse::<u64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
        let n = parse(fields[0])? as u32;
        let k = parse(fields[1])? as u32;
        let seed = parse(fields[2])?;
        let mut edges = Vec::new();
        for line in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            edges.push(parse(t)?);
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parse("edge ranks must be strictly ascending".into()));
        }
        Ok((EdgeSet::new(n, k, edges)?, seed))
    }
}

/// How an oracle produces answers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleMode {
    /// Fresh Bernoulli(p) per k-set, keyed by the seed.
    Lazy,
    /// Membership in a supplied edge set.
    Presampled,
}

/// What the oracle remembers about past queries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QueryLog {
    /// Every answered k-set; repeats are detected and not recounted.
    Full,
    /// Positive answers only. The caller guarantees each k-set is queried at
    /// most once, which the explorations do structurally.
    EdgesOnly,
}

/// Memoized Bernoulli(p) answers per k-set.
#[derive(Clone, Debug)]
pub struct EdgeOracle {
    mode: OracleMode,
    p: f64,
    n: u32,
    k: u32,
    num_ksets: u64,
    seed: u64,
    key: u64,
    edges: Option<HashSet<u64>>,
    log: QueryLog,
    answered: HashMap<u64, bool>,
    positives: Vec<u64>,
    t: u64,
    repeats: u64,
}

/// Builds an oracle. Presampled mode needs an edge set.
pub fn make_oracle(
    params: &Params,
    seed: u64,
    mode: OracleMode,
    edge_set: Option<&EdgeSet>,
) -> Result<EdgeOracle> {
    params.validate()?;
    let num_ksets = params.num_ksets()?;
    let edges = match (mode, edge_set) {
        (OracleMode::Presampled, None) => {
            return Err(Error::Config("presampled oracle requires an edge set".into()))
        }
        (OracleMode::Presampled, Some(es)) => {
            if (es.n, es.k) != (params.n, params.k) {
                return Err(Error::Config(format!(
                    "edge set is over n={} k={}, params say n={} k={}",
                    es.n, es.k, params.n, params.k
                )));
            }
            Some(es.ranks().iter().copied().collect())
        }
        (OracleMode::Lazy, _) => None,
    };
    Ok(EdgeOracle {
        mode,
        p: params.p,
        n: params.n,
        k: params.k,
        num_ksets,
        seed,
        key: mix64(seed ^ 0xA5A5_5A5A_C3C3_3C3C),
        edges,
        log: QueryLog::Full,
        answered: HashMap::new(),
        positives: Vec::new(),
        t: 0,
        repeats: 0,
    })
}

impl EdgeOracle {
    pub fn with_log(mut self, log: QueryLog) -> Self {
        self.log = log;
        self
    }

    pub fn mode(&self) -> OracleMode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Distinct k-sets queried so far.
    pub fn t(&self) -> u64 {
        self.t
    }

    /// Repeated queries seen (only detectable with [`QueryLog::Full`]).
    pub fn repeats(&self) -> u64 {
        self.repeats
    }

    /// The answer without recording a query.
    #[inline]
    pub fn peek(&self, rank: u64) -> bool {
        match &self.edges {
            Some(set) => set.contains(&rank),
            None => {
                let bits = mix64(self.key.wrapping_add(rank.wrapping_add(1).wrapping_mul(GOLDEN)));
                unit_f64(bits) < self.p
            }
        }
    }

    pub fn query(&mut self, rank: u64) -> Result<bool> {
        if rank >= self.num_ksets {
            return Err(Error::Validation(format!(
                "k-set rank {rank} out of range (C(n,k) = {})",
                self.num_ksets
            )));
        }
        Ok(self.query_unchecked(rank))
    }

    #[inline]
    pub(crate) fn query_unchecked(&mut self, rank: u64) -> bool {
        if self.log == QueryLog::Full {
            if let Some(&ans) = self.answered.get(&rank) {
                self.repeats += 1;
                return ans;
            }
        }
        let ans = self.peek(rank);
        self.t += 1;
        if self.log == QueryLog::Full {
            self.answered.insert(rank, ans);
        }
        if ans {
            self.positives.push(rank);
        }
        ans
    }

    /// The full answer record (empty unless [`QueryLog::Full`]).
    pub fn answered(&self) -> &HashMap<u64, bool> {
        &self.answered
    }

    /// Positive answers so far, as an edge set.
    pub fn revealed_edges(&self) -> EdgeSet {
        let mut e = self.positives.clone();
        e.sort_unstable();
        e.dedup();
        EdgeSet { n: self.n, k: self.k, edges: e }
    }

    /// Every edge of the instance: scans all `C(n, k)` k-sets without querying.
    pub fn materialize(&self) -> EdgeSet {
        let edges = match &self.edges {
            Some(set) => {
                let mut e: Vec<u64> = set.iter().copied().collect();
                e.sort_unstable();
                e
            }
            None => (0..self.num_ksets).filter(|&r| self.peek(r)).collect(),
        };
        EdgeSet { n: self.n, k: self.k, edges }
    }
}

/// Draws `H^k(n, p)` as an explicit edge set: `M ~ Bi(C(n,k), p)`, then `M`
/// distinct uniform ranks.
pub fn sample_edge_set(params: &Params, seed: u64) -> Result<EdgeSet> {
    params.validate()?;
    let total = params.num_ksets()?;
    let mut rng = trial_rng(seed);
    let m = if params.p <= 0.0 {
        0
    } else if params.p >= 1.0 {
        total
    } else {
        Binomial::new(total, params.p)
            .map_err(|e| Error::Numerical(format!("binomial sampler: {e}")))?
            .sample(&mut rng)
    };
    let edges = if m > total / 2 {
        // sample the complement instead
        let skip = distinct_uniform(total - m, total, &mut rng);
        let mut out = Vec::with_capacity(m as usize);
        let mut next_skip = skip.iter().peekable();
        for r in 0..total {
            if next_skip.peek() == Some(&&r) {
                next_skip.next();
            } else {
                out.push(r);
            }
        }
        out
    } else {
        distinct_uniform(m, total, &mut rng)
    };
    Ok(EdgeSet { n: params.n, k: params.k, edges })
}

fn distinct_uniform(m: u64, total: u64, rng: &mut impl Rng) -> Vec<u64> {
    let mut seen = HashSet::with_capacity(m as usize);
    while (seen.len() as u64) < m {
        seen.insert(rng.random_range(0..total));
    }
    let mut out: Vec<u64> = seen.into_iter().collect();
    out.sort_unstable();
    out
}
