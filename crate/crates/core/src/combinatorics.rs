//! Exact combinatorial arithmetic on vertex subsets.
//!
//! Every r-subset of `[0, n)` is identified by its colexicographic rank
//! `sum_i C(S[i], i + 1)` over the sorted elements. Ranks of subsets of the
//! first `m` vertices form the prefix `[0, C(m, r))`, independent of `n`.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact `C(n, r)`; zero when `r > n`.
pub fn binomial(n: u64, r: u64) -> Result<u128> {
    if r > n {
        return Ok(0);
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 1..=r as u128 {
        let factor = n as u128 - r as u128 + i;
        acc = match acc.checked_mul(factor) {
            Some(v) => v / i,
            None => {
                // acc * factor / i is integral; cancel gcd(acc, i) first so that
                // the remaining divisor divides `factor`.
                let g = gcd(acc, i);
                let (a, d) = (acc / g, i / g);
                a.checked_mul(factor / d).ok_or_else(|| {
                    Error::Capacity(format!("C({n}, {r}) exceeds 128 bits"))
                })?
            }
        };
    }
    Ok(acc)
}

/// `C(n, r)` narrowed to `u64`.
pub fn binomial_u64(n: u64, r: u64) -> Result<u64> {
    let v = binomial(n, r)?;
    u64::try_from(v).map_err(|_| Error::Capacity(format!("C({n}, {r}) = {v} exceeds 64 bits")))
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Canonical identity of an r-subset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SetRank {
    pub size: u32,
    pub rank: u64,
}

/// Colexicographic rank of a strictly increasing vertex list.
pub fn rank_subset(set: &[u32]) -> Result<SetRank> {
    if set.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Validation(format!(
            "subset {set:?} is not strictly increasing"
        )));
    }
    let mut rank: u128 = 0;
    for (i, &v) in set.iter().enumerate() {
        rank += binomial(v as u64, i as u64 + 1)?;
    }
    let rank = u64::try_from(rank)
        .map_err(|_| Error::Capacity(format!("rank of {set:?} exceeds 64 bits")))?;
    Ok(SetRank {
        size: set.len() as u32,
        rank,
    })
}

/// Inverse of [`rank_subset`]. `n` bounds the admissible ranks.
pub fn unrank_subset(rank: SetRank, n: u32) -> Result<Vec<u32>> {
    let r = rank.size as u64;
    let total = binomial(n as u64, r)?;
    if rank.rank as u128 >= total {
        return Err(Error::Validation(format!(
            "rank {} out of range for {r}-subsets of {n} vertices",
            rank.rank
        )));
    }
    let mut out = vec![0u32; rank.size as usize];
    let mut rem = rank.rank as u128;
    let mut hi = n as u64;
    for i in (1..=r).rev() {
        // largest c < hi with C(c, i) <= rem
        let (mut lo, mut top) = (i - 1, hi - 1);
        while lo < top {
            let mid = (lo + top).div_ceil(2);
            if binomial(mid, i)? <= rem {
                lo = mid;
            } else {
                top = mid - 1;
            }
        }
        out[i as usize - 1] = lo as u32;
        rem -= binomial(lo, i)?;
        hi = lo;
    }
    Ok(out)
}

/// All `C(k, j)` j-subsets of a k-set, as ranks, in colexicographic order.
pub fn sub_jsets(edge: &[u32], j: u32) -> Result<Vec<SetRank>> {
    let k = edge.len() as u32;
    if j == 0 || j > k {
        return Err(Error::Validation(format!("need 1 <= j <= |E| = {k}, got j = {j}")));
    }
    if edge.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Validation(format!("edge {edge:?} is not strictly increasing")));
    }
    let mut out = Vec::new();
    let mut buf = vec![0u32; j as usize];
    for_each_combination(k, j, |idx| {
        for (b, &x) in buf.iter_mut().zip(idx) {
            *b = edge[x as usize];
        }
        out.push(rank_subset(&buf));
    });
    out.into_iter().collect()
}

/// Visits the index combinations of `r` out of `m` in colexicographic order.
pub fn for_each_combination(m: u32, r: u32, mut f: impl FnMut(&[u32])) {
    if r > m {
        return;
    }
    let mut idx: Vec<u32> = (0..r).collect();
    loop {
        f(&idx);
        if !next_combination(&mut idx, m) {
            return;
        }
    }
}

/// Advances `idx` to the colexicographic successor among r-subsets of `[0, m)`.
#[inline]
pub fn next_combination(idx: &mut [u32], m: u32) -> bool {
    let r = idx.len();
    for i in 0..r {
        let cap = if i + 1 < r { idx[i + 1] } else { m };
        if idx[i] + 1 < cap {
            idx[i] += 1;
            for (l, slot) in idx[..i].iter_mut().enumerate() {
                *slot = l as u32;
            }
            return true;
        }
    }
    false
}

/// Model parameters of `H^k(n, p)` with connectivity order `j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: u32,
    pub k: u32,
    pub j: u32,
    pub p: f64,
    /// Signed distance from criticality; `p = (1 + eps) p0` when `p` was derived.
    pub eps: Option<f64>,
}

impl Params {
    pub fn new(n: u32, k: u32, j: u32, p: f64) -> Result<Self> {
        let params = Params { n, k, j, p, eps: None };
        params.validate()?;
        Ok(params)
    }

    /// `p = (1 + eps) p0`; a negative `eps` gives the subcritical side.
    pub fn from_eps(n: u32, k: u32, j: u32, eps: f64) -> Result<Self> {
        let mut params = Params { n, k, j, p: 0.0, eps: Some(eps) };
        params.validate_shape()?;
        params.p = (1.0 + eps) * critical_p0(&params)?;
        params.validate()?;
        Ok(params)
    }

    fn validate_shape(&self) -> Result<()> {
        if !(1 <= self.j && self.j < self.k && self.k <= self.n) {
            return Err(Error::Validation(format!(
                "need 1 <= j < k <= n, got n={} k={} j={}",
                self.n, self.k, self.j
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_shape()?;
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Validation(format!("p = {} outside [0, 1]", self.p)));
        }
        Ok(())
    }

    /// The litter size `C = C(k, j) - 1`.
    pub fn cconst(&self) -> u64 {
        binomial_u64(self.k as u64, self.j as u64).expect("k is small") - 1
    }

    /// `C(n, k - j)`: candidate k-sets through a fixed j-set, up to the excluded vertices.
    pub fn branching_trials(&self) -> Result<u64> {
        binomial_u64(self.n as u64, (self.k - self.j) as u64)
    }

    pub fn num_jsets(&self) -> Result<u64> {
        binomial_u64(self.n as u64, self.j as u64)
    }

    pub fn num_ksets(&self) -> Result<u64> {
        binomial_u64(self.n as u64, self.k as u64)
    }

    /// `n^power` as a float, the scale used by the thresholds.
    pub fn n_pow(&self, power: f64) -> f64 {
        (self.n as f64).powf(power)
    }
}

/// The exact denominator `(C(k,j) - 1) * C(n, k-j)` of the critical probability.
pub fn critical_denominator(params: &Params) -> Result<u128> {
    let c = binomial(params.k as u64, params.j as u64)? - 1;
    let trials = binomial(params.n as u64, (params.k - params.j) as u64)?;
    c.checked_mul(trials)
        .ok_or_else(|| Error::Capacity("critical denominator exceeds 128 bits".into()))
}

/// `p0` as an exact rational.
pub fn critical_p0_exact(params: &Params) -> Result<Ratio<u128>> {
    Ok(Ratio::new(1, critical_denominator(params)?))
}

/// `p0 = 1 / ((C(k,j) - 1) * C(n, k-j))`, correctly rounded from the exact denominator.
pub fn critical_p0(params: &Params) -> Result<f64> {
    Ok(1.0 / critical_denominator(params)? as f64)
}

/// Constants of the parameter hierarchies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSchedule {
    /// Base exponent, `0 < delta < 1/6`.
    pub delta: f64,
    /// Large-component constant; components of at least `rho1 * n^j` j-sets are large.
    pub rho1: f64,
    /// Lower-coupling slack: `T_<` has `(1 - gamma) C(n, k-j)` trials.
    pub gamma: f64,
    /// Edge-count concentration tolerance of the exploration.
    pub lambda0: f64,
    /// Neighbourhood-branching tolerance entering the smoothing time.
    pub lambda: f64,
    /// Smoothness tolerance for 0-sets; `delta_ell = 8^ell * delta0`.
    pub delta0: f64,
}

impl ToleranceSchedule {
    /// Defaults for a given `eps` and `n`: `rho1 = eps^2`, `gamma = eps^1.5`,
    /// `delta = 0.1`, `delta0 = 0.05`, `lambda0 = delta0 / (2 ln n)`, `lambda = 0.01`.
    pub fn for_eps(eps: f64, n: u32) -> Self {
        let eps = eps.abs();
        let delta0 = 0.05;
        ToleranceSchedule {
            delta: 0.1,
            rho1: eps * eps,
            gamma: eps.powf(1.5),
            lambda0: delta0 / (2.0 * (n.max(3) as f64).ln()),
            lambda: 0.01,
            delta0,
        }
    }

    pub fn delta_ell(&self, ell: u32) -> f64 {
        8f64.powi(ell as i32) * self.delta0
    }

    /// Messages for every violated ordering; empty when the hierarchy holds.
    pub fn hierarchy_warnings(&self, n: u32, eps: f64, j: u32) -> Vec<String> {
        let eps = eps.abs();
        let n = n as f64;
        let mut out = Vec::new();
        if !(self.delta > 0.0 && self.delta < 1.0 / 6.0) {
            out.push(format!("delta = {} outside (0, 1/6)", self.delta));
        }
        let floor = n.powf(-(j as f64) / 3.0).max(n.powf(-0.5 + self.delta));
        if self.rho1 <= floor {
            out.push(format!("rho1 = {} not above max(n^(-j/3), n^(-1/2+delta)) = {floor}", self.rho1));
        }
        if self.rho1 >= self.gamma {
            out.push(format!("rho1 = {} not below gamma = {}", self.rho1, self.gamma));
        }
        if self.gamma >= eps {
            out.push(format!("gamma = {} not below eps = {eps}", self.gamma));
        }
        if self.lambda0 >= self.delta0 / n.ln() {
            out.push(format!(
                "lambda0 = {} not below delta0 / ln n = {}",
                self.lambda0,
                self.delta0 / n.ln()
            ));
        }
        if self.delta0 <= 0.0 {
            out.push(format!("delta0 = {} must be positive", self.delta0));
        }
        out
    }
}

/// Dense table of `C(m, r)` for `m <= n`, `r <= rmax`, used on hot paths.
#[derive(Clone, Debug)]
pub struct BinomialTable {
    stride: usize,
    data: Vec<u64>,
}

impl BinomialTable {
    pub fn new(n: u32, rmax: u32) -> Result<Self> {
        let stride = rmax as usize + 1;
        let mut data = vec![0u64; (n as usize + 1) * stride];
        for m in 0..=n as usize {
            data[m * stride] = 1;
            for r in 1..stride.min(m + 1) {
                let above = data[(m - 1) * stride + r];
                let diag = data[(m - 1) * stride + r - 1];
                data[m * stride + r] = above.checked_add(diag).ok_or_else(|| {
                    Error::Capacity(format!("C({m}, {r}) exceeds 64 bits"))
                })?;
            }
        }
        Ok(BinomialTable { stride, data })
    }

    #[inline]
    pub fn get(&self, m: u32, r: u32) -> u64 {
        self.data[m as usize * self.stride + r as usize]
    }
}

/// Precomputed ranking machinery for the j-sets and k-sets of one `(n, k, j)`.
#[derive(Clone, Debug)]
pub struct Universe {
    pub n: u32,
    pub k: u32,
    pub j: u32,
    pub num_jsets: u64,
    pub num_ksets: u64,
    table: BinomialTable,
    /// Bitmasks over positions `0..k` selecting each j-subset of a k-set.
    patterns: Vec<u32>,
}

impl Universe {
    pub fn new(n: u32, k: u32, j: u32) -> Result<Self> {
        if !(1 <= j && j < k && k <= n) {
            return Err(Error::Validation(format!("need 1 <= j < k <= n, got n={n} k={k} j={j}")));
        }
        if k > 31 {
            return Err(Error::Capacity(format!("edge arity k = {k} above 31")));
        }
        let table = BinomialTable::new(n, k)?;
        let mut patterns = Vec::new();
        for_each_combination(k, j, |idx| {
            patterns.push(idx.iter().fold(0u32, |m, &i| m | (1 << i)));
        });
        Ok(Universe {
            n,
            k,
            j,
            num_jsets: table.get(n, j),
            num_ksets: table.get(n, k),
            table,
            patterns,
        })
    }

    pub fn from_params(params: &Params) -> Result<Self> {
        Universe::new(params.n, params.k, params.j)
    }

    #[inline]
    pub fn binom(&self, m: u32, r: u32) -> u64 {
        self.table.get(m, r)
    }

    /// Number of subsets of size `r <= k`.
    pub fn num_sets(&self, r: u32) -> u64 {
        self.table.get(self.n, r)
    }

    pub fn cconst(&self) -> u64 {
        self.patterns.len() as u64 - 1
    }

    /// j-subset position masks of a k-set, in colexicographic order.
    pub fn jsubset_patterns(&self) -> &[u32] {
        &self.patterns
    }

    /// Rank of a sorted vertex list of size `<= k`; no validation.
    #[inline]
    pub fn rank(&self, set: &[u32]) -> u64 {
        set.iter()
            .enumerate()
            .map(|(i, &v)| self.table.get(v, i as u32 + 1))
            .sum()
    }

    /// Rank of the sub-list of `set` selected by the position bitmask `mask`.
    #[inline]
    pub fn rank_masked(&self, set: &[u32], mask: u32) -> u64 {
        let mut rank = 0;
        let mut i = 1;
        let mut bits = mask;
        while bits != 0 {
            let pos = bits.trailing_zeros();
            rank += self.table.get(set[pos as usize], i);
            i += 1;
            bits &= bits - 1;
        }
        rank
    }

    /// Writes the `r` vertices of the subset with the given rank into `out`.
    pub fn unrank_into(&self, mut rank: u64, r: u32, out: &mut Vec<u32>) {
        out.clear();
        out.resize(r as usize, 0);
        let mut hi = self.n;
        for i in (1..=r).rev() {
            let (mut lo, mut top) = (i - 1, hi - 1);
            while lo < top {
                let mid = (lo + top).div_ceil(2);
                if self.table.get(mid, i) <= rank {
                    lo = mid;
                } else {
                    top = mid - 1;
                }
            }
            out[i as usize - 1] = lo;
            rank -= self.table.get(lo, i);
            hi = lo;
        }
    }

    pub fn unrank(&self, rank: u64, r: u32) -> Vec<u32> {
        let mut out = Vec::with_capacity(r as usize);
        self.unrank_into(rank, r, &mut out);
        out
    }

    /// Checks a rank against `C(n, r)`.
    pub fn check_rank(&self, rank: u64, r: u32) -> Result<()> {
        if rank >= self.num_sets(r) {
            return Err(Error::Validation(format!(
                "rank {rank} out of range for {r}-subsets of {} vertices",
                self.n
            )));
        }
        Ok(())
    }

    /// Ranks of every `r`-subset of a sorted vertex list, colexicographic.
    pub fn subset_ranks(&self, set: &[u32], r: u32, out: &mut Vec<u64>) {
        out.clear();
        let mut buf = vec![0u32; r as usize];
        for_each_combination(set.len() as u32, r, |idx| {
            for (b, &x) in buf.iter_mut().zip(idx) {
                *b = set[x as usize];
            }
            out.push(self.rank(&buf));
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Pascal's rule, independent of the multiplicative formula.
    fn pascal(n: usize, r: usize) -> u128 {
        let mut row = vec![1u128];
        for _ in 0..n {
            let mut next = vec![1u128; row.len() + 1];
            for i in 1..row.len() {
                next[i] = row[i - 1] + row[i];
            }
            row = next;
        }
        if r > n { 0 } else { row[r] }
    }

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(5, 2).unwrap(), 10);
        assert_eq!(binomial(7, 0).unwrap(), 1);
        assert_eq!(binomial(0, 0).unwrap(), 1);
        assert_eq!(binomial(3, 5).unwrap(), 0);
        assert_eq!(binomial(52, 5).unwrap(), 2_598_960);
        assert_eq!(pascal(52, 5), 2_598_960);
        for n in 0..60 {
            for r in 0..=n {
                assert_eq!(binomial(n as u64, r as u64).unwrap(), pascal(n, r), "C({n},{r})");
            }
        }
    }

    #[test]
    fn binomial_near_and_past_capacity() {
        // C(130, 65) ~ 9.5e37 fits; the gcd path is exercised on the way.
        assert_eq!(binomial(130, 65).unwrap(), pascal(130, 65));
        assert!(binomial(200, 100).unwrap_err().is_capacity());
        assert!(binomial_u64(100, 50).unwrap_err().is_capacity());
    }

    #[test]
    fn colex_rank_matches_enumeration() {
        // colex order of 2-subsets of [0, 5) enumerated by brute force
        let mut all: Vec<Vec<u32>> = Vec::new();
        for b in 0..5u32 {
            for a in 0..b {
                all.push(vec![a, b]);
            }
        }
        all.sort_by(|x, y| x.iter().rev().cmp(y.iter().rev()));
        let pos = all.iter().position(|s| s == &vec![1, 3]).unwrap();
        assert_eq!(pos, 4);
        assert_eq!(rank_subset(&[1, 3]).unwrap().rank, 4);
        for (i, s) in all.iter().enumerate() {
            assert_eq!(rank_subset(s).unwrap().rank, i as u64);
        }
    }

    #[test]
    fn first_subset_has_rank_zero() {
        for r in 1..6u32 {
            let s: Vec<u32> = (0..r).collect();
            assert_eq!(rank_subset(&s).unwrap().rank, 0);
        }
    }

    #[test]
    fn rank_rejects_bad_input() {
        assert!(matches!(rank_subset(&[3, 1]), Err(Error::Validation(_))));
        assert!(matches!(rank_subset(&[2, 2]), Err(Error::Validation(_))));
        let r = SetRank { size: 2, rank: 10 };
        assert!(unrank_subset(r, 5).is_err());
    }

    #[test]
    fn exhaustive_round_trip_and_monotonicity() {
        let (n, r) = (12u32, 4u32);
        let u = Universe::new(n, r, 1).unwrap();
        let total = binomial(n as u64, r as u64).unwrap() as u64;
        let mut prev: Option<Vec<u32>> = None;
        for rank in 0..total {
            let s = unrank_subset(SetRank { size: r, rank }, n).unwrap();
            assert_eq!(u.unrank(rank, r), s);
            assert_eq!(rank_subset(&s).unwrap().rank, rank);
            assert_eq!(u.rank(&s), rank);
            if let Some(p) = prev {
                // strictly increasing in colex order
                assert!(p.iter().rev().lt(s.iter().rev()));
            }
            prev = Some(s);
        }
    }

    #[test]
    fn sub_jsets_counts() {
        let e = [2u32, 5, 9];
        let subs = sub_jsets(&e, 2).unwrap();
        assert_eq!(subs.len(), 3);
        let expect: Vec<u64> = [[2u32, 5], [2, 9], [5, 9]]
            .iter()
            .map(|s| rank_subset(s).unwrap().rank)
            .collect();
        let mut got: Vec<u64> = subs.iter().map(|s| s.rank).collect();
        got.sort();
        let mut expect = expect;
        expect.sort();
        assert_eq!(got, expect);
        let graph = sub_jsets(&[3, 7], 1).unwrap();
        assert_eq!(graph.iter().map(|s| s.rank).collect::<Vec<_>>(), vec![3, 7]);
        for k in 2..8u32 {
            let e: Vec<u32> = (0..k).map(|x| 3 * x + 1).collect();
            for j in 1..k {
                assert_eq!(sub_jsets(&e, j).unwrap().len() as u128, binomial(k as u64, j as u64).unwrap());
            }
        }
    }

    #[test]
    fn critical_threshold_values() {
        let p = Params::new(100, 2, 1, 0.0).unwrap();
        assert_eq!(critical_p0(&p).unwrap(), 1.0 / 100.0);
        let p = Params::new(10, 3, 2, 0.0).unwrap();
        assert_eq!(critical_p0(&p).unwrap(), 0.05);
        let p = Params::new(10, 3, 1, 0.0).unwrap();
        assert_eq!(critical_p0(&p).unwrap(), 1.0 / 90.0);
        assert_eq!(critical_denominator(&p).unwrap(), 90);
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(10, 2, 2, 0.1).is_err());
        assert!(Params::new(10, 3, 0, 0.1).is_err());
        assert!(Params::new(2, 3, 1, 0.1).is_err());
        assert!(Params::new(10, 3, 1, 1.5).is_err());
        let p = Params::from_eps(500, 3, 2, 0.2).unwrap();
        assert!((p.p - 1.2 / 1000.0).abs() < 1e-18);
        assert_eq!(p.cconst(), 2);
    }

    #[test]
    fn masked_rank_matches_subset_rank() {
        let u = Universe::new(20, 4, 2).unwrap();
        let k = [1u32, 6, 11, 17];
        let mut ranks = Vec::new();
        u.subset_ranks(&k, 2, &mut ranks);
        let masked: Vec<u64> = u.jsubset_patterns().iter().map(|&m| u.rank_masked(&k, m)).collect();
        assert_eq!(ranks, masked);
        assert_eq!(u.cconst(), 5);
    }

    #[test]
    fn delta_ell_grows_geometrically() {
        let t = ToleranceSchedule::for_eps(0.2, 1_000_000);
        assert!((t.delta_ell(0) - 0.05).abs() < 1e-15);
        assert!((t.delta_ell(2) - 3.2).abs() < 1e-12);
        assert!(t.delta_ell(1) > t.delta_ell(0));
        assert!(t.hierarchy_warnings(1_000_000, 0.2, 2).is_empty());
        // at desk scale rho1 = eps^2 sits below n^(-1/2 + delta)
        let small = ToleranceSchedule::for_eps(0.2, 1000);
        assert_eq!(small.hierarchy_warnings(1000, 0.2, 2).len(), 1);
    }
}
