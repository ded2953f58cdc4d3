//! Galton-Watson processes whose individuals have `litter * Bi(trials, prob)`
//! children, with the survival-probability solver and the dual process.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial_u64, Params};
use crate::sampling::trial_rng;
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-12;
const MAX_BISECTIONS: u32 = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffspringLaw {
    pub litter: u64,
    pub trials: u64,
    pub prob: f64,
}

impl OffspringLaw {
    pub fn new(litter: u64, trials: u64, prob: f64) -> Result<Self> {
        if litter == 0 {
            return Err(Error::Validation("litter size must be positive".into()));
        }
        if !(0.0..=1.0).contains(&prob) {
            return Err(Error::Validation(format!("probability {prob} outside [0, 1]")));
        }
        Ok(OffspringLaw { litter, trials, prob })
    }

    /// `T_≥`: `C * Bi(C(n, k-j), p)`.
    pub fn upper(params: &Params) -> Result<Self> {
        OffspringLaw::new(params.cconst(), params.branching_trials()?, params.p)
    }

    /// `T_<`: `C * Bi(floor((1 - gamma) C(n, k-j)), p)`.
    pub fn lower(params: &Params, gamma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Validation(format!("gamma = {gamma} outside [0, 1)")));
        }
        let n = binomial_u64(params.n as u64, (params.k - params.j) as u64)?;
        OffspringLaw::new(params.cconst(), ((1.0 - gamma) * n as f64).floor() as u64, params.p)
    }

    /// The dual law: same litter and trials, success probability `p̂`.
    pub fn dual(&self, rho: f64) -> Result<Self> {
        OffspringLaw::new(self.litter, self.trials, dual_edge_probability(self.prob, rho, self.litter))
    }

    pub fn mean(&self) -> f64 {
        self.litter as f64 * self.trials as f64 * self.prob
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Died,
    HitSizeCap,
    HitGenerationCap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub generation_sizes: Vec<u64>,
    pub total: u64,
    pub outcome: Outcome,
}

impl Trajectory {
    /// Did not die before a cap: the survival proxy.
    pub fn survived(&self) -> bool {
        self.outcome != Outcome::Died
    }
}

fn draw(trials: u64, prob: f64, rng: &mut impl Rng) -> u64 {
    if trials == 0 || prob <= 0.0 {
        return 0;
    }
    if prob >= 1.0 {
        return trials;
    }
    Binomial::new(trials, prob).expect("validated probability").sample(rng)
}

/// Runs one process from a single individual until extinction, until the
/// total reaches `size_cap`, or until `generation_cap` generations after the root.
pub fn simulate_with_rng(
    law: &OffspringLaw,
    size_cap: u64,
    generation_cap: usize,
    rng: &mut impl Rng,
) -> Trajectory {
    let mut sizes = vec![1u64];
    let mut total = 1u64;
    let mut x = 1u64;
    let outcome = loop {
        if total >= size_cap {
            break Outcome::HitSizeCap;
        }
        if sizes.len() > generation_cap {
            break Outcome::HitGenerationCap;
        }
        // x individuals with one law: a single Bi(x * trials, prob) draw
        let trials = x.saturating_mul(law.trials);
        x = law.litter * draw(trials, law.prob, rng);
        if x == 0 {
            break Outcome::Died;
        }
        sizes.push(x);
        total += x;
    };
    Trajectory { generation_sizes: sizes, total, outcome }
}

pub fn simulate(law: &OffspringLaw, size_cap: u64, generation_cap: usize, seed: u64) -> Trajectory {
    simulate_with_rng(law, size_cap, generation_cap, &mut trial_rng(seed))
}

/// Generation sizes of `T_<` and `T_≥` driven by shared draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledTrajectory {
    pub upper: Trajectory,
    pub lower: Vec<u64>,
}

/// Simulates `T_≥` with law `upper` and `T_<` with `lower_trials <= upper.trials`
/// on the same randomness. Lower individuals are a subset of upper ones and use
/// the first `lower_trials` of their trials, so the lower sizes never exceed the
/// upper sizes. Caps apply to the upper process.
pub fn simulate_coupled(
    upper: &OffspringLaw,
    lower_trials: u64,
    size_cap: u64,
    generation_cap: usize,
    seed: u64,
) -> Result<CoupledTrajectory> {
    if lower_trials > upper.trials {
        return Err(Error::Validation(format!(
            "lower trials {lower_trials} exceed upper trials {}",
            upper.trials
        )));
    }
    let mut rng = trial_rng(seed);
    let (mut xu, mut xl) = (1u64, 1u64);
    let mut up = vec![1u64];
    let mut low = vec![1u64];
    let mut total = 1u64;
    let outcome = loop {
        if total >= size_cap {
            break Outcome::HitSizeCap;
        }
        if up.len() > generation_cap {
            break Outcome::HitGenerationCap;
        }
        let a = draw(xl.saturating_mul(lower_trials), upper.prob, &mut rng);
        let b = draw(xl.saturating_mul(upper.trials - lower_trials), upper.prob, &mut rng);
        let c = draw((xu - xl).saturating_mul(upper.trials), upper.prob, &mut rng);
        xu = upper.litter * (a + b + c);
        xl = upper.litter * a;
        if xu == 0 {
            break Outcome::Died;
        }
        up.push(xu);
        low.push(xl);
        total += xu;
    };
    Ok(CoupledTrajectory {
        upper: Trajectory { generation_sizes: up, total, outcome },
        lower: low,
    })
}

/// Survival probability `ρ`. With `ρ0 = 1 - (1-ρ)^litter` the extinction
/// equation reads `1 - ρ0 = (1 - prob ρ0)^(litter trials)`; its positive root
/// is found by bisection. Zero when the mean is at most one.
pub fn survival_probability(law: &OffspringLaw, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Validation(format!("tolerance must be positive, got {tol}")));
    }
    if law.mean() <= 1.0 {
        return Ok(0.0);
    }
    let exponent = law.litter as f64 * law.trials as f64;
    // positive on (0, root), negative beyond
    let g = |r0: f64| -r0 - (exponent * (-law.prob * r0).ln_1p()).exp_m1();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut iterations = 0;
    while hi - lo > tol {
        if iterations == MAX_BISECTIONS {
            return Err(Error::Numerical(format!(
                "survival bisection did not reach tolerance {tol} in {MAX_BISECTIONS} steps"
            )));
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let rho0 = 0.5 * (lo + hi);
    Ok(-((-rho0).ln_1p() / law.litter as f64).exp_m1())
}

/// Success probability of the process conditioned on extinction:
/// `p̂ = (1-ρ)^C p / (1 - p (1 - (1-ρ)^C))`.
pub fn dual_edge_probability(p: f64, rho: f64, cconst: u64) -> f64 {
    let q = (1.0 - rho).powi(cconst as i32);
    q * p / (1.0 - p * (1.0 - q))
}

/// Expected total size `1 / (1 - μ̂)` of a subcritical process.
pub fn dual_expected_total(dual: &OffspringLaw) -> Result<f64> {
    let mu = dual.mean();
    if mu >= 1.0 {
        return Err(Error::Domain(format!("dual mean {mu} is not below 1")));
    }
    Ok(1.0 / (1.0 - mu))
}

/// `P(|T| >= threshold) <= ρ + E|T̂| / threshold`, capped at one.
pub fn large_total_tail(law: &OffspringLaw, threshold: f64) -> Result<f64> {
    if law.mean() <= 1.0 {
        return Err(Error::Domain(format!("law mean {} is not above 1", law.mean())));
    }
    if !(threshold >= 1.0) {
        return Err(Error::Validation(format!("threshold {threshold} below 1")));
    }
    let rho = survival_probability(law, DEFAULT_TOL)?;
    let dual = law.dual(rho)?;
    Ok((rho + dual_expected_total(&dual)? / threshold).min(1.0))
}
