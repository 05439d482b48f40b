//! Permutation-based inference for the dominance statistics.
//!
//! Group labels are exchangeable under the null hypothesis, so the
//! distribution of the statistic is estimated by reassigning the pooled
//! observations: either over every split of the pooled multiset (exact
//! mode) or over seeded uniform draws (Monte-Carlo mode). The constraint
//! system and the separation margin `ξ*` depend only on the pooled point
//! set and are computed once; each resample costs one program per
//! regularization strength, and the whole contamination grid comes from
//! the exact shift of the statistics, with no further programs.
//!
//! The decision rule compares the observed lower envelope against the
//! resample distribution of upper envelopes; ties count toward
//! non-rejection. Index draws are generated sequentially from the seed
//! before any parallel work, and parallel resamples solve against an
//! immutable engine snapshot, so reports are identical whatever the
//! worker count.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::ConstraintSet;
use crate::lp::{EmpiricalPair, LpEngine, LpError};
use crate::model::{Point, PooledSample};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Resamples evaluated with the mutable engine before the row pool is
/// frozen for the parallel phase.
const PRIME_DRAWS: usize = 16;
/// Largest pooled observation count admitted to exact enumeration; keeps
/// split weights and totals exactly representable.
const EXACT_MAX_OBS: u64 = 40;
/// Largest number of distinct count splits enumerated in exact mode.
const EXACT_MAX_SPLITS: usize = 2_000_000;

#[derive(Debug, Error)]
pub enum TestError {
    #[error(
        "resample budget too small: {resamples} Monte-Carlo draws cannot reject at level {alpha}"
    )]
    ResampleBudgetTooSmall { resamples: u64, alpha: f64 },
    #[error("exact enumeration too large: {0}")]
    ExactEnumerationTooLarge(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// How the resample distribution is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleMode {
    /// Every split of the pooled multiset, weighted by multiplicity.
    Exact,
    /// Seeded uniform draws of index sets, with replacement across draws.
    MonteCarlo { resamples: u64 },
}

/// Validated test configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    epsilons: Vec<f64>,
    gammas: Vec<f64>,
    mode: ResampleMode,
    alpha: f64,
    seed: u64,
    reversed: bool,
}

fn normalize_grid(mut grid: Vec<f64>, what: &str) -> Result<Vec<f64>, TestError> {
    if grid.is_empty() {
        return Err(TestError::InvalidConfig(format!("{} grid is empty", what)));
    }
    for &g in &grid {
        if !(0.0..=1.0).contains(&g) {
            return Err(TestError::InvalidConfig(format!("{} = {} outside [0, 1]", what, g)));
        }
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    Ok(grid)
}

impl TestConfig {
    pub fn new(
        epsilons: Vec<f64>,
        gammas: Vec<f64>,
        mode: ResampleMode,
        alpha: f64,
        seed: u64,
    ) -> Result<Self, TestError> {
        let epsilons = normalize_grid(epsilons, "epsilon")?;
        let gammas = normalize_grid(gammas, "gamma")?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(TestError::InvalidConfig(format!("alpha = {} outside (0, 1)", alpha)));
        }
        if let ResampleMode::MonteCarlo { resamples } = mode {
            if resamples == 0 {
                return Err(TestError::InvalidConfig("resamples must be positive".into()));
            }
        }
        Ok(Self { epsilons, gammas, mode, alpha, seed, reversed: false })
    }

    /// Marks the configuration as a reversed-roles run.
    pub fn reversed(mut self, reversed: bool) -> Self {
        self.reversed = reversed;
        self
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn mode(&self) -> ResampleMode {
        self.mode
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }
}

/// Resample distribution of one regularization strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonBlock {
    pub epsilon: f64,
    /// Observed statistic under the original group assignment.
    pub d_observed: f64,
    /// Plain resample statistics (`γ = 0`).
    pub values: Vec<f64>,
    /// Split multiplicities in exact mode; absent for Monte-Carlo draws.
    pub weights: Option<Vec<u64>>,
}

/// Decision entry for one `(ε, γ)` combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCell {
    pub epsilon: f64,
    pub gamma: f64,
    /// Observed lower envelope `(1-γ)·d_obs - γ`.
    pub observed_lower: f64,
    pub p_value: f64,
    pub reject: bool,
}

/// Full outcome of one permutation test run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub n: u64,
    pub m: u64,
    pub s: usize,
    pub xi_star: f64,
    pub seed: u64,
    pub mode: ResampleMode,
    pub alpha: f64,
    pub reversed: bool,
    pub bounds_synthesized: bool,
    pub lower_bound: Point,
    pub upper_bound: Point,
    pub epsilons: Vec<f64>,
    pub gammas: Vec<f64>,
    /// Interpretation note attached to reversed-roles runs.
    pub note: Option<String>,
    pub blocks: Vec<EpsilonBlock>,
    pub cells: Vec<TestCell>,
}

impl TestReport {
    /// Number of resamples behind each block (draws or distinct splits).
    pub fn resample_count(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.values.len())
    }

    /// The γ-shifted upper-envelope statistics of one block.
    pub fn upper_statistics(&self, block: usize, gamma: f64) -> Vec<f64> {
        self.blocks[block]
            .values
            .iter()
            .map(|&d| (1.0 - gamma) * d + gamma)
            .collect()
    }

    pub fn cell(&self, epsilon: f64, gamma: f64) -> Option<&TestCell> {
        self.cells
            .iter()
            .find(|c| c.epsilon == epsilon && c.gamma == gamma)
    }
}

fn binom(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

struct Draws {
    /// X-count vector per resample.
    counts: Vec<Vec<u64>>,
    /// Split multiplicities (exact mode only).
    weights: Option<Vec<u64>>,
    /// Total mass: number of index sets in exact mode, draw count otherwise.
    total: u64,
}

fn enumerate_splits(tot: &[u64], n: u64) -> Result<Draws, TestError> {
    let ntot: u64 = tot.iter().sum();
    if ntot > EXACT_MAX_OBS {
        return Err(TestError::ExactEnumerationTooLarge(format!(
            "{} pooled observations exceed the exact-mode limit of {}",
            ntot, EXACT_MAX_OBS
        )));
    }
    let s = tot.len();
    let mut suffix = vec![0u64; s + 1];
    for i in (0..s).rev() {
        suffix[i] = suffix[i + 1] + tot[i];
    }
    let mut counts = Vec::new();
    let mut weights = Vec::new();
    let mut current = vec![0u64; s];
    fn rec(
        i: usize,
        rem: u64,
        weight: u64,
        tot: &[u64],
        suffix: &[u64],
        current: &mut Vec<u64>,
        counts: &mut Vec<Vec<u64>>,
        weights: &mut Vec<u64>,
    ) -> Result<(), TestError> {
        if i == tot.len() {
            debug_assert_eq!(rem, 0);
            if counts.len() >= EXACT_MAX_SPLITS {
                return Err(TestError::ExactEnumerationTooLarge(format!(
                    "more than {} distinct splits",
                    EXACT_MAX_SPLITS
                )));
            }
            counts.push(current.clone());
            weights.push(weight);
            return Ok(());
        }
        let lo = rem.saturating_sub(suffix[i + 1]);
        let hi = tot[i].min(rem);
        for c in lo..=hi {
            current[i] = c;
            rec(i + 1, rem - c, weight * binom(tot[i], c), tot, suffix, current, counts, weights)?;
        }
        current[i] = 0;
        Ok(())
    }
    rec(0, n, 1, tot, &suffix, &mut current, &mut counts, &mut weights)?;
    let total: u64 = weights.iter().sum();
    debug_assert_eq!(total, binom(ntot, n));
    Ok(Draws { counts, weights: Some(weights), total })
}

fn monte_carlo_draws(tot: &[u64], n: u64, resamples: u64, seed: u64) -> Draws {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    // canonical observation vector: point index repeated by pooled count,
    // ascending, so draws are invariant to input row order
    let mut obs: Vec<u32> = Vec::new();
    for (idx, &t) in tot.iter().enumerate() {
        for _ in 0..t {
            obs.push(idx as u32);
        }
    }
    let ntot = obs.len();
    let mut counts = Vec::with_capacity(resamples as usize);
    for _ in 0..resamples {
        let mut cx = vec![0u64; tot.len()];
        for pos in rand::seq::index::sample(&mut rng, ntot, n as usize) {
            cx[obs[pos] as usize] += 1;
        }
        counts.push(cx);
    }
    Draws { counts, weights: None, total: resamples }
}

fn resample_objective(cx: &[u64], tot: &[u64], n: u64, m: u64) -> Vec<f64> {
    cx.iter()
        .zip(tot)
        .map(|(&x, &t)| x as f64 / n as f64 - (t - x) as f64 / m as f64)
        .collect()
}

/// Statistics within this distance count as tied; the program optima
/// carry solver noise in the last bits and ties must favour
/// non-rejection.
const TIE_TOL: f64 = 1e-9;

/// Share of resample upper envelopes at or above the observed lower
/// envelope, with the add-one correction in Monte-Carlo mode.
fn p_value(
    values: &[f64],
    weights: Option<&[u64]>,
    total: u64,
    d_obs: f64,
    gamma: f64,
) -> f64 {
    let obs_lower = (1.0 - gamma) * d_obs - gamma;
    let hits: u64 = values
        .iter()
        .enumerate()
        .filter(|&(_, &d)| (1.0 - gamma) * d + gamma >= obs_lower - TIE_TOL)
        .map(|(i, _)| weights.map_or(1, |w| w[i]))
        .sum();
    match weights {
        Some(_) => hits as f64 / total as f64,
        None => (1 + hits) as f64 / (1 + total) as f64,
    }
}

/// Runs the permutation test over the configured `(ε, γ)` grids.
///
/// One program is solved per resample and per `ε` at `γ = 0`; every
/// contamination column is derived by shifting. The observed statistic
/// enters as its lower envelope, the resamples as upper envelopes, which
/// makes the `γ = 0` column the plain unrobustified test.
pub fn run_test(
    pooled: &PooledSample,
    cs: &ConstraintSet,
    config: &TestConfig,
) -> Result<TestReport, TestError> {
    if cs.s() != pooled.s() {
        return Err(TestError::InvalidConfig(format!(
            "constraint system has {} points, pooled sample has {}",
            cs.s(),
            pooled.s()
        )));
    }
    let swapped;
    let data = if config.reversed {
        swapped = pooled.swap_groups();
        &swapped
    } else {
        pooled
    };

    if let ResampleMode::MonteCarlo { resamples } = config.mode {
        // smallest attainable p-value is 1/(1+N)
        if (1 + resamples) as f64 * config.alpha < 1.0 {
            return Err(TestError::ResampleBudgetTooSmall {
                resamples,
                alpha: config.alpha,
            });
        }
    }

    let (n, m) = (data.n(), data.m());
    let tot: Vec<u64> = data
        .count_x()
        .iter()
        .zip(data.count_y())
        .map(|(&a, &b)| a + b)
        .collect();

    let draws = match config.mode {
        ResampleMode::Exact => enumerate_splits(&tot, n)?,
        ResampleMode::MonteCarlo { resamples } => {
            monte_carlo_draws(&tot, n, resamples, config.seed)
        }
    };

    let mut engine = LpEngine::new(cs);
    let xi_star = engine.xi_star()?;
    let observed = EmpiricalPair::from_pooled(data);
    let mut d_obs = Vec::with_capacity(config.epsilons.len());
    for &eps in &config.epsilons {
        d_obs.push(engine.statistic(&observed, eps)?);
    }

    // deterministic prefix primes the row pool before the pool freezes
    let prime = PRIME_DRAWS.min(draws.counts.len());
    let mut stats: Vec<Vec<f64>> = Vec::with_capacity(draws.counts.len());
    for cx in &draws.counts[..prime] {
        let obj = resample_objective(cx, &tot, n, m);
        let mut row = Vec::with_capacity(config.epsilons.len());
        for &eps in &config.epsilons {
            row.push(engine.statistic_for_objective(&obj, eps)?);
        }
        stats.push(row);
    }

    let frozen = engine.freeze();
    let solve_rest = |cx: &Vec<u64>| -> Result<Vec<f64>, TestError> {
        let obj = resample_objective(cx, &tot, n, m);
        let mut row = Vec::with_capacity(config.epsilons.len());
        for &eps in &config.epsilons {
            row.push(frozen.statistic_for_objective(&obj, eps)?);
        }
        Ok(row)
    };
    #[cfg(feature = "parallel")]
    let rest: Result<Vec<Vec<f64>>, TestError> =
        draws.counts[prime..].par_iter().map(solve_rest).collect();
    #[cfg(not(feature = "parallel"))]
    let rest: Result<Vec<Vec<f64>>, TestError> =
        draws.counts[prime..].iter().map(solve_rest).collect();
    stats.extend(rest?);

    let blocks: Vec<EpsilonBlock> = config
        .epsilons
        .iter()
        .enumerate()
        .map(|(e, &epsilon)| EpsilonBlock {
            epsilon,
            d_observed: d_obs[e],
            values: stats.iter().map(|row| row[e]).collect(),
            weights: draws.weights.clone(),
        })
        .collect();

    let mut cells = Vec::with_capacity(blocks.len() * config.gammas.len());
    for block in &blocks {
        for &gamma in &config.gammas {
            let p = p_value(
                &block.values,
                block.weights.as_deref(),
                draws.total,
                block.d_observed,
                gamma,
            );
            cells.push(TestCell {
                epsilon: block.epsilon,
                gamma,
                observed_lower: (1.0 - gamma) * block.d_observed - gamma,
                p_value: p,
                reject: p <= config.alpha,
            });
        }
    }

    let note = config.reversed.then(|| {
        "Reversed-roles run: a high p-value here provides no evidence of incomparability; \
         combined with a forward rejection it supports dominance of the original first group."
            .to_string()
    });

    Ok(TestReport {
        n,
        m,
        s: data.s(),
        xi_star,
        seed: config.seed,
        mode: config.mode,
        alpha: config.alpha,
        reversed: config.reversed,
        bounds_synthesized: data.bounds_synthesized(),
        lower_bound: data.lower_bound().clone(),
        upper_bound: data.upper_bound().clone(),
        epsilons: config.epsilons.clone(),
        gammas: config.gammas.clone(),
        note,
        blocks,
        cells,
    })
}

/// Runs the test with the group roles exchanged.
pub fn reversed_test(
    pooled: &PooledSample,
    cs: &ConstraintSet,
    config: &TestConfig,
) -> Result<TestReport, TestError> {
    run_test(pooled, cs, &config.clone().reversed(true))
}

/// Point on a p-value-versus-contamination curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub epsilon: f64,
    pub gamma: f64,
    pub p_value: f64,
    pub reject: bool,
}

/// Recomputes p-values on a contamination grid from the stored resample
/// statistics alone; no further programs are solved. For each `ε` the
/// curve is nondecreasing in `γ`.
pub fn pvalue_curve(report: &TestReport, gammas: &[f64]) -> Result<Vec<CurvePoint>, TestError> {
    let gammas = normalize_grid(gammas.to_vec(), "gamma")?;
    let total = match report.mode {
        ResampleMode::Exact => report.blocks[0]
            .weights
            .as_ref()
            .map(|w| w.iter().sum())
            .unwrap_or(0),
        ResampleMode::MonteCarlo { resamples } => resamples,
    };
    let mut out = Vec::with_capacity(report.blocks.len() * gammas.len());
    for block in &report.blocks {
        for &gamma in &gammas {
            let p = p_value(
                &block.values,
                block.weights.as_deref(),
                total,
                block.d_observed,
                gamma,
            );
            out.push(CurvePoint {
                epsilon: block.epsilon,
                gamma,
                p_value: p,
                reject: p <= report.alpha,
            });
        }
    }
    Ok(out)
}
