//! The linear programs behind the dominance statistics.
//!
//! Three programs run against one constraint system:
//!
//! * the largest uniform separation margin `ξ*` achievable by a
//!   normalized utility assignment ([`solve_xi_star`]),
//! * the statistic `d^ε` — the least expectation difference over
//!   utilities separating strict relations by at least `ε·ξ*`
//!   ([`solve_statistic`]), and
//! * its lower/upper envelopes over credal neighbourhoods, either by
//!   enumerating extreme-point pairs ([`solve_robust_enumeration`]) or,
//!   for the contamination model, through an exact shift
//!   ([`solve_gamma_shortcut`]).
//!
//! Constraint systems can carry hundreds of thousands of
//! exchange-intensity rows of which only a handful bind at any optimum.
//! The engine therefore solves a small master program over a working set
//! and generates violated rows on demand, dropping slack rows so the
//! master stays near the size of the binding set. Per regularization
//! strength the engine keeps the final working set and basis; resample
//! objectives re-solve warmly from that basis with the primal simplex
//! and fall back to generation only when the optimum moves off the kept
//! rows. A [`FrozenEngine`] snapshot runs the same warm solve without
//! mutating shared state, so batches of resample statistics come out
//! identical whatever the evaluation order or thread count.

use thiserror::Error;

use crate::constraints::ConstraintSet;
use crate::model::PooledSample;
use crate::simplex::{DualSimplex, LpProblem, LpRow, SolveStatus};

pub use crate::simplex::{SimplexError, SolveOutcome};

use crate::simplex::Tableau;

/// Slack below which a generated row counts as violated; kept above the
/// solver's feasibility tolerance so enforced rows never re-qualify.
const ROW_TOL: f64 = 3e-9;
/// Working-set rows with more slack than this are dropped between
/// generation rounds.
const KEEP_TOL: f64 = 1e-7;
/// Positive margin required of `ξ*` before a system counts as consistent.
const XI_TOL: f64 = 1e-10;
/// Most-violated rows admitted to the master program per round.
const BATCH: usize = 128;
/// Generation rounds after which deletion stops, forcing termination.
const MAX_DELETING_ROUNDS: usize = 50;

#[derive(Debug, Error)]
pub enum LpError {
    #[error(
        "inconsistent preference system: no utility assignment separates its strict relations \
         by a numerically positive margin (cardinal values off an exactly representable grid \
         can produce exchanges that differ only by floating-point noise)"
    )]
    InconsistentSystem,
    #[error("statistic program is infeasible")]
    Infeasible,
    #[error("credal set has no extreme points")]
    EmptyCredalSet,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Solver(#[from] SimplexError),
}

/// A pair of empirical weight vectors over the pooled points.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalPair {
    wx: Vec<f64>,
    wy: Vec<f64>,
}

fn check_weight_vector(w: &[f64], what: &str) -> Result<(), LpError> {
    if w.is_empty() {
        return Err(LpError::InvalidWeights(format!("{} is empty", what)));
    }
    let mut sum = 0.0;
    for (i, &x) in w.iter().enumerate() {
        if !x.is_finite() || x < 0.0 {
            return Err(LpError::InvalidWeights(format!("{}[{}] = {}", what, i, x)));
        }
        sum += x;
    }
    if (sum - 1.0).abs() > 1e-12 {
        return Err(LpError::InvalidWeights(format!("{} sums to {}", what, sum)));
    }
    Ok(())
}

impl EmpiricalPair {
    pub fn new(wx: Vec<f64>, wy: Vec<f64>) -> Result<Self, LpError> {
        check_weight_vector(&wx, "wx")?;
        check_weight_vector(&wy, "wy")?;
        if wx.len() != wy.len() {
            return Err(LpError::InvalidWeights(format!(
                "wx has {} entries, wy has {}",
                wx.len(),
                wy.len()
            )));
        }
        Ok(Self { wx, wy })
    }

    /// Observed group weights of a pooled sample.
    pub fn from_pooled(pooled: &PooledSample) -> Self {
        Self { wx: pooled.weights_x(), wy: pooled.weights_y() }
    }

    pub fn wx(&self) -> &[f64] {
        &self.wx
    }

    pub fn wy(&self) -> &[f64] {
        &self.wy
    }

    /// Objective coefficients `wx - wy`.
    pub fn objective(&self) -> Vec<f64> {
        self.wx.iter().zip(&self.wy).map(|(a, b)| a - b).collect()
    }
}

/// Extreme points of the contamination neighbourhood around `weights`:
/// one Dirac contamination per pooled point. For `gamma > 0` these are
/// exactly the extreme points of `{π : π ≥ (1-γ)·weights}` over the
/// pooled ground set; at `gamma = 0` they all collapse onto `weights`.
pub fn gamma_extreme_points(weights: &[f64], gamma: f64) -> Vec<Vec<f64>> {
    (0..weights.len())
        .map(|i| {
            let mut w: Vec<f64> = weights.iter().map(|&x| (1.0 - gamma) * x).collect();
            w[i] += gamma;
            w
        })
        .collect()
}

fn check_unit_interval(x: f64, what: &str) -> Result<(), LpError> {
    if !(0.0..=1.0).contains(&x) || !x.is_finite() {
        return Err(LpError::InvalidParameter(format!("{} = {} outside [0, 1]", what, x)));
    }
    Ok(())
}

/// Keeps one independent representative per linear relation among the
/// equality rows; dependent rows are implied and never enter a master
/// program.
fn independent_equalities(cs: &ConstraintSet, candidates: &[usize]) -> Vec<usize> {
    let s = cs.s();
    let mut pivots: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut kept = Vec::new();
    for &ri in candidates {
        let mut dense = vec![0.0; s];
        for &(j, c) in cs.rows()[ri].terms() {
            dense[j as usize] += c as f64;
        }
        for (pc, prow) in &pivots {
            let f = dense[*pc];
            if f != 0.0 {
                for (d, p) in dense.iter_mut().zip(prow) {
                    *d -= f * p;
                }
            }
        }
        let (pc, mag) = dense
            .iter()
            .enumerate()
            .map(|(j, x)| (j, x.abs()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if mag > 1e-9 {
            let inv = 1.0 / dense[pc];
            for d in dense.iter_mut() {
                *d *= inv;
            }
            pivots.push((pc, dense));
            kept.push(ri);
        }
    }
    kept
}

/// Kept working set and optimal basis of one statistic program family.
#[derive(Debug, Clone)]
struct Slot {
    xi0: f64,
    wset: Vec<usize>,
    tableau: Tableau,
}

enum Goal<'a> {
    /// maximize the separation margin
    MaxMargin,
    /// minimize `obj · v` at the given fixed margin
    Minimize(&'a [f64], f64),
}

struct Cold {
    value: f64,
    wset: Vec<usize>,
    tableau: Tableau,
}

/// Shared solving context: structure of the system plus tolerances.
struct Ctx<'a> {
    cs: &'a ConstraintSet,
    eq_rows: &'a [usize],
    strict_rows: &'a [usize],
    cfg: &'a DualSimplex,
}

impl Ctx<'_> {
    fn assemble(&self, goal: &Goal, wset: &[usize]) -> LpProblem {
        let s = self.cs.s();
        let with_xi = matches!(goal, Goal::MaxMargin);
        let num_vars = if with_xi { s + 1 } else { s };

        let mut bounds = vec![(0.0, 1.0); num_vars];
        bounds[0] = (0.0, 0.0);
        bounds[1] = (1.0, 1.0);

        let objective = match goal {
            Goal::MaxMargin => {
                let mut o = vec![0.0; num_vars];
                o[s] = -1.0;
                o
            }
            Goal::Minimize(obj, _) => obj.to_vec(),
        };

        let rows = self.cs.rows();
        let make_row = |idx: usize| -> LpRow {
            let row = &rows[idx];
            let mut terms: Vec<(u32, f64)> =
                row.terms().iter().map(|&(j, c)| (j, c as f64)).collect();
            if row.is_equality() {
                LpRow { terms, lower: 0.0, upper: 0.0 }
            } else {
                match goal {
                    Goal::MaxMargin => {
                        terms.push((s as u32, -1.0));
                        LpRow { terms, lower: 0.0, upper: f64::INFINITY }
                    }
                    Goal::Minimize(_, xi0) => {
                        LpRow { terms, lower: *xi0, upper: f64::INFINITY }
                    }
                }
            }
        };

        let mut lp_rows: Vec<LpRow> = self.eq_rows.iter().map(|&ri| make_row(ri)).collect();
        lp_rows.extend(wset.iter().map(|&k| make_row(self.strict_rows[k])));
        LpProblem { num_vars, objective, bounds, rows: lp_rows }
    }

    /// All strict rows violated at `v` for the given required margin,
    /// as `(slack, index into strict_rows)`.
    fn violations(&self, v: &[f64], need: f64) -> Vec<(f64, usize)> {
        let rows = self.cs.rows();
        let mut out = Vec::new();
        for (k, &ri) in self.strict_rows.iter().enumerate() {
            let slack = rows[ri].eval(v) - need;
            if slack < -ROW_TOL {
                out.push((slack, k));
            }
        }
        out
    }

    /// Row generation: solve over the working set, admit the most
    /// violated rows, repeat until the optimum is feasible for the full
    /// system. Newly admitted rows extend the solved tableau in place,
    /// so each round costs a handful of dual pivots. Statistic programs
    /// also drop rows slack at the optimum (rebuilding the tableau) to
    /// keep masters near the binding size; the margin program cycles
    /// under deletion, so it only grows.
    fn cold(&self, goal: &Goal, seed: &[usize]) -> Result<Cold, LpError> {
        let s = self.cs.s();
        let mut wset: Vec<usize> = seed.to_vec();
        wset.sort_unstable();
        wset.dedup();

        let mut tab: Option<Tableau> = None;
        let mut round = 0usize;
        loop {
            round += 1;
            if round > 10_000 {
                return Err(LpError::Solver(SimplexError::Numerical(
                    "row generation failed to converge".into(),
                )));
            }
            let t = match tab.as_mut() {
                Some(t) => t,
                None => {
                    let prob = self.assemble(goal, &wset);
                    tab.insert(Tableau::new(&prob))
                }
            };
            match t.dual_solve(self.cfg)? {
                SolveStatus::Optimal => {}
                SolveStatus::Infeasible => return Err(LpError::Infeasible),
                SolveStatus::Unbounded => {
                    return Err(LpError::Solver(SimplexError::Numerical(
                        "boxed program reported unbounded".into(),
                    )))
                }
            }
            let v = t.solution().to_vec();
            let need = match goal {
                Goal::MaxMargin => v[s],
                Goal::Minimize(_, xi0) => *xi0,
            };
            let mut violated = self.violations(&v, need);
            if std::env::var_os("GSD_LP_TRACE").is_some() {
                eprintln!(
                    "round {}: wset {}, violated {}, need {}",
                    round,
                    wset.len(),
                    violated.len(),
                    need
                );
            }
            if violated.is_empty() {
                let value = match goal {
                    Goal::MaxMargin => v[s],
                    Goal::Minimize(obj, _) => obj.iter().zip(&v).map(|(c, x)| c * x).sum(),
                };
                return Ok(Cold { value, wset, tableau: tab.take().unwrap() });
            }

            if round <= MAX_DELETING_ROUNDS && matches!(goal, Goal::Minimize(..)) {
                let rows = self.cs.rows();
                let before = wset.len();
                wset.retain(|&k| rows[self.strict_rows[k]].eval(&v) - need <= KEEP_TOL);
                if wset.len() != before {
                    tab = None;
                }
            }
            let batch = match goal {
                Goal::MaxMargin => 4 * BATCH,
                Goal::Minimize(..) => BATCH,
            };
            let take = batch.min(violated.len());
            if take < violated.len() {
                violated.select_nth_unstable_by(take - 1, |a, b| {
                    a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1))
                });
                violated.truncate(take);
            }
            violated.sort_by(|a, b| a.1.cmp(&b.1));
            if std::env::var_os("GSD_LP_REBUILD").is_some() {
                tab = None;
            }
            if let Some(t) = tab.as_mut() {
                let new_rows: Vec<LpRow> =
                    violated.iter().map(|&(_, k)| self.strict_lp_row(goal, k)).collect();
                t.add_rows(&new_rows);
            }
            wset.extend(violated.iter().map(|&(_, k)| k));
            if tab.is_none() {
                wset.sort_unstable();
                wset.dedup();
            }
        }
    }

    /// The master-program row of one strict constraint under the goal.
    fn strict_lp_row(&self, goal: &Goal, k: usize) -> LpRow {
        let s = self.cs.s();
        let row = &self.cs.rows()[self.strict_rows[k]];
        let mut terms: Vec<(u32, f64)> =
            row.terms().iter().map(|&(j, c)| (j, c as f64)).collect();
        match goal {
            Goal::MaxMargin => {
                terms.push((s as u32, -1.0));
                LpRow { terms, lower: 0.0, upper: f64::INFINITY }
            }
            Goal::Minimize(_, xi0) => LpRow { terms, lower: *xi0, upper: f64::INFINITY },
        }
    }

    /// Warm re-solve from a kept basis. Returns the statistic when the
    /// warm optimum verifies against the full system, or the violated
    /// rows when it does not.
    fn warm(
        &self,
        slot: &Slot,
        obj: &[f64],
    ) -> Result<Result<(f64, Tableau), Vec<usize>>, LpError> {
        let mut tab = slot.tableau.clone();
        tab.set_objective(obj);
        match tab.primal_solve(self.cfg)? {
            SolveStatus::Optimal => {}
            _ => return Ok(Err(Vec::new())),
        }
        if tab.primal_infeasibility() > 1e-7 {
            return Ok(Err(Vec::new()));
        }
        let v = tab.solution();
        let violated = self.violations(v, slot.xi0);
        if violated.is_empty() {
            let value = obj.iter().zip(v).map(|(c, x)| c * x).sum();
            Ok(Ok((value, tab)))
        } else {
            Ok(Err(violated.into_iter().map(|(_, k)| k).collect()))
        }
    }
}

/// Reusable solver state for one constraint system.
pub struct LpEngine<'a> {
    cs: &'a ConstraintSet,
    cfg: DualSimplex,
    eq_rows: Vec<usize>,
    strict_rows: Vec<usize>,
    slots: Vec<(u64, Slot)>,
    xi_star: Option<f64>,
}

impl<'a> LpEngine<'a> {
    pub fn new(cs: &'a ConstraintSet) -> Self {
        let mut eq_candidates = Vec::new();
        let mut strict_rows = Vec::new();
        for (i, row) in cs.rows().iter().enumerate() {
            if row.is_equality() {
                eq_candidates.push(i);
            } else {
                strict_rows.push(i);
            }
        }
        let eq_rows = independent_equalities(cs, &eq_candidates);
        Self {
            cs,
            cfg: DualSimplex::default(),
            eq_rows,
            strict_rows,
            slots: Vec::new(),
            xi_star: None,
        }
    }

    pub fn constraint_set(&self) -> &ConstraintSet {
        self.cs
    }

    fn ctx(&self) -> Ctx<'_> {
        Ctx {
            cs: self.cs,
            eq_rows: &self.eq_rows,
            strict_rows: &self.strict_rows,
            cfg: &self.cfg,
        }
    }

    /// The largest uniform separation margin; cached after the first call.
    pub fn xi_star(&mut self) -> Result<f64, LpError> {
        if let Some(x) = self.xi_star {
            return Ok(x);
        }
        // the dominance gaps carry the chain bottlenecks, so they make a
        // good initial working set
        let rows = self.cs.rows();
        let mut seed: Vec<usize> = (0..self.strict_rows.len())
            .filter(|&k| rows[self.strict_rows[k]].provenance() == crate::constraints::Provenance::R1Strict)
            .collect();
        if seed.len() > 4000 {
            seed.clear();
        }
        let cold = self.ctx().cold(&Goal::MaxMargin, &seed).map_err(|e| match e {
            LpError::Infeasible => LpError::InconsistentSystem,
            other => other,
        })?;
        if cold.value <= XI_TOL {
            return Err(LpError::InconsistentSystem);
        }
        self.xi_star = Some(cold.value);
        Ok(cold.value)
    }

    /// The statistic `d^ε` for the given weights.
    pub fn statistic(&mut self, weights: &EmpiricalPair, epsilon: f64) -> Result<f64, LpError> {
        self.check_len(weights)?;
        self.statistic_for_objective(&weights.objective(), epsilon)
    }

    /// Statistic from raw objective coefficients (one per pooled point).
    pub fn statistic_for_objective(
        &mut self,
        coeffs: &[f64],
        epsilon: f64,
    ) -> Result<f64, LpError> {
        check_unit_interval(epsilon, "epsilon")?;
        if coeffs.len() != self.cs.s() {
            return Err(LpError::InvalidWeights(format!(
                "objective has {} coefficients, system has {} points",
                coeffs.len(),
                self.cs.s()
            )));
        }
        let xi0 = epsilon * self.xi_star()?;
        let key = epsilon.to_bits();

        if let Some(pos) = self.slots.iter().position(|(k, _)| *k == key) {
            let warm = {
                let ctx = self.ctx();
                ctx.warm(&self.slots[pos].1, coeffs)?
            };
            match warm {
                Ok((value, tableau)) => {
                    self.slots[pos].1.tableau = tableau;
                    return Ok(value);
                }
                Err(violated) => {
                    let mut seed = self.slots[pos].1.wset.clone();
                    seed.extend(violated);
                    let cold = self.ctx().cold(&Goal::Minimize(coeffs, xi0), &seed)?;
                    self.slots[pos].1 =
                        Slot { xi0, wset: cold.wset, tableau: cold.tableau };
                    return Ok(cold.value);
                }
            }
        }

        let cold = self.ctx().cold(&Goal::Minimize(coeffs, xi0), &[])?;
        let value = cold.value;
        self.slots
            .push((key, Slot { xi0, wset: cold.wset, tableau: cold.tableau }));
        Ok(value)
    }

    /// Immutable snapshot whose solves never mutate shared state.
    pub fn freeze(&self) -> FrozenEngine<'a> {
        FrozenEngine {
            cs: self.cs,
            cfg: self.cfg.clone(),
            eq_rows: self.eq_rows.clone(),
            strict_rows: self.strict_rows.clone(),
            slots: self.slots.clone(),
            xi_star: self.xi_star,
        }
    }

    fn check_len(&self, weights: &EmpiricalPair) -> Result<(), LpError> {
        if weights.wx.len() != self.cs.s() {
            return Err(LpError::InvalidWeights(format!(
                "weight vectors have {} entries, system has {} points",
                weights.wx.len(),
                self.cs.s()
            )));
        }
        Ok(())
    }
}

/// Immutable engine snapshot; safe to share across worker threads.
pub struct FrozenEngine<'a> {
    cs: &'a ConstraintSet,
    cfg: DualSimplex,
    eq_rows: Vec<usize>,
    strict_rows: Vec<usize>,
    slots: Vec<(u64, Slot)>,
    xi_star: Option<f64>,
}

impl FrozenEngine<'_> {
    /// Statistic for raw objective coefficients. The warm solve runs on
    /// a private clone of the kept basis and any extra rows live in a
    /// private extension, so the result is a pure function of the
    /// snapshot and the arguments.
    pub fn statistic_for_objective(&self, coeffs: &[f64], epsilon: f64) -> Result<f64, LpError> {
        check_unit_interval(epsilon, "epsilon")?;
        let xi_star = self.xi_star.ok_or_else(|| {
            LpError::InvalidParameter("frozen engine lacks a separation margin".into())
        })?;
        let xi0 = epsilon * xi_star;
        let ctx = Ctx {
            cs: self.cs,
            eq_rows: &self.eq_rows,
            strict_rows: &self.strict_rows,
            cfg: &self.cfg,
        };
        let key = epsilon.to_bits();
        if let Some((_, slot)) = self.slots.iter().find(|(k, _)| *k == key) {
            match ctx.warm(slot, coeffs)? {
                Ok((value, _)) => return Ok(value),
                Err(violated) => {
                    let mut seed = slot.wset.clone();
                    seed.extend(violated);
                    return Ok(ctx.cold(&Goal::Minimize(coeffs, xi0), &seed)?.value);
                }
            }
        }
        Ok(ctx.cold(&Goal::Minimize(coeffs, xi0), &[])?.value)
    }

    pub fn xi_star(&self) -> Option<f64> {
        self.xi_star
    }
}

/// Optimal value of the separation-margin program. Strictly positive for
/// every valid pooled sample over the componentwise-dominance relations;
/// a non-positive or infeasible outcome reports an inconsistent system.
pub fn solve_xi_star(cs: &ConstraintSet) -> Result<f64, LpError> {
    LpEngine::new(cs).xi_star()
}

/// The statistic `d^ε`: the minimal weighted utility-difference
/// `Σ v·(wx - wy)` over assignments separating strict relations by at
/// least `ε·ξ*`. Nonnegative at `ε = 0` exactly when the first group
/// dominates the second in sample.
pub fn solve_statistic(
    cs: &ConstraintSet,
    weights: &EmpiricalPair,
    epsilon: f64,
    xi_star: f64,
) -> Result<f64, LpError> {
    check_unit_interval(epsilon, "epsilon")?;
    check_unit_interval(xi_star, "xi_star")?;
    let mut engine = LpEngine::new(cs);
    engine.check_len(weights)?;
    engine.xi_star = Some(xi_star);
    engine.statistic(weights, epsilon)
}

/// Lower and upper envelopes of the statistic over explicit credal
/// extreme points: the least and greatest program optimum over all pairs
/// from `extremes_x × extremes_y`.
pub fn solve_robust_enumeration(
    cs: &ConstraintSet,
    extremes_x: &[Vec<f64>],
    extremes_y: &[Vec<f64>],
    epsilon: f64,
    xi_star: f64,
) -> Result<(f64, f64), LpError> {
    check_unit_interval(epsilon, "epsilon")?;
    check_unit_interval(xi_star, "xi_star")?;
    if extremes_x.is_empty() || extremes_y.is_empty() {
        return Err(LpError::EmptyCredalSet);
    }
    for (i, w) in extremes_x.iter().enumerate() {
        check_weight_vector(w, &format!("extremes_x[{}]", i))?;
    }
    for (i, w) in extremes_y.iter().enumerate() {
        check_weight_vector(w, &format!("extremes_y[{}]", i))?;
    }
    let mut engine = LpEngine::new(cs);
    engine.xi_star = Some(xi_star);
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for wx in extremes_x {
        for wy in extremes_y {
            let coeffs: Vec<f64> = wx.iter().zip(wy).map(|(a, b)| a - b).collect();
            let d = engine.statistic_for_objective(&coeffs, epsilon)?;
            lower = lower.min(d);
            upper = upper.max(d);
        }
    }
    Ok((lower, upper))
}

/// Envelopes under the contamination model without extra programs: the
/// least favourable pair moves mass `γ` to the bottom bound for X and to
/// the top bound for Y, which shifts the statistic by exactly `-γ` after
/// scaling (and `+γ` for the most favourable pair), because every
/// feasible assignment pins the bounds to 0 and 1.
pub fn solve_gamma_shortcut(
    cs: &ConstraintSet,
    weights: &EmpiricalPair,
    gamma: f64,
    epsilon: f64,
    xi_star: f64,
) -> Result<(f64, f64), LpError> {
    check_unit_interval(gamma, "gamma")?;
    let d = solve_statistic(cs, weights, epsilon, xi_star)?;
    Ok(gamma_shift(d, gamma))
}

/// The contamination shift applied to an already computed statistic.
pub fn gamma_shift(d: f64, gamma: f64) -> (f64, f64) {
    ((1.0 - gamma) * d - gamma, (1.0 - gamma) * d + gamma)
}
