//! A dense bounded-variable simplex solver with dual and primal pivoting.
//!
//! The statistic programs solved here are small once row generation has
//! pared them down (a few hundred rows over a few hundred boxed
//! variables), but they are solved hundreds of thousands of times per
//! test run. Two entry points fit the two access patterns:
//!
//! * [`Tableau::dual_solve`] — from scratch: the all-logical starting
//!   basis with nonbasic variables placed by reduced-cost sign is dual
//!   feasible for free, so there is no phase-1.
//! * [`Tableau::primal_solve`] — re-optimization after an objective
//!   change from a stored optimal basis, which stays primal feasible
//!   whatever the new objective.
//!
//! Every solve runs on its own tableau, so results are independent of
//! solve order and thread count.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimplexError {
    #[error("iteration limit exceeded ({0} pivots)")]
    IterationLimit(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// One linear constraint with a two-sided activity range.
///
/// `lower == upper` encodes an equality; `upper = +inf` a pure `>=` row.
#[derive(Debug, Clone)]
pub struct LpRow {
    pub terms: Vec<(u32, f64)>,
    pub lower: f64,
    pub upper: f64,
}

/// A boxed linear program in minimization form.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub num_vars: usize,
    /// Dense objective, one coefficient per variable.
    pub objective: Vec<f64>,
    /// Inclusive variable boxes; `lower == upper` fixes a variable.
    pub bounds: Vec<(f64, f64)>,
    pub rows: Vec<LpRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solver result; `value` and `solution` are meaningful only when the
/// status is optimal.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub value: f64,
    pub solution: Vec<f64>,
}

/// Minimization interface the engine programs against.
pub trait LpBackend: Sync {
    fn solve(&self, prob: &LpProblem) -> Result<SolveOutcome, SimplexError>;
}

/// Tolerances of the simplex pivots.
#[derive(Debug, Clone)]
pub struct DualSimplex {
    /// Bound violation below which a basic variable counts as feasible.
    pub feas_tol: f64,
    /// Smallest pivot magnitude admitted by the ratio tests.
    pub pivot_tol: f64,
    /// Reduced-cost threshold for primal entering candidates.
    pub cost_tol: f64,
}

impl Default for DualSimplex {
    fn default() -> Self {
        Self { feas_tol: 1e-9, pivot_tol: 1e-10, cost_tol: 1e-10 }
    }
}

impl LpBackend for DualSimplex {
    fn solve(&self, prob: &LpProblem) -> Result<SolveOutcome, SimplexError> {
        let mut tab = Tableau::new(prob);
        let status = tab.dual_solve(self)?;
        Ok(tab.outcome(status, &prob.objective))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
}

/// Dense simplex state: the constraint matrix premultiplied by the
/// current basis inverse, plus variable values, statuses and reduced
/// costs. Cloning a tableau snapshots the basis for later warm solves.
#[derive(Debug, Clone)]
pub(crate) struct Tableau {
    n: usize,
    m: usize,
    ncols: usize,
    /// row-major `m x ncols`, equal to `B^-1 [A | -I]`
    tab: Vec<f64>,
    /// reduced costs per column
    dj: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    xval: Vec<f64>,
    status: Vec<VarStatus>,
    basis: Vec<usize>,
}

impl Tableau {
    pub fn new(prob: &LpProblem) -> Self {
        let n = prob.num_vars;
        let m = prob.rows.len();
        let ncols = n + m;

        let mut lb = Vec::with_capacity(ncols);
        let mut ub = Vec::with_capacity(ncols);
        for &(l, u) in &prob.bounds {
            lb.push(l);
            ub.push(u);
        }
        for row in &prob.rows {
            lb.push(row.lower);
            ub.push(row.upper);
        }

        let mut tab = vec![0.0; m * ncols];
        for (i, row) in prob.rows.iter().enumerate() {
            let t = &mut tab[i * ncols..(i + 1) * ncols];
            for &(j, a) in &row.terms {
                t[j as usize] -= a;
            }
            t[n + i] = 1.0;
        }

        let mut dj = vec![0.0; ncols];
        dj[..n].copy_from_slice(&prob.objective);

        // Nonbasic structural variables sit on the side their cost
        // points to, which makes the all-logical basis dual feasible.
        let mut status = vec![VarStatus::Basic; ncols];
        let mut xval = vec![0.0; ncols];
        for j in 0..n {
            let st = if dj[j] >= 0.0 { VarStatus::AtLower } else { VarStatus::AtUpper };
            status[j] = st;
            xval[j] = if st == VarStatus::AtLower { lb[j] } else { ub[j] };
            debug_assert!(xval[j].is_finite(), "nonbasic start requires a finite bound");
        }
        let basis: Vec<usize> = (n..ncols).collect();
        for (i, row) in prob.rows.iter().enumerate() {
            let w: f64 = row.terms.iter().map(|&(j, a)| a * xval[j as usize]).sum();
            xval[n + i] = w;
        }

        Self { n, m, ncols, tab, dj, lb, ub, xval, status, basis }
    }

    pub fn solution(&self) -> &[f64] {
        &self.xval[..self.n]
    }

    pub fn outcome(&self, status: SolveStatus, objective: &[f64]) -> SolveOutcome {
        if status != SolveStatus::Optimal {
            return SolveOutcome { status, value: f64::NAN, solution: Vec::new() };
        }
        let solution = self.solution().to_vec();
        let value = objective.iter().zip(&solution).map(|(c, x)| c * x).sum();
        SolveOutcome { status, value, solution }
    }

    fn refresh_basics(&mut self) {
        let stride = self.ncols;
        let mut vals = vec![0.0; self.m];
        for j in 0..self.ncols {
            if self.status[j] != VarStatus::Basic {
                let xj = self.xval[j];
                if xj != 0.0 {
                    for i in 0..self.m {
                        vals[i] -= self.tab[i * stride + j] * xj;
                    }
                }
            }
        }
        for i in 0..self.m {
            self.xval[self.basis[i]] = vals[i];
        }
    }

    /// Appends constraint rows to a solved tableau. The new logical
    /// variables enter the basis (their rows are expressed over the
    /// current basis), dual feasibility is preserved, and any bound
    /// violations they bring are left for the next [`Tableau::dual_solve`].
    pub fn add_rows(&mut self, rows: &[LpRow]) {
        if rows.is_empty() {
            return;
        }
        let k = rows.len();
        let old_ncols = self.ncols;
        let new_ncols = old_ncols + k;
        let new_m = self.m + k;

        // re-layout with the wider stride
        let mut tab = vec![0.0; new_m * new_ncols];
        for i in 0..self.m {
            tab[i * new_ncols..i * new_ncols + old_ncols]
                .copy_from_slice(&self.tab[i * old_ncols..(i + 1) * old_ncols]);
        }
        self.tab = tab;
        self.dj.resize(new_ncols, 0.0);

        let mut basis_row = vec![usize::MAX; new_ncols];
        for (i, &b) in self.basis.iter().enumerate() {
            basis_row[b] = i;
        }

        for (t, row) in rows.iter().enumerate() {
            let logical = old_ncols + t;
            let r = self.m + t;
            self.lb.push(row.lower);
            self.ub.push(row.upper);
            let w: f64 = row.terms.iter().map(|&(j, a)| a * self.xval[j as usize]).sum();
            self.xval.push(w);
            self.status.push(VarStatus::Basic);

            // raw row, then eliminate the current basic columns; basic
            // columns form an identity block, so one pass per term is
            // exact
            {
                let (done, rest) = self.tab.split_at_mut(r * new_ncols);
                let new_row = &mut rest[..new_ncols];
                for &(j, a) in &row.terms {
                    new_row[j as usize] -= a;
                }
                new_row[logical] = 1.0;
                for &(j, _) in &row.terms {
                    let j = j as usize;
                    let br = basis_row[j];
                    if br != usize::MAX {
                        let f = new_row[j];
                        if f != 0.0 {
                            let brow = &done[br * new_ncols..br * new_ncols + new_ncols];
                            for (x, &y) in new_row.iter_mut().zip(brow) {
                                *x -= f * y;
                            }
                        }
                    }
                }
            }
            self.basis.push(logical);
        }

        self.m = new_m;
        self.ncols = new_ncols;
        self.refresh_basics();
    }

    /// Recomputes reduced costs for a new objective over the current
    /// basis (logical variables cost zero).
    pub fn set_objective(&mut self, objective: &[f64]) {
        debug_assert_eq!(objective.len(), self.n);
        let stride = self.ncols;
        self.dj[..self.n].copy_from_slice(objective);
        self.dj[self.n..].fill(0.0);
        for i in 0..self.m {
            let b = self.basis[i];
            let cb = if b < self.n { objective[b] } else { 0.0 };
            if cb != 0.0 {
                let row = &self.tab[i * stride..(i + 1) * stride];
                for (d, &t) in self.dj.iter_mut().zip(row) {
                    *d -= cb * t;
                }
            }
        }
        for &b in &self.basis {
            self.dj[b] = 0.0;
        }
    }

    fn pivot(&mut self, r: usize, q: usize, leave_to_upper: bool) {
        let stride = self.ncols;
        let p = self.basis[r];
        let target = if leave_to_upper { self.ub[p] } else { self.lb[p] };

        let col_q: Vec<f64> = (0..self.m).map(|i| self.tab[i * stride + q]).collect();
        let piv = col_q[r];
        let step = (self.xval[p] - target) / piv;

        let inv = 1.0 / piv;
        for v in self.tab[r * stride..(r + 1) * stride].iter_mut() {
            *v *= inv;
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = col_q[i];
            if f != 0.0 {
                let (head, tail) = self.tab.split_at_mut(r * stride);
                let (pivot_row, rest) = tail.split_at_mut(stride);
                let row_i: &mut [f64] = if i < r {
                    &mut head[i * stride..(i + 1) * stride]
                } else {
                    &mut rest[(i - r - 1) * stride..(i - r) * stride]
                };
                for (t, &pv) in row_i.iter_mut().zip(pivot_row.iter()) {
                    *t -= f * pv;
                }
            }
        }

        let dq = self.dj[q];
        if dq != 0.0 {
            let pivot_row = &self.tab[r * stride..(r + 1) * stride];
            for (d, &pv) in self.dj.iter_mut().zip(pivot_row.iter()) {
                *d -= dq * pv;
            }
        }
        self.dj[q] = 0.0;

        self.xval[q] += step;
        for i in 0..self.m {
            if i != r {
                let b = self.basis[i];
                self.xval[b] -= col_q[i] * step;
            }
        }
        self.xval[p] = target;

        self.status[p] = if leave_to_upper { VarStatus::AtUpper } else { VarStatus::AtLower };
        self.status[q] = VarStatus::Basic;
        self.basis[r] = q;
    }

    /// Dual simplex: drives the basis to primal feasibility while the
    /// reduced costs stay sign-feasible. Requires a dual-feasible start
    /// (fresh tableau, or any optimal basis).
    pub fn dual_solve(&mut self, cfg: &DualSimplex) -> Result<SolveStatus, SimplexError> {
        let limit = 400 + 60 * (self.m + self.ncols);
        let stride = self.ncols;

        for iter in 0..limit {
            if iter > 0 && iter % 64 == 0 {
                self.refresh_basics();
            }

            // leaving variable: the basic with the largest bound violation
            let mut r = usize::MAX;
            let mut worst = cfg.feas_tol;
            let mut above = false;
            let mut infeasible = 0usize;
            for i in 0..self.m {
                let v = self.basis[i];
                let x = self.xval[v];
                let below_by = self.lb[v] - x;
                let above_by = x - self.ub[v];
                if below_by > cfg.feas_tol || above_by > cfg.feas_tol {
                    infeasible += 1;
                }
                if below_by > worst {
                    worst = below_by;
                    r = i;
                    above = false;
                }
                if above_by > worst {
                    worst = above_by;
                    r = i;
                    above = true;
                }
            }
            if iter % 4096 == 0 && std::env::var_os("GSD_SIMPLEX_TRACE").is_some() {
                eprintln!(
                    "dual iter {}: m {}, infeasible {}, worst {}",
                    iter, self.m, infeasible, worst
                );
            }
            if r == usize::MAX {
                self.refresh_basics();
                return Ok(SolveStatus::Optimal);
            }

            let row = &self.tab[r * stride..(r + 1) * stride];

            // dual ratio test over movable nonbasic columns
            let mut q = usize::MAX;
            let mut best_ratio = f64::INFINITY;
            let mut best_alpha = 0.0f64;
            for j in 0..self.ncols {
                let st = self.status[j];
                if st == VarStatus::Basic || self.ub[j] - self.lb[j] < 1e-15 {
                    continue;
                }
                let alpha = row[j];
                if alpha.abs() <= cfg.pivot_tol {
                    continue;
                }
                let eligible = if above {
                    (st == VarStatus::AtLower && alpha > 0.0)
                        || (st == VarStatus::AtUpper && alpha < 0.0)
                } else {
                    (st == VarStatus::AtLower && alpha < 0.0)
                        || (st == VarStatus::AtUpper && alpha > 0.0)
                };
                if !eligible {
                    continue;
                }
                let ratio = (self.dj[j] / alpha).abs();
                if ratio < best_ratio - 1e-12
                    || (ratio < best_ratio + 1e-12 && alpha.abs() > best_alpha.abs())
                {
                    best_ratio = ratio;
                    best_alpha = alpha;
                    q = j;
                }
            }
            if q == usize::MAX {
                return Ok(SolveStatus::Infeasible);
            }

            self.pivot(r, q, above);
        }
        Err(SimplexError::IterationLimit(limit))
    }

    /// Primal simplex from the current (primal feasible) basis; call
    /// [`Tableau::set_objective`] first when the objective changed.
    pub fn primal_solve(&mut self, cfg: &DualSimplex) -> Result<SolveStatus, SimplexError> {
        let limit = 400 + 60 * (self.m + self.ncols);
        let stride = self.ncols;
        let mut stalled = 0usize;

        for iter in 0..limit {
            if iter > 0 && iter % 64 == 0 {
                self.refresh_basics();
            }

            // entering variable by reduced cost
            let bland = stalled > 64;
            let mut q = usize::MAX;
            let mut best = cfg.cost_tol;
            for j in 0..self.ncols {
                let st = self.status[j];
                if st == VarStatus::Basic || self.ub[j] - self.lb[j] < 1e-15 {
                    continue;
                }
                let gain = match st {
                    VarStatus::AtLower => -self.dj[j],
                    VarStatus::AtUpper => self.dj[j],
                    VarStatus::Basic => unreachable!(),
                };
                if gain > best {
                    best = gain;
                    q = j;
                    if bland {
                        break;
                    }
                }
            }
            if q == usize::MAX {
                self.refresh_basics();
                return Ok(SolveStatus::Optimal);
            }

            let dir = if self.status[q] == VarStatus::AtLower { 1.0 } else { -1.0 };

            // ratio test: the entering step is limited by its own range
            // and by every basic variable hitting a bound
            let mut t_best = self.ub[q] - self.lb[q];
            let mut limiting: Option<(usize, bool)> = None; // (row, leaves to upper)
            let mut best_alpha = 0.0f64;
            for i in 0..self.m {
                let alpha = self.tab[i * stride + q];
                if alpha.abs() <= cfg.pivot_tol {
                    continue;
                }
                let b = self.basis[i];
                let delta = -alpha * dir; // change of basic b per unit step
                let (room, to_upper) = if delta > 0.0 {
                    (self.ub[b] - self.xval[b], true)
                } else {
                    (self.xval[b] - self.lb[b], false)
                };
                if !room.is_finite() {
                    continue;
                }
                let t = room.max(0.0) / delta.abs();
                if t < t_best - 1e-12
                    || (t < t_best + 1e-12
                        && limiting.is_some()
                        && alpha.abs() > best_alpha.abs())
                {
                    t_best = t;
                    limiting = Some((i, to_upper));
                    best_alpha = alpha;
                }
            }

            if !t_best.is_finite() {
                return Ok(SolveStatus::Unbounded);
            }
            if t_best < 1e-12 {
                stalled += 1;
            } else {
                stalled = 0;
            }

            match limiting {
                None => {
                    // bound flip: the entering variable crosses its range
                    let t = t_best;
                    for i in 0..self.m {
                        let alpha = self.tab[i * stride + q];
                        if alpha != 0.0 {
                            let b = self.basis[i];
                            self.xval[b] -= alpha * dir * t;
                        }
                    }
                    if self.status[q] == VarStatus::AtLower {
                        self.status[q] = VarStatus::AtUpper;
                        self.xval[q] = self.ub[q];
                    } else {
                        self.status[q] = VarStatus::AtLower;
                        self.xval[q] = self.lb[q];
                    }
                }
                Some((r, to_upper)) => {
                    self.pivot(r, q, to_upper);
                }
            }
        }
        Err(SimplexError::IterationLimit(limit))
    }

    /// Largest bound violation over basic variables and fixed rows;
    /// cheap sanity check after warm solves.
    pub fn primal_infeasibility(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for &b in &self.basis {
            worst = worst.max(self.lb[b] - self.xval[b]);
            worst = worst.max(self.xval[b] - self.ub[b]);
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    /// Brute-force optimum by enumerating candidate vertices: every
    /// choice of `n` tight constraints among variable bounds and row
    /// bounds, solved exactly and filtered for feasibility.
    fn brute_force(prob: &LpProblem) -> Option<f64> {
        let n = prob.num_vars;
        #[derive(Clone)]
        enum Tight {
            Var(usize, f64),
            Row(usize, f64),
        }
        let mut cands: Vec<Tight> = Vec::new();
        for j in 0..n {
            cands.push(Tight::Var(j, prob.bounds[j].0));
            if prob.bounds[j].1 != prob.bounds[j].0 {
                cands.push(Tight::Var(j, prob.bounds[j].1));
            }
        }
        for (i, row) in prob.rows.iter().enumerate() {
            if row.lower.is_finite() {
                cands.push(Tight::Row(i, row.lower));
            }
            if row.upper.is_finite() && row.upper != row.lower {
                cands.push(Tight::Row(i, row.upper));
            }
        }

        let feasible = |x: &[f64]| -> bool {
            for j in 0..n {
                if x[j] < prob.bounds[j].0 - 1e-7 || x[j] > prob.bounds[j].1 + 1e-7 {
                    return false;
                }
            }
            for row in &prob.rows {
                let a: f64 = row.terms.iter().map(|&(j, c)| c * x[j as usize]).sum();
                if a < row.lower - 1e-7 || a > row.upper + 1e-7 {
                    return false;
                }
            }
            true
        };

        let mut best: Option<f64> = None;
        let k = cands.len();
        let mut idx = vec![0usize; n];
        let choose = |sel: &[usize], best: &mut Option<f64>| {
            // assemble and solve the n x n tight system by elimination
            let mut a = vec![0.0; n * n];
            let mut b = vec![0.0; n];
            for (r, &ci) in sel.iter().enumerate() {
                match &cands[ci] {
                    Tight::Var(j, v) => {
                        a[r * n + j] = 1.0;
                        b[r] = *v;
                    }
                    Tight::Row(i, v) => {
                        for &(j, c) in &prob.rows[*i].terms {
                            a[r * n + j as usize] += c;
                        }
                        b[r] = *v;
                    }
                }
            }
            let mut x = b.clone();
            let mut mat = a.clone();
            for col in 0..n {
                let piv = (col..n)
                    .max_by(|&i, &j| {
                        mat[i * n + col].abs().partial_cmp(&mat[j * n + col].abs()).unwrap()
                    })
                    .unwrap();
                if mat[piv * n + col].abs() < 1e-9 {
                    return;
                }
                if piv != col {
                    for c in 0..n {
                        mat.swap(piv * n + c, col * n + c);
                    }
                    x.swap(piv, col);
                }
                let d = mat[col * n + col];
                for c in 0..n {
                    mat[col * n + c] /= d;
                }
                x[col] /= d;
                for rr in 0..n {
                    if rr != col {
                        let f = mat[rr * n + col];
                        if f != 0.0 {
                            for c in 0..n {
                                mat[rr * n + c] -= f * mat[col * n + c];
                            }
                            x[rr] -= f * x[col];
                        }
                    }
                }
            }
            if feasible(&x) {
                let v: f64 = prob.objective.iter().zip(&x).map(|(c, xi)| c * xi).sum();
                if best.map_or(true, |b| v < b) {
                    *best = Some(v);
                }
            }
        };

        fn rec(
            start: usize,
            depth: usize,
            n: usize,
            k: usize,
            idx: &mut Vec<usize>,
            f: &mut dyn FnMut(&[usize]),
        ) {
            if depth == n {
                f(idx);
                return;
            }
            for c in start..k {
                idx[depth] = c;
                rec(c + 1, depth + 1, n, k, idx, f);
            }
        }
        rec(0, 0, n, k, &mut idx, &mut |sel| choose(sel, &mut best));
        best
    }

    fn random_problem(rng: &mut impl Rng) -> LpProblem {
        let n = rng.random_range(2..=4);
        let nrows = rng.random_range(1..=5);
        let bounds: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let l: f64 = rng.random_range(-2.0..0.0);
                let u: f64 = rng.random_range(0.1..2.0);
                (l, u)
            })
            .collect();
        let rows = (0..nrows)
            .map(|_| {
                let mut terms: Vec<(u32, f64)> = Vec::new();
                for j in 0..n {
                    if rng.random_range(0.0..1.0) < 0.8 {
                        let c = rng.random_range(-2.0..2.0f64).round();
                        if c != 0.0 {
                            terms.push((j as u32, c));
                        }
                    }
                }
                let b: f64 = rng.random_range(-1.5..0.5);
                if rng.random_range(0.0..1.0) < 0.3 {
                    LpRow { terms, lower: b, upper: b }
                } else {
                    LpRow { terms, lower: b, upper: f64::INFINITY }
                }
            })
            .filter(|r| !r.terms.is_empty())
            .collect();
        let objective = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        LpProblem { num_vars: n, objective, bounds, rows }
    }

    #[test]
    fn matches_vertex_enumeration_on_random_problems() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let solver = DualSimplex::default();
        let mut solved = 0;
        for _ in 0..400 {
            let prob = random_problem(&mut rng);
            let expected = brute_force(&prob);
            let got = solver.solve(&prob).unwrap();
            match expected {
                Some(v) => {
                    assert_eq!(got.status, SolveStatus::Optimal, "problem: {:?}", prob);
                    assert!(
                        (got.value - v).abs() <= 1e-7 * (1.0 + v.abs()),
                        "value {} vs brute force {} on {:?}",
                        got.value,
                        v,
                        prob
                    );
                    solved += 1;
                }
                None => {
                    assert_eq!(got.status, SolveStatus::Infeasible, "problem: {:?}", prob);
                }
            }
        }
        assert!(solved > 100, "too few feasible random instances: {}", solved);
    }

    #[test]
    fn warm_primal_resolve_matches_cold_dual_solve() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(8);
        let cfg = DualSimplex::default();
        let mut checked = 0;
        for _ in 0..300 {
            let prob = random_problem(&mut rng);
            let mut tab = Tableau::new(&prob);
            if tab.dual_solve(&cfg).unwrap() != SolveStatus::Optimal {
                continue;
            }
            // new objective, warm primal re-solve from the optimal basis
            let obj2: Vec<f64> = (0..prob.num_vars).map(|_| rng.random_range(-1.0..1.0)).collect();
            tab.set_objective(&obj2);
            assert_eq!(tab.primal_solve(&cfg).unwrap(), SolveStatus::Optimal);
            let warm: f64 = obj2.iter().zip(tab.solution()).map(|(c, x)| c * x).sum();

            let prob2 = LpProblem { objective: obj2.clone(), ..prob.clone() };
            let cold = DualSimplex::default().solve(&prob2).unwrap();
            assert_eq!(cold.status, SolveStatus::Optimal);
            assert!(
                (warm - cold.value).abs() <= 1e-7 * (1.0 + cold.value.abs()),
                "warm {} vs cold {} on {:?}",
                warm,
                cold.value,
                prob2
            );
            assert!(tab.primal_infeasibility() <= 1e-7);
            checked += 1;
        }
        assert!(checked > 100, "too few warm resolves exercised: {}", checked);
    }

    #[test]
    fn fixed_variables_stay_fixed() {
        let prob = LpProblem {
            num_vars: 2,
            objective: vec![1.0, 0.0],
            bounds: vec![(0.0, 1.0), (1.0, 1.0)],
            rows: vec![LpRow { terms: vec![(0, 1.0), (1, -1.0)], lower: -0.25, upper: f64::INFINITY }],
        };
        let out = DualSimplex::default().solve(&prob).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.solution[1] - 1.0).abs() < 1e-12);
        assert!((out.value - 0.75).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_box_row_conflict() {
        let prob = LpProblem {
            num_vars: 1,
            objective: vec![0.0],
            bounds: vec![(0.0, 1.0)],
            rows: vec![LpRow { terms: vec![(0, 1.0)], lower: 2.0, upper: f64::INFINITY }],
        };
        let out = DualSimplex::default().solve(&prob).unwrap();
        assert_eq!(out.status, SolveStatus::Infeasible);
    }
}
