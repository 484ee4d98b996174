//! Bounded-variable primal simplex on a dense tableau.
//!
//! Every row `a·x (rel) b` becomes `a·x + s = b` with a bounded slack:
//! `s ∈ [0, ∞)` for `≤`, `s ∈ (-∞, 0]` for `≥` and `s ∈ [0, 0]` for `=`.
//! Rows whose starting residual cannot be absorbed by the slack get an
//! artificial column, driven to zero in phase one. Phase two then prices the
//! real objective starting from the feasible basis; artificials are fixed at
//! zero so they can only leave the basis.

use crate::error::LpError;
use crate::problem::{LinearProgram, Relation, Sense, Solution, SolveStatus};

#[derive(Clone, Copy, Debug)]
pub struct LpOptions {
    /// Optimality tolerance on reduced costs.
    pub tol: f64,
    /// Smallest pivot element accepted in the ratio test.
    pub pivot_tol: f64,
    pub max_iterations: usize,
    /// Consecutive degenerate steps after which pricing switches from
    /// Dantzig's rule to Bland's rule.
    pub bland_after: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            pivot_tol: 1e-9,
            max_iterations: 100_000,
            bland_after: 50,
        }
    }
}

/// Solves `lp` with default options.
pub fn solve_lp(lp: &LinearProgram) -> Result<Solution, LpError> {
    solve_lp_with(lp, &LpOptions::default())
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &LpOptions) -> Result<Solution, LpError> {
    lp.validate()?;
    Ok(solve_with_bounds(lp, &lp.lower, &lp.upper, opts))
}

/// Solves `lp` with its column bounds replaced by `lower`/`upper`.
/// The problem is assumed to be validated.
pub(crate) fn solve_with_bounds(lp: &LinearProgram, lower: &[f64], upper: &[f64], opts: &LpOptions) -> Solution {
    if lower.iter().zip(upper).any(|(l, u)| l > u) {
        return Solution::without_point(SolveStatus::Infeasible, 0);
    }
    let n = lp.num_vars();

    // Drop rows without nonzero coefficients, checking them directly.
    let mut rows: Vec<usize> = Vec::with_capacity(lp.num_constraints());
    for (i, c) in lp.constraints.iter().enumerate() {
        if c.terms.iter().any(|&(_, a)| a != 0.0) {
            rows.push(i);
        } else {
            let ok = match c.relation {
                Relation::Le => c.rhs >= -opts.tol,
                Relation::Ge => c.rhs <= opts.tol,
                Relation::Eq => c.rhs.abs() <= opts.tol,
            };
            if !ok {
                return Solution::without_point(SolveStatus::Infeasible, 0);
            }
        }
    }

    let min_cost: Vec<f64> = match lp.sense {
        Sense::Minimize => lp.objective.clone(),
        Sense::Maximize => lp.objective.iter().map(|c| -c).collect(),
    };

    let mut tab = Tableau::build(lp, &rows, lower, upper);
    let mut iterations = 0usize;

    if tab.num_artificials() > 0 {
        let mut phase_one = vec![0.0; tab.ncols];
        for c in phase_one.iter_mut().skip(n + tab.m) {
            *c = 1.0;
        }
        tab.set_costs(phase_one);
        match tab.optimize(opts, &mut iterations) {
            Phase::Optimal => {}
            Phase::IterationLimit => return Solution::without_point(SolveStatus::IterationLimit, iterations),
            // Phase one is bounded below by zero.
            Phase::Unbounded => return Solution::without_point(SolveStatus::Infeasible, iterations),
        }
        tab.refresh_basic_values(lp, &rows);
        let infeasibility: f64 = (n + tab.m..tab.ncols).map(|j| tab.x[j].abs()).sum();
        let scale = rows.iter().map(|&i| lp.constraints[i].rhs.abs()).fold(1.0, f64::max);
        if infeasibility > 1e-7 * scale {
            return Solution::without_point(SolveStatus::Infeasible, iterations);
        }
        tab.fix_artificials();
    }

    let mut costs = vec![0.0; tab.ncols];
    costs[..n].copy_from_slice(&min_cost);
    tab.set_costs(costs);
    match tab.optimize(opts, &mut iterations) {
        Phase::Optimal => {}
        Phase::Unbounded => return Solution::without_point(SolveStatus::Unbounded, iterations),
        Phase::IterationLimit => return Solution::without_point(SolveStatus::IterationLimit, iterations),
    }
    tab.refresh_basic_values(lp, &rows);

    let mut x: Vec<f64> = tab.x[..n].to_vec();
    for (j, v) in x.iter_mut().enumerate() {
        // Snap values that drifted just past a bound.
        if *v < lower[j] {
            *v = lower[j];
        }
        if *v > upper[j] {
            *v = upper[j];
        }
    }
    let flip = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut duals = vec![0.0; lp.num_constraints()];
    for (k, &i) in rows.iter().enumerate() {
        duals[i] = -flip * tab.d[n + k];
    }
    let reduced_costs: Vec<f64> = tab.d[..n].iter().map(|d| flip * d).collect();
    let objective = lp.objective_value(&x);
    Solution {
        status: SolveStatus::Optimal,
        x,
        objective,
        duals,
        reduced_costs,
        iterations,
        nodes: 0,
        bound: objective,
    }
}

enum Phase {
    Optimal,
    Unbounded,
    IterationLimit,
}

struct Tableau {
    m: usize,
    n: usize,
    ncols: usize,
    /// `B^{-1} A` over all columns, row-major.
    a: Vec<f64>,
    basis: Vec<usize>,
    /// Row of each basic column, `usize::MAX` when nonbasic.
    row_of: Vec<usize>,
    x: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    /// Row and sign of each artificial column, in column order.
    artificials: Vec<(usize, f64)>,
}

impl Tableau {
    fn build(lp: &LinearProgram, rows: &[usize], lower: &[f64], upper: &[f64]) -> Self {
        let n = lp.num_vars();
        let m = rows.len();

        let mut x = vec![0.0; n + m];
        let mut lo = Vec::with_capacity(n + m);
        let mut hi = Vec::with_capacity(n + m);
        for j in 0..n {
            lo.push(lower[j]);
            hi.push(upper[j]);
            x[j] = if lower[j].is_finite() {
                lower[j]
            } else if upper[j].is_finite() {
                upper[j]
            } else {
                0.0
            };
        }
        for &i in rows {
            let (l, h) = match lp.constraints[i].relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lo.push(l);
            hi.push(h);
        }

        // Decide the starting basic column of every row.
        let mut artificials = Vec::new();
        let mut art_values = Vec::new();
        let mut basis = vec![0usize; m];
        for (k, &i) in rows.iter().enumerate() {
            let c = &lp.constraints[i];
            let activity: f64 = c.terms.iter().map(|&(j, a)| a * x[j]).sum();
            let r = c.rhs - activity;
            let s = n + k;
            if r >= lo[s] && r <= hi[s] {
                x[s] = r;
                basis[k] = s;
            } else {
                let s0 = r.clamp(lo[s], hi[s]);
                x[s] = s0;
                let residual = r - s0;
                let sign = if residual >= 0.0 { 1.0 } else { -1.0 };
                basis[k] = n + m + artificials.len();
                artificials.push((k, sign));
                art_values.push(residual.abs());
            }
        }
        let ncols = n + m + artificials.len();
        x.extend(art_values);
        lo.extend(std::iter::repeat_n(0.0, artificials.len()));
        hi.extend(std::iter::repeat_n(f64::INFINITY, artificials.len()));

        let mut a = vec![0.0; m * ncols];
        for (k, &i) in rows.iter().enumerate() {
            let row = &mut a[k * ncols..(k + 1) * ncols];
            for &(j, coef) in &lp.constraints[i].terms {
                row[j] += coef;
            }
            row[n + k] = 1.0;
        }
        for (t, &(k, sign)) in artificials.iter().enumerate() {
            let row = &mut a[k * ncols..(k + 1) * ncols];
            row[n + m + t] = sign;
            // Basic column has coefficient `sign`; scale the row to make it 1.
            if sign < 0.0 {
                for v in row.iter_mut() {
                    *v = -*v;
                }
            }
        }

        let mut row_of = vec![usize::MAX; ncols];
        for (k, &b) in basis.iter().enumerate() {
            row_of[b] = k;
        }

        Self {
            m,
            n,
            ncols,
            a,
            basis,
            row_of,
            x,
            lo,
            hi,
            cost: vec![0.0; ncols],
            d: vec![0.0; ncols],
            artificials,
        }
    }

    fn num_artificials(&self) -> usize {
        self.artificials.len()
    }

    fn set_costs(&mut self, cost: Vec<f64>) {
        self.cost = cost;
        self.recompute_reduced_costs();
    }

    fn recompute_reduced_costs(&mut self) {
        self.d.copy_from_slice(&self.cost);
        for k in 0..self.m {
            let cb = self.cost[self.basis[k]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.a[k * self.ncols..(k + 1) * self.ncols];
            for (dj, &t) in self.d.iter_mut().zip(row) {
                *dj -= cb * t;
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    fn fix_artificials(&mut self) {
        for j in self.n + self.m..self.ncols {
            self.hi[j] = 0.0;
            if self.row_of[j] == usize::MAX {
                self.x[j] = 0.0;
            }
        }
    }

    /// Recomputes basic values as `B^{-1}(b - N x_N)` using the slack block of
    /// the tableau, which holds `B^{-1}`.
    fn refresh_basic_values(&mut self, lp: &LinearProgram, rows: &[usize]) {
        let (n, m) = (self.n, self.m);
        let mut w = vec![0.0; m];
        for (k, &i) in rows.iter().enumerate() {
            let c = &lp.constraints[i];
            let mut v = c.rhs;
            for &(j, a) in &c.terms {
                if self.row_of[j] == usize::MAX {
                    v -= a * self.x[j];
                }
            }
            if self.row_of[n + k] == usize::MAX {
                v -= self.x[n + k];
            }
            w[k] = v;
        }
        for (t, &(k, sign)) in self.artificials.iter().enumerate() {
            let j = n + m + t;
            if self.row_of[j] == usize::MAX {
                w[k] -= sign * self.x[j];
            }
        }
        for k in 0..m {
            let row = &self.a[k * self.ncols..(k + 1) * self.ncols];
            let v: f64 = row[n..n + m].iter().zip(&w).map(|(b, wi)| b * wi).sum();
            self.x[self.basis[k]] = v;
        }
    }

    fn optimize(&mut self, opts: &LpOptions, iterations: &mut usize) -> Phase {
        let mut degenerate_streak = 0usize;
        let mut rechecked = false;
        loop {
            let bland = degenerate_streak >= opts.bland_after;
            let Some((j, dir)) = self.price(opts.tol, bland) else {
                // Confirm optimality against freshly computed reduced costs.
                if rechecked {
                    return Phase::Optimal;
                }
                self.recompute_reduced_costs();
                rechecked = true;
                continue;
            };
            rechecked = false;
            if *iterations >= opts.max_iterations {
                return Phase::IterationLimit;
            }
            *iterations += 1;
            match self.step(j, dir, opts.pivot_tol, bland) {
                None => return Phase::Unbounded,
                Some(t) => {
                    if t <= 1e-12 {
                        degenerate_streak += 1;
                    } else {
                        degenerate_streak = 0;
                    }
                }
            }
        }
    }

    /// Chooses an entering column and its direction of movement.
    fn price(&self, tol: f64, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.ncols {
            if self.row_of[j] != usize::MAX || self.lo[j] == self.hi[j] {
                continue;
            }
            let dj = self.d[j];
            let (dir, score) = if dj < -tol && self.x[j] < self.hi[j] {
                (1.0, -dj)
            } else if dj > tol && self.x[j] > self.lo[j] {
                (-1.0, dj)
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if score > best_score {
                best_score = score;
                best = Some((j, dir));
            }
        }
        best
    }

    /// Moves column `j` in direction `dir`; returns the step length, or
    /// `None` if the objective is unbounded along this ray.
    fn step(&mut self, j: usize, dir: f64, pivot_tol: f64, bland: bool) -> Option<f64> {
        let ncols = self.ncols;
        let mut best_t = f64::INFINITY;
        let mut leave: Option<(usize, f64)> = None; // (row, bound value reached)
        let mut leave_alpha = 0.0f64;
        for k in 0..self.m {
            let alpha = self.a[k * ncols + j] * dir;
            let b = self.basis[k];
            let (limit, bound) = if alpha > pivot_tol {
                if !self.lo[b].is_finite() {
                    continue;
                }
                (((self.x[b] - self.lo[b]) / alpha).max(0.0), self.lo[b])
            } else if alpha < -pivot_tol {
                if !self.hi[b].is_finite() {
                    continue;
                }
                (((self.hi[b] - self.x[b]) / -alpha).max(0.0), self.hi[b])
            } else {
                continue;
            };
            let better = match leave {
                None => true,
                Some((lk, _)) => {
                    let tie = (limit - best_t).abs() <= 1e-12 * (1.0 + best_t.abs());
                    if tie {
                        if bland {
                            b < self.basis[lk]
                        } else {
                            alpha.abs() > leave_alpha
                        }
                    } else {
                        limit < best_t
                    }
                }
            };
            if better {
                best_t = limit;
                leave = Some((k, bound));
                leave_alpha = alpha.abs();
            }
        }

        let flip_t = self.hi[j] - self.lo[j];
        if flip_t.is_finite() && flip_t <= best_t {
            // Bound flip: the entering column crosses its box without a pivot.
            self.shift(j, dir, flip_t);
            self.x[j] = if dir > 0.0 { self.hi[j] } else { self.lo[j] };
            return Some(flip_t);
        }
        let (r, bound) = leave?;
        let t = best_t;
        self.shift(j, dir, t);
        let leaving = self.basis[r];
        self.x[leaving] = bound;
        self.pivot(r, j);
        Some(t)
    }

    /// Applies `x_j += dir·t` and the induced change of the basic variables.
    fn shift(&mut self, j: usize, dir: f64, t: f64) {
        if t == 0.0 {
            return;
        }
        let ncols = self.ncols;
        self.x[j] += dir * t;
        for k in 0..self.m {
            let alpha = self.a[k * ncols + j];
            if alpha != 0.0 {
                self.x[self.basis[k]] -= alpha * dir * t;
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let ncols = self.ncols;
        let piv = self.a[r * ncols + j];
        {
            let row = &mut self.a[r * ncols..(r + 1) * ncols];
            let inv = 1.0 / piv;
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[j] = 1.0;
        }
        let (before, rest) = self.a.split_at_mut(r * ncols);
        let (pivot_row, after) = rest.split_at_mut(ncols);
        for row in before.chunks_exact_mut(ncols).chain(after.chunks_exact_mut(ncols)) {
            let f = row[j];
            if f != 0.0 {
                for (v, &p) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * p;
                }
                row[j] = 0.0;
            }
        }
        let dj = self.d[j];
        if dj != 0.0 {
            for (v, &p) in self.d.iter_mut().zip(pivot_row.iter()) {
                *v -= dj * p;
            }
            self.d[j] = 0.0;
        }
        let leaving = self.basis[r];
        self.row_of[leaving] = usize::MAX;
        self.basis[r] = j;
        self.row_of[j] = r;
    }
}
