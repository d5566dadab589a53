//! LP relaxation `max c^T x, Ax <= b, lo <= x <= hi` (default box `[0,1]^n`).
//!
//! Dense bounded-variable simplex. Every row gets a slack `s_i >= 0`, so the
//! working basis is `m x m` and its inverse is kept explicitly; with `m` in
//! the single digits that is cheaper than any factorization bookkeeping.
//! Nonbasic variables sit at a bound, basic ones are solved for.
//!
//! Cold solves run a phase 1 with artificial columns for rows whose slack
//! would start negative. Warm solves (branch-and-bound children) start from
//! the parent basis, which stays dual feasible after a bound change, and run
//! the dual simplex; any trouble there falls back to a cold solve.
//!
//! Pricing is largest-coefficient; after `stall_limit` consecutive degenerate
//! pivots it switches to Bland's rule until the objective moves again.

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::numerics::{dot, DenseMatrix};
use crate::random::{conditioned_column, RngHandle};

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const PHASE1_TOL: f64 = 1e-7;
/// Distance to `{0, 1}` under which a coordinate counts as integral.
pub const CLASSIFY_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;

#[derive(Debug, Clone, Copy)]
pub struct LpOptions {
    /// Pivot budget; `None` means `50 (n + m)`.
    pub iteration_limit: Option<usize>,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub stall_limit: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            iteration_limit: None,
            stall_limit: 50,
        }
    }
}

/// A simplex basis over structural columns `0..n` and slack columns `n..n+m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    /// Basic variable of each row.
    pub basic: Vec<usize>,
    /// For every variable, whether it rests at its upper bound when nonbasic.
    pub at_upper: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x_star: Vec<f64>,
    pub value: f64,
    /// Optimal duals of `Ax <= b`, clipped to be nonnegative.
    pub u_star: Vec<f64>,
    /// `c - A^T u*`.
    pub reduced_costs: Vec<f64>,
    pub basis: Basis,
    /// Coordinates at 0, at 1, and strictly fractional (within [`CLASSIFY_TOL`]).
    pub n0: Vec<usize>,
    pub n1: Vec<usize>,
    pub s: Vec<usize>,
    pub pivots: usize,
}

impl LpSolution {
    pub fn is_integral(&self) -> bool {
        self.s.is_empty()
    }

    /// `x*` with every coordinate snapped to the nearest of `{0, 1}`.
    pub fn rounded(&self) -> Vec<f64> {
        self.x_star.iter().map(|v| v.round()).collect()
    }
}

/// Column-major copy of an instance for repeated solves.
#[derive(Debug, Clone)]
pub struct LpModel {
    m: usize,
    n: usize,
    cols: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Basic(usize),
    Lower,
    Upper,
}

impl LpModel {
    pub fn new(inst: &Instance) -> Self {
        LpModel {
            m: inst.m,
            n: inst.n,
            cols: inst.a.to_col_major(),
            b: inst.b.clone(),
            c: inst.c.clone(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn col(&self, j: usize) -> &[f64] {
        &self.cols[j * self.m..(j + 1) * self.m]
    }

    /// Solves over `lo <= x <= hi`, optionally warm-started from `warm`.
    pub fn solve(
        &self,
        lo: &[f64],
        hi: &[f64],
        warm: Option<&Basis>,
        opts: &LpOptions,
    ) -> Result<LpSolution> {
        assert_eq!(lo.len(), self.n);
        assert_eq!(hi.len(), self.n);
        if let Some(j) = (0..self.n).find(|&j| lo[j] > hi[j]) {
            return Err(Error::domain(format!("empty bound interval for x[{j}]")));
        }
        let limit = opts
            .iteration_limit
            .unwrap_or(50 * (self.n + self.m));
        if let Some(basis) = warm {
            let mut work = Work::new(self, lo, hi, 0, limit, opts.stall_limit);
            match work.warm_solve(basis) {
                Ok(true) => return Ok(work.extract()),
                Ok(false) => {}
                Err(Error::Infeasible { .. }) => {
                    return Err(Error::Infeasible { certificate: None })
                }
                Err(Error::IterationLimit(_)) | Err(Error::SingularBasis) => {}
                Err(e) => return Err(e),
            }
        }
        self.cold_solve(lo, hi, limit, opts.stall_limit)
    }

    fn cold_solve(&self, lo: &[f64], hi: &[f64], limit: usize, stall: usize) -> Result<LpSolution> {
        let (m, n) = (self.m, self.n);
        let mut residual = self.b.clone();
        for j in 0..n {
            if lo[j] != 0.0 {
                for (r, a) in residual.iter_mut().zip(self.col(j)) {
                    *r -= a * lo[j];
                }
            }
        }
        let art_rows: Vec<usize> = (0..m).filter(|&i| residual[i] < 0.0).collect();
        let mut work = Work::new(self, lo, hi, art_rows.len(), limit, stall);
        work.art_rows = art_rows;
        work.cold_start(&residual);
        if !work.art_rows.is_empty() {
            work.set_phase1_cost();
            work.primal()?;
            let infeasibility: f64 = (0..work.art_rows.len()).map(|k| work.x[n + m + k]).sum();
            let scale = 1.0 + self.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if infeasibility > PHASE1_TOL * scale {
                return Err(Error::Infeasible {
                    certificate: Some(work.farkas()),
                });
            }
            for k in 0..work.art_rows.len() {
                let j = n + m + k;
                work.hi[j] = 0.0;
                if !matches!(work.state[j], State::Basic(_)) {
                    work.state[j] = State::Lower;
                    work.x[j] = 0.0;
                }
            }
        }
        work.set_phase2_cost();
        work.primal()?;
        Ok(work.extract())
    }
}

struct Work<'a> {
    model: &'a LpModel,
    m: usize,
    n: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basic: Vec<usize>,
    binv: Vec<f64>,
    art_rows: Vec<usize>,
    pivots: usize,
    limit: usize,
    since_refactor: usize,
    stall: usize,
    stall_limit: usize,
    bland: bool,
}

impl<'a> Work<'a> {
    fn new(
        model: &'a LpModel,
        lo: &[f64],
        hi: &[f64],
        nart: usize,
        limit: usize,
        stall_limit: usize,
    ) -> Self {
        let (m, n) = (model.m, model.n);
        let total = n + m + nart;
        let mut lo_all = lo.to_vec();
        let mut hi_all = hi.to_vec();
        lo_all.resize(total, 0.0);
        hi_all.resize(n + m, f64::INFINITY);
        hi_all.resize(total, f64::INFINITY);
        Work {
            model,
            m,
            n,
            lo: lo_all,
            hi: hi_all,
            cost: vec![0.0; total],
            x: vec![0.0; total],
            state: vec![State::Lower; total],
            basic: vec![0; m],
            binv: vec![0.0; m * m],
            art_rows: Vec::new(),
            pivots: 0,
            limit,
            since_refactor: 0,
            stall: 0,
            stall_limit,
            bland: false,
        }
    }

    fn total(&self) -> usize {
        self.lo.len()
    }

    /// `y^T a_j`.
    #[inline]
    fn dot_col(&self, y: &[f64], j: usize) -> f64 {
        let (m, n) = (self.m, self.n);
        if j < n {
            dot(y, self.model.col(j))
        } else if j < n + m {
            y[j - n]
        } else {
            -y[self.art_rows[j - n - m]]
        }
    }

    /// `B^{-1} a_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let (m, n) = (self.m, self.n);
        let mut out = vec![0.0; m];
        if j < n {
            let col = self.model.col(j);
            for (r, o) in out.iter_mut().enumerate() {
                *o = dot(&self.binv[r * m..(r + 1) * m], col);
            }
        } else {
            let (i, sign) = if j < n + m {
                (j - n, 1.0)
            } else {
                (self.art_rows[j - n - m], -1.0)
            };
            for (r, o) in out.iter_mut().enumerate() {
                *o = sign * self.binv[r * m + i];
            }
        }
        out
    }

    /// Dense column of variable `j` in the working constraint matrix.
    fn dense_col(&self, j: usize) -> Vec<f64> {
        let (m, n) = (self.m, self.n);
        if j < n {
            self.model.col(j).to_vec()
        } else {
            let mut v = vec![0.0; m];
            if j < n + m {
                v[j - n] = 1.0;
            } else {
                v[self.art_rows[j - n - m]] = -1.0;
            }
            v
        }
    }

    fn cold_start(&mut self, residual: &[f64]) {
        let (m, n) = (self.m, self.n);
        for j in 0..n {
            self.x[j] = self.lo[j];
            self.state[j] = State::Lower;
        }
        for i in 0..m {
            self.binv[i * m..(i + 1) * m].fill(0.0);
        }
        for i in 0..m {
            let slack = n + i;
            if let Some(k) = self.art_rows.iter().position(|&r| r == i) {
                let art = n + m + k;
                self.basic[i] = art;
                self.state[art] = State::Basic(i);
                self.x[art] = -residual[i];
                self.x[slack] = 0.0;
                self.state[slack] = State::Lower;
                self.binv[i * m + i] = -1.0;
            } else {
                self.basic[i] = slack;
                self.state[slack] = State::Basic(i);
                self.x[slack] = residual[i];
                self.binv[i * m + i] = 1.0;
            }
        }
    }

    fn set_phase1_cost(&mut self) {
        self.cost.fill(0.0);
        let start = self.n + self.m;
        for c in &mut self.cost[start..] {
            *c = -1.0;
        }
    }

    fn set_phase2_cost(&mut self) {
        self.cost.fill(0.0);
        self.cost[..self.n].copy_from_slice(&self.model.c);
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut mat = vec![0.0; m * m];
        for (r, &j) in self.basic.iter().enumerate() {
            let col = self.dense_col(j);
            for i in 0..m {
                mat[i * m + r] = col[i];
            }
        }
        self.binv = invert(&mat, m).ok_or(Error::SingularBasis)?;
        self.since_refactor = 0;
        Ok(())
    }

    fn recompute_basics(&mut self) {
        let (m, total) = (self.m, self.total());
        let mut rhs = self.model.b.clone();
        for j in 0..total {
            if matches!(self.state[j], State::Basic(_)) || self.x[j] == 0.0 {
                continue;
            }
            let xj = self.x[j];
            let col = self.dense_col(j);
            for i in 0..m {
                rhs[i] -= col[i] * xj;
            }
        }
        for r in 0..m {
            let v = dot(&self.binv[r * m..(r + 1) * m], &rhs);
            self.x[self.basic[r]] = v;
        }
    }

    /// `y^T = c_B^T B^{-1}`.
    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for r in 0..m {
            let cb = self.cost[self.basic[r]];
            if cb == 0.0 {
                continue;
            }
            for i in 0..m {
                y[i] += cb * self.binv[r * m + i];
            }
        }
        y
    }

    /// Replaces the basic variable of row `r` given `alpha = B^{-1} a_q`.
    fn update_inverse(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[r];
        for i in 0..m {
            self.binv[r * m + i] /= piv;
        }
        for row in 0..m {
            if row == r || alpha[row] == 0.0 {
                continue;
            }
            let f = alpha[row];
            for i in 0..m {
                self.binv[row * m + i] -= f * self.binv[r * m + i];
            }
        }
        self.since_refactor += 1;
    }

    fn count_pivot(&mut self, step: f64) -> Result<()> {
        self.pivots += 1;
        if self.pivots > self.limit {
            return Err(Error::IterationLimit(self.limit));
        }
        if step <= 1e-12 {
            self.stall += 1;
            if self.stall > self.stall_limit {
                self.bland = true;
            }
        } else {
            self.stall = 0;
            self.bland = false;
        }
        Ok(())
    }

    fn maybe_refactor(&mut self) -> Result<()> {
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor()?;
            self.recompute_basics();
        }
        Ok(())
    }

    /// Primal simplex on the current cost vector; the basis must be primal feasible.
    fn primal(&mut self) -> Result<()> {
        let total = self.total();
        loop {
            self.maybe_refactor()?;
            let y = self.duals();
            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..total {
                let dir = match self.state[j] {
                    State::Basic(_) => continue,
                    _ if self.hi[j] <= self.lo[j] => continue,
                    State::Lower => 1.0,
                    State::Upper => -1.0,
                };
                let d = self.cost[j] - self.dot_col(&y, j);
                let score = dir * d;
                if score > DUAL_TOL {
                    if self.bland {
                        entering = Some((j, dir, score));
                        break;
                    }
                    if entering.is_none_or(|(_, _, s)| score > s) {
                        entering = Some((j, dir, score));
                    }
                }
            }
            let Some((q, dir, _)) = entering else {
                return Ok(());
            };
            let alpha = self.ftran(q);
            let mut step = self.hi[q] - self.lo[q];
            let mut leave: Option<(usize, bool)> = None;
            for r in 0..self.m {
                let rate = -dir * alpha[r];
                let bj = self.basic[r];
                let (t, to_upper) = if rate < -PIVOT_TOL {
                    ((self.x[bj] - self.lo[bj]).max(0.0) / -rate, false)
                } else if rate > PIVOT_TOL && self.hi[bj].is_finite() {
                    ((self.hi[bj] - self.x[bj]).max(0.0) / rate, true)
                } else {
                    continue;
                };
                let better = match leave {
                    _ if t < step - 1e-12 => true,
                    Some((lr, _)) if t <= step + 1e-12 => {
                        if self.bland {
                            bj < self.basic[lr]
                        } else {
                            alpha[r].abs() > alpha[lr].abs()
                        }
                    }
                    _ => false,
                };
                if better {
                    step = t;
                    leave = Some((r, to_upper));
                }
            }
            if !step.is_finite() {
                return Err(Error::domain("LP is unbounded"));
            }
            for r in 0..self.m {
                let bj = self.basic[r];
                self.x[bj] -= dir * alpha[r] * step;
            }
            match leave {
                None => {
                    if dir > 0.0 {
                        self.x[q] = self.hi[q];
                        self.state[q] = State::Upper;
                    } else {
                        self.x[q] = self.lo[q];
                        self.state[q] = State::Lower;
                    }
                }
                Some((r, to_upper)) => {
                    self.x[q] += dir * step;
                    let bj = self.basic[r];
                    if to_upper {
                        self.x[bj] = self.hi[bj];
                        self.state[bj] = State::Upper;
                    } else {
                        self.x[bj] = self.lo[bj];
                        self.state[bj] = State::Lower;
                    }
                    self.basic[r] = q;
                    self.state[q] = State::Basic(r);
                    self.update_inverse(r, &alpha);
                }
            }
            self.count_pivot(step)?;
        }
    }

    /// Dual simplex from a given basis. Returns `Ok(false)` when the basis is
    /// unusable and the caller should solve cold.
    fn warm_solve(&mut self, basis: &Basis) -> Result<bool> {
        let (m, n) = (self.m, self.n);
        if basis.basic.len() != m || basis.at_upper.len() != n + m {
            return Ok(false);
        }
        let mut seen = vec![false; n + m];
        for &j in &basis.basic {
            if j >= n + m || seen[j] {
                return Ok(false);
            }
            seen[j] = true;
        }
        for j in 0..n + m {
            if !seen[j] {
                if basis.at_upper[j] && self.hi[j].is_finite() {
                    self.state[j] = State::Upper;
                    self.x[j] = self.hi[j];
                } else {
                    self.state[j] = State::Lower;
                    self.x[j] = self.lo[j];
                }
            }
        }
        for (r, &j) in basis.basic.iter().enumerate() {
            self.basic[r] = j;
            self.state[j] = State::Basic(r);
        }
        self.set_phase2_cost();
        if self.refactor().is_err() {
            return Ok(false);
        }
        self.recompute_basics();

        // The basis must be dual feasible for the dual simplex to apply.
        let y = self.duals();
        for j in 0..n + m {
            if self.hi[j] <= self.lo[j] {
                continue;
            }
            let d = self.model_cost(j) - self.dot_col(&y, j);
            match self.state[j] {
                State::Lower if d > 1e-7 => return Ok(false),
                State::Upper if d < -1e-7 => return Ok(false),
                _ => {}
            }
        }

        loop {
            self.maybe_refactor()?;
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..m {
                let bj = self.basic[r];
                let infeas = if self.x[bj] < self.lo[bj] - PRIMAL_TOL {
                    self.lo[bj] - self.x[bj]
                } else if self.x[bj] > self.hi[bj] + PRIMAL_TOL {
                    self.x[bj] - self.hi[bj]
                } else {
                    continue;
                };
                let better = match leave {
                    None => true,
                    Some((lr, best)) => {
                        if self.bland {
                            bj < self.basic[lr]
                        } else {
                            infeas > best
                        }
                    }
                };
                if better {
                    leave = Some((r, infeas));
                }
            }
            let Some((r, _)) = leave else {
                break;
            };
            let bl = self.basic[r];
            let below = self.x[bl] < self.lo[bl];
            let target = if below { self.lo[bl] } else { self.hi[bl] };
            let rho: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
            let y = self.duals();
            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..self.total() {
                let st = self.state[j];
                if matches!(st, State::Basic(_)) || self.hi[j] <= self.lo[j] {
                    continue;
                }
                let a_rj = self.dot_col(&rho, j);
                let eligible = match (st, below) {
                    (State::Lower, true) => a_rj < -PIVOT_TOL,
                    (State::Upper, true) => a_rj > PIVOT_TOL,
                    (State::Lower, false) => a_rj > PIVOT_TOL,
                    (State::Upper, false) => a_rj < -PIVOT_TOL,
                    _ => false,
                };
                if !eligible {
                    continue;
                }
                let d = self.cost[j] - self.dot_col(&y, j);
                let ratio = d.abs() / a_rj.abs();
                let better = match entering {
                    None => true,
                    Some((_, best, best_a)) => {
                        ratio < best - 1e-12
                            || (ratio <= best + 1e-12 && !self.bland && a_rj.abs() > best_a)
                    }
                };
                if better {
                    entering = Some((j, ratio, a_rj.abs()));
                }
            }
            let Some((q, ratio, _)) = entering else {
                return Err(Error::Infeasible { certificate: None });
            };
            let alpha = self.ftran(q);
            if alpha[r].abs() < PIVOT_TOL {
                return Ok(false);
            }
            let delta = (self.x[bl] - target) / alpha[r];
            for i in 0..m {
                let bj = self.basic[i];
                self.x[bj] -= alpha[i] * delta;
            }
            self.x[q] += delta;
            self.x[bl] = target;
            self.state[bl] = if below { State::Lower } else { State::Upper };
            self.basic[r] = q;
            self.state[q] = State::Basic(r);
            self.update_inverse(r, &alpha);
            self.count_pivot(ratio)?;
        }
        self.primal()?;
        Ok(true)
    }

    fn model_cost(&self, j: usize) -> f64 {
        if j < self.n {
            self.model.c[j]
        } else {
            0.0
        }
    }

    /// Phase-1 duals as an infeasibility certificate.
    fn farkas(&mut self) -> Vec<f64> {
        if self.refactor().is_ok() {
            self.recompute_basics();
        }
        self.duals().into_iter().map(|v| v.max(0.0)).collect()
    }

    fn extract(mut self) -> LpSolution {
        let (m, n) = (self.m, self.n);
        if self.refactor().is_ok() {
            self.recompute_basics();
        }
        self.set_phase2_cost();
        let y = self.duals();
        let mut x_star: Vec<f64> = self.x[..n].to_vec();
        for j in 0..n {
            x_star[j] = x_star[j].clamp(self.lo[j], self.hi[j]);
        }
        // Optimality leaves y >= -DUAL_TOL; clip the roundoff to zero.
        let u_star: Vec<f64> = y.iter().map(|v| v.max(0.0)).collect();
        let mut reduced_costs = self.model.c.clone();
        for (j, rc) in reduced_costs.iter_mut().enumerate() {
            *rc -= dot(&u_star, self.model.col(j));
        }
        let value = dot(&self.model.c, &x_star);
        let (mut n0, mut n1, mut s) = (Vec::new(), Vec::new(), Vec::new());
        for (j, v) in x_star.iter().enumerate() {
            if v.abs() <= CLASSIFY_TOL {
                n0.push(j);
            } else if (1.0 - v).abs() <= CLASSIFY_TOL {
                n1.push(j);
            } else {
                s.push(j);
            }
        }
        // Artificial columns left basic at zero are swapped for their row's
        // slack; the column differs only in sign so the basis stays regular.
        let basic: Vec<usize> = self
            .basic
            .iter()
            .map(|&j| if j >= n + m { n + self.art_rows[j - n - m] } else { j })
            .collect();
        let at_upper: Vec<bool> = (0..n + m)
            .map(|j| self.state[j] == State::Upper)
            .collect();
        LpSolution {
            x_star,
            value,
            u_star,
            reduced_costs,
            basis: Basis { basic, at_upper },
            n0,
            n1,
            s,
            pivots: self.pivots,
        }
    }
}

/// Gauss-Jordan inverse with partial pivoting; `None` if singular.
fn invert(mat: &[f64], m: usize) -> Option<Vec<f64>> {
    let mut a = mat.to_vec();
    let mut inv = vec![0.0; m * m];
    for i in 0..m {
        inv[i * m + i] = 1.0;
    }
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i * m + col].abs().total_cmp(&a[j * m + col].abs()))?;
        if a[piv * m + col].abs() < 1e-12 {
            return None;
        }
        if piv != col {
            for k in 0..m {
                a.swap(piv * m + k, col * m + k);
                inv.swap(piv * m + k, col * m + k);
            }
        }
        let p = a[col * m + col];
        for k in 0..m {
            a[col * m + k] /= p;
            inv[col * m + k] /= p;
        }
        for row in 0..m {
            if row == col {
                continue;
            }
            let f = a[row * m + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..m {
                a[row * m + k] -= f * a[col * m + k];
                inv[row * m + k] -= f * inv[col * m + k];
            }
        }
    }
    Some(inv)
}

/// Optimal basic solution of the LP relaxation over `[0,1]^n`.
pub fn solve_lp(inst: &Instance) -> Result<LpSolution> {
    solve_lp_with(inst, &LpOptions::default())
}

pub fn solve_lp_with(inst: &Instance, opts: &LpOptions) -> Result<LpSolution> {
    let model = LpModel::new(inst);
    model.solve(&vec![0.0; inst.n], &vec![1.0; inst.n], None, opts)
}

/// `b^T u + Σ (c - A^T u)⁺`, the dual objective.
pub fn dual_value(u: &[f64], inst: &Instance) -> Result<f64> {
    check_dual(u, inst)?;
    let atu = inst.a.tr_mul_vec(u);
    let pos: f64 = inst.c.iter().zip(&atu).map(|(c, a)| (c - a).max(0.0)).sum();
    Ok(dot(&inst.b, u) + pos)
}

fn check_dual(u: &[f64], inst: &Instance) -> Result<()> {
    if u.len() != inst.m {
        return Err(Error::Dimension(format!("u has length {}, expected {}", u.len(), inst.m)));
    }
    if u.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::domain("dual vector must be finite and nonnegative"));
    }
    Ok(())
}

/// The primal-dual gap of `(x, u)` split into its slack and reduced-cost parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapBreakdown {
    /// `(b - Ax)^T u`.
    pub slack_term: f64,
    /// `Σ x_i (A^T u - c)_i⁺ + (1 - x_i)(c - A^T u)_i⁺`.
    pub cost_term: f64,
    /// `slack_term + cost_term`.
    pub total: f64,
    /// `dual_value(u) - c^T x`, computed directly.
    pub definition: f64,
}

pub fn gap_formula(x: &[f64], u: &[f64], inst: &Instance) -> Result<GapBreakdown> {
    check_dual(u, inst)?;
    if x.len() != inst.n {
        return Err(Error::Dimension(format!("x has length {}, expected {}", x.len(), inst.n)));
    }
    if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::domain("gap_formula needs x in [0,1]^n"));
    }
    let ax = inst.a.mul_vec(x);
    let atu = inst.a.tr_mul_vec(u);
    let slack_term: f64 = inst
        .b
        .iter()
        .zip(&ax)
        .zip(u)
        .map(|((b, ax), u)| (b - ax) * u)
        .sum();
    let cost_term: f64 = (0..inst.n)
        .map(|i| {
            let red = inst.c[i] - atu[i];
            x[i] * (-red).max(0.0) + (1.0 - x[i]) * red.max(0.0)
        })
        .sum();
    let total = slack_term + cost_term;
    let definition = dual_value(u, inst)? - dot(&inst.c, x);
    let scale = 1.0 + total.abs().max(definition.abs());
    if (total - definition).abs() > 1e-9 * scale {
        return Err(Error::domain(format!(
            "gap expansion {total} disagrees with definition {definition}"
        )));
    }
    Ok(GapBreakdown {
        slack_term,
        cost_term,
        total,
        definition,
    })
}

/// Copy of `inst` whose column `i` (objective and constraints) is redrawn
/// from the Gaussian law conditioned on `c_i - u*^T A_i <= 0`.
pub fn resample_zero_column(
    inst: &Instance,
    sol: &LpSolution,
    i: usize,
    rng: &mut RngHandle,
) -> Result<Instance> {
    if sol.n0.binary_search(&i).is_err() {
        return Err(Error::domain(format!("column {i} is not at zero in the LP optimum")));
    }
    let col = conditioned_column(&sol.u_star, rng)?;
    let mut out = inst.clone();
    out.c[i] = col.c;
    out.a.set_column(i, &col.a);
    Ok(out)
}

/// Row-major `m x n` matrix from nested rows; test and example helper.
pub fn matrix_from_rows(rows: &[&[f64]]) -> Result<DenseMatrix> {
    let m = rows.len();
    let n = rows.first().map_or(0, |r| r.len());
    let data: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
    DenseMatrix::new(m, n, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::BSpec;

    fn inst(rows: &[&[f64]], b: &[f64], c: &[f64]) -> Instance {
        Instance::from_parts(matrix_from_rows(rows).unwrap(), b.to_vec(), c.to_vec()).unwrap()
    }

    #[test]
    fn single_variable() {
        let p = inst(&[&[1.0]], &[0.5], &[1.0]);
        let sol = solve_lp(&p).unwrap();
        assert!((sol.x_star[0] - 0.5).abs() < 1e-12);
        assert!((sol.value - 0.5).abs() < 1e-12);
        assert!((sol.u_star[0] - 1.0).abs() < 1e-12);
        assert_eq!(sol.s, vec![0]);
    }

    #[test]
    fn slack_constraint() {
        let p = inst(&[&[1.0, 1.0]], &[3.0], &[1.0, 1.0]);
        let sol = solve_lp(&p).unwrap();
        assert_eq!(sol.x_star, vec![1.0, 1.0]);
        assert!((sol.value - 2.0).abs() < 1e-12);
        assert_eq!(sol.u_star, vec![0.0]);
        assert_eq!(sol.n1, vec![0, 1]);
    }

    #[test]
    fn negative_rhs_needs_phase_one() {
        // x1 + x2 >= 0.5 written as -x1 - x2 <= -0.5; maximize -x1 - 2 x2.
        let p = inst(&[&[-1.0, -1.0]], &[-0.5], &[-1.0, -2.0]);
        let sol = solve_lp(&p).unwrap();
        assert!((sol.x_star[0] - 0.5).abs() < 1e-12);
        assert!(sol.x_star[1].abs() < 1e-12);
        assert!((sol.value + 0.5).abs() < 1e-12);
        assert!((sol.u_star[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_with_certificate() {
        // x1 + x2 >= 3 cannot hold in the unit box.
        let p = inst(&[&[-1.0, -1.0]], &[-3.0], &[1.0, 1.0]);
        match solve_lp(&p) {
            Err(Error::Infeasible {
                certificate: Some(u),
            }) => {
                assert!(u.iter().all(|v| *v >= 0.0));
                // u^T b < min over the box of u^T A x.
                let atu = p.a.tr_mul_vec(&u);
                let box_min: f64 = atu.iter().map(|v| v.min(0.0)).sum();
                assert!(dot(&u, &p.b) < box_min - 1e-9);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn dual_value_at_zero() {
        let mut rng = RngHandle::new(11, 0);
        let p = Instance::generate(3, 20, BSpec::Zeros, &mut rng).unwrap();
        let pos: f64 = p.c.iter().map(|v| v.max(0.0)).sum();
        assert!((dual_value(&[0.0; 3], &p).unwrap() - pos).abs() < 1e-12);
        assert!(dual_value(&[-1.0, 0.0, 0.0], &p).is_err());
        let g = gap_formula(&vec![0.0; 20], &[0.0; 3], &p).unwrap();
        assert!((g.total - pos).abs() < 1e-12);
        assert!(gap_formula(&vec![1.5; 20], &[0.0; 3], &p).is_err());
    }

    #[test]
    fn strong_duality_and_slackness() {
        for seed in 0..50 {
            let mut rng = RngHandle::new(seed, 0);
            let spec = if seed % 2 == 0 { BSpec::Zeros } else { BSpec::Gaussian };
            let p = Instance::generate(1 + (seed as usize % 4), 30, spec, &mut rng).unwrap();
            let sol = match solve_lp(&p) {
                Ok(s) => s,
                Err(Error::Infeasible { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            assert!(p.max_violation(&sol.x_star) <= 1e-7);
            let dv = dual_value(&sol.u_star, &p).unwrap();
            assert!((dv - sol.value).abs() <= 1e-7 * (1.0 + sol.value.abs()));
            assert!(sol.s.len() <= p.m);
            let g = gap_formula(&sol.x_star, &sol.u_star, &p).unwrap();
            assert!(g.total <= 1e-7);
            for &i in &sol.n0 {
                assert!(sol.reduced_costs[i] <= 1e-9);
            }
            let ax = p.a.mul_vec(&sol.x_star);
            for j in 0..p.m {
                assert!(sol.u_star[j] * (p.b[j] - ax[j]) <= 1e-7);
            }
        }
    }

    #[test]
    fn warm_start_matches_cold() {
        for seed in 0..30 {
            let mut rng = RngHandle::new(seed, 5);
            let p = Instance::generate(3, 25, BSpec::Zeros, &mut rng).unwrap();
            let model = LpModel::new(&p);
            let (lo, mut hi) = (vec![0.0; 25], vec![1.0; 25]);
            let root = model.solve(&lo, &hi, None, &LpOptions::default()).unwrap();
            // Fix the first positive coordinate to zero and resolve both ways.
            let Some(j) = (0..25).find(|&j| root.x_star[j] > 0.5) else { continue };
            hi[j] = 0.0;
            let cold = model.solve(&lo, &hi, None, &LpOptions::default()).unwrap();
            let warm = model
                .solve(&lo, &hi, Some(&root.basis), &LpOptions::default())
                .unwrap();
            assert!((cold.value - warm.value).abs() < 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn resample_rejects_non_zero_column() {
        let p = inst(&[&[1.0]], &[0.5], &[1.0]);
        let sol = solve_lp(&p).unwrap();
        assert!(resample_zero_column(&p, &sol, 0, &mut RngHandle::new(0, 0)).is_err());
    }
}
