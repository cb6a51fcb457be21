//! Dense bounded-variable primal simplex.
//!
//! Rows are written as `A x - r = 0` with one logical `r_i` per row whose
//! bounds encode the row sense, so the all-logical basis is always available.
//! Phase 1 minimises the sum of bound infeasibilities of the basic variables
//! (no artificials); phase 2 minimises the model objective. The full tableau
//! `B^-1 [A | -I]` is kept and refreshed from the original data every
//! `REFACTOR_EVERY` pivots and before any optimality claim.

use serde::{Deserialize, Serialize};

use crate::milp::{ModelIR, Sense};

const REFACTOR_EVERY: usize = 200;
const DEGENERATE_RUN: usize = 50;
const PIVOT_TOL: f64 = 1e-9;
const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The final refactorisation did not confirm the basis.
    NumericalFailure,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    /// Objective including the model constant; NaN unless optimal.
    pub objective: f64,
    /// Structural values; meaningful only when optimal.
    pub x: Vec<f64>,
    pub iterations: usize,
}

/// Dense copy of a model's rows, costs and bounds. Build once, then solve
/// repeatedly with different column bounds.
#[derive(Debug, Clone)]
pub struct LpData {
    pub n: usize,
    pub m: usize,
    /// Row-major `m x n`.
    a: Vec<f64>,
    pub cost: Vec<f64>,
    pub obj_const: f64,
    pub row_lo: Vec<f64>,
    pub row_hi: Vec<f64>,
    pub col_lo: Vec<f64>,
    pub col_hi: Vec<f64>,
    cost_scale: f64,
}

impl LpData {
    pub fn from_model(model: &ModelIR) -> Self {
        let (n, m) = (model.n_vars(), model.constraints.len());
        let mut a = vec![0.0; m * n];
        let mut row_lo = Vec::with_capacity(m);
        let mut row_hi = Vec::with_capacity(m);
        for (i, row) in model.constraints.iter().enumerate() {
            for &(v, coef) in &row.terms {
                a[i * n + v.0] += coef;
            }
            let (lo, hi) = match row.sense {
                Sense::Le => (f64::NEG_INFINITY, row.rhs),
                Sense::Ge => (row.rhs, f64::INFINITY),
                Sense::Eq => (row.rhs, row.rhs),
            };
            row_lo.push(lo);
            row_hi.push(hi);
        }
        let cost = model.cost_vector();
        let cost_scale = cost.iter().fold(1.0_f64, |s, c| s.max(c.abs()));
        LpData {
            n,
            m,
            a,
            cost,
            obj_const: model.objective.constant,
            row_lo,
            row_hi,
            col_lo: model.variables.iter().map(|v| v.lower).collect(),
            col_hi: model.variables.iter().map(|v| v.upper).collect(),
            cost_scale,
        }
    }

    pub fn coef(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    pub fn solve(&self) -> LpResult {
        self.solve_with_bounds(&self.col_lo, &self.col_hi)
    }

    pub fn solve_with_bounds(&self, lo: &[f64], hi: &[f64]) -> LpResult {
        assert_eq!(lo.len(), self.n);
        assert_eq!(hi.len(), self.n);
        if lo.iter().zip(hi).any(|(l, h)| l > h) {
            return LpResult {
                status: LpStatus::Infeasible,
                objective: f64::NAN,
                x: Vec::new(),
                iterations: 0,
            };
        }
        Tableau::new(self, lo, hi).run()
    }
}

/// Relaxes integrality and solves.
pub fn solve_lp(model: &ModelIR) -> LpResult {
    LpData::from_model(model).solve()
}

fn ptol(bound: f64) -> f64 {
    PRIMAL_TOL * bound.abs().max(1.0)
}

struct Tableau<'a> {
    d: &'a LpData,
    /// `n + m` columns: structurals then logicals.
    width: usize,
    t: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    head: Vec<usize>,
    pos: Vec<Option<usize>>,
    /// Columns that can still matter: non-fixed, or currently basic.
    live: Vec<usize>,
    iterations: usize,
    since_refactor: usize,
    degenerate: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum Phase {
    One,
    Two,
}

enum Step {
    Optimal,
    Pivoted,
    Unbounded,
}

impl<'a> Tableau<'a> {
    fn new(d: &'a LpData, col_lo: &[f64], col_hi: &[f64]) -> Self {
        let (n, m) = (d.n, d.m);
        let width = n + m;
        let mut lo = col_lo.to_vec();
        let mut hi = col_hi.to_vec();
        lo.extend_from_slice(&d.row_lo);
        hi.extend_from_slice(&d.row_hi);
        let mut x = vec![0.0; width];
        for j in 0..n {
            x[j] = if lo[j].is_finite() {
                lo[j]
            } else if hi[j].is_finite() {
                hi[j]
            } else {
                0.0
            };
        }
        let mut t = vec![0.0; m * width];
        for i in 0..m {
            let row = &mut t[i * width..(i + 1) * width];
            for j in 0..n {
                row[j] = -d.coef(i, j);
            }
            row[n + i] = 1.0;
            x[n + i] = (0..n).map(|j| d.coef(i, j) * x[j]).sum();
        }
        let head: Vec<usize> = (n..width).collect();
        let mut pos = vec![None; width];
        for (i, &h) in head.iter().enumerate() {
            pos[h] = Some(i);
        }
        let live = (0..width).filter(|&j| lo[j] < hi[j] || pos[j].is_some()).collect();
        Tableau {
            d,
            width,
            t,
            lo,
            hi,
            x,
            head,
            pos,
            live,
            iterations: 0,
            since_refactor: 0,
            degenerate: 0,
        }
    }

    fn m(&self) -> usize {
        self.d.m
    }

    fn iteration_limit(&self) -> usize {
        50 * self.width + 1000
    }

    fn result(&self, status: LpStatus) -> LpResult {
        let optimal = status == LpStatus::Optimal;
        let x: Vec<f64> = if optimal {
            (0..self.d.n)
                .map(|j| self.x[j].clamp(self.lo[j], self.hi[j]))
                .collect()
        } else {
            Vec::new()
        };
        let objective = if optimal {
            self.d.obj_const + x.iter().zip(&self.d.cost).map(|(v, c)| v * c).sum::<f64>()
        } else {
            f64::NAN
        };
        LpResult {
            status,
            objective,
            x,
            iterations: self.iterations,
        }
    }

    fn run(mut self) -> LpResult {
        let mut confirmations = 0;
        loop {
            if self.iterations >= self.iteration_limit() {
                return self.result(LpStatus::IterationLimit);
            }
            if self.since_refactor >= REFACTOR_EVERY && !self.refactor() {
                return self.result(LpStatus::NumericalFailure);
            }
            let phase = if self.infeasibility() > 0.0 {
                Phase::One
            } else {
                Phase::Two
            };
            match self.step(phase) {
                Step::Pivoted => continue,
                Step::Unbounded => {
                    if phase == Phase::One {
                        return self.result(LpStatus::NumericalFailure);
                    }
                    return self.result(LpStatus::Unbounded);
                }
                Step::Optimal => {
                    if let Some(status) = self.confirm(phase) {
                        return self.result(status);
                    }
                    // Not confirmed: rebuild the tableau and keep pivoting.
                    if !self.refactor() {
                        return self.result(LpStatus::NumericalFailure);
                    }
                    confirmations += 1;
                    if confirmations > 5 {
                        return self.result(LpStatus::NumericalFailure);
                    }
                }
            }
        }
    }

    /// Sum of basic bound violations beyond tolerance (0 when primal feasible).
    fn infeasibility(&self) -> f64 {
        self.head
            .iter()
            .map(|&h| {
                let v = self.x[h];
                if v < self.lo[h] - ptol(self.lo[h]) {
                    self.lo[h] - v
                } else if v > self.hi[h] + ptol(self.hi[h]) {
                    v - self.hi[h]
                } else {
                    0.0
                }
            })
            .sum()
    }

    fn basic_costs(&self, phase: Phase) -> Vec<f64> {
        self.head
            .iter()
            .map(|&h| match phase {
                Phase::Two => self.col_cost(h),
                Phase::One => {
                    let v = self.x[h];
                    if v < self.lo[h] - ptol(self.lo[h]) {
                        -1.0
                    } else if v > self.hi[h] + ptol(self.hi[h]) {
                        1.0
                    } else {
                        0.0
                    }
                }
            })
            .collect()
    }

    fn col_cost(&self, j: usize) -> f64 {
        if j < self.d.n {
            self.d.cost[j]
        } else {
            0.0
        }
    }

    fn reduced_costs(&self, phase: Phase) -> Vec<f64> {
        let cb = self.basic_costs(phase);
        let w = self.width;
        let mut reduced = vec![0.0; w];
        if phase == Phase::Two {
            for &j in &self.live {
                reduced[j] = self.col_cost(j);
            }
        }
        for (i, &c) in cb.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let row = &self.t[i * w..(i + 1) * w];
            for &j in &self.live {
                reduced[j] -= c * row[j];
            }
        }
        reduced
    }

    /// Entering column and direction (+1 increase, -1 decrease).
    fn pricing_candidate(&self, phase: Phase) -> Option<(usize, f64)> {
        self.choose_entering(&self.reduced_costs(phase), phase)
    }

    fn choose_entering(&self, reduced: &[f64], phase: Phase) -> Option<(usize, f64)> {
        let tol = match phase {
            Phase::One => DUAL_TOL,
            Phase::Two => DUAL_TOL * self.d.cost_scale,
        };
        let bland = self.degenerate >= DEGENERATE_RUN;
        let mut best: Option<(usize, f64, f64)> = None;
        for &j in &self.live {
            if self.pos[j].is_some() || self.lo[j] == self.hi[j] {
                continue;
            }
            let dj = reduced[j];
            let can_up = self.x[j] < self.hi[j];
            let can_down = self.x[j] > self.lo[j];
            let dir = if dj < -tol && can_up {
                1.0
            } else if dj > tol && can_down {
                -1.0
            } else {
                continue;
            };
            if bland {
                if best.map_or(true, |(b, _, _)| j < b) {
                    best = Some((j, dir, dj.abs()));
                }
            } else if best.map_or(true, |(_, _, s)| dj.abs() > s) {
                best = Some((j, dir, dj.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Recomputes basic values and duals from the original data and checks
    /// the verdict of the tableau. `None` means the tableau has drifted.
    fn confirm(&mut self, phase: Phase) -> Option<LpStatus> {
        let f = BasisFactor::new(self)?;
        let xb = f.solve(self, &self.nonbasic_rhs());
        if xb.iter().any(|v| !v.is_finite()) {
            return None;
        }
        for (i, v) in xb.into_iter().enumerate() {
            self.x[self.head[i]] = v;
        }
        let infeasible = self.infeasibility() > 0.0;
        if infeasible != (phase == Phase::One) {
            return None;
        }
        let y = f.solve_transpose(self, &self.basic_costs(phase));
        let n = self.d.n;
        let mut reduced = vec![0.0; self.width];
        for &j in &self.live {
            if self.pos[j].is_some() {
                continue;
            }
            reduced[j] = if j < n {
                let c = if phase == Phase::Two { self.d.cost[j] } else { 0.0 };
                c - (0..self.m()).map(|i| y[i] * self.d.coef(i, j)).sum::<f64>()
            } else {
                y[j - n]
            };
        }
        if self.choose_entering(&reduced, phase).is_some() {
            return None;
        }
        Some(if infeasible {
            LpStatus::Infeasible
        } else {
            LpStatus::Optimal
        })
    }

    /// `-N x_N`, the right-hand side for the basic values.
    fn nonbasic_rhs(&self) -> Vec<f64> {
        let m = self.m();
        let mut rhs = vec![0.0; m];
        for j in 0..self.width {
            if self.pos[j].is_some() || self.x[j] == 0.0 {
                continue;
            }
            if j < self.d.n {
                for (i, r) in rhs.iter_mut().enumerate() {
                    *r -= self.d.coef(i, j) * self.x[j];
                }
            } else {
                rhs[j - self.d.n] += self.x[j];
            }
        }
        rhs
    }

    fn step(&mut self, phase: Phase) -> Step {
        let Some((q, dir)) = self.pricing_candidate(phase) else {
            return Step::Optimal;
        };
        let w = self.width;
        let m = self.m();
        let col: Vec<f64> = (0..m).map(|i| self.t[i * w + q]).collect();
        let col_max = col.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        let piv_tol = PIVOT_TOL * col_max.max(1.0);
        let bland = self.degenerate >= DEGENERATE_RUN;

        // Own bound range first: a bound flip needs no basis change.
        let mut step = self.hi[q] - self.lo[q];
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let alpha = col[i];
            if alpha.abs() <= piv_tol {
                continue;
            }
            let h = self.head[i];
            let rate = -dir * alpha;
            let v = self.x[h];
            let (lo, hi) = (self.lo[h], self.hi[h]);
            let below = v < lo - ptol(lo);
            let above = v > hi + ptol(hi);
            let target = if rate < 0.0 {
                match phase {
                    Phase::One if below => continue,
                    Phase::One if above => hi,
                    _ => lo,
                }
            } else {
                match phase {
                    Phase::One if above => continue,
                    Phase::One if below => lo,
                    _ => hi,
                }
            };
            if !target.is_finite() {
                continue;
            }
            let limit = ((target - v) / rate).max(0.0);
            let slack = 1e-12 * (1.0 + limit);
            let better = match leave {
                _ if limit < step - slack => true,
                Some((r, _)) if limit <= step + slack => {
                    if bland {
                        h < self.head[r]
                    } else {
                        alpha.abs() > col[r].abs()
                    }
                }
                _ => false,
            };
            if better {
                step = limit.min(step);
                leave = Some((i, target));
            }
        }
        if !step.is_finite() {
            return Step::Unbounded;
        }

        self.iterations += 1;
        if step <= 1e-12 {
            self.degenerate += 1;
        } else {
            self.degenerate = 0;
        }
        self.x[q] += dir * step;
        for i in 0..m {
            if col[i] != 0.0 {
                self.x[self.head[i]] -= dir * step * col[i];
            }
        }
        match leave {
            None => {
                self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
            }
            Some((r, target)) => {
                let out = self.head[r];
                self.x[out] = target;
                self.pivot(r, q);
                if self.lo[out] == self.hi[out] {
                    self.live.retain(|&j| j != out);
                }
            }
        }
        Step::Pivoted
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let m = self.m();
        let p = self.t[r * w + q];
        let pivot_row: Vec<(usize, f64)> = self
            .live
            .iter()
            .map(|&j| (j, self.t[r * w + j] / p))
            .collect();
        for &(j, v) in &pivot_row {
            self.t[r * w + j] = v;
        }
        self.t[r * w + q] = 1.0;
        for i in 0..m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * w..(i + 1) * w];
            for &(j, v) in &pivot_row {
                row[j] -= f * v;
            }
            row[q] = 0.0;
        }
        let out = self.head[r];
        self.pos[out] = None;
        self.head[r] = q;
        self.pos[q] = Some(r);
        self.since_refactor += 1;
    }

    /// Column `j` of `[A | -I]`.
    fn column(&self, j: usize) -> Vec<f64> {
        let (n, m) = (self.d.n, self.m());
        if j < n {
            (0..m).map(|i| self.d.coef(i, j)).collect()
        } else {
            let mut c = vec![0.0; m];
            c[j - n] = -1.0;
            c
        }
    }

    /// Rebuilds the live tableau columns and the basic values from the
    /// original data. Returns false if the basis is singular.
    fn refactor(&mut self) -> bool {
        let m = self.m();
        let w = self.width;
        self.since_refactor = 0;
        if m == 0 {
            return true;
        }
        let Some(f) = BasisFactor::new(self) else {
            return false;
        };
        let live = self.live.clone();
        for &j in &live {
            let sol = match self.pos[j] {
                Some(p) => {
                    let mut e = vec![0.0; m];
                    e[p] = 1.0;
                    e
                }
                None => f.solve(self, &self.column(j)),
            };
            for (i, v) in sol.into_iter().enumerate() {
                self.t[i * w + j] = v;
            }
        }
        let xb = f.solve(self, &self.nonbasic_rhs());
        if xb.iter().any(|v| !v.is_finite()) {
            return false;
        }
        for (i, v) in xb.into_iter().enumerate() {
            self.x[self.head[i]] = v;
        }
        true
    }
}

/// Factorisation of a basis `[A_S | -I_L]`. Rows covered by a basic logical
/// are eliminated directly; only the square block of structural columns on
/// the remaining rows goes through LU.
struct BasisFactor {
    /// Rows without a basic logical, in block order.
    rows: Vec<usize>,
    /// Basis positions of the structural columns, in block order.
    positions: Vec<usize>,
    /// Basis position of the logical covering each row, if any.
    logical_at: Vec<Option<usize>>,
    lu: Option<Lu>,
}

impl BasisFactor {
    fn new(t: &Tableau<'_>) -> Option<BasisFactor> {
        let (n, m) = (t.d.n, t.m());
        let mut logical_at = vec![None; m];
        let mut positions = Vec::new();
        for (p, &h) in t.head.iter().enumerate() {
            if h >= n {
                logical_at[h - n] = Some(p);
            } else {
                positions.push(p);
            }
        }
        let rows: Vec<usize> = (0..m).filter(|&i| logical_at[i].is_none()).collect();
        let k = rows.len();
        if k != positions.len() {
            return None;
        }
        let lu = if k == 0 {
            None
        } else {
            let mut block = vec![0.0; k * k];
            for (r, &i) in rows.iter().enumerate() {
                for (c, &p) in positions.iter().enumerate() {
                    block[r * k + c] = t.d.coef(i, t.head[p]);
                }
            }
            Some(Lu::factor(block, k)?)
        };
        Some(BasisFactor {
            rows,
            positions,
            logical_at,
            lu,
        })
    }

    /// Solves `B x = b`; the result is indexed by basis position.
    fn solve(&self, t: &Tableau<'_>, b: &[f64]) -> Vec<f64> {
        let m = t.m();
        let mut x = vec![0.0; m];
        let xs = match &self.lu {
            Some(lu) => lu.solve(self.rows.iter().map(|&i| b[i]).collect()),
            None => Vec::new(),
        };
        for (c, &p) in self.positions.iter().enumerate() {
            x[p] = xs[c];
        }
        for (i, slot) in self.logical_at.iter().enumerate() {
            if let Some(p) = *slot {
                let a: f64 = self
                    .positions
                    .iter()
                    .zip(&xs)
                    .map(|(&q, v)| t.d.coef(i, t.head[q]) * v)
                    .sum();
                x[p] = a - b[i];
            }
        }
        x
    }

    /// Solves `B^T y = c_B` for the row duals.
    fn solve_transpose(&self, t: &Tableau<'_>, cb: &[f64]) -> Vec<f64> {
        let m = t.m();
        let mut y = vec![0.0; m];
        for (i, slot) in self.logical_at.iter().enumerate() {
            if let Some(p) = *slot {
                y[i] = -cb[p];
            }
        }
        if let Some(lu) = &self.lu {
            let rhs: Vec<f64> = self
                .positions
                .iter()
                .map(|&p| {
                    let j = t.head[p];
                    let covered: f64 = (0..m)
                        .filter(|&i| self.logical_at[i].is_some())
                        .map(|i| t.d.coef(i, j) * y[i])
                        .sum();
                    cb[p] - covered
                })
                .collect();
            for (r, v) in self.rows.iter().zip(lu.solve_transpose(rhs)) {
                y[*r] = v;
            }
        }
        y
    }
}

/// Dense LU with partial pivoting.
pub(crate) struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub(crate) fn factor(mut a: Vec<f64>, n: usize) -> Option<Lu> {
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.iter().fold(0.0_f64, |s, v| s.max(v.abs())).max(1.0);
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, a[i * n + k].abs()))
                .fold((k, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
            if best <= 1e-13 * scale {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let piv = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / piv;
                if f == 0.0 {
                    continue;
                }
                a[i * n + k] = f;
                for j in k + 1..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
        Some(Lu { n, lu: a, perm })
    }

    pub(crate) fn solve(&self, b: Vec<f64>) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * y[j]).sum();
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[i * n + j] * y[j]).sum();
            y[i] = (y[i] - s) / self.lu[i * n + i];
        }
        y
    }

    /// Solves `A^T y = c`.
    pub(crate) fn solve_transpose(&self, c: Vec<f64>) -> Vec<f64> {
        let n = self.n;
        let mut w = c;
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[j * n + i] * w[j]).sum();
            w[i] = (w[i] - s) / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[j * n + i] * w[j]).sum();
            w[i] -= s;
        }
        let mut y = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            y[p] = w[i];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{Integrality, LinearConstraintDef};

    fn model(vars: &[(f64, f64)], rows: &[(&[f64], Sense, f64)], cost: &[f64]) -> ModelIR {
        let mut m = ModelIR::new("t");
        let ids: Vec<_> = vars
            .iter()
            .enumerate()
            .map(|(k, &(l, u))| m.add_var(format!("x{k}"), l, u, Integrality::Continuous).unwrap())
            .collect();
        for (r, (coefs, sense, rhs)) in rows.iter().enumerate() {
            let terms = ids.iter().zip(coefs.iter()).map(|(&v, &a)| (v, a)).collect();
            m.add_constraint(LinearConstraintDef::new(format!("r{r}"), terms, *sense, *rhs))
                .unwrap();
        }
        m.set_objective(ids.iter().zip(cost).map(|(&v, &c)| (v, c)).collect(), 0.0)
            .unwrap();
        m
    }

    const INF: f64 = f64::INFINITY;

    #[test]
    fn lower_bounded_by_row() {
        let m = model(&[(-INF, INF)], &[(&[1.0], Sense::Ge, 3.0)], &[1.0]);
        let r = solve_lp(&m);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - 3.0).abs() < 1e-12);
    }

    #[test]
    fn textbook_box() {
        let m = model(
            &[(0.0, 1.0), (0.0, 1.0)],
            &[(&[1.0, 1.0], Sense::Le, 1.0)],
            &[-1.0, -1.0],
        );
        let r = solve_lp(&m);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective + 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let m = model(
            &[(0.0, INF)],
            &[(&[1.0], Sense::Le, -1.0)],
            &[1.0],
        );
        assert_eq!(solve_lp(&m).status, LpStatus::Infeasible);
        let m = model(&[(0.0, INF), (0.0, INF)], &[(&[1.0, -1.0], Sense::Le, 1.0)], &[-1.0, 0.0]);
        assert_eq!(solve_lp(&m).status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_system_with_free_variables() {
        // x + y = 4, x - y = 2 -> (3, 1)
        let m = model(
            &[(-INF, INF), (-INF, INF)],
            &[(&[1.0, 1.0], Sense::Eq, 4.0), (&[1.0, -1.0], Sense::Eq, 2.0)],
            &[0.0, 0.0],
        );
        let r = solve_lp(&m);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.x[0] - 3.0).abs() < 1e-12 && (r.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_klee_minty_like() {
        // max 100x1 + 10x2 + x3 (as min of the negation), classic 3-d cube.
        let m = model(
            &[(0.0, INF), (0.0, INF), (0.0, INF)],
            &[
                (&[1.0, 0.0, 0.0], Sense::Le, 1.0),
                (&[20.0, 1.0, 0.0], Sense::Le, 100.0),
                (&[200.0, 20.0, 1.0], Sense::Le, 10000.0),
            ],
            &[-100.0, -10.0, -1.0],
        );
        let r = solve_lp(&m);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective + 10000.0).abs() < 1e-7, "{}", r.objective);
    }

    #[test]
    fn override_bounds_can_be_infeasible() {
        let m = model(&[(0.0, 1.0)], &[], &[1.0]);
        let d = LpData::from_model(&m);
        assert_eq!(d.solve_with_bounds(&[2.0], &[1.0]).status, LpStatus::Infeasible);
        let r = d.solve_with_bounds(&[0.5], &[1.0]);
        assert_eq!(r.objective, 0.5);
    }

    #[test]
    fn lu_solves() {
        let lu = Lu::factor(vec![0.0, 2.0, 1.0, 1.0], 2).unwrap();
        let x = lu.solve(vec![4.0, 3.0]);
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        let y = lu.solve_transpose(vec![1.0, 5.0]);
        // [0 1; 2 1]^T y = (1, 5)
        assert!((y[0] - 2.0).abs() < 1e-15 && (y[1] - 1.0).abs() < 1e-15);
        assert!(Lu::factor(vec![1.0, 2.0, 2.0, 4.0], 2).is_none());
    }
}
