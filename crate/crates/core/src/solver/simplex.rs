//! Bounded-variable primal simplex on a dense tableau.
//!
//! Every row gets a slack so the system reads `A x + s = b`, with the slack
//! bounded by the row sense (`<=`: `s >= 0`, `>=`: `s <= 0`, `=`: `s = 0`).
//! Rows whose starting slack is out of bounds receive an artificial column;
//! phase one drives those to zero. Pricing is Dantzig's rule, falling back
//! to Bland's rule after a run of degenerate pivots. The tableau is rebuilt
//! from the original matrix every `refactor_every` pivots and before the
//! answer is returned.

use super::SolverError;
use crate::model::{MilpModel, Sense};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    pub refactor_every: usize,
    /// Defaults to `50 * (rows + columns)` when `None`.
    pub max_iterations: Option<usize>,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-7,
            pivot_tol: 1e-9,
            refactor_every: 64,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Structural column values; empty unless `Optimal`.
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpSolution {
    fn without_values(status: LpStatus, iterations: usize) -> Self {
        Self {
            status,
            values: Vec::new(),
            objective: match status {
                LpStatus::Unbounded => f64::NEG_INFINITY,
                _ => f64::INFINITY,
            },
            iterations,
        }
    }
}

/// Solves `min c x` over the rows of `model` with column bounds `lower`,
/// `upper` (binary marks are ignored).
pub fn solve_lp(model: &MilpModel, lower: &[f64], upper: &[f64], opts: &LpOptions) -> Result<LpSolution, SolverError> {
    let n = model.columns.len();
    assert_eq!(lower.len(), n);
    assert_eq!(upper.len(), n);
    for j in 0..n {
        if lower[j] > upper[j] + opts.feasibility_tol {
            return Ok(LpSolution::without_values(LpStatus::Infeasible, 0));
        }
    }
    let mut tab = Tableau::new(model, lower, upper, opts);
    tab.run()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

struct Tableau<'a> {
    opts: &'a LpOptions,
    m: usize,
    /// structural columns
    n: usize,
    /// all columns: structural, slack, artificial
    cols: usize,
    /// original `[A | I | art]`, row-major
    orig: Vec<f64>,
    rhs: Vec<f64>,
    /// current `B^-1 [A | I | art]`, row-major
    tab: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    cost: Vec<f64>,
    phase_one_cost: Vec<f64>,
    first_artificial: usize,
    iterations: usize,
    pivots_since_refactor: usize,
    max_iterations: usize,
}

impl<'a> Tableau<'a> {
    fn new(model: &MilpModel, lower: &[f64], upper: &[f64], opts: &'a LpOptions) -> Self {
        let m = model.rows.len();
        let n = model.columns.len();

        let mut x = Vec::with_capacity(n + 2 * m);
        for j in 0..n {
            let (l, u) = (lower[j], upper[j].max(lower[j]));
            x.push(if l.is_finite() {
                l
            } else if u.is_finite() {
                u
            } else {
                0.0
            });
        }
        let mut lb: Vec<f64> = lower.to_vec();
        let mut ub: Vec<f64> = (0..n).map(|j| upper[j].max(lower[j])).collect();

        let mut residual: Vec<f64> = model.rows.iter().map(|r| r.rhs - r.activity(&x)).collect();
        let mut slack_basic = vec![true; m];
        let mut art_sign = Vec::new();
        for (i, row) in model.rows.iter().enumerate() {
            let (sl, su) = match row.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lb.push(sl);
            ub.push(su);
            let r = residual[i];
            if r >= sl - opts.feasibility_tol && r <= su + opts.feasibility_tol {
                x.push(r.clamp(sl, su));
            } else {
                let v = if r < sl { sl } else { su };
                x.push(v);
                residual[i] = r - v;
                slack_basic[i] = false;
                art_sign.push((i, residual[i].signum()));
            }
        }
        let first_artificial = n + m;
        let cols = first_artificial + art_sign.len();
        for &(i, _) in &art_sign {
            lb.push(0.0);
            ub.push(f64::INFINITY);
            x.push(residual[i].abs());
        }

        let mut orig = vec![0.0; m * cols];
        for (i, row) in model.rows.iter().enumerate() {
            for &(j, a) in &row.terms {
                orig[i * cols + j] += a;
            }
            orig[i * cols + n + i] = 1.0;
        }
        let mut basis = vec![0; m];
        for (i, basic) in slack_basic.iter().enumerate() {
            if *basic {
                basis[i] = n + i;
            }
        }
        for (k, &(i, sign)) in art_sign.iter().enumerate() {
            orig[i * cols + first_artificial + k] = sign;
            basis[i] = first_artificial + k;
        }
        let mut is_basic = vec![false; cols];
        for &b in &basis {
            is_basic[b] = true;
        }

        let mut cost = vec![0.0; cols];
        for (j, c) in model.columns.iter().enumerate() {
            cost[j] = c.cost;
        }
        let mut phase_one_cost = vec![0.0; cols];
        for c in &mut phase_one_cost[first_artificial..] {
            *c = 1.0;
        }

        let rhs = model.rows.iter().map(|r| r.rhs).collect();
        let max_iterations = opts.max_iterations.unwrap_or(50 * (m + cols) + 1000);
        let mut tab = Self {
            opts,
            m,
            n,
            cols,
            tab: orig.clone(),
            orig,
            rhs,
            lb,
            ub,
            x,
            basis,
            is_basic,
            cost,
            phase_one_cost,
            first_artificial,
            iterations: 0,
            pivots_since_refactor: 0,
            max_iterations,
        };
        // artificial rows carry a -1 sign in B
        for &(i, sign) in &art_sign {
            if sign < 0.0 {
                let row = &mut tab.tab[i * cols..(i + 1) * cols];
                row.iter_mut().for_each(|v| *v = -*v);
            }
        }
        tab
    }

    fn run(&mut self) -> Result<LpSolution, SolverError> {
        if self.first_artificial < self.cols {
            let status = self.optimize(Phase::One)?;
            debug_assert_ne!(status, LpStatus::Unbounded);
            self.refactor()?;
            let infeasibility: f64 = (self.first_artificial..self.cols).map(|j| self.x[j]).sum();
            let scale = 1.0 + self.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            if infeasibility > self.opts.feasibility_tol * scale {
                return Ok(LpSolution::without_values(LpStatus::Infeasible, self.iterations));
            }
            self.evict_artificials();
        }
        let status = self.optimize(Phase::Two)?;
        if status == LpStatus::Unbounded {
            return Ok(LpSolution::without_values(LpStatus::Unbounded, self.iterations));
        }
        self.refactor()?;
        let values = self.x[..self.n].to_vec();
        let objective = (0..self.n).map(|j| self.cost[j] * values[j]).sum();
        Ok(LpSolution {
            status: LpStatus::Optimal,
            values,
            objective,
            iterations: self.iterations,
        })
    }

    /// Pivots zero-valued basic artificials out where possible, then pins
    /// every artificial at zero.
    fn evict_artificials(&mut self) {
        for r in 0..self.m {
            if self.basis[r] < self.first_artificial {
                continue;
            }
            let row = &self.tab[r * self.cols..(r + 1) * self.cols];
            let pick = (0..self.first_artificial)
                .filter(|&j| !self.is_basic[j] && self.lb[j] < self.ub[j])
                .map(|j| (j, row[j].abs()))
                .filter(|&(_, a)| a > 1e-7)
                .fold(None, |best: Option<(usize, f64)>, c| match best {
                    Some(b) if b.1 >= c.1 => Some(b),
                    _ => Some(c),
                });
            if let Some((j, _)) = pick {
                let leaving = self.basis[r];
                self.pivot(r, j);
                self.x[leaving] = 0.0;
            }
        }
        for j in self.first_artificial..self.cols {
            self.ub[j] = 0.0;
            if !self.is_basic[j] {
                self.x[j] = 0.0;
            }
        }
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.tab[i * self.cols..(i + 1) * self.cols];
                for (dj, a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        d
    }

    fn optimize(&mut self, phase: Phase) -> Result<LpStatus, SolverError> {
        let cost = match phase {
            Phase::One => self.phase_one_cost.clone(),
            Phase::Two => self.cost.clone(),
        };
        let mut degenerate_run = 0usize;
        let mut bland = false;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(SolverError::IterationLimit {
                    iterations: self.iterations,
                });
            }
            let d = self.reduced_costs(&cost);

            let mut entering: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for (j, &dj) in d.iter().enumerate().take(self.cols) {
                if self.is_basic[j] || self.lb[j] >= self.ub[j] {
                    continue;
                }
                let at_lower = self.x[j] <= self.lb[j];
                let at_upper = self.x[j] >= self.ub[j];
                let dir = if dj < -self.opts.optimality_tol && !at_upper {
                    1.0
                } else if dj > self.opts.optimality_tol && !at_lower {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    entering = Some((j, dir));
                    break;
                }
                if dj.abs() > best {
                    best = dj.abs();
                    entering = Some((j, dir));
                }
            }
            let Some((j, dir)) = entering else {
                return Ok(LpStatus::Optimal);
            };

            // ratio test
            let mut theta = f64::INFINITY;
            let mut leave: Option<usize> = None;
            let mut leave_alpha = 0.0;
            for i in 0..self.m {
                let a = self.tab[i * self.cols + j];
                if a.abs() <= self.opts.pivot_tol {
                    continue;
                }
                let b = self.basis[i];
                // basic variable moves by -dir * a per unit of theta
                let rate = -dir * a;
                let room = if rate < 0.0 {
                    if self.lb[b] == f64::NEG_INFINITY {
                        continue;
                    }
                    ((self.x[b] - self.lb[b]) / -rate).max(0.0)
                } else {
                    if self.ub[b] == f64::INFINITY {
                        continue;
                    }
                    ((self.ub[b] - self.x[b]) / rate).max(0.0)
                };
                let better = match leave {
                    None => true,
                    Some(l) => {
                        if room < theta - 1e-12 {
                            true
                        } else if room <= theta + 1e-12 {
                            if bland {
                                b < self.basis[l]
                            } else {
                                a.abs() > leave_alpha
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    theta = theta.min(room);
                    leave = Some(i);
                    leave_alpha = a.abs();
                }
            }
            let span = self.ub[j] - self.lb[j];
            if span.is_finite() && span <= theta {
                // bound flip
                let step = dir * span;
                for i in 0..self.m {
                    let a = self.tab[i * self.cols + j];
                    if a != 0.0 {
                        let b = self.basis[i];
                        self.x[b] -= a * step;
                    }
                }
                self.x[j] = if dir > 0.0 { self.ub[j] } else { self.lb[j] };
                self.iterations += 1;
                degenerate_run = 0;
                bland = false;
                continue;
            }
            let Some(r) = leave else {
                return Ok(LpStatus::Unbounded);
            };

            let step = dir * theta;
            for i in 0..self.m {
                let a = self.tab[i * self.cols + j];
                if a != 0.0 {
                    let b = self.basis[i];
                    self.x[b] -= a * step;
                }
            }
            self.x[j] += step;
            let leaving = self.basis[r];
            let rate = -dir * self.tab[r * self.cols + j];
            self.x[leaving] = if rate < 0.0 { self.lb[leaving] } else { self.ub[leaving] };
            self.pivot(r, j);
            self.iterations += 1;

            if theta <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > 50 {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }

            self.pivots_since_refactor += 1;
            if self.pivots_since_refactor >= self.opts.refactor_every {
                self.refactor()?;
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let cols = self.cols;
        let p = self.tab[r * cols + j];
        let (before, rest) = self.tab.split_at_mut(r * cols);
        let (pivot_row, after) = rest.split_at_mut(cols);
        pivot_row.iter_mut().for_each(|v| *v /= p);
        pivot_row[j] = 1.0;
        for row in before.chunks_exact_mut(cols).chain(after.chunks_exact_mut(cols)) {
            let f = row[j];
            if f != 0.0 {
                for (v, pr) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * pr;
                }
                row[j] = 0.0;
            }
        }
        self.is_basic[self.basis[r]] = false;
        self.basis[r] = j;
        self.is_basic[j] = true;
    }

    /// Rebuilds `B^-1 [A | I | art]` and the basic values from the original
    /// data by Gauss-Jordan elimination with partial pivoting.
    fn refactor(&mut self) -> Result<(), SolverError> {
        self.pivots_since_refactor = 0;
        let m = self.m;
        let cols = self.cols;
        // augmented [B | A_full | rhs - N x_N]
        let width = m + cols + 1;
        let mut aug = vec![0.0; m * width];
        for i in 0..m {
            let src = &self.orig[i * cols..(i + 1) * cols];
            for (k, &b) in self.basis.iter().enumerate() {
                aug[i * width + k] = src[b];
            }
            aug[i * width + m..i * width + m + cols].copy_from_slice(src);
            let mut r = self.rhs[i];
            for (j, &a) in src.iter().enumerate() {
                if !self.is_basic[j] && a != 0.0 {
                    r -= a * self.x[j];
                }
            }
            aug[i * width + m + cols] = r;
        }
        for k in 0..m {
            let (p, mag) = (k..m)
                .map(|i| (i, aug[i * width + k].abs()))
                .fold((k, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
            if mag <= 1e-12 {
                return Err(SolverError::Numerical {
                    iteration: self.iterations,
                    row: k,
                    column: self.basis[k],
                    pivot: mag,
                });
            }
            if p != k {
                for c in 0..width {
                    aug.swap(k * width + c, p * width + c);
                }
            }
            let piv = aug[k * width + k];
            for c in 0..width {
                aug[k * width + c] /= piv;
            }
            let (head, tail) = aug.split_at_mut(k * width);
            let (prow, rest) = tail.split_at_mut(width);
            for row in head.chunks_exact_mut(width).chain(rest.chunks_exact_mut(width)) {
                let f = row[k];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(prow.iter()) {
                        *v -= f * pv;
                    }
                }
            }
        }
        // row k of the reduced system now belongs to basis[k]
        for i in 0..m {
            self.tab[i * cols..(i + 1) * cols].copy_from_slice(&aug[i * width + m..i * width + m + cols]);
            let b = self.basis[i];
            self.x[b] = aug[i * width + m + cols];
        }
        Ok(())
    }
}
