//! Dense two-phase simplex for small equality-form linear programs.
//!
//! Solves `max c.x` subject to `A x = b`, `x >= 0`. Phase one minimizes the
//! sum of one artificial variable per row. Pricing is Dantzig's rule; after a
//! run of degenerate pivots it falls back to Bland's rule, which cannot cycle,
//! until the objective moves again.

use crate::error::{Error, Result};

pub const PIVOT_TOLERANCE: f64 = 1e-9;
const OPTIMALITY_TOLERANCE: f64 = 1e-9;
const FEASIBILITY_TOLERANCE: f64 = 1e-7;
const DROP_TOLERANCE: f64 = 1e-14;
const DEGENERATE_RUN: usize = 50;
/// Cap on tableau entries.
pub const TABLEAU_BUDGET: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub status: SimplexStatus,
    pub x: Vec<f64>,
    pub value: f64,
    pub pivots: usize,
}

/// `max c.x` s.t. sparse equality rows, `x >= 0`.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    n_vars: usize,
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    objective: Vec<f64>,
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        LinearProgram {
            n_vars,
            rows: Vec::new(),
            rhs: Vec::new(),
            objective: vec![0.0; n_vars],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_equality(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        debug_assert!(coeffs.iter().all(|&(j, _)| j < self.n_vars));
        self.rows.push(coeffs);
        self.rhs.push(rhs);
    }

    pub fn set_objective(&mut self, j: usize, c: f64) {
        self.objective[j] = c;
    }

    pub fn maximize(&self) -> Result<SimplexResult> {
        let m = self.rows.len();
        let entries = m * (self.n_vars + m + 1);
        if entries > TABLEAU_BUDGET {
            return Err(Error::capacity("simplex tableau entries", entries as f64, TABLEAU_BUDGET as f64));
        }
        let mut t = Tableau::new(self);
        let limit = 50 * (m + self.n_vars) + 10_000;

        // phase one: maximize -sum(artificials)
        for j in 0..t.width {
            t.obj[j] = if j < self.n_vars || j == t.rhs_col() {
                -(0..m).map(|r| t.a[r * t.width + j]).sum::<f64>()
            } else {
                0.0
            };
        }
        match t.run(t.cols, limit)? {
            SimplexStatus::Optimal => {}
            other => return Ok(t.result(other, self.n_vars)),
        }
        let infeasibility = -t.obj[t.rhs_col()];
        let scale = self.rhs.iter().map(|b| b.abs()).sum::<f64>().max(1.0);
        if infeasibility > FEASIBILITY_TOLERANCE * scale {
            return Ok(t.result(SimplexStatus::Infeasible, self.n_vars));
        }
        t.drive_out_artificials(self.n_vars);

        // phase two over the structural columns
        let cost = |j: usize| if j < self.n_vars { self.objective[j] } else { 0.0 };
        for j in 0..t.width {
            let cj = if j == t.rhs_col() { 0.0 } else { cost(j) };
            t.obj[j] = (0..m)
                .filter(|&r| !t.dead[r])
                .map(|r| cost(t.basis[r]) * t.a[r * t.width + j])
                .sum::<f64>()
                - cj;
        }
        let status = t.run(self.n_vars, limit)?;
        Ok(t.result(status, self.n_vars))
    }
}

struct Tableau {
    m: usize,
    cols: usize,
    width: usize,
    a: Vec<f64>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    dead: Vec<bool>,
    pivots: usize,
}

impl Tableau {
    fn new(lp: &LinearProgram) -> Self {
        let m = lp.rows.len();
        let cols = lp.n_vars + m;
        let width = cols + 1;
        let mut a = vec![0.0; m * width];
        for (r, row) in lp.rows.iter().enumerate() {
            let sign = if lp.rhs[r] < 0.0 { -1.0 } else { 1.0 };
            for &(j, v) in row {
                a[r * width + j] += sign * v;
            }
            a[r * width + lp.n_vars + r] = 1.0;
            a[r * width + cols] = sign * lp.rhs[r];
        }
        Tableau {
            m,
            cols,
            width,
            a,
            obj: vec![0.0; width],
            basis: (lp.n_vars..cols).collect(),
            dead: vec![false; m],
            pivots: 0,
        }
    }

    fn rhs_col(&self) -> usize {
        self.cols
    }

    fn entering(&self, allowed: usize, bland: bool) -> Option<usize> {
        let candidates = (0..allowed).filter(|&j| self.obj[j] < -OPTIMALITY_TOLERANCE);
        if bland {
            candidates.into_iter().next()
        } else {
            candidates.min_by(|&i, &j| self.obj[i].total_cmp(&self.obj[j]))
        }
    }

    fn leaving(&self, q: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for r in (0..self.m).filter(|&r| !self.dead[r]) {
            let arq = self.a[r * self.width + q];
            if arq <= PIVOT_TOLERANCE {
                continue;
            }
            let ratio = self.a[r * self.width + self.cols].max(0.0) / arq;
            best = match best {
                None => Some((r, ratio)),
                Some((b, br)) => {
                    let tie = (ratio - br).abs() <= 1e-12 * br.max(1.0);
                    if ratio < br && !tie || tie && self.basis[r] < self.basis[b] {
                        Some((r, ratio))
                    } else {
                        Some((b, br))
                    }
                }
            };
        }
        best.map(|(r, _)| r)
    }

    fn run(&mut self, allowed: usize, limit: usize) -> Result<SimplexStatus> {
        let mut degenerate = 0usize;
        loop {
            if self.pivots >= limit {
                return Ok(SimplexStatus::IterationLimit);
            }
            let bland = degenerate >= DEGENERATE_RUN;
            let Some(q) = self.entering(allowed, bland) else {
                return Ok(SimplexStatus::Optimal);
            };
            let Some(p) = self.leaving(q) else {
                return Ok(SimplexStatus::Unbounded);
            };
            if self.a[p * self.width + self.cols] <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(p, q)?;
        }
    }

    fn pivot(&mut self, p: usize, q: usize) -> Result<()> {
        let w = self.width;
        let piv = self.a[p * w + q];
        if !piv.is_finite() || piv.abs() <= PIVOT_TOLERANCE * 1e-3 {
            return Err(Error::numerical(format!("pivot element {piv} too small")));
        }
        let mut nz = Vec::new();
        for j in 0..w {
            let v = &mut self.a[p * w + j];
            *v /= piv;
            if v.abs() > DROP_TOLERANCE {
                nz.push(j);
            } else {
                *v = 0.0;
            }
        }
        self.a[p * w + q] = 1.0;
        let prow: Vec<(usize, f64)> = nz.iter().map(|&j| (j, self.a[p * w + j])).collect();
        for r in 0..self.m {
            if r == p {
                continue;
            }
            let f = self.a[r * w + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[r * w..(r + 1) * w];
            for &(j, v) in &prow {
                let x = row[j] - f * v;
                row[j] = if x.abs() > DROP_TOLERANCE { x } else { 0.0 };
            }
            row[q] = 0.0;
        }
        let f = self.obj[q];
        if f != 0.0 {
            for &(j, v) in &prow {
                self.obj[j] -= f * v;
            }
            self.obj[q] = 0.0;
        }
        self.basis[p] = q;
        self.pivots += 1;
        Ok(())
    }

    /// Pivots zero-level artificials out of the basis; rows where that is
    /// impossible are linearly dependent and are retired.
    fn drive_out_artificials(&mut self, n_vars: usize) {
        for r in 0..self.m {
            if self.basis[r] < n_vars {
                continue;
            }
            let w = self.width;
            let col = (0..n_vars)
                .filter(|&j| self.a[r * w + j].abs() > PIVOT_TOLERANCE)
                .max_by(|&i, &j| self.a[r * w + i].abs().total_cmp(&self.a[r * w + j].abs()));
            match col {
                Some(j) if self.pivot(r, j).is_ok() => {}
                _ => self.dead[r] = true,
            }
        }
    }

    fn result(&self, status: SimplexStatus, n_vars: usize) -> SimplexResult {
        let mut x = vec![0.0; n_vars];
        for r in (0..self.m).filter(|&r| !self.dead[r]) {
            if self.basis[r] < n_vars {
                x[self.basis[r]] = self.a[r * self.width + self.cols].max(0.0);
            }
        }
        SimplexResult {
            status,
            value: self.obj[self.cols],
            x,
            pivots: self.pivots,
        }
    }
}
