//! Two-phase primal simplex returning basic feasible solutions.
//!
//! The solver works on a dense explicit basis inverse with rank-one updates
//! and periodic refactorization. Constraint rows are stored as coefficient
//! lists so that the Frechet-class programs (a handful of nonzeros per column,
//! tens of thousands of columns) do not materialize a dense tableau.
//!
//! Pricing is Dantzig's rule; after `2 * (m + n)` degenerate pivots in a phase
//! the solver switches to Bland's rule for the rest of that phase, which
//! guarantees termination.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

/// Smallest magnitude accepted as a pivot element.
pub const PIVOT_TOL: f64 = 1e-10;
/// Primal feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-8;
/// Reduced-cost optimality tolerance.
pub const OPT_TOL: f64 = 1e-9;

const REFACTOR_INTERVAL: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("{what}: expected {expected} entries, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("column index {index} out of range for {ncols} variables")]
    ColumnIndex { index: usize, ncols: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("simplex iteration limit ({0}) reached")]
    IterationLimit(usize),
    #[error("numerical breakdown: {0}")]
    Numerical(&'static str),
}

/// Row-oriented constraint matrix. Each row is a list of `(column, coefficient)`
/// pairs; repeated columns within a row are summed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstraintMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

impl ConstraintMatrix {
    pub fn new() -> Self {
        Self { rows: Vec::new() }
    }

    /// Builds a matrix from dense rows.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let rows = rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (j, *v))
                    .collect()
            })
            .collect();
        Self { rows }
    }

    pub fn push_row<I: IntoIterator<Item = (usize, f64)>>(&mut self, entries: I) {
        self.rows.push(entries.into_iter().collect());
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[(usize, f64)]> {
        self.rows.iter().map(|r| r.as_slice())
    }

    /// Dot product of row `i` with `x`.
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        self.rows[i].iter().map(|&(j, a)| a * x[j]).sum()
    }

    fn permuted(&self, order: &[usize]) -> Self {
        Self {
            rows: order.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

/// `sense objective·x` subject to `eq·x = eq_rhs`, `ub·x <= ub_rhs` and
/// `x >= lower` (a lower bound of `-inf` makes the variable free).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub eq: ConstraintMatrix,
    pub eq_rhs: Vec<f64>,
    pub ub: ConstraintMatrix,
    pub ub_rhs: Vec<f64>,
    pub lower: Vec<f64>,
}

impl LinearProgram {
    /// A program over `objective.len()` nonnegative variables with no constraints.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            eq: ConstraintMatrix::new(),
            eq_rhs: Vec::new(),
            ub: ConstraintMatrix::new(),
            ub_rhs: Vec::new(),
            lower: vec![0.0; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_eq<I: IntoIterator<Item = (usize, f64)>>(&mut self, row: I, rhs: f64) {
        self.eq.push_row(row);
        self.eq_rhs.push(rhs);
    }

    pub fn add_le<I: IntoIterator<Item = (usize, f64)>>(&mut self, row: I, rhs: f64) {
        self.ub.push_row(row);
        self.ub_rhs.push(rhs);
    }

    /// Adds `row·x >= rhs`, stored as `-row·x <= -rhs`.
    pub fn add_ge<I: IntoIterator<Item = (usize, f64)>>(&mut self, row: I, rhs: f64) {
        self.ub.push_row(row.into_iter().map(|(j, a)| (j, -a)));
        self.ub_rhs.push(-rhs);
    }

    pub fn set_free(&mut self, j: usize) {
        self.lower[j] = f64::NEG_INFINITY;
    }

    pub fn set_lower(&mut self, j: usize, lb: f64) {
        self.lower[j] = lb;
    }

    /// Same program with equality and inequality rows reordered.
    pub fn with_row_order(&self, eq_order: &[usize], ub_order: &[usize]) -> Self {
        Self {
            sense: self.sense,
            objective: self.objective.clone(),
            eq: self.eq.permuted(eq_order),
            eq_rhs: eq_order.iter().map(|&i| self.eq_rhs[i]).collect(),
            ub: self.ub.permuted(ub_order),
            ub_rhs: ub_order.iter().map(|&i| self.ub_rhs[i]).collect(),
            lower: self.lower.clone(),
        }
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n {
            return Err(LpError::Dimension {
                what: "lower bounds",
                expected: n,
                found: self.lower.len(),
            });
        }
        if self.eq_rhs.len() != self.eq.nrows() {
            return Err(LpError::Dimension {
                what: "equality rhs",
                expected: self.eq.nrows(),
                found: self.eq_rhs.len(),
            });
        }
        if self.ub_rhs.len() != self.ub.nrows() {
            return Err(LpError::Dimension {
                what: "inequality rhs",
                expected: self.ub.nrows(),
                found: self.ub_rhs.len(),
            });
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        if self
            .eq_rhs
            .iter()
            .chain(&self.ub_rhs)
            .any(|b| !b.is_finite())
        {
            return Err(LpError::NonFinite("rhs"));
        }
        if self.lower.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
            return Err(LpError::NonFinite("lower bounds"));
        }
        for row in self.eq.rows().chain(self.ub.rows()) {
            for &(j, a) in row {
                if j >= n {
                    return Err(LpError::ColumnIndex { index: j, ncols: n });
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite("constraint matrix"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point; empty unless `status` is optimal.
    pub x: Vec<f64>,
    /// `objective·x` when optimal; `+inf`/`-inf` in the minimization sense for
    /// infeasible/unbounded programs (signs flipped for maximization).
    pub objective_value: f64,
    /// Basic variables of the final basis, sorted. Indices below `n` are
    /// structural variables; `n + i` is the slack of inequality row `i`.
    pub basis: Vec<usize>,
    /// Simplex pivots performed.
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn without_point(status: LpStatus, sense: Sense) -> Self {
        let inf = match (status, sense) {
            (LpStatus::Infeasible, Sense::Minimize) | (LpStatus::Unbounded, Sense::Maximize) => {
                f64::INFINITY
            }
            _ => f64::NEG_INFINITY,
        };
        Self {
            status,
            x: Vec::new(),
            objective_value: inf,
            basis: Vec::new(),
            iterations: 0,
        }
    }
}

/// Where a standard-form column comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Origin {
    /// `x_j = lower_j + s`
    Shifted(usize),
    /// positive part of a free variable
    Plus(usize),
    /// negative part of a free variable
    Minus(usize),
    Slack(usize),
    Artificial,
}

/// Standard form `A s = b, s >= 0, b >= 0` with sparse columns.
struct StandardForm {
    cols: Vec<Vec<(usize, f64)>>,
    origin: Vec<Origin>,
    b: Vec<f64>,
    /// minimization costs
    cost: Vec<f64>,
    /// initial basic column per row (slack or artificial)
    initial_basis: Vec<usize>,
    /// first standard column of each structural variable
    structural_col: Vec<usize>,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let m_eq = lp.eq.nrows();
        let m = m_eq + lp.ub.nrows();
        let sign = match lp.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };

        // structural column ids per original variable
        let mut cols: Vec<Vec<(usize, f64)>> = Vec::new();
        let mut origin = Vec::new();
        let mut cost = Vec::new();
        let mut first_col = vec![0usize; n];
        for j in 0..n {
            first_col[j] = cols.len();
            if lp.lower[j].is_finite() {
                cols.push(Vec::new());
                origin.push(Origin::Shifted(j));
                cost.push(sign * lp.objective[j]);
            } else {
                cols.push(Vec::new());
                origin.push(Origin::Plus(j));
                cost.push(sign * lp.objective[j]);
                cols.push(Vec::new());
                origin.push(Origin::Minus(j));
                cost.push(-sign * lp.objective[j]);
            }
        }

        let mut b = Vec::with_capacity(m);
        let mut row_sign = Vec::with_capacity(m);
        let all_rows = lp
            .eq
            .rows()
            .zip(&lp.eq_rhs)
            .chain(lp.ub.rows().zip(&lp.ub_rhs));
        for (row, &rhs) in all_rows {
            let mut rhs = rhs;
            for &(j, a) in row {
                if lp.lower[j].is_finite() {
                    rhs -= a * lp.lower[j];
                }
            }
            let s = if rhs < 0.0 { -1.0 } else { 1.0 };
            b.push(s * rhs);
            row_sign.push(s);
        }

        for (i, row) in lp.eq.rows().chain(lp.ub.rows()).enumerate() {
            let s = row_sign[i];
            for &(j, a) in row {
                if a == 0.0 {
                    continue;
                }
                let c = first_col[j];
                push_merge(&mut cols[c], i, s * a);
                if !lp.lower[j].is_finite() {
                    push_merge(&mut cols[c + 1], i, -s * a);
                }
            }
        }

        let mut initial_basis = vec![usize::MAX; m];
        for k in 0..lp.ub.nrows() {
            let i = m_eq + k;
            let c = cols.len();
            cols.push(vec![(i, row_sign[i])]);
            origin.push(Origin::Slack(k));
            cost.push(0.0);
            if row_sign[i] > 0.0 {
                initial_basis[i] = c;
            }
        }
        for i in 0..m {
            if initial_basis[i] == usize::MAX {
                initial_basis[i] = cols.len();
                cols.push(vec![(i, 1.0)]);
                origin.push(Origin::Artificial);
                cost.push(0.0);
            }
        }

        Self {
            cols,
            origin,
            b,
            cost,
            initial_basis,
            structural_col: first_col,
        }
    }
}

fn push_merge(col: &mut Vec<(usize, f64)>, row: usize, v: f64) {
    if let Some(last) = col.last_mut() {
        if last.0 == row {
            last.1 += v;
            return;
        }
    }
    col.push((row, v));
}

/// Simplex working state over the active rows of a standard form.
struct Simplex<'a> {
    sf: &'a StandardForm,
    /// active row ids (rows may be dropped as redundant after phase 1)
    rows: Vec<usize>,
    b: Vec<f64>,
    /// columns restricted to active rows, by row position
    col_start: Vec<usize>,
    col_row: Vec<u32>,
    col_val: Vec<f64>,
    basis: Vec<usize>,
    /// column -> basis position or usize::MAX
    basic_pos: Vec<usize>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    duals: Vec<f64>,
    allowed: Vec<bool>,
    since_refactor: usize,
    iterations: usize,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

impl<'a> Simplex<'a> {
    fn new(sf: &'a StandardForm) -> Self {
        let m = sf.b.len();
        let mut basic_pos = vec![usize::MAX; sf.cols.len()];
        for (i, &c) in sf.initial_basis.iter().enumerate() {
            basic_pos[c] = i;
        }
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        let mut s = Self {
            sf,
            rows: (0..m).collect(),
            b: sf.b.clone(),
            col_start: Vec::new(),
            col_row: Vec::new(),
            col_val: Vec::new(),
            basis: sf.initial_basis.clone(),
            basic_pos,
            binv,
            xb: sf.b.clone(),
            duals: vec![0.0; m],
            allowed: vec![true; sf.cols.len()],
            since_refactor: 0,
            iterations: 0,
        };
        s.build_columns();
        s
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn build_columns(&mut self) {
        let mut pos = vec![u32::MAX; self.sf.b.len()];
        for (p, &r) in self.rows.iter().enumerate() {
            pos[r] = p as u32;
        }
        self.col_start.clear();
        self.col_row.clear();
        self.col_val.clear();
        for col in &self.sf.cols {
            self.col_start.push(self.col_row.len());
            for &(r, v) in col {
                if pos[r] != u32::MAX {
                    self.col_row.push(pos[r]);
                    self.col_val.push(v);
                }
            }
        }
        self.col_start.push(self.col_row.len());
    }

    fn col(&self, c: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.col_start[c], self.col_start[c + 1]);
        (&self.col_row[a..b], &self.col_val[a..b])
    }

    /// Recomputes the basis inverse by Gauss-Jordan elimination with partial
    /// pivoting, then the basic values.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m();
        let mut a = vec![0.0; m * m];
        for (k, &c) in self.basis.iter().enumerate() {
            let (rows, vals) = self.col(c);
            for (&p, &v) in rows.iter().zip(vals) {
                a[p as usize * m + k] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let mut piv = col;
            let mut best = a[col * m + col].abs();
            for r in col + 1..m {
                let v = a[r * m + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < 1e-13 {
                return Err(LpError::Numerical("singular basis"));
            }
            if piv != col {
                for k in 0..m {
                    a.swap(col * m + k, piv * m + k);
                    inv.swap(col * m + k, piv * m + k);
                }
            }
            let d = 1.0 / a[col * m + col];
            for k in 0..m {
                a[col * m + k] *= d;
                inv[col * m + k] *= d;
            }
            let (head, tail) = a.split_at_mut(col * m);
            let (prow_a, tail) = tail.split_at_mut(m);
            let (ihead, itail) = inv.split_at_mut(col * m);
            let (prow_i, itail) = itail.split_at_mut(m);
            let eliminate = |ra: &mut [f64], ri: &mut [f64]| {
                let f = ra[col];
                if f == 0.0 {
                    return;
                }
                for (x, p) in ra.iter_mut().zip(prow_a.iter()) {
                    *x -= f * p;
                }
                for (x, p) in ri.iter_mut().zip(prow_i.iter()) {
                    *x -= f * p;
                }
            };
            for (ra, ri) in head.chunks_mut(m).zip(ihead.chunks_mut(m)) {
                eliminate(ra, ri);
            }
            for (ra, ri) in tail.chunks_mut(m).zip(itail.chunks_mut(m)) {
                eliminate(ra, ri);
            }
        }
        // `inv` is B^{-1} with rows indexed by basis position.
        self.binv = inv;
        self.recompute_xb();
        self.since_refactor = 0;
        Ok(())
    }

    fn recompute_xb(&mut self) {
        let m = self.m();
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            self.xb[i] = row.iter().zip(&self.b).map(|(a, b)| a * b).sum();
        }
    }

    fn recompute_duals(&mut self, cost: &[f64]) {
        let m = self.m();
        self.duals.iter_mut().for_each(|d| *d = 0.0);
        for (i, &c) in self.basis.iter().enumerate() {
            let cb = cost[c];
            if cb == 0.0 {
                continue;
            }
            let row = &self.binv[i * m..(i + 1) * m];
            for (d, v) in self.duals.iter_mut().zip(row) {
                *d += cb * v;
            }
        }
    }

    fn reduced_cost(&self, cost: &[f64], c: usize) -> f64 {
        let (rows, vals) = self.col(c);
        let mut d = cost[c];
        for (&p, &v) in rows.iter().zip(vals) {
            d -= self.duals[p as usize] * v;
        }
        d
    }

    fn ftran(&self, c: usize, out: &mut [f64]) {
        let m = self.m();
        out.iter_mut().for_each(|v| *v = 0.0);
        let (rows, vals) = self.col(c);
        for (&p, &v) in rows.iter().zip(vals) {
            let p = p as usize;
            for (o, i) in out.iter_mut().zip(0..m) {
                *o += self.binv[i * m + p] * v;
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64], dq: f64) {
        let m = self.m();
        let ar = alpha[r];
        // duals update uses the old pivot row
        let scale = dq / ar;
        if scale != 0.0 {
            for k in 0..m {
                self.duals[k] += scale * self.binv[r * m + k];
            }
        }
        let theta = self.xb[r] / ar;
        for i in 0..m {
            if i != r && alpha[i] != 0.0 {
                self.xb[i] -= theta * alpha[i];
            }
        }
        self.xb[r] = theta;

        let (before, rest) = self.binv.split_at_mut(r * m);
        let (prow, after) = rest.split_at_mut(m);
        let inv_ar = 1.0 / ar;
        prow.iter_mut().for_each(|v| *v *= inv_ar);
        let update = |i: usize, row: &mut [f64]| {
            let f = alpha[i];
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * p;
                }
            }
        };
        for (i, row) in before.chunks_mut(m).enumerate() {
            update(i, row);
        }
        for (i, row) in after.chunks_mut(m).enumerate() {
            update(r + 1 + i, row);
        }

        let leaving = self.basis[r];
        self.basic_pos[leaving] = usize::MAX;
        self.basis[r] = q;
        self.basic_pos[q] = r;
        self.since_refactor += 1;
        self.iterations += 1;
    }

    fn run_phase(
        &mut self,
        cost: &[f64],
        iter_budget: &mut usize,
    ) -> Result<PhaseOutcome, LpError> {
        let ncols = self.sf.cols.len();
        let mut alpha = vec![0.0; self.m()];
        let degenerate_limit = 2 * (self.m() + ncols);
        let mut degenerate = 0usize;
        let mut bland = false;
        self.recompute_duals(cost);

        loop {
            if self.since_refactor >= REFACTOR_INTERVAL {
                self.refactor()?;
                self.recompute_duals(cost);
            }

            // pricing
            let mut entering = usize::MAX;
            let mut best = -OPT_TOL;
            for c in 0..ncols {
                if !self.allowed[c] || self.basic_pos[c] != usize::MAX {
                    continue;
                }
                let d = self.reduced_cost(cost, c);
                if d < best {
                    best = d;
                    entering = c;
                    if bland {
                        break;
                    }
                }
            }
            if entering == usize::MAX {
                // confirm with fresh duals before declaring optimality
                if self.since_refactor > 0 {
                    self.refactor()?;
                    self.recompute_duals(cost);
                    let improving = (0..ncols).any(|c| {
                        self.allowed[c]
                            && self.basic_pos[c] == usize::MAX
                            && self.reduced_cost(cost, c) < -OPT_TOL
                    });
                    if improving {
                        continue;
                    }
                }
                return Ok(PhaseOutcome::Optimal);
            }

            if *iter_budget == 0 {
                return Err(LpError::IterationLimit(0));
            }
            *iter_budget -= 1;

            self.ftran(entering, &mut alpha);

            // ratio test
            let mut min_ratio = f64::INFINITY;
            for (i, &a) in alpha.iter().enumerate() {
                if a > PIVOT_TOL {
                    let r = self.xb[i].max(0.0) / a;
                    if r < min_ratio {
                        min_ratio = r;
                    }
                }
            }
            if min_ratio == f64::INFINITY {
                return Ok(PhaseOutcome::Unbounded);
            }
            let tie = 1e-12 * min_ratio.max(1.0);
            let mut leave = usize::MAX;
            for (i, &a) in alpha.iter().enumerate() {
                if a <= PIVOT_TOL {
                    continue;
                }
                let r = self.xb[i].max(0.0) / a;
                if r > min_ratio + tie {
                    continue;
                }
                let better = match leave {
                    usize::MAX => true,
                    l if bland => self.basis[i] < self.basis[l],
                    l => a > alpha[l],
                };
                if better {
                    leave = i;
                }
            }

            if min_ratio <= 1e-12 {
                degenerate += 1;
                if degenerate > degenerate_limit {
                    bland = true;
                }
            }
            // clamp tiny negatives so the step stays feasible
            if self.xb[leave] < 0.0 {
                self.xb[leave] = 0.0;
            }
            self.pivot(leave, entering, &alpha, best);
        }
    }

    /// Pivots the hinted columns into rows held by artificials. Returns false
    /// (leaving the state unusable) when the resulting basis is singular or
    /// primal infeasible.
    fn crash(&mut self, hint: &[usize]) -> Result<bool, LpError> {
        let m = self.m();
        let mut alpha = vec![0.0; m];
        for &c in hint {
            if self.basic_pos[c] != usize::MAX {
                continue;
            }
            self.ftran(c, &mut alpha);
            let mut row = usize::MAX;
            let mut best = 1e-9;
            for i in 0..m {
                if self.sf.origin[self.basis[i]] == Origin::Artificial && alpha[i].abs() > best {
                    best = alpha[i].abs();
                    row = i;
                }
            }
            if row != usize::MAX {
                self.pivot(row, c, &alpha, 0.0);
            }
            if self.since_refactor >= REFACTOR_INTERVAL && self.refactor().is_err() {
                return Ok(false);
            }
        }
        if self.refactor().is_err() {
            return Ok(false);
        }
        let scale = 1.0 + self.b.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if self.xb.iter().any(|v| *v < -FEAS_TOL * scale) {
            return Ok(false);
        }
        self.xb.iter_mut().for_each(|v| *v = v.max(0.0));
        Ok(true)
    }

    /// Brings a free variable sitting at zero with both parts nonbasic into
    /// the basis, so the point is a vertex of the original polyhedron. At an
    /// optimum both parts have zero reduced cost, so the objective is kept.
    /// A variable that can move without bound either way spans a line of the
    /// feasible set and stays put.
    fn enter_free_variables(&mut self) {
        let mut alpha = vec![0.0; self.m()];
        for c in 0..self.sf.cols.len() {
            if !matches!(self.sf.origin[c], Origin::Plus(_))
                || self.basic_pos[c] != usize::MAX
                || self.basic_pos[c + 1] != usize::MAX
            {
                continue;
            }
            self.ftran(c, &mut alpha);
            for dir in [1.0, -1.0] {
                let mut leave = usize::MAX;
                let mut min_ratio = f64::INFINITY;
                for (i, &a) in alpha.iter().enumerate() {
                    let a = dir * a;
                    if a > PIVOT_TOL && !self.is_free_part(self.basis[i]) {
                        let r = self.xb[i].max(0.0) / a;
                        if r < min_ratio {
                            min_ratio = r;
                            leave = i;
                        }
                    }
                }
                if leave != usize::MAX {
                    if dir < 0.0 {
                        alpha.iter_mut().for_each(|a| *a = -*a);
                    }
                    let entering = if dir > 0.0 { c } else { c + 1 };
                    self.pivot(leave, entering, &alpha, 0.0);
                    self.flip_negative_free_parts();
                    break;
                }
            }
        }
    }

    fn is_free_part(&self, c: usize) -> bool {
        matches!(self.sf.origin[c], Origin::Plus(_) | Origin::Minus(_))
    }

    /// Replaces a basic free-variable part that went negative by its twin,
    /// whose column is the negation.
    fn flip_negative_free_parts(&mut self) {
        let m = self.m();
        for i in 0..m {
            let c = self.basis[i];
            if self.xb[i] >= 0.0 || !self.is_free_part(c) {
                continue;
            }
            let twin = match self.sf.origin[c] {
                Origin::Plus(_) => c + 1,
                _ => c - 1,
            };
            self.basic_pos[c] = usize::MAX;
            self.basic_pos[twin] = i;
            self.basis[i] = twin;
            self.xb[i] = -self.xb[i];
            self.binv[i * m..(i + 1) * m]
                .iter_mut()
                .for_each(|v| *v = -*v);
        }
    }

    fn artificial_mass(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.xb)
            .filter(|(c, _)| self.sf.origin[**c] == Origin::Artificial)
            .map(|(_, v)| v.max(0.0))
            .sum()
    }

    /// Drives zero-level artificials out of the basis; rows whose artificial
    /// cannot be replaced are linearly dependent and are dropped.
    fn purge_artificials(&mut self) -> Result<(), LpError> {
        let mut alpha = vec![0.0; self.m()];
        let mut redundant = Vec::new();
        for i in 0..self.m() {
            let c = self.basis[i];
            if self.sf.origin[c] != Origin::Artificial {
                continue;
            }
            let m = self.m();
            let row: Vec<f64> = self.binv[i * m..(i + 1) * m].to_vec();
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.sf.cols.len() {
                if self.basic_pos[j] != usize::MAX || self.sf.origin[j] == Origin::Artificial {
                    continue;
                }
                let (rows, vals) = self.col(j);
                let v: f64 = rows
                    .iter()
                    .zip(vals)
                    .map(|(&p, &a)| row[p as usize] * a)
                    .sum();
                if v.abs() > 1e-7 && best.is_none_or(|(_, b)| v.abs() > b.abs()) {
                    best = Some((j, v));
                }
            }
            match best {
                Some((j, _)) => {
                    self.ftran(j, &mut alpha);
                    self.xb[i] = 0.0;
                    self.pivot(i, j, &alpha, 0.0);
                }
                None => redundant.push(i),
            }
        }
        if !redundant.is_empty() {
            // the row of each stuck artificial is a combination of the others
            let dropped: Vec<usize> = redundant
                .iter()
                .map(|&p| self.sf.cols[self.basis[p]][0].0)
                .collect();
            let mut keep_basis = Vec::new();
            for (p, &c) in self.basis.iter().enumerate() {
                if redundant.contains(&p) {
                    self.basic_pos[c] = usize::MAX;
                } else {
                    keep_basis.push(c);
                }
            }
            self.rows.retain(|r| !dropped.contains(r));
            self.b = self.rows.iter().map(|&r| self.sf.b[r]).collect();
            self.basis = keep_basis;
            for (p, &c) in self.basis.iter().enumerate() {
                self.basic_pos[c] = p;
            }
            let m = self.m();
            self.xb = vec![0.0; m];
            self.duals = vec![0.0; m];
            self.build_columns();
        }
        for (c, o) in self.sf.origin.iter().enumerate() {
            if *o == Origin::Artificial {
                self.allowed[c] = false;
            }
        }
        self.refactor()
    }
}

/// Solves `lp`, returning a vertex solution when one is optimal.
///
/// Dimension mismatches and non-finite data are input errors, never statuses.
/// The solver is deterministic for identical inputs.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_lp_hinted(lp, &[])
}

/// [`solve_lp`] starting from a basis built around the variables in `hint`,
/// typically the support of a known feasible vertex or a previous optimal
/// basis. A poor hint costs time, never correctness: when the hinted basis is
/// singular or infeasible the solver starts from scratch.
pub fn solve_lp_hinted(lp: &LinearProgram, hint: &[usize]) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let n = lp.num_vars();
    if let Some(&j) = hint.iter().find(|&&j| j >= n) {
        return Err(LpError::ColumnIndex { index: j, ncols: n });
    }
    let sf = StandardForm::build(lp);
    let m = sf.b.len();
    let ncols = sf.cols.len();
    let limit = 200 * (m + ncols) + 10_000;
    let mut budget = limit;
    let limit_err = |e: LpError| match e {
        LpError::IterationLimit(_) => LpError::IterationLimit(limit),
        e => e,
    };

    let mut simplex = Simplex::new(&sf);
    let has_artificial = sf.origin.contains(&Origin::Artificial);
    if has_artificial {
        if !hint.is_empty() {
            let cols: Vec<usize> = hint.iter().map(|&j| sf.structural_col[j]).collect();
            if !simplex.crash(&cols)? {
                simplex = Simplex::new(&sf);
            }
        }
        let scale = 1.0 + sf.b.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if simplex.artificial_mass() > FEAS_TOL * scale {
            let phase1_cost: Vec<f64> = sf
                .origin
                .iter()
                .map(|o| if *o == Origin::Artificial { 1.0 } else { 0.0 })
                .collect();
            simplex
                .run_phase(&phase1_cost, &mut budget)
                .map_err(limit_err)?;
            simplex.refactor()?;
            if simplex.artificial_mass() > FEAS_TOL * scale {
                return Ok(LpSolution::without_point(LpStatus::Infeasible, lp.sense));
            }
        }
        simplex.purge_artificials()?;
    }

    match simplex
        .run_phase(&sf.cost, &mut budget)
        .map_err(limit_err)?
    {
        PhaseOutcome::Optimal => {}
        PhaseOutcome::Unbounded => {
            return Ok(LpSolution::without_point(LpStatus::Unbounded, lp.sense))
        }
    }
    simplex.enter_free_variables();
    simplex.refactor()?;

    let mut s = vec![0.0; ncols];
    for (&c, &v) in simplex.basis.iter().zip(&simplex.xb) {
        if v < -FEAS_TOL * (1.0 + v.abs()) * 10.0 {
            return Err(LpError::Numerical("basic solution lost feasibility"));
        }
        s[c] = v.max(0.0);
    }

    let mut x: Vec<f64> = lp
        .lower
        .iter()
        .map(|l| if l.is_finite() { *l } else { 0.0 })
        .collect();
    let mut basic = vec![false; n + lp.ub.nrows()];
    for (c, o) in sf.origin.iter().enumerate() {
        let is_basic = simplex.basic_pos[c] != usize::MAX;
        match *o {
            Origin::Shifted(j) | Origin::Plus(j) => {
                x[j] += s[c];
                basic[j] |= is_basic;
            }
            Origin::Minus(j) => {
                x[j] -= s[c];
                basic[j] |= is_basic;
            }
            Origin::Slack(k) => basic[n + k] |= is_basic,
            Origin::Artificial => {}
        }
    }
    let objective_value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    let basis = basic
        .iter()
        .enumerate()
        .filter_map(|(i, b)| b.then_some(i))
        .collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective_value,
        basis,
        iterations: simplex.iterations,
    })
}
