//! Dense two-phase primal simplex.
//!
//! Pricing is Dantzig's rule with a switch to Bland's rule after a run of
//! degenerate pivots; ratio-test ties go to the smallest basic index. Runs are
//! therefore deterministic. Optimal solutions carry row duals
//! (∂objective/∂rhs) and infeasible ones a Farkas certificate recovered from
//! the phase-one multipliers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub sense: ObjectiveSense,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<LinearConstraint>,
}

impl LinearProgram {
    pub fn new(sense: ObjectiveSense) -> Self {
        LinearProgram { sense, objective: Vec::new(), lower: Vec::new(), upper: Vec::new(), rows: Vec::new() }
    }

    pub fn minimize() -> Self {
        Self::new(ObjectiveSense::Minimize)
    }

    pub fn maximize() -> Self {
        Self::new(ObjectiveSense::Maximize)
    }

    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_nonneg(&mut self, cost: f64) -> usize {
        self.add_var(cost, 0.0, f64::INFINITY)
    }

    pub fn add_free(&mut self, cost: f64) -> usize {
        self.add_var(cost, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn add_row(&mut self, terms: Vec<(usize, f64)>, sense: RowSense, rhs: f64) -> usize {
        self.rows.push(LinearConstraint { terms, sense, rhs });
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::InvalidProgram("bound vectors have wrong length".into()));
        }
        for j in 0..n {
            if !self.objective[j].is_finite() {
                return Err(Error::InvalidProgram(format!("objective[{j}] not finite")));
            }
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return Err(Error::InvalidProgram(format!("bad bounds on variable {j}")));
            }
            if self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(Error::InvalidProgram(format!("empty bounds on variable {j}")));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(Error::InvalidProgram(format!("rhs of row {i} not finite")));
            }
            for &(j, a) in &row.terms {
                if j >= n {
                    return Err(Error::InvalidProgram(format!("row {i} references var {j}")));
                }
                if !a.is_finite() {
                    return Err(Error::InvalidProgram(format!("row {i} has non-finite entry")));
                }
            }
        }
        Ok(())
    }

    pub fn row_activity(&self, i: usize, x: &[f64]) -> f64 {
        self.rows[i].terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of rows and bounds at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in self.rows.iter().enumerate() {
            let act = self.row_activity(i, x);
            let viol = match row.sense {
                RowSense::Le => act - row.rhs,
                RowSense::Ge => row.rhs - act,
                RowSense::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        for j in 0..self.num_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpOptions {
    pub pivot_tol: f64,
    pub optimality_tol: f64,
    pub feasibility_tol: f64,
    /// Zero means "derive from the problem size".
    pub max_iterations: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        let t = super::Tolerances::default();
        LpOptions { pivot_tol: t.pivot, optimality_tol: t.optimality, feasibility_tol: 1e-9, max_iterations: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Multipliers `y` on the rows, signed so that `y_i ≥ 0` on `≥` rows and
/// `y_i ≤ 0` on `≤` rows. Every feasible `x` then satisfies `yᵀAx ≥ yᵀb`, so
/// `max_{x in bounds} yᵀAx < yᵀb` proves infeasibility. With `x ≥ 0` and no
/// upper bounds this is the classical `yᵀA ≤ 0`, `yᵀb > 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FarkasCertificate {
    pub multipliers: Vec<f64>,
}

impl FarkasCertificate {
    /// `yᵀb − max_{x in bounds} yᵀAx`; positive for a valid certificate.
    pub fn margin(&self, lp: &LinearProgram) -> f64 {
        let y = &self.multipliers;
        let mut r = vec![0.0; lp.num_vars()];
        let mut yb = 0.0;
        for (i, row) in lp.rows.iter().enumerate() {
            yb += y[i] * row.rhs;
            for &(j, a) in &row.terms {
                r[j] += y[i] * a;
            }
        }
        let mut best = 0.0;
        for j in 0..lp.num_vars() {
            let (lo, hi) = (lp.lower[j], lp.upper[j]);
            let term = if r[j] > 0.0 {
                r[j] * hi
            } else if r[j] < 0.0 {
                r[j] * lo
            } else {
                0.0
            };
            best += term;
        }
        yb - best
    }

    /// Sign pattern is consistent with the row senses.
    pub fn signs_ok(&self, lp: &LinearProgram, tol: f64) -> bool {
        lp.rows.iter().zip(&self.multipliers).all(|(row, &y)| match row.sense {
            RowSense::Ge => y >= -tol,
            RowSense::Le => y <= tol,
            RowSense::Eq => true,
        })
    }

    /// `max_j (yᵀA)_j` over all columns.
    pub fn max_column_value(&self, lp: &LinearProgram) -> f64 {
        let mut r = vec![0.0; lp.num_vars()];
        for (i, row) in lp.rows.iter().enumerate() {
            for &(j, a) in &row.terms {
                r[j] += self.multipliers[i] * a;
            }
        }
        r.into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// ∂(optimal objective)/∂rhs_i, in the program's own sense.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub farkas: Option<FarkasCertificate>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Lagrangian dual bound `bᵀy + Σ_j min/max_{x_j in bounds} r_j x_j`.
    pub fn dual_objective(&self, lp: &LinearProgram) -> f64 {
        let sign = match lp.sense {
            ObjectiveSense::Minimize => 1.0,
            ObjectiveSense::Maximize => -1.0,
        };
        let mut r: Vec<f64> = lp.objective.iter().map(|c| sign * c).collect();
        let mut by = 0.0;
        for (i, row) in lp.rows.iter().enumerate() {
            let y = sign * self.duals[i];
            by += y * row.rhs;
            for &(j, a) in &row.terms {
                r[j] -= y * a;
            }
        }
        let mut total = by;
        for j in 0..lp.num_vars() {
            let (lo, hi) = (lp.lower[j], lp.upper[j]);
            let rj = r[j];
            let bound = if rj >= 0.0 { lo } else { hi };
            if bound.is_finite() {
                total += rj * bound;
            } else if rj.abs() > 1e-7 {
                return sign * f64::NEG_INFINITY;
            }
        }
        sign * total
    }

    /// Σ |y_i · slack_i| over rows plus Σ |r_j · distance to active bound|.
    pub fn complementary_slackness(&self, lp: &LinearProgram) -> f64 {
        let sign = match lp.sense {
            ObjectiveSense::Minimize => 1.0,
            ObjectiveSense::Maximize => -1.0,
        };
        let mut r: Vec<f64> = lp.objective.iter().map(|c| sign * c).collect();
        let mut total = 0.0;
        for (i, row) in lp.rows.iter().enumerate() {
            let y = sign * self.duals[i];
            total += (y * (lp.row_activity(i, &self.x) - row.rhs)).abs();
            for &(j, a) in &row.terms {
                r[j] -= y * a;
            }
        }
        for j in 0..lp.num_vars() {
            let (lo, hi) = (lp.lower[j], lp.upper[j]);
            let gap = if r[j] >= 0.0 { self.x[j] - lo } else { hi - self.x[j] };
            if gap.is_finite() {
                total += (r[j] * gap).abs();
            }
        }
        total
    }
}

/// How a user variable maps onto nonnegative internal columns.
#[derive(Clone, Copy, Debug)]
enum VarMap {
    /// x = offset + c
    Shift { col: usize, offset: f64 },
    /// x = offset − c
    Mirror { col: usize, offset: f64 },
    /// x = c⁺ − c⁻
    Split { pos: usize, neg: usize },
}

struct Tableau {
    m: usize,
    width: usize,
    data: Vec<f64>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    /// The initial tableau, for refactoring the current basis.
    orig: Vec<f64>,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.data[i * self.width + self.width - 1]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.data[r * w + c];
        {
            let row = &mut self.data[r * w..(r + 1) * w];
            let inv = 1.0 / p;
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[c] = 1.0;
        }
        let pivot_row: Vec<(usize, f64)> =
            self.data[r * w..(r + 1) * w].iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.data[i * w + c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.data[i * w..(i + 1) * w];
            for &(j, v) in &pivot_row {
                row[j] -= f * v;
            }
            row[c] = 0.0;
        }
        let f = self.obj[c];
        if f != 0.0 {
            for &(j, v) in &pivot_row {
                self.obj[j] -= f * v;
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Recomputes the tableau as `B⁻¹ · orig` and the reduced costs from
    /// `cost`, discarding the rounding accumulated by pivoting. Leaves the
    /// tableau untouched when the basis is numerically singular.
    fn reinvert(&mut self, cost: &[f64]) {
        let (m, w) = (self.m, self.width);
        if m == 0 {
            return;
        }
        let orig = nalgebra::DMatrix::from_row_slice(m, w, &self.orig);
        let b = orig.select_columns(self.basis.iter());
        let lu = b.lu();
        let Some(t) = lu.solve(&orig) else { return };
        if t.iter().any(|v| !v.is_finite()) {
            return;
        }
        for i in 0..m {
            for j in 0..w {
                self.data[i * w + j] = t[(i, j)];
            }
            self.data[i * w + self.basis[i]] = 1.0;
        }
        for j in 0..w {
            let mut d = cost.get(j).copied().unwrap_or(0.0);
            for i in 0..m {
                let cb = cost[self.basis[i]];
                if cb != 0.0 {
                    d -= cb * self.data[i * w + j];
                }
            }
            self.obj[j] = d;
        }
        for &c in &self.basis {
            self.obj[c] = 0.0;
        }
    }
}

/// Pivots between refactorizations (at least the row count).
const REFACTOR_EVERY: usize = 64;

enum Phase {
    Optimal,
    Unbounded,
}

struct Engine<'a> {
    t: Tableau,
    /// Phase cost over the columns, used when refactoring.
    cost: Vec<f64>,
    /// Columns allowed to enter the basis.
    allowed: Vec<bool>,
    opts: &'a LpOptions,
    iterations: usize,
    max_iterations: usize,
}

impl Engine<'_> {
    fn run(&mut self) -> Result<Phase> {
        let ncols = self.t.width - 1;
        let mut degenerate_run = 0usize;
        let mut since_refactor = 0usize;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(Error::Numerical(format!("simplex iteration cap {} reached", self.max_iterations)));
            }
            let bland = degenerate_run > 50;
            let mut enter = None;
            let mut best = -self.opts.optimality_tol;
            for j in 0..ncols {
                if !self.allowed[j] {
                    continue;
                }
                let d = self.t.obj[j];
                if d < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(c) = enter else {
                if since_refactor > 0 {
                    // Confirm optimality on a fresh factorization.
                    self.t.reinvert(&self.cost);
                    since_refactor = 0;
                    if (0..ncols).any(|j| self.allowed[j] && self.t.obj[j] < -self.opts.optimality_tol) {
                        continue;
                    }
                }
                return Ok(Phase::Optimal);
            };
            let mut leave: Option<usize> = None;
            let mut ratio = f64::INFINITY;
            for i in 0..self.t.m {
                let a = self.t.at(i, c);
                if a > self.opts.pivot_tol {
                    let q = self.t.rhs(i).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            if q < ratio - 1e-12 * (1.0 + ratio) {
                                true
                            } else if q <= ratio + 1e-12 * (1.0 + ratio) {
                                // Prefer larger pivots among ties, then smaller basic index.
                                let al = self.t.at(l, c);
                                a > al * 1.0001 || (a >= al * 0.9999 && self.t.basis[i] < self.t.basis[l])
                            } else {
                                false
                            }
                        }
                    };
                    if better {
                        leave = Some(i);
                        ratio = q.min(ratio);
                    }
                }
            }
            let Some(r) = leave else {
                return Ok(Phase::Unbounded);
            };
            if ratio <= 1e-13 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.t.pivot(r, c);
            self.iterations += 1;
            since_refactor += 1;
            if since_refactor >= REFACTOR_EVERY.max(self.t.m) {
                self.t.reinvert(&self.cost);
                since_refactor = 0;
            }
        }
    }
}

/// Solves the program. Returns `Err(Numerical)` only when the iteration cap is
/// hit; infeasibility and unboundedness are statuses.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    solve_lp_with(lp, &LpOptions::default())
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &LpOptions) -> Result<LpSolution> {
    lp.validate()?;
    let n_user = lp.num_vars();
    let sign = match lp.sense {
        ObjectiveSense::Minimize => 1.0,
        ObjectiveSense::Maximize => -1.0,
    };

    // Variable transformation onto nonnegative columns.
    let mut maps = Vec::with_capacity(n_user);
    let mut ncols_struct = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new(); // (col, cap)
    for j in 0..n_user {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        if lo.is_finite() {
            let col = ncols_struct;
            ncols_struct += 1;
            if hi.is_finite() {
                bound_rows.push((col, hi - lo));
            }
            maps.push(VarMap::Shift { col, offset: lo });
        } else if hi.is_finite() {
            let col = ncols_struct;
            ncols_struct += 1;
            maps.push(VarMap::Mirror { col, offset: hi });
        } else {
            maps.push(VarMap::Split { pos: ncols_struct, neg: ncols_struct + 1 });
            ncols_struct += 2;
        }
    }

    // Internal rows: user rows then bound rows, as (entries over struct cols, sense, rhs).
    struct Row {
        entries: Vec<(usize, f64)>,
        sense: RowSense,
        rhs: f64,
    }
    let mut rows: Vec<Row> = Vec::with_capacity(lp.num_rows() + bound_rows.len());
    for row in &lp.rows {
        let mut rhs = row.rhs;
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(row.terms.len());
        for &(j, a) in &row.terms {
            if a == 0.0 {
                continue;
            }
            match maps[j] {
                VarMap::Shift { col, offset } => {
                    rhs -= a * offset;
                    entries.push((col, a));
                }
                VarMap::Mirror { col, offset } => {
                    rhs -= a * offset;
                    entries.push((col, -a));
                }
                VarMap::Split { pos, neg } => {
                    entries.push((pos, a));
                    entries.push((neg, -a));
                }
            }
        }
        rows.push(Row { entries, sense: row.sense, rhs });
    }
    for &(col, cap) in &bound_rows {
        rows.push(Row { entries: vec![(col, 1.0)], sense: RowSense::Le, rhs: cap });
    }
    let m = rows.len();

    // Column layout: struct | slacks (one per inequality row) | artificials.
    let mut slack_of = vec![None; m];
    let mut ncols = ncols_struct;
    for (i, row) in rows.iter().enumerate() {
        if row.sense != RowSense::Eq {
            slack_of[i] = Some(ncols);
            ncols += 1;
        }
    }
    let mut flip = vec![1.0; m];
    for (i, row) in rows.iter().enumerate() {
        if row.rhs < 0.0 {
            flip[i] = -1.0;
        }
    }
    // A slack can start basic when its coefficient is +1 after flipping.
    let mut art_of = vec![None; m];
    let mut initial_col = vec![0usize; m];
    for i in 0..m {
        let slack_coef = match rows[i].sense {
            RowSense::Le => 1.0,
            RowSense::Ge => -1.0,
            RowSense::Eq => 0.0,
        } * flip[i];
        if slack_coef > 0.0 {
            initial_col[i] = slack_of[i].unwrap();
        } else {
            art_of[i] = Some(ncols);
            initial_col[i] = ncols;
            ncols += 1;
        }
    }
    let width = ncols + 1;
    let mut data = vec![0.0; m * width];
    for (i, row) in rows.iter().enumerate() {
        let base = i * width;
        for &(col, a) in &row.entries {
            data[base + col] += flip[i] * a;
        }
        if let Some(s) = slack_of[i] {
            let coef = if row.sense == RowSense::Le { 1.0 } else { -1.0 };
            data[base + s] = flip[i] * coef;
        }
        if let Some(a) = art_of[i] {
            data[base + a] = 1.0;
        }
        data[base + width - 1] = flip[i] * row.rhs;
    }
    let is_art: Vec<bool> = {
        let mut v = vec![false; ncols];
        for a in art_of.iter().flatten() {
            v[*a] = true;
        }
        v
    };

    let max_iterations = if opts.max_iterations > 0 { opts.max_iterations } else { 50 * (m + ncols) + 5000 };

    let mut t = Tableau { m, width, data: data.clone(), obj: vec![0.0; width], basis: initial_col.clone(), orig: data };

    // Phase one.
    let mut iterations = 0;
    let has_art = art_of.iter().any(Option::is_some);
    if has_art {
        for i in 0..m {
            if art_of[i].is_some() {
                for j in 0..width {
                    if !is_art.get(j).copied().unwrap_or(false) {
                        t.obj[j] -= t.data[i * width + j];
                    }
                }
            }
        }
        let allowed = vec![true; ncols];
        let mut engine = Engine {
            t,
            cost: is_art.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect(),
            allowed,
            opts,
            iterations: 0,
            max_iterations,
        };
        engine.run()?;
        iterations = engine.iterations;
        t = engine.t;
        let infeasibility = -t.obj[width - 1];
        let scale = 1.0 + rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        if infeasibility > opts.feasibility_tol * scale {
            // Phase-one multipliers: y_i = c_k − d_k on the initial identity column.
            let mut internal_y = vec![0.0; m];
            for i in 0..m {
                let k = initial_col[i];
                let ck = if is_art[k] { 1.0 } else { 0.0 };
                internal_y[i] = ck - t.obj[k];
            }
            // The phase-one LP maximizes yᵀb; flip to the ≥-feasible orientation.
            let multipliers: Vec<f64> = (0..lp.num_rows()).map(|i| flip[i] * internal_y[i]).collect();
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; n_user],
                duals: vec![0.0; lp.num_rows()],
                objective: f64::NAN,
                farkas: Some(FarkasCertificate { multipliers }),
                iterations,
            });
        }
        // Drive artificials out of the basis where possible.
        for i in 0..m {
            if is_art[t.basis[i]] {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..ncols {
                    if is_art[j] {
                        continue;
                    }
                    let a = t.at(i, j).abs();
                    if a > 1e-9 && best.is_none_or(|(_, b)| a > b) {
                        best = Some((j, a));
                    }
                }
                if let Some((j, _)) = best {
                    t.pivot(i, j);
                    iterations += 1;
                }
            }
        }
    }

    // Phase two.
    let mut cost = vec![0.0; ncols];
    for j in 0..n_user {
        let c = sign * lp.objective[j];
        match maps[j] {
            VarMap::Shift { col, .. } => {
                cost[col] = c;
            }
            VarMap::Mirror { col, .. } => {
                cost[col] = -c;
            }
            VarMap::Split { pos, neg } => {
                cost[pos] = c;
                cost[neg] = -c;
            }
        }
    }
    t.obj = vec![0.0; width];
    t.obj[..ncols].copy_from_slice(&cost);
    for i in 0..m {
        let cb = cost.get(t.basis[i]).copied().unwrap_or(0.0);
        if cb != 0.0 {
            for j in 0..width {
                t.obj[j] -= cb * t.data[i * width + j];
            }
        }
    }
    let allowed: Vec<bool> = (0..ncols).map(|j| !is_art[j]).collect();
    let mut engine = Engine { t, cost: cost.clone(), allowed, opts, iterations, max_iterations };
    let phase = engine.run()?;
    let iterations = engine.iterations;
    let t = engine.t;
    if let Phase::Unbounded = phase {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: vec![0.0; n_user],
            duals: vec![0.0; lp.num_rows()],
            objective: sign * f64::NEG_INFINITY,
            farkas: None,
            iterations,
        });
    }

    // Basic solution, read off a tableau that was refactored at optimality.
    let mut xi = vec![0.0; ncols];
    for i in 0..m {
        xi[t.basis[i]] = t.rhs(i);
    }
    for v in xi.iter_mut() {
        if *v < 0.0 && *v > -1e-9 {
            *v = 0.0;
        }
    }

    let mut x = vec![0.0; n_user];
    for j in 0..n_user {
        x[j] = match maps[j] {
            VarMap::Shift { col, offset } => offset + xi[col],
            VarMap::Mirror { col, offset } => offset - xi[col],
            VarMap::Split { pos, neg } => xi[pos] - xi[neg],
        };
        x[j] = x[j].clamp(lp.lower[j], lp.upper[j]);
    }
    let mut duals = vec![0.0; lp.num_rows()];
    for i in 0..lp.num_rows() {
        let k = initial_col[i];
        let ck = cost.get(k).copied().unwrap_or(0.0);
        let y_internal = ck - t.obj[k];
        duals[i] = sign * flip[i] * y_internal;
    }
    let objective = lp.objective_value(&x);
    Ok(LpSolution { status: LpStatus::Optimal, x, duals, objective, farkas: None, iterations })
}
