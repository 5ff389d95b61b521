//! Linear programs plus separable convex terms, solved by Kelley's
//! tangent-cut method on top of the simplex.

use serde::{Deserialize, Serialize};

use super::lp::{solve_lp, LinearProgram, LpSolution, LpStatus, ObjectiveSense, RowSense};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ScalarConvex {
    /// `scale · u²`, `scale > 0`.
    Square { scale: f64 },
}

impl ScalarConvex {
    pub fn value(&self, u: f64) -> f64 {
        match *self {
            ScalarConvex::Square { scale } => scale * u * u,
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        match *self {
            ScalarConvex::Square { scale } => 2.0 * scale * u,
        }
    }

    /// Legendre conjugate `sup_u λu − f(u)`.
    pub fn conjugate(&self, lambda: f64) -> f64 {
        match *self {
            ScalarConvex::Square { scale } => lambda * lambda / (4.0 * scale),
        }
    }

    pub fn conjugate_derivative(&self, lambda: f64) -> f64 {
        match *self {
            ScalarConvex::Square { scale } => lambda / (2.0 * scale),
        }
    }
}

/// `func(Σ a_j x_j + offset)` added to the objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparableTerm {
    pub expr: Vec<(usize, f64)>,
    pub offset: f64,
    pub func: ScalarConvex,
}

impl SeparableTerm {
    pub fn argument(&self, x: &[f64]) -> f64 {
        self.offset + self.expr.iter().map(|&(j, a)| a * x[j]).sum::<f64>()
    }
}

/// Minimize `cᵀx + Σ_k f_k(a_kᵀx + b_k)` over the LP's feasible set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexProgram {
    pub lp: LinearProgram,
    pub terms: Vec<SeparableTerm>,
    pub rel_tol: f64,
    pub max_iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgramSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// True objective at `x`.
    pub objective: f64,
    /// Certified lower bound (value of the last cut model).
    pub lower_bound: f64,
    pub iterations: usize,
    /// Final LP over the user variables followed by one epigraph variable per term.
    pub last_lp: LpSolution,
}

impl ProgramSolution {
    pub fn gap(&self) -> f64 {
        self.objective - self.lower_bound
    }
}

impl ConvexProgram {
    pub fn new(lp: LinearProgram) -> Self {
        ConvexProgram { lp, terms: Vec::new(), rel_tol: 1e-10, max_iterations: 400 }
    }

    pub fn add_term(&mut self, expr: Vec<(usize, f64)>, offset: f64, func: ScalarConvex) {
        self.terms.push(SeparableTerm { expr, offset, func });
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.lp.objective_value(x) + self.terms.iter().map(|t| t.func.value(t.argument(x))).sum::<f64>()
    }

    pub fn solve(&self) -> Result<ProgramSolution> {
        self.solve_inner(None)
    }

    /// Among near-minimizers (true objective within `slack` of the optimum),
    /// minimizes the linear `secondary` objective.
    pub fn solve_lexicographic(&self, secondary: &[f64], slack: f64) -> Result<ProgramSolution> {
        let first = self.solve()?;
        if first.status != LpStatus::Optimal {
            return Ok(first);
        }
        self.solve_inner(Some((secondary, first.objective + slack)))
    }

    fn solve_inner(&self, stage_two: Option<(&[f64], f64)>) -> Result<ProgramSolution> {
        if self.lp.sense != ObjectiveSense::Minimize {
            return Err(Error::InvalidProgram("convex programs are stated as minimizations".into()));
        }
        let n = self.lp.num_vars();
        let mut lp = self.lp.clone();
        let mut epi = Vec::with_capacity(self.terms.len());
        for _ in &self.terms {
            epi.push(lp.add_free(1.0));
        }
        // Initial tangents at 0 and ±1 bound every epigraph variable below.
        for (k, term) in self.terms.iter().enumerate() {
            for u0 in [0.0, -1.0, 1.0] {
                add_tangent(&mut lp, epi[k], term, u0);
            }
        }
        let cap_row = match stage_two {
            Some((secondary, cap)) => {
                let mut terms: Vec<(usize, f64)> =
                    (0..n).filter(|&j| self.lp.objective[j] != 0.0).map(|j| (j, self.lp.objective[j])).collect();
                terms.extend(epi.iter().map(|&t| (t, 1.0)));
                for j in 0..n {
                    lp.objective[j] = secondary.get(j).copied().unwrap_or(0.0);
                }
                for &t in &epi {
                    lp.objective[t] = 0.0;
                }
                Some((lp.add_row(terms, RowSense::Le, cap), cap))
            }
            None => None,
        };
        let rhs_scale = 1.0 + lp.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        let mut iterations = 0;
        // The last round whose LP solution passed the sanity checks; nearly
        // parallel cuts eventually make the simplex unreliable, and then this
        // round is reported instead, with its (valid, looser) lower bound.
        let mut last_good: Option<ProgramSolution> = None;
        loop {
            let sol = solve_lp(&lp)?;
            iterations += 1;
            if let Some(good) = &last_good {
                let sane = sol.status == LpStatus::Optimal
                    && sol.objective.is_finite()
                    && lp.primal_residual(&sol.x) <= 1e-8 * rhs_scale
                    && sol.objective >= good.last_lp.objective - 1e-9 * (1.0 + good.last_lp.objective.abs());
                if !sane {
                    return Ok(last_good.take().expect("checked"));
                }
            }
            if sol.status != LpStatus::Optimal {
                let status = sol.status;
                return Ok(ProgramSolution {
                    status,
                    x: vec![0.0; n],
                    objective: if status == LpStatus::Infeasible { f64::INFINITY } else { f64::NEG_INFINITY },
                    lower_bound: f64::NEG_INFINITY,
                    iterations,
                    last_lp: sol,
                });
            }
            let x = sol.x[..n].to_vec();
            let truth = self.objective_value(&x);
            let model: f64 = self.lp.objective_value(&x) + epi.iter().map(|&t| sol.x[t]).sum::<f64>();
            let scale = 1.0 + truth.abs();
            let converged = match cap_row {
                None => truth - model <= self.rel_tol * scale,
                Some((_, cap)) => truth <= cap + self.rel_tol * scale,
            };
            if converged || self.terms.is_empty() {
                let lower_bound = if cap_row.is_some() { truth } else { sol.objective };
                return Ok(ProgramSolution {
                    status: LpStatus::Optimal,
                    x,
                    objective: truth,
                    lower_bound: lower_bound.min(truth),
                    iterations,
                    last_lp: sol,
                });
            }
            let lower_bound = if cap_row.is_some() { f64::NEG_INFINITY } else { sol.objective };
            last_good = Some(ProgramSolution {
                status: LpStatus::Optimal,
                x: x.clone(),
                objective: truth,
                lower_bound: lower_bound.min(truth),
                iterations,
                last_lp: sol.clone(),
            });
            if iterations >= self.max_iterations {
                return Err(Error::Numerical(format!(
                    "tangent-cut loop did not close the gap ({:.3e}) in {} rounds",
                    truth - model,
                    iterations
                )));
            }
            let mut added = false;
            for (k, term) in self.terms.iter().enumerate() {
                let u = term.argument(&x);
                if term.func.value(u) - sol.x[epi[k]] > 1e-14 * scale {
                    add_tangent(&mut lp, epi[k], term, u);
                    added = true;
                }
            }
            if !added {
                return Err(Error::Numerical("tangent cuts stalled".into()));
            }
        }
    }
}

/// `t ≥ f(u0) + f'(u0)(u − u0)` with `u = exprᵀx + offset`.
fn add_tangent(lp: &mut LinearProgram, t: usize, term: &SeparableTerm, u0: f64) {
    let g = term.func.derivative(u0);
    let mut row = vec![(t, 1.0)];
    row.extend(term.expr.iter().map(|&(j, a)| (j, -g * a)));
    let rhs = term.func.value(u0) - g * u0 + g * term.offset;
    lp.add_row(row, RowSense::Ge, rhs);
}
