//! The primal problem `inf_{π ∈ Π(μ,ν)} Σ_x μ_x C(x, π_x)`.
//!
//! Every row `P_x·` of the coupling matrix carries the cost's row model, so
//! linear, indicator-constrained and polyhedral costs become one LP and
//! quadratic costs a tangent-cut program with a certified gap. Costs without
//! a row model are handled by linearization cuts on per-row epigraph
//! variables, or by Frank–Wolfe on request.

use serde::{Deserialize, Serialize};

use crate::costs::{CostPlugin, ModelCtx};
use crate::error::{Error, Result};
use crate::measures::{Coupling, DiscreteMeasure};
use crate::optim::{
    frank_wolfe, solve_lp, ConvexProgram, ConvexProgramOracle, FrankWolfeOptions, LinearProgram, LpStatus, RowSense,
};
use crate::orders::{check_order, Order, OrderCertificate};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimalMethod {
    /// Linear cost: the classical transport LP.
    TransportLp,
    /// Mean-constrained (indicator-type) cost: LP over the constrained polytope.
    ConstrainedLp,
    /// Finite cost with a row model (LP or tangent cuts).
    ConvexModel,
    /// Cost without a row model: cutting planes from linearizations.
    Linearization,
    FrankWolfe,
    Exhaustive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimalStatus {
    Optimal,
    Infeasible,
    /// The iteration budget ran out before the gap met the tolerance.
    GapNotCertified,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimalOptions {
    /// Target certified gap (absolute).
    pub tol: f64,
    /// Use Frank–Wolfe for finite costs instead of the row model.
    pub frank_wolfe: bool,
    pub max_iterations: usize,
}

impl Default for PrimalOptions {
    fn default() -> Self {
        PrimalOptions { tol: 1e-6, frank_wolfe: false, max_iterations: 2000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimalResult {
    #[serde(with = "crate::hulls::ext_real")]
    pub value: f64,
    pub coupling: Option<Coupling>,
    pub method: PrimalMethod,
    /// `value − lower bound`, both certified by the solver.
    pub certified_gap: f64,
    pub status: PrimalStatus,
    /// Why the constrained polytope is empty, when it is.
    pub certificate: Option<OrderCertificate>,
    pub iterations: usize,
    /// Potential on `supp ν` read off the multipliers of the column
    /// marginal rows (the LP-based methods only).
    #[serde(default)]
    pub multipliers: Option<Vec<f64>>,
}

fn check_inputs(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &dyn CostPlugin) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), got: nu.dim() });
    }
    if !cost.metadata().convex_in_rho {
        return Err(Error::Unsupported(format!("{} is not declared convex in ρ", cost.name())));
    }
    Ok(())
}

/// Transport polytope with `P_ij` at index `i·n + j`.
fn transport_lp(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> LinearProgram {
    let (m, n) = (mu.len(), nu.len());
    let mut lp = LinearProgram::minimize();
    for _ in 0..m * n {
        lp.add_nonneg(0.0);
    }
    for i in 0..m {
        lp.add_row((0..n).map(|j| (i * n + j, 1.0)).collect(), RowSense::Eq, mu.weights()[i]);
    }
    for j in 0..n {
        lp.add_row((0..m).map(|i| (i * n + j, 1.0)).collect(), RowSense::Eq, nu.weights()[j]);
    }
    lp
}

/// Conditional law of row `i` of a flat plan.
fn row_law(nu: &DiscreteMeasure, plan: &[f64], i: usize, mass: f64) -> Result<DiscreteMeasure> {
    let n = nu.len();
    let w: Vec<f64> = (0..n).map(|j| plan[i * n + j].max(0.0) / mass).collect();
    DiscreteMeasure::normalized(nu.points().to_vec(), w)
}

fn coupling_from_plan(mu: &DiscreteMeasure, nu: &DiscreteMeasure, plan: &[f64]) -> Result<Coupling> {
    let n = nu.len();
    let matrix = (0..mu.len()).map(|i| (0..n).map(|j| plan[i * n + j].max(0.0)).collect()).collect();
    Coupling::new(mu.clone(), nu.clone(), matrix)
}

/// `Σ_x μ_x C(x, π_x)` for a coupling on `supp μ × supp ν`.
pub fn primal_objective(coupling: &Coupling, cost: &dyn CostPlugin) -> Result<f64> {
    let (mu, nu) = (coupling.mu(), coupling.nu());
    let mut total = 0.0;
    for (i, (x, m)) in mu.iter().enumerate() {
        let rho = DiscreteMeasure::normalized(nu.points().to_vec(), coupling.matrix()[i].clone())?;
        let c = cost.evaluate_in(x, &rho, nu.points())?;
        if c == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
        total += m * c;
    }
    Ok(total)
}

fn plan_objective(mu: &DiscreteMeasure, nu: &DiscreteMeasure, plan: &[f64], cost: &dyn CostPlugin) -> Result<f64> {
    primal_objective(&coupling_from_plan(mu, nu, plan)?, cost)
}

/// The order whose failure explains an empty constrained polytope.
fn explaining_order(cost: &dyn CostPlugin) -> Option<Order> {
    let meta = cost.metadata();
    if meta.finite_valued {
        return None;
    }
    if let Some(o) = meta.cone_decreasing {
        return Some(o);
    }
    if meta.icx_decreasing {
        Some(Order::IncreasingConvex)
    } else if meta.cx_decreasing {
        Some(Order::Convex)
    } else {
        None
    }
}

fn infeasible(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &dyn CostPlugin,
    method: PrimalMethod,
    iterations: usize,
) -> Result<PrimalResult> {
    let certificate = match explaining_order(cost) {
        Some(order) => Some(check_order(mu, nu, &order)?).filter(|c| !c.verdict),
        None => None,
    };
    Ok(PrimalResult {
        value: f64::INFINITY,
        coupling: None,
        method,
        certified_gap: 0.0,
        status: PrimalStatus::Infeasible,
        certificate,
        iterations,
        multipliers: None,
    })
}

#[allow(clippy::too_many_arguments)]
fn finish(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &dyn CostPlugin,
    plan: &[f64],
    lower: f64,
    method: PrimalMethod,
    iterations: usize,
    tol: f64,
    multipliers: Option<Vec<f64>>,
) -> Result<PrimalResult> {
    let coupling = coupling_from_plan(mu, nu, plan)?;
    let value = primal_objective(&coupling, cost)?;
    if !value.is_finite() {
        return Err(Error::Numerical(format!(
            "{} is +inf on the computed coupling; the constraint rows and the evaluation disagree",
            cost.name()
        )));
    }
    let certified_gap = (value - lower).max(0.0);
    let status = if certified_gap <= tol { PrimalStatus::Optimal } else { PrimalStatus::GapNotCertified };
    Ok(PrimalResult {
        value,
        coupling: Some(coupling),
        method,
        certified_gap,
        status,
        certificate: None,
        iterations,
        multipliers,
    })
}

pub fn solve_primal(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &dyn CostPlugin) -> Result<PrimalResult> {
    solve_primal_with(mu, nu, cost, &PrimalOptions::default())
}

pub fn solve_primal_with(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &dyn CostPlugin,
    opts: &PrimalOptions,
) -> Result<PrimalResult> {
    check_inputs(mu, nu, cost)?;
    let meta = cost.metadata();
    if opts.frank_wolfe {
        if !meta.finite_valued {
            return Err(Error::Unsupported("Frank–Wolfe needs a finite-valued cost".into()));
        }
        return solve_frank_wolfe(mu, nu, cost, opts);
    }
    let (m, n) = (mu.len(), nu.len());
    let mut prog = ConvexProgram::new(transport_lp(mu, nu));
    prog.max_iterations = opts.max_iterations.max(1);
    let mut modelled = true;
    for (i, (x, w)) in mu.iter().enumerate() {
        let row: Vec<usize> = (0..n).map(|j| i * n + j).collect();
        if !cost.model(x, &row, w, &mut ModelCtx { prog: &mut prog, grid: nu.points() })? {
            modelled = false;
            break;
        }
    }
    if !modelled {
        if !meta.finite_valued {
            return Err(Error::Unsupported(format!("{} has no row model and is not finite-valued", cost.name())));
        }
        return solve_by_linearization(mu, nu, cost, opts);
    }
    let method = if meta.linear {
        PrimalMethod::TransportLp
    } else if !meta.finite_valued {
        PrimalMethod::ConstrainedLp
    } else {
        PrimalMethod::ConvexModel
    };
    let sol = prog.solve()?;
    match sol.status {
        LpStatus::Optimal => {
            let plan = &sol.x[..m * n];
            let psi = (0..n).map(|j| -sol.last_lp.duals[m + j]).collect();
            finish(mu, nu, cost, plan, sol.lower_bound, method, sol.iterations, opts.tol, Some(psi))
        }
        LpStatus::Infeasible => infeasible(mu, nu, cost, method, sol.iterations),
        LpStatus::Unbounded => Err(Error::Numerical(format!("{} row model is unbounded below", cost.name()))),
    }
}

/// Kelley cutting planes on `τ_i ≥ μ_i C(x_i, P_i/μ_i)` using the cost's
/// linearizations.
fn solve_by_linearization(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &dyn CostPlugin,
    opts: &PrimalOptions,
) -> Result<PrimalResult> {
    let (m, n) = (mu.len(), nu.len());
    let mut lp = transport_lp(mu, nu);
    let tau: Vec<usize> = (0..m).map(|_| lp.add_free(1.0)).collect();
    let add_cuts = |lp: &mut LinearProgram, plan: &[f64]| -> Result<()> {
        for (i, (x, w)) in mu.iter().enumerate() {
            let rho = row_law(nu, plan, i, w)?;
            let c = cost.evaluate_in(x, &rho, nu.points())?;
            let g = cost
                .linearize(x, &rho, nu.points())?
                .ok_or_else(|| Error::Numerical("linearization requested at an infinite value".into()))?;
            // τ_i ≥ μ_i c + Σ_j g_j (P_ij − P⁰_ij)
            let mut row = vec![(tau[i], 1.0)];
            let mut rhs = w * c;
            for j in 0..n {
                row.push((i * n + j, -g[j]));
                rhs -= g[j] * plan[i * n + j];
            }
            lp.add_row(row, RowSense::Ge, rhs);
        }
        Ok(())
    };
    let product: Vec<f64> =
        (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| mu.weights()[i] * nu.weights()[j]).collect();
    add_cuts(&mut lp, &product)?;
    let mut best = (plan_objective(mu, nu, &product, cost)?, product);
    let mut lower = f64::NEG_INFINITY;
    let mut multipliers = None;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let sol = solve_lp(&lp)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Numerical("linearization master LP failed".into()));
        }
        if sol.objective > lower {
            lower = sol.objective;
            multipliers = Some((0..n).map(|j| -sol.duals[m + j]).collect());
        }
        let plan = sol.x[..m * n].to_vec();
        let v = plan_objective(mu, nu, &plan, cost)?;
        if v < best.0 {
            best = (v, plan.clone());
        }
        if best.0 - lower <= opts.tol {
            break;
        }
        add_cuts(&mut lp, &plan)?;
    }
    finish(mu, nu, cost, &best.1, lower, PrimalMethod::Linearization, iterations, opts.tol, multipliers)
}

struct WotOracle<'a> {
    poly: LinearProgram,
    mu: &'a DiscreteMeasure,
    nu: &'a DiscreteMeasure,
    cost: &'a dyn CostPlugin,
}

impl ConvexProgramOracle for WotOracle<'_> {
    fn polytope(&self) -> &LinearProgram {
        &self.poly
    }

    fn value(&self, x: &[f64]) -> f64 {
        plan_objective(self.mu, self.nu, x, self.cost).unwrap_or(f64::INFINITY)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = self.nu.len();
        let mut g = vec![0.0; x.len()];
        for (i, (p, w)) in self.mu.iter().enumerate() {
            let lin = row_law(self.nu, x, i, w)
                .and_then(|rho| self.cost.linearize(p, &rho, self.nu.points()))
                .ok()
                .flatten()
                .unwrap_or_else(|| vec![0.0; n]);
            g[i * n..(i + 1) * n].copy_from_slice(&lin);
        }
        g
    }

    fn initial_point(&self) -> Option<Vec<f64>> {
        let n = self.nu.len();
        Some((0..self.mu.len() * n).map(|k| self.mu.weights()[k / n] * self.nu.weights()[k % n]).collect())
    }
}

fn solve_frank_wolfe(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &dyn CostPlugin,
    opts: &PrimalOptions,
) -> Result<PrimalResult> {
    let oracle = WotOracle { poly: transport_lp(mu, nu), mu, nu, cost };
    let fw = frank_wolfe(&oracle, &FrankWolfeOptions { tol: opts.tol, max_iterations: opts.max_iterations })?;
    let lower = fw.value - fw.dual_gap;
    finish(mu, nu, cost, &fw.x, lower, PrimalMethod::FrankWolfe, fw.iterations, opts.tol, None)
}

/// Free parameters of the transport polytope: `P_ij` for `i < m−1, j < n−1`.
fn plan_from_free(mu: &[f64], nu: &[f64], free: &[f64]) -> Option<Vec<f64>> {
    let (m, n) = (mu.len(), nu.len());
    let mut p = vec![0.0; m * n];
    for i in 0..m - 1 {
        for j in 0..n - 1 {
            p[i * n + j] = free[i * (n - 1) + j];
        }
    }
    for i in 0..m - 1 {
        p[i * n + n - 1] = mu[i] - (0..n - 1).map(|j| p[i * n + j]).sum::<f64>();
    }
    for j in 0..n {
        p[(m - 1) * n + j] = nu[j] - (0..m - 1).map(|i| p[i * n + j]).sum::<f64>();
    }
    if p.iter().any(|&v| v < -1e-13) {
        return None;
    }
    Some(p.into_iter().map(|v| v.max(0.0)).collect())
}

/// Independent oracle: scans the transport polytope on a lattice over its
/// free parameters and refines around the best point. Requires at most three
/// free parameters and twelve cells; finite-valued costs only.
pub fn solve_primal_exhaustive(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &dyn CostPlugin) -> Result<PrimalResult> {
    check_inputs(mu, nu, cost)?;
    let (m, n) = (mu.len(), nu.len());
    let dof = (m - 1) * (n - 1);
    if dof > 3 || m * n > 12 {
        return Err(Error::SizeGuard(format!("{m}x{n} plan has {dof} free parameters; the scan allows 3")));
    }
    if !cost.metadata().finite_valued {
        return Err(Error::Unsupported("the exhaustive oracle scans finite-valued costs only".into()));
    }
    let (mw, nw) = (mu.weights(), nu.weights());
    let eval = |free: &[f64]| -> Result<Option<(f64, Vec<f64>)>> {
        match plan_from_free(mw, nw, free) {
            Some(p) => Ok(Some((plan_objective(mu, nu, &p, cost)?, p))),
            None => Ok(None),
        }
    };
    let caps: Vec<f64> = (0..dof).map(|k| mw[k / (n - 1)].min(nw[k % (n - 1)])).collect();
    let steps = match dof {
        0 => 1,
        1 => 2_000,
        2 => 80,
        _ => 20,
    };
    let mut lo = vec![0.0; dof];
    let mut hi = caps.clone();
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut iterations = 0;
    for _round in 0..if dof == 0 { 1 } else { 12 } {
        let mut idx = vec![0usize; dof];
        loop {
            let free: Vec<f64> = (0..dof).map(|k| lo[k] + (hi[k] - lo[k]) * idx[k] as f64 / steps as f64).collect();
            iterations += 1;
            if let Some((v, p)) = eval(&free)? {
                if best.as_ref().is_none_or(|b| v < b.0) {
                    best = Some((v, p, free));
                }
            }
            let mut k = 0;
            while k < dof {
                idx[k] += 1;
                if idx[k] <= steps {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == dof {
                break;
            }
        }
        let Some((_, _, centre)) = &best else { break };
        for k in 0..dof {
            let half = 2.0 * (hi[k] - lo[k]) / steps as f64;
            lo[k] = (centre[k] - half).max(0.0);
            hi[k] = (centre[k] + half).min(caps[k]);
        }
    }
    let (value, plan, _) = best.ok_or_else(|| Error::Numerical("empty transport polytope".into()))?;
    Ok(PrimalResult {
        value,
        coupling: Some(coupling_from_plan(mu, nu, &plan)?),
        method: PrimalMethod::Exhaustive,
        certified_gap: f64::NAN,
        status: PrimalStatus::Optimal,
        certificate: None,
        iterations,
        multipliers: None,
    })
}
