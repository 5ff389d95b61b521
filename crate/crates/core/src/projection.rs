//! Order projections: `inf_{η ⪯ ν} WOT(μ, η)` as one joint program over the
//! coupling `μ → η` and the law `η` on a finite grid, compared with the
//! monotone-hull primal and the class-restricted dual.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::costs::{add_domination, line_family, CostPlugin, ModelCtx, MonotoneHull, SharedCost};
use crate::dual::{solve_dual_seeded, working_grid, DualClass, DualOptions, DualStatus};
use crate::error::{Error, Result};
use crate::measures::{Coupling, DiscreteMeasure, Kernel, Point, PRUNE_WEIGHT};
use crate::optim::{ConvexProgram, LinearProgram, LpStatus, RowSense};
use crate::orders::{check_order, ConeFamily, Order, OrderCertificate, SeparatingFunction};
use crate::primal::{primal_objective, solve_primal, PrimalResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionOptions {
    /// Extra grid points per gap on the line (pair midpoints in `d ≥ 2`).
    /// Optimal `η` often sits between atoms, so the default refines once.
    pub grid_refine: usize,
    /// Target gap of the dual search.
    pub dual_tol: f64,
    pub slope_bound: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions { grid_refine: 1, dual_tol: 1e-8, slope_bound: 1e3 }
    }
}

/// The three values of the projection identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreeValues {
    /// `inf_{η ⪯ ν} WOT_C(μ, η)` from the joint program.
    pub lhs: f64,
    /// `WOT_Ĉ(μ, ν)` with the monotone hull `Ĉ`.
    pub mid: f64,
    /// The class-restricted dual `sup_{ψ ∈ E} μ(ψ^C) − ν(ψ)`.
    pub rhs: f64,
}

impl ThreeValues {
    pub fn max_discrepancy(&self) -> f64 {
        let (a, b, c) = (self.lhs, self.mid, self.rhs);
        (a - b).abs().max((b - c).abs()).max((a - c).abs())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub order: Order,
    pub grid: Vec<Point>,
    pub eta: DiscreteMeasure,
    /// Optimal coupling in `Π(μ, η)`.
    pub first_leg: Coupling,
    /// Kernel from `η` to `ν` whose rows dominate their source atoms.
    pub dilation_leg: Kernel,
    /// First leg followed by the dilation, a coupling in `Π(μ, ν)`.
    pub composed: Coupling,
    pub three_values: ThreeValues,
    pub max_discrepancy: f64,
    /// Certificate of `η ⪯ ν` from the order checker.
    pub eta_certificate: OrderCertificate,
    pub dual_status: DualStatus,
    /// The dual potential is a maximum of several conic pieces, i.e. it
    /// leaves the conic hull of the generators.
    pub dual_used_sup_closure: bool,
    pub notes: Vec<String>,
}

/// `Ĉ(x, ρ) = inf { C(x, ξ) : ξ ⪯ ρ }`, which is `C` itself when the cost is
/// already decreasing in the order. `grid` fixes the support of `ξ`.
pub fn monotone_hull_cost(cost: SharedCost, order: &Order, grid: Option<Vec<Point>>) -> SharedCost {
    if cost.metadata().decreasing_in(order) {
        return cost;
    }
    let hull = MonotoneHull::new(cost, order.clone());
    Arc::new(match grid {
        Some(g) => hull.with_grid(g),
        None => hull,
    })
}

fn dual_class(order: &Order) -> DualClass {
    match order {
        Order::Convex => DualClass::Convex,
        Order::IncreasingConvex => DualClass::Icx,
        Order::Cone(c) => DualClass::Cone(c.clone()),
    }
}

/// Optimal `(plan, η weights)` on `grid`, ties broken by the smallest second
/// moment of `η`.
fn joint_program(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &dyn CostPlugin,
    order: &Order,
    grid: &[Point],
) -> Result<(Vec<f64>, f64)> {
    let (m, g) = (mu.len(), grid.len());
    let mut lp = LinearProgram::minimize();
    for _ in 0..m * g {
        lp.add_nonneg(0.0);
    }
    for i in 0..m {
        lp.add_row((0..g).map(|k| (i * g + k, 1.0)).collect(), RowSense::Eq, mu.weights()[i]);
    }
    let eta: Vec<usize> = (0..g).map(|_| lp.add_nonneg(0.0)).collect();
    for (k, &e) in eta.iter().enumerate() {
        let mut t: Vec<(usize, f64)> = (0..m).map(|i| (i * g + k, 1.0)).collect();
        t.push((e, -1.0));
        lp.add_row(t, RowSense::Eq, 0.0);
    }
    let target: Vec<usize> = nu.weights().iter().map(|&w| lp.add_var(0.0, w, w)).collect();
    let mut prog = ConvexProgram::new(lp);
    let dim = mu.dim();
    add_domination(
        order,
        line_family(order, dim),
        &eta,
        grid,
        &target,
        nu.points(),
        &mut ModelCtx { prog: &mut prog, grid: nu.points() },
    )?;
    for (i, (x, w)) in mu.iter().enumerate() {
        let row: Vec<usize> = (0..g).map(|k| i * g + k).collect();
        if !cost.model(x, &row, w, &mut ModelCtx { prog: &mut prog, grid })? {
            return Err(Error::Unsupported(format!("{} has no row model for the joint program", cost.name())));
        }
    }
    let mut second = vec![0.0; prog.lp.num_vars()];
    for (k, &e) in eta.iter().enumerate() {
        second[e] = grid[k].norm2_sq();
    }
    let first = prog.solve()?;
    let sol = match first.status {
        LpStatus::Optimal => {
            let slack = 1e-9 * (1.0 + first.objective.abs());
            let tie = prog.solve_lexicographic(&second, slack)?;
            if tie.status == LpStatus::Optimal {
                tie
            } else {
                first
            }
        }
        LpStatus::Infeasible => {
            return Err(Error::Domain(format!("no law on the working grid is dominated by ν with finite {} cost", cost.name())))
        }
        LpStatus::Unbounded => return Err(Error::Numerical("joint projection program is unbounded".into())),
    };
    Ok((sol.x[..m * g].to_vec(), sol.objective))
}

pub fn project_order(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &SharedCost, order: &Order) -> Result<ProjectionResult> {
    project_order_with(mu, nu, cost, order, &ProjectionOptions::default())
}

pub fn project_order_with(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &SharedCost,
    order: &Order,
    opts: &ProjectionOptions,
) -> Result<ProjectionResult> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), got: nu.dim() });
    }
    if !cost.metadata().convex_in_rho {
        return Err(Error::Unsupported(format!("{} is not declared convex in ρ", cost.name())));
    }
    let order = order.resolve(mu.dim());
    let grid = working_grid(mu, nu, opts.grid_refine);
    let g = grid.len();
    let (plan, _) = joint_program(mu, nu, cost.as_ref(), &order, &grid)?;

    // η on the atoms that carry mass; the first leg's columns sum to it.
    let keep: Vec<usize> =
        (0..g).filter(|&k| (0..mu.len()).map(|i| plan[i * g + k].max(0.0)).sum::<f64>() >= PRUNE_WEIGHT).collect();
    let matrix: Vec<Vec<f64>> = (0..mu.len()).map(|i| keep.iter().map(|&k| plan[i * g + k].max(0.0)).collect()).collect();
    for (i, row) in matrix.iter().enumerate() {
        let s: f64 = row.iter().sum();
        if s > 0.0 && (s - mu.weights()[i]).abs() > 1e-9 {
            return Err(Error::Numerical(format!("joint program row {i} carries {s}")));
        }
    }
    let matrix: Vec<Vec<f64>> = matrix
        .into_iter()
        .zip(mu.weights())
        .map(|(row, &w)| {
            let s: f64 = row.iter().sum();
            row.into_iter().map(|v| v * w / s).collect()
        })
        .collect();
    let weights: Vec<f64> = (0..keep.len()).map(|c| matrix.iter().map(|r| r[c]).sum()).collect();
    let eta_points: Vec<Point> = keep.iter().map(|&k| grid[k].clone()).collect();
    let eta = DiscreteMeasure::new(eta_points.clone(), weights.clone())?;
    // `new` may merge or reorder nothing here (grid points are distinct), but
    // index the first leg by η's own support to be safe.
    let matrix: Vec<Vec<f64>> = matrix
        .iter()
        .map(|row| eta.points().iter().map(|p| eta_points.iter().position(|q| q == p).map_or(0.0, |c| row[c])).collect())
        .collect();
    let first_leg = Coupling::new(mu.clone(), eta.clone(), matrix)?;
    let lhs = primal_objective(&first_leg, cost.as_ref())?;

    let eta_certificate = check_order(&eta, nu, &order)?;
    if !eta_certificate.verdict {
        return Err(Error::Numerical(format!("projected law fails the order check (margin {:.3e})", eta_certificate.margin)));
    }
    let dilation_leg = eta_certificate.witness_kernel.clone().expect("positive verdicts carry a kernel");
    let composed = compose_legs(mu, nu, &first_leg, &dilation_leg)?;

    let hull = monotone_hull_cost(cost.clone(), &order, Some(grid.clone()));
    let mid_result: PrimalResult = solve_primal(mu, nu, hull.as_ref())?;
    let mid = mid_result.value;

    let class = dual_class(&order);
    let dual_opts = DualOptions {
        tol: opts.dual_tol,
        slope_bound: opts.slope_bound,
        grid_refine: opts.grid_refine,
        enforce_class: false,
        ..Default::default()
    };
    let dual = solve_dual_seeded(mu, nu, cost.as_ref(), &class, &dual_opts, Some(&mid_result))?;
    let three_values = ThreeValues { lhs, mid, rhs: dual.value };
    let dual_used_sup_closure = matches!(&dual.potential, SeparatingFunction::Conic { pieces, .. } if pieces.len() > 1);

    let mut notes = vec![format!(
        "η is supported on the working grid ({} points, refinement {}); compactness holds on the finite grid",
        g, opts.grid_refine
    )];
    if matches!(&order, Order::Cone(c) if c.family == ConeFamily::Custom) && dual_used_sup_closure {
        notes.push("the dual certificate is a maximum of conic pieces, outside the conic hull of the generators".into());
    }
    if !matches!(dual.status, DualStatus::Optimal) {
        notes.push(format!("dual search ended with status {:?} (gap {:.3e})", dual.status, dual.certified_gap));
    }
    Ok(ProjectionResult {
        order,
        grid,
        eta,
        first_leg,
        dilation_leg,
        composed,
        max_discrepancy: three_values.max_discrepancy(),
        three_values,
        eta_certificate,
        dual_status: dual.status,
        dual_used_sup_closure,
        notes,
    })
}

/// `Σ_k P_ik Q_k(y_j)`: route each first-leg atom through its dilation row.
fn compose_legs(mu: &DiscreteMeasure, nu: &DiscreteMeasure, first: &Coupling, dilation: &Kernel) -> Result<Coupling> {
    let rows: Vec<Option<Vec<f64>>> =
        (0..first.nu().len()).map(|k| dilation.row(k).map(|r| r.weights_on(nu.points())).transpose()).collect::<Result<_>>()?;
    let matrix = first
        .matrix()
        .iter()
        .map(|p| {
            let mut out = vec![0.0; nu.len()];
            for (pk, row) in p.iter().zip(&rows) {
                if let Some(q) = row {
                    for (o, v) in out.iter_mut().zip(q) {
                        *o += pk * v;
                    }
                }
            }
            out
        })
        .collect();
    Coupling::new(mu.clone(), nu.clone(), matrix)
}

/// Report of [`verify_three_way`]; disagreements are reported, not raised.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreeWayReport {
    pub values: ThreeValues,
    pub max_discrepancy: f64,
    pub agree: bool,
    pub eta: DiscreteMeasure,
}

pub fn verify_three_way(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &SharedCost, order: &Order) -> Result<ThreeWayReport> {
    let p = project_order(mu, nu, cost, order)?;
    Ok(ThreeWayReport {
        values: p.three_values,
        max_discrepancy: p.max_discrepancy,
        agree: p.max_discrepancy <= 1e-5,
        eta: p.eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::{monopolist, Barycentric, IcxPositivePart, MartingaleIndicator};
    use crate::hulls::ConvexFn;

    fn two_point() -> DiscreteMeasure {
        DiscreteMeasure::on_line(&[-1.0, 1.0], &[0.5, 0.5]).unwrap()
    }

    #[test]
    fn brenier_strassen_fixture() {
        let mu = DiscreteMeasure::dirac(Point::scalar(2.0));
        let cost: SharedCost = Arc::new(Barycentric::square());
        let p = project_order(&mu, &two_point(), &cost, &Order::Convex).unwrap();
        let v = p.three_values;
        for x in [v.lhs, v.mid, v.rhs] {
            assert!((x - 4.0).abs() <= 1e-6, "{v:?}");
        }
        assert_eq!(p.eta.points(), &[Point::scalar(0.0)]);
        assert!(p.composed.marginal_residual() <= 1e-9);
    }

    #[test]
    fn dominated_source_projects_to_itself() {
        let mu = DiscreteMeasure::dirac(Point::scalar(0.0));
        let cost: SharedCost = Arc::new(Barycentric::square());
        let p = project_order(&mu, &two_point(), &cost, &Order::Convex).unwrap();
        assert!(p.max_discrepancy <= 1e-6 && p.three_values.lhs.abs() <= 1e-9);
        assert_eq!(p.eta.points(), &[Point::scalar(0.0)]);
    }

    #[test]
    fn indicator_hull_on_equal_marginals_is_zero() {
        let mu = two_point();
        let cost: SharedCost = Arc::new(MartingaleIndicator::default());
        let p = project_order(&mu, &mu, &cost, &Order::Convex).unwrap();
        let v = p.three_values;
        assert!(v.lhs == 0.0 && v.mid == 0.0 && v.rhs.abs() <= 1e-8, "{v:?}");
    }

    #[test]
    fn monopolist_is_the_icx_hull_of_barycentric() {
        let grid: Vec<Point> = [-1.0, 0.0, 0.5, 2.0].iter().map(|&v| Point::scalar(v)).collect();
        let hull = monotone_hull_cost(Arc::new(Barycentric::abs()), &Order::IncreasingConvex, Some(grid.clone()));
        let mono = monopolist(ConvexFn::abs(), 1).unwrap().with_grid(grid.clone());
        let rho = DiscreteMeasure::on_line(&[-1.0, 0.5, 2.0], &[0.25, 0.25, 0.5]).unwrap();
        for x in &grid {
            let a = hull.evaluate_in(x, &rho, &grid).unwrap();
            let b = mono.evaluate_in(x, &rho, &grid).unwrap();
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
        let already: SharedCost = Arc::new(IcxPositivePart::new(1.0).unwrap());
        assert!(Arc::ptr_eq(&monotone_hull_cost(already.clone(), &Order::IncreasingConvex, None), &already));
    }
}
