use std::sync::Arc;

use super::{evaluate_by_model, linearize_by_model, Barycentric, BoundFn, CostMetadata, CostPlugin, ModelCtx, SharedCost};
use crate::error::{Error, Result};
use crate::hulls::ConvexFn;
use crate::measures::{DiscreteMeasure, Point};
use crate::optim::RowSense;
use crate::orders::{ConeFamily, ConeSpec, Order, TestFn};

/// Monotone hull `Ĉ(x, ρ) = inf { C(x, ξ) : ξ ⪯ ρ }`, with `ξ` ranging over
/// laws on a finite grid (its own, or the row grid plus `x`).
#[derive(Clone, Debug)]
pub struct MonotoneHull {
    pub inner: SharedCost,
    pub order: Order,
    pub grid: Option<Vec<Point>>,
}

impl MonotoneHull {
    pub fn new(inner: SharedCost, order: Order) -> Self {
        MonotoneHull { inner, order, grid: None }
    }

    /// Fixes the grid carrying the inner variable `ξ`.
    pub fn with_grid(mut self, grid: Vec<Point>) -> Self {
        self.grid = Some(grid);
        self
    }

    fn xi_grid(&self, x: &Point, row_grid: &[Point]) -> Vec<Point> {
        let mut g = self.grid.clone().unwrap_or_else(|| row_grid.to_vec());
        if !g.contains(x) {
            g.push(x.clone());
        }
        g
    }
}

/// `Some(equality_on_identity)` when the order reduces to generator rows on
/// the line.
pub(crate) fn line_family(order: &Order, dim: usize) -> Option<bool> {
    if dim != 1 {
        return None;
    }
    match order {
        Order::Convex => Some(true),
        Order::IncreasingConvex => Some(false),
        Order::Cone(c) => match c.family {
            ConeFamily::Convex1d => Some(true),
            ConeFamily::Icx1d => Some(false),
            ConeFamily::Custom => None,
        },
    }
}

/// Adds `ξ ⪯ r` for `ξ` on `xi_grid` and `r` on `grid` (both of mass `mass`).
pub(crate) fn add_domination(
    order: &Order,
    line_equality: Option<bool>,
    xi: &[usize],
    xi_grid: &[Point],
    row: &[usize],
    grid: &[Point],
    ctx: &mut ModelCtx,
) -> Result<()> {
    let lp = ctx.lp();
    let mass_row: Vec<(usize, f64)> = xi.iter().map(|&k| (k, 1.0)).chain(row.iter().map(|&j| (j, -1.0))).collect();
    lp.add_row(mass_row, RowSense::Eq, 0.0);
    let aggregate = |lp: &mut crate::optim::LinearProgram, f: &dyn Fn(&Point) -> f64, sense: RowSense| {
        let mut t: Vec<(usize, f64)> = Vec::new();
        t.extend(xi.iter().zip(xi_grid).map(|(&k, y)| (k, f(y))).filter(|e| e.1 != 0.0));
        t.extend(row.iter().zip(grid).map(|(&j, g)| (j, -f(g))).filter(|e| e.1 != 0.0));
        lp.add_row(t, sense, 0.0);
    };
    if let Some(eq) = line_equality {
        aggregate(lp, &|p: &Point| p.0[0], if eq { RowSense::Eq } else { RowSense::Le });
        let mut knots: Vec<f64> = xi_grid.iter().chain(grid).map(|p| p.0[0]).collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        for t in knots {
            aggregate(lp, &|p: &Point| (p.0[0] - t).max(0.0), RowSense::Le);
        }
        return Ok(());
    }
    // Kernel p_kj from ξ to r with per-source domination.
    let p: Vec<Vec<usize>> = xi.iter().map(|_| row.iter().map(|_| lp.add_nonneg(0.0)).collect()).collect();
    for (k, &v) in xi.iter().enumerate() {
        let mut t: Vec<(usize, f64)> = p[k].iter().map(|&q| (q, 1.0)).collect();
        t.push((v, -1.0));
        lp.add_row(t, RowSense::Eq, 0.0);
    }
    for (j, &r) in row.iter().enumerate() {
        let mut t: Vec<(usize, f64)> = p.iter().map(|pk| (pk[j], 1.0)).collect();
        t.push((r, -1.0));
        lp.add_row(t, RowSense::Eq, 0.0);
    }
    let d = grid.first().map_or(1, Point::dim);
    let (sense, gens): (RowSense, Vec<TestFn>) = match order {
        Order::Cone(c) if c.family == ConeFamily::Custom => {
            let pts: Vec<&Point> = xi_grid.iter().chain(grid).collect();
            let g = c.expand(&pts);
            (RowSense::Ge, g.into_iter().map(|g| Box::new(move |y: &Point| g.eval(y)) as Box<_>).collect())
        }
        _ => {
            let eq =
                matches!(order, Order::Convex) || matches!(order, Order::Cone(ConeSpec { family: ConeFamily::Convex1d, .. }));
            let sense = if eq { RowSense::Eq } else { RowSense::Ge };
            (sense, (0..d).map(|a| Box::new(move |y: &Point| Ok(y.0[a])) as Box<_>).collect())
        }
    };
    for f in &gens {
        let fx: Vec<f64> = xi_grid.iter().map(f).collect::<Result<_>>()?;
        let fg: Vec<f64> = grid.iter().map(f).collect::<Result<_>>()?;
        for (k, pk) in p.iter().enumerate() {
            let t: Vec<(usize, f64)> = pk.iter().zip(&fg).map(|(&q, v)| (q, v - fx[k])).filter(|e| e.1 != 0.0).collect();
            lp.add_row(t, sense, 0.0);
        }
    }
    Ok(())
}

impl CostPlugin for MonotoneHull {
    fn name(&self) -> String {
        let o = match &self.order {
            Order::Convex => "cx".to_string(),
            Order::IncreasingConvex => "icx".to_string(),
            Order::Cone(c) => format!("cone:{:?}", c.family).to_lowercase(),
        };
        format!("hull[{o}]({})", self.inner.name())
    }

    fn metadata(&self) -> CostMetadata {
        let inner = self.inner.metadata();
        let (cx, icx) = match &self.order {
            Order::Convex => (true, false),
            Order::IncreasingConvex => (true, true),
            Order::Cone(c) => match c.family {
                ConeFamily::Convex1d => (true, false),
                ConeFamily::Icx1d => (true, true),
                ConeFamily::Custom => (false, false),
            },
        };
        // ξ(b) ≤ ρ(b) is not available for general b, so only constant bounds carry over.
        let lower = inner.lower_bound.filter(|b| b.b == BoundFn::Zero);
        CostMetadata {
            convex_in_rho: inner.convex_in_rho,
            cx_decreasing: cx,
            icx_decreasing: icx,
            cone_decreasing: Some(self.order.clone()),
            lower_bound: lower,
            upper_bound: None,
            continuity_declared: inner.continuity_declared,
            finite_valued: inner.finite_valued,
            linear: false,
        }
    }

    fn evaluate(&self, x: &Point, rho: &DiscreteMeasure) -> Result<f64> {
        self.evaluate_in(x, rho, rho.points())
    }

    fn evaluate_in(&self, x: &Point, rho: &DiscreteMeasure, grid: &[Point]) -> Result<f64> {
        if x.dim() != rho.dim() {
            return Err(Error::DimensionMismatch { expected: x.dim(), got: rho.dim() });
        }
        Ok(evaluate_by_model(self, x, rho, grid)?.map_or(f64::INFINITY, |(v, _)| v))
    }

    fn linearize(&self, x: &Point, rho: &DiscreteMeasure, grid: &[Point]) -> Result<Option<Vec<f64>>> {
        linearize_by_model(self, x, rho, grid)
    }

    fn model(&self, x: &Point, row: &[usize], mass: f64, ctx: &mut ModelCtx) -> Result<bool> {
        let xi_grid = self.xi_grid(x, ctx.grid);
        let xi: Vec<usize> = xi_grid.iter().map(|_| ctx.lp().add_nonneg(0.0)).collect();
        let grid = ctx.grid;
        add_domination(&self.order, line_family(&self.order, x.dim()), &xi, &xi_grid, row, grid, ctx)?;
        self.inner.model(x, &xi, mass, &mut ModelCtx { prog: ctx.prog, grid: &xi_grid })
    }
}

/// Monopolist hull `inf { θ(x − mean ξ) : ξ ⪯_icx ρ }`.
pub fn monopolist(theta: ConvexFn, dim: usize) -> Result<MonotoneHull> {
    let inner = Barycentric::new(theta, dim)?;
    Ok(MonotoneHull::new(Arc::new(inner), Order::IncreasingConvex))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monopolist_spec_values() {
        let c = monopolist(ConvexFn::abs(), 1).unwrap();
        let rho = DiscreteMeasure::dirac(Point::scalar(1.0));
        assert!((c.evaluate(&Point::scalar(2.0), &rho).unwrap() - 1.0).abs() < 1e-9);
        assert!(c.evaluate(&Point::scalar(0.0), &rho).unwrap().abs() < 1e-9);
        assert!(c.metadata().icx_decreasing);
    }

    #[test]
    fn kernel_and_generator_domination_agree() {
        // Same hull through the kernel path (custom cone with the icx generators).
        let grid: Vec<Point> = [-1.0, 0.0, 0.5, 2.0].iter().map(|&v| Point::scalar(v)).collect();
        let pts: Vec<&Point> = grid.iter().collect();
        let custom = ConeSpec::custom(ConeSpec::icx().expand(&pts));
        let inner: SharedCost = Arc::new(Barycentric::square());
        let a = MonotoneHull::new(inner.clone(), Order::IncreasingConvex).with_grid(grid.clone());
        let b = MonotoneHull::new(inner, Order::Cone(custom)).with_grid(grid.clone());
        let rho = DiscreteMeasure::on_line(&[-1.0, 2.0], &[0.5, 0.5]).unwrap();
        for x in [-1.0, 0.0, 0.5, 2.0] {
            let x = Point::scalar(x);
            let va = a.evaluate_in(&x, &rho, &grid).unwrap();
            let vb = b.evaluate_in(&x, &rho, &grid).unwrap();
            assert!((va - vb).abs() < 1e-7, "{va} vs {vb}");
        }
    }
}
