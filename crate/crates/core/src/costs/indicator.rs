use super::{check_dim, residuals, AffineBound, BoundFn, CostMetadata, CostPlugin, ModelCtx};
use crate::error::Result;
use crate::measures::{mean, DiscreteMeasure, Point};
use crate::optim::RowSense;
use crate::orders::check_convex_order;

fn indicator(ok: bool) -> f64 {
    if ok {
        0.0
    } else {
        f64::INFINITY
    }
}

fn indicator_metadata(icx: bool) -> CostMetadata {
    CostMetadata {
        cx_decreasing: true,
        icx_decreasing: icx,
        finite_valued: false,
        lower_bound: Some(AffineBound { a: 0.0, b: BoundFn::Zero }),
        ..Default::default()
    }
}

fn zero_linearization(value: f64, grid: &[Point]) -> Option<Vec<f64>> {
    value.is_finite().then(|| vec![0.0; grid.len()])
}

/// Mean rows `Σ_j r_j y_j {=,≥} m·x`.
fn mean_rows(x: &Point, row: &[usize], mass: f64, ctx: &mut ModelCtx, sense: RowSense) {
    for (expr, off) in residuals(x, row, mass, ctx.grid) {
        // expr = −Σ r_j y_jk, so the row reads −expr {=,≥} off.
        let r: Vec<(usize, f64)> = expr.iter().map(|&(j, a)| (j, -a)).collect();
        ctx.lp().add_row(r, sense, off);
    }
}

/// `0` if `mean ρ = x` (within `tol`), else `+∞`.
#[derive(Clone, Debug, PartialEq)]
pub struct MartingaleIndicator {
    pub tol: f64,
}

impl MartingaleIndicator {
    pub fn new(tol: f64) -> Self {
        MartingaleIndicator { tol }
    }
}

impl Default for MartingaleIndicator {
    fn default() -> Self {
        Self::new(super::MEAN_TOLERANCE)
    }
}

impl CostPlugin for MartingaleIndicator {
    fn name(&self) -> String {
        "martingale".into()
    }

    fn metadata(&self) -> CostMetadata {
        indicator_metadata(false)
    }

    fn evaluate(&self, x: &Point, rho: &DiscreteMeasure) -> Result<f64> {
        check_dim(x, rho)?;
        let m = mean(rho);
        Ok(indicator(x.0.iter().zip(&m.0).all(|(a, b)| (a - b).abs() <= self.tol)))
    }

    fn linearize(&self, x: &Point, rho: &DiscreteMeasure, grid: &[Point]) -> Result<Option<Vec<f64>>> {
        Ok(zero_linearization(self.evaluate(x, rho)?, grid))
    }

    fn model(&self, x: &Point, row: &[usize], mass: f64, ctx: &mut ModelCtx) -> Result<bool> {
        mean_rows(x, row, mass, ctx, RowSense::Eq);
        Ok(true)
    }
}

/// `0` if `δ_x ⪯_c ρ`, else `+∞`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexOrderIndicator {
    pub tol: f64,
}

impl ConvexOrderIndicator {
    pub fn new(tol: f64) -> Self {
        ConvexOrderIndicator { tol }
    }
}

impl CostPlugin for ConvexOrderIndicator {
    fn name(&self) -> String {
        "cxo_indicator".into()
    }

    fn metadata(&self) -> CostMetadata {
        indicator_metadata(false)
    }

    fn evaluate(&self, x: &Point, rho: &DiscreteMeasure) -> Result<f64> {
        check_dim(x, rho)?;
        if x.dim() == 1 {
            return MartingaleIndicator::new(self.tol).evaluate(x, rho);
        }
        let cert = check_convex_order(&DiscreteMeasure::dirac(x.clone()), rho)?;
        Ok(indicator(cert.verdict))
    }

    fn linearize(&self, x: &Point, rho: &DiscreteMeasure, grid: &[Point]) -> Result<Option<Vec<f64>>> {
        Ok(zero_linearization(self.evaluate(x, rho)?, grid))
    }

    fn model(&self, x: &Point, row: &[usize], mass: f64, ctx: &mut ModelCtx) -> Result<bool> {
        // A Dirac source is dominated exactly by the laws with its mean.
        mean_rows(x, row, mass, ctx, RowSense::Eq);
        Ok(true)
    }
}

/// `0` if `x ≤ mean ρ` coordinatewise (within `tol`), else `+∞`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubmartingaleIndicator {
    pub tol: f64,
}

impl SubmartingaleIndicator {
    pub fn new(tol: f64) -> Self {
        SubmartingaleIndicator { tol }
    }
}

impl CostPlugin for SubmartingaleIndicator {
    fn name(&self) -> String {
        "submartingale".into()
    }

    fn metadata(&self) -> CostMetadata {
        indicator_metadata(true)
    }

    fn evaluate(&self, x: &Point, rho: &DiscreteMeasure) -> Result<f64> {
        check_dim(x, rho)?;
        Ok(indicator(x.le(&mean(rho), self.tol)))
    }

    fn linearize(&self, x: &Point, rho: &DiscreteMeasure, grid: &[Point]) -> Result<Option<Vec<f64>>> {
        Ok(zero_linearization(self.evaluate(x, rho)?, grid))
    }

    fn model(&self, x: &Point, row: &[usize], mass: f64, ctx: &mut ModelCtx) -> Result<bool> {
        mean_rows(x, row, mass, ctx, RowSense::Ge);
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicators() {
        let rho = DiscreteMeasure::on_line(&[-1.0, 1.0], &[0.5, 0.5]).unwrap();
        let x0 = Point::scalar(0.0);
        assert_eq!(MartingaleIndicator::default().evaluate(&x0, &rho).unwrap(), 0.0);
        assert!(MartingaleIndicator::default().evaluate(&Point::scalar(0.1), &rho).unwrap().is_infinite());
        let sub = SubmartingaleIndicator::new(1e-9);
        assert_eq!(sub.evaluate(&Point::scalar(-0.5), &rho).unwrap(), 0.0);
        assert!(sub.evaluate(&Point::scalar(0.5), &rho).unwrap().is_infinite());
        let r2 =
            DiscreteMeasure::uniform(vec![Point::new(vec![-1.0, 0.0]), Point::new(vec![1.0, 0.0]), Point::new(vec![0.0, 2.0])])
                .unwrap();
        let c = ConvexOrderIndicator::new(1e-9);
        assert!(c.evaluate(&Point::new(vec![0.0, 2.0 / 3.0]), &r2).unwrap() == 0.0);
        assert!(c.evaluate(&Point::new(vec![0.0, 0.0]), &r2).unwrap().is_infinite());
    }
}
