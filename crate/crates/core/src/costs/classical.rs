use serde::{Deserialize, Serialize};

use super::{check_dim, CostMetadata, CostPlugin, ModelCtx};
use crate::error::{Error, Result};
use crate::hulls::{convex_hull, GridFunction};
use crate::measures::{DiscreteMeasure, Point};

const MATCH_TOL: f64 = 1e-12;

/// Pointwise cost `c(x, y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointCost {
    /// `−x·y`
    NegInner,
    /// `|y|`
    AbsY,
    /// `|x − y|²`
    SqDist,
    /// `|x − y|`
    AbsDist,
    /// `values[i][j] = c(xs[i], ys[j])`; `+∞` off the table.
    Table { xs: Vec<Point>, ys: Vec<Point>, values: Vec<Vec<f64>> },
}

fn position(pts: &[Point], p: &Point) -> Option<usize> {
    pts.iter().position(|q| q.dim() == p.dim() && q.0.iter().zip(&p.0).all(|(a, b)| (a - b).abs() <= MATCH_TOL))
}

impl PointCost {
    pub fn eval(&self, x: &Point, y: &Point) -> f64 {
        match self {
            PointCost::NegInner => -x.dot(y),
            PointCost::AbsY => y.norm2(),
            PointCost::SqDist => x.sub(y).norm2_sq(),
            PointCost::AbsDist => x.dist(y),
            PointCost::Table { xs, ys, values } => match (position(xs, x), position(ys, y)) {
                (Some(i), Some(j)) => values[i][j],
                _ => f64::INFINITY,
            },
        }
    }

    fn validate(&self) -> Result<()> {
        if let PointCost::Table { xs, ys, values } = self {
            if values.len() != xs.len() || values.iter().any(|r| r.len() != ys.len()) {
                return Err(Error::InvalidProgram("cost table shape does not match its supports".into()));
            }
            if values.iter().flatten().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
                return Err(Error::InvalidProgram("cost table entries must be finite or +inf".into()));
            }
        }
        Ok(())
    }

    /// Whether every `c(x, ·)` is concave on the table's `y` support.
    fn concave_in_y(&self) -> bool {
        match self {
            PointCost::NegInner => true,
            PointCost::AbsY | PointCost::SqDist | PointCost::AbsDist => false,
            PointCost::Table { ys, values, .. } => values.iter().all(|row| {
                if row.iter().any(|v| !v.is_finite()) {
                    return false;
                }
                let neg: Vec<f64> = row.iter().map(|v| -v).collect();
                match GridFunction::new(ys.clone(), neg.clone()) {
                    Ok(f) => convex_hull(&f).values().iter().zip(&neg).all(|(h, v)| (h - v).abs() <= 1e-9),
                    Err(_) => false,
                }
            }),
        }
    }
}

/// `C(x, ρ) = ρ(c(x, ·))`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalLinear {
    pub c: PointCost,
}

impl ClassicalLinear {
    pub fn new(c: PointCost) -> Self {
        ClassicalLinear { c }
    }

    pub fn try_new(c: PointCost) -> Result<Self> {
        c.validate()?;
        Ok(ClassicalLinear { c })
    }
}

impl CostPlugin for ClassicalLinear {
    fn name(&self) -> String {
        let c = match &self.c {
            PointCost::NegInner => "-x·y",
            PointCost::AbsY => "|y|",
            PointCost::SqDist => "|x-y|²",
            PointCost::AbsDist => "|x-y|",
            PointCost::Table { .. } => "table",
        };
        format!("classical({c})")
    }

    fn metadata(&self) -> CostMetadata {
        CostMetadata {
            cx_decreasing: self.c.concave_in_y(),
            linear: true,
            finite_valued: !matches!(self.c, PointCost::Table { .. }),
            ..Default::default()
        }
    }

    fn evaluate(&self, x: &Point, rho: &DiscreteMeasure) -> Result<f64> {
        check_dim(x, rho)?;
        let mut total = 0.0;
        for (y, w) in rho.iter() {
            let v = self.c.eval(x, y);
            if v == f64::INFINITY {
                return Ok(f64::INFINITY);
            }
            total += w * v;
        }
        Ok(total)
    }

    fn linearize(&self, x: &Point, rho: &DiscreteMeasure, grid: &[Point]) -> Result<Option<Vec<f64>>> {
        if !self.evaluate(x, rho)?.is_finite() {
            return Ok(None);
        }
        // Off-table grid points carry +∞ cost, so any value is a valid slope there.
        Ok(Some(
            grid.iter()
                .map(|y| {
                    let v = self.c.eval(x, y);
                    if v.is_finite() {
                        v
                    } else {
                        0.0
                    }
                })
                .collect(),
        ))
    }

    fn model(&self, x: &Point, row: &[usize], _mass: f64, ctx: &mut ModelCtx) -> Result<bool> {
        for (&r, y) in row.iter().zip(ctx.grid) {
            let v = self.c.eval(x, y);
            let lp = ctx.lp();
            if v.is_finite() {
                lp.objective[r] += v;
            } else {
                lp.upper[r] = 0.0;
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abs_y_increases_along_spreads() {
        let c = ClassicalLinear::new(PointCost::AbsY);
        let x = Point::scalar(0.0);
        assert_eq!(c.evaluate(&x, &DiscreteMeasure::dirac(0.0.into())).unwrap(), 0.0);
        let spread = DiscreteMeasure::on_line(&[-1.0, 1.0], &[0.5, 0.5]).unwrap();
        assert_eq!(c.evaluate(&x, &spread).unwrap(), 1.0);
        assert!(!c.metadata().cx_decreasing);
        assert!(ClassicalLinear::new(PointCost::NegInner).metadata().cx_decreasing);
    }

    #[test]
    fn table_concavity_is_checked() {
        let ys = vec![Point::scalar(0.0), Point::scalar(1.0), Point::scalar(2.0)];
        let xs = vec![Point::scalar(0.0)];
        let concave = PointCost::Table { xs: xs.clone(), ys: ys.clone(), values: vec![vec![0.0, 1.0, 1.5]] };
        let convex = PointCost::Table { xs, ys, values: vec![vec![0.0, 1.0, 3.0]] };
        assert!(ClassicalLinear::try_new(concave).unwrap().metadata().cx_decreasing);
        let c = ClassicalLinear::try_new(convex).unwrap();
        assert!(!c.metadata().cx_decreasing);
        let off = DiscreteMeasure::dirac(Point::scalar(5.0));
        assert!(c.evaluate(&Point::scalar(0.0), &off).unwrap().is_infinite());
    }
}
