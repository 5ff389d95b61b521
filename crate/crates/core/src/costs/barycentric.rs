use super::{abs_var, check_dim, residuals, AffineBound, BoundFn, CostMetadata, CostPlugin, ModelCtx};
use crate::error::{Error, Result};
use crate::hulls::{ConvexFn, NormKind};
use crate::measures::{mean, DiscreteMeasure, Point};
use crate::optim::{RowSense, ScalarConvex};

/// `C(x, ρ) = θ(x − mean ρ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Barycentric {
    pub theta: ConvexFn,
}

impl Barycentric {
    pub fn new(theta: ConvexFn, dim: usize) -> Result<Self> {
        theta.validate(dim)?;
        Ok(Barycentric { theta })
    }

    pub fn abs() -> Self {
        Barycentric { theta: ConvexFn::abs() }
    }

    pub fn square() -> Self {
        Barycentric { theta: ConvexFn::square() }
    }

    /// A subgradient of θ at `u`.
    fn theta_subgradient(&self, u: &[f64]) -> Vec<f64> {
        match &self.theta {
            ConvexFn::Norm { norm, scale } => {
                let n = norm.norm(u);
                if n == 0.0 {
                    return vec![0.0; u.len()];
                }
                match norm {
                    NormKind::L1 => u.iter().map(|a| scale * a.signum()).collect(),
                    NormKind::L2 => u.iter().map(|a| scale * a / n).collect(),
                    NormKind::Linf => {
                        let k = (0..u.len()).max_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs())).unwrap();
                        let mut g = vec![0.0; u.len()];
                        g[k] = scale * u[k].signum();
                        g
                    }
                }
            }
            ConvexFn::SquaredNorm { scale } => u.iter().map(|a| 2.0 * scale * a).collect(),
            ConvexFn::PiecewiseLinear { slopes, intercepts } => {
                let k = (0..slopes.len())
                    .max_by(|&a, &b| (slopes[a] * u[0] + intercepts[a]).total_cmp(&(slopes[b] * u[0] + intercepts[b])))
                    .unwrap();
                vec![slopes[k]]
            }
        }
    }
}

impl CostPlugin for Barycentric {
    fn name(&self) -> String {
        format!("barycentric({})", theta_label(&self.theta))
    }

    fn metadata(&self) -> CostMetadata {
        let upper = match &self.theta {
            ConvexFn::Norm { norm: NormKind::L2, scale } => Some(AffineBound { a: 0.0, b: BoundFn::Norm { scale: *scale } }),
            _ => None,
        };
        CostMetadata { cx_decreasing: true, upper_bound: upper, ..Default::default() }
    }

    fn evaluate(&self, x: &Point, rho: &DiscreteMeasure) -> Result<f64> {
        check_dim(x, rho)?;
        Ok(self.theta.eval(&x.sub(&mean(rho)).0))
    }

    fn linearize(&self, x: &Point, rho: &DiscreteMeasure, grid: &[Point]) -> Result<Option<Vec<f64>>> {
        check_dim(x, rho)?;
        let w = self.theta_subgradient(&x.sub(&mean(rho)).0);
        Ok(Some(grid.iter().map(|y| -Point(w.clone()).dot(y)).collect()))
    }

    fn model(&self, x: &Point, row: &[usize], mass: f64, ctx: &mut ModelCtx) -> Result<bool> {
        let v = residuals(x, row, mass, ctx.grid);
        let d = x.dim();
        match &self.theta {
            ConvexFn::Norm { norm, scale } => match (norm, d) {
                (NormKind::L1, _) | (_, 1) => {
                    for (expr, off) in &v {
                        abs_var(ctx.lp(), expr, *off, *scale);
                    }
                }
                (NormKind::Linf, _) => {
                    let t = ctx.lp().add_nonneg(*scale);
                    for (expr, off) in &v {
                        for s in [1.0, -1.0] {
                            let mut r = vec![(t, 1.0)];
                            r.extend(expr.iter().map(|&(j, a)| (j, -s * a)));
                            ctx.lp().add_row(r, RowSense::Ge, s * off);
                        }
                    }
                }
                (NormKind::L2, _) => return Ok(false),
            },
            ConvexFn::SquaredNorm { scale } => {
                for (expr, off) in v {
                    ctx.prog.add_term(expr, off, ScalarConvex::Square { scale: scale / mass });
                }
            }
            ConvexFn::PiecewiseLinear { slopes, intercepts } => {
                let t = ctx.lp().add_free(1.0);
                let (expr, off) = &v[0];
                for (a, c) in slopes.iter().zip(intercepts) {
                    // t ≥ a·v + m·c
                    let mut r = vec![(t, 1.0)];
                    r.extend(expr.iter().map(|&(j, e)| (j, -a * e)));
                    ctx.lp().add_row(r, RowSense::Ge, a * off + mass * c);
                }
            }
        }
        Ok(true)
    }
}

pub(crate) fn theta_label(theta: &ConvexFn) -> String {
    match theta {
        ConvexFn::Norm { norm, scale } => format!("{scale}·{norm:?}-norm"),
        ConvexFn::SquaredNorm { scale } => format!("{scale}·|·|²"),
        ConvexFn::PiecewiseLinear { slopes, .. } => format!("pl{}", slopes.len()),
    }
}

/// `C(x, ρ) = ‖(x − mean ρ)₊‖_q`, `q ∈ {1, 2, ∞}`.
#[derive(Clone, Debug, PartialEq)]
pub struct IcxPositivePart {
    pub q: f64,
}

impl IcxPositivePart {
    pub fn new(q: f64) -> Result<Self> {
        if q == 1.0 || q == 2.0 || q == f64::INFINITY {
            Ok(IcxPositivePart { q })
        } else {
            Err(Error::Unsupported(format!("q = {q}; supported exponents are 1, 2 and inf")))
        }
    }

    fn positive_part(&self, x: &Point, rho: &DiscreteMeasure) -> Vec<f64> {
        x.sub(&mean(rho)).0.into_iter().map(|a| a.max(0.0)).collect()
    }

    fn norm(&self, u: &[f64]) -> f64 {
        if self.q == 1.0 {
            NormKind::L1.norm(u)
        } else if self.q == 2.0 {
            NormKind::L2.norm(u)
        } else {
            NormKind::Linf.norm(u)
        }
    }
}

impl CostPlugin for IcxPositivePart {
    fn name(&self) -> String {
        format!("icx_pos(q={})", self.q)
    }

    fn metadata(&self) -> CostMetadata {
        CostMetadata {
            icx_decreasing: true,
            cx_decreasing: true,
            lower_bound: Some(AffineBound { a: 0.0, b: BoundFn::Zero }),
            ..Default::default()
        }
    }

    fn evaluate(&self, x: &Point, rho: &DiscreteMeasure) -> Result<f64> {
        check_dim(x, rho)?;
        Ok(self.norm(&self.positive_part(x, rho)))
    }

    fn linearize(&self, x: &Point, rho: &DiscreteMeasure, grid: &[Point]) -> Result<Option<Vec<f64>>> {
        check_dim(x, rho)?;
        let u = self.positive_part(x, rho);
        let n = self.norm(&u);
        let w: Vec<f64> = if n == 0.0 {
            vec![0.0; u.len()]
        } else if self.q == 1.0 {
            u.iter().map(|a| if *a > 0.0 { 1.0 } else { 0.0 }).collect()
        } else if self.q == 2.0 {
            u.iter().map(|a| a / n).collect()
        } else {
            let k = (0..u.len()).max_by(|&a, &b| u[a].total_cmp(&u[b])).unwrap();
            let mut g = vec![0.0; u.len()];
            g[k] = 1.0;
            g
        };
        Ok(Some(grid.iter().map(|y| -Point(w.clone()).dot(y)).collect()))
    }

    fn model(&self, x: &Point, row: &[usize], mass: f64, ctx: &mut ModelCtx) -> Result<bool> {
        let d = x.dim();
        if self.q == 2.0 && d > 1 {
            return Ok(false);
        }
        let v = residuals(x, row, mass, ctx.grid);
        let per_coord_cost = if self.q == f64::INFINITY && d > 1 { 0.0 } else { 1.0 };
        let mut s_vars = Vec::with_capacity(d);
        for (expr, off) in &v {
            // s ≥ v, s ≥ 0
            let s = ctx.lp().add_nonneg(per_coord_cost);
            let mut r = vec![(s, 1.0)];
            r.extend(expr.iter().map(|&(j, a)| (j, -a)));
            ctx.lp().add_row(r, RowSense::Ge, *off);
            s_vars.push(s);
        }
        if per_coord_cost == 0.0 {
            let t = ctx.lp().add_nonneg(1.0);
            for s in s_vars {
                ctx.lp().add_row(vec![(t, 1.0), (s, -1.0)], RowSense::Ge, 0.0);
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_values() {
        let rho = DiscreteMeasure::on_line(&[-1.0, 1.0], &[0.5, 0.5]).unwrap();
        assert_eq!(Barycentric::square().evaluate(&Point::scalar(0.0), &rho).unwrap(), 0.0);
        let c = IcxPositivePart::new(1.0).unwrap();
        assert_eq!(c.evaluate(&Point::scalar(1.0), &DiscreteMeasure::dirac(0.0.into())).unwrap(), 1.0);
        assert!(IcxPositivePart::new(3.0).is_err());
    }
}
