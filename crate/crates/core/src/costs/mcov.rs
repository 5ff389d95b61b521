use nalgebra::{DMatrix, SymmetricEigen};

use super::{check_dim, residuals, AffineBound, BoundFn, CostMetadata, CostPlugin, ModelCtx};
use crate::error::{Error, Result};
use crate::measures::{mean, DiscreteMeasure, Point};
use crate::optim::{solve_lp, LinearProgram, LpStatus, RowSense};

/// Tensor Gauss–Hermite quadrature of the standard Gaussian on R^dim with
/// `nodes` points per axis (Golub–Welsch), weights renormalized.
pub fn gauss_hermite(nodes: usize, dim: usize) -> Result<DiscreteMeasure> {
    if nodes == 0 || dim == 0 {
        return Err(Error::Domain("quadrature needs at least one node and dimension".into()));
    }
    let total = nodes
        .checked_pow(dim as u32)
        .filter(|&t| t <= 4096)
        .ok_or_else(|| Error::SizeGuard(format!("{nodes}^{dim} quadrature nodes")))?;
    // Jacobi matrix of the probabilists' Hermite polynomials.
    let mut j = DMatrix::<f64>::zeros(nodes, nodes);
    for k in 1..nodes {
        let b = (k as f64).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut axis: Vec<(f64, f64)> = (0..nodes).map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2))).collect();
    axis.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Symmetrize so the discrete law stays centred exactly.
    for i in 0..nodes / 2 {
        let k = nodes - 1 - i;
        let z = 0.5 * (axis[k].0 - axis[i].0);
        let w = 0.5 * (axis[k].1 + axis[i].1);
        axis[i] = (-z, w);
        axis[k] = (z, w);
    }
    if nodes % 2 == 1 {
        axis[nodes / 2].0 = 0.0;
    }
    let mut points = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut p = Vec::with_capacity(dim);
        let mut w = 1.0;
        for _ in 0..dim {
            let (z, v) = axis[idx % nodes];
            p.push(z);
            w *= v;
            idx /= nodes;
        }
        points.push(Point(p));
        weights.push(w);
    }
    DiscreteMeasure::normalized(points, weights)
}

/// Maximal covariance `max_{q ∈ Π(ρ, γ)} ∫ y·z dq` and the optimal `γ`-side
/// potential `w` (with `u(y) + w(z) ≥ y·z`).
fn mcov_with_potential(rho: &DiscreteMeasure, gamma: &DiscreteMeasure) -> Result<(f64, Vec<f64>)> {
    if rho.dim() != gamma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: gamma.dim() });
    }
    let (n, m) = (rho.len(), gamma.len());
    let mut lp = LinearProgram::maximize();
    for y in rho.points() {
        for z in gamma.points() {
            lp.add_nonneg(y.dot(z));
        }
    }
    for (i, &w) in rho.weights().iter().enumerate() {
        lp.add_row((0..m).map(|l| (i * m + l, 1.0)).collect(), RowSense::Eq, w);
    }
    let first_col = lp.num_rows();
    for (l, &w) in gamma.weights().iter().enumerate() {
        lp.add_row((0..n).map(|i| (i * m + l, 1.0)).collect(), RowSense::Eq, w);
    }
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Numerical("covariance transport program not optimal".into()));
    }
    Ok((sol.objective, sol.duals[first_col..].to_vec()))
}

/// `MCov(ρ, γ)` as an optimal-transport value.
pub fn mcov(rho: &DiscreteMeasure, gamma: &DiscreteMeasure) -> Result<f64> {
    Ok(mcov_with_potential(rho, gamma)?.0)
}

/// `C(x, ρ) = −MCov(ρ, γ̂)` if `mean ρ = x` (within `tol`), else `+∞`.
#[derive(Clone, Debug, PartialEq)]
pub struct NegativeMcov {
    pub gamma: DiscreteMeasure,
    pub tol: f64,
    /// Quadrature nodes per axis, when `gamma` is a Gauss–Hermite rule.
    pub nodes: Option<usize>,
}

impl NegativeMcov {
    pub fn new(gamma: DiscreteMeasure, tol: f64) -> Self {
        NegativeMcov { gamma, tol, nodes: None }
    }

    /// `γ̂` = Gauss–Hermite rule with `nodes` points per axis.
    pub fn standard(dim: usize, nodes: usize, tol: f64) -> Result<Self> {
        Ok(NegativeMcov { gamma: gauss_hermite(nodes, dim)?, tol, nodes: Some(nodes) })
    }

    fn mean_ok(&self, x: &Point, rho: &DiscreteMeasure) -> bool {
        x.dist(&mean(rho)) <= self.tol
    }
}

impl CostPlugin for NegativeMcov {
    fn name(&self) -> String {
        match self.nodes {
            Some(n) => format!("neg_mcov(gauss_hermite={n})"),
            None => format!("neg_mcov(atoms={})", self.gamma.len()),
        }
    }

    fn metadata(&self) -> CostMetadata {
        // MCov(ρ, γ) ≤ ½ρ(|y|²) + ½γ(|z|²).
        let a = 0.5 * self.gamma.second_moment();
        CostMetadata {
            cx_decreasing: true,
            finite_valued: false,
            lower_bound: Some(AffineBound { a, b: BoundFn::SquaredNorm { scale: 0.5 } }),
            ..Default::default()
        }
    }

    fn evaluate(&self, x: &Point, rho: &DiscreteMeasure) -> Result<f64> {
        check_dim(x, rho)?;
        if !self.mean_ok(x, rho) {
            return Ok(f64::INFINITY);
        }
        Ok(-mcov(rho, &self.gamma)?)
    }

    fn linearize(&self, x: &Point, rho: &DiscreteMeasure, grid: &[Point]) -> Result<Option<Vec<f64>>> {
        check_dim(x, rho)?;
        if !self.mean_ok(x, rho) {
            return Ok(None);
        }
        // ū(y) = max_l y·z_l − w_l is a supergradient of MCov(·, γ) at ρ.
        let (_, w) = mcov_with_potential(rho, &self.gamma)?;
        Ok(Some(
            grid.iter()
                .map(|y| {
                    let u = self.gamma.points().iter().zip(&w).map(|(z, wl)| y.dot(z) - wl).fold(f64::NEG_INFINITY, f64::max);
                    -u
                })
                .collect(),
        ))
    }

    fn model(&self, x: &Point, row: &[usize], mass: f64, ctx: &mut ModelCtx) -> Result<bool> {
        let gz = self.gamma.points().to_vec();
        let gw = self.gamma.weights().to_vec();
        let nl = gz.len();
        let grid = ctx.grid;
        let lp = ctx.lp();
        let mut q = Vec::with_capacity(row.len());
        for y in grid.iter().take(row.len()) {
            let qs: Vec<usize> = gz.iter().map(|z| lp.add_nonneg(-y.dot(z))).collect();
            q.push(qs);
        }
        for (j, &r) in row.iter().enumerate() {
            let mut t: Vec<(usize, f64)> = q[j].iter().map(|&v| (v, 1.0)).collect();
            t.push((r, -1.0));
            lp.add_row(t, RowSense::Eq, 0.0);
        }
        for l in 0..nl {
            lp.add_row(q.iter().map(|qs| (qs[l], 1.0)).collect(), RowSense::Eq, mass * gw[l]);
        }
        for (expr, off) in residuals(x, row, mass, grid) {
            let r: Vec<(usize, f64)> = expr.iter().map(|&(j, a)| (j, -a)).collect();
            ctx.lp().add_row(r, RowSense::Eq, off);
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::evaluate_by_model;

    #[test]
    fn comonotone_fixture() {
        for a in [0.5, 1.0, 2.5] {
            let gamma = DiscreteMeasure::on_line(&[-a, a], &[0.5, 0.5]).unwrap();
            let rho = DiscreteMeasure::on_line(&[-1.0, 1.0], &[0.5, 0.5]).unwrap();
            assert_eq!(mcov(&rho, &gamma).unwrap(), a);
            let c = NegativeMcov::new(gamma, 1e-9);
            assert_eq!(c.evaluate(&Point::scalar(0.0), &rho).unwrap(), -a);
            assert!(c.evaluate(&Point::scalar(0.5), &rho).unwrap().is_infinite());
        }
    }

    #[test]
    fn gauss_hermite_moments() {
        for n in [8, 16, 32] {
            let g = gauss_hermite(n, 1).unwrap();
            assert!(mean(&g).0[0].abs() < 1e-12);
            assert!((g.second_moment() - 1.0).abs() < 1e-9);
            assert!((g.integrate(|z| z.0[0].powi(4)) - 3.0).abs() < 1e-8);
        }
        let g2 = gauss_hermite(8, 2).unwrap();
        assert_eq!(g2.len(), 64);
        assert!((g2.second_moment() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn model_matches_evaluation() {
        let c = NegativeMcov::standard(1, 8, 1e-9).unwrap();
        let grid: Vec<Point> = [-2.0, -1.0, 0.0, 1.5].iter().map(|&v| Point::scalar(v)).collect();
        let rho = DiscreteMeasure::on_line(&[-1.0, 0.0, 1.5], &[0.3, 0.5, 0.2]).unwrap();
        let x = mean(&rho);
        let direct = c.evaluate(&x, &rho).unwrap();
        let (v, _) = evaluate_by_model(&c, &x, &rho, &grid).unwrap().unwrap();
        assert!((direct - v).abs() < 1e-9, "{direct} vs {v}");
        let g = c.linearize(&x, &rho, &grid).unwrap().unwrap();
        let sigma = DiscreteMeasure::on_line(&[-2.0, 0.0, 1.5], &[0.2, 0.4, 0.4]).unwrap();
        let xs = mean(&sigma);
        // Supergradient inequality of MCov at ρ (mean term aside).
        let lhs = -mcov(&sigma, &c.gamma).unwrap();
        let rhs = direct + sigma.integrate_table(&grid, &g).unwrap() - rho.integrate_table(&grid, &g).unwrap();
        assert!(lhs >= rhs - 1e-9);
        assert!(c.evaluate(&xs, &sigma).unwrap().is_finite());
    }
}
