//! Conditional-gradient minimization over a polytope given as an LP.

use serde::{Deserialize, Serialize};

use super::lp::{solve_lp, LinearProgram, LpStatus, ObjectiveSense};
use crate::error::{Error, Result};

/// A convex objective over the feasible set of `polytope` (its own objective
/// is ignored).
pub trait ConvexProgramOracle {
    fn polytope(&self) -> &LinearProgram;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Starting point; defaults to the LP vertex minimizing the gradient at 0.
    fn initial_point(&self) -> Option<Vec<f64>> {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrankWolfeOptions {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for FrankWolfeOptions {
    fn default() -> Self {
        FrankWolfeOptions { tol: super::Tolerances::default().gap, max_iterations: 2000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrankWolfeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub dual_gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every iteration; nonincreasing.
    pub history: Vec<f64>,
}

fn linear_minimizer(poly: &LinearProgram, grad: &[f64]) -> Result<Vec<f64>> {
    let mut lp = poly.clone();
    lp.sense = ObjectiveSense::Minimize;
    lp.objective = grad.to_vec();
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.x),
        LpStatus::Infeasible => Err(Error::InvalidProgram("empty feasible polytope".into())),
        LpStatus::Unbounded => Err(Error::InvalidProgram("linear minimization over the polytope is unbounded".into())),
    }
}

fn line_search(oracle: &dyn ConvexProgramOracle, x: &[f64], d: &[f64], fx: f64) -> (f64, f64) {
    let at = |g: f64| {
        let y: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + g * b).collect();
        oracle.value(&y)
    };
    // Golden section on [0, 1]; the endpoint 1 and the current point are
    // always candidates so the accepted step never increases the value.
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - phi * (b - a);
    let mut e = a + phi * (b - a);
    let (mut fc, mut fe) = (at(c), at(e));
    for _ in 0..80 {
        if fc <= fe {
            b = e;
            e = c;
            fe = fc;
            c = b - phi * (b - a);
            fc = at(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + phi * (b - a);
            fe = at(e);
        }
        if b - a < 1e-12 {
            break;
        }
    }
    let mut best = (0.0, fx);
    for g in [0.5 * (a + b), 1.0] {
        let v = at(g);
        if v < best.1 {
            best = (g, v);
        }
    }
    best
}

pub fn frank_wolfe(oracle: &dyn ConvexProgramOracle, opts: &FrankWolfeOptions) -> Result<FrankWolfeResult> {
    let poly = oracle.polytope();
    let n = poly.num_vars();
    let mut x = match oracle.initial_point() {
        Some(x) => x,
        None => linear_minimizer(poly, &oracle.gradient(&vec![0.0; n]))?,
    };
    let mut fx = oracle.value(&x);
    let mut history = vec![fx];
    let mut gap = f64::INFINITY;
    for it in 0..opts.max_iterations {
        let g = oracle.gradient(&x);
        let s = linear_minimizer(poly, &g)?;
        gap = g.iter().zip(x.iter().zip(&s)).map(|(gi, (xi, si))| gi * (xi - si)).sum();
        if gap <= opts.tol {
            return Ok(FrankWolfeResult { x, value: fx, dual_gap: gap.max(0.0), iterations: it, converged: true, history });
        }
        let d: Vec<f64> = s.iter().zip(&x).map(|(a, b)| a - b).collect();
        let (step, v) = line_search(oracle, &x, &d, fx);
        if step == 0.0 {
            // No improving step along the vertex direction: report the stall.
            return Ok(FrankWolfeResult { x, value: fx, dual_gap: gap, iterations: it + 1, converged: false, history });
        }
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += step * di;
        }
        fx = v;
        history.push(fx);
    }
    Ok(FrankWolfeResult { x, value: fx, dual_gap: gap, iterations: opts.max_iterations, converged: false, history })
}

#[cfg(test)]
mod tests {
    use super::super::lp::RowSense;
    use super::*;

    /// Couplings of two 2-atom measures with the barycentric cost
    /// Σ_i μ_i |x_i − Σ_j P_ij y_j / μ_i|².
    struct Bary {
        lp: LinearProgram,
        mu: Vec<f64>,
        xs: Vec<f64>,
        ys: Vec<f64>,
    }

    impl Bary {
        fn new(xs: Vec<f64>, mu: Vec<f64>, ys: Vec<f64>, nu: Vec<f64>) -> Self {
            let (m, k) = (xs.len(), ys.len());
            let mut lp = LinearProgram::minimize();
            for _ in 0..m * k {
                lp.add_nonneg(0.0);
            }
            for i in 0..m {
                lp.add_row((0..k).map(|j| (i * k + j, 1.0)).collect(), RowSense::Eq, mu[i]);
            }
            for j in 0..k {
                lp.add_row((0..m).map(|i| (i * k + j, 1.0)).collect(), RowSense::Eq, nu[j]);
            }
            Bary { lp, mu, xs, ys }
        }

        fn residual(&self, x: &[f64], i: usize) -> f64 {
            let k = self.ys.len();
            self.mu[i] * self.xs[i] - (0..k).map(|j| x[i * k + j] * self.ys[j]).sum::<f64>()
        }
    }

    impl ConvexProgramOracle for Bary {
        fn polytope(&self) -> &LinearProgram {
            &self.lp
        }
        fn value(&self, x: &[f64]) -> f64 {
            (0..self.xs.len()).map(|i| self.residual(x, i).powi(2) / self.mu[i]).sum()
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            let k = self.ys.len();
            let mut g = vec![0.0; x.len()];
            for i in 0..self.xs.len() {
                let r = self.residual(x, i);
                for j in 0..k {
                    g[i * k + j] = -2.0 * r * self.ys[j] / self.mu[i];
                }
            }
            g
        }
    }

    struct Linear(LinearProgram, Vec<f64>);

    impl ConvexProgramOracle for Linear {
        fn polytope(&self) -> &LinearProgram {
            &self.0
        }
        fn value(&self, x: &[f64]) -> f64 {
            self.1.iter().zip(x).map(|(a, b)| a * b).sum()
        }
        fn gradient(&self, _: &[f64]) -> Vec<f64> {
            self.1.clone()
        }
    }

    #[test]
    fn linear_objective_single_step() {
        let b = Bary::new(vec![0.0, 1.0], vec![0.5, 0.5], vec![0.0, 1.0], vec![0.5, 0.5]);
        let o = Linear(b.lp.clone(), vec![0.0, 1.0, 1.0, 0.0]);
        let r = frank_wolfe(&o, &FrankWolfeOptions::default()).unwrap();
        assert!(r.converged && r.iterations <= 1);
        assert!(r.value.abs() < 1e-12);
    }

    #[test]
    fn dirac_source_has_single_coupling() {
        let b = Bary::new(vec![0.0], vec![1.0], vec![-1.0, 1.0], vec![0.5, 0.5]);
        let r = frank_wolfe(&b, &FrankWolfeOptions::default()).unwrap();
        assert!(r.value.abs() < 1e-12);
    }

    #[test]
    fn identity_coupling_is_optimal() {
        let b = Bary::new(vec![0.0, 1.0], vec![0.5, 0.5], vec![0.0, 1.0], vec![0.5, 0.5]);
        let r = frank_wolfe(&b, &FrankWolfeOptions { tol: 1e-10, max_iterations: 5000 }).unwrap();
        // Vertex enumeration: the 1-parameter polytope P = [[t, ½−t], [½−t, t]]
        // gives cost 4(½ − t)² ... minimized at t = ½.
        let oracle = (0..=1000)
            .map(|s| {
                let t = 0.5 * s as f64 / 1000.0;
                b.value(&[t, 0.5 - t, 0.5 - t, t])
            })
            .fold(f64::INFINITY, f64::min);
        assert!(oracle.abs() < 1e-12);
        assert!(r.value < 1e-6, "{}", r.value);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }
}
