//! Kelley's method for maximizing a concave function over a box.

use serde::{Deserialize, Serialize};

use super::lp::{solve_lp, LinearConstraint, LinearProgram, LpStatus, RowSense};
use crate::error::{Error, Result};

/// Value and supergradient of the concave objective at a point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub value: f64,
    pub supergradient: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CuttingPlaneOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub initial: Option<Vec<f64>>,
    /// Further linear constraints on the parameters (indices `0..n`).
    #[serde(default)]
    pub extra_rows: Vec<LinearConstraint>,
    /// An upper bound on the maximum known in advance (e.g. by weak
    /// duality); the search stops once the incumbent is within `tol` of it.
    #[serde(default)]
    pub known_upper: Option<f64>,
    /// Initial half-width of an ∞-norm trust region around the incumbent.
    /// The region doubles after an improving step and halves otherwise; the
    /// certified bound always comes from the unrestricted cut model.
    #[serde(default)]
    pub trust_radius: Option<f64>,
}

impl Default for CuttingPlaneOptions {
    fn default() -> Self {
        CuttingPlaneOptions {
            tol: super::Tolerances::default().gap,
            max_iterations: 500,
            initial: None,
            extra_rows: Vec::new(),
            known_upper: None,
            trust_radius: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CuttingPlaneResult {
    pub argmax: Vec<f64>,
    pub value: f64,
    /// Certified bound from the cut model: the true max lies in [value, upper_bound].
    pub upper_bound: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn cutting_plane_max<F>(mut eval: F, lower: &[f64], upper: &[f64], opts: &CuttingPlaneOptions) -> Result<CuttingPlaneResult>
where
    F: FnMut(&[f64]) -> Result<Cut>,
{
    let n = lower.len();
    if upper.len() != n || lower.iter().zip(upper).any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite()) {
        return Err(Error::InvalidProgram("cutting-plane box must be finite and nonempty".into()));
    }
    let mut lp = LinearProgram::maximize();
    let vars: Vec<usize> = (0..n).map(|j| lp.add_var(0.0, lower[j], upper[j])).collect();
    let z = lp.add_free(1.0);
    for row in &opts.extra_rows {
        if row.terms.iter().any(|&(j, _)| j >= n) {
            return Err(Error::InvalidProgram("extra row refers to an unknown parameter".into()));
        }
        lp.add_row(row.terms.clone(), row.sense, row.rhs);
    }
    let feasible = |t: &[f64]| {
        opts.extra_rows.iter().all(|r| {
            let a: f64 = r.terms.iter().map(|&(j, c)| c * t[j]).sum();
            let tol = 1e-9 * (1.0 + r.rhs.abs());
            match r.sense {
                RowSense::Le => a <= r.rhs + tol,
                RowSense::Ge => a >= r.rhs - tol,
                RowSense::Eq => (a - r.rhs).abs() <= tol,
            }
        })
    };
    let mut t = opts.initial.clone().unwrap_or_else(|| lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect());
    let mut best_t = t.clone();
    let mut best = f64::NEG_INFINITY;
    let mut ub = opts.known_upper.unwrap_or(f64::INFINITY);
    let mut radius = opts.trust_radius;
    let close = |best: f64, ub: f64| best.is_finite() && ub - best <= opts.tol * (1.0 + best.abs());
    for it in 0..opts.max_iterations {
        let cut = eval(&t)?;
        if cut.supergradient.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: cut.supergradient.len() });
        }
        let improved = cut.value > best && feasible(&t);
        if improved {
            best = cut.value;
            best_t = t.clone();
        }
        if let Some(r) = radius.as_mut() {
            *r = if improved { *r * 2.0 } else { (*r * 0.5).max(1e-12) };
        }
        if close(best, ub) {
            return Ok(CuttingPlaneResult { argmax: best_t, value: best, upper_bound: ub, iterations: it + 1, converged: true });
        }
        // z − gᵀt ≤ f(t_k) − gᵀt_k
        let mut row = vec![(z, 1.0)];
        let mut rhs = cut.value;
        for j in 0..n {
            let g = cut.supergradient[j];
            if g != 0.0 {
                row.push((vars[j], -g));
                rhs -= g * t[j];
            }
        }
        lp.add_row(row, RowSense::Le, rhs);
        let sol = solve_lp(&lp)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Numerical("cut model LP not solvable".into()));
        }
        ub = ub.min(sol.objective);
        if close(best, ub) {
            return Ok(CuttingPlaneResult { argmax: best_t, value: best, upper_bound: ub, iterations: it + 1, converged: true });
        }
        t = match radius {
            Some(r) if best.is_finite() => {
                let mut local = lp.clone();
                for j in 0..n {
                    local.lower[vars[j]] = (best_t[j] - r).max(lower[j]);
                    local.upper[vars[j]] = (best_t[j] + r).min(upper[j]);
                }
                let s = solve_lp(&local)?;
                let src = if s.status == LpStatus::Optimal { &s } else { &sol };
                vars.iter().map(|&v| src.x[v]).collect()
            }
            _ => vars.iter().map(|&v| sol.x[v]).collect(),
        };
    }
    Ok(CuttingPlaneResult { argmax: best_t, value: best, upper_bound: ub, iterations: opts.max_iterations, converged: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_abs() {
        let r = cutting_plane_max(
            |t| Ok(Cut { value: -t[0].abs(), supergradient: vec![if t[0] > 0.0 { -1.0 } else { 1.0 }] }),
            &[-1.0],
            &[1.0],
            &CuttingPlaneOptions { initial: Some(vec![0.7]), ..Default::default() },
        )
        .unwrap();
        assert!(r.converged);
        assert!(r.value.abs() < 1e-6 && r.argmax[0].abs() < 1e-6);
    }

    #[test]
    fn tent() {
        let r = cutting_plane_max(
            |t| {
                let v = t[0].min(1.0 - t[0]);
                Ok(Cut { value: v, supergradient: vec![if t[0] < 0.5 { 1.0 } else { -1.0 }] })
            },
            &[0.0],
            &[1.0],
            &CuttingPlaneOptions { initial: Some(vec![0.1]), ..Default::default() },
        )
        .unwrap();
        assert!((r.value - 0.5).abs() < 1e-6);
    }

    #[test]
    fn extra_rows_constrain_the_search() {
        let r = cutting_plane_max(
            |t| Ok(Cut { value: t[0] + t[1], supergradient: vec![1.0, 1.0] }),
            &[0.0, 0.0],
            &[1.0, 1.0],
            &CuttingPlaneOptions {
                initial: Some(vec![1.0, 1.0]),
                extra_rows: vec![LinearConstraint { terms: vec![(0, 1.0), (1, 1.0)], sense: RowSense::Le, rhs: 1.0 }],
                ..Default::default()
            },
        )
        .unwrap();
        assert!((r.value - 1.0).abs() < 1e-9 && (r.upper_bound - 1.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn two_atom_kantorovich_rubinstein() {
        // μ = δ_0, ν = δ_1, cost |x − y|: max ψ(0) − ψ(1) over 1-Lipschitz
        // ψ = (a, b), i.e. a − b with |a − b| ≤ 1, written with the constraint
        // as a penalty-free parametrization b = a − s, s ∈ [−1, 1].
        let mut lp = LinearProgram::maximize();
        let a = lp.add_free(1.0);
        let b = lp.add_free(-1.0);
        lp.add_row(vec![(a, 1.0), (b, -1.0)], RowSense::Le, 1.0);
        lp.add_row(vec![(a, 1.0), (b, -1.0)], RowSense::Ge, -1.0);
        lp.add_row(vec![(b, 1.0)], RowSense::Eq, 0.0);
        let direct = solve_lp(&lp).unwrap().objective;
        let r = cutting_plane_max(|s| Ok(Cut { value: s[0], supergradient: vec![1.0] }), &[-1.0], &[1.0], &Default::default())
            .unwrap();
        assert!((r.value - direct).abs() < 1e-9);
        assert!((direct - 1.0).abs() < 1e-12);
    }
}
