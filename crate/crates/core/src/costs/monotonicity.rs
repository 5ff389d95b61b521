use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CostPlugin;
use crate::error::Result;
use crate::measures::{mean, DiscreteMeasure, Point};
use crate::orders::{check_cone_order, Order};

const VIOLATION_TOL: f64 = 1e-8;

/// A sampled pair with `C(x, ρ) < C(x, ρ̃) − 1e-8` although `ρ ⪯ ρ̃`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityViolation {
    pub x: Point,
    pub rho: DiscreteMeasure,
    pub rho_tilde: DiscreteMeasure,
    pub cost_rho: f64,
    pub cost_rho_tilde: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub samples: usize,
    /// Pairs actually compared (cone candidates failing the order are skipped).
    pub compared: usize,
    pub violations: usize,
    /// Largest `C(x, ρ̃) − C(x, ρ)` over finite comparisons.
    pub worst_increase: f64,
    pub first_violation: Option<MonotonicityViolation>,
}

fn random_measure(rng: &mut ChaCha8Rng, dim: usize) -> DiscreteMeasure {
    let n = rng.gen_range(1..=4);
    let pts = (0..n).map(|_| Point((0..dim).map(|_| rng.gen_range(-8i32..=8) as f64 / 4.0).collect())).collect();
    let w = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    DiscreteMeasure::normalized(pts, w).expect("positive weights")
}

fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> Point {
    loop {
        let u: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 0.1 {
            return Point(u.into_iter().map(|a| a / n).collect());
        }
    }
}

/// Splits one atom `y` into `w δ_{y+(1−w)hu} + (1−w) δ_{y−whu}` (a
/// mean-preserving spread) and, if `shift`, moves everything up by a
/// nonnegative vector.
fn dilate(rng: &mut ChaCha8Rng, rho: &DiscreteMeasure, shift: bool) -> DiscreteMeasure {
    let d = rho.dim();
    let i = rng.gen_range(0..rho.len());
    let w = rng.gen_range(0.2..0.8);
    let h = rng.gen_range(0.25..2.0);
    let u = random_direction(rng, d);
    let up: Vec<f64> = if shift { (0..d).map(|_| rng.gen_range(0.0..0.75)).collect() } else { vec![0.0; d] };
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    let moved = |p: &Point| Point(p.0.iter().zip(&up).map(|(a, b)| a + b).collect());
    for (k, (y, m)) in rho.iter().enumerate() {
        if k == i {
            let a = Point(y.0.iter().zip(&u.0).map(|(c, e)| c + (1.0 - w) * h * e).collect());
            let b = Point(y.0.iter().zip(&u.0).map(|(c, e)| c - w * h * e).collect());
            pts.push(moved(&a));
            wts.push(m * w);
            pts.push(moved(&b));
            wts.push(m * (1.0 - w));
        } else {
            pts.push(moved(y));
            wts.push(m);
        }
    }
    DiscreteMeasure::new(pts, wts).expect("dilation keeps mass")
}

/// Samples pairs `ρ ⪯ ρ̃` and checks `C(x, ρ) ≥ C(x, ρ̃) − 1e-8`. Half of the
/// sample points are placed at `mean ρ` so that mean-constrained costs are
/// probed where they are finite.
pub fn check_monotonicity(
    plugin: &dyn CostPlugin,
    order: &Order,
    dim: usize,
    n_samples: usize,
    seed: u64,
) -> Result<MonotonicityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = MonotonicityReport {
        samples: n_samples,
        compared: 0,
        violations: 0,
        worst_increase: f64::NEG_INFINITY,
        first_violation: None,
    };
    for s in 0..n_samples {
        let rho = random_measure(&mut rng, dim);
        let rho_tilde = match order {
            Order::Convex => dilate(&mut rng, &rho, false),
            Order::IncreasingConvex => dilate(&mut rng, &rho, true),
            Order::Cone(cone) => {
                let shift = rng.gen_bool(0.5);
                let cand = dilate(&mut rng, &rho, shift);
                if !check_cone_order(&rho, &cand, cone)?.verdict {
                    continue;
                }
                cand
            }
        };
        let x = if s % 2 == 0 { mean(&rho) } else { Point((0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect()) };
        let mut grid: Vec<Point> = rho.points().to_vec();
        for p in rho_tilde.points().iter().chain(std::iter::once(&x)) {
            if !grid.contains(p) {
                grid.push(p.clone());
            }
        }
        let c0 = plugin.evaluate_in(&x, &rho, &grid)?;
        let c1 = plugin.evaluate_in(&x, &rho_tilde, &grid)?;
        report.compared += 1;
        if c0.is_finite() && c1.is_finite() {
            report.worst_increase = report.worst_increase.max(c1 - c0);
        }
        if c0 < c1 - VIOLATION_TOL {
            report.violations += 1;
            if report.first_violation.is_none() {
                report.first_violation = Some(MonotonicityViolation { x, rho, rho_tilde, cost_rho: c0, cost_rho_tilde: c1 });
            }
        }
    }
    Ok(report)
}
