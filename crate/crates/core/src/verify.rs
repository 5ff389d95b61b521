//! Seeded random-instance batteries that cross-check the solvers against
//! independent oracles.
//!
//! Every case draws from its own generator, seeded from the master seed, the
//! check name and the case index, so reports are reproducible case by case
//! and independent of how many worker threads run them.
//!
//! Instances: atom counts uniform in `1..=max`, base coordinates on the
//! lattice `Z/8 ∩ [−3, 3]`, weights Dirichlet-uniform (normalized standard
//! exponentials). Dominating laws are random mean-preserving splits, with an
//! upward shift for the increasing convex order.

use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costs::*;
use crate::dual::{attainment_witness, duality_gap, solve_dual, verify_hull_stability, DualClass, DualStatus};
use crate::error::{Error, Result};
use crate::hulls::{brute_force_hull, conv_r, convex_hull, iconvex_hull, ConvexFn, GridFunction};
use crate::measures::{mean, DiscreteMeasure, Point};
use crate::optim::{solve_lp, LinearProgram, LpStatus, RowSense};
use crate::orders::{check_order, kernel_residual, Order};
use crate::primal::solve_primal;
use crate::projection::project_order;

/// Version tag carried by every report.
pub const SCHEMA: &str = "wotlab/1";

/// Functions tried by the sampled order search.
pub const ORDER_SAMPLES: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Duality,
    Hulls,
    Orders,
    Projection,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "duality" => Suite::Duality,
            "hulls" => Suite::Hulls,
            "orders" => Suite::Orders,
            "projection" => Suite::Projection,
            "all" => Suite::All,
            other => return Err(Error::Usage(format!("unknown suite {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseFailure {
    pub index: usize,
    /// Seed of the case's own generator.
    pub seed: u64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub cases: usize,
    pub passed: usize,
    pub tolerance: f64,
    /// Largest error metric over the cases.
    #[serde(with = "crate::hulls::ext_real")]
    pub worst: f64,
    pub failures: Vec<CaseFailure>,
}

impl CheckSummary {
    pub fn ok(&self) -> bool {
        self.passed == self.cases
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema: String,
    pub suite: Suite,
    /// Per-check case count override, if any.
    pub n: Option<usize>,
    pub seed: u64,
    pub checks: Vec<CheckSummary>,
    pub total: usize,
    pub passed: usize,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.total == self.passed
    }
}

/// Outcome of one case: pass flag, error metric and a short description.
struct Outcome {
    passed: bool,
    error: f64,
    detail: String,
}

impl Outcome {
    fn within(error: f64, tol: f64, detail: String) -> Self {
        let error = if error.is_nan() { f64::INFINITY } else { error };
        Outcome { passed: error <= tol, error, detail }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of case `index` of check `name` under the master seed.
pub fn case_seed(master: u64, name: &str, index: usize) -> u64 {
    // FNV-1a keeps the name hash stable across platforms and releases.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(splitmix64(master ^ h).wrapping_add(index as u64))
}

fn run_cases<F>(name: &str, tolerance: f64, count: usize, master: u64, case: F) -> CheckSummary
where
    F: Fn(&mut ChaCha8Rng) -> Result<Outcome> + Sync,
{
    run_indexed(name, tolerance, count, |i| case_seed(master, name, i), |_, rng| case(rng))
}

/// Like [`run_cases`] with an explicit seed per case index, for checks that
/// replay the instances of another check.
fn run_indexed<S, F>(name: &str, tolerance: f64, count: usize, seed_of: S, case: F) -> CheckSummary
where
    S: Fn(usize) -> u64 + Sync,
    F: Fn(usize, &mut ChaCha8Rng) -> Result<Outcome> + Sync,
{
    let outcomes: Vec<(u64, Outcome)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let seed = seed_of(i);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out =
                case(i, &mut rng).unwrap_or_else(|e| Outcome { passed: false, error: f64::INFINITY, detail: e.to_string() });
            (seed, out)
        })
        .collect();
    let mut summary =
        CheckSummary { name: name.to_string(), cases: count, passed: 0, tolerance, worst: 0.0, failures: Vec::new() };
    for (index, (seed, o)) in outcomes.into_iter().enumerate() {
        summary.worst = summary.worst.max(o.error);
        if o.passed {
            summary.passed += 1;
        } else {
            summary.failures.push(CaseFailure { index, seed, detail: o.detail });
        }
    }
    summary
}

// ---------------------------------------------------------------- generators

fn lattice(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(-24i32..=24) as f64 / 8.0
}

fn dirichlet(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln() + 1e-3).collect()
}

/// A random law with at most `max_atoms` atoms on the coordinate lattice.
pub fn random_measure(rng: &mut ChaCha8Rng, dim: usize, max_atoms: usize) -> DiscreteMeasure {
    let k = rng.gen_range(1..=max_atoms.max(1));
    let pts: Vec<Point> = (0..k).map(|_| Point((0..dim).map(|_| lattice(rng)).collect())).collect();
    let w = dirichlet(rng, k);
    DiscreteMeasure::normalized(pts, w).expect("positive weights")
}

/// Splits atoms of `mu` into mean-preserving pairs inside `[−3, 3]^d` until
/// `max_atoms` atoms are used; the result dominates `mu` in convex order.
pub fn random_dilation(rng: &mut ChaCha8Rng, mu: &DiscreteMeasure, max_atoms: usize) -> DiscreteMeasure {
    let mut budget = max_atoms.saturating_sub(mu.len());
    let mut pts = Vec::new();
    let mut w = Vec::new();
    for (x, m) in mu.iter() {
        if budget == 0 || rng.gen_bool(0.2) {
            pts.push(x.clone());
            w.push(m);
            continue;
        }
        budget -= 1;
        let p: Vec<f64> = (0..x.dim()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let v: Vec<f64> = p.iter().zip(&x.0).map(|(a, b)| a - b).collect();
        let mut t_max: f64 = 1.0;
        for (c, &vc) in v.iter().enumerate() {
            if vc > 0.0 {
                t_max = t_max.min((x.0[c] + 3.0) / vc);
            } else if vc < 0.0 {
                t_max = t_max.min((3.0 - x.0[c]) / -vc);
            }
        }
        let t = t_max * rng.gen_range(0.2..1.0);
        let q: Vec<f64> = x.0.iter().zip(&v).map(|(a, b)| a - t * b).collect();
        pts.push(Point(p));
        w.push(m * t / (1.0 + t));
        pts.push(Point(q));
        w.push(m / (1.0 + t));
    }
    DiscreteMeasure::normalized(pts, w).expect("positive weights")
}

/// A dilation followed by a nonnegative shift: dominates `mu` in the
/// increasing convex order.
pub fn random_icx_dilation(rng: &mut ChaCha8Rng, mu: &DiscreteMeasure, max_atoms: usize) -> DiscreteMeasure {
    let d = random_dilation(rng, mu, max_atoms);
    let pts: Vec<Point> = d
        .points()
        .iter()
        .map(|p| Point(p.0.iter().map(|&c| c + rng.gen_range(0.0..0.5f64).min(3.0 - c).max(0.0)).collect()))
        .collect();
    DiscreteMeasure::normalized(pts, d.weights().to_vec()).expect("positive weights")
}

/// `m + s (μ − m)` with `s ∈ [0.3, 0.8]`: same mean, less spread.
fn contraction(rng: &mut ChaCha8Rng, mu: &DiscreteMeasure) -> DiscreteMeasure {
    let m = mean(mu);
    let s = rng.gen_range(0.3..0.8);
    let pts = mu.points().iter().map(|p| Point(p.0.iter().zip(&m.0).map(|(a, b)| b + s * (a - b)).collect())).collect();
    DiscreteMeasure::normalized(pts, mu.weights().to_vec()).expect("positive weights")
}

/// A pair for the order checks: a dominated pair, an independent pair or a
/// mean-matched contraction, in equal proportions.
pub fn order_pair(rng: &mut ChaCha8Rng, dim: usize, icx: bool, max_atoms: usize) -> (DiscreteMeasure, DiscreteMeasure) {
    match rng.gen_range(0..3) {
        0 => {
            let mu = random_measure(rng, dim, (max_atoms / 2).max(1));
            let nu = if icx { random_icx_dilation(rng, &mu, max_atoms) } else { random_dilation(rng, &mu, max_atoms) };
            (mu, nu)
        }
        1 => (random_measure(rng, dim, max_atoms), random_measure(rng, dim, max_atoms)),
        _ => {
            let mu = random_measure(rng, dim, max_atoms);
            let nu = contraction(rng, &mu);
            (mu, nu)
        }
    }
}

// ------------------------------------------------------------------ oracles

fn unit_direction(rng: &mut ChaCha8Rng, dim: usize, nonneg: bool) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0f64)).map(|c| if nonneg { c.abs() } else { c }).collect();
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

fn dot(a: &[f64], y: &Point) -> f64 {
    a.iter().zip(&y.0).map(|(u, v)| u * v).sum()
}

/// Order verdict from sampled test functions alone: the largest
/// `μ(f) − ν(f)` over linear functions, hinges at the support knots and
/// `samples` random convex functions (increasing convex when `icx`).
/// Returns that margin; the order holds iff it is at most `1e-9`.
pub fn sampled_order_margin(mu: &DiscreteMeasure, nu: &DiscreteMeasure, icx: bool, samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let d = mu.dim();
    let knots: Vec<&Point> = mu.points().iter().chain(nu.points()).collect();
    let mut worst = f64::NEG_INFINITY;
    let mut test = |f: &dyn Fn(&Point) -> f64| {
        worst = worst.max(mu.integrate(f) - nu.integrate(f));
    };
    let mut used = 0;
    for k in 0..d {
        test(&|y: &Point| y.0[k]);
        used += 1;
        if !icx {
            test(&|y: &Point| -y.0[k]);
            used += 1;
        }
    }
    for k in 0..d {
        for p in &knots {
            let t = p.0[k];
            test(&|y: &Point| (y.0[k] - t).max(0.0));
            used += 1;
        }
    }
    while used < samples {
        used += 1;
        match rng.gen_range(0..4) {
            0 => {
                let a = unit_direction(rng, d, icx);
                let t = dot(&a, knots[rng.gen_range(0..knots.len())]);
                test(&|y: &Point| (dot(&a, y) - t).max(0.0));
            }
            1 => {
                let a = unit_direction(rng, d, icx);
                let t = dot(&a, knots[rng.gen_range(0..knots.len())]);
                if icx {
                    test(&|y: &Point| (dot(&a, y) - t).max(0.0).powi(2));
                } else {
                    test(&|y: &Point| (dot(&a, y) - t).powi(2));
                }
            }
            2 => {
                let c: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
                if icx {
                    let a = unit_direction(rng, d, true);
                    test(&|y: &Point| (dot(&a, y) - dot(&a, &Point(c.clone()))).max(0.0).powi(2));
                } else {
                    test(&|y: &Point| y.0.iter().zip(&c).map(|(u, v)| (u - v).powi(2)).sum());
                }
            }
            _ => {
                let pieces: Vec<(Vec<f64>, f64)> =
                    (0..3).map(|_| (unit_direction(rng, d, icx), rng.gen_range(-2.0..2.0))).collect();
                test(&|y: &Point| pieces.iter().map(|(a, b)| dot(a, y) + b).fold(f64::NEG_INFINITY, f64::max));
            }
        }
    }
    worst
}

/// Strassen battery case: kernel LP verdict against the sampled search, with
/// both kinds of certificate re-validated.
fn strassen_case(rng: &mut ChaCha8Rng, dim: usize, icx: bool) -> Result<Outcome> {
    let (mu, nu) = order_pair(rng, dim, icx, 8);
    let order = if icx { Order::IncreasingConvex } else { Order::Convex };
    let cert = check_order(&mu, &nu, &order)?;
    let sampled = sampled_order_margin(&mu, &nu, icx, ORDER_SAMPLES, rng);
    let sampled_ordered = sampled <= 1e-9;
    if cert.verdict != sampled_ordered {
        return Ok(Outcome {
            passed: false,
            error: 1.0,
            detail: format!("LP says {} but sampled margin is {sampled:.3e}", cert.verdict),
        });
    }
    if cert.verdict {
        let kernel = cert.witness_kernel.as_ref().ok_or_else(|| Error::Numerical("positive verdict without kernel".into()))?;
        let r = kernel_residual(&mu, &nu, kernel, &order)?;
        return Ok(Outcome::within(r, 1e-9, format!("kernel residual {r:.3e}")));
    }
    let f = cert.separating_function.as_ref().ok_or_else(|| Error::Numerical("negative verdict without certificate".into()))?;
    let margin = f.integrate(&mu)? - f.integrate(&nu)?;
    let ok = f.in_cone(&order) && margin > 1e-9;
    Ok(Outcome { passed: ok, error: if ok { 0.0 } else { 1.0 }, detail: format!("certificate margin {margin:.3e}") })
}

fn random_grid_function(rng: &mut ChaCha8Rng, dim: usize, max_points: usize) -> GridFunction {
    let k = rng.gen_range(dim + 1..=max_points);
    let mut pts: Vec<Point> = Vec::new();
    while pts.len() < k {
        let p = Point((0..dim).map(|_| lattice(rng)).collect());
        if !pts.contains(&p) {
            pts.push(p);
        }
    }
    let vals = (0..k).map(|_| rng.gen_range(-3.0..3.0)).collect();
    GridFunction::new(pts, vals).expect("distinct points")
}

/// `inf { ρ(f) : ρ on the grid, mean ρ ≥ y }` as a plain LP.
fn iconvex_oracle(f: &GridFunction, y: &Point) -> Result<f64> {
    let mut lp = LinearProgram::minimize();
    let w: Vec<usize> = f.values().iter().map(|&v| lp.add_nonneg(v)).collect();
    lp.add_row(w.iter().map(|&k| (k, 1.0)).collect(), RowSense::Eq, 1.0);
    for c in 0..y.dim() {
        lp.add_row(w.iter().zip(f.support()).map(|(&k, p)| (k, p.0[c])).collect(), RowSense::Ge, y.0[c]);
    }
    let sol = solve_lp(&lp)?;
    Ok(if sol.status == LpStatus::Optimal { sol.objective } else { f64::INFINITY })
}

fn hull_case(rng: &mut ChaCha8Rng, dim: usize, increasing: bool) -> Result<Outcome> {
    let f = random_grid_function(rng, dim, if dim == 1 { 20 } else { 12 });
    let hull = if increasing { iconvex_hull(&f) } else { convex_hull(&f) };
    let mut worst: f64 = 0.0;
    for (p, &h) in f.support().iter().zip(hull.values()) {
        let o = if increasing { iconvex_oracle(&f, p)? } else { brute_force_hull(&f, p)? };
        worst = worst.max((h - o).abs());
    }
    Ok(Outcome::within(worst, 1e-9, format!("{} points, max deviation {worst:.3e}", f.len())))
}

const RADII: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, f64::INFINITY];

/// The hull checks whose functions the `conv_r` schedule replays.
const HULL_FAMILIES: [(&str, usize); 4] =
    [("convex_hull_1d", 1), ("convex_hull_2d", 2), ("iconvex_hull_1d", 1), ("iconvex_hull_2d", 2)];

/// Case `i` of the schedule check as (family, index within the family);
/// with the default counts this visits every hull-battery function once.
fn hull_family_case(i: usize, count: usize) -> (usize, usize) {
    let sizes: Vec<usize> = HULL_FAMILIES.iter().map(|(n, _)| default_count(n)).collect();
    let total: usize = sizes.iter().sum();
    let mut start = 0;
    let mut acc = 0;
    for (k, s) in sizes.iter().enumerate() {
        acc += s;
        let end = (count * acc).div_ceil(total);
        if i < end || k == sizes.len() - 1 {
            return (k, i - start);
        }
        start = end;
    }
    unreachable!("the last family takes the rest")
}

fn conv_r_case(rng: &mut ChaCha8Rng, dim: usize) -> Result<Outcome> {
    let f = random_grid_function(rng, dim, if dim == 1 { 20 } else { 12 });
    let hull = convex_hull(&f);
    let mut worst: f64 = 0.0;
    let mut monotone = true;
    for (p, &h) in f.support().iter().zip(hull.values()) {
        let vals: Vec<f64> = RADII.iter().map(|&r| conv_r(&f, p, r)).collect::<Result<_>>()?;
        monotone &= vals.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        worst = worst.max((vals[RADII.len() - 1] - h).abs());
    }
    let mut out = Outcome::within(worst, 1e-8, format!("d = {dim}, terminal deviation {worst:.3e}, monotone {monotone}"));
    out.passed &= monotone;
    Ok(out)
}

fn stability_case(rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut f = random_grid_function(rng, 1, 8);
    while f.len() < 3 {
        f = random_grid_function(rng, 1, 8);
    }
    // Force a strict nonconvexity by lifting a point above its envelope.
    if convex_hull(&f).values().iter().zip(f.values()).all(|(h, v)| (h - v).abs() <= 1e-12) {
        let mut order: Vec<usize> = (0..f.len()).collect();
        order.sort_by(|&a, &b| f.support()[a].0[0].total_cmp(&f.support()[b].0[0]));
        let mut vals = f.values().to_vec();
        vals[order[1]] += 2.0;
        f = f.with_values(vals)?;
    }
    let xs: Vec<f64> = f.support().iter().map(|p| p.0[0]).collect();
    let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let probes: Vec<Point> = (0..20).map(|_| Point::scalar(rng.gen_range(lo..=hi))).collect();
    let mut worst: f64 = 0.0;
    for cost in [Arc::new(MartingaleIndicator::default()) as SharedCost, Arc::new(Barycentric::square())] {
        let r = verify_hull_stability(&f, cost.as_ref(), &probes, false)?;
        worst = worst.max(r.max_deviation);
    }
    Ok(Outcome::within(worst, 1e-7, format!("max deviation {worst:.3e}")))
}

// -------------------------------------------------------------- duality

/// The monotone costs of the duality battery with their classes.
fn duality_costs() -> Vec<(&'static str, SharedCost, DualClass)> {
    vec![
        ("barycentric_abs", Arc::new(Barycentric::abs()), DualClass::Convex),
        ("barycentric_square", Arc::new(Barycentric::square()), DualClass::Convex),
        ("martingale", Arc::new(MartingaleIndicator::default()), DualClass::Convex),
        ("icx_positive_part", Arc::new(IcxPositivePart::new(1.0).expect("valid exponent")), DualClass::Icx),
        ("monopolist_abs", Arc::new(monopolist(ConvexFn::abs(), 1).expect("valid theta")), DualClass::Icx),
    ]
}

fn duality_instance(rng: &mut ChaCha8Rng, martingale: bool) -> (DiscreteMeasure, DiscreteMeasure) {
    if martingale {
        let mu = random_measure(rng, 1, 3);
        let nu = random_dilation(rng, &mu, 6);
        (mu, nu)
    } else {
        (random_measure(rng, 1, 6), random_measure(rng, 1, 6))
    }
}

fn duality_case(rng: &mut ChaCha8Rng, cost: &dyn CostPlugin, class: &DualClass, martingale: bool) -> Result<Outcome> {
    let (mu, nu) = duality_instance(rng, martingale);
    let p = solve_primal(&mu, &nu, cost)?.value;
    let d = solve_dual(&mu, &nu, cost, class)?;
    let err = (p - d.value).abs() / (1.0 + p.abs());
    Ok(Outcome::within(err, 1e-5, format!("primal {p:.9} dual {:.9} ({:?})", d.value, d.status)))
}

/// Witnesses the dual solutions of case `i` of every duality check.
fn attainment_case(master: u64, i: usize) -> Result<Outcome> {
    let mut failed = Vec::new();
    for (name, cost, class) in duality_costs() {
        let mut rng = ChaCha8Rng::seed_from_u64(case_seed(master, &format!("duality_{name}"), i));
        let (mu, nu) = duality_instance(&mut rng, name == "martingale");
        let d = solve_dual(&mu, &nu, cost.as_ref(), &class)?;
        let w = attainment_witness(&d, &mu, &nu, cost.as_ref())?;
        if !w.passed {
            failed.push(format!("{name} (violation {:.3e})", w.max_violation));
        }
    }
    let ok = failed.is_empty();
    Ok(Outcome { passed: ok, error: if ok { 0.0 } else { 1.0 }, detail: format!("witness failures: {failed:?}") })
}

fn converse_case() -> Result<Outcome> {
    let mu = DiscreteMeasure::dirac(Point::scalar(0.0));
    let nu = DiscreteMeasure::on_line(&[-1.0, 1.0], &[0.5, 0.5])?;
    let g = duality_gap(&mu, &nu, &ClassicalLinear::new(PointCost::AbsY), &DualClass::Convex)?;
    let ok = (g.primal - 1.0).abs() <= 1e-9 && g.dual <= 1e-8 && g.gap >= 1.0 - 1e-6;
    Ok(Outcome {
        passed: ok,
        error: if ok { 0.0 } else { 1.0 },
        detail: format!("primal {} dual {:.3e} gap {}", g.primal, g.dual, g.gap),
    })
}

fn benamou_brenier_case(rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mu = random_measure(rng, 1, 3);
    let nu = random_dilation(rng, &mu, 5);
    let cost = NegativeMcov::standard(1, 16, 1e-9)?;
    let p = solve_primal(&mu, &nu, &cost)?.value;
    let d = solve_dual(&mu, &nu, &cost, &DualClass::Convex)?;
    let err = (p - d.value).abs() / (1.0 + p.abs());
    let mut out = Outcome::within(err, 1e-4, format!("primal {p:.9} shifted dual {:.9}", d.value));
    out.passed &= d.shift.is_some() && d.status != DualStatus::Unbounded;
    Ok(out)
}

fn mcov_fixture() -> Result<Outcome> {
    let rho = DiscreteMeasure::on_line(&[-1.0, 1.0], &[0.5, 0.5])?;
    let mut worst: f64 = 0.0;
    for a in [0.25, 0.5, 1.0, 2.0, 2.5] {
        let gamma = DiscreteMeasure::on_line(&[-a, a], &[0.5, 0.5])?;
        worst = worst.max((mcov(&rho, &gamma)? - a).abs());
    }
    Ok(Outcome::within(worst, 0.0, format!("max deviation {worst:e}")))
}

// ----------------------------------------------------------- projection

fn three_way_case(rng: &mut ChaCha8Rng, icx: bool) -> Result<Outcome> {
    let mu = random_measure(rng, 1, 4);
    let nu = random_measure(rng, 1, 4);
    let (cost, order): (SharedCost, Order) = if icx {
        (Arc::new(IcxPositivePart::new(1.0)?), Order::IncreasingConvex)
    } else {
        (Arc::new(Barycentric::square()), Order::Convex)
    };
    let p = project_order(&mu, &nu, &cost, &order)?;
    let v = p.three_values;
    Ok(Outcome::within(p.max_discrepancy, 1e-5, format!("lhs {:.9} mid {:.9} rhs {:.9}", v.lhs, v.mid, v.rhs)))
}

fn brenier_strassen_case() -> Result<Outcome> {
    let mu = DiscreteMeasure::dirac(Point::scalar(2.0));
    let nu = DiscreteMeasure::on_line(&[-1.0, 1.0], &[0.5, 0.5])?;
    let cost: SharedCost = Arc::new(Barycentric::square());
    let p = project_order(&mu, &nu, &cost, &Order::Convex)?;
    let v = p.three_values;
    let err = [v.lhs, v.mid, v.rhs].iter().map(|x| (x - 4.0).abs()).fold(0.0, f64::max);
    let dirac = p.eta.points() == [Point::scalar(0.0)];
    let mut out = Outcome::within(err, 1e-6, format!("values {v:?}, eta {:?}", p.eta.points()));
    out.passed &= dirac;
    Ok(out)
}

// --------------------------------------------------------------- registry

/// `(suite, check name, default case count)` for every check.
pub const CHECKS: &[(Suite, &str, usize)] = &[
    (Suite::Orders, "strassen_convex_1d", 200),
    (Suite::Orders, "strassen_convex_2d", 100),
    (Suite::Orders, "strassen_icx_1d", 200),
    (Suite::Orders, "strassen_icx_2d", 100),
    (Suite::Hulls, "convex_hull_1d", 100),
    (Suite::Hulls, "convex_hull_2d", 30),
    (Suite::Hulls, "iconvex_hull_1d", 100),
    (Suite::Hulls, "iconvex_hull_2d", 30),
    (Suite::Hulls, "conv_r_schedule", 260),
    (Suite::Hulls, "conjugate_stability", 50),
    (Suite::Duality, "duality_barycentric_abs", 50),
    (Suite::Duality, "duality_barycentric_square", 50),
    (Suite::Duality, "duality_martingale", 50),
    (Suite::Duality, "duality_icx_positive_part", 50),
    (Suite::Duality, "duality_monopolist_abs", 50),
    (Suite::Duality, "converse_gap", 1),
    (Suite::Duality, "attainment", 50),
    (Suite::Duality, "martingale_benamou_brenier", 10),
    (Suite::Duality, "mcov_comonotone_fixture", 1),
    (Suite::Projection, "three_way_convex", 30),
    (Suite::Projection, "three_way_icx", 30),
    (Suite::Projection, "brenier_strassen", 1),
];

fn default_count(name: &str) -> usize {
    CHECKS.iter().find(|(_, n, _)| *n == name).map_or(0, |c| c.2)
}

/// Runs one named check with `count` cases.
pub fn run_check(name: &str, count: usize, seed: u64) -> Result<CheckSummary> {
    let costs = duality_costs();
    let summary = match name {
        "strassen_convex_1d" => run_cases(name, 1e-9, count, seed, |r| strassen_case(r, 1, false)),
        "strassen_convex_2d" => run_cases(name, 1e-9, count, seed, |r| strassen_case(r, 2, false)),
        "strassen_icx_1d" => run_cases(name, 1e-9, count, seed, |r| strassen_case(r, 1, true)),
        "strassen_icx_2d" => run_cases(name, 1e-9, count, seed, |r| strassen_case(r, 2, true)),
        "convex_hull_1d" => run_cases(name, 1e-9, count, seed, |r| hull_case(r, 1, false)),
        "convex_hull_2d" => run_cases(name, 1e-9, count, seed, |r| hull_case(r, 2, false)),
        "iconvex_hull_1d" => run_cases(name, 1e-9, count, seed, |r| hull_case(r, 1, true)),
        "iconvex_hull_2d" => run_cases(name, 1e-9, count, seed, |r| hull_case(r, 2, true)),
        "conv_r_schedule" => run_indexed(
            name,
            1e-8,
            count,
            |i| {
                let (k, j) = hull_family_case(i, count);
                case_seed(seed, HULL_FAMILIES[k].0, j)
            },
            |i, r| conv_r_case(r, HULL_FAMILIES[hull_family_case(i, count).0].1),
        ),
        "conjugate_stability" => run_cases(name, 1e-7, count, seed, stability_case),
        "converse_gap" => run_cases(name, 0.0, count, seed, |_| converse_case()),
        "attainment" => run_indexed(name, 0.0, count, |i| case_seed(seed, name, i), |i, _| attainment_case(seed, i)),
        "martingale_benamou_brenier" => run_cases(name, 1e-4, count, seed, benamou_brenier_case),
        "mcov_comonotone_fixture" => run_cases(name, 0.0, count, seed, |_| mcov_fixture()),
        "three_way_convex" => run_cases(name, 1e-5, count, seed, |r| three_way_case(r, false)),
        "three_way_icx" => run_cases(name, 1e-5, count, seed, |r| three_way_case(r, true)),
        "brenier_strassen" => run_cases(name, 1e-6, count, seed, |_| brenier_strassen_case()),
        other => {
            let Some((_, cost, class)) = other.strip_prefix("duality_").and_then(|c| costs.iter().find(|(n, ..)| *n == c)) else {
                return Err(Error::Usage(format!("unknown check {other:?}")));
            };
            let martingale = other == "duality_martingale";
            run_cases(name, 1e-5, count, seed, |r| duality_case(r, cost.as_ref(), class, martingale))
        }
    };
    Ok(summary)
}

/// Runs every check of `suite` (default counts unless `n` overrides them).
pub fn run_suite(suite: Suite, n: Option<usize>, seed: u64) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    for &(s, name, default) in CHECKS {
        if suite == Suite::All || s == suite {
            checks.push(run_check(name, n.unwrap_or(default), seed)?);
        }
    }
    let total = checks.iter().map(|c| c.cases).sum();
    let passed = checks.iter().map(|c| c.passed).sum();
    Ok(VerifyReport { schema: SCHEMA.to_string(), suite, n, seed, checks, total, passed })
}
