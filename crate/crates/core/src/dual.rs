//! The dual problem `sup μ(ψ^C) − ν(ψ)` over convex, increasing convex or
//! cone potentials, together with the checks around it: hull stability of
//! the conjugate, duality gaps, attainment witnesses and the 1-Lipschitz
//! re-normalization for distance costs.
//!
//! Potentials are parametrized by their values on a finite working grid
//! (containing both supports) plus whatever the class needs to stay extendable:
//! monotone secants on the line, subgradients in higher dimension and
//! anchored conic pieces for custom cones. The conjugate restricts `ρ` to the
//! same grid, and the concave dual objective is maximized by Kelley's method
//! with exact conjugates at every candidate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::costs::{conditional_program, BoundFn, CostPlugin};
use crate::error::{Error, Result};
use crate::hulls::{
    conv_r, convex_hull, iconvex_hull, supporting_potential, AffinePiece, GridFunction, MaxAffinePotential, NormKind,
};
use crate::measures::{DiscreteMeasure, Point};
use crate::optim::{cutting_plane_max, Cut, CuttingPlaneOptions, LinearConstraint, LpStatus, RowSense};
use crate::orders::{ConeFamily, ConeSpec, ConicPiece, Generator, Order, SeparatingFunction};
use crate::primal::{solve_primal, PrimalResult};

/// Admissibility tolerance `φ(x) − ρ(ψ) ≤ C(x, ρ) + 1e-8`.
const ADMISSIBILITY_TOL: f64 = 1e-8;
/// Hull-stability tolerance on `|ψ^C − (conv ψ)^C|`.
const HULL_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", content = "cone", rename_all = "snake_case")]
pub enum DualClass {
    Convex,
    Icx,
    Cone(ConeSpec),
}

impl DualClass {
    pub fn order(&self) -> Order {
        match self {
            DualClass::Convex => Order::Convex,
            DualClass::Icx => Order::IncreasingConvex,
            DualClass::Cone(c) => Order::Cone(c.clone()),
        }
    }

    /// The convex / icx class a one-dimensional cone family reduces to.
    fn reduced(&self, dim: usize) -> Option<bool> {
        match self {
            DualClass::Convex => Some(false),
            DualClass::Icx => Some(true),
            DualClass::Cone(c) => match c.family {
                ConeFamily::Convex1d if dim == 1 => Some(false),
                ConeFamily::Icx1d if dim == 1 => Some(true),
                _ => None,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualOptions {
    pub tol: f64,
    /// Bound on slopes (and conic coefficients) of the potential.
    pub slope_bound: f64,
    /// Extra grid points per gap on the line; pair midpoints in `d ≥ 2`.
    pub grid_refine: usize,
    /// Require the cost to be declared decreasing in the class's order.
    pub enforce_class: bool,
    pub max_iterations: usize,
    /// Start from the primal multipliers and use the primal value as a
    /// known upper bound; without it the search is a plain cut-model ascent.
    pub warm_start: bool,
}

impl Default for DualOptions {
    fn default() -> Self {
        DualOptions { tol: 1e-6, slope_bound: 1e3, grid_refine: 0, enforce_class: true, max_iterations: 600, warm_start: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualStatus {
    Optimal,
    /// The supremum is `+∞`: some `x` has no finite-cost law on the grid, or
    /// the primal is infeasible for a cost monotone in the class's order.
    /// `value` is then the best value within the slope bound.
    Unbounded,
    GapNotCertified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualResult {
    #[serde(with = "crate::hulls::ext_real")]
    pub value: f64,
    pub potential: SeparatingFunction,
    /// `φ = ψ^C` on `supp μ`.
    pub conjugate_values: Vec<f64>,
    pub class: DualClass,
    pub grid: Vec<Point>,
    pub psi_on_grid: Vec<f64>,
    /// Upper bound on the parametrized maximum from the cut model.
    #[serde(with = "crate::hulls::ext_real")]
    pub upper_bound: f64,
    #[serde(with = "crate::hulls::ext_real")]
    pub certified_gap: f64,
    /// The lower-bound function `b` of the cost when it is not zero; on a
    /// finite grid the shifted class `b + convex` with growth control is
    /// again the convex class, so this is recorded rather than searched.
    pub shift: Option<BoundFn>,
    pub status: DualStatus,
    pub iterations: usize,
}

/// Conjugate value at one point with the minimizing law's weights on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Conjugate {
    pub value: f64,
    pub rho: Option<Vec<f64>>,
}

/// `supp ν ∪ supp μ` (so that Dirac laws at the sources are available),
/// sorted on the line, refined by `refine` equally spaced points per gap
/// (line) or by all pair midpoints (`d ≥ 2`, `refine ≥ 1`).
pub fn working_grid(mu: &DiscreteMeasure, nu: &DiscreteMeasure, refine: usize) -> Vec<Point> {
    let mut g: Vec<Point> = nu.points().to_vec();
    for x in mu.points() {
        if !g.contains(x) {
            g.push(x.clone());
        }
    }
    if nu.dim() == 1 {
        g.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]));
        if refine > 0 {
            let mut out = Vec::with_capacity(g.len() * (refine + 1));
            for w in g.windows(2) {
                let (a, b) = (w[0].0[0], w[1].0[0]);
                out.push(w[0].clone());
                for k in 1..=refine {
                    out.push(Point::scalar(a + (b - a) * k as f64 / (refine + 1) as f64));
                }
            }
            out.push(g[g.len() - 1].clone());
            g = out;
        }
    } else if refine > 0 {
        let base = g.clone();
        for i in 0..base.len() {
            for j in i + 1..base.len() {
                let m = Point(base[i].0.iter().zip(&base[j].0).map(|(a, b)| 0.5 * (a + b)).collect());
                if !g.contains(&m) {
                    g.push(m);
                }
            }
        }
    }
    g
}

/// `inf { ρ(ψ) + C(x, ρ) : ρ on grid }` for `ψ` given by its grid values.
/// `+∞` if no grid law has finite cost, `−∞` if the program is unbounded.
/// The reported value is the solver's certified lower bound.
pub fn conjugate_on_grid(values: &[f64], cost: &dyn CostPlugin, x: &Point, grid: &[Point]) -> Result<Conjugate> {
    if values.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("potential values on the grid must be finite".into()));
    }
    let (prog, row, ok) = conditional_program(cost, x, grid, values)?;
    if ok {
        let sol = prog.solve()?;
        return Ok(match sol.status {
            LpStatus::Optimal => Conjugate {
                value: sol.lower_bound.min(sol.objective),
                rho: Some(row.iter().map(|&r| sol.x[r].max(0.0)).collect()),
            },
            LpStatus::Infeasible => Conjugate { value: f64::INFINITY, rho: None },
            LpStatus::Unbounded => Conjugate { value: f64::NEG_INFINITY, rho: None },
        });
    }
    conjugate_by_cuts(values, cost, x, grid)
}

/// Opaque (finite-valued) costs: Kelley over the simplex with the cost's
/// linearizations as cuts.
fn conjugate_by_cuts(values: &[f64], cost: &dyn CostPlugin, x: &Point, grid: &[Point]) -> Result<Conjugate> {
    let n = grid.len();
    let law = |w: &[f64]| DiscreteMeasure::normalized(grid.to_vec(), w.iter().map(|v| v.max(0.0)).collect());
    let simplex = LinearConstraint { terms: (0..n).map(|j| (j, 1.0)).collect(), sense: RowSense::Eq, rhs: 1.0 };
    let opts = CuttingPlaneOptions {
        tol: 1e-10,
        max_iterations: 400,
        initial: Some(vec![1.0 / n as f64; n]),
        extra_rows: vec![simplex],
        ..Default::default()
    };
    let r = cutting_plane_max(
        |w| {
            let rho = law(w)?;
            let c = cost.evaluate_in(x, &rho, grid)?;
            let lin = cost
                .linearize(x, &rho, grid)?
                .ok_or_else(|| Error::Unsupported(format!("{} is infinite without a row model", cost.name())))?;
            let value = -(rho.integrate_table(grid, values)? + c);
            Ok(Cut { value, supergradient: values.iter().zip(&lin).map(|(v, g)| -(v + g)).collect() })
        },
        &vec![0.0; n],
        &vec![1.0; n],
        &opts,
    )?;
    Ok(Conjugate { value: -r.upper_bound, rho: Some(r.argmax) })
}

/// `ψ^C(x)` with `ρ` restricted to `grid`.
pub fn c_conjugate(psi: &MaxAffinePotential, cost: &dyn CostPlugin, x: &Point, grid: &[Point]) -> Result<f64> {
    let values: Vec<f64> = grid.iter().map(|g| psi.eval(g)).collect();
    Ok(conjugate_on_grid(&values, cost, x, grid)?.value)
}

/// Parameter layout of a potential class on the grid: values `v` come
/// first (with `v_0 = 0`, constants being irrelevant), then class extras.
struct Layout {
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<LinearConstraint>,
    kind: LayoutKind,
}

enum LayoutKind {
    /// Sorted line grid, secant pieces.
    Line { increasing: bool },
    /// Subgradient `s_k` per grid point at `n + k·d`.
    Anchored { dim: usize, increasing: bool },
    /// Conic pieces: constant at `n + k`, coefficients at `2n + k·L + l`.
    Conic { generators: Vec<Generator> },
}

fn layout(class: &DualClass, grid: &[Point], bound: f64) -> Result<Layout> {
    let n = grid.len();
    let d = grid[0].dim();
    let g0 = &grid[0];
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rows = Vec::new();
    match class.reduced(d) {
        Some(increasing) if d == 1 => {
            let xs: Vec<f64> = grid.iter().map(|p| p.0[0]).collect();
            for k in 1..n {
                let reach = bound * (xs[k] - xs[0]);
                lower[k] = if increasing { 0.0 } else { -reach };
                upper[k] = reach;
            }
            if n >= 2 {
                // First secant ≥ −B (≥ 0 if increasing); last secant ≤ B.
                let h = xs[1] - xs[0];
                rows.push(LinearConstraint {
                    terms: vec![(1, 1.0), (0, -1.0)],
                    sense: RowSense::Ge,
                    rhs: if increasing { 0.0 } else { -bound * h },
                });
                let h = xs[n - 1] - xs[n - 2];
                rows.push(LinearConstraint { terms: vec![(n - 1, 1.0), (n - 2, -1.0)], sense: RowSense::Le, rhs: bound * h });
            }
            for k in 1..n.saturating_sub(1) {
                // (v_{k+1} − v_k)/h₊ ≥ (v_k − v_{k−1})/h₋
                let (hm, hp) = (xs[k] - xs[k - 1], xs[k + 1] - xs[k]);
                rows.push(LinearConstraint {
                    terms: vec![(k + 1, hm), (k, -hm - hp), (k - 1, hp)],
                    sense: RowSense::Ge,
                    rhs: 0.0,
                });
            }
            Ok(Layout { lower, upper, rows, kind: LayoutKind::Line { increasing } })
        }
        Some(increasing) => {
            for k in 1..n {
                let reach: f64 = bound * grid[k].0.iter().zip(&g0.0).map(|(a, b)| (a - b).abs()).sum::<f64>();
                lower[k] = -reach;
                upper[k] = reach;
            }
            for _ in 0..n * d {
                lower.push(if increasing { 0.0 } else { -bound });
                upper.push(bound);
            }
            for k in 0..n {
                for l in 0..n {
                    if k == l {
                        continue;
                    }
                    // v_l − v_k − s_k·(g_l − g_k) ≥ 0
                    let mut terms = vec![(l, 1.0), (k, -1.0)];
                    for a in 0..d {
                        let c = grid[l].0[a] - grid[k].0[a];
                        if c != 0.0 {
                            terms.push((n + k * d + a, -c));
                        }
                    }
                    rows.push(LinearConstraint { terms, sense: RowSense::Ge, rhs: 0.0 });
                }
            }
            Ok(Layout { lower, upper, rows, kind: LayoutKind::Anchored { dim: d, increasing } })
        }
        None => {
            let DualClass::Cone(spec) = class else { unreachable!("convex and icx always reduce") };
            let pts: Vec<&Point> = grid.iter().collect();
            let generators = spec.expand(&pts);
            if generators.is_empty() {
                return Err(Error::Usage("cone has no generators".into()));
            }
            let f: Vec<Vec<f64>> =
                generators.iter().map(|g| grid.iter().map(|y| g.eval(y)).collect::<Result<Vec<f64>>>()).collect::<Result<_>>()?;
            let ll = generators.len();
            let spread: f64 = f.iter().map(|row| row.iter().fold(0.0f64, |m, v| m.max((v - row[0]).abs()))).sum::<f64>() * bound;
            let size: f64 = f.iter().map(|row| row.iter().fold(0.0f64, |m, v| m.max(v.abs()))).sum::<f64>() * bound;
            for k in 1..n {
                lower[k] = -spread;
                upper[k] = spread;
            }
            for _ in 0..n {
                lower.push(-spread - size);
                upper.push(spread + size);
            }
            for _ in 0..n * ll {
                lower.push(0.0);
                upper.push(bound);
            }
            for k in 0..n {
                for j in 0..n {
                    // c_k + Σ_l λ_kl f_l(g_j) − v_j ≤ 0, with equality at j = k.
                    let mut terms = vec![(n + k, 1.0), (j, -1.0)];
                    for l in 0..ll {
                        if f[l][j] != 0.0 {
                            terms.push((2 * n + k * ll + l, f[l][j]));
                        }
                    }
                    let sense = if j == k { RowSense::Eq } else { RowSense::Le };
                    rows.push(LinearConstraint { terms, sense, rhs: 0.0 });
                }
            }
            Ok(Layout { lower, upper, rows, kind: LayoutKind::Conic { generators } })
        }
    }
}

fn potential_from(kind: &LayoutKind, theta: &[f64], grid: &[Point]) -> Result<SeparatingFunction> {
    let n = grid.len();
    match kind {
        LayoutKind::Line { increasing } => {
            let mut pieces = Vec::new();
            if n == 1 {
                pieces.push((0.0, theta[0]));
            }
            for k in 0..n.saturating_sub(1) {
                let (a, b) = (grid[k].0[0], grid[k + 1].0[0]);
                let mut s = (theta[k + 1] - theta[k]) / (b - a);
                if *increasing {
                    s = s.max(0.0);
                }
                pieces.push((s, theta[k] - s * a));
            }
            Ok(SeparatingFunction::MaxAffine(MaxAffinePotential::on_line(&pieces, *increasing)?))
        }
        LayoutKind::Anchored { dim, increasing } => {
            let pieces = (0..n)
                .map(|k| {
                    let s: Vec<f64> = (0..*dim)
                        .map(|a| {
                            let v = theta[n + k * dim + a];
                            if *increasing {
                                v.max(0.0)
                            } else {
                                v
                            }
                        })
                        .collect();
                    let slope = Point(s);
                    AffinePiece { intercept: theta[k] - slope.dot(&grid[k]), slope }
                })
                .collect();
            Ok(SeparatingFunction::MaxAffine(MaxAffinePotential::new(pieces, *increasing)?))
        }
        LayoutKind::Conic { generators } => {
            let ll = generators.len();
            let pieces = (0..n)
                .map(|k| ConicPiece {
                    coefficients: (0..ll).map(|l| theta[2 * n + k * ll + l].max(0.0)).collect(),
                    constant: theta[n + k],
                })
                .collect();
            Ok(SeparatingFunction::Conic { generators: generators.clone(), pieces })
        }
    }
}

/// Parameters of the class member nearest to the primal multipliers `m`
/// (given on `supp ν`): their (increasing) convex envelope, extended to the
/// other grid points as steeply as the slope bound allows on the line.
fn warm_start(lay: &Layout, class: &DualClass, nu: &DiscreteMeasure, m: &[f64], grid: &[Point], bound: f64) -> Result<Vec<f64>> {
    let increasing = match class.reduced(nu.dim()) {
        Some(inc) => inc,
        None => return Err(Error::Unsupported("no warm start for custom cones".into())),
    };
    let f = GridFunction::new(nu.points().to_vec(), m.to_vec())?;
    let pot = supporting_potential(&f, increasing)?;
    let mut v: Vec<f64> = grid.iter().map(|g| pot.eval(g)).collect();
    if let LayoutKind::Line { .. } = lay.kind {
        let xs: Vec<f64> = nu.points().iter().map(|p| p.0[0]).collect();
        let (lo, hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        let (vlo, vhi) = (pot.eval(&Point::scalar(lo)), pot.eval(&Point::scalar(hi)));
        for (g, val) in grid.iter().zip(v.iter_mut()) {
            let y = g.0[0];
            if y > hi {
                *val = vhi + bound * (y - hi);
            } else if y < lo && !increasing {
                *val = vlo + bound * (lo - y);
            } else if y < lo {
                *val = vlo;
            }
        }
        // Keep the first and last secants inside the slope box.
        let v0 = v[0];
        let mut theta: Vec<f64> = v.iter().map(|a| a - v0).collect();
        for (k, t) in theta.iter_mut().enumerate() {
            *t = t.clamp(lay.lower[k], lay.upper[k]);
        }
        return Ok(theta);
    }
    let n = grid.len();
    let LayoutKind::Anchored { dim, .. } = lay.kind else { unreachable!("reduced classes use line or anchored layouts") };
    let v0 = v[0];
    for a in v.iter_mut() {
        *a -= v0;
    }
    for k in 0..n {
        let s = pot.subgradient(&grid[k]).clone();
        for a in 0..dim {
            v.push(s.0[a]);
        }
    }
    Ok(v.iter().enumerate().map(|(k, t)| t.clamp(lay.lower[k], lay.upper[k])).collect())
}

fn check_inputs(mu: &DiscreteMeasure, nu: &DiscreteMeasure, class: &DualClass) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), got: nu.dim() });
    }
    if let DualClass::Cone(c) = class {
        if c.family != ConeFamily::Custom && nu.dim() != 1 {
            return Err(Error::Usage(format!("cone family {:?} lives on the line", c.family)));
        }
    }
    Ok(())
}

/// Conjugates at every atom of `μ`.
fn conjugates(values: &[f64], cost: &dyn CostPlugin, mu: &DiscreteMeasure, grid: &[Point]) -> Result<Vec<Conjugate>> {
    mu.points().iter().map(|x| conjugate_on_grid(values, cost, x, grid)).collect()
}

pub fn solve_dual(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &dyn CostPlugin, class: &DualClass) -> Result<DualResult> {
    solve_dual_with(mu, nu, cost, class, &DualOptions::default())
}

pub fn solve_dual_with(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &dyn CostPlugin,
    class: &DualClass,
    opts: &DualOptions,
) -> Result<DualResult> {
    check_inputs(mu, nu, class)?;
    if opts.enforce_class && !cost.metadata().decreasing_in(&class.order()) {
        return Err(Error::Usage(format!("{} is not declared decreasing in {:?}", cost.name(), class.order())));
    }
    let primal = if opts.warm_start { solve_primal(mu, nu, cost).ok() } else { None };
    solve_dual_seeded(mu, nu, cost, class, opts, primal.as_ref())
}

/// The dual search started from (and bounded by) a given primal solve, whose
/// value must be an upper bound on the restricted dual.
pub(crate) fn solve_dual_seeded(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &dyn CostPlugin,
    class: &DualClass,
    opts: &DualOptions,
    primal: Option<&PrimalResult>,
) -> Result<DualResult> {
    check_inputs(mu, nu, class)?;
    let meta = cost.metadata();
    let order = class.order();
    if opts.enforce_class && !meta.decreasing_in(&order) {
        return Err(Error::Usage(format!("{} is not declared decreasing in {:?}", cost.name(), order)));
    }
    if !(opts.slope_bound > 0.0) || !opts.slope_bound.is_finite() {
        return Err(Error::Usage("slope bound must be positive and finite".into()));
    }
    let grid = working_grid(mu, nu, opts.grid_refine);
    let n = grid.len();
    let nu_w = nu.weights_on(&grid)?;
    let shift = meta.lower_bound.map(|b| b.b).filter(|b| *b != BoundFn::Zero);
    let lay = layout(class, &grid, opts.slope_bound)?;

    // Feasibility of the conjugate does not depend on the prices.
    let zero = conjugates(&vec![0.0; n], cost, mu, &grid)?;
    if zero.iter().any(|c| c.value == f64::INFINITY) {
        let theta: Vec<f64> = lay.lower.iter().zip(&lay.upper).map(|(l, u)| 0.0f64.clamp(*l, *u)).collect();
        let potential = potential_from(&lay.kind, &theta, &grid)?;
        return Ok(DualResult {
            value: f64::INFINITY,
            potential,
            conjugate_values: zero.iter().map(|c| c.value).collect(),
            class: class.clone(),
            psi_on_grid: vec![0.0; n],
            grid,
            upper_bound: f64::INFINITY,
            certified_gap: 0.0,
            shift,
            status: DualStatus::Unbounded,
            iterations: 0,
        });
    }

    let mu_w = mu.weights().to_vec();
    let objective = |theta: &[f64]| -> Result<Cut> {
        let v = &theta[..n];
        let conj = conjugates(v, cost, mu, &grid)?;
        let mut value = -v.iter().zip(&nu_w).map(|(a, b)| a * b).sum::<f64>();
        let mut g: Vec<f64> = vec![0.0; theta.len()];
        for j in 0..n {
            g[j] = -nu_w[j];
        }
        for (c, &m) in conj.iter().zip(&mu_w) {
            if !c.value.is_finite() {
                return Err(Error::Numerical("conjugate unbounded below on the grid".into()));
            }
            value += m * c.value;
            let rho = c.rho.as_ref().expect("finite conjugates carry their law");
            for j in 0..n {
                g[j] += m * rho[j];
            }
        }
        Ok(Cut { value, supergradient: g })
    };
    // Weak duality bounds the restricted dual by the primal value, and the
    // primal multipliers, pushed into the class, are a strong starting point.
    let primal_value = primal.map_or(f64::INFINITY, |p| p.value);
    let zero_start: Vec<f64> = lay.lower.iter().zip(&lay.upper).map(|(l, u)| 0.0f64.clamp(*l, *u)).collect();
    let initial = primal
        .and_then(|p| p.multipliers.as_ref())
        .and_then(|m| warm_start(&lay, class, nu, m, &grid, opts.slope_bound).ok())
        .unwrap_or(zero_start);
    let scale = grid.iter().flat_map(|a| grid.iter().map(move |b| a.dist(b))).fold(0.0, f64::max).max(1.0);
    let cp = cutting_plane_max(
        objective,
        &lay.lower,
        &lay.upper,
        &CuttingPlaneOptions {
            tol: opts.tol,
            max_iterations: opts.max_iterations,
            initial: Some(initial),
            extra_rows: lay.rows.clone(),
            known_upper: primal_value.is_finite().then_some(primal_value),
            trust_radius: Some(0.1 * scale),
        },
    )?;

    // Re-derive ψ from the extended potential and recompute everything exactly.
    let potential = potential_from(&lay.kind, &cp.argmax, &grid)?;
    let psi_on_grid: Vec<f64> = grid.iter().map(|g| potential.eval(g)).collect::<Result<_>>()?;
    let conj = conjugates(&psi_on_grid, cost, mu, &grid)?;
    let conjugate_values: Vec<f64> = conj.iter().map(|c| c.value).collect();
    let value = mu.integrate_table(mu.points(), &conjugate_values)? - nu.integrate_table(&grid, &psi_on_grid)?;
    if !value.is_finite() {
        return Err(Error::Numerical(format!("dual value {value} at the returned potential")));
    }
    let upper_bound = cp.upper_bound.max(value);
    let certified_gap = upper_bound - value;
    let infeasible_primal = primal.is_some_and(|p| p.value == f64::INFINITY);
    let status = if infeasible_primal && meta.decreasing_in(&order) {
        DualStatus::Unbounded
    } else if certified_gap <= opts.tol * (1.0 + value.abs()) * 1.0001 {
        DualStatus::Optimal
    } else {
        DualStatus::GapNotCertified
    };
    Ok(DualResult {
        value,
        potential,
        conjugate_values,
        class: class.clone(),
        grid,
        psi_on_grid,
        upper_bound,
        certified_gap,
        shift,
        status,
        iterations: cp.iterations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HullStabilityReport {
    /// `(ψ^C(x), (conv ψ)^C(x))` per probe.
    pub values: Vec<(f64, f64)>,
    pub max_deviation: f64,
    pub worst_x: Option<Point>,
    /// Probes where the two conjugates differ by more than 1e-7.
    pub violations: Vec<Point>,
}

/// Compares `ψ^C` with `(conv ψ)^C` (or the increasing convex envelope) at
/// each probe, with `ρ` on the support of `ψ`.
pub fn verify_hull_stability(
    psi: &GridFunction,
    cost: &dyn CostPlugin,
    xs: &[Point],
    increasing: bool,
) -> Result<HullStabilityReport> {
    let hull = if increasing { iconvex_hull(psi) } else { convex_hull(psi) };
    let grid = psi.support();
    let mut report = HullStabilityReport { values: Vec::new(), max_deviation: 0.0, worst_x: None, violations: Vec::new() };
    for x in xs {
        let a = conjugate_on_grid(psi.values(), cost, x, grid)?.value;
        let b = conjugate_on_grid(hull.values(), cost, x, grid)?.value;
        let dev = if a == b { 0.0 } else { (a - b).abs() };
        if dev > report.max_deviation || (report.worst_x.is_none() && dev == report.max_deviation) {
            report.max_deviation = dev;
            report.worst_x = Some(x.clone());
        }
        if dev > HULL_TOL * (1.0 + a.abs().min(b.abs())) {
            report.violations.push(x.clone());
        }
        report.values.push((a, b));
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityGap {
    #[serde(with = "crate::hulls::ext_real")]
    pub primal: f64,
    #[serde(with = "crate::hulls::ext_real")]
    pub dual: f64,
    #[serde(with = "crate::hulls::ext_real")]
    pub gap: f64,
    /// The cost is declared decreasing in the class's order.
    pub monotone: bool,
}

/// Primal value against the class-restricted dual; for costs that are not
/// monotone in the class's order the (possibly positive) gap is the point.
pub fn duality_gap(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &dyn CostPlugin, class: &DualClass) -> Result<DualityGap> {
    let primal = solve_primal(mu, nu, cost)?.value;
    let opts = DualOptions { enforce_class: false, ..Default::default() };
    let dual = solve_dual_with(mu, nu, cost, class, &opts)?.value;
    let gap = if primal == dual { 0.0 } else { primal - dual };
    Ok(DualityGap { primal, dual, gap, monotone: cost.metadata().decreasing_in(&class.order()) })
}

/// Largest `φ(x) − ρ(ψ) − C(x, ρ)` over seeded probes: every Dirac on the
/// grid and `n_random` random grid laws per atom of `μ`.
pub fn check_admissible(
    phi: &[f64],
    psi_on_grid: &[f64],
    mu: &DiscreteMeasure,
    cost: &dyn CostPlugin,
    grid: &[Point],
    n_random: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.len();
    let mut worst = f64::NEG_INFINITY;
    for (x, &f) in mu.points().iter().zip(phi) {
        let mut laws: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|k| if k == j { 1.0 } else { 0.0 }).collect()).collect();
        for _ in 0..n_random {
            laws.push((0..n).map(|_| if rng.gen_bool(0.6) { rng.gen_range(0.0..1.0) } else { 0.0 }).collect());
        }
        for w in laws {
            if w.iter().all(|&v| v == 0.0) {
                continue;
            }
            let rho = DiscreteMeasure::normalized(grid.to_vec(), w)?;
            let c = cost.evaluate_in(x, &rho, grid)?;
            if c == f64::INFINITY {
                continue;
            }
            worst = worst.max(f - rho.integrate_table(grid, psi_on_grid)? - c);
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttainmentReport {
    pub integrable: bool,
    pub class_ok: bool,
    pub admissible: bool,
    pub max_violation: f64,
    /// `(R, max_y conv_R ψ(y) − conv ψ(y))` for increasing radii.
    pub conv_r_schedule: Vec<(f64, f64)>,
    pub conv_r_monotone: bool,
    pub passed: bool,
}

/// Rechecks a dual solution as an optimal-pair witness.
pub fn attainment_witness(
    result: &DualResult,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: &dyn CostPlugin,
) -> Result<AttainmentReport> {
    let nu_psi = result.potential.integrate(nu)?;
    let integrable = nu_psi.is_finite();
    let order = match result.class.reduced(nu.dim()) {
        Some(false) => Order::Convex,
        Some(true) => Order::IncreasingConvex,
        None => result.class.order(),
    };
    let class_ok = result.potential.in_cone(&order);
    let grid = &result.grid;
    let max_violation = check_admissible(&result.conjugate_values, &result.psi_on_grid, mu, cost, grid, 32, 0x5eed)?;
    let admissible = max_violation <= ADMISSIBILITY_TOL;

    let f = GridFunction::new(grid.clone(), result.psi_on_grid.clone())?;
    let conv = convex_hull(&f);
    let diam = grid.iter().flat_map(|a| grid.iter().map(move |b| a.dist(b))).fold(0.0, f64::max);
    let base = if diam > 0.0 { diam } else { 1.0 };
    let radii: Vec<f64> = (0..6).map(|k| base * 2f64.powi(k - 4)).collect();
    let mut schedule = Vec::new();
    let mut prev: Option<Vec<f64>> = None;
    let mut monotone = true;
    for &r in &radii {
        let vals: Vec<f64> = grid.iter().map(|y| conv_r(&f, y, r)).collect::<Result<_>>()?;
        if let Some(p) = &prev {
            monotone &= vals.iter().zip(p).all(|(a, b)| *a <= b + 1e-9 * (1.0 + b.abs()));
        }
        let excess = vals.iter().zip(conv.values()).map(|(a, b)| a - b).fold(0.0, f64::max);
        schedule.push((r, excess));
        prev = Some(vals);
    }
    monotone &= schedule.last().is_none_or(|s| s.1 <= 1e-9);
    Ok(AttainmentReport {
        integrable,
        class_ok,
        admissible,
        max_violation,
        conv_r_schedule: schedule,
        conv_r_monotone: monotone,
        passed: integrable && class_ok && admissible && monotone,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrReport {
    /// `ψ^C` on the grid, the re-normalized potential.
    pub phi: GridFunction,
    /// Lipschitz constant of `φ` on the grid in the declared norm.
    pub lipschitz: f64,
    pub one_lipschitz: bool,
}

/// Replaces `ψ` by `ψ^C` on its own grid — for distance costs
/// `c(x, y) = ‖x − y‖` this is 1-Lipschitz — and measures the constant.
pub fn kr_renormalize(psi: &GridFunction, cost: &dyn CostPlugin, norm: NormKind) -> Result<KrReport> {
    let grid = psi.support();
    let phi: Vec<f64> =
        grid.iter().map(|x| conjugate_on_grid(psi.values(), cost, x, grid).map(|c| c.value)).collect::<Result<_>>()?;
    let mut lip: f64 = 0.0;
    for i in 0..grid.len() {
        for j in i + 1..grid.len() {
            let diff: Vec<f64> = grid[i].0.iter().zip(&grid[j].0).map(|(a, b)| a - b).collect();
            let dist = norm.norm(&diff);
            if dist > 0.0 {
                lip = lip.max((phi[i] - phi[j]).abs() / dist);
            }
        }
    }
    Ok(KrReport { phi: GridFunction::new(grid.to_vec(), phi)?, lipschitz: lip, one_lipschitz: lip <= 1.0 + 1e-8 })
}
