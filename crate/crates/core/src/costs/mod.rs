//! Weak transport costs `C(x, ρ)`.
//!
//! Besides pointwise evaluation every plugin can *model* itself: given LP
//! variables `r_j ≥ 0` carrying the mass `m` of a conditional law on a grid,
//! it appends variables, rows and objective terms whose minimum equals
//! `m · C(x, r/m)`. The primal, conjugate, dual and projection programs are all
//! assembled from these row models. A plugin that cannot be modelled returns
//! `false` and is handled through its linearizations instead; such costs must
//! be finite-valued.

mod barycentric;
mod classical;
mod hull;
mod indicator;
mod mcov;
mod monotonicity;

pub use barycentric::{Barycentric, IcxPositivePart};
pub use classical::{ClassicalLinear, PointCost};
pub(crate) use hull::{add_domination, line_family};
pub use hull::{monopolist, MonotoneHull};
pub use indicator::{ConvexOrderIndicator, MartingaleIndicator, SubmartingaleIndicator};
pub use mcov::{gauss_hermite, mcov, NegativeMcov};
pub use monotonicity::{check_monotonicity, MonotonicityReport};

use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hulls::ConvexFn;
use crate::measures::{DiscreteMeasure, Point};
use crate::optim::{ConvexProgram, LinearProgram, LpStatus, RowSense};
use crate::orders::Order;

/// Absolute tolerance of the mean indicators.
pub const MEAN_TOLERANCE: f64 = 1e-9;

/// `b(y)` in bounds of the form `C(x, ρ) ≥ −(a + ρ(b))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFn {
    Zero,
    /// `scale · |y|²`
    SquaredNorm {
        scale: f64,
    },
    /// `scale · |y|`
    Norm {
        scale: f64,
    },
}

impl BoundFn {
    pub fn eval(&self, y: &Point) -> f64 {
        match *self {
            BoundFn::Zero => 0.0,
            BoundFn::SquaredNorm { scale } => scale * y.norm2_sq(),
            BoundFn::Norm { scale } => scale * y.norm2(),
        }
    }
}

/// Affine-in-ρ bound `a + ρ(b)` with constant `a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineBound {
    pub a: f64,
    pub b: BoundFn,
}

impl AffineBound {
    pub fn eval(&self, rho: &DiscreteMeasure) -> f64 {
        self.a + rho.integrate(|y| self.b.eval(y))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostMetadata {
    pub convex_in_rho: bool,
    pub cx_decreasing: bool,
    pub icx_decreasing: bool,
    /// Decreasing in this order (set for monotone hulls).
    pub cone_decreasing: Option<Order>,
    /// `C(x, ρ) ≥ −(a + ρ(b))`.
    pub lower_bound: Option<AffineBound>,
    /// `C(x, ρ) ≤ a + ρ(b)` (boundedness condition).
    pub upper_bound: Option<AffineBound>,
    /// The continuity condition is declared, not proven.
    pub continuity_declared: bool,
    pub finite_valued: bool,
    /// `C(x, ρ) = ρ(c(x, ·))`.
    pub linear: bool,
}

impl Default for CostMetadata {
    fn default() -> Self {
        CostMetadata {
            convex_in_rho: true,
            cx_decreasing: false,
            icx_decreasing: false,
            cone_decreasing: None,
            lower_bound: None,
            upper_bound: None,
            continuity_declared: true,
            finite_valued: true,
            linear: false,
        }
    }
}

impl CostMetadata {
    /// Whether the cost is declared decreasing in `order`.
    pub fn decreasing_in(&self, order: &Order) -> bool {
        use crate::orders::ConeFamily;
        match order {
            Order::Convex => self.cx_decreasing,
            Order::IncreasingConvex => self.icx_decreasing,
            Order::Cone(c) => {
                self.cone_decreasing.as_ref() == Some(order)
                    || (c.family == ConeFamily::Convex1d && self.cx_decreasing)
                    || (c.family == ConeFamily::Icx1d && self.icx_decreasing)
            }
        }
    }
}

/// Program under construction together with the grid the row lives on.
pub struct ModelCtx<'a> {
    pub prog: &'a mut ConvexProgram,
    pub grid: &'a [Point],
}

impl ModelCtx<'_> {
    pub fn lp(&mut self) -> &mut LinearProgram {
        &mut self.prog.lp
    }
}

pub trait CostPlugin: Send + Sync + Debug {
    fn name(&self) -> String;

    fn metadata(&self) -> CostMetadata;

    /// `C(x, ρ)`; `+∞` is a legitimate value.
    fn evaluate(&self, x: &Point, rho: &DiscreteMeasure) -> Result<f64>;

    /// Evaluation when `ρ` is known to live on `grid`; costs with inner
    /// programs over the grid override this.
    fn evaluate_in(&self, x: &Point, rho: &DiscreteMeasure, _grid: &[Point]) -> Result<f64> {
        self.evaluate(x, rho)
    }

    /// `g` on `grid` with `C(x, σ) ≥ C(x, ρ) + σ(g) − ρ(g)` for grid-supported
    /// σ; `None` where `C(x, ρ) = +∞`.
    fn linearize(&self, x: &Point, rho: &DiscreteMeasure, grid: &[Point]) -> Result<Option<Vec<f64>>> {
        linearize_by_model(self, x, rho, grid)
    }

    /// Appends the row model of `mass · C(x, r/mass)`; `Ok(false)` if the
    /// cost has no such model.
    fn model(&self, x: &Point, row: &[usize], mass: f64, ctx: &mut ModelCtx) -> Result<bool>;
}

pub type SharedCost = Arc<dyn CostPlugin>;

/// `v_k = m·x_k − Σ_j r_j g_jk` as (terms, offset) per coordinate.
pub(crate) fn residuals(x: &Point, row: &[usize], mass: f64, grid: &[Point]) -> Vec<(Vec<(usize, f64)>, f64)> {
    (0..x.dim())
        .map(|k| {
            let terms = row.iter().zip(grid).filter(|(_, g)| g.0[k] != 0.0).map(|(&r, g)| (r, -g.0[k])).collect();
            (terms, mass * x.0[k])
        })
        .collect()
}

/// Adds `t ≥ ±(expr + offset)` for a fresh `t ≥ 0` and returns `t`.
pub(crate) fn abs_var(lp: &mut LinearProgram, expr: &[(usize, f64)], offset: f64, cost: f64) -> usize {
    let t = lp.add_nonneg(cost);
    for s in [1.0, -1.0] {
        let mut row: Vec<(usize, f64)> = vec![(t, 1.0)];
        row.extend(expr.iter().map(|&(j, a)| (j, -s * a)));
        lp.add_row(row, RowSense::Ge, s * offset);
    }
    t
}

/// Index of each support point of `rho` in `grid`.
pub(crate) fn grid_weights(rho: &DiscreteMeasure, grid: &[Point]) -> Result<Vec<f64>> {
    rho.weights_on(grid)
}

/// Conditional-law program: `r_j ≥ 0` on `grid` with `Σ r_j = 1`, priced by
/// `prices`, plus the cost's row model. Returns the program, the `r` indices
/// and whether a model exists.
pub(crate) fn conditional_program(
    cost: &(impl CostPlugin + ?Sized),
    x: &Point,
    grid: &[Point],
    prices: &[f64],
) -> Result<(ConvexProgram, Vec<usize>, bool)> {
    let mut lp = LinearProgram::minimize();
    let row: Vec<usize> = prices.iter().map(|&p| lp.add_nonneg(p)).collect();
    lp.add_row(row.iter().map(|&r| (r, 1.0)).collect(), RowSense::Eq, 1.0);
    let mut prog = ConvexProgram::new(lp);
    let ok = cost.model(x, &row, 1.0, &mut ModelCtx { prog: &mut prog, grid })?;
    Ok((prog, row, ok))
}

/// Value and linearization through the row model with `r` pinned to `ρ`;
/// the pinning rows' duals form the linearization. `None` where the value
/// is `+∞`.
pub fn evaluate_by_model(
    cost: &(impl CostPlugin + ?Sized),
    x: &Point,
    rho: &DiscreteMeasure,
    grid: &[Point],
) -> Result<Option<(f64, Vec<f64>)>> {
    let w = grid_weights(rho, grid)?;
    let mut lp = LinearProgram::minimize();
    let row: Vec<usize> = w.iter().map(|_| lp.add_nonneg(0.0)).collect();
    let pins: Vec<usize> = row.iter().zip(&w).map(|(&r, &v)| lp.add_row(vec![(r, 1.0)], RowSense::Eq, v)).collect();
    let mut prog = ConvexProgram::new(lp);
    if !cost.model(x, &row, 1.0, &mut ModelCtx { prog: &mut prog, grid })? {
        return Err(Error::Unsupported(format!("{} has no row model", cost.name())));
    }
    let sol = prog.solve()?;
    match sol.status {
        LpStatus::Optimal => {
            let g = pins.iter().map(|&i| sol.last_lp.duals[i]).collect();
            Ok(Some((sol.objective, g)))
        }
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(Error::Numerical("cost model unbounded below".into())),
    }
}

pub(crate) fn linearize_by_model(
    cost: &(impl CostPlugin + ?Sized),
    x: &Point,
    rho: &DiscreteMeasure,
    grid: &[Point],
) -> Result<Option<Vec<f64>>> {
    Ok(evaluate_by_model(cost, x, rho, grid)?.map(|(_, g)| g))
}

fn check_dim(x: &Point, rho: &DiscreteMeasure) -> Result<()> {
    if x.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: rho.dim() });
    }
    Ok(())
}

/// JSON cost configuration: `{"cost": ..., "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cost", content = "params", rename_all = "snake_case")]
pub enum CostConfig {
    Barycentric {
        theta: ConvexFn,
    },
    Martingale {
        #[serde(default = "default_tol")]
        tol: f64,
    },
    CxoIndicator {
        #[serde(default = "default_tol")]
        tol: f64,
    },
    Submartingale {
        #[serde(default = "default_tol")]
        tol: f64,
    },
    IcxPos {
        #[serde(with = "crate::hulls::ext_real")]
        q: f64,
    },
    Monopolist {
        theta: ConvexFn,
    },
    NegMcov {
        #[serde(default = "default_nodes")]
        gauss_nodes: usize,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    Classical {
        c: PointCost,
    },
    MonotoneHull {
        inner: Box<CostConfig>,
        order: Order,
    },
}

fn default_tol() -> f64 {
    MEAN_TOLERANCE
}

fn default_nodes() -> usize {
    16
}

impl CostConfig {
    pub fn build(&self, dim: usize) -> Result<SharedCost> {
        Ok(match self {
            CostConfig::Barycentric { theta } => Arc::new(Barycentric::new(theta.clone(), dim)?),
            CostConfig::Martingale { tol } => Arc::new(MartingaleIndicator::new(*tol)),
            CostConfig::CxoIndicator { tol } => Arc::new(ConvexOrderIndicator::new(*tol)),
            CostConfig::Submartingale { tol } => Arc::new(SubmartingaleIndicator::new(*tol)),
            CostConfig::IcxPos { q } => Arc::new(IcxPositivePart::new(*q)?),
            CostConfig::Monopolist { theta } => Arc::new(monopolist(theta.clone(), dim)?),
            CostConfig::NegMcov { gauss_nodes, tol } => Arc::new(NegativeMcov::standard(dim, *gauss_nodes, *tol)?),
            CostConfig::Classical { c } => Arc::new(ClassicalLinear::try_new(c.clone())?),
            CostConfig::MonotoneHull { inner, order } => Arc::new(MonotoneHull::new(inner.build(dim)?, order.clone())),
        })
    }
}
