//! Convex, increasing convex and cone orders between discrete measures.
//!
//! `ρ₁ ⪯ ρ₂` is decided by an LP over couplings whose rows dominate their
//! source atom (mean-preserving for the convex order, mean-increasing for the
//! increasing convex order, generator-dominating for a cone). A positive
//! answer carries that kernel; a negative one carries a separating function
//! `f` in the dual cone with `ρ₁(f) − ρ₂(f) > 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hulls::{ext_real, AffinePiece, MaxAffinePotential};
use crate::measures::{compose, DiscreteMeasure, Kernel, Point};
use crate::optim::{solve_lp, LinearProgram, LpStatus, RowSense, Tolerances};

/// A scalar test function on points.
pub(crate) type TestFn = Box<dyn Fn(&Point) -> Result<f64>>;

/// A generating function of a cone on `Y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    Affine {
        slope: Vec<f64>,
        intercept: f64,
    },
    /// `(y[axis] − knot)₊`.
    Hinge {
        knot: f64,
        #[serde(default)]
        axis: usize,
    },
    /// Tabulated on finitely many points; evaluating elsewhere is an error.
    Table {
        support: Vec<Point>,
        #[serde(with = "ext_real::vec")]
        values: Vec<f64>,
    },
}

impl Generator {
    pub fn eval(&self, y: &Point) -> Result<f64> {
        match self {
            Generator::Affine { slope, intercept } => {
                if slope.len() != y.dim() {
                    return Err(Error::DimensionMismatch { expected: slope.len(), got: y.dim() });
                }
                Ok(slope.iter().zip(&y.0).map(|(a, b)| a * b).sum::<f64>() + intercept)
            }
            Generator::Hinge { knot, axis } => {
                let c = y.0.get(*axis).ok_or_else(|| Error::Domain(format!("hinge axis {axis} out of range for {y:?}")))?;
                Ok((c - knot).max(0.0))
            }
            Generator::Table { support, values } => {
                let i = support
                    .iter()
                    .position(|p| p == y)
                    .ok_or_else(|| Error::Domain(format!("table generator not defined at {y:?}")))?;
                let v = values[i];
                if !v.is_finite() {
                    return Err(Error::Domain("generators must be finite on the support".into()));
                }
                Ok(v)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeFamily {
    /// `{y, −y} ∪ {(y − k)₊}` with knots at the union of the supports.
    Convex1d,
    /// `{y} ∪ {(y − k)₊}`.
    Icx1d,
    Custom,
}

/// A finitely generated cone; constants are always included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub family: ConeFamily,
    #[serde(default)]
    pub generators: Vec<Generator>,
}

impl ConeSpec {
    pub fn convex() -> Self {
        ConeSpec { family: ConeFamily::Convex1d, generators: Vec::new() }
    }

    pub fn icx() -> Self {
        ConeSpec { family: ConeFamily::Icx1d, generators: Vec::new() }
    }

    pub fn custom(generators: Vec<Generator>) -> Self {
        ConeSpec { family: ConeFamily::Custom, generators }
    }

    /// Only constants: every pair is ordered.
    pub fn constants() -> Self {
        Self::custom(Vec::new())
    }

    /// Mean equality in dimension `d`: `{±e_k}`.
    pub fn mean_equality(d: usize) -> Self {
        let mut g = Vec::new();
        for k in 0..d {
            for s in [1.0, -1.0] {
                let mut slope = vec![0.0; d];
                slope[k] = s;
                g.push(Generator::Affine { slope, intercept: 0.0 });
            }
        }
        Self::custom(g)
    }

    /// The generator list used on the given points (families expand their
    /// hinge knots over the points; custom cones are returned as is).
    pub fn expand(&self, points: &[&Point]) -> Vec<Generator> {
        let mut knots: Vec<f64> = points.iter().map(|p| p.0[0]).collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let hinges = knots.into_iter().map(|k| Generator::Hinge { knot: k, axis: 0 });
        let id = |s: f64| Generator::Affine { slope: vec![s], intercept: 0.0 };
        match self.family {
            ConeFamily::Convex1d => [id(1.0), id(-1.0)].into_iter().chain(hinges).collect(),
            ConeFamily::Icx1d => std::iter::once(id(1.0)).chain(hinges).collect(),
            ConeFamily::Custom => self.generators.clone(),
        }
    }
}

/// One piece `a + Σ_k c_k f_k(y)` of a conic separating function, `c ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConicPiece {
    pub coefficients: Vec<f64>,
    pub constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeparatingFunction {
    MaxAffine(MaxAffinePotential),
    /// `max_i a_i + Σ_k c_ik f_k(y)`.
    Conic {
        generators: Vec<Generator>,
        pieces: Vec<ConicPiece>,
    },
}

impl SeparatingFunction {
    pub fn eval(&self, y: &Point) -> Result<f64> {
        match self {
            SeparatingFunction::MaxAffine(p) => Ok(p.eval(y)),
            SeparatingFunction::Conic { generators, pieces } => {
                let g: Vec<f64> = generators.iter().map(|f| f.eval(y)).collect::<Result<_>>()?;
                Ok(pieces
                    .iter()
                    .map(|p| p.constant + p.coefficients.iter().zip(&g).map(|(c, v)| c * v).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max))
            }
        }
    }

    pub fn integrate(&self, rho: &DiscreteMeasure) -> Result<f64> {
        let mut s = 0.0;
        for (p, w) in rho.iter() {
            s += w * self.eval(p)?;
        }
        Ok(s)
    }

    /// Structural membership in the declared cone.
    pub fn in_cone(&self, order: &Order) -> bool {
        match (self, order) {
            (SeparatingFunction::MaxAffine(_), Order::Convex) => true,
            (SeparatingFunction::MaxAffine(p), Order::IncreasingConvex) => {
                p.pieces.iter().all(|q| q.slope.0.iter().all(|&g| g >= 0.0))
            }
            (SeparatingFunction::Conic { pieces, .. }, Order::Cone(_)) => {
                pieces.iter().all(|q| q.coefficients.iter().all(|&c| c >= 0.0))
            }
            _ => false,
        }
    }
}

/// Outcome of an order check. Exactly one of `witness_kernel` and
/// `separating_function` is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderCertificate {
    pub verdict: bool,
    pub witness_kernel: Option<Kernel>,
    pub separating_function: Option<SeparatingFunction>,
    /// `ρ₁(f) − ρ₂(f)` of the separating function (0 when the order holds).
    pub margin: f64,
    /// Set when the verdict was decided by a tie within the margin threshold.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "order", rename_all = "snake_case")]
pub enum Order {
    Convex,
    IncreasingConvex,
    Cone(ConeSpec),
}

impl Order {
    /// Built-in families in one dimension go through their generator lists;
    /// in higher dimension they use the mean formulations.
    pub fn resolve(&self, dim: usize) -> Order {
        match self {
            Order::Cone(c) if dim >= 2 && c.family == ConeFamily::Convex1d => Order::Convex,
            Order::Cone(c) if dim >= 2 && c.family == ConeFamily::Icx1d => Order::IncreasingConvex,
            other => other.clone(),
        }
    }
}

/// Row-wise domination constraints `Σ_j P_ij (g(y_j) − g(x_i)) {=,≥} 0`,
/// as (sense, coefficient of P_ij for j over the target support) per source atom.
struct Domination {
    sense: RowSense,
    /// `diff[i][j] = g(y_j) − g(x_i)` for each constraint family member.
    diff: Vec<Vec<Vec<f64>>>,
    generators: Vec<Generator>,
}

fn domination(r1: &DiscreteMeasure, r2: &DiscreteMeasure, order: &Order) -> Result<Domination> {
    let d = r1.dim();
    let build = |g: &dyn Fn(&Point) -> Result<f64>| -> Result<Vec<Vec<f64>>> {
        let gx: Vec<f64> = r1.points().iter().map(g).collect::<Result<_>>()?;
        let gy: Vec<f64> = r2.points().iter().map(g).collect::<Result<_>>()?;
        Ok(gx.iter().map(|a| gy.iter().map(|b| b - a).collect()).collect())
    };
    match order {
        Order::Convex | Order::IncreasingConvex => {
            let mut diff = Vec::with_capacity(d);
            for k in 0..d {
                diff.push(build(&|p: &Point| Ok(p.0[k]))?);
            }
            let sense = if matches!(order, Order::Convex) { RowSense::Eq } else { RowSense::Ge };
            Ok(Domination { sense, diff, generators: Vec::new() })
        }
        Order::Cone(cone) => {
            let pts: Vec<&Point> = r1.points().iter().chain(r2.points()).collect();
            let generators = cone.expand(&pts);
            let mut diff = Vec::with_capacity(generators.len());
            for g in &generators {
                diff.push(build(&|p: &Point| g.eval(p))?);
            }
            Ok(Domination { sense: RowSense::Ge, diff, generators })
        }
    }
}

/// Transport LP with domination rows; `relax` adds slack on those rows and
/// minimizes the total violation instead.
fn kernel_lp(r1: &DiscreteMeasure, r2: &DiscreteMeasure, dom: &Domination, relax: bool) -> (LinearProgram, usize) {
    let (m, n) = (r1.len(), r2.len());
    let mut lp = LinearProgram::minimize();
    for _ in 0..m * n {
        lp.add_nonneg(0.0);
    }
    for i in 0..m {
        lp.add_row((0..n).map(|j| (i * n + j, 1.0)).collect(), RowSense::Eq, r1.weights()[i]);
    }
    for j in 0..n {
        lp.add_row((0..m).map(|i| (i * n + j, 1.0)).collect(), RowSense::Eq, r2.weights()[j]);
    }
    for fam in &dom.diff {
        for i in 0..m {
            let mut row: Vec<(usize, f64)> = (0..n).filter(|&j| fam[i][j] != 0.0).map(|j| (i * n + j, fam[i][j])).collect();
            if relax {
                let up = lp.add_nonneg(1.0);
                row.push((up, 1.0));
                if dom.sense == RowSense::Eq {
                    let dn = lp.add_nonneg(1.0);
                    row.push((dn, -1.0));
                }
            }
            lp.add_row(row, dom.sense, 0.0);
        }
    }
    (lp, m * n)
}

fn kernel_from_plan(r1: &DiscreteMeasure, r2: &DiscreteMeasure, x: &[f64]) -> Result<Kernel> {
    let n = r2.len();
    let rows = (0..r1.len())
        .map(|i| {
            let w: Vec<f64> = (0..n).map(|j| x[i * n + j].max(0.0)).collect();
            DiscreteMeasure::normalized(r2.points().to_vec(), w).map(Some)
        })
        .collect::<Result<_>>()?;
    Kernel::new(r1.points().to_vec(), rows)
}

/// `max ρ₁(f) − ρ₂(f)` over `f = max_i a_i + Σ_k c_ik (g_k(·) − g_k(x_i))` with
/// `c` in the normalization box (`[−1,1]` for equality families, `[0,1]` else).
fn separation(r1: &DiscreteMeasure, r2: &DiscreteMeasure, dom: &Domination, order: &Order) -> Result<SeparatingFunction> {
    let (m, n) = (r1.len(), r2.len());
    let kf = dom.diff.len();
    let mut lp = LinearProgram::maximize();
    let a: Vec<usize> = r1.weights().iter().map(|&w| lp.add_free(w)).collect();
    let b: Vec<usize> = r2.weights().iter().map(|&w| lp.add_free(w)).collect();
    let lo = if dom.sense == RowSense::Eq { -1.0 } else { 0.0 };
    let c: Vec<Vec<usize>> = (0..m).map(|_| (0..kf).map(|_| lp.add_var(0.0, lo, 1.0)).collect()).collect();
    for i in 0..m {
        for j in 0..n {
            let mut row = vec![(a[i], 1.0), (b[j], 1.0)];
            for k in 0..kf {
                let v = dom.diff[k][i][j];
                if v != 0.0 {
                    row.push((c[i][k], v));
                }
            }
            lp.add_row(row, RowSense::Le, 0.0);
        }
    }
    // Fix the additive normalization a ↦ a + t, b ↦ b − t.
    lp.add_row(vec![(b[0], 1.0)], RowSense::Eq, 0.0);
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Numerical("separation LP failed".into()));
    }
    let coef = |i: usize, k: usize| sol.x[c[i][k]];
    Ok(match order {
        Order::Convex | Order::IncreasingConvex => {
            let pieces = (0..m)
                .map(|i| {
                    let slope: Vec<f64> = (0..kf).map(|k| coef(i, k)).collect();
                    let x = &r1.points()[i];
                    let intercept = sol.x[a[i]] - slope.iter().zip(&x.0).map(|(g, v)| g * v).sum::<f64>();
                    AffinePiece { slope: Point(slope), intercept }
                })
                .collect();
            let monotone = matches!(order, Order::IncreasingConvex);
            SeparatingFunction::MaxAffine(MaxAffinePotential::new(pieces, monotone)?)
        }
        Order::Cone(_) => {
            let mut pieces = Vec::with_capacity(m);
            for i in 0..m {
                let x = &r1.points()[i];
                let coefficients: Vec<f64> = (0..kf).map(|k| coef(i, k)).collect();
                let mut constant = sol.x[a[i]];
                for (g, ck) in dom.generators.iter().zip(&coefficients) {
                    constant -= ck * g.eval(x)?;
                }
                pieces.push(ConicPiece { coefficients, constant });
            }
            SeparatingFunction::Conic { generators: dom.generators.clone(), pieces }
        }
    })
}

/// Decides `r1 ⪯ r2` in the given order.
pub fn check_order(r1: &DiscreteMeasure, r2: &DiscreteMeasure, order: &Order) -> Result<OrderCertificate> {
    check_order_with(r1, r2, order, &Tolerances::default())
}

pub fn check_order_with(r1: &DiscreteMeasure, r2: &DiscreteMeasure, order: &Order, tol: &Tolerances) -> Result<OrderCertificate> {
    if r1.dim() != r2.dim() {
        return Err(Error::DimensionMismatch { expected: r1.dim(), got: r2.dim() });
    }
    let order = order.resolve(r1.dim());
    let dom = domination(r1, r2, &order)?;
    let (lp, np) = kernel_lp(r1, r2, &dom, false);
    let sol = solve_lp(&lp)?;
    if sol.status == LpStatus::Optimal {
        let kernel = kernel_from_plan(r1, r2, &sol.x[..np])?;
        return Ok(OrderCertificate {
            verdict: true,
            witness_kernel: Some(kernel),
            separating_function: None,
            margin: 0.0,
            degenerate: false,
        });
    }
    let f = separation(r1, r2, &dom, &order)?;
    let margin = f.integrate(r1)? - f.integrate(r2)?;
    if margin > tol.margin {
        return Ok(OrderCertificate {
            verdict: false,
            witness_kernel: None,
            separating_function: Some(f),
            margin,
            degenerate: false,
        });
    }
    // Within the margin threshold: accept, with the least-violating kernel.
    let (lp, np) = kernel_lp(r1, r2, &dom, true);
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Numerical("relaxed kernel LP failed".into()));
    }
    Ok(OrderCertificate {
        verdict: true,
        witness_kernel: Some(kernel_from_plan(r1, r2, &sol.x[..np])?),
        separating_function: None,
        margin: margin.max(0.0),
        degenerate: true,
    })
}

pub fn check_convex_order(r1: &DiscreteMeasure, r2: &DiscreteMeasure) -> Result<OrderCertificate> {
    check_order(r1, r2, &Order::Convex)
}

pub fn check_icx_order(r1: &DiscreteMeasure, r2: &DiscreteMeasure) -> Result<OrderCertificate> {
    check_order(r1, r2, &Order::IncreasingConvex)
}

pub fn check_cone_order(r1: &DiscreteMeasure, r2: &DiscreteMeasure, cone: &ConeSpec) -> Result<OrderCertificate> {
    check_order(r1, r2, &Order::Cone(cone.clone()))
}

/// A kernel `k` with `μk = ν` whose rows dominate their source atoms.
pub fn dilation_kernel(mu: &DiscreteMeasure, nu: &DiscreteMeasure, order: &Order) -> Result<Kernel> {
    let cert = check_order(mu, nu, order)?;
    if cert.verdict {
        Ok(cert.witness_kernel.expect("positive verdicts carry a kernel"))
    } else {
        Err(Error::OrderViolation(Box::new(cert)))
    }
}

/// Largest violation of a witness kernel: marginal mismatch against `r2` and
/// row-wise domination failures on the order's constraint functions.
pub fn kernel_residual(r1: &DiscreteMeasure, r2: &DiscreteMeasure, kernel: &Kernel, order: &Order) -> Result<f64> {
    let order = order.resolve(r1.dim());
    let coupling = compose(r1, kernel)?;
    let got = coupling.nu();
    let mut worst: f64 = 0.0;
    let w2 = got.weights_on(r2.points()).unwrap_or_else(|_| vec![f64::INFINITY; r2.len()]);
    for (a, b) in w2.iter().zip(r2.weights()) {
        worst = worst.max((a - b).abs());
    }
    if got.points().iter().any(|p| !r2.points().contains(p)) {
        worst = f64::INFINITY;
    }
    let funcs: Vec<TestFn> = match &order {
        Order::Convex | Order::IncreasingConvex => {
            (0..r1.dim()).map(|k| Box::new(move |p: &Point| Ok(p.0[k])) as TestFn).collect()
        }
        Order::Cone(cone) => {
            let pts: Vec<&Point> = r1.points().iter().chain(r2.points()).collect();
            cone.expand(&pts).into_iter().map(|g| Box::new(move |p: &Point| g.eval(p)) as TestFn).collect()
        }
    };
    for (i, x) in r1.points().iter().enumerate() {
        let Some(row) = kernel.row(i) else { continue };
        for f in &funcs {
            let mut rf = 0.0;
            for (p, w) in row.iter() {
                rf += w * f(p)?;
            }
            let gap = rf - f(x)?;
            let viol = match order {
                Order::Convex => gap.abs(),
                _ => (-gap).max(0.0),
            };
            worst = worst.max(viol);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64], ws: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::on_line(xs, ws).unwrap()
    }

    fn third() -> f64 {
        1.0 / 3.0
    }

    #[test]
    fn convex_order_examples() {
        let spread = line(&[-1.0, 1.0], &[0.5, 0.5]);
        let c = check_convex_order(&DiscreteMeasure::dirac(0.0.into()), &spread).unwrap();
        assert!(c.verdict && c.separating_function.is_none());
        let row = c.witness_kernel.as_ref().unwrap().row(0).unwrap();
        assert_eq!(row, &spread);

        let c = check_convex_order(&DiscreteMeasure::dirac(1.0.into()), &DiscreteMeasure::dirac(0.0.into())).unwrap();
        assert!(!c.verdict && c.witness_kernel.is_none());
        assert!((c.margin - 1.0).abs() < 1e-12);
        let f = c.separating_function.unwrap();
        for y in [-2.0, 0.0, 3.0] {
            assert!((f.eval(&Point::scalar(y)).unwrap() - y).abs() < 1e-12);
        }

        let t = third();
        let c = check_convex_order(&line(&[-1.0, 0.0, 1.0], &[t, t, t]), &line(&[-2.0, 0.0, 2.0], &[t, t, t])).unwrap();
        assert!(c.verdict);
    }

    #[test]
    fn icx_order_examples() {
        let (d0, d1) = (DiscreteMeasure::dirac(0.0.into()), DiscreteMeasure::dirac(1.0.into()));
        let c = check_icx_order(&d0, &d1).unwrap();
        assert!(c.verdict);
        assert_eq!(c.witness_kernel.unwrap().row(0).unwrap(), &d1);
        let c = check_icx_order(&d1, &d0).unwrap();
        assert!(!c.verdict && (c.margin - 1.0).abs() < 1e-12);
        let f = c.separating_function.unwrap();
        assert!(f.in_cone(&Order::IncreasingConvex));
        assert!(check_icx_order(&line(&[0.0, 1.0], &[0.5, 0.5]), &line(&[0.0, 2.0], &[0.5, 0.5])).unwrap().verdict);
    }

    #[test]
    fn cone_order_examples() {
        let a = line(&[0.0, 3.0], &[0.5, 0.5]);
        let b = line(&[-4.0, 1.0, 9.0], &[0.2, 0.3, 0.5]);
        let c = check_cone_order(&a, &b, &ConeSpec::constants()).unwrap();
        assert!(c.verdict);
        let spread = line(&[-1.0, 1.0], &[0.5, 0.5]);
        let c = check_cone_order(&DiscreteMeasure::dirac(0.0.into()), &spread, &ConeSpec::mean_equality(1)).unwrap();
        assert!(c.verdict);
        let c = check_cone_order(&DiscreteMeasure::dirac(1.0.into()), &spread, &ConeSpec::mean_equality(1)).unwrap();
        assert!(!c.verdict);
        assert!(c.separating_function.unwrap().in_cone(&Order::Cone(ConeSpec::mean_equality(1))));
    }

    #[test]
    fn dilation_kernel_examples() {
        let spread = line(&[-1.0, 1.0], &[0.5, 0.5]);
        let k = dilation_kernel(&DiscreteMeasure::dirac(0.0.into()), &spread, &Order::Convex).unwrap();
        assert_eq!(k.row(0).unwrap(), &spread);

        let mu = line(&[-1.0, 1.0], &[0.5, 0.5]);
        let nu = line(&[-2.0, 2.0], &[0.5, 0.5]);
        let order = Order::Cone(ConeSpec::convex());
        let k = dilation_kernel(&mu, &nu, &order).unwrap();
        assert!(kernel_residual(&mu, &nu, &k, &order).unwrap() < 1e-12);
        let means: Vec<f64> = (0..2).map(|i| crate::measures::mean(k.row(i).unwrap()).0[0]).collect();
        assert!((means[0] + 1.0).abs() < 1e-12 && (means[1] - 1.0).abs() < 1e-12);

        let k = dilation_kernel(
            &DiscreteMeasure::dirac(0.0.into()),
            &DiscreteMeasure::dirac(1.0.into()),
            &Order::Cone(ConeSpec::icx()),
        )
        .unwrap();
        assert_eq!(k.row(0).unwrap(), &DiscreteMeasure::dirac(1.0.into()));

        let err = dilation_kernel(&nu, &mu, &Order::Convex).unwrap_err();
        assert!(matches!(err, Error::OrderViolation(c) if c.margin > 1e-9));
    }

    #[test]
    fn cone_spec_json() {
        let json = r#"{"family":"custom","generators":[
            {"kind":"affine","slope":[1.0],"intercept":0.0},
            {"kind":"hinge","knot":0.5,"axis":0},
            {"kind":"table","support":[[0.0],[1.0]],"values":[0.0,"inf"]}]}"#;
        let c: ConeSpec = serde_json::from_str(json).unwrap();
        assert_eq!(c.generators.len(), 3);
        let back: ConeSpec = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        let fam: ConeSpec = serde_json::from_str(r#"{"family":"convex1d"}"#).unwrap();
        assert_eq!(fam, ConeSpec::convex());
    }
}
