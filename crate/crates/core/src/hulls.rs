//! Convex and increasing convex envelopes of grid-sampled functions, the
//! ball-restricted hull `conv_R`, and infimal convolutions `inf_z ψ(z) + θ(x − z)`.
//!
//! Hulls are computed at grid points only; between grid points the
//! max-affine extension (see [`supporting_potential`]) defines the function.
//! `+∞` values are allowed and never enter a hull representation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::Point;
use crate::optim::{solve_lp, ConvexProgram, LinearProgram, LpStatus, RowSense, ScalarConvex};

/// Largest grid on which `(d+1)`-subset enumeration is used.
pub const ENUMERATION_LIMIT: usize = 40;

/// Serde helpers writing `+∞` as the string `"inf"` (and `−∞` as `"-inf"`).
pub mod ext_real {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    fn to_repr(v: f64) -> Repr {
        if v == f64::INFINITY {
            Repr::Str("inf".into())
        } else if v == f64::NEG_INFINITY {
            Repr::Str("-inf".into())
        } else {
            Repr::Num(v)
        }
    }

    fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(E::custom(format!("expected number or \"inf\", got {other:?}"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            v.iter().map(|x| to_repr(*x)).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Vec::<Repr>::deserialize(d)?.into_iter().map(from_repr).collect()
        }
    }
}

/// A function sampled on finitely many distinct points, values in `R ∪ {+∞}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridFunctionJson", into = "GridFunctionJson")]
pub struct GridFunction {
    support: Vec<Point>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridFunctionJson {
    support: Vec<Point>,
    #[serde(with = "ext_real::vec")]
    values: Vec<f64>,
}

impl TryFrom<GridFunctionJson> for GridFunction {
    type Error = Error;
    fn try_from(j: GridFunctionJson) -> Result<Self> {
        GridFunction::new(j.support, j.values)
    }
}

impl From<GridFunction> for GridFunctionJson {
    fn from(g: GridFunction) -> Self {
        GridFunctionJson { support: g.support, values: g.values }
    }
}

impl GridFunction {
    pub fn new(support: Vec<Point>, values: Vec<f64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::Domain(format!("{} grid points but {} values", support.len(), values.len())));
        }
        if support.is_empty() {
            return Err(Error::Domain("empty grid".into()));
        }
        let d = support[0].dim();
        for p in &support {
            if p.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
            }
        }
        for (i, p) in support.iter().enumerate() {
            if support[..i].contains(p) {
                return Err(Error::Domain(format!("repeated grid point {p:?}")));
            }
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(Error::Domain("values must be finite or +inf".into()));
        }
        if !values.iter().any(|v| v.is_finite()) {
            return Err(Error::Domain("at least one value must be finite".into()));
        }
        Ok(GridFunction { support, values })
    }

    pub fn on_line(xs: &[f64], values: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| Point::scalar(x)).collect(), values.to_vec())
    }

    pub fn from_fn<F: Fn(&Point) -> f64>(support: Vec<Point>, f: F) -> Result<Self> {
        let values = support.iter().map(&f).collect();
        Self::new(support, values)
    }

    pub fn support(&self) -> &[Point] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.support[0].dim()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn value_at(&self, y: &Point) -> Option<f64> {
        self.support.iter().position(|p| p == y).map(|i| self.values[i])
    }

    fn finite_atoms(&self) -> Vec<(&Point, f64)> {
        self.support.iter().zip(&self.values).filter(|(_, v)| v.is_finite()).map(|(p, v)| (p, *v)).collect()
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.support.clone(), values)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub slope: Point,
    pub intercept: f64,
}

impl AffinePiece {
    pub fn eval(&self, y: &Point) -> f64 {
        self.slope.dot(y) + self.intercept
    }
}

/// `ψ(y) = max_k slope_k · y + intercept_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxAffinePotential {
    pub pieces: Vec<AffinePiece>,
    pub monotone: bool,
}

impl MaxAffinePotential {
    pub fn new(pieces: Vec<AffinePiece>, monotone: bool) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Domain("a max-affine potential needs a piece".into()));
        }
        let d = pieces[0].slope.dim();
        for p in &pieces {
            if p.slope.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.slope.dim() });
            }
            if !p.intercept.is_finite() || p.slope.0.iter().any(|g| !g.is_finite()) {
                return Err(Error::Domain("non-finite affine piece".into()));
            }
            if monotone && p.slope.0.iter().any(|&g| g < 0.0) {
                return Err(Error::Domain("monotone potential with a negative slope".into()));
            }
        }
        Ok(MaxAffinePotential { pieces, monotone })
    }

    /// One-dimensional convenience: pieces `(slope, intercept)`.
    pub fn on_line(pieces: &[(f64, f64)], monotone: bool) -> Result<Self> {
        Self::new(pieces.iter().map(|&(g, b)| AffinePiece { slope: Point::scalar(g), intercept: b }).collect(), monotone)
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].slope.dim()
    }

    pub fn eval(&self, y: &Point) -> f64 {
        self.pieces.iter().map(|p| p.eval(y)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Slope of an active piece at `y`.
    pub fn subgradient(&self, y: &Point) -> &Point {
        let mut best = 0;
        let mut v = f64::NEG_INFINITY;
        for (k, p) in self.pieces.iter().enumerate() {
            let e = p.eval(y);
            if e > v {
                v = e;
                best = k;
            }
        }
        &self.pieces[best].slope
    }

    /// Largest Euclidean slope norm.
    pub fn lipschitz(&self) -> f64 {
        self.pieces.iter().map(|p| p.slope.norm2()).fold(0.0, f64::max)
    }

    pub fn on_grid(&self, grid: &[Point]) -> Result<GridFunction> {
        GridFunction::from_fn(grid.to_vec(), |y| self.eval(y))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    L1,
    L2,
    Linf,
}

impl NormKind {
    pub fn norm(&self, w: &[f64]) -> f64 {
        match self {
            NormKind::L1 => w.iter().map(|a| a.abs()).sum(),
            NormKind::L2 => w.iter().map(|a| a * a).sum::<f64>().sqrt(),
            NormKind::Linf => w.iter().map(|a| a.abs()).fold(0.0, f64::max),
        }
    }
}

/// Convex functions `θ` with known conjugates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexFn {
    /// `scale · ‖w‖`.
    Norm { norm: NormKind, scale: f64 },
    /// `scale · ‖w‖₂²`.
    SquaredNorm { scale: f64 },
    /// One-dimensional `max_j slopes[j]·w + intercepts[j]`.
    PiecewiseLinear { slopes: Vec<f64>, intercepts: Vec<f64> },
}

impl ConvexFn {
    pub fn abs() -> Self {
        ConvexFn::Norm { norm: NormKind::L2, scale: 1.0 }
    }

    pub fn square() -> Self {
        ConvexFn::SquaredNorm { scale: 1.0 }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            ConvexFn::Norm { scale, .. } | ConvexFn::SquaredNorm { scale } if !(*scale > 0.0 && scale.is_finite()) => {
                Err(Error::Domain(format!("scale {scale} must be positive")))
            }
            ConvexFn::PiecewiseLinear { slopes, intercepts } => {
                if dim != 1 {
                    return Err(Error::Unsupported("piecewise-linear θ is one-dimensional".into()));
                }
                if slopes.is_empty() || slopes.len() != intercepts.len() {
                    return Err(Error::Domain("piecewise-linear θ needs matching pieces".into()));
                }
                if slopes.iter().chain(intercepts).any(|v| !v.is_finite()) {
                    return Err(Error::Domain("non-finite piece".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, w: &[f64]) -> f64 {
        match self {
            ConvexFn::Norm { norm, scale } => scale * norm.norm(w),
            ConvexFn::SquaredNorm { scale } => scale * w.iter().map(|a| a * a).sum::<f64>(),
            ConvexFn::PiecewiseLinear { slopes, intercepts } => {
                slopes.iter().zip(intercepts).map(|(a, c)| a * w[0] + c).fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }
}

/// Lower convex hull `(x, f)` vertices of finite samples, sorted by `x`.
fn lower_hull_1d(mut pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        if let Some(last) = hull.last() {
            if last.0 == p.0 {
                continue; // same abscissa, larger value
            }
        }
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // Drop b when it lies on or above the chord a–p.
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

fn eval_hull_1d(hull: &[(f64, f64)], x: f64) -> f64 {
    let (first, last) = (hull[0], hull[hull.len() - 1]);
    if x < first.0 || x > last.0 {
        return f64::INFINITY;
    }
    let k = hull.partition_point(|v| v.0 < x);
    if k < hull.len() && hull[k].0 == x {
        return hull[k].1;
    }
    let (a, b) = (hull[k - 1], hull[k]);
    let t = (x - a.0) / (b.0 - a.0);
    a.1 + t * (b.1 - a.1)
}

/// `min Σ ξ_j f_j` over probability vectors on `atoms` with mean `= y`
/// (or `≥ y` coordinatewise when `increasing`). `None` when infeasible.
fn hull_lp(atoms: &[(&Point, f64)], y: &Point, increasing: bool) -> Result<Option<f64>> {
    let mut lp = LinearProgram::minimize();
    let vars: Vec<usize> = atoms.iter().map(|(_, f)| lp.add_nonneg(*f)).collect();
    lp.add_row(vars.iter().map(|&v| (v, 1.0)).collect(), RowSense::Eq, 1.0);
    let sense = if increasing { RowSense::Ge } else { RowSense::Eq };
    for k in 0..y.dim() {
        lp.add_row(vars.iter().zip(atoms).map(|(&v, (p, _))| (v, p.0[k])).collect(), sense, y.0[k]);
    }
    let sol = solve_lp(&lp)?;
    Ok(match sol.status {
        LpStatus::Optimal => Some(sol.objective),
        _ => None,
    })
}

/// Barycentric weights of `y` in the simplex spanned by `verts` (≤ 3 points
/// in the plane or ≤ 2 on the line), or `None` if outside or degenerate.
fn barycentric(verts: &[&Point], y: &Point) -> Option<Vec<f64>> {
    const TOL: f64 = 1e-12;
    match verts.len() {
        1 => (verts[0].dist(y) <= TOL * (1.0 + y.norm2())).then(|| vec![1.0]),
        2 => {
            let d = verts[1].sub(verts[0]);
            let len2 = d.norm2_sq();
            if len2 == 0.0 {
                return None;
            }
            let t = y.sub(verts[0]).dot(&d) / len2;
            if !(-TOL..=1.0 + TOL).contains(&t) {
                return None;
            }
            let t = t.clamp(0.0, 1.0);
            let proj: Vec<f64> = (0..y.dim()).map(|k| verts[0].0[k] + t * d.0[k]).collect();
            let scale = 1.0 + y.norm2() + d.norm2();
            (Point(proj).dist(y) <= 1e-10 * scale).then(|| vec![1.0 - t, t])
        }
        3 if y.dim() == 2 => {
            let (a, b, c) = (verts[0], verts[1], verts[2]);
            let (e1, e2, r) = (b.sub(a), c.sub(a), y.sub(a));
            let det = e1.0[0] * e2.0[1] - e1.0[1] * e2.0[0];
            let scale = e1.norm2() * e2.norm2();
            if det.abs() <= 1e-12 * scale || scale == 0.0 {
                return None;
            }
            let s = (r.0[0] * e2.0[1] - r.0[1] * e2.0[0]) / det;
            let t = (e1.0[0] * r.0[1] - e1.0[1] * r.0[0]) / det;
            let w = [1.0 - s - t, s, t];
            w.iter().all(|&v| v >= -TOL).then(|| w.iter().map(|v| v.max(0.0)).collect())
        }
        _ => None,
    }
}

fn enumerate_hull(atoms: &[(&Point, f64)], y: &Point) -> Option<f64> {
    let n = atoms.len();
    let mut best: Option<f64> = None;
    let mut consider = |idx: &[usize]| {
        let verts: Vec<&Point> = idx.iter().map(|&i| atoms[i].0).collect();
        if let Some(w) = barycentric(&verts, y) {
            let v: f64 = idx.iter().zip(&w).map(|(&i, wi)| wi * atoms[i].1).sum();
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    };
    for i in 0..n {
        consider(&[i]);
        for j in i + 1..n {
            consider(&[i, j]);
            if y.dim() == 2 {
                for k in j + 1..n {
                    consider(&[i, j, k]);
                }
            }
        }
    }
    best
}

fn hull_on_atoms(atoms: &[(&Point, f64)], y: &Point) -> Result<Option<f64>> {
    if atoms.is_empty() {
        return Ok(None);
    }
    if y.dim() <= 2 && atoms.len() <= ENUMERATION_LIMIT {
        Ok(enumerate_hull(atoms, y))
    } else {
        hull_lp(atoms, y, false)
    }
}

/// `inf { ξ(f) : ξ on ≤ d+1 grid points, mean ξ = y }`.
pub fn brute_force_hull(f: &GridFunction, y: &Point) -> Result<f64> {
    if y.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: y.dim() });
    }
    hull_on_atoms(&f.finite_atoms(), y)?.ok_or_else(|| Error::Domain(format!("{y:?} lies outside the convex hull of the grid")))
}

/// The convex envelope of `f` evaluated at every grid point (`+∞` where the
/// point is outside the hull of the finite samples).
pub fn convex_hull(f: &GridFunction) -> GridFunction {
    let atoms = f.finite_atoms();
    let values: Vec<f64> = if f.dim() == 1 {
        let hull = lower_hull_1d(atoms.iter().map(|(p, v)| (p.0[0], *v)).collect());
        f.support.iter().map(|p| eval_hull_1d(&hull, p.0[0])).collect()
    } else {
        f.support
            .iter()
            .zip(&f.values)
            .map(|(p, &v)| {
                let h = hull_lp(&atoms, p, false).ok().flatten().unwrap_or(f64::INFINITY);
                h.min(v)
            })
            .collect()
    };
    GridFunction { support: f.support.clone(), values }
}

/// The increasing convex envelope at grid points:
/// `inf { ρ(f) : ρ on the grid, mean ρ ≥ y coordinatewise }`.
pub fn iconvex_hull(f: &GridFunction) -> GridFunction {
    let values: Vec<f64> = if f.dim() == 1 {
        let conv = convex_hull(f);
        let mut order: Vec<usize> = (0..f.len()).collect();
        order.sort_by(|&a, &b| f.support[a].0[0].total_cmp(&f.support[b].0[0]));
        let mut out = vec![f64::INFINITY; f.len()];
        let mut running = f64::INFINITY;
        for &i in order.iter().rev() {
            running = running.min(conv.values[i]);
            out[i] = running;
        }
        out
    } else {
        let atoms = f.finite_atoms();
        f.support
            .iter()
            .zip(&f.values)
            .map(|(p, &v)| {
                let h = hull_lp(&atoms, p, true).ok().flatten().unwrap_or(f64::INFINITY);
                h.min(v)
            })
            .collect()
    };
    GridFunction { support: f.support.clone(), values }
}

/// Hull value at `y` using only grid points in the closed ball `B_R(y)`.
/// `R = f64::INFINITY` gives [`brute_force_hull`].
pub fn conv_r(f: &GridFunction, y: &Point, radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::Domain(format!("radius {radius} must be positive")));
    }
    if radius == f64::INFINITY {
        return brute_force_hull(f, y);
    }
    let atoms: Vec<(&Point, f64)> = f.finite_atoms().into_iter().filter(|(p, _)| p.dist(y) <= radius * (1.0 + 1e-12)).collect();
    match hull_on_atoms(&atoms, y)? {
        Some(v) => Ok(v),
        None => f.value_at(y).ok_or_else(|| Error::Domain(format!("{y:?} is not a grid point"))),
    }
}

/// Max-affine function agreeing with the (increasing) convex envelope at the
/// grid points where it is finite.
pub fn supporting_potential(f: &GridFunction, increasing: bool) -> Result<MaxAffinePotential> {
    let env = if increasing { iconvex_hull(f) } else { convex_hull(f) };
    let atoms: Vec<(&Point, f64)> =
        env.support.iter().zip(&env.values).filter(|(_, v)| v.is_finite()).map(|(p, v)| (p, *v)).collect();
    let d = f.dim();
    const SLOPE_CAP: f64 = 1e6;
    let mut pieces: Vec<AffinePiece> = Vec::new();
    for (y, _) in &atoms {
        // max a + g·y  s.t.  a + g·z ≤ env(z) on the grid.
        let mut lp = LinearProgram::maximize();
        let a = lp.add_free(1.0);
        let lo = if increasing { 0.0 } else { -SLOPE_CAP };
        let g: Vec<usize> = (0..d).map(|k| lp.add_var(y.0[k], lo, SLOPE_CAP)).collect();
        for (z, v) in &atoms {
            let mut row = vec![(a, 1.0)];
            row.extend((0..d).map(|k| (g[k], z.0[k])));
            lp.add_row(row, RowSense::Le, *v);
        }
        let sol = solve_lp(&lp)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Numerical("supporting hyperplane LP failed".into()));
        }
        let piece = AffinePiece { slope: Point(g.iter().map(|&k| sol.x[k]).collect()), intercept: sol.x[a] };
        if !pieces.contains(&piece) {
            pieces.push(piece);
        }
    }
    MaxAffinePotential::new(pieces, increasing)
}

fn unbounded() -> Error {
    Error::Domain("inf-convolution is unbounded below: the potential grows faster than θ".into())
}

/// `inf_z ψ(z) + θ(x − z)`, computed exactly through the dual
/// `max_{λ ∈ Δ} Σ_k λ_k ψ_k(x) − θ*(Σ_k λ_k g_k)`.
pub fn inf_convolution(psi: &MaxAffinePotential, theta: &ConvexFn, x: &Point) -> Result<f64> {
    let d = psi.dim();
    if x.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.dim() });
    }
    theta.validate(d)?;
    let aff: Vec<f64> = psi.pieces.iter().map(|p| p.eval(x)).collect();
    let mut lp = LinearProgram::maximize();
    let lam: Vec<usize> = aff.iter().map(|&a| lp.add_nonneg(a)).collect();
    lp.add_row(lam.iter().map(|&v| (v, 1.0)).collect(), RowSense::Eq, 1.0);
    let gbar = |k: usize| -> Vec<(usize, f64)> { lam.iter().zip(&psi.pieces).map(|(&v, p)| (v, p.slope.0[k])).collect() };
    match theta {
        ConvexFn::Norm { norm, scale } => {
            let s = *scale;
            let dual = match (norm, d) {
                (_, 1) | (NormKind::L1, _) => NormKind::Linf,
                (NormKind::Linf, _) => NormKind::L1,
                (NormKind::L2, _) => NormKind::L2,
            };
            match dual {
                NormKind::Linf | NormKind::L2 => {
                    // The L2 ball is reached from its enclosing cube by cuts.
                    for k in 0..d {
                        lp.add_row(gbar(k), RowSense::Le, s);
                        lp.add_row(gbar(k), RowSense::Ge, -s);
                    }
                }
                NormKind::L1 => {
                    let t: Vec<usize> = (0..d).map(|_| lp.add_nonneg(0.0)).collect();
                    for k in 0..d {
                        let mut up = gbar(k);
                        up.push((t[k], -1.0));
                        lp.add_row(up, RowSense::Le, 0.0);
                        let mut dn = gbar(k);
                        dn.push((t[k], 1.0));
                        lp.add_row(dn, RowSense::Ge, 0.0);
                    }
                    lp.add_row(t.iter().map(|&v| (v, 1.0)).collect(), RowSense::Le, s);
                }
            }
            for _ in 0..1000 {
                let sol = solve_lp(&lp)?;
                if sol.status != LpStatus::Optimal {
                    return Err(unbounded());
                }
                if dual != NormKind::L2 {
                    return Ok(sol.objective);
                }
                let g: Vec<f64> = (0..d).map(|k| gbar(k).iter().map(|&(v, a)| a * sol.x[v]).sum()).collect();
                let n = NormKind::L2.norm(&g);
                if n <= s * (1.0 + 1e-12) {
                    return Ok(sol.objective);
                }
                let mut row = Vec::new();
                for k in 0..d {
                    for (v, a) in gbar(k) {
                        row.push((v, a * g[k] / n));
                    }
                }
                lp.add_row(row, RowSense::Le, s);
            }
            Err(Error::Numerical("outer approximation of the dual ball did not converge".into()))
        }
        ConvexFn::SquaredNorm { scale } => {
            // min −Σ λ_k a_k + Σ_i (ḡ_i)² / (4 s)
            let mut lp = lp;
            lp.sense = crate::optim::ObjectiveSense::Minimize;
            for c in lp.objective.iter_mut() {
                *c = -*c;
            }
            let mut prog = ConvexProgram::new(lp);
            for k in 0..d {
                prog.add_term(gbar(k), 0.0, ScalarConvex::Square { scale: 0.25 / scale });
            }
            let sol = prog.solve()?;
            Ok(-sol.objective)
        }
        ConvexFn::PiecewiseLinear { slopes, intercepts } => {
            // θ*(g) = min { −Σ μ_j c_j : μ ∈ Δ, Σ μ_j α_j = g }.
            let mu: Vec<usize> = intercepts.iter().map(|&c| lp.add_nonneg(c)).collect();
            lp.add_row(mu.iter().map(|&v| (v, 1.0)).collect(), RowSense::Eq, 1.0);
            let mut row = gbar(0);
            row.extend(mu.iter().zip(slopes).map(|(&v, &a)| (v, -a)));
            lp.add_row(row, RowSense::Eq, 0.0);
            let sol = solve_lp(&lp)?;
            match sol.status {
                LpStatus::Optimal => Ok(sol.objective),
                _ => Err(unbounded()),
            }
        }
    }
}
