//! Finite measures on R^d, couplings between them and their disintegrations.
//!
//! All types are immutable after construction. Atoms lighter than
//! [`PRUNE_WEIGHT`] are dropped and coincident points are merged, so a
//! support is always a list of pairwise distinct points with positive mass.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Atoms with less mass than this are removed on construction.
pub const PRUNE_WEIGHT: f64 = 1e-14;
/// Accepted deviation of the total mass from one before renormalizing.
pub const MASS_TOLERANCE: f64 = 1e-9;
/// Marginal tolerance of a [`Coupling`].
pub const COUPLING_TOLERANCE: f64 = 1e-10;

/// A point of R^d.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn scalar(x: f64) -> Self {
        Point(vec![x])
    }

    pub fn zeros(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn norm2_sq(&self) -> f64 {
        self.0.iter().map(|a| a * a).sum()
    }

    pub fn norm2(&self) -> f64 {
        self.norm2_sq().sqrt()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.sub(other).norm2()
    }

    /// Coordinatewise `self <= other + tol`.
    pub fn le(&self, other: &Point, tol: f64) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| *a <= *b + tol)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            write!(f, "{}", self.0[0])
        } else {
            write!(f, "{:?}", self.0)
        }
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Point::scalar(x)
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

/// Weighted finite point cloud with total mass one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureJson", into = "MeasureJson")]
pub struct DiscreteMeasure {
    dim: usize,
    p: f64,
    points: Vec<Point>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    dim: usize,
    #[serde(default = "default_p")]
    p: f64,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

fn default_p() -> f64 {
    1.0
}

impl TryFrom<MeasureJson> for DiscreteMeasure {
    type Error = Error;

    fn try_from(raw: MeasureJson) -> Result<Self> {
        let points: Vec<Point> = raw.points.into_iter().map(Point).collect();
        if let Some(bad) = points.iter().find(|q| q.dim() != raw.dim) {
            return Err(Error::DimensionMismatch { expected: raw.dim, got: bad.dim() });
        }
        DiscreteMeasure::new(points, raw.weights)?.with_moment_order(raw.p)
    }
}

impl From<DiscreteMeasure> for MeasureJson {
    fn from(m: DiscreteMeasure) -> Self {
        MeasureJson { dim: m.dim, p: m.p, points: m.points.into_iter().map(|q| q.0).collect(), weights: m.weights }
    }
}

impl DiscreteMeasure {
    /// Builds a probability measure, pruning negligible atoms and merging
    /// coincident points. Total mass must be one within [`MASS_TOLERANCE`];
    /// the weights are then renormalized exactly.
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!("{} points but {} weights", points.len(), weights.len())));
        }
        if points.is_empty() {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        let dim = points[0].dim();
        if dim == 0 {
            return Err(Error::InvalidMeasure("points must have d >= 1".into()));
        }
        for q in &points {
            if q.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: q.dim() });
            }
            if q.0.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidMeasure(format!("non-finite point {q:?}")));
            }
        }
        for &w in &weights {
            if !w.is_finite() || w < -MASS_TOLERANCE {
                return Err(Error::InvalidMeasure(format!("invalid weight {w}")));
            }
        }
        let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("total mass {total} != 1")));
        }
        Ok(Self::assemble(dim, points, weights))
    }

    /// Like [`DiscreteMeasure::new`] but rescales any positive total mass to one.
    pub fn normalized(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidMeasure(format!("total mass {total}")));
        }
        let scaled = weights.iter().map(|w| w.max(0.0) / total).collect();
        Self::new(points, scaled)
    }

    fn assemble(dim: usize, points: Vec<Point>, weights: Vec<f64>) -> Self {
        let mut merged_points: Vec<Point> = Vec::with_capacity(points.len());
        let mut merged_weights: Vec<f64> = Vec::with_capacity(points.len());
        for (q, w) in points.into_iter().zip(weights) {
            let w = w.max(0.0);
            match merged_points.iter().position(|r| *r == q) {
                Some(i) => merged_weights[i] += w,
                None => {
                    merged_points.push(q);
                    merged_weights.push(w);
                }
            }
        }
        let keep: Vec<usize> = (0..merged_points.len()).filter(|&i| merged_weights[i] >= PRUNE_WEIGHT).collect();
        let total: f64 = keep.iter().map(|&i| merged_weights[i]).sum();
        let points = keep.iter().map(|&i| merged_points[i].clone()).collect();
        let weights = keep.iter().map(|&i| merged_weights[i] / total).collect();
        DiscreteMeasure { dim, p: 1.0, points, weights }
    }

    pub fn dirac(point: Point) -> Self {
        let dim = point.dim();
        DiscreteMeasure { dim, p: 1.0, points: vec![point], weights: vec![1.0] }
    }

    /// Uniform measure on the given points (duplicates merge their mass).
    pub fn uniform(points: Vec<Point>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0 / n as f64; n])
    }

    /// Convenience constructor for one-dimensional measures.
    pub fn on_line(xs: &[f64], weights: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| Point::scalar(x)).collect(), weights.to_vec())
    }

    pub fn with_moment_order(mut self, p: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidMeasure(format!("moment order {p} < 1")));
        }
        self.p = p;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn moment_order(&self) -> f64 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }

    /// Integral of `f` against the measure.
    pub fn integrate<F: FnMut(&Point) -> f64>(&self, mut f: F) -> f64 {
        self.iter().map(|(q, w)| w * f(q)).sum()
    }

    /// Integral of a function tabulated on `grid`; every atom must lie on the grid.
    pub fn integrate_table(&self, grid: &[Point], values: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (q, w) in self.iter() {
            let i = grid.iter().position(|g| g == q).ok_or_else(|| Error::SupportMismatch(format!("atom {q:?} not on grid")))?;
            total += w * values[i];
        }
        Ok(total)
    }

    /// Weights of this measure on `grid` (zero off the support).
    pub fn weights_on(&self, grid: &[Point]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; grid.len()];
        for (q, w) in self.iter() {
            let i = grid.iter().position(|g| g == q).ok_or_else(|| Error::SupportMismatch(format!("atom {q:?} not on grid")))?;
            out[i] += w;
        }
        Ok(out)
    }

    /// αρ1 + (1−α)ρ2.
    pub fn mix(&self, other: &DiscreteMeasure, alpha: f64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut points = self.points.clone();
        points.extend(other.points.iter().cloned());
        let mut weights: Vec<f64> = self.weights.iter().map(|w| alpha * w).collect();
        weights.extend(other.weights.iter().map(|w| (1.0 - alpha) * w));
        Self::new(points, weights)
    }

    pub fn second_moment(&self) -> f64 {
        self.integrate(|q| q.norm2_sq())
    }
}

/// Weighted average of the atoms.
pub fn mean(rho: &DiscreteMeasure) -> Point {
    let mut m = vec![0.0; rho.dim()];
    for (q, w) in rho.iter() {
        for (acc, c) in m.iter_mut().zip(q.coords()) {
            *acc += w * c;
        }
    }
    Point(m)
}

/// Σ w_i |y_i|^p with the Euclidean norm.
pub fn p_moment(rho: &DiscreteMeasure, p: f64) -> f64 {
    rho.integrate(|q| q.norm2().powf(p))
}

/// Joint law on supp(μ) × supp(ν).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CouplingJson", into = "CouplingJson")]
pub struct Coupling {
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    matrix: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct CouplingJson {
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    matrix: Vec<Vec<f64>>,
}

impl TryFrom<CouplingJson> for Coupling {
    type Error = Error;
    fn try_from(raw: CouplingJson) -> Result<Self> {
        Coupling::new(raw.mu, raw.nu, raw.matrix)
    }
}

impl From<Coupling> for CouplingJson {
    fn from(c: Coupling) -> Self {
        CouplingJson { mu: c.mu, nu: c.nu, matrix: c.matrix }
    }
}

impl Coupling {
    /// Validates marginals within [`COUPLING_TOLERANCE`]. Entries in
    /// `(-1e-12, 0)` are clipped to zero.
    pub fn new(mu: DiscreteMeasure, nu: DiscreteMeasure, matrix: Vec<Vec<f64>>) -> Result<Self> {
        if matrix.len() != mu.len() || matrix.iter().any(|r| r.len() != nu.len()) {
            return Err(Error::InvalidCoupling(format!("matrix shape does not match {}x{}", mu.len(), nu.len())));
        }
        let mut matrix = matrix;
        for row in &mut matrix {
            for v in row.iter_mut() {
                if !v.is_finite() || *v < -1e-12 {
                    return Err(Error::InvalidCoupling(format!("invalid entry {v}")));
                }
                *v = v.max(0.0);
            }
        }
        for (i, row) in matrix.iter().enumerate() {
            let s: f64 = row.iter().sum();
            if (s - mu.weights()[i]).abs() > COUPLING_TOLERANCE {
                return Err(Error::InvalidCoupling(format!("row {i} sums to {s}, expected {}", mu.weights()[i])));
            }
        }
        for j in 0..nu.len() {
            let s: f64 = matrix.iter().map(|r| r[j]).sum();
            if (s - nu.weights()[j]).abs() > COUPLING_TOLERANCE {
                return Err(Error::InvalidCoupling(format!("column {j} sums to {s}, expected {}", nu.weights()[j])));
            }
        }
        Ok(Coupling { mu, nu, matrix })
    }

    pub fn product(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Self {
        let matrix = mu.weights().iter().map(|a| nu.weights().iter().map(|b| a * b).collect()).collect();
        Coupling { mu: mu.clone(), nu: nu.clone(), matrix }
    }

    pub fn mu(&self) -> &DiscreteMeasure {
        &self.mu
    }

    pub fn nu(&self) -> &DiscreteMeasure {
        &self.nu
    }

    pub fn first_support(&self) -> &[Point] {
        self.mu.points()
    }

    pub fn second_support(&self) -> &[Point] {
        self.nu.points()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    /// Largest absolute marginal residual.
    pub fn marginal_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in self.matrix.iter().enumerate() {
            worst = worst.max((row.iter().sum::<f64>() - self.mu.weights()[i]).abs());
        }
        for j in 0..self.nu.len() {
            let s: f64 = self.matrix.iter().map(|r| r[j]).sum();
            worst = worst.max((s - self.nu.weights()[j]).abs());
        }
        worst
    }
}

/// Conditional laws π_x indexed by the source atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub source_support: Vec<Point>,
    /// `None` marks a source atom without mass, whose row is undefined.
    pub rows: Vec<Option<DiscreteMeasure>>,
}

impl Kernel {
    pub fn new(source_support: Vec<Point>, rows: Vec<Option<DiscreteMeasure>>) -> Result<Self> {
        if source_support.len() != rows.len() {
            return Err(Error::SupportMismatch(format!("{} sources but {} rows", source_support.len(), rows.len())));
        }
        Ok(Kernel { source_support, rows })
    }

    /// Every source atom sent to the same law.
    pub fn constant(source_support: Vec<Point>, row: &DiscreteMeasure) -> Self {
        let rows = vec![Some(row.clone()); source_support.len()];
        Kernel { source_support, rows }
    }

    pub fn row(&self, i: usize) -> Option<&DiscreteMeasure> {
        self.rows[i].as_ref()
    }
}

/// Splits a coupling into its first marginal and the row-normalized kernel.
pub fn disintegrate(c: &Coupling) -> (DiscreteMeasure, Kernel) {
    let rows = c
        .matrix
        .iter()
        .map(|row| {
            let mass: f64 = row.iter().sum();
            if mass < PRUNE_WEIGHT {
                return None;
            }
            let weights: Vec<f64> = row.iter().map(|v| v / mass).collect();
            Some(DiscreteMeasure::assemble(c.nu.dim(), c.nu.points().to_vec(), weights))
        })
        .collect();
    (c.mu.clone(), Kernel { source_support: c.mu.points().to_vec(), rows })
}

/// Measure–kernel composition: the coupling μ(dx) k_x(dz).
pub fn compose(mu: &DiscreteMeasure, k: &Kernel) -> Result<Coupling> {
    if k.source_support.as_slice() != mu.points() {
        return Err(Error::SupportMismatch("kernel source support differs from measure support".into()));
    }
    let mut target: Vec<Point> = Vec::new();
    for row in k.rows.iter().flatten() {
        for q in row.points() {
            if !target.contains(q) {
                target.push(q.clone());
            }
        }
    }
    let mut matrix = vec![vec![0.0; target.len()]; mu.len()];
    for (i, (w, row)) in mu.weights().iter().zip(&k.rows).enumerate() {
        let row = row.as_ref().ok_or_else(|| Error::SupportMismatch(format!("kernel row {i} is empty but carries mass {w}")))?;
        for (q, v) in row.iter() {
            let j = target.iter().position(|t| t == q).expect("collected above");
            matrix[i][j] += w * v;
        }
    }
    let marginal: Vec<f64> = (0..target.len()).map(|j| matrix.iter().map(|r| r[j]).sum()).collect();
    let dim = target.first().map_or(mu.dim(), Point::dim);
    let nu = DiscreteMeasure::assemble(dim, target.clone(), marginal);
    // Pruning may drop columns of negligible mass; keep the matrix aligned.
    let matrix = matrix
        .into_iter()
        .map(|r| nu.points().iter().map(|q| r[target.iter().position(|t| t == q).unwrap()]).collect())
        .collect();
    Coupling::new(mu.clone(), nu, matrix)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64], ws: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::on_line(xs, ws).unwrap()
    }

    #[test]
    fn construction_prunes_and_merges() {
        let m = line(&[0.0, 1.0, 0.0, 2.0], &[0.25, 0.5, 0.25, 1e-16]);
        assert_eq!(m.len(), 2);
        assert_eq!(m.weights(), &[0.5, 0.5]);
        assert!(DiscreteMeasure::on_line(&[0.0], &[0.9]).is_err());
        assert!(DiscreteMeasure::on_line(&[0.0, 1.0], &[1.5, -0.5]).is_err());
        assert!(DiscreteMeasure::on_line(&[f64::NAN], &[1.0]).is_err());
    }

    #[test]
    fn json_schema_round_trip() {
        let text = r#"{"dim":1,"p":2,"points":[[-1.0],[1.0]],"weights":[0.5,0.5]}"#;
        let m: DiscreteMeasure = serde_json::from_str(text).unwrap();
        assert_eq!(m.moment_order(), 2.0);
        let back = serde_json::to_string(&m).unwrap();
        assert_eq!(back, text.replace("\"p\":2", "\"p\":2.0"));
        let bad = r#"{"dim":2,"points":[[1.0]],"weights":[1.0]}"#;
        assert!(serde_json::from_str::<DiscreteMeasure>(bad).is_err());
    }

    #[test]
    fn mean_examples() {
        assert_eq!(mean(&line(&[-1.0, 1.0], &[0.5, 0.5])).0, vec![0.0]);
        assert_eq!(mean(&DiscreteMeasure::dirac(Point::scalar(2.5))).0, vec![2.5]);
        assert_eq!(mean(&line(&[0.0, 4.0], &[0.25, 0.75])).0, vec![3.0]);
    }

    #[test]
    fn p_moment_examples() {
        assert_eq!(p_moment(&DiscreteMeasure::dirac(Point::scalar(0.0)), 2.0), 0.0);
        let sym = line(&[-1.0, 1.0], &[0.5, 0.5]);
        assert_eq!(p_moment(&sym, 2.0), 1.0);
        assert_eq!(p_moment(&sym, 1.0), 1.0);
    }

    #[test]
    fn disintegrate_product_gives_constant_rows() {
        let mu = line(&[0.0, 1.0], &[0.3, 0.7]);
        let nu = line(&[-1.0, 2.0, 5.0], &[0.2, 0.5, 0.3]);
        let (m, k) = disintegrate(&Coupling::product(&mu, &nu));
        assert_eq!(m, mu);
        for row in &k.rows {
            let row = row.as_ref().unwrap();
            for (a, b) in row.weights().iter().zip(nu.weights()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn disintegrate_diagonal_and_hand_example() {
        let mu = line(&[0.0, 1.0], &[0.5, 0.5]);
        let diag = Coupling::new(mu.clone(), mu.clone(), vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let (_, k) = disintegrate(&diag);
        assert_eq!(k.rows[0].as_ref().unwrap().points(), &[Point::scalar(0.0)]);
        assert_eq!(k.rows[1].as_ref().unwrap().points(), &[Point::scalar(1.0)]);

        let nu = line(&[0.0, 1.0], &[0.25, 0.75]);
        let c = Coupling::new(mu, nu, vec![vec![0.25, 0.25], vec![0.0, 0.5]]).unwrap();
        let (_, k) = disintegrate(&c);
        assert_eq!(k.rows[0].as_ref().unwrap().weights(), &[0.5, 0.5]);
        let r1 = k.rows[1].as_ref().unwrap();
        assert_eq!(r1.points(), &[Point::scalar(1.0)]);
        assert_eq!(r1.weights(), &[1.0]);
    }

    #[test]
    fn zero_mass_rows_are_flagged() {
        let mu = DiscreteMeasure::dirac(Point::scalar(0.0));
        let nu = DiscreteMeasure::dirac(Point::scalar(1.0));
        let c = Coupling::new(mu, nu, vec![vec![1.0]]).unwrap();
        let mut c2 = c.clone();
        c2.matrix.push(vec![0.0]);
        c2.mu.points.push(Point::scalar(9.0));
        c2.mu.weights.push(0.0);
        let (_, k) = disintegrate(&c2);
        assert!(k.rows[0].is_some());
        assert!(k.rows[1].is_none());
    }

    #[test]
    fn compose_examples() {
        let src = DiscreteMeasure::dirac(Point::scalar(0.0));
        let spread = line(&[-1.0, 1.0], &[0.5, 0.5]);
        let k = Kernel::constant(src.points().to_vec(), &spread);
        let c = compose(&src, &k).unwrap();
        assert_eq!(c.nu(), &spread);

        let mu = line(&[0.0, 1.0], &[0.5, 0.5]);
        let nu = line(&[2.0, 3.0], &[0.4, 0.6]);
        let k = Kernel::constant(mu.points().to_vec(), &nu);
        let c = compose(&mu, &k).unwrap();
        let prod = Coupling::product(&mu, &nu);
        for (a, b) in c.matrix().iter().flatten().zip(prod.matrix().iter().flatten()) {
            assert!((a - b).abs() < 1e-15);
        }

        let wrong = Kernel::constant(vec![Point::scalar(5.0)], &nu);
        assert!(compose(&mu, &wrong).is_err());
    }
}
