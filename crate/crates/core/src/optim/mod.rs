//! Shared optimization machinery: a dense two-phase simplex with dual values
//! and Farkas certificates, a convex-program layer that handles separable
//! quadratic terms by tangent cuts, Frank–Wolfe over polytopes and a
//! cutting-plane maximizer for concave functions.

pub mod cutting_plane;
pub mod frank_wolfe;
pub mod lp;
pub mod program;

pub use cutting_plane::{cutting_plane_max, Cut, CuttingPlaneOptions, CuttingPlaneResult};
pub use frank_wolfe::{frank_wolfe, ConvexProgramOracle, FrankWolfeOptions, FrankWolfeResult};
pub use lp::{
    solve_lp, FarkasCertificate, LinearConstraint, LinearProgram, LpOptions, LpSolution, LpStatus, ObjectiveSense, RowSense,
};
pub use program::{ConvexProgram, ProgramSolution, ScalarConvex, SeparableTerm};

use serde::{Deserialize, Serialize};

/// Every numerical threshold used across the crate, with its default.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Primal feasibility of LP solutions and couplings.
    pub feasibility: f64,
    /// Target gap of iterative solvers (Frank–Wolfe, cutting planes).
    pub gap: f64,
    /// Smallest accepted pivot magnitude in the simplex.
    pub pivot: f64,
    /// Reduced-cost threshold for simplex optimality.
    pub optimality: f64,
    /// Absolute tolerance of mean (martingale/submartingale) indicators.
    pub mean_indicator: f64,
    /// Separation margin below which an order verdict is a tie.
    pub margin: f64,
    /// Residual accepted on dilation-kernel constraints.
    pub kernel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feasibility: 1e-8,
            gap: 1e-6,
            pivot: 1e-10,
            optimality: 1e-10,
            mean_indicator: 1e-9,
            margin: 1e-9,
            kernel: 1e-8,
        }
    }
}
