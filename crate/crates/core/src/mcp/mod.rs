//! Mixed complementarity problems and a semismooth Newton solver.
//!
//! A problem is a box `l ≤ w ≤ u` together with a map `F`. A point `w` solves
//! it when, for every component, either `l_j < w_j < u_j` and `F_j(w) = 0`,
//! or `w_j = l_j` and `F_j(w) ≥ 0`, or `w_j = u_j` and `F_j(w) ≤ 0`.
//!
//! The solver works on the Fischer–Burmeister reformulation `Φ(w) = 0` (see
//! [`semismooth_residual`]) and takes damped Newton steps on the merit
//! `½‖Φ‖²`.

mod check;
mod fb;
pub mod linalg;
mod solver;

pub use check::check_jacobian;
pub use fb::{fischer_burmeister, fischer_burmeister_grad, semismooth_jacobian, semismooth_residual};
pub use linalg::DenseMatrix;
pub use solver::{solve_mcp, solve_mcp_traced, IterationRecord, JsonLinesTrace};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McpError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid bounds at index {index}: lower {lower} > upper {upper}")]
    Bounds { index: usize, lower: f64, upper: f64 },
    #[error("invalid solver option `{field}`: {reason}")]
    Option { field: &'static str, reason: String },
}

/// Box constraints on the MCP variables. Infinite entries mean "unbounded".
#[derive(Debug, Clone, PartialEq)]
pub struct VariableBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Which sides of the box are finite for one variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Free,
    Lower,
    Upper,
    Both,
}

impl VariableBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, McpError> {
        if lower.len() != upper.len() {
            return Err(McpError::Dimension {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (index, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u {
                return Err(McpError::Bounds {
                    index,
                    lower: l,
                    upper: u,
                });
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn free(n: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn nonnegative(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn kind(&self, j: usize) -> BoundKind {
        match (self.lower[j].is_finite(), self.upper[j].is_finite()) {
            (false, false) => BoundKind::Free,
            (true, false) => BoundKind::Lower,
            (false, true) => BoundKind::Upper,
            (true, true) => BoundKind::Both,
        }
    }

    pub fn clamp(&self, w: &mut [f64]) {
        for ((x, &l), &u) in w.iter_mut().zip(&self.lower).zip(&self.upper) {
            *x = x.clamp(l, u);
        }
    }

    /// Largest distance of `w` outside the box.
    pub fn violation(&self, w: &[f64]) -> f64 {
        w.iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .map(|((&x, &l), &u)| (l - x).max(x - u).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// A mixed complementarity problem: a box and a continuously differentiable
/// map `F` with its Jacobian.
pub trait McProblem {
    fn dim(&self) -> usize;
    fn bounds(&self) -> &VariableBounds;
    /// Writes `F(w)` into `out`.
    fn residual(&self, w: &[f64], out: &mut [f64]);
    /// Writes `∂F/∂w` into `out`, which arrives zeroed.
    fn jacobian(&self, w: &[f64], out: &mut DenseMatrix);
    /// Symmetric permutation applied to the Newton systems before
    /// factorization: position `i` of the reordered system holds variable
    /// `order[i]`. Problems with a banded structure under some ordering run
    /// much faster with it; the iterates do not depend on it beyond rounding.
    fn ordering(&self) -> Option<Vec<usize>> {
        None
    }
}

/// Problem backed by closures. Mostly useful for small hand-built problems.
pub struct FnProblem<R, J> {
    bounds: VariableBounds,
    residual: R,
    jacobian: J,
}

impl<R, J> FnProblem<R, J>
where
    R: Fn(&[f64], &mut [f64]),
    J: Fn(&[f64], &mut DenseMatrix),
{
    pub fn new(bounds: VariableBounds, residual: R, jacobian: J) -> Self {
        Self {
            bounds,
            residual,
            jacobian,
        }
    }
}

impl<R, J> McProblem for FnProblem<R, J>
where
    R: Fn(&[f64], &mut [f64]),
    J: Fn(&[f64], &mut DenseMatrix),
{
    fn dim(&self) -> usize {
        self.bounds.len()
    }
    fn bounds(&self) -> &VariableBounds {
        &self.bounds
    }
    fn residual(&self, w: &[f64], out: &mut [f64]) {
        (self.residual)(w, out)
    }
    fn jacobian(&self, w: &[f64], out: &mut DenseMatrix) {
        (self.jacobian)(w, out)
    }
}

/// Affine problem `F(w) = M w + q`.
#[derive(Debug, Clone)]
pub struct AffineProblem {
    pub matrix: DenseMatrix,
    pub offset: Vec<f64>,
    pub bounds: VariableBounds,
}

impl McProblem for AffineProblem {
    fn dim(&self) -> usize {
        self.offset.len()
    }
    fn bounds(&self) -> &VariableBounds {
        &self.bounds
    }
    fn residual(&self, w: &[f64], out: &mut [f64]) {
        self.matrix.mul_vec(w, out);
        for (o, q) in out.iter_mut().zip(&self.offset) {
            *o += q;
        }
    }
    fn jacobian(&self, _w: &[f64], out: &mut DenseMatrix) {
        out.copy_from(&self.matrix);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Convergence threshold on `‖Φ(w)‖∞` with no smoothing.
    pub tol_residual: f64,
    pub max_iterations: usize,
    pub fb_smoothing_start: f64,
    /// Multiplier applied to the smoothing parameter after each accepted step.
    pub fb_smoothing_shrink: f64,
    pub levenberg_lambda0: f64,
    pub line_search_backtrack: f64,
    pub line_search_min_step: f64,
    pub armijo_c: f64,
    /// Number of recent merit values the Armijo test compares against; 1 is
    /// the classical monotone search.
    pub nonmonotone_memory: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_residual: 1e-6,
            max_iterations: 100,
            fb_smoothing_start: 1e-2,
            fb_smoothing_shrink: 0.2,
            levenberg_lambda0: 1e-8,
            line_search_backtrack: 0.5,
            line_search_min_step: 1e-10,
            armijo_c: 1e-4,
            nonmonotone_memory: 5,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), McpError> {
        let positive = [
            ("tol_residual", self.tol_residual),
            ("levenberg_lambda0", self.levenberg_lambda0),
            ("line_search_min_step", self.line_search_min_step),
            ("armijo_c", self.armijo_c),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(McpError::Option {
                    field,
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        if self.tol_residual >= 1.0 {
            return Err(McpError::Option {
                field: "tol_residual",
                reason: "must be below 1".into(),
            });
        }
        if self.nonmonotone_memory == 0 {
            return Err(McpError::Option {
                field: "nonmonotone_memory",
                reason: "must be at least 1".into(),
            });
        }
        if self.max_iterations == 0 {
            return Err(McpError::Option {
                field: "max_iterations",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.fb_smoothing_start >= 0.0) {
            return Err(McpError::Option {
                field: "fb_smoothing_start",
                reason: "must be nonnegative".into(),
            });
        }
        if !(0.0..1.0).contains(&self.fb_smoothing_shrink) {
            return Err(McpError::Option {
                field: "fb_smoothing_shrink",
                reason: "must lie in [0, 1)".into(),
            });
        }
        if !(self.line_search_backtrack > 0.0 && self.line_search_backtrack < 1.0) {
            return Err(McpError::Option {
                field: "line_search_backtrack",
                reason: "must lie in (0, 1)".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    LineSearchFailure,
    SingularSystem,
}

impl SolveStatus {
    pub fn is_converged(self) -> bool {
        self == SolveStatus::Converged
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSolution {
    pub w_star: Vec<f64>,
    pub status: SolveStatus,
    /// `‖Φ(w_star)‖∞` with no smoothing.
    pub residual_inf_norm: f64,
    pub iterations: usize,
}
