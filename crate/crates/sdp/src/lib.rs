//! Semidefinite programming for small and medium block-diagonal problems.
//!
//! [`SdpProblem`] is the shared problem representation. It is solved by a
//! dense primal-dual interior-point method ([`solve_interior_point`]) or by a
//! first-order operator-splitting method on the homogeneous self-dual
//! embedding ([`solve_splitting`]), and can be written to / read from the SDPA
//! sparse text format ([`sdpa`]) for external solvers.

pub mod ipm;
pub mod problem;
pub mod sdpa;
pub mod splitting;
mod standard;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ipm::{solve_interior_point, solve_interior_point_with, IpmSettings};
pub use problem::{Block, BlockKind, Constraint, Relation, SdpProblem, Sense, SymSparse};
pub use splitting::{solve_splitting, solve_splitting_with, SplittingSettings};
pub use standard::densify;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error(
        "problem too large for the dense interior-point solver: total block side {size} exceeds cap {cap}; use the splitting solver or export to SDPA"
    )]
    TooLarge { size: usize, cap: usize },
    #[error("splitting solver diverged after {iterations} iterations: {diagnostics}")]
    Diverged { iterations: usize, diagnostics: String },
    #[error("SDPA export requires equality constraints only (constraint {0} is an inequality)")]
    InequalityInExport(usize),
    #[error("SDPA parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Inaccurate,
    Infeasible,
    Unbounded,
    IterLimit,
}

/// Relative residuals of a returned iterate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: Status,
    /// Primal objective in the problem's own sense.
    pub objective: f64,
    /// Dual objective; equals `objective` at optimality.
    pub dual_objective: f64,
    /// One matrix per user block. Diagonal and free blocks are diagonal matrices.
    pub primal: Vec<DMatrix<f64>>,
    /// Lagrange multipliers, one per constraint.
    pub dual: Vec<f64>,
    pub residuals: Residuals,
    pub iterations: usize,
    /// Tolerance the solver was asked to reach.
    pub tol: f64,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}
