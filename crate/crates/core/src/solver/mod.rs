//! LP solving with dual extraction and optimality certificates.
//!
//! Dual sign convention: the dual of a row is the derivative of the optimal
//! objective with respect to that row's right-hand side. Reduced costs are
//! `c - A'y`.

mod certificate;
mod clarabel_backend;

use thiserror::Error;

use crate::lp::LinearProgram;

pub use certificate::{verify_certificate, CertificateReport};
pub use clarabel_backend::ClarabelBackend;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Target feasibility and gap tolerance handed to the backend.
    pub tolerance: f64,
    pub max_iterations: u32,
    /// Equilibrate rows and columns before solving.
    pub scaling: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tolerance: 1e-8,
            max_iterations: 500,
            scaling: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::IterationLimit => "iteration_limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    /// One value per row; zero for rows that can never bind.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub iterations: u32,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// A non-optimal result with no usable vectors.
    pub fn without_point(status: SolveStatus, iterations: u32) -> Self {
        Solution {
            status,
            primal: Vec::new(),
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            objective: f64::NAN,
            iterations,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

/// The single contract a solver must meet to plug into the pipeline.
pub trait LpBackend: Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, lp: &LinearProgram, options: &SolveOptions) -> Result<Solution, SolverError>;
}

/// Solves with the default backend.
pub fn solve(lp: &LinearProgram, options: &SolveOptions) -> Result<Solution, SolverError> {
    ClarabelBackend.solve(lp, options)
}
