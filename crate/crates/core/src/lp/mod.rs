//! Dense revised simplex with basis, dual, ray and Farkas extraction.

pub mod factor;
pub mod matrix;
pub mod model;
pub mod simplex;

pub use matrix::SparseMatrix;
pub use model::{solve_model, standardize, LpModel, LpSolution, ModelBasis, Recovery, Sense};
pub use simplex::{
    solve, Basis, LowerBound, LpError, SimplexOutcome, SimplexStatus, StandardLp, FEAS_TOL,
    OPT_TOL, PIVOT_TOL,
};
