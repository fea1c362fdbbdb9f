//! Vehicle routing with stochastic demands: instances, recourse, the state
//! network, cut separation, the root cutting-plane loop and branch-and-bound.

mod bnb;
mod cutting;
mod generate;
mod instance;
mod master;
mod recourse;
mod separation;
mod state_network;

use thiserror::Error;

use crate::benders::BendersError;
use crate::corner::CornerError;
use crate::lp::LpError;
use crate::polar::PolarError;

pub use bnb::{solve_integer, IntegerResult, IntegerStatus};
pub use cutting::{
    arc_flow_bound, cutting_plane_loop, lagrangian_setup, problem_data, CornerSetup, LagrangianSetup, LoopOptions,
    Mode, RootReport, StopReason, TraceEntry,
};
pub use generate::generate;
pub use instance::VrpsdInstance;
pub use master::{master_x_rows, MasterPoint, VrpsdMaster};
pub use recourse::{cdf, expected_recourse, normal_cdf, psi, route_cost, PsiTable, Route, SERIES_TOL};
pub use separation::{
    component_path, min_vehicles, path_lower_bound, recourse_lower_bound, separate_p_s_cuts, separate_rci_exact,
    separate_route_cuts, support_components, IlsCut, IlsKind, Rci, MAX_BOUND_SET, MAX_RCI_CUSTOMERS, SEP_TOL,
};
pub use state_network::{build_state_network, ArcKind, StateNetwork};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VrpsdError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("not a q-route: {0}")]
    NotAQRoute(String),
    #[error("argument out of range: {0}")]
    DomainError(String),
    #[error("{0} customers exceed the exact separation limit")]
    TooManyCustomers(usize),
    #[error("set of {0} customers exceeds the recourse bound limit")]
    SIntractable(usize),
    #[error("no partition into k q-routes exists")]
    Infeasible,
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Corner(#[from] CornerError),
    #[error(transparent)]
    Polar(#[from] PolarError),
    #[error(transparent)]
    Benders(#[from] BendersError),
}
