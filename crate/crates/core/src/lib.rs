//! Corner relaxations of linear programs, reverse-polar separation of
//! corner Benders cuts, and a cutting-plane and branch-and-bound solver for
//! the vehicle routing problem with stochastic demands (VRPSD).

pub mod benders;
pub mod corner;
pub mod lp;
pub mod network;
pub mod oracle;
pub mod polar;
pub mod vrpsd;
