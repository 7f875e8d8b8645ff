//! The charge equation: forcing from the initial datum and implicit marching.

mod forcing;
mod identity;
mod solver;

pub use forcing::{build_forcing, forcing_at, forcing_density};
pub use identity::inversion_identity_residual;
pub use solver::{
    continue_until, estimate_blowup_time, picard_map, solve_charge, solve_with_forcing, ChargeTrajectory,
    SolveStatus, SolverConfig,
};
