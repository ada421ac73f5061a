//! Lagrangian state space, constraint sets, relabeling and projection.

mod constraints;
mod relabeling;
mod state;

pub use constraints::{
    check_in_g, lagcoord3_residual, linf_between, norm_e, norm_e_between, ConstraintReport,
    Deviation, TOL_CONSTRAINT,
};
pub use relabeling::{
    invert_monotone, normalizing_relabeling, project_f0, relabel, repair_identity, Relabeling,
    IDENTITY_REPAIR_TOL,
};
pub(crate) use relabeling::{bisect, solve_w};
pub use state::{concentrated_energy_state, LagrangianState, PointSample};
