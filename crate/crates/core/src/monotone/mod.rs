//! Non-increasing step functions on `(0, 1]` and the quantities evaluated on
//! them. Step functions stand in for the continuous non-increasing
//! candidates of the extremal problem.

mod functional;
mod rearrange;
mod renorm;
mod step;

pub use functional::{
    defect, hardy_at, integral, lp_distance, p_moment, phi_between, phi_functional, phi_with,
    tail_p_mass, DefectValue, PhiMethod,
};
pub(crate) use functional::{phi_slices, pow};
pub use rearrange::decreasing_rearrangement;
pub use renorm::renormalize_moments;
pub use step::{fmt_f64, geometric_grid, graded_grid, uniform_grid, CumulativeProfile, StepFunction};

/// Default smallest breakpoint of geometric grids.
pub const DEFAULT_T_MIN: f64 = 1e-8;
