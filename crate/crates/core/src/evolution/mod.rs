//! Time integrators: backward Euler for the p-flows, projected backward
//! Euler for the growth model and the collapse of unstable data.

mod experiments;
mod solve;
mod source;
mod trajectory;

pub use experiments::{collapse_via_p_experiment, converge_p_experiment, CollapseProbe, ConvergenceRow};
pub use solve::{
    mass_balance, solve_collapse, solve_growth, solve_p_flow, Collapse, Forcing, MassReport, SolverOptions,
};
pub use source::{time_grid, Segment, SourceSchedule};
pub use trajectory::{Event, Trajectory};
