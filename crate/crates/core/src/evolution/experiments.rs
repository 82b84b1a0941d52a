use std::thread;

use crate::error::Result;
use crate::graph::{VertexField, WeightedGraph};
use crate::proximal::ConstraintSet;

use super::solve::{solve_collapse, solve_growth, solve_p_flow, SolverOptions};
use super::source::SourceSchedule;

/// One row of [`converge_p_experiment`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub p: f64,
    /// `sup_n ‖u_p(t_n) - u_∞(t_n)‖_ν` over the shared samples.
    pub sup_error: f64,
}

/// Runs the p-flow for every `p` (concurrently) and compares it with the
/// growth model on the same time grid.
#[allow(clippy::too_many_arguments)]
pub fn converge_p_experiment(
    g: &WeightedGraph,
    k: &ConstraintSet,
    u0: &VertexField,
    f: &SourceSchedule,
    p_list: &[f64],
    t_end: f64,
    dt: f64,
    opts: &SolverOptions,
) -> Result<Vec<ConvergenceRow>> {
    let limit = solve_growth(g, k, u0, f, t_end, dt, opts)?;
    let runs: Vec<Result<ConvergenceRow>> = thread::scope(|s| {
        let handles: Vec<_> = p_list
            .iter()
            .map(|&p| {
                let limit = &limit;
                s.spawn(move || {
                    let flow = solve_p_flow(g, k, p, u0, f, t_end, dt, opts)?;
                    let sup_error = flow
                        .states()
                        .iter()
                        .zip(limit.states())
                        .map(|(a, b)| g.distance_nu(a, b))
                        .fold(0.0, f64::max);
                    Ok(ConvergenceRow { p, sup_error })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("p-flow worker panicked"))
            .collect()
    });
    runs.into_iter().collect()
}

/// One row of [`collapse_via_p_experiment`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollapseProbe {
    pub t: f64,
    /// `‖u_p(t) - u_∞‖_ν`.
    pub distance: f64,
}

/// Runs the source-free p-flow from `u0` and measures its distance to the
/// collapsed configuration at each probe time.
pub fn collapse_via_p_experiment(
    g: &WeightedGraph,
    k: &ConstraintSet,
    u0: &VertexField,
    p: f64,
    probes: &[f64],
    dt: f64,
    opts: &SolverOptions,
) -> Result<Vec<CollapseProbe>> {
    let limit = solve_collapse(g, k, u0, dt, opts)?.u_infinity;
    let t_end = probes.iter().copied().fold(0.0, f64::max);
    if t_end <= 0.0 {
        return Ok(probes
            .iter()
            .map(|&t| CollapseProbe {
                t,
                distance: g.distance_nu(u0, &limit),
            })
            .collect());
    }
    let zero = SourceSchedule::zero(g.vertex_count());
    let flow = solve_p_flow(g, k, p, u0, &zero, t_end, dt, opts)?;
    Ok(probes
        .iter()
        .map(|&t| {
            let u = flow.state_at(t).unwrap_or_else(|| u0.clone());
            CollapseProbe {
                t,
                distance: g.distance_nu(&u, &limit),
            }
        })
        .collect())
}
