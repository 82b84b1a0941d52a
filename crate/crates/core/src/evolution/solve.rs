use crate::error::{Error, Result};
use crate::graph::{VertexField, WeightedGraph};
use crate::proximal::{ConstraintSet, NewtonOptions, Projector, Resolvent, DEFAULT_MAX_SWEEPS, DEFAULT_TOL};

use super::source::{time_grid, SourceSchedule};
use super::trajectory::{Event, Trajectory};

/// Tolerances shared by the time integrators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Projection tolerance (successive-sweep change and membership).
    pub tol: f64,
    pub max_sweeps: usize,
    pub newton: NewtonOptions,
    /// Slack below the bound at which an edge counts as active; `None`
    /// means `10 * tol`.
    pub event_band: Option<f64>,
    /// Membership tolerance used to accept an initial datum as stable.
    pub stability_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: DEFAULT_TOL,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            newton: NewtonOptions::default(),
            event_band: None,
            stability_tol: 1e-9,
        }
    }
}

impl SolverOptions {
    fn band(&self) -> f64 {
        self.event_band.unwrap_or(10.0 * self.tol)
    }
}

/// `Σ_x (next - prev)(x) d_x - h Σ_x src(x) d_x`, accumulated per vertex.
fn step_residual(g: &WeightedGraph, prev: &VertexField, next: &VertexField, h: f64, src: &VertexField) -> f64 {
    (0..g.vertex_count())
        .map(|x| (next[x] - prev[x] - h * src[x]) * g.degree(x))
        .sum()
}

fn diff_active(before: &[usize], after: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let activated = after.iter().filter(|e| !before.contains(e)).copied().collect();
    let released = before.iter().filter(|e| !after.contains(e)).copied().collect();
    (activated, released)
}

fn check_source(g: &WeightedGraph, f: &SourceSchedule) -> Result<()> {
    if f.vertex_count() != g.vertex_count() {
        return Err(Error::LengthMismatch {
            expected: g.vertex_count(),
            found: f.vertex_count(),
        });
    }
    Ok(())
}

/// Backward Euler for `u_t = Δ_p u + f`:
/// `u^{n+1} = (I + dt ∂J_p)^{-1}(u^n + dt f(t_n))`, with the energy selected
/// by `k`.
#[allow(clippy::too_many_arguments)]
pub fn solve_p_flow(
    g: &WeightedGraph,
    k: &ConstraintSet,
    p: f64,
    u0: &VertexField,
    f: &SourceSchedule,
    t_end: f64,
    dt: f64,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    g.check_field(u0)?;
    check_source(g, f)?;
    let grid = time_grid(0.0, t_end, dt, &f.boundaries())?;
    let mut resolvent = Resolvent::new(g, k, p, opts.newton)?;
    let mut traj = Trajectory::new(0.0, u0.clone());
    let mut u = u0.clone();
    for w in grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let h = t1 - t0;
        let src = f.eval(t0);
        let z = u.add_scaled(h, &src);
        let next = resolvent.apply(h, &z)?;
        g.check_guard_band(&next)?;
        let r = step_residual(g, &u, &next, h, &src);
        traj.push(t1, next.clone(), r);
        u = next;
    }
    Ok(traj)
}

/// Projected backward Euler for the growth model
/// `f(t) - u_t ∈ ∂I_K(u)`: `u^{n+1} = P_K(u^n + dt f(t_n))`.
///
/// Records an [`Event`] whenever the set of saturated edges changes.
pub fn solve_growth(
    g: &WeightedGraph,
    k: &ConstraintSet,
    u0: &VertexField,
    f: &SourceSchedule,
    t_end: f64,
    dt: f64,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    g.check_field(u0)?;
    check_source(g, f)?;
    k.check(g)?;
    if !k.is_stable(g, u0, opts.stability_tol) {
        return Err(Error::UnstableInitialDatum(k.max_relative_slope(g, u0)));
    }
    let grid = time_grid(0.0, t_end, dt, &f.boundaries())?;
    let mut projector = Projector::new(g, k, opts.tol, opts.max_sweeps)?;
    let band = opts.band();
    let mut traj = Trajectory::new(0.0, u0.clone());
    let mut u = u0.clone();
    let mut active = k.active_edges(g, &u, band);
    for w in grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let h = t1 - t0;
        let src = f.eval(t0);
        let next = projector.project(&u.add_scaled(h, &src))?;
        g.check_guard_band(&next)?;
        let r = step_residual(g, &u, &next, h, &src);
        let now_active = k.active_edges(g, &next, band);
        if now_active != active {
            let (activated, released) = diff_active(&active, &now_active);
            traj.push_event(Event {
                t: t1,
                activated,
                released,
            });
            active = now_active;
        }
        traj.push(t1, next.clone(), r);
        u = next;
    }
    Ok(traj)
}

/// Outcome of [`solve_collapse`].
#[derive(Clone, Debug, PartialEq)]
pub struct Collapse {
    /// Stable limit configuration `v(1)`.
    pub u_infinity: VertexField,
    /// Samples of `v(t)` on `[τ, 1]`; empty when the datum was stable.
    pub trajectory: Trajectory,
    /// Max relative slope `L` of the initial datum.
    pub slope: f64,
    /// Start time `τ = 1/L` (1 when `L <= 1`).
    pub tau: f64,
}

/// Collapse of an unstable datum: solves `v/t - v_t ∈ ∂I_K(v)` on `[1/L, 1]`
/// from `v(1/L) = u0 / L`, with the semi-implicit step
/// `v^{n+1} = P_K(v^n + dt v^n / t_n)`, and returns `v(1)`.
pub fn solve_collapse(
    g: &WeightedGraph,
    k: &ConstraintSet,
    u0: &VertexField,
    dt: f64,
    opts: &SolverOptions,
) -> Result<Collapse> {
    g.check_field(u0)?;
    k.check(g)?;
    let slope = k.max_relative_slope(g, u0);
    if slope <= 1.0 {
        return Ok(Collapse {
            u_infinity: u0.clone(),
            trajectory: Trajectory::empty(),
            slope,
            tau: 1.0,
        });
    }
    let tau = 1.0 / slope;
    let grid = time_grid(tau, 1.0, dt, &[])?;
    let mut projector = Projector::new(g, k, opts.tol, opts.max_sweeps)?;
    let band = opts.band();
    let mut v = u0.scaled(tau);
    let mut traj = Trajectory::new(tau, v.clone());
    let mut active = k.active_edges(g, &v, band);
    for w in grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let h = t1 - t0;
        let src = v.scaled(1.0 / t0);
        let next = projector.project(&v.add_scaled(h, &src))?;
        g.check_guard_band(&next)?;
        let r = step_residual(g, &v, &next, h, &src);
        let now_active = k.active_edges(g, &next, band);
        if now_active != active {
            let (activated, released) = diff_active(&active, &now_active);
            traj.push_event(Event {
                t: t1,
                activated,
                released,
            });
            active = now_active;
        }
        traj.push(t1, next.clone(), r);
        v = next;
    }
    Ok(Collapse {
        u_infinity: v,
        trajectory: traj,
        slope,
        tau,
    })
}

/// Forcing term used to audit a trajectory's mass balance.
#[derive(Clone, Copy, Debug)]
pub enum Forcing<'a> {
    /// A source schedule, as in the p-flows and the growth model.
    Source(&'a SourceSchedule),
    /// The collapse forcing `v^n / t_n`.
    Collapse,
}

/// Per-step mass balance of a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct MassReport {
    /// `(t_{n+1}, r_n)` for every step.
    pub residuals: Vec<(f64, f64)>,
    pub max_abs: f64,
}

/// Recomputes `r_n = Σ (u^{n+1} - u^n) d_x - dt Σ f_n d_x` from the samples,
/// where `f_n` is the source at `t_n` or `v^n / t_n` for a collapse run.
pub fn mass_balance(g: &WeightedGraph, traj: &Trajectory, forcing: Forcing<'_>) -> MassReport {
    let times = traj.times();
    let states = traj.states();
    let mut residuals = Vec::with_capacity(times.len().saturating_sub(1));
    for n in 0..times.len().saturating_sub(1) {
        let h = times[n + 1] - times[n];
        let src = match forcing {
            Forcing::Source(f) => f.eval(times[n]),
            Forcing::Collapse => states[n].scaled(1.0 / times[n]),
        };
        residuals.push((times[n + 1], step_residual(g, &states[n], &states[n + 1], h, &src)));
    }
    let max_abs = residuals.iter().fold(0.0, |m: f64, (_, r)| m.max(r.abs()));
    MassReport { residuals, max_abs }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_data_without_source_stays_put() {
        let g = WeightedGraph::path(4).unwrap();
        let k = ConstraintSet::uniform(&g);
        let u0 = VertexField::constant(4, 1.5);
        let f = SourceSchedule::zero(4);
        let opts = SolverOptions::default();
        let flow = solve_p_flow(&g, &k, 4.0, &u0, &f, 0.1, 0.01, &opts).unwrap();
        assert!(flow.states().iter().all(|u| *u == u0));
        let growth = solve_growth(&g, &k, &u0, &f, 0.1, 0.01, &opts).unwrap();
        assert!(growth.states().iter().all(|u| *u == u0));
        assert_eq!(mass_balance(&g, &growth, Forcing::Source(&f)).max_abs, 0.0);
    }

    #[test]
    fn growth_rejects_unstable_datum() {
        let g = WeightedGraph::path(4).unwrap();
        let k = ConstraintSet::uniform(&g);
        let u0: VertexField = vec![0.0, 3.0, 0.0, 0.0].into();
        let f = SourceSchedule::zero(4);
        assert!(matches!(
            solve_growth(&g, &k, &u0, &f, 1.0, 0.1, &SolverOptions::default()),
            Err(Error::UnstableInitialDatum(l)) if l == 3.0
        ));
    }

    #[test]
    fn stable_datum_does_not_collapse() {
        let g = WeightedGraph::path(4).unwrap();
        let k = ConstraintSet::uniform(&g);
        let u0: VertexField = vec![0.0, 1.0, 0.5, 0.0].into();
        let c = solve_collapse(&g, &k, &u0, 1e-3, &SolverOptions::default()).unwrap();
        assert_eq!(c.u_infinity, u0);
        assert!(c.trajectory.is_empty());
    }

    #[test]
    fn guard_band_violation_is_reported() {
        let g = WeightedGraph::truncated_z(3).unwrap();
        let k = ConstraintSet::uniform(&g);
        let f = SourceSchedule::from_pairs(&g, &[("0", 1.0)], 0.0, 10.0).unwrap();
        let res = solve_growth(
            &g,
            &k,
            &VertexField::zeros(7),
            &f,
            10.0,
            0.01,
            &SolverOptions::default(),
        );
        assert!(matches!(res, Err(Error::TruncationTooSmall { .. })));
    }

    #[test]
    fn source_boundaries_split_steps() {
        let g = WeightedGraph::path(2).unwrap();
        let k = ConstraintSet::uniform(&g);
        let f = SourceSchedule::from_pairs(&g, &[("x1", 1.0)], 0.0, 0.25).unwrap();
        let tr = solve_growth(&g, &k, &VertexField::zeros(2), &f, 1.0, 0.1, &SolverOptions::default()).unwrap();
        assert!(tr.times().contains(&0.25));
        let last = tr.last().unwrap();
        assert!((last[0] - 0.25).abs() < 1e-12);
    }
}
