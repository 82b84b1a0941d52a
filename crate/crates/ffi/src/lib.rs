//! C ABI over `sandpile-core`.
//!
//! Graphs and trajectories are opaque handles owned by the caller and
//! released with `sp_graph_free` / `sp_trajectory_free`. Every fallible call
//! returns an [`SpStatus`]; the message of the last failure on the calling
//! thread is available from `sp_last_error_message`. Vertex fields are
//! `double` arrays of length `sp_graph_vertex_count`, in the graph's vertex
//! order.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use sandpile_core::evolution::{solve_collapse, solve_growth, solve_p_flow, SolverOptions, SourceSchedule, Trajectory};
use sandpile_core::graph::{VertexField, WeightedGraph};
use sandpile_core::proximal::{project, resolvent_p, ConstraintKind, ConstraintSet, DEFAULT_MAX_SWEEPS};
use sandpile_core::transport::{ot_cost_oracle, TransportInstance};
use sandpile_core::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpStatus {
    SpOk = 0,
    /// A required pointer was null or a string was not UTF-8.
    SpNullArgument = 1,
    /// Invalid input: graph, field, parameter or file errors.
    SpInvalid = 2,
    /// A solver failed to converge or overflowed.
    SpSolverFailure = 3,
    /// The output buffer is too small.
    SpBufferTooSmall = 4,
    /// Internal error (a Rust panic was caught).
    SpInternal = 5,
}

/// Slope bound family.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpConstraintKind {
    /// `c = 1`
    SpUniform = 0,
    /// `c = 1/sqrt(w)`
    SpInvSqrtW = 1,
    /// `c = 1/w`
    SpInvW = 2,
}

/// Opaque graph handle.
pub struct SpGraph {
    inner: WeightedGraph,
}

/// Opaque trajectory handle.
pub struct SpTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> SpStatus {
    if e.is_validation() {
        SpStatus::SpInvalid
    } else {
        SpStatus::SpSolverFailure
    }
}

/// Runs `f`, recording errors and turning panics into `SpInternal`.
fn guard(f: impl FnOnce() -> Result<(), SpStatus>) -> SpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpStatus::SpOk,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            SpStatus::SpInternal
        }
    }
}

fn fail(e: Error) -> SpStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> SpStatus {
    set_error(format!("null {what}"));
    SpStatus::SpNullArgument
}

unsafe fn graph_ref<'a>(g: *const SpGraph) -> Result<&'a WeightedGraph, SpStatus> {
    g.as_ref().map(|g| &g.inner).ok_or_else(|| null("graph"))
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, SpStatus> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error(format!("{what} is not UTF-8"));
        SpStatus::SpNullArgument
    })
}

unsafe fn field_arg(g: &WeightedGraph, p: *const f64, n: usize, what: &str) -> Result<VertexField, SpStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    if n != g.vertex_count() {
        return Err(fail(Error::LengthMismatch {
            expected: g.vertex_count(),
            found: n,
        }));
    }
    Ok(VertexField(slice::from_raw_parts(p, n).to_vec()))
}

unsafe fn write_field(u: &VertexField, out: *mut f64, n: usize) -> Result<(), SpStatus> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if n < u.len() {
        set_error(format!("output buffer holds {n} values, need {}", u.len()));
        return Err(SpStatus::SpBufferTooSmall);
    }
    slice::from_raw_parts_mut(out, u.len()).copy_from_slice(u.values());
    Ok(())
}

fn constraints(g: &WeightedGraph, kind: SpConstraintKind) -> ConstraintSet {
    match kind {
        SpConstraintKind::SpUniform => ConstraintSet::uniform(g),
        SpConstraintKind::SpInvSqrtW => ConstraintSet::inverse_sqrt_weight(g),
        SpConstraintKind::SpInvW => ConstraintSet::inverse_weight(g),
    }
}

fn kind_from(kind: ConstraintKind) -> Option<SpConstraintKind> {
    match kind {
        ConstraintKind::Uniform => Some(SpConstraintKind::SpUniform),
        ConstraintKind::InverseSqrtWeight => Some(SpConstraintKind::SpInvSqrtW),
        ConstraintKind::InverseWeight => Some(SpConstraintKind::SpInvW),
        ConstraintKind::Custom => None,
    }
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length.
#[no_mangle]
pub unsafe extern "C" fn sp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Parses a constraint kind name (`uniform`, `inv-sqrt-w`, `inv-w`).
#[no_mangle]
pub unsafe extern "C" fn sp_constraint_kind_parse(name: *const c_char, out: *mut SpConstraintKind) -> SpStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let out = out.as_mut().ok_or_else(|| null("output"))?;
        let kind: ConstraintKind = name.parse().map_err(fail)?;
        *out = kind_from(kind).ok_or_else(|| fail(Error::InvalidParameter("custom bounds need a table".into())))?;
        Ok(())
    })
}

/// Builds a graph from edge-list text (`<x> <y> <weight>` per line).
#[no_mangle]
pub unsafe extern "C" fn sp_graph_from_edge_list(text: *const c_char, out: *mut *mut SpGraph) -> SpStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        if out.is_null() {
            return Err(null("output"));
        }
        let g = WeightedGraph::parse_edge_list(text).map_err(fail)?;
        *out = Box::into_raw(Box::new(SpGraph { inner: g }));
        Ok(())
    })
}

/// Loads a graph from an edge-list file.
#[no_mangle]
pub unsafe extern "C" fn sp_graph_load(path: *const c_char, out: *mut *mut SpGraph) -> SpStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("output"));
        }
        let g = WeightedGraph::load(path).map_err(fail)?;
        *out = Box::into_raw(Box::new(SpGraph { inner: g }));
        Ok(())
    })
}

/// Path `x1 - ... - xn` with unit weights.
#[no_mangle]
pub unsafe extern "C" fn sp_graph_path(n: usize, out: *mut *mut SpGraph) -> SpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output"));
        }
        let g = WeightedGraph::path(n).map_err(fail)?;
        *out = Box::into_raw(Box::new(SpGraph { inner: g }));
        Ok(())
    })
}

/// Integer lattice truncated to `[-radius, radius]`.
#[no_mangle]
pub unsafe extern "C" fn sp_graph_truncated_z(radius: usize, out: *mut *mut SpGraph) -> SpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output"));
        }
        let g = WeightedGraph::truncated_z(radius).map_err(fail)?;
        *out = Box::into_raw(Box::new(SpGraph { inner: g }));
        Ok(())
    })
}

/// Releases a graph; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sp_graph_free(g: *mut SpGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Number of vertices (0 for null).
#[no_mangle]
pub unsafe extern "C" fn sp_graph_vertex_count(g: *const SpGraph) -> usize {
    g.as_ref().map_or(0, |g| g.inner.vertex_count())
}

/// Number of edges (0 for null).
#[no_mangle]
pub unsafe extern "C" fn sp_graph_edge_count(g: *const SpGraph) -> usize {
    g.as_ref().map_or(0, |g| g.inner.edge_count())
}

/// Degrees `d_x` into `out` (length at least the vertex count).
#[no_mangle]
pub unsafe extern "C" fn sp_graph_degrees(g: *const SpGraph, out: *mut f64, len: usize) -> SpStatus {
    guard(|| {
        let g = graph_ref(g)?;
        write_field(&VertexField(g.degrees().to_vec()), out, len)
    })
}

/// Copies the label of vertex `index` into `buf` (NUL terminated).
#[no_mangle]
pub unsafe extern "C" fn sp_graph_label(g: *const SpGraph, index: usize, buf: *mut c_char, len: usize) -> SpStatus {
    guard(|| {
        let g = graph_ref(g)?;
        if index >= g.vertex_count() {
            return Err(fail(Error::InvalidParameter(format!(
                "vertex index {index} out of range"
            ))));
        }
        if buf.is_null() {
            return Err(null("buffer"));
        }
        let label = g.label(index);
        if len < label.len() + 1 {
            set_error(format!("label needs {} bytes", label.len() + 1));
            return Err(SpStatus::SpBufferTooSmall);
        }
        ptr::copy_nonoverlapping(label.as_ptr() as *const c_char, buf, label.len());
        *buf.add(label.len()) = 0;
        Ok(())
    })
}

/// Index of the vertex named `label`.
#[no_mangle]
pub unsafe extern "C" fn sp_graph_index_of(g: *const SpGraph, label: *const c_char, out: *mut usize) -> SpStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let label = str_arg(label, "label")?;
        let out = out.as_mut().ok_or_else(|| null("output"))?;
        *out = g.index_of(label).map_err(fail)?;
        Ok(())
    })
}

/// Largest `|u(y) - u(x)| / c_xy` over the edges.
#[no_mangle]
pub unsafe extern "C" fn sp_max_relative_slope(
    g: *const SpGraph,
    kind: SpConstraintKind,
    u: *const f64,
    n: usize,
    out: *mut f64,
) -> SpStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let u = field_arg(g, u, n, "u")?;
        let out = out.as_mut().ok_or_else(|| null("output"))?;
        *out = constraints(g, kind).max_relative_slope(g, &u);
        Ok(())
    })
}

/// ν-weighted projection of `z` onto the stable set; result in `out`.
#[no_mangle]
pub unsafe extern "C" fn sp_project(
    g: *const SpGraph,
    kind: SpConstraintKind,
    z: *const f64,
    n: usize,
    tol: f64,
    out: *mut f64,
) -> SpStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let z = field_arg(g, z, n, "z")?;
        let u = project(g, &constraints(g, kind), &z, tol, DEFAULT_MAX_SWEEPS).map_err(fail)?;
        write_field(&u, out, n)
    })
}

/// Resolvent `(I + lambda dJ_p)^{-1} z` of the p-energy for `kind`.
#[no_mangle]
pub unsafe extern "C" fn sp_resolvent_p(
    g: *const SpGraph,
    kind: SpConstraintKind,
    p: f64,
    lambda: f64,
    z: *const f64,
    n: usize,
    tol: f64,
    out: *mut f64,
) -> SpStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let z = field_arg(g, z, n, "z")?;
        let u = resolvent_p(g, &constraints(g, kind), p, lambda, &z, tol).map_err(fail)?;
        write_field(&u, out, n)
    })
}

unsafe fn constant_source(g: &WeightedGraph, f: *const f64, n: usize, t_end: f64) -> Result<SourceSchedule, SpStatus> {
    if f.is_null() {
        return Ok(SourceSchedule::zero(g.vertex_count()));
    }
    let field = field_arg(g, f, n, "source")?;
    SourceSchedule::constant(field, 0.0, t_end).map_err(fail)
}

unsafe fn store(traj: Trajectory, out: *mut *mut SpTrajectory) {
    *out = Box::into_raw(Box::new(SpTrajectory { inner: traj }));
}

/// Growth model from a stable `u0` under the time-constant source `f`
/// (null for none) on `[0, t_end]`.
#[no_mangle]
pub unsafe extern "C" fn sp_solve_growth(
    g: *const SpGraph,
    kind: SpConstraintKind,
    u0: *const f64,
    f: *const f64,
    n: usize,
    t_end: f64,
    dt: f64,
    tol: f64,
    out: *mut *mut SpTrajectory,
) -> SpStatus {
    guard(|| {
        let g = graph_ref(g)?;
        if out.is_null() {
            return Err(null("output"));
        }
        let u0 = field_arg(g, u0, n, "u0")?;
        let src = constant_source(g, f, n, t_end)?;
        let opts = SolverOptions {
            tol,
            ..SolverOptions::default()
        };
        let traj = solve_growth(g, &constraints(g, kind), &u0, &src, t_end, dt, &opts).map_err(fail)?;
        store(traj, out);
        Ok(())
    })
}

/// p-flow from `u0` under the time-constant source `f` (null for none).
#[no_mangle]
pub unsafe extern "C" fn sp_solve_p_flow(
    g: *const SpGraph,
    kind: SpConstraintKind,
    p: f64,
    u0: *const f64,
    f: *const f64,
    n: usize,
    t_end: f64,
    dt: f64,
    out: *mut *mut SpTrajectory,
) -> SpStatus {
    guard(|| {
        let g = graph_ref(g)?;
        if out.is_null() {
            return Err(null("output"));
        }
        let u0 = field_arg(g, u0, n, "u0")?;
        let src = constant_source(g, f, n, t_end)?;
        let traj = solve_p_flow(
            g,
            &constraints(g, kind),
            p,
            &u0,
            &src,
            t_end,
            dt,
            &SolverOptions::default(),
        )
        .map_err(fail)?;
        store(traj, out);
        Ok(())
    })
}

/// Collapse of `u0`: writes the limit into `u_inf`; when `traj` is not
/// null it receives the rescaled trajectory on `[1/L, 1]`.
#[no_mangle]
pub unsafe extern "C" fn sp_solve_collapse(
    g: *const SpGraph,
    kind: SpConstraintKind,
    u0: *const f64,
    n: usize,
    dt: f64,
    u_inf: *mut f64,
    traj: *mut *mut SpTrajectory,
) -> SpStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let u0 = field_arg(g, u0, n, "u0")?;
        let c = solve_collapse(g, &constraints(g, kind), &u0, dt, &SolverOptions::default()).map_err(fail)?;
        write_field(&c.u_infinity, u_inf, n)?;
        if !traj.is_null() {
            store(c.trajectory, traj);
        }
        Ok(())
    })
}

/// Optimal transport cost between densities `f0`, `f1` (masses `f d_x`)
/// in the hop metric.
#[no_mangle]
pub unsafe extern "C" fn sp_ot_cost(
    g: *const SpGraph,
    f0: *const f64,
    f1: *const f64,
    n: usize,
    out: *mut f64,
) -> SpStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let f0 = field_arg(g, f0, n, "f0")?;
        let f1 = field_arg(g, f1, n, "f1")?;
        let out = out.as_mut().ok_or_else(|| null("output"))?;
        let inst = TransportInstance::with_graph_metric(g, f0, f1).map_err(fail)?;
        *out = ot_cost_oracle(&inst).map_err(fail)?;
        Ok(())
    })
}

/// Releases a trajectory; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sp_trajectory_free(t: *mut SpTrajectory) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of samples (0 for null).
#[no_mangle]
pub unsafe extern "C" fn sp_trajectory_len(t: *const SpTrajectory) -> usize {
    t.as_ref().map_or(0, |t| t.inner.len())
}

/// Largest absolute per-step mass residual (0 for null).
#[no_mangle]
pub unsafe extern "C" fn sp_trajectory_max_residual(t: *const SpTrajectory) -> f64 {
    t.as_ref().map_or(0.0, |t| t.inner.max_abs_residual())
}

/// Sample times into `out` (length at least `sp_trajectory_len`).
#[no_mangle]
pub unsafe extern "C" fn sp_trajectory_times(t: *const SpTrajectory, out: *mut f64, len: usize) -> SpStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("trajectory"))?;
        write_field(&VertexField(t.inner.times().to_vec()), out, len)
    })
}

/// Sample `index` into `out` (length at least the vertex count).
#[no_mangle]
pub unsafe extern "C" fn sp_trajectory_state(
    t: *const SpTrajectory,
    index: usize,
    out: *mut f64,
    len: usize,
) -> SpStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("trajectory"))?;
        let u = t.inner.states().get(index).ok_or_else(|| {
            set_error(format!("sample {index} out of range"));
            SpStatus::SpInvalid
        })?;
        write_field(u, out, len)
    })
}
