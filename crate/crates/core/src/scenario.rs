//! JSON scenario documents.
//!
//! ```json
//! {
//!   "name": "p4_two_sources",
//!   "graph": { "type": "path", "n": 4 },
//!   "constraint": "uniform",
//!   "mode": "growth",
//!   "u0": { "x2": 0.0 },
//!   "source": [ { "start": 0, "end": 100, "values": { "x2": 3, "x3": 1 } } ],
//!   "T": 3,
//!   "dt": 0.001
//! }
//! ```
//!
//! Graph sources: `{"type": "edges", "edges": [["a", "b", 1.0], ...]}`,
//! `{"type": "file", "path": "g.txt"}` (relative to the scenario file),
//! `{"type": "path", "n": 4}`, `{"type": "star", "weights": [1, 1, 1]}` and
//! `{"type": "truncated_z", "radius": 20}`. Constraint kinds are `uniform`,
//! `inv-sqrt-w`, `inv-w` and `custom` (with `"bounds": [["a", "b", c], ...]`).
//! Modes are `p-flow` (needs `"p"`), `growth` and `collapse`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::evolution::{Segment, SolverOptions, SourceSchedule};
use crate::graph::{VertexField, WeightedGraph};
use crate::proximal::{ConstraintKind, ConstraintSet};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    graph: RawGraph,
    #[serde(default)]
    constraint: Option<String>,
    #[serde(default)]
    bounds: Option<Vec<(String, String, f64)>>,
    mode: String,
    p: Option<f64>,
    #[serde(default)]
    u0: BTreeMap<String, f64>,
    #[serde(default)]
    source: Vec<RawSegment>,
    #[serde(rename = "T")]
    t_end: Option<f64>,
    dt: Option<f64>,
    tol: Option<f64>,
    output: Option<String>,
    budget_seconds: Option<f64>,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawGraph {
    Edges { edges: Vec<(String, String, f64)> },
    File { path: String },
    Path { n: usize },
    Star { weights: Vec<f64> },
    TruncatedZ { radius: usize },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    start: f64,
    end: f64,
    values: BTreeMap<String, f64>,
}

/// Which evolution a scenario runs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    PFlow { p: f64 },
    Growth,
    Collapse,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::PFlow { .. } => "p-flow",
            Mode::Growth => "growth",
            Mode::Collapse => "collapse",
        }
    }
}

/// A validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub graph: WeightedGraph,
    pub constraints: ConstraintSet,
    pub mode: Mode,
    pub u0: VertexField,
    pub source: SourceSchedule,
    /// Final time; `None` only for collapse scenarios.
    pub t_end: Option<f64>,
    pub dt: f64,
    pub tol: f64,
    pub output: Option<PathBuf>,
    /// Declared wall-clock budget for a full run.
    pub budget_seconds: Option<f64>,
}

impl Scenario {
    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            ..SolverOptions::default()
        }
    }

    /// Final time, or a schema error naming `T` if the document had none.
    pub fn require_t_end(&self) -> Result<f64> {
        self.t_end.ok_or_else(|| schema("T", "required for this command"))
    }
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses a scenario; graph files are resolved against the working directory.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    parse_scenario_in(text, None)
}

/// Reads and parses a scenario file; graph file paths are relative to it.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = crate::error::read_file(path)?;
    let mut sc = parse_scenario_in(&text, path.parent())?;
    if sc.name.is_empty() {
        sc.name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
    }
    Ok(sc)
}

/// Parses a scenario with an optional base directory for graph files.
pub fn parse_scenario_in(text: &str, base: Option<&Path>) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawScenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(if path == "." { "$".to_string() } else { path }, e.inner().to_string())
    })?;

    let graph = build_graph(&raw.graph, base)?;
    let constraints = build_constraints(&graph, raw.constraint.as_deref(), raw.bounds.as_deref())?;

    let mode = match raw.mode.as_str() {
        "p-flow" => {
            let p = raw.p.ok_or_else(|| schema("p", "required for mode p-flow"))?;
            if !(p.is_finite() && p >= 2.0) {
                return Err(schema("p", format!("must be >= 2, got {p}")));
            }
            Mode::PFlow { p }
        }
        "growth" | "infinity-growth" => Mode::Growth,
        "collapse" => Mode::Collapse,
        other => {
            return Err(schema(
                "mode",
                format!("unknown mode `{other}` (expected p-flow, growth or collapse)"),
            ))
        }
    };

    let u0 = sparse_field(&graph, &raw.u0, "u0")?;

    let mut segments = Vec::with_capacity(raw.source.len());
    for (i, s) in raw.source.iter().enumerate() {
        let field = sparse_field(&graph, &s.values, &format!("source[{i}].values"))?;
        if !(s.start.is_finite() && s.end > s.start) {
            return Err(schema(
                format!("source[{i}]"),
                format!("needs start < end, got [{}, {})", s.start, s.end),
            ));
        }
        segments.push(Segment {
            start: s.start,
            end: s.end,
            field,
        });
    }
    let source = SourceSchedule::new(graph.vertex_count(), segments).map_err(|e| schema("source", e.to_string()))?;

    let positive = |name: &str, v: Option<f64>| -> Result<Option<f64>> {
        match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(schema(name, format!("must be > 0, got {x}"))),
            _ => Ok(v),
        }
    };
    let t_end = positive("T", raw.t_end)?;
    let dt = positive("dt", raw.dt)?.unwrap_or(DEFAULT_DT);
    let tol = positive("tol", raw.tol)?.unwrap_or(DEFAULT_TOL);
    let budget_seconds = positive("budget_seconds", raw.budget_seconds)?;
    if t_end.is_none() && mode != Mode::Collapse {
        return Err(schema("T", format!("required for mode {}", mode.name())));
    }

    if mode == Mode::Growth {
        let tol = SolverOptions::default().stability_tol;
        if !constraints.is_stable(&graph, &u0, tol) {
            return Err(Error::UnstableInitialDatum(constraints.max_relative_slope(&graph, &u0)));
        }
    }

    Ok(Scenario {
        name: raw.name.unwrap_or_default(),
        graph,
        constraints,
        mode,
        u0,
        source,
        t_end,
        dt,
        tol,
        output: raw.output.map(PathBuf::from),
        budget_seconds,
    })
}

fn build_graph(raw: &RawGraph, base: Option<&Path>) -> Result<WeightedGraph> {
    let wrap = |e: Error| match e {
        Error::Io(_) | Error::Parse { .. } => e,
        other => schema("graph", other.to_string()),
    };
    match raw {
        RawGraph::Edges { edges } => WeightedGraph::build(edges).map_err(wrap),
        RawGraph::File { path } => {
            let full = match base {
                Some(dir) => dir.join(path),
                None => PathBuf::from(path),
            };
            WeightedGraph::load(&full).map_err(wrap)
        }
        RawGraph::Path { n } => WeightedGraph::path(*n).map_err(wrap),
        RawGraph::Star { weights } => WeightedGraph::star(weights).map_err(wrap),
        RawGraph::TruncatedZ { radius } => WeightedGraph::truncated_z(*radius).map_err(wrap),
    }
}

fn build_constraints(
    g: &WeightedGraph,
    kind: Option<&str>,
    bounds: Option<&[(String, String, f64)]>,
) -> Result<ConstraintSet> {
    let kind: ConstraintKind = match kind {
        None => ConstraintKind::Uniform,
        Some(k) => k.parse().map_err(|e: Error| schema("constraint", e.to_string()))?,
    };
    match (kind, bounds) {
        (ConstraintKind::Custom, Some(b)) => ConstraintSet::custom(g, b).map_err(|e| schema("bounds", e.to_string())),
        (ConstraintKind::Custom, None) => Err(schema("bounds", "required for constraint custom")),
        (_, Some(_)) => Err(schema("bounds", "only allowed with constraint custom")),
        (k, None) => ConstraintSet::of_kind(g, k).map_err(|e| schema("constraint", e.to_string())),
    }
}

fn sparse_field(g: &WeightedGraph, values: &BTreeMap<String, f64>, path: &str) -> Result<VertexField> {
    let mut f = VertexField::zeros(g.vertex_count());
    for (label, &v) in values {
        let x = g
            .index_of(label)
            .map_err(|_| schema(format!("{path}.{label}"), format!("unknown vertex `{label}`")))?;
        if !v.is_finite() {
            return Err(schema(format!("{path}.{label}"), "must be finite"));
        }
        f[x] = v;
    }
    Ok(f)
}
