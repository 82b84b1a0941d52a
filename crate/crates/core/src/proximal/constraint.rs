use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{VertexField, WeightedGraph};

/// How the per-edge slope bound `c_xy` is derived from the weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    /// `c = 1`: the plain slope constraint `|u(y) - u(x)| <= 1`.
    Uniform,
    /// `c = 1/√w`: the weighted model.
    InverseSqrtWeight,
    /// `c = 1/w`.
    InverseWeight,
    /// User supplied table.
    Custom,
}

impl ConstraintKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConstraintKind::Uniform => "uniform",
            ConstraintKind::InverseSqrtWeight => "inv-sqrt-w",
            ConstraintKind::InverseWeight => "inv-w",
            ConstraintKind::Custom => "custom",
        }
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConstraintKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(ConstraintKind::Uniform),
            "inv-sqrt-w" | "inverse_sqrt_weight" => Ok(ConstraintKind::InverseSqrtWeight),
            "inv-w" | "inverse_weight" => Ok(ConstraintKind::InverseWeight),
            "custom" => Ok(ConstraintKind::Custom),
            other => Err(Error::InvalidParameter(format!(
                "unknown constraint kind {other:?} (expected uniform, inv-sqrt-w or inv-w)"
            ))),
        }
    }
}

/// Per-edge slope bounds `c_xy > 0`, indexed by edge id of the graph they
/// were built for. The stable set is `{u : |u(y) - u(x)| <= c_xy for x ~ y}`.
///
/// The same table also selects the p-energy used by the p-flows (see
/// [`crate::calculus`]): uniform bounds give the plain graph p-Laplacian,
/// `1/√w` bounds the weighted one.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSet {
    kind: ConstraintKind,
    bounds: Vec<f64>,
}

impl ConstraintSet {
    pub fn of_kind(g: &WeightedGraph, kind: ConstraintKind) -> Result<Self> {
        let bounds = match kind {
            ConstraintKind::Uniform => vec![1.0; g.edge_count()],
            ConstraintKind::InverseSqrtWeight => g.edges().iter().map(|e| 1.0 / e.weight.sqrt()).collect(),
            ConstraintKind::InverseWeight => g.edges().iter().map(|e| 1.0 / e.weight).collect(),
            ConstraintKind::Custom => {
                return Err(Error::InvalidParameter(
                    "custom constraint sets need an explicit table".into(),
                ))
            }
        };
        Ok(ConstraintSet { kind, bounds })
    }

    pub fn uniform(g: &WeightedGraph) -> Self {
        ConstraintSet {
            kind: ConstraintKind::Uniform,
            bounds: vec![1.0; g.edge_count()],
        }
    }

    pub fn inverse_sqrt_weight(g: &WeightedGraph) -> Self {
        Self::of_kind(g, ConstraintKind::InverseSqrtWeight).expect("builtin kind")
    }

    pub fn inverse_weight(g: &WeightedGraph) -> Self {
        Self::of_kind(g, ConstraintKind::InverseWeight).expect("builtin kind")
    }

    /// Custom bounds from `(x, y, c_xy)` triples; every edge must be listed
    /// exactly once (in either orientation).
    pub fn custom<S: AsRef<str>>(g: &WeightedGraph, table: &[(S, S, f64)]) -> Result<Self> {
        let mut bounds = vec![f64::NAN; g.edge_count()];
        for (x, y, c) in table {
            let (i, j) = (g.index_of(x.as_ref())?, g.index_of(y.as_ref())?);
            let id = g.edge_between(i, j).ok_or_else(|| {
                Error::InvalidParameter(format!("{} and {} are not adjacent", x.as_ref(), y.as_ref()))
            })?;
            if !(*c > 0.0) || !c.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "bound on ({}, {}) must be positive, got {c}",
                    x.as_ref(),
                    y.as_ref()
                )));
            }
            if !bounds[id].is_nan() {
                return Err(Error::DuplicateEdge(x.as_ref().into(), y.as_ref().into()));
            }
            bounds[id] = *c;
        }
        if let Some(id) = bounds.iter().position(|c| c.is_nan()) {
            let e = g.edges()[id];
            return Err(Error::InvalidParameter(format!(
                "missing bound for edge ({}, {})",
                g.label(e.a),
                g.label(e.b)
            )));
        }
        Ok(ConstraintSet {
            kind: ConstraintKind::Custom,
            bounds,
        })
    }

    /// Custom bounds given in edge-id order.
    pub fn from_bounds(g: &WeightedGraph, bounds: Vec<f64>) -> Result<Self> {
        if bounds.len() != g.edge_count() {
            return Err(Error::LengthMismatch {
                expected: g.edge_count(),
                found: bounds.len(),
            });
        }
        if bounds.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
            return Err(Error::InvalidParameter("bounds must be positive".into()));
        }
        Ok(ConstraintSet {
            kind: ConstraintKind::Custom,
            bounds,
        })
    }

    #[inline]
    pub fn kind(&self) -> ConstraintKind {
        self.kind
    }

    #[inline]
    pub fn bound(&self, edge: usize) -> f64 {
        self.bounds[edge]
    }

    #[inline]
    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub(crate) fn check(&self, g: &WeightedGraph) -> Result<()> {
        if self.bounds.len() != g.edge_count() {
            return Err(Error::LengthMismatch {
                expected: g.edge_count(),
                found: self.bounds.len(),
            });
        }
        Ok(())
    }

    /// True iff `|u(y) - u(x)| <= c_xy + tol` on every edge.
    pub fn is_stable(&self, g: &WeightedGraph, u: &VertexField, tol: f64) -> bool {
        g.edges()
            .iter()
            .zip(&self.bounds)
            .all(|(e, c)| (u[e.b] - u[e.a]).abs() <= c + tol)
    }

    /// `max |u(y) - u(x)| / c_xy` over edges.
    pub fn max_relative_slope(&self, g: &WeightedGraph, u: &VertexField) -> f64 {
        g.edges()
            .iter()
            .zip(&self.bounds)
            .map(|(e, c)| (u[e.b] - u[e.a]).abs() / c)
            .fold(0.0, f64::max)
    }

    /// Edge ids whose slope is within `band` of the bound.
    pub fn active_edges(&self, g: &WeightedGraph, u: &VertexField, band: f64) -> Vec<usize> {
        g.edges()
            .iter()
            .zip(&self.bounds)
            .enumerate()
            .filter(|(_, (e, c))| (u[e.b] - u[e.a]).abs() >= *c - band)
            .map(|(id, _)| id)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> WeightedGraph {
        WeightedGraph::build(&[("x1", "x2", 1.0), ("x2", "x3", 4.0)]).unwrap()
    }

    #[test]
    fn stability_examples() {
        let g = WeightedGraph::path(4).unwrap();
        let k = ConstraintSet::uniform(&g);
        assert!(k.is_stable(&g, &VertexField::constant(4, 7.0), 0.0));
        assert!(k.is_stable(&g, &vec![0.0, 1.0, 2.0, 1.0].into(), 0.0));
        assert!(!k.is_stable(&g, &vec![0.0, 3.0, 0.0, 0.0].into(), 1e-8));

        let c = chain();
        let kw = ConstraintSet::inverse_sqrt_weight(&c);
        assert!(kw.is_stable(&c, &vec![0.0, 1.0, 1.4].into(), 0.0));
        assert!(!kw.is_stable(&c, &vec![0.0, 1.0, 1.6].into(), 0.0));
    }

    #[test]
    fn relative_slope_examples() {
        let g = WeightedGraph::path(4).unwrap();
        let k = ConstraintSet::uniform(&g);
        for b in [0.0, 1.0, 1.5, 1.8] {
            let u: VertexField = vec![0.0, 3.0, 0.0, b].into();
            assert_eq!(k.max_relative_slope(&g, &u), 3.0);
        }
        assert_eq!(k.max_relative_slope(&g, &VertexField::constant(4, 2.0)), 0.0);

        let c = chain();
        let kw = ConstraintSet::inverse_sqrt_weight(&c);
        assert_eq!(kw.max_relative_slope(&c, &vec![0.0, 0.0, 1.0].into()), 2.0);
    }

    #[test]
    fn kinds_and_custom_tables() {
        let c = chain();
        assert_eq!(ConstraintSet::inverse_weight(&c).bounds(), &[1.0, 0.25]);
        assert_eq!(ConstraintSet::inverse_sqrt_weight(&c).bounds(), &[1.0, 0.5]);
        let custom = ConstraintSet::custom(&c, &[("x3", "x2", 0.3), ("x1", "x2", 2.0)]).unwrap();
        assert_eq!(custom.bounds(), &[2.0, 0.3]);
        assert!(ConstraintSet::custom(&c, &[("x1", "x2", 2.0)]).is_err());
        assert!(ConstraintSet::custom(&c, &[("x1", "x3", 2.0)]).is_err());
        assert!(ConstraintSet::custom(&c, &[("x1", "x2", -1.0), ("x2", "x3", 1.0)]).is_err());
        assert_eq!(
            "inv-sqrt-w".parse::<ConstraintKind>().unwrap(),
            ConstraintKind::InverseSqrtWeight
        );
        assert!("bogus".parse::<ConstraintKind>().is_err());
    }
}
