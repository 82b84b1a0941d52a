use crate::error::{Error, Result};
use crate::graph::{VertexField, WeightedGraph};

use super::ConstraintSet;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_SWEEPS: usize = 100_000;

/// ν-weighted projection onto the stable set of a [`ConstraintSet`].
///
/// Dykstra's cyclic scheme over the per-edge slabs
/// `{v : |v_y - v_x| <= c_xy}`, each projected in closed form in the
/// degree-weighted inner product. Edges are visited in the graph's canonical
/// order. The per-edge corrections are kept between calls, so a solver that
/// projects a slowly moving point warm-starts from the previous multipliers;
/// the fixed point does not depend on the starting corrections.
#[derive(Clone, Debug)]
pub struct Projector<'g> {
    graph: &'g WeightedGraph,
    constraints: &'g ConstraintSet,
    corrections: Vec<(f64, f64)>,
    tol: f64,
    max_sweeps: usize,
    last_sweeps: usize,
}

impl<'g> Projector<'g> {
    pub fn new(graph: &'g WeightedGraph, constraints: &'g ConstraintSet, tol: f64, max_sweeps: usize) -> Result<Self> {
        constraints.check(graph)?;
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be > 0, got {tol}")));
        }
        Ok(Projector {
            graph,
            constraints,
            corrections: vec![(0.0, 0.0); graph.edge_count()],
            tol,
            max_sweeps,
            last_sweeps: 0,
        })
    }

    /// Sweeps used by the most recent call.
    pub fn last_sweeps(&self) -> usize {
        self.last_sweeps
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn reset(&mut self) {
        self.corrections.fill((0.0, 0.0));
    }

    pub fn project(&mut self, z: &VertexField) -> Result<VertexField> {
        let g = self.graph;
        g.check_field(z)?;
        self.last_sweeps = 0;
        // tolerance-inclusive membership: feasible points are returned as is
        if self.constraints.is_stable(g, z, self.tol) {
            self.reset();
            return Ok(z.clone());
        }

        let mut x = z.clone();
        for (e, &(qa, qb)) in g.edges().iter().zip(&self.corrections) {
            x[e.a] -= qa;
            x[e.b] -= qb;
        }

        let degrees = g.degrees();
        let mut change = f64::INFINITY;
        for sweep in 1..=self.max_sweeps {
            let mut change_sq = 0.0;
            for (id, e) in g.edges().iter().enumerate() {
                let (qa, qb) = self.corrections[id];
                let c = self.constraints.bound(id);
                let wa = x[e.a] + qa;
                let wb = x[e.b] + qb;
                let gap = wb - wa;
                if qa == 0.0 && qb == 0.0 && gap.abs() <= c {
                    continue;
                }
                let (ya, yb) = if gap.abs() > c {
                    let (da, db) = (degrees[e.a], degrees[e.b]);
                    let excess = gap - c.copysign(gap);
                    (wa + excess * db / (da + db), wb - excess * da / (da + db))
                } else {
                    (wa, wb)
                };
                self.corrections[id] = (wa - ya, wb - yb);
                change_sq += degrees[e.a] * (ya - x[e.a]).powi(2) + degrees[e.b] * (yb - x[e.b]).powi(2);
                x[e.a] = ya;
                x[e.b] = yb;
            }
            change = change_sq.sqrt();
            if change <= self.tol && self.constraints.is_stable(g, &x, self.tol) {
                self.last_sweeps = sweep;
                return Ok(x);
            }
        }
        self.last_sweeps = self.max_sweeps;
        Err(Error::ProjectionNotConverged {
            iterations: self.max_sweeps,
            change,
        })
    }
}

/// Projects `z` onto the stable set of `k` in the ν-weighted norm, starting
/// from zero corrections.
pub fn project(
    g: &WeightedGraph,
    k: &ConstraintSet,
    z: &VertexField,
    tol: f64,
    max_sweeps: usize,
) -> Result<VertexField> {
    Projector::new(g, k, tol, max_sweeps)?.project(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasible_point_is_returned_unchanged() {
        let g = WeightedGraph::path(4).unwrap();
        let k = ConstraintSet::uniform(&g);
        let z: VertexField = vec![0.0, 1.0, 2.0, 1.0].into();
        let mut proj = Projector::new(&g, &k, 1e-10, 10).unwrap();
        assert_eq!(proj.project(&z).unwrap(), z);
        assert_eq!(proj.last_sweeps(), 0);
    }

    #[test]
    fn single_edge_closed_form() {
        let g = WeightedGraph::build(&[("a", "b", 1.0)]).unwrap();
        let k = ConstraintSet::uniform(&g);
        let u = project(&g, &k, &vec![0.0, 3.0].into(), 1e-12, 100).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-15 && (u[1] - 2.0).abs() < 1e-15);

        // unequal degrees: the heavier vertex moves less
        let g = WeightedGraph::build(&[("a", "b", 1.0), ("b", "c", 3.0)]).unwrap();
        let k = ConstraintSet::from_bounds(&g, vec![10.0, 1.0]).unwrap();
        let u = project(&g, &k, &vec![0.0, 0.0, 5.0].into(), 1e-12, 100).unwrap();
        // d_b = 4, d_c = 3, excess 4: b gains 4*3/7, c loses 4*4/7
        assert!((u[1] - 12.0 / 7.0).abs() < 1e-14);
        assert!((u[2] - (5.0 - 16.0 / 7.0)).abs() < 1e-14);
        assert_eq!(u[0], 0.0);
    }

    #[test]
    fn warm_start_reaches_same_point() {
        let g = WeightedGraph::path(5).unwrap();
        let k = ConstraintSet::uniform(&g);
        let mut warm = Projector::new(&g, &k, 1e-12, 10_000).unwrap();
        let mut z: VertexField = vec![0.0, 0.0, 4.0, 0.0, 0.0].into();
        for step in 0..5 {
            z[2] += 0.25 * step as f64;
            z[3] += 0.1;
            let a = warm.project(&z).unwrap();
            let b = project(&g, &k, &z, 1e-12, 10_000).unwrap();
            assert!(g.distance_nu(&a, &b) < 1e-9);
        }
    }

    #[test]
    fn reports_non_convergence() {
        let g = WeightedGraph::path(6).unwrap();
        let k = ConstraintSet::uniform(&g);
        let z: VertexField = vec![0.0, 0.0, 9.0, 0.0, 0.0, 0.0].into();
        assert!(matches!(
            project(&g, &k, &z, 1e-14, 2),
            Err(Error::ProjectionNotConverged { .. })
        ));
        assert!(project(&g, &k, &z, 0.0, 2).is_err());
    }
}
