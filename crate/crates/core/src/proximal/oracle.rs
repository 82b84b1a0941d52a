//! Exact projection by enumeration, used as a test oracle for [`super::project`].
//!
//! The minimizer of `½ Σ d_x (v_x - z_x)²` over the stable set satisfies
//! KKT conditions whose multipliers can be chosen on linearly independent
//! constraint gradients, i.e. on a forest of edges. Enumerating every signed
//! forest, solving its equality-constrained problem in closed form and
//! keeping the best primal-feasible candidate therefore yields the exact
//! projection.

use crate::error::{Error, Result};
use crate::graph::{VertexField, WeightedGraph};

use super::ConstraintSet;

pub const MAX_ORACLE_EDGES: usize = 12;

struct Search<'a> {
    g: &'a WeightedGraph,
    k: &'a ConstraintSet,
    z: &'a VertexField,
    feasibility_tol: f64,
    best: Option<(f64, VertexField)>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl Search<'_> {
    fn recurse(&mut self, edge: usize, signs: &mut Vec<i8>, parent: &[usize]) {
        if edge == self.g.edge_count() {
            self.evaluate(signs);
            return;
        }
        signs.push(0);
        self.recurse(edge + 1, signs, parent);
        signs.pop();

        let e = self.g.edges()[edge];
        let mut joined = parent.to_vec();
        let (ra, rb) = (find(&mut joined, e.a), find(&mut joined, e.b));
        if ra == rb {
            return;
        }
        joined[ra] = rb;
        for sign in [1i8, -1] {
            signs.push(sign);
            self.recurse(edge + 1, signs, &joined);
            signs.pop();
        }
    }

    fn evaluate(&mut self, signs: &[i8]) {
        let g = self.g;
        let n = g.vertex_count();
        let mut height = vec![0.0; n];
        let mut component = vec![usize::MAX; n];
        let mut ncomp = 0;
        for root in 0..n {
            if component[root] != usize::MAX {
                continue;
            }
            component[root] = ncomp;
            let mut stack = vec![root];
            while let Some(x) = stack.pop() {
                for &(y, id) in g.neighbors(x) {
                    if signs[id] == 0 || component[y] != usize::MAX {
                        continue;
                    }
                    // active edge fixes v_b - v_a = sign * c
                    let e = g.edges()[id];
                    let step = f64::from(signs[id]) * self.k.bound(id);
                    height[y] = if y == e.b { height[x] + step } else { height[x] - step };
                    component[y] = ncomp;
                    stack.push(y);
                }
            }
            ncomp += 1;
        }

        let mut num = vec![0.0; ncomp];
        let mut den = vec![0.0; ncomp];
        for x in 0..n {
            num[component[x]] += g.degree(x) * (self.z[x] - height[x]);
            den[component[x]] += g.degree(x);
        }
        let v = VertexField(
            (0..n)
                .map(|x| height[x] + num[component[x]] / den[component[x]])
                .collect(),
        );

        let feasible = g
            .edges()
            .iter()
            .enumerate()
            .all(|(id, e)| (v[e.b] - v[e.a]).abs() <= self.k.bound(id) + self.feasibility_tol);
        if !feasible {
            return;
        }
        let objective: f64 = (0..n).map(|x| 0.5 * g.degree(x) * (v[x] - self.z[x]).powi(2)).sum();
        if self.best.as_ref().is_none_or(|(b, _)| objective < *b) {
            self.best = Some((objective, v));
        }
    }
}

/// Exact ν-weighted projection of `z` onto the stable set of `k`.
pub fn project_oracle(g: &WeightedGraph, k: &ConstraintSet, z: &VertexField) -> Result<VertexField> {
    k.check(g)?;
    g.check_field(z)?;
    if g.edge_count() > MAX_ORACLE_EDGES {
        return Err(Error::TooLarge(format!(
            "oracle handles at most {MAX_ORACLE_EDGES} edges, graph has {}",
            g.edge_count()
        )));
    }
    let scale = 1.0 + z.max_abs();
    let mut search = Search {
        g,
        k,
        z,
        feasibility_tol: 1e-12 * scale,
        best: None,
    };
    let parent: Vec<usize> = (0..g.vertex_count()).collect();
    search.recurse(0, &mut Vec::with_capacity(g.edge_count()), &parent);
    Ok(search
        .best
        .map(|(_, v)| v)
        .expect("constant fields are always feasible"))
}
