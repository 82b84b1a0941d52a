//! Nonlocal gradient, divergence, graph Laplacian and the p-energies.
//!
//! Both p-Laplacians share one kernel. With per-edge bounds `c_xy` the
//! energy is
//!
//! ```text
//! J(u) = 1/(2p) Σ_{(x,y)} w_xy c_xy² (|u(y) - u(x)| / c_xy)^p
//! ```
//!
//! and `Δ_p u(x) = 1/d_x Σ_{y~x} w_xy c_xy φ_p((u(y) - u(x)) / c_xy)` with
//! `φ_p(s) = |s|^{p-2} s`. Uniform bounds (`c = 1`) give the plain graph
//! p-Laplacian, `c = 1/√w` gives the weighted one and `c = 1/w` the energy
//! `Σ w^{p-1} |∇u|^p / 2p`. Each `-Δ_p` is the gradient of its `J` in the
//! ν-weighted inner product.

use crate::error::{Error, Result};
use crate::graph::{VertexField, WeightedGraph};
use crate::proximal::ConstraintSet;

/// Below this magnitude a slope is treated as exactly zero in powers.
pub const POWER_FLOOR: f64 = 1e-300;

/// `sign(s) |s|^e`, evaluated as `exp(e ln|s|)`.
#[inline]
pub fn signed_pow(s: f64, e: f64) -> f64 {
    let a = s.abs();
    if a < POWER_FLOOR {
        0.0
    } else {
        (e * a.ln()).exp().copysign(s)
    }
}

/// `|s|^e`, with the same floor as [`signed_pow`].
#[inline]
pub fn abs_pow(s: f64, e: f64) -> f64 {
    let a = s.abs();
    if a < POWER_FLOOR {
        0.0
    } else {
        (e * a.ln()).exp()
    }
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p >= 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("p must be >= 2, got {p}")))
    }
}

/// Value per oriented edge. Edge `id` stores `(a -> b)` at `2 id` and
/// `(b -> a)` at `2 id + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeField(pub Vec<f64>);

impl EdgeField {
    pub fn zeros(g: &WeightedGraph) -> Self {
        EdgeField(vec![0.0; 2 * g.edge_count()])
    }

    /// Value on the oriented pair `(x, y)`, `None` if they are not adjacent.
    pub fn get(&self, g: &WeightedGraph, x: usize, y: usize) -> Option<f64> {
        let id = g.edge_between(x, y)?;
        let forward = g.edges()[id].a == x;
        Some(self.0[2 * id + usize::from(!forward)])
    }

    pub fn set(&mut self, g: &WeightedGraph, x: usize, y: usize, value: f64) -> Result<()> {
        let id = g
            .edge_between(x, y)
            .ok_or_else(|| Error::InvalidParameter(format!("{x} and {y} are not adjacent")))?;
        let forward = g.edges()[id].a == x;
        self.0[2 * id + usize::from(!forward)] = value;
        Ok(())
    }
}

/// `∇u(x, y) = u(y) - u(x)` on both orientations of every edge.
pub fn nonlocal_gradient(g: &WeightedGraph, u: &VertexField) -> EdgeField {
    let mut out = Vec::with_capacity(2 * g.edge_count());
    for e in g.edges() {
        let d = u[e.b] - u[e.a];
        out.push(d);
        out.push(-d);
    }
    EdgeField(out)
}

/// `div z(x) = 1/(2 d_x) Σ_{y~x} (z(x,y) - z(y,x)) w_xy`.
pub fn divergence(g: &WeightedGraph, z: &EdgeField) -> VertexField {
    let mut out = VertexField::zeros(g.vertex_count());
    for (id, e) in g.edges().iter().enumerate() {
        let (ab, ba) = (z.0[2 * id], z.0[2 * id + 1]);
        out[e.a] += 0.5 * (ab - ba) * e.weight;
        out[e.b] += 0.5 * (ba - ab) * e.weight;
    }
    for x in 0..g.vertex_count() {
        out[x] /= g.degree(x);
    }
    out
}

/// `Δu(x) = 1/d_x Σ_{y~x} w_xy (u(y) - u(x))`.
pub fn laplacian(g: &WeightedGraph, u: &VertexField) -> VertexField {
    let mut out = VertexField::zeros(g.vertex_count());
    for x in 0..g.vertex_count() {
        let s: f64 = g
            .neighbors(x)
            .iter()
            .map(|&(y, id)| g.edges()[id].weight * (u[y] - u[x]))
            .sum();
        out[x] = s / g.degree(x);
    }
    out
}

/// p-Laplacian for the energy selected by `k` (see the module docs).
pub fn p_laplacian(g: &WeightedGraph, k: &ConstraintSet, u: &VertexField, p: f64) -> Result<VertexField> {
    check_p(p)?;
    k.check(g)?;
    let mut out = VertexField::zeros(g.vertex_count());
    for (id, e) in g.edges().iter().enumerate() {
        let c = k.bound(id);
        // flux from a's point of view: w c φ((u_b - u_a)/c)
        let flux = e.weight * c * signed_pow((u[e.b] - u[e.a]) / c, p - 1.0);
        out[e.a] += flux;
        out[e.b] -= flux;
    }
    for x in 0..g.vertex_count() {
        out[x] /= g.degree(x);
        if !out[x].is_finite() {
            return Err(Error::NonFinite(format!(
                "p-Laplacian overflow at vertex {} (p = {p})",
                g.label(x)
            )));
        }
    }
    Ok(out)
}

/// `Δ_p^G u(x) = 1/d_x Σ_y |∇u(x,y)|^{p-2} ∇u(x,y) w_xy`.
pub fn p_laplacian_graph(g: &WeightedGraph, u: &VertexField, p: f64) -> Result<VertexField> {
    p_laplacian(g, &ConstraintSet::uniform(g), u, p)
}

/// `Δ_p^w u(x) = 1/d_x Σ_y (√w_xy)^{p-2} |∇u(x,y)|^{p-2} ∇u(x,y) w_xy`.
pub fn p_laplacian_weighted(g: &WeightedGraph, u: &VertexField, p: f64) -> Result<VertexField> {
    p_laplacian(g, &ConstraintSet::inverse_sqrt_weight(g), u, p)
}

/// p-energy `J(u)` for the model selected by `k`.
pub fn energy(g: &WeightedGraph, k: &ConstraintSet, u: &VertexField, p: f64) -> Result<f64> {
    check_p(p)?;
    k.check(g)?;
    // each unordered edge appears twice in the ordered sum
    let total: f64 = g
        .edges()
        .iter()
        .enumerate()
        .map(|(id, e)| {
            let c = k.bound(id);
            e.weight * c * c * abs_pow((u[e.b] - u[e.a]) / c, p)
        })
        .sum::<f64>()
        / p;
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::NonFinite(format!("p-energy overflow (p = {p})")))
    }
}

/// Relative residual of the integration by parts identity
/// `Σ_x Δ_p u(x) v(x) d_x = -½ Σ_{(x,y)} w c φ_p(∇u / c) ∇v`.
///
/// Both sides are computed independently; the result is
/// `|lhs + rhs| / max(1, |lhs|, |rhs|)`.
pub fn integration_by_parts_residual(
    g: &WeightedGraph,
    k: &ConstraintSet,
    u: &VertexField,
    v: &VertexField,
    p: f64,
) -> Result<f64> {
    let lap = p_laplacian(g, k, u, p)?;
    let lhs: f64 = (0..g.vertex_count()).map(|x| lap[x] * v[x] * g.degree(x)).sum();
    let grad_u = nonlocal_gradient(g, u);
    let grad_v = nonlocal_gradient(g, v);
    let mut rhs = 0.0;
    for (id, e) in g.edges().iter().enumerate() {
        let c = k.bound(id);
        for o in [2 * id, 2 * id + 1] {
            rhs += e.weight * c * signed_pow(grad_u.0[o] / c, p - 1.0) * grad_v.0[o];
        }
    }
    rhs *= 0.5;
    Ok((lhs + rhs).abs() / 1f64.max(lhs.abs()).max(rhs.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p4() -> WeightedGraph {
        WeightedGraph::path(4).unwrap()
    }

    fn single(w: f64) -> WeightedGraph {
        WeightedGraph::build(&[("a", "b", w)]).unwrap()
    }

    #[test]
    fn gradient_examples() {
        let g = p4();
        let grad = nonlocal_gradient(&g, &VertexField::constant(4, 3.0));
        assert!(grad.0.iter().all(|&v| v == 0.0));
        let grad = nonlocal_gradient(&g, &vec![0.0, 1.0, 3.0, 3.0].into());
        assert_eq!(grad.get(&g, 1, 2), Some(2.0));
        assert_eq!(grad.get(&g, 2, 1), Some(-2.0));
        assert_eq!(grad.get(&g, 0, 3), None);
    }

    #[test]
    fn divergence_examples() {
        let g = single(1.0);
        assert_eq!(divergence(&g, &EdgeField::zeros(&g)).values(), &[0.0, 0.0]);
        let mut z = EdgeField::zeros(&g);
        z.set(&g, 0, 1, 1.0).unwrap();
        assert_eq!(divergence(&g, &z).values(), &[0.5, -0.5]);
    }

    #[test]
    fn laplacian_of_indicator_on_p4() {
        let g = p4();
        let lap = laplacian(&g, &vec![0.0, 1.0, 0.0, 0.0].into());
        assert_eq!(lap.values(), &[1.0, -1.0, 0.5, 0.0]);
        assert!(laplacian(&g, &VertexField::constant(4, 2.0)).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn p_laplacian_single_edge() {
        let g = single(1.0);
        let lap = p_laplacian_graph(&g, &vec![0.0, 1.0].into(), 3.0).unwrap();
        assert!((lap[0] - 1.0).abs() < 1e-15 && (lap[1] + 1.0).abs() < 1e-15);

        let g4 = single(4.0);
        let lap = p_laplacian_weighted(&g4, &vec![0.0, 1.0].into(), 3.0).unwrap();
        assert!((lap[0] - 2.0).abs() < 1e-14, "{}", lap[0]);
        assert!((lap[1] + 2.0).abs() < 1e-14);

        for p in [2.0, 3.5, 64.0] {
            let c = p_laplacian_weighted(&g4, &VertexField::constant(2, 1.0), p).unwrap();
            assert_eq!(c.values(), &[0.0, 0.0]);
        }
    }

    #[test]
    fn energy_single_edge() {
        let g = single(1.0);
        let k = ConstraintSet::uniform(&g);
        let e = energy(&g, &k, &vec![0.0, 1.0].into(), 4.0).unwrap();
        assert!((e - 0.25).abs() < 1e-15);
        assert_eq!(energy(&g, &k, &VertexField::constant(2, 5.0), 4.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_small_p_and_reports_overflow() {
        let g = single(1.0);
        let u: VertexField = vec![0.0, 1e9].into();
        assert!(p_laplacian_graph(&g, &u, 1.5).is_err());
        assert!(matches!(p_laplacian_graph(&g, &u, 128.0), Err(Error::NonFinite(_))));
        assert!(matches!(
            energy(&g, &ConstraintSet::uniform(&g), &u, 128.0),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn large_p_keeps_sign_and_small_slopes_vanish() {
        let big = signed_pow(-2.0, 127.0);
        assert!((big / -(2f64.powi(127)) - 1.0).abs() < 1e-13);
        assert!(signed_pow(0.5, 127.0) > 0.0);
        assert_eq!(signed_pow(1e-301, 3.0), 0.0);
        assert!((signed_pow(-3.0, 2.0) + 9.0).abs() < 1e-13);
    }
}
