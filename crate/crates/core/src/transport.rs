//! Monge-Kantorovich checks for the growth model: Lipschitz potentials,
//! the dual pairing, an exact small-instance transport solver and the
//! dual criteria for a supplied map.

use crate::error::{Error, Result};
use crate::evolution::{SourceSchedule, Trajectory};
use crate::graph::{DistanceTable, VertexField, WeightedGraph};

/// Largest support (per side) accepted by [`ot_cost_oracle`].
pub const MAX_SUPPORT: usize = 50;

/// Relative tolerance for the equal-mass requirement.
pub const MASS_TOL: f64 = 1e-9;

/// Two nonnegative densities of equal ν-mass and the metric they are
/// transported in. Masses are `f(x) d_x`.
#[derive(Clone, Debug)]
pub struct TransportInstance<'g> {
    graph: &'g WeightedGraph,
    dist: DistanceTable,
    f0: VertexField,
    f1: VertexField,
}

impl<'g> TransportInstance<'g> {
    /// Validates the densities. Entries within rounding of zero
    /// (`|v| <= 1e-9 max(1, max|f|)`) are clamped to 0.
    pub fn new(graph: &'g WeightedGraph, dist: DistanceTable, f0: VertexField, f1: VertexField) -> Result<Self> {
        if dist.len() != graph.vertex_count() {
            return Err(Error::LengthMismatch {
                expected: graph.vertex_count(),
                found: dist.len(),
            });
        }
        let f0 = clamp_density(graph, f0)?;
        let f1 = clamp_density(graph, f1)?;
        let (m0, m1) = (graph.total_mass(&f0), graph.total_mass(&f1));
        if (m0 - m1).abs() > MASS_TOL * m0.abs().max(m1.abs()).max(1.0) {
            return Err(Error::UnequalMass(m0, m1));
        }
        Ok(TransportInstance { graph, dist, f0, f1 })
    }

    /// Instance in the hop metric of the graph.
    pub fn with_graph_metric(graph: &'g WeightedGraph, f0: VertexField, f1: VertexField) -> Result<Self> {
        Self::new(graph, graph.distance_table(), f0, f1)
    }

    pub fn graph(&self) -> &WeightedGraph {
        self.graph
    }

    pub fn dist(&self) -> &DistanceTable {
        &self.dist
    }

    pub fn f0(&self) -> &VertexField {
        &self.f0
    }

    pub fn f1(&self) -> &VertexField {
        &self.f1
    }

    /// Same instance with source and target swapped.
    pub fn reversed(&self) -> Self {
        TransportInstance {
            graph: self.graph,
            dist: self.dist.clone(),
            f0: self.f1.clone(),
            f1: self.f0.clone(),
        }
    }
}

fn clamp_density(g: &WeightedGraph, f: VertexField) -> Result<VertexField> {
    g.check_field(&f)?;
    let floor = 1e-9 * f.max_abs().max(1.0);
    let mut out = f;
    for x in 0..out.len() {
        if out[x] < 0.0 {
            if out[x] >= -floor {
                out[x] = 0.0;
            } else {
                return Err(Error::NegativeDensity {
                    vertex: g.label(x).to_string(),
                    value: out[x],
                });
            }
        } else if out[x] <= floor * 1e-3 {
            out[x] = 0.0;
        }
    }
    Ok(out)
}

/// `|u(x) - u(y)| <= dist(x, y) + tol` for every pair.
pub fn is_lipschitz_wrt(dist: &DistanceTable, u: &VertexField, tol: f64) -> bool {
    let n = dist.len();
    if u.len() != n {
        return false;
    }
    (0..n).all(|x| (x + 1..n).all(|y| (u[x] - u[y]).abs() <= dist.get(x, y) + tol))
}

/// `Σ_x u(x) (f1(x) - f0(x)) d_x`.
pub fn kantorovich_pairing(g: &WeightedGraph, u: &VertexField, f0: &VertexField, f1: &VertexField) -> f64 {
    (0..g.vertex_count())
        .map(|x| u[x] * (f1[x] - f0[x]) * g.degree(x))
        .sum()
}

/// Exact optimal transport cost `min Σ dist(x, y) γ(x, y)` over plans with
/// marginals `f0 dν` and `f1 dν`.
///
/// Masses are rounded to integers on a power-of-two grid fine enough that
/// the rounding changes the cost by far less than `1e-12` relative; the
/// resulting transportation problem is solved exactly by successive
/// shortest augmenting paths.
pub fn ot_cost_oracle(inst: &TransportInstance<'_>) -> Result<f64> {
    let g = inst.graph;
    let supply: Vec<(usize, f64)> = support(g, &inst.f0);
    let demand: Vec<(usize, f64)> = support(g, &inst.f1);
    if supply.len() > MAX_SUPPORT || demand.len() > MAX_SUPPORT {
        return Err(Error::TooLarge(format!(
            "transport supports of size {} and {} exceed {MAX_SUPPORT}",
            supply.len(),
            demand.len()
        )));
    }
    if supply.is_empty() || demand.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = supply
        .iter()
        .map(|s| s.1)
        .sum::<f64>()
        .max(demand.iter().map(|s| s.1).sum());
    // 2^60 units for the total mass keeps every sum inside i64
    let scale = 2f64.powi(60 - total.log2().ceil() as i32);
    let mut s_units = to_units(&supply, scale);
    let mut d_units = to_units(&demand, scale);
    balance(&mut s_units, &mut d_units);

    let cost: Vec<Vec<f64>> = supply
        .iter()
        .map(|&(x, _)| demand.iter().map(|&(y, _)| inst.dist.get(x, y)).collect())
        .collect();
    let flow = transportation(&s_units, &d_units, &cost);
    let mut total_cost = 0.0;
    for (i, row) in flow.iter().enumerate() {
        for (j, &units) in row.iter().enumerate() {
            if units > 0 {
                total_cost += units as f64 * cost[i][j];
            }
        }
    }
    Ok(total_cost / scale)
}

fn support(g: &WeightedGraph, f: &VertexField) -> Vec<(usize, f64)> {
    (0..g.vertex_count())
        .filter(|&x| f[x] > 0.0)
        .map(|x| (x, f[x] * g.degree(x)))
        .collect()
}

fn to_units(masses: &[(usize, f64)], scale: f64) -> Vec<i64> {
    masses.iter().map(|&(_, m)| (m * scale).round() as i64).collect()
}

/// Makes both sides sum to the same integer by adjusting the largest entry
/// of the heavier side; the masses already agree to rounding.
fn balance(a: &mut [i64], b: &mut [i64]) {
    let diff: i64 = a.iter().sum::<i64>() - b.iter().sum::<i64>();
    let heavier = if diff > 0 { a } else { b };
    if let Some(max) = heavier.iter_mut().max() {
        *max -= diff.abs();
    }
}

/// Min-cost transportation by successive shortest paths with
/// Bellman-Ford on the residual network (reverse arcs carry negative cost).
/// Returns the flow on every supply-demand pair.
fn transportation(supply: &[i64], demand: &[i64], cost: &[Vec<f64>]) -> Vec<Vec<i64>> {
    let (ns, nd) = (supply.len(), demand.len());
    let mut flow = vec![vec![0i64; nd]; ns];
    let mut s_left: Vec<i64> = supply.to_vec();
    let mut d_left: Vec<i64> = demand.to_vec();
    // nodes: supplies 0..ns, demands ns..ns+nd
    let nodes = ns + nd;
    loop {
        if s_left.iter().all(|&s| s <= 0) || d_left.iter().all(|&d| d <= 0) {
            break;
        }
        let mut dist = vec![f64::INFINITY; nodes];
        let mut prev: Vec<Option<usize>> = vec![None; nodes];
        for i in 0..ns {
            if s_left[i] > 0 {
                dist[i] = 0.0;
            }
        }
        for _ in 0..nodes {
            let mut changed = false;
            for i in 0..ns {
                for j in 0..nd {
                    let c = cost[i][j];
                    let (si, dj) = (i, ns + j);
                    let slack = 1e-12 * (1.0 + c.abs());
                    // forward arc, unlimited capacity
                    if dist[si].is_finite() && dist[si] + c < dist[dj] - slack {
                        dist[dj] = dist[si] + c;
                        prev[dj] = Some(si);
                        changed = true;
                    }
                    // reverse arc where flow can be undone
                    if flow[i][j] > 0 && dist[dj].is_finite() && dist[dj] - c < dist[si] - slack {
                        dist[si] = dist[dj] - c;
                        prev[si] = Some(dj);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        // cheapest reachable demand node with remaining demand
        let target = (0..nd)
            .filter(|&j| d_left[j] > 0 && dist[ns + j].is_finite())
            .min_by(|&a, &b| dist[ns + a].total_cmp(&dist[ns + b]));
        let Some(j) = target else { break };

        let mut path = Vec::new();
        let mut node = ns + j;
        while let Some(p) = prev[node] {
            path.push((p, node));
            node = p;
            if path.len() > 2 * nodes {
                break;
            }
        }
        let origin = node;
        let mut amount = s_left[origin].min(d_left[j]);
        for &(a, b) in &path {
            if a >= ns {
                // reverse arc demand a -> supply b
                amount = amount.min(flow[b][a - ns]);
            }
        }
        if amount <= 0 {
            break;
        }
        for &(a, b) in &path {
            if a < ns {
                flow[a][b - ns] += amount;
            } else {
                flow[b][a - ns] -= amount;
            }
        }
        s_left[origin] -= amount;
        d_left[j] -= amount;
    }
    flow
}

/// Whether `u` closes the duality gap: `pairing >= cost - tol`.
///
/// Fails with [`Error::NotLipschitz`] if `u` is not 1-Lipschitz (to `tol`)
/// in the instance metric.
pub fn verify_potential(inst: &TransportInstance<'_>, u: &VertexField, tol: f64) -> Result<bool> {
    inst.graph.check_field(u)?;
    if !is_lipschitz_wrt(&inst.dist, u, tol) {
        return Err(Error::NotLipschitz);
    }
    let pairing = kantorovich_pairing(inst.graph, u, &inst.f0, &inst.f1);
    Ok(pairing >= ot_cost_oracle(inst)? - tol)
}

/// Dual criteria for a map `t_map`: `u` is Lipschitz and
/// `u(T(x)) - u(x) = dist(x, T(x))` on the support of `f0`, both to `tol`.
pub fn verify_dual_criteria(
    dist: &DistanceTable,
    u: &VertexField,
    t_map: &[usize],
    f0: &VertexField,
    tol: f64,
) -> bool {
    let n = dist.len();
    if u.len() != n || t_map.len() != n || f0.len() != n || t_map.iter().any(|&y| y >= n) {
        return false;
    }
    is_lipschitz_wrt(dist, u, tol)
        && (0..n)
            .filter(|&x| f0[x] > 0.0)
            .all(|x| (u[t_map[x]] - u[x] - dist.get(x, t_map[x])).abs() <= tol)
}

/// The transport problem behind a growth step: the discrete rate
/// `(u^{n+1} - u^n)/dt` of the step containing `t` is moved onto the
/// source `f(t_n)`. Returns the instance and the potential `u^{n+1}`.
pub fn growth_step_instance<'g>(
    g: &'g WeightedGraph,
    dist: DistanceTable,
    traj: &Trajectory,
    f: &SourceSchedule,
    t: f64,
) -> Result<(TransportInstance<'g>, VertexField)> {
    if traj.len() < 2 {
        return Err(Error::InvalidParameter("trajectory has no steps".into()));
    }
    let times = traj.times();
    let mut n = traj.step_index(t).unwrap_or(0);
    if n + 1 >= times.len() {
        n = times.len() - 2;
    }
    let rate = traj.discrete_rate(times[n]).expect("trajectory has a step");
    let u = traj.states()[n + 1].clone();
    let inst = TransportInstance::new(g, dist, rate, f.eval(times[n]))?;
    Ok((inst, u))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z_instance(g: &WeightedGraph) -> (VertexField, VertexField, VertexField) {
        let rate = g
            .field_from_pairs(&[("-1", 1.0 / 3.0), ("0", 1.0 / 3.0), ("1", 1.0 / 3.0)])
            .unwrap();
        let f = g.field_from_pairs(&[("0", 1.0)]).unwrap();
        let u = g.field_from_pairs(&[("-1", 0.5), ("0", 1.5), ("1", 0.5)]).unwrap();
        (rate, f, u)
    }

    #[test]
    fn lipschitz_examples() {
        let g = WeightedGraph::path(4).unwrap();
        let d = g.distance_table();
        assert!(is_lipschitz_wrt(&d, &VertexField::constant(4, 2.0), 0.0));
        assert!(is_lipschitz_wrt(&d, &vec![0.0, 1.0, 2.0, 3.0].into(), 0.0));
        assert!(!is_lipschitz_wrt(&d, &vec![0.0, 1.0, 2.0, 4.0].into(), 1e-9));
    }

    #[test]
    fn pairing_and_cost_on_the_lattice() {
        let g = WeightedGraph::truncated_z(5).unwrap();
        let (rate, f, u) = z_instance(&g);
        assert!((kantorovich_pairing(&g, &u, &rate, &f) - 4.0 / 3.0).abs() < 1e-14);
        let inst = TransportInstance::with_graph_metric(&g, rate.clone(), f.clone()).unwrap();
        assert!((ot_cost_oracle(&inst).unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert!(verify_potential(&inst, &u, 1e-9).unwrap());
        assert!(!verify_potential(&inst, &VertexField::zeros(g.vertex_count()), 1e-9).unwrap());
        assert_eq!(kantorovich_pairing(&g, &u, &f, &f), 0.0);
    }

    #[test]
    fn single_pair_cost() {
        let g = WeightedGraph::path(4).unwrap();
        // unit masses: densities divided by the end degrees (1)
        let inst =
            TransportInstance::with_graph_metric(&g, vec![1.0, 0.0, 0.0, 0.0].into(), vec![0.0, 0.0, 0.0, 1.0].into())
                .unwrap();
        assert!((ot_cost_oracle(&inst).unwrap() - 3.0).abs() < 1e-12);
        let same =
            TransportInstance::with_graph_metric(&g, vec![1.0, 2.0, 0.0, 0.5].into(), vec![1.0, 2.0, 0.0, 0.5].into())
                .unwrap();
        assert!(ot_cost_oracle(&same).unwrap().abs() < 1e-12);
    }

    #[test]
    fn dual_criteria() {
        let g = WeightedGraph::truncated_z(5).unwrap();
        let d = g.distance_table();
        let (rate, _, u) = z_instance(&g);
        let mut t: Vec<usize> = (0..g.vertex_count()).collect();
        let zero = g.index_of("0").unwrap();
        t[g.index_of("-1").unwrap()] = zero;
        t[g.index_of("1").unwrap()] = zero;
        assert!(verify_dual_criteria(&d, &u, &t, &rate, 1e-12));
        let identity: Vec<usize> = (0..g.vertex_count()).collect();
        assert!(verify_dual_criteria(&d, &u, &identity, &rate, 0.0));
        let mut flat = u.clone();
        flat[zero] = 0.5;
        assert!(!verify_dual_criteria(&d, &flat, &t, &rate, 1e-9));
    }

    #[test]
    fn validation() {
        let g = WeightedGraph::path(2).unwrap();
        assert!(matches!(
            TransportInstance::with_graph_metric(&g, vec![1.0, 0.0].into(), vec![0.0, 2.0].into()),
            Err(Error::UnequalMass(..))
        ));
        assert!(matches!(
            TransportInstance::with_graph_metric(&g, vec![-1.0, 2.0].into(), vec![0.0, 1.0].into()),
            Err(Error::NegativeDensity { .. })
        ));
        let inst = TransportInstance::with_graph_metric(&g, vec![-1e-15, 1.0].into(), vec![1.0, 0.0].into()).unwrap();
        assert_eq!(inst.f0()[0], 0.0);
        let bad = TransportInstance::with_graph_metric(&g, vec![0.0, 1.0].into(), vec![1.0, 0.0].into()).unwrap();
        assert!(matches!(
            verify_potential(&bad, &vec![0.0, 5.0].into(), 1e-9),
            Err(Error::NotLipschitz)
        ));
    }
}
