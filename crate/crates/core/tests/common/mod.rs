#![allow(dead_code)]

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sandpile_core::evolution::SourceSchedule;
use sandpile_core::{ConstraintKind, ConstraintSet, VertexField, WeightedGraph};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Closed-form lattice growth with `f = 1_{0}`: on `[n², (n+1)²]` the
/// pyramid `n - |k|` rises uniformly over `|k| <= n` at rate `1/(2n+1)`.
pub fn z_lattice_exact(t: f64, k: i64) -> f64 {
    let n = t.sqrt().floor() as i64;
    if k.abs() > n {
        return 0.0;
    }
    (n - k.abs()) as f64 + (t - (n * n) as f64) / (2 * n + 1) as f64
}

/// Connected graph on `n` vertices: a random spanning tree plus extra
/// edges with probability `extra`, weights in `[0.25, 4]`.
pub fn random_graph(rng: &mut impl Rng, n: usize, extra: f64) -> WeightedGraph {
    let label = |i: usize| format!("v{i}");
    let mut edges: Vec<(String, String, f64)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        edges.push((label(j), label(i), weight(rng)));
        seen.insert((j, i));
    }
    for i in 0..n {
        for j in i + 1..n {
            if !seen.contains(&(i, j)) && rng.gen_bool(extra) {
                edges.push((label(i), label(j), weight(rng)));
            }
        }
    }
    WeightedGraph::build(&edges).unwrap()
}

fn weight(rng: &mut impl Rng) -> f64 {
    // a few exact values keep some instances degenerate
    match rng.gen_range(0..4) {
        0 => 1.0,
        1 => 4.0,
        _ => rng.gen_range(0.25..4.0),
    }
}

pub fn random_field(rng: &mut impl Rng, n: usize, scale: f64) -> VertexField {
    VertexField((0..n).map(|_| rng.gen_range(-scale..scale)).collect())
}

pub fn random_kind(rng: &mut impl Rng) -> ConstraintKind {
    [
        ConstraintKind::Uniform,
        ConstraintKind::InverseSqrtWeight,
        ConstraintKind::InverseWeight,
    ][rng.gen_range(0..3)]
}

/// Random connected graph on 2..=max_n vertices, as a proptest strategy.
pub fn graph_strategy(max_n: usize) -> impl Strategy<Value = WeightedGraph> {
    (2..=max_n, any::<u64>()).prop_map(|(n, seed)| random_graph(&mut rng(seed), n, 0.4))
}

/// Graph with a field of matching length.
pub fn graph_and_field(max_n: usize, scale: f64) -> impl Strategy<Value = (WeightedGraph, VertexField)> {
    graph_strategy(max_n).prop_flat_map(move |g| {
        let n = g.vertex_count();
        (Just(g), prop::collection::vec(-scale..scale, n).prop_map(VertexField))
    })
}

pub fn kind_strategy() -> impl Strategy<Value = ConstraintKind> {
    prop_oneof![
        Just(ConstraintKind::Uniform),
        Just(ConstraintKind::InverseSqrtWeight),
        Just(ConstraintKind::InverseWeight),
    ]
}

pub fn nu_norm_q(g: &WeightedGraph, u: &VertexField, q: f64) -> f64 {
    if q.is_infinite() {
        return u.max_abs();
    }
    (0..g.vertex_count())
        .map(|x| u[x].abs().powf(q) * g.degree(x))
        .sum::<f64>()
        .powf(1.0 / q)
}

/// A growth scenario from the shipped examples.
pub struct Golden {
    pub name: &'static str,
    pub graph: WeightedGraph,
    pub constraints: ConstraintSet,
    pub u0: VertexField,
    pub source: SourceSchedule,
    pub t_end: f64,
}

pub fn golden_growth() -> Vec<Golden> {
    let mut out = Vec::new();
    let z = WeightedGraph::truncated_z(20).unwrap();
    out.push(Golden {
        name: "z_lattice",
        constraints: ConstraintSet::uniform(&z),
        u0: VertexField::zeros(z.vertex_count()),
        source: SourceSchedule::from_pairs(&z, &[("0", 1.0)], 0.0, 100.0).unwrap(),
        t_end: 16.0,
        graph: z,
    });
    let star = WeightedGraph::star(&[1.0, 1.0, 1.0]).unwrap();
    out.push(Golden {
        name: "star",
        constraints: ConstraintSet::uniform(&star),
        u0: VertexField::zeros(4),
        source: SourceSchedule::from_pairs(&star, &[("x0", 1.0)], 0.0, 100.0).unwrap(),
        t_end: 14.0,
        graph: star,
    });
    for (name, a) in [("p4_two_sources_a3", 3.0), ("p4_two_sources_a2", 2.0)] {
        let p4 = WeightedGraph::path(4).unwrap();
        out.push(Golden {
            name,
            constraints: ConstraintSet::uniform(&p4),
            u0: VertexField::zeros(4),
            source: SourceSchedule::from_pairs(&p4, &[("x2", a), ("x3", 1.0)], 0.0, 100.0).unwrap(),
            t_end: 3.0,
            graph: p4,
        });
    }
    let chain = WeightedGraph::build(&[("x1", "x2", 1.0), ("x2", "x3", 4.0)]).unwrap();
    out.push(Golden {
        name: "chain_w4_model2",
        constraints: ConstraintSet::inverse_sqrt_weight(&chain),
        u0: VertexField::zeros(3),
        source: SourceSchedule::from_pairs(&chain, &[("x2", 1.0)], 0.0, 100.0).unwrap(),
        t_end: 4.0,
        graph: chain,
    });
    out
}

/// Collapse goldens: (name, u0, expected limit) on paths.
pub fn golden_collapse() -> Vec<(&'static str, Vec<f64>, Vec<f64>)> {
    vec![
        ("p4_b1", vec![0.0, 3.0, 0.0, 1.0], vec![0.8, 1.8, 0.8, 1.0]),
        ("p4_b1_5", vec![0.0, 3.0, 0.0, 1.5], vec![0.8, 1.8, 0.8, 1.5]),
        (
            "p4_b2",
            vec![0.0, 3.0, 0.0, 2.0],
            vec![5.0 / 6.0, 11.0 / 6.0, 5.0 / 6.0, 11.0 / 6.0],
        ),
        (
            "p6_collapse",
            vec![0.0, 3.0, 0.0, 1.8, 2.0, 0.0],
            vec![0.8, 1.8, 0.8, 1.8, 5.0 / 3.0, 2.0 / 3.0],
        ),
    ]
}
