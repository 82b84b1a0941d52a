//! Weighted graphs, vertex fields and the measure `ν(A) = Σ_{x∈A} d_x`.
//!
//! Vertices carry opaque string labels. Internally every vertex is an index
//! into the lexicographically sorted label list, so iteration order is the
//! same on every run. Edges are stored once, as `(a, b)` with `a < b`, sorted
//! by index pair.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::fmt;
use std::ops::{Index, IndexMut};
use std::path::Path;

use crate::error::{Error, Result};

/// Undirected edge between vertex indices `a < b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

impl Edge {
    /// The endpoint opposite to `x`.
    #[inline]
    pub fn other(&self, x: usize) -> usize {
        if x == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// Marks a finite window `{-R, .., R}` of the integer lattice. The two outer
/// rings act as a guard band: a run is only meaningful while the field stays
/// zero there.
#[derive(Clone, Debug, PartialEq)]
pub struct Truncation {
    pub radius: usize,
    pub guard: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct WeightedGraph {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    // (neighbor, edge id), sorted by neighbor
    adjacency: Vec<Vec<(usize, usize)>>,
    degrees: Vec<f64>,
    truncation: Option<Truncation>,
}

impl WeightedGraph {
    /// Builds a graph from `(x, y, w_xy)` triples.
    ///
    /// Rejects nonpositive weights, self-loops, duplicate edges (in either
    /// orientation) and disconnected graphs.
    pub fn build<S: AsRef<str>>(edge_list: &[(S, S, f64)]) -> Result<Self> {
        if edge_list.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut labels: Vec<String> = Vec::with_capacity(edge_list.len() + 1);
        for (x, y, w) in edge_list {
            let (x, y) = (x.as_ref(), y.as_ref());
            if x == y {
                return Err(Error::SelfLoop(x.to_string()));
            }
            if !(*w > 0.0) || !w.is_finite() {
                return Err(Error::NonPositiveWeight(x.to_string(), y.to_string(), *w));
            }
            labels.push(x.to_string());
            labels.push(y.to_string());
        }
        labels.sort();
        labels.dedup();
        let index: HashMap<String, usize> = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();

        let mut edges: Vec<Edge> = edge_list
            .iter()
            .map(|(x, y, w)| {
                let (i, j) = (index[x.as_ref()], index[y.as_ref()]);
                Edge {
                    a: i.min(j),
                    b: i.max(j),
                    weight: *w,
                }
            })
            .collect();
        edges.sort_by_key(|e| (e.a, e.b));
        for pair in edges.windows(2) {
            if pair[0].a == pair[1].a && pair[0].b == pair[1].b {
                return Err(Error::DuplicateEdge(
                    labels[pair[0].a].clone(),
                    labels[pair[0].b].clone(),
                ));
            }
        }

        let n = labels.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut degrees = vec![0.0; n];
        for (id, e) in edges.iter().enumerate() {
            adjacency[e.a].push((e.b, id));
            adjacency[e.b].push((e.a, id));
            degrees[e.a] += e.weight;
            degrees[e.b] += e.weight;
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }

        let graph = WeightedGraph {
            labels,
            index,
            edges,
            adjacency,
            degrees,
            truncation: None,
        };
        if graph.bfs(0).iter().any(|d| d.is_none()) {
            return Err(Error::Disconnected);
        }
        Ok(graph)
    }

    /// Parses the edge-list text format: one `<x> <y> <weight>` per line,
    /// `#` starts a comment line, blank lines are skipped.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut triples = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected `<vertex> <vertex> <weight>`, got {line:?}"),
                });
            }
            let w: f64 = parts[2].parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("bad weight {:?}", parts[2]),
            })?;
            triples.push((parts[0].to_string(), parts[1].to_string(), w));
        }
        Self::build(&triples)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = crate::error::read_file(path.as_ref())?;
        Self::parse_edge_list(&text)
    }

    /// Serializes to the edge-list text format.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            out.push_str(&format!("{} {} {}\n", self.labels[e.a], self.labels[e.b], e.weight));
        }
        out
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[inline]
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, x: usize) -> &str {
        &self.labels[x]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(label.to_string()))
    }

    /// Resolves a list of labels to vertex indices.
    pub fn resolve<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        labels.iter().map(|l| self.index_of(l.as_ref())).collect()
    }

    /// `(neighbor, edge id)` pairs of `x`, sorted by neighbor.
    #[inline]
    pub fn neighbors(&self, x: usize) -> &[(usize, usize)] {
        &self.adjacency[x]
    }

    #[inline]
    pub fn degree(&self, x: usize) -> f64 {
        self.degrees[x]
    }

    #[inline]
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Weight of the edge `x ~ y`, or `None` when they are not adjacent.
    pub fn weight(&self, x: usize, y: usize) -> Option<f64> {
        self.edge_between(x, y).map(|id| self.edges[id].weight)
    }

    pub fn edge_between(&self, x: usize, y: usize) -> Option<usize> {
        let adj = self.adjacency.get(x)?;
        adj.binary_search_by_key(&y, |&(n, _)| n).ok().map(|pos| adj[pos].1)
    }

    /// Largest edge weight, the bound `M_w` with `w_xy <= M_w`.
    pub fn max_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).fold(0.0, f64::max)
    }

    pub fn truncation(&self) -> Option<&Truncation> {
        self.truncation.as_ref()
    }

    fn check_vertex(&self, x: usize) -> Result<()> {
        if x < self.vertex_count() {
            Ok(())
        } else {
            Err(Error::UnknownVertex(format!("#{x}")))
        }
    }

    /// `ν(A) = Σ_{x∈A} d_x`.
    pub fn nu_mass(&self, set: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for &x in set {
            self.check_vertex(x)?;
            total += self.degrees[x];
        }
        Ok(total)
    }

    /// `⟨u, v⟩_ν = Σ_x u(x) v(x) d_x`.
    pub fn inner_product_nu(&self, u: &VertexField, v: &VertexField) -> Result<f64> {
        self.check_field(u)?;
        self.check_field(v)?;
        Ok(u.0
            .iter()
            .zip(&v.0)
            .zip(&self.degrees)
            .map(|((a, b), d)| a * b * d)
            .sum())
    }

    /// ν-weighted 2-norm.
    pub fn norm_nu(&self, u: &VertexField) -> f64 {
        u.0.iter()
            .zip(&self.degrees)
            .map(|(a, d)| a * a * d)
            .sum::<f64>()
            .sqrt()
    }

    /// ν-weighted 2-norm of `u - v`.
    pub fn distance_nu(&self, u: &VertexField, v: &VertexField) -> f64 {
        u.0.iter()
            .zip(&v.0)
            .zip(&self.degrees)
            .map(|((a, b), d)| (a - b) * (a - b) * d)
            .sum::<f64>()
            .sqrt()
    }

    /// Total ν-mass `Σ_x u(x) d_x` of a field.
    pub fn total_mass(&self, u: &VertexField) -> f64 {
        u.0.iter().zip(&self.degrees).map(|(a, d)| a * d).sum()
    }

    pub fn check_field(&self, u: &VertexField) -> Result<()> {
        if u.len() != self.vertex_count() {
            return Err(Error::LengthMismatch {
                expected: self.vertex_count(),
                found: u.len(),
            });
        }
        if let Some(pos) = u.0.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field value at vertex {}", self.labels[pos])));
        }
        Ok(())
    }

    fn bfs(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.vertex_count()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(x) = queue.pop_front() {
            let dx = dist[x].unwrap_or(0);
            for &(y, _) in &self.adjacency[x] {
                if dist[y].is_none() {
                    dist[y] = Some(dx + 1);
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Hop distance `d_G(x, y)`; weights are ignored.
    pub fn graph_distance(&self, x: usize, y: usize) -> Result<usize> {
        self.check_vertex(x)?;
        self.check_vertex(y)?;
        Ok(self.bfs(x)[y].expect("graph is connected"))
    }

    /// Shortest-path distance with edge length `lengths[edge id]`.
    pub fn constraint_distance(&self, lengths: &[f64], x: usize, y: usize) -> Result<f64> {
        self.check_vertex(x)?;
        self.check_vertex(y)?;
        self.check_lengths(lengths)?;
        Ok(self.dijkstra(lengths, x)[y])
    }

    fn check_lengths(&self, lengths: &[f64]) -> Result<()> {
        if lengths.len() != self.edge_count() {
            return Err(Error::LengthMismatch {
                expected: self.edge_count(),
                found: lengths.len(),
            });
        }
        if lengths.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "edge lengths must be positive and finite".into(),
            ));
        }
        Ok(())
    }

    fn dijkstra(&self, lengths: &[f64], source: usize) -> Vec<f64> {
        #[derive(PartialEq)]
        struct State(f64, usize);
        impl Eq for State {}
        impl PartialOrd for State {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for State {
            fn cmp(&self, other: &Self) -> Ordering {
                other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
            }
        }

        let mut dist = vec![f64::INFINITY; self.vertex_count()];
        dist[source] = 0.0;
        let mut heap = BinaryHeap::from([State(0.0, source)]);
        while let Some(State(d, x)) = heap.pop() {
            if d > dist[x] {
                continue;
            }
            for &(y, id) in &self.adjacency[x] {
                let nd = d + lengths[id];
                if nd < dist[y] {
                    dist[y] = nd;
                    heap.push(State(nd, y));
                }
            }
        }
        dist
    }

    /// All-pairs hop distances.
    pub fn distance_table(&self) -> DistanceTable {
        let n = self.vertex_count();
        let mut data = Vec::with_capacity(n * n);
        for x in 0..n {
            data.extend(self.bfs(x).into_iter().map(|d| d.unwrap_or(0) as f64));
        }
        DistanceTable { n, data }
    }

    /// All-pairs shortest paths with the given edge lengths.
    pub fn constraint_distance_table(&self, lengths: &[f64]) -> Result<DistanceTable> {
        self.check_lengths(lengths)?;
        let n = self.vertex_count();
        let mut data = Vec::with_capacity(n * n);
        for x in 0..n {
            data.extend(self.dijkstra(lengths, x));
        }
        Ok(DistanceTable { n, data })
    }

    /// `{y ∉ A : y ~ x for some x ∈ A}`, sorted.
    pub fn nonlocal_boundary(&self, set: &[usize]) -> Result<Vec<usize>> {
        let mut inside = vec![false; self.vertex_count()];
        for &x in set {
            self.check_vertex(x)?;
            inside[x] = true;
        }
        let mut hit = vec![false; self.vertex_count()];
        for &x in set {
            for &(y, _) in &self.adjacency[x] {
                if !inside[y] {
                    hit[y] = true;
                }
            }
        }
        Ok((0..self.vertex_count()).filter(|&y| hit[y]).collect())
    }

    /// Path `x1 - x2 - ... - xn` with unit weights.
    pub fn path(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize(format!("path needs n >= 2, got {n}")));
        }
        let edges: Vec<(String, String, f64)> = (1..n).map(|i| (format!("x{i}"), format!("x{}", i + 1), 1.0)).collect();
        Self::build(&edges)
    }

    /// Star around `x1`: the first weight joins `x0 - x1`, weight `k`
    /// (k >= 1) joins `x1 - x{k+1}`.
    pub fn star(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSize("star needs at least one weight".into()));
        }
        let edges: Vec<(String, String, f64)> = weights
            .iter()
            .enumerate()
            .map(|(k, &w)| {
                if k == 0 {
                    ("x0".to_string(), "x1".to_string(), w)
                } else {
                    ("x1".to_string(), format!("x{}", k + 1), w)
                }
            })
            .collect();
        Self::build(&edges)
    }

    /// The integers `{-R, .., R}` with unit weights between neighbours. The
    /// vertices with `|x| >= R - 1` form the guard band.
    pub fn truncated_z(radius: usize) -> Result<Self> {
        if radius < 1 {
            return Err(Error::InvalidSize("truncated Z needs radius >= 1".into()));
        }
        let r = radius as i64;
        let edges: Vec<(String, String, f64)> = (-r..r).map(|x| (x.to_string(), (x + 1).to_string(), 1.0)).collect();
        let mut graph = Self::build(&edges)?;
        let guard = (-r..=r)
            .filter(|x| x.unsigned_abs() as usize + 1 >= radius)
            .map(|x| graph.index[&x.to_string()])
            .collect();
        graph.truncation = Some(Truncation { radius, guard });
        Ok(graph)
    }

    /// Errors with [`Error::TruncationTooSmall`] when a truncated lattice
    /// field is nonzero on the guard band. No-op for other graphs.
    pub fn check_guard_band(&self, u: &VertexField) -> Result<()> {
        if let Some(t) = &self.truncation {
            for &x in &t.guard {
                if u[x] != 0.0 {
                    return Err(Error::TruncationTooSmall {
                        vertex: self.labels[x].clone(),
                        value: u[x],
                    });
                }
            }
        }
        Ok(())
    }

    /// Builds a field from sparse `(label, value)` pairs; other vertices are 0.
    pub fn field_from_pairs<S: AsRef<str>>(&self, pairs: &[(S, f64)]) -> Result<VertexField> {
        let mut u = VertexField::zeros(self.vertex_count());
        for (label, value) in pairs {
            let x = self.index_of(label.as_ref())?;
            if !value.is_finite() {
                return Err(Error::NonFinite(format!("value at {}", label.as_ref())));
            }
            u[x] = *value;
        }
        Ok(u)
    }

    /// Builds a field from values listed in vertex order.
    pub fn field(&self, values: Vec<f64>) -> Result<VertexField> {
        let u = VertexField(values);
        self.check_field(&u)?;
        Ok(u)
    }
}

/// Dense metric on the vertex set.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceTable {
    n: usize,
    data: Vec<f64>,
}

impl DistanceTable {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[x * self.n + y]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// Real value per vertex, indexed like the graph's vertices.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct VertexField(pub Vec<f64>);

impl VertexField {
    pub fn zeros(n: usize) -> Self {
        VertexField(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        VertexField(vec![value; n])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, factor: f64, other: &VertexField) -> VertexField {
        VertexField(self.0.iter().zip(&other.0).map(|(a, b)| a + factor * b).collect())
    }

    pub fn scaled(&self, factor: f64) -> VertexField {
        VertexField(self.0.iter().map(|a| a * factor).collect())
    }

    pub fn sub(&self, other: &VertexField) -> VertexField {
        self.add_scaled(-1.0, other)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<usize> for VertexField {
    type Output = f64;
    #[inline]
    fn index(&self, x: usize) -> &f64 {
        &self.0[x]
    }
}

impl IndexMut<usize> for VertexField {
    #[inline]
    fn index_mut(&mut self, x: usize) -> &mut f64 {
        &mut self.0[x]
    }
}

impl From<Vec<f64>> for VertexField {
    fn from(v: Vec<f64>) -> Self {
        VertexField(v)
    }
}

impl fmt::Display for VertexField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}
