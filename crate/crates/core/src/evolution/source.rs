use crate::error::{Error, Result};
use crate::graph::{VertexField, WeightedGraph};

/// Source field active on `[start, end)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub field: VertexField,
}

/// Piecewise-constant-in-time source `f(t, ·)`; zero outside all segments.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceSchedule {
    n: usize,
    segments: Vec<Segment>,
}

impl SourceSchedule {
    /// The zero source on a graph with `n` vertices.
    pub fn zero(n: usize) -> Self {
        SourceSchedule {
            n,
            segments: Vec::new(),
        }
    }

    /// A single segment `[start, end)`.
    pub fn constant(field: VertexField, start: f64, end: f64) -> Result<Self> {
        let n = field.len();
        Self::new(n, vec![Segment { start, end, field }])
    }

    /// Validates and sorts segments; they must not overlap.
    pub fn new(n: usize, mut segments: Vec<Segment>) -> Result<Self> {
        for s in &segments {
            if !(s.start < s.end) || !s.start.is_finite() || s.end.is_nan() {
                return Err(Error::InvalidParameter(format!(
                    "source segment needs start < end, got [{}, {})",
                    s.start, s.end
                )));
            }
            if s.field.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: s.field.len(),
                });
            }
            if s.field.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("source value".into()));
            }
        }
        segments.sort_by(|a, b| a.start.total_cmp(&b.start));
        for pair in segments.windows(2) {
            if pair[1].start < pair[0].end {
                return Err(Error::InvalidParameter(format!(
                    "source segments [{}, {}) and [{}, {}) overlap",
                    pair[0].start, pair[0].end, pair[1].start, pair[1].end
                )));
            }
        }
        Ok(SourceSchedule { n, segments })
    }

    /// Builds a one-segment source from sparse `(label, value)` pairs.
    pub fn from_pairs<S: AsRef<str>>(g: &WeightedGraph, pairs: &[(S, f64)], start: f64, end: f64) -> Result<Self> {
        Self::constant(g.field_from_pairs(pairs)?, start, end)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    fn segment_at(&self, t: f64) -> Option<&Segment> {
        self.segments.iter().find(|s| s.start <= t && t < s.end)
    }

    /// `f(t, ·)`.
    pub fn eval(&self, t: f64) -> VertexField {
        self.segment_at(t)
            .map(|s| s.field.clone())
            .unwrap_or_else(|| VertexField::zeros(self.n))
    }

    /// Segment start and end times, sorted.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .segments
            .iter()
            .flat_map(|s| [s.start, s.end])
            .filter(|t| t.is_finite())
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    pub fn is_nonnegative(&self) -> bool {
        self.segments.iter().all(|s| s.field.iter().all(|&v| v >= 0.0))
    }

    /// Pointwise `self <= other` at every time.
    pub fn is_dominated_by(&self, other: &SourceSchedule) -> bool {
        let mut times = self.boundaries();
        times.extend(other.boundaries());
        times.sort_by(f64::total_cmp);
        times.dedup();
        // checking each boundary (and just after it) covers every piece
        times.iter().all(|&t| {
            let (a, b) = (self.eval(t), other.eval(t));
            a.iter().zip(b.iter()).all(|(x, y)| x <= y)
        }) && {
            let (a, b) = (self.eval(f64::MIN), other.eval(f64::MIN));
            a.iter().zip(b.iter()).all(|(x, y)| x <= y)
        }
    }
}

/// Step times from `t0` to `t_end`: multiples of `dt` plus any source
/// boundary strictly inside the interval, so each step sees one source piece.
pub fn time_grid(t0: f64, t_end: f64, dt: f64, boundaries: &[f64]) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    if !(t_end > t0) || !t_end.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "final time {t_end} must exceed start time {t0}"
        )));
    }
    let span = t_end - t0;
    let steps = (span / dt + 1e-9).floor() as usize;
    let mut times: Vec<f64> = (0..=steps).map(|k| t0 + k as f64 * dt).collect();
    times.extend(boundaries.iter().copied().filter(|&b| b > t0 && b < t_end));
    times.push(t_end);
    times.sort_by(f64::total_cmp);
    let merge = 1e-9 * dt;
    let mut grid: Vec<f64> = Vec::with_capacity(times.len());
    for t in times {
        match grid.last() {
            Some(&last) if t - last <= merge => {}
            _ => grid.push(t),
        }
    }
    // the end point is exact
    if let Some(last) = grid.last_mut() {
        if (t_end - *last).abs() <= merge {
            *last = t_end;
        }
    }
    Ok(grid)
}
