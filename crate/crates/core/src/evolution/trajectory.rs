use crate::graph::VertexField;

/// A step at which the set of saturated edge constraints changed.
#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub t: f64,
    /// Edge ids that became active (slope at the bound).
    pub activated: Vec<usize>,
    /// Edge ids that went slack.
    pub released: Vec<usize>,
}

/// Samples `(t_n, u^n)` of a solver run, with the per-step mass residual
/// `r_n = Σ (u^{n+1} - u^n) d_x - dt Σ f(t_n) d_x` and constraint events.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<VertexField>,
    residuals: Vec<f64>,
    events: Vec<Event>,
}

impl Trajectory {
    pub fn new(t0: f64, u0: VertexField) -> Self {
        Trajectory {
            times: vec![t0],
            states: vec![u0],
            residuals: Vec::new(),
            events: Vec::new(),
        }
    }

    /// Empty trajectory, as returned when there is nothing to evolve.
    pub fn empty() -> Self {
        Self::default()
    }

    /// Reassembles a trajectory from stored parts (e.g. a CSV file).
    pub fn from_parts(times: Vec<f64>, states: Vec<VertexField>, residuals: Vec<f64>) -> Self {
        Trajectory {
            times,
            states,
            residuals,
            events: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, t: f64, u: VertexField, residual: f64) {
        debug_assert!(self.times.last().is_none_or(|&last| t > last));
        self.times.push(t);
        self.states.push(u);
        self.residuals.push(residual);
    }

    pub(crate) fn push_event(&mut self, event: Event) {
        self.events.push(event);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[VertexField] {
        &self.states
    }

    /// Residual of the step ending at sample `n + 1`.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn first(&self) -> Option<&VertexField> {
        self.states.first()
    }

    pub fn last(&self) -> Option<&VertexField> {
        self.states.last()
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &VertexField)> {
        self.times.iter().copied().zip(&self.states)
    }

    /// Index `n` with `t_n <= t < t_{n+1}`, clamped to the sample range.
    pub fn step_index(&self, t: f64) -> Option<usize> {
        if self.times.is_empty() {
            return None;
        }
        let pos = self.times.partition_point(|&s| s <= t);
        Some(pos.saturating_sub(1).min(self.times.len() - 1))
    }

    /// Linear interpolation of `u(t, x)` between samples, clamped at the ends.
    pub fn value_at(&self, t: f64, x: usize) -> Option<f64> {
        let n = self.step_index(t)?;
        if n + 1 >= self.times.len() || t <= self.times[n] {
            return Some(self.states[n][x]);
        }
        let (t0, t1) = (self.times[n], self.times[n + 1]);
        let s = (t - t0) / (t1 - t0);
        Some(self.states[n][x] * (1.0 - s) + self.states[n + 1][x] * s)
    }

    /// Interpolated field at time `t`.
    pub fn state_at(&self, t: f64) -> Option<VertexField> {
        let n = self.states.first()?.len();
        Some(VertexField(
            (0..n).map(|x| self.value_at(t, x).unwrap_or(0.0)).collect(),
        ))
    }

    /// First time `u(·, x)` reaches `level`, interpolated linearly between
    /// the bracketing samples.
    pub fn first_crossing_time(&self, x: usize, level: f64) -> Option<f64> {
        let first = self.states.first()?;
        if first[x] >= level {
            return Some(self.times[0]);
        }
        for n in 1..self.states.len() {
            let (a, b) = (self.states[n - 1][x], self.states[n][x]);
            if b >= level {
                let s = if b > a { (level - a) / (b - a) } else { 1.0 };
                return Some(self.times[n - 1] + s * (self.times[n] - self.times[n - 1]));
            }
        }
        None
    }

    /// Average rate of `u(·, x)` over `[t0, t1]`.
    pub fn rate(&self, x: usize, t0: f64, t1: f64) -> Option<f64> {
        Some((self.value_at(t1, x)? - self.value_at(t0, x)?) / (t1 - t0))
    }

    /// Discrete rate `(u^{n+1} - u^n) / (t_{n+1} - t_n)` of the step
    /// containing `t`.
    pub fn discrete_rate(&self, t: f64) -> Option<VertexField> {
        let mut n = self.step_index(t)?;
        if n + 1 >= self.times.len() {
            n = n.checked_sub(1)?;
        }
        let dt = self.times[n + 1] - self.times[n];
        Some(self.states[n + 1].sub(&self.states[n]).scaled(1.0 / dt))
    }

    /// Times of events that activated at least one edge.
    pub fn activation_times(&self) -> Vec<f64> {
        self.events
            .iter()
            .filter(|e| !e.activated.is_empty())
            .map(|e| e.t)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> Trajectory {
        let mut tr = Trajectory::new(0.0, vec![0.0, 1.0].into());
        tr.push(1.0, vec![2.0, 1.0].into(), 0.0);
        tr.push(2.0, vec![4.0, 1.5].into(), 1e-12);
        tr
    }

    #[test]
    fn interpolation_and_crossings() {
        let tr = ramp();
        assert_eq!(tr.value_at(0.5, 0), Some(1.0));
        assert_eq!(tr.value_at(5.0, 0), Some(4.0));
        assert_eq!(tr.value_at(-1.0, 0), Some(0.0));
        assert_eq!(tr.first_crossing_time(0, 3.0), Some(1.5));
        assert_eq!(tr.first_crossing_time(1, 0.5), Some(0.0));
        assert_eq!(tr.first_crossing_time(1, 9.0), None);
        assert_eq!(tr.rate(0, 0.0, 2.0), Some(2.0));
        assert_eq!(tr.discrete_rate(1.5).unwrap().values(), &[2.0, 0.5]);
        assert_eq!(tr.discrete_rate(2.0).unwrap().values(), &[2.0, 0.5]);
        assert_eq!(tr.max_abs_residual(), 1e-12);
    }

    #[test]
    fn empty_trajectory() {
        let tr = Trajectory::empty();
        assert!(tr.is_empty());
        assert_eq!(tr.value_at(0.0, 0), None);
        assert_eq!(tr.max_abs_residual(), 0.0);
    }
}
