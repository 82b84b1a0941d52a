use nalgebra::{DMatrix, DVector};

use crate::calculus::{abs_pow, check_p, energy, signed_pow};
use crate::error::{Error, Result};
use crate::graph::{VertexField, WeightedGraph};

use super::ConstraintSet;

/// Controls for the damped Newton iteration in [`Resolvent`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    /// Stop when the ν-norm of the gradient of Φ is at most this.
    pub tol: f64,
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iter: 500,
            armijo: 1e-4,
            max_halvings: 60,
        }
    }
}

/// Resolvent `(I + λ ∂J_p)^{-1}` of a p-energy in `L²(ν)`.
///
/// Evaluates the unique minimizer of
/// `Φ(v) = ½ Σ d_x (v_x - z_x)² + λ J_p(v)` by Newton's method with Armijo
/// backtracking. The Hessian is `diag(d) + λ L_p(v)`, where `L_p` is the
/// Laplacian with edge weights `(p-1) w |∇v/c|^{p-2}`.
#[derive(Clone, Debug)]
pub struct Resolvent<'g> {
    graph: &'g WeightedGraph,
    constraints: &'g ConstraintSet,
    p: f64,
    options: NewtonOptions,
    last_iterations: usize,
}

impl<'g> Resolvent<'g> {
    pub fn new(
        graph: &'g WeightedGraph,
        constraints: &'g ConstraintSet,
        p: f64,
        options: NewtonOptions,
    ) -> Result<Self> {
        check_p(p)?;
        constraints.check(graph)?;
        if !(options.tol > 0.0) {
            return Err(Error::InvalidParameter("Newton tol must be > 0".into()));
        }
        Ok(Resolvent {
            graph,
            constraints,
            p,
            options,
            last_iterations: 0,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn last_iterations(&self) -> usize {
        self.last_iterations
    }

    fn objective(&self, lambda: f64, z: &VertexField, v: &VertexField) -> f64 {
        let g = self.graph;
        let fit: f64 = (0..g.vertex_count())
            .map(|x| 0.5 * g.degree(x) * (v[x] - z[x]).powi(2))
            .sum();
        match energy(g, self.constraints, v, self.p) {
            Ok(j) => fit + lambda * j,
            Err(_) => f64::INFINITY,
        }
    }

    /// Euclidean gradient of Φ, i.e. `d_x (v_x - z_x) - λ d_x Δ_p v(x)`.
    fn gradient(&self, lambda: f64, z: &VertexField, v: &VertexField) -> Vec<f64> {
        let g = self.graph;
        let mut grad: Vec<f64> = (0..g.vertex_count()).map(|x| g.degree(x) * (v[x] - z[x])).collect();
        for (id, e) in g.edges().iter().enumerate() {
            let c = self.constraints.bound(id);
            let flux = lambda * e.weight * c * signed_pow((v[e.b] - v[e.a]) / c, self.p - 1.0);
            grad[e.a] -= flux;
            grad[e.b] += flux;
        }
        grad
    }

    fn nu_norm(&self, grad: &[f64]) -> f64 {
        grad.iter()
            .zip(self.graph.degrees())
            .map(|(r, d)| r * r / d)
            .sum::<f64>()
            .sqrt()
    }

    fn hessian(&self, lambda: f64, v: &VertexField) -> DMatrix<f64> {
        let g = self.graph;
        let n = g.vertex_count();
        let mut h = DMatrix::zeros(n, n);
        for x in 0..n {
            h[(x, x)] = g.degree(x);
        }
        for (id, e) in g.edges().iter().enumerate() {
            let c = self.constraints.bound(id);
            let k = lambda * e.weight * (self.p - 1.0) * abs_pow((v[e.b] - v[e.a]) / c, self.p - 2.0);
            h[(e.a, e.a)] += k;
            h[(e.b, e.b)] += k;
            h[(e.a, e.b)] -= k;
            h[(e.b, e.a)] -= k;
        }
        let max_diag = (0..n).map(|x| h[(x, x)]).fold(0.0, f64::max);
        let eps = 1e-12 * (1.0 + max_diag);
        for x in 0..n {
            h[(x, x)] += eps;
        }
        h
    }

    /// Resolvent of `z` with step `lambda`, starting the iteration at `z`.
    pub fn apply(&mut self, lambda: f64, z: &VertexField) -> Result<VertexField> {
        self.apply_from(lambda, z, z)
    }

    /// Same as [`Resolvent::apply`] with an explicit starting iterate.
    pub fn apply_from(&mut self, lambda: f64, z: &VertexField, start: &VertexField) -> Result<VertexField> {
        let g = self.graph;
        g.check_field(z)?;
        g.check_field(start)?;
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
        }
        self.last_iterations = 0;
        if lambda == 0.0 {
            return Ok(z.clone());
        }

        let opts = self.options;
        let mut v = start.clone();
        let mut phi = self.objective(lambda, z, &v);
        if !phi.is_finite() {
            // a wild start; z itself always has finite energy unless it overflows
            v = z.clone();
            phi = self.objective(lambda, z, &v);
            if !phi.is_finite() {
                return Err(Error::NonFinite("p-energy of the resolvent input".into()));
            }
        }
        let mut grad = self.gradient(lambda, z, &v);
        let mut grad_norm = self.nu_norm(&grad);

        for iter in 0..opts.max_iter {
            if grad_norm <= opts.tol {
                self.last_iterations = iter;
                return Ok(v);
            }
            let h = self.hessian(lambda, &v);
            let rhs = DVector::from_iterator(grad.len(), grad.iter().map(|r| -r));
            let step = match h.cholesky() {
                Some(ch) => ch.solve(&rhs),
                None => rhs.component_div(&DVector::from_column_slice(g.degrees())),
            };
            let slope: f64 = grad.iter().zip(step.iter()).map(|(a, b)| a * b).sum();

            let mut t = 1.0;
            let mut accepted = None;
            // once the predicted decrease is below the rounding level of Φ,
            // Armijo can only accept noise; the fallback below decides instead
            let halvings = if -slope > 64.0 * f64::EPSILON * (1.0 + phi.abs()) {
                opts.max_halvings
            } else {
                0
            };
            for _ in 0..=halvings {
                let trial = VertexField(v.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect());
                let trial_phi = self.objective(lambda, z, &trial);
                if trial_phi.is_finite() && trial_phi <= phi + opts.armijo * t * slope {
                    accepted = Some((trial, trial_phi));
                    break;
                }
                t *= 0.5;
            }
            let (next, next_phi) = match accepted {
                Some(found) => found,
                None => {
                    // Φ differences drown in rounding near the optimum; a full
                    // step that still shrinks the gradient is accepted there
                    let trial = VertexField(v.iter().zip(step.iter()).map(|(a, s)| a + s).collect());
                    let trial_grad = self.nu_norm(&self.gradient(lambda, z, &trial));
                    if trial_grad < grad_norm {
                        let trial_phi = self.objective(lambda, z, &trial);
                        (trial, trial_phi)
                    } else {
                        return Err(Error::LineSearch {
                            iteration: iter,
                            grad_norm,
                            energy: phi,
                        });
                    }
                }
            };
            v = next;
            phi = next_phi;
            grad = self.gradient(lambda, z, &v);
            grad_norm = self.nu_norm(&grad);
            if !grad_norm.is_finite() {
                return Err(Error::NonFinite(format!("Newton gradient at iteration {iter}")));
            }
        }
        if grad_norm <= opts.tol {
            self.last_iterations = opts.max_iter;
            return Ok(v);
        }
        Err(Error::NewtonNotConverged {
            iterations: opts.max_iter,
            grad_norm,
        })
    }
}

/// Minimizer of `½ Σ d (v - z)² + λ J_p(v)` for the energy selected by `k`,
/// stopping once the ν-norm of the gradient is at most `tol`.
pub fn resolvent_p(
    g: &WeightedGraph,
    k: &ConstraintSet,
    p: f64,
    lambda: f64,
    z: &VertexField,
    tol: f64,
) -> Result<VertexField> {
    let options = NewtonOptions {
        tol,
        ..NewtonOptions::default()
    };
    Resolvent::new(g, k, p, options)?.apply(lambda, z)
}
