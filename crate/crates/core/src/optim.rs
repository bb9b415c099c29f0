//! L-BFGS minimization of `data_term(w) + (lambda / 2) ||w||^2`.
//!
//! Two-loop recursion with Armijo backtracking. Curvature pairs with
//! `s'y <= 1e-10` are skipped. Non-smooth losses are handled by feeding their
//! subgradients straight into the recursion.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::TrainingSet;
use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::model::WeightVector;

/// Something that can be evaluated to a value and a (sub)gradient.
pub trait Objective {
    fn dimension(&self) -> usize;
    fn evaluate(&self, weights: &[f64]) -> Result<(f64, Vec<f64>)>;
}

/// Adapts a closure into an [`Objective`].
pub struct FnObjective<F> {
    dimension: usize,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    pub fn new(dimension: usize, f: F) -> Self {
        Self { dimension, f }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn evaluate(&self, weights: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((self.f)(weights))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimConfig {
    pub lambda: f64,
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop when the max-norm of the regularized gradient falls below this.
    pub gradient_tolerance: f64,
    pub armijo: f64,
    pub backtrack_factor: f64,
    pub max_backtracks: usize,
    /// Stop (unconverged) once the relative objective decrease stays below
    /// this for `stall_iterations` consecutive steps. Zero disables the check.
    pub stall_tolerance: f64,
    pub stall_iterations: usize,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            memory: 10,
            max_iterations: 500,
            gradient_tolerance: 1e-6,
            armijo: 1e-4,
            backtrack_factor: 0.5,
            max_backtracks: 50,
            stall_tolerance: 0.0,
            stall_iterations: 5,
        }
    }
}

impl OptimConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = self.memory > 0
            && self.max_iterations > 0
            && self.gradient_tolerance > 0.0
            && self.armijo > 0.0
            && self.backtrack_factor > 0.0
            && self.backtrack_factor < 1.0
            && self.max_backtracks > 0;
        if !positive || !(self.lambda >= 0.0) || !(self.stall_tolerance >= 0.0) {
            return Err(Error::invalid("optimizer config", format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub weights: WeightVector,
    pub final_value: f64,
    pub final_gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn regularized(
    objective: &dyn Objective,
    lambda: f64,
    weights: &[f64],
    iteration: usize,
) -> Result<(f64, Vec<f64>)> {
    let (mut value, mut gradient) = objective.evaluate(weights)?;
    if gradient.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            weights: weights.len(),
            features: gradient.len(),
        });
    }
    if lambda > 0.0 {
        value += 0.5 * lambda * dot(weights, weights);
        for (g, w) in gradient.iter_mut().zip(weights) {
            *g += lambda * w;
        }
    }
    if !value.is_finite() || gradient.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteObjective {
            iteration,
            point: weights.to_vec(),
        });
    }
    Ok((value, gradient))
}

struct History {
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    capacity: usize,
}

impl History {
    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        if sy <= 1e-10 {
            return;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    /// `-H g` via the two-loop recursion.
    fn direction(&self, gradient: &[f64]) -> Vec<f64> {
        let mut q = gradient.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            for qi in q.iter_mut() {
                *qi *= gamma;
            }
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        q.iter_mut().for_each(|x| *x = -*x);
        q
    }
}

/// Minimizes `objective(w) + (config.lambda / 2) ||w||^2` from `initial`.
///
/// The returned value is never above the initial objective. Line-search
/// failure ends the run with `converged = false`.
pub fn minimize(
    objective: &dyn Objective,
    config: &OptimConfig,
    initial: &WeightVector,
) -> Result<OptimResult> {
    config.validate()?;
    if initial.len() != objective.dimension() {
        return Err(Error::DimensionMismatch {
            weights: initial.len(),
            features: objective.dimension(),
        });
    }
    let lambda = config.lambda;
    let mut x = initial.values().to_vec();
    let (mut f, mut g) = regularized(objective, lambda, &x, 0)?;
    let mut history = History {
        pairs: VecDeque::with_capacity(config.memory),
        capacity: config.memory,
    };
    let mut iterations = 0;
    let mut stalled = 0;
    let mut converged = false;

    while iterations < config.max_iterations {
        if max_norm(&g) <= config.gradient_tolerance {
            converged = true;
            break;
        }
        let mut d = history.direction(&g);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            history.pairs.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut step = if history.pairs.is_empty() {
            (1.0 / max_norm(&g)).min(1.0)
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..config.max_backtracks {
            let candidate: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let (fc, gc) = regularized(objective, lambda, &candidate, iterations + 1)?;
            if fc <= f + config.armijo * step * slope {
                accepted = Some((candidate, fc, gc));
                break;
            }
            step *= config.backtrack_factor;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            break;
        };
        iterations += 1;

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        history.push(s, y);

        let decrease = f - f_new;
        x = x_new;
        f = f_new;
        g = g_new;

        if config.stall_tolerance > 0.0 {
            if decrease <= config.stall_tolerance * f.abs().max(1.0) {
                stalled += 1;
                if stalled >= config.stall_iterations {
                    break;
                }
            } else {
                stalled = 0;
            }
        }
    }
    if !converged && max_norm(&g) <= config.gradient_tolerance {
        converged = true;
    }

    Ok(OptimResult {
        final_gradient_norm: max_norm(&g),
        weights: WeightVector::new(x)?,
        final_value: f,
        iterations,
        converged,
    })
}

/// The data term `(1/m) sum_i loss(f(x_i), y_i)` of a training set.
pub struct DataTerm<'a, D: ?Sized> {
    spec: LossSpec,
    data: &'a D,
}

impl<D: TrainingSet + ?Sized> Objective for DataTerm<'_, D> {
    fn dimension(&self) -> usize {
        self.data.dimension()
    }

    fn evaluate(&self, weights: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.data.mean_loss_and_gradient(&self.spec, weights)
    }
}

/// Mean loss plus `(lambda / 2) ||w||^2` over a training set.
///
/// Evaluating this object gives the full regularized objective; training
/// hands [`BatchObjective::data_term`] to [`minimize`], which adds the
/// regularizer itself.
pub struct BatchObjective<'a, D: ?Sized> {
    spec: LossSpec,
    data: &'a D,
    lambda: f64,
}

pub fn regularized_batch_objective<'a, D: TrainingSet + ?Sized>(
    spec: LossSpec,
    dataset: &'a D,
    lambda: f64,
) -> Result<BatchObjective<'a, D>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid("lambda", lambda.to_string()));
    }
    Ok(BatchObjective {
        spec,
        data: dataset,
        lambda,
    })
}

impl<'a, D: TrainingSet + ?Sized> BatchObjective<'a, D> {
    pub fn data_term(&self) -> DataTerm<'a, D> {
        DataTerm {
            spec: self.spec,
            data: self.data,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Runs [`minimize`] from zero weights with this objective's lambda.
    ///
    /// When every score ties at the origin, a hinge subgradient need not be
    /// a descent direction and the first line search can fail outright. In
    /// that case a second run starts from [`escape_point`]; it replaces the
    /// zero result only if it ends lower by more than [`ESCAPE_IMPROVEMENT`]
    /// (relative), so the result never exceeds the value at zero.
    pub fn fit(&self, config: &OptimConfig) -> Result<OptimResult> {
        let config = OptimConfig {
            lambda: self.lambda,
            ..config.clone()
        };
        let dim = self.data.dimension();
        let from_zero = minimize(&self.data_term(), &config, &WeightVector::zeros(dim))?;
        if from_zero.converged || from_zero.iterations > 0 {
            return Ok(from_zero);
        }
        let escaped = minimize(&self.data_term(), &config, &escape_point(dim))?;
        let margin = ESCAPE_IMPROVEMENT * from_zero.final_value.abs().max(1.0);
        Ok(if escaped.final_value < from_zero.final_value - margin {
            escaped
        } else {
            from_zero
        })
    }
}

/// Relative decrease a restart must achieve to replace the zero start.
pub const ESCAPE_IMPROVEMENT: f64 = 1e-9;

/// Scale of the fixed restart point used by [`BatchObjective::fit`].
pub const ESCAPE_SCALE: f64 = 1e-3;

/// A fixed pseudo-random point of max-norm at most [`ESCAPE_SCALE`].
pub fn escape_point(dimension: usize) -> WeightVector {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let values = (0..dimension)
        .map(|_| ESCAPE_SCALE * rng.gen_range(-1.0..1.0))
        .collect();
    WeightVector::new(values).expect("finite")
}

impl<D: TrainingSet + ?Sized> Objective for BatchObjective<'_, D> {
    fn dimension(&self) -> usize {
        self.data.dimension()
    }

    fn evaluate(&self, weights: &[f64]) -> Result<(f64, Vec<f64>)> {
        regularized(&self.data_term(), self.lambda, weights, 0)
    }
}
