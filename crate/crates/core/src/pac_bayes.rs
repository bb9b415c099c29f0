//! Computable parts of the PAC-Bayes margin bound for the hybrid loss.
//!
//! The posterior is an isotropic Gaussian `Q = N(w, I)` and the prior is
//! `N(0, I)`, so `KL(Q || P) = ||w||^2 / 2`. The right-hand side evaluated
//! here is
//!
//! ```text
//! mean([gamma - M_i]_+)
//!   + 1/(1 - alpha) * (alpha / sqrt(m)
//!       + sqrt((||w||^2 / 2 + ln A + ln(1 / (delta (1 - e^-2)))) / (2m)))
//! ```
//!
//! with `A` replaced by its upper bound `m + 1`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::TrainingSet;
use crate::error::{Error, Result};

/// Monte Carlo settings for expectations under the posterior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorSampling {
    pub samples: usize,
    /// Standard deviation of the Gaussian around `w`. Zero collapses the
    /// posterior onto `w`.
    pub scale: f64,
    pub seed: u64,
}

impl PosteriorSampling {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            scale: 1.0,
            seed,
        }
    }

    pub fn degenerate() -> Self {
        Self {
            samples: 1,
            scale: 0.0,
            seed: 0,
        }
    }
}

/// Posterior-averaged margin `E_Q[M(w', y_i)]` of every instance. Draws are
/// sample-major with coordinates filled in index order from one ChaCha8
/// stream.
pub fn posterior_mean_margins<D: TrainingSet + ?Sized>(
    data: &D,
    weights: &[f64],
    sampling: &PosteriorSampling,
) -> Result<Vec<f64>> {
    if sampling.samples == 0 {
        return Err(Error::invalid("posterior samples", "must be positive"));
    }
    if !(sampling.scale >= 0.0 && sampling.scale.is_finite()) {
        return Err(Error::invalid(
            "posterior scale",
            format!("{} is not a finite non-negative number", sampling.scale),
        ));
    }
    if weights.len() != data.dimension() {
        return Err(Error::DimensionMismatch {
            weights: weights.len(),
            features: data.dimension(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let mut totals = vec![0.0; data.len()];
    let mut perturbed = weights.to_vec();
    for _ in 0..sampling.samples {
        for (p, &w) in perturbed.iter_mut().zip(weights) {
            let eps: f64 = StandardNormal.sample(&mut rng);
            *p = w + sampling.scale * eps;
        }
        for (t, m) in totals.iter_mut().zip(data.margins(&perturbed)?) {
            *t += m;
        }
    }
    let n = sampling.samples as f64;
    Ok(totals.into_iter().map(|t| t / n).collect())
}

/// Fraction of instances whose posterior-averaged margin is at most `gamma`.
pub fn empirical_margin_error_with<D: TrainingSet + ?Sized>(
    data: &D,
    weights: &[f64],
    gamma: f64,
    sampling: &PosteriorSampling,
) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::invalid("gamma", format!("{gamma} is not positive")));
    }
    let means = posterior_mean_margins(data, weights, sampling)?;
    let hits = means.iter().filter(|&&m| m <= gamma).count();
    Ok(hits as f64 / means.len().max(1) as f64)
}

/// [`empirical_margin_error_with`] under the unit-variance posterior.
pub fn empirical_margin_error<D: TrainingSet + ?Sized>(
    data: &D,
    weights: &[f64],
    gamma: f64,
    posterior_samples: usize,
    seed: u64,
) -> Result<f64> {
    empirical_margin_error_with(
        data,
        weights,
        gamma,
        &PosteriorSampling::new(posterior_samples, seed),
    )
}

/// Per-instance `[gamma - M_i]_+`.
pub fn margin_losses(margins: &[f64], gamma: f64) -> Vec<f64> {
    margins.iter().map(|m| (gamma - m).max(0.0)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    pub weight_norm_sq: f64,
    pub sample_size: usize,
    pub label_count: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub delta: f64,
    pub posterior_samples: usize,
    pub empirical_margin_losses: Vec<f64>,
}

impl BoundInputs {
    fn validate(&self) -> Result<()> {
        if self.alpha == 1.0 {
            return Err(Error::BoundUndefinedAtAlphaOne);
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        if !(self.weight_norm_sq >= 0.0 && self.weight_norm_sq.is_finite()) {
            return Err(Error::invalid("weight norm", format!("{}", self.weight_norm_sq)));
        }
        if self.sample_size == 0 {
            return Err(Error::invalid("sample size", "must be positive"));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::invalid("gamma", format!("{} is not positive", self.gamma)));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::invalid("delta", format!("{} is outside (0, 1]", self.delta)));
        }
        if self.posterior_samples == 0 {
            return Err(Error::invalid("posterior samples", "must be positive"));
        }
        if let Some(bad) = self
            .empirical_margin_losses
            .iter()
            .find(|v| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::invalid("margin losses", format!("{bad} is not a finite non-negative value")));
        }
        Ok(())
    }
}

pub const A_SURROGATE_NOTE: &str = "ln A replaced by its upper bound ln(m + 1)";

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub empirical: f64,
    pub kl: f64,
    pub ln_a: f64,
    pub complexity: f64,
    pub rhs: f64,
    pub note: &'static str,
}

pub fn appendix_bound_rhs(inputs: &BoundInputs) -> Result<BoundReport> {
    inputs.validate()?;
    let m = inputs.sample_size as f64;
    let empirical = if inputs.empirical_margin_losses.is_empty() {
        0.0
    } else {
        inputs.empirical_margin_losses.iter().sum::<f64>()
            / inputs.empirical_margin_losses.len() as f64
    };
    let kl = inputs.weight_norm_sq / 2.0;
    let ln_a = (m + 1.0).ln();
    let confidence = (1.0 / (inputs.delta * (1.0 - (-2.0f64).exp()))).ln();
    let complexity = (inputs.alpha / m.sqrt() + ((kl + ln_a + confidence) / (2.0 * m)).sqrt())
        / (1.0 - inputs.alpha);
    Ok(BoundReport {
        empirical,
        kl,
        ln_a,
        complexity,
        rhs: empirical + complexity,
        note: A_SURROGATE_NOTE,
    })
}
