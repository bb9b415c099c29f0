//! Log, multiclass hinge and hybrid losses over score vectors.
//!
//! The hinge is evaluated on raw scores. Under the softmax link the
//! probabilistic hinge `[1 - ln(p_y / max_{y'} p_{y'})]_+` is the same number,
//! because `ln(p_y / p_{y'}) = f_y - f_{y'}`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{argmax_excluding, log_sum_exp, softmax_into, FlatInstance, ScoreVector, WeightVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LossKind {
    Log,
    Hinge,
    Hybrid,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [LossKind::Log, LossKind::Hinge, LossKind::Hybrid];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Log => "log",
            LossKind::Hinge => "hinge",
            LossKind::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log" => Ok(LossKind::Log),
            "hinge" => Ok(LossKind::Hinge),
            "hybrid" => Ok(LossKind::Hybrid),
            other => Err(Error::invalid("loss kind", other.to_string())),
        }
    }
}

/// Loss selector. `alpha` is the weight on the log component:
/// log is `alpha = 1`, hinge is `alpha = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    kind: LossKind,
    alpha: f64,
}

impl LossSpec {
    pub fn log() -> Self {
        Self {
            kind: LossKind::Log,
            alpha: 1.0,
        }
    }

    pub fn hinge() -> Self {
        Self {
            kind: LossKind::Hinge,
            alpha: 0.0,
        }
    }

    pub fn hybrid(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            kind: LossKind::Hybrid,
            alpha,
        })
    }

    /// Builds a spec; `alpha` is ignored for the pure losses.
    pub fn new(kind: LossKind, alpha: f64) -> Result<Self> {
        match kind {
            LossKind::Log => Ok(Self::log()),
            LossKind::Hinge => Ok(Self::hinge()),
            LossKind::Hybrid => Self::hybrid(alpha),
        }
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub(crate) fn uses_log(&self) -> bool {
        self.alpha > 0.0
    }

    pub(crate) fn uses_hinge(&self) -> bool {
        self.alpha < 1.0
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            LossKind::Hybrid => write!(f, "hybrid({})", self.alpha),
            kind => f.write_str(kind.name()),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// Loss value together with a subgradient with respect to the scores.
#[derive(Debug, Clone, PartialEq)]
pub struct LossEval {
    pub value: f64,
    pub score_gradient: Vec<f64>,
}

fn check_gold(scores: &ScoreVector, gold: usize) -> Result<()> {
    if gold >= scores.len() {
        return Err(Error::LabelOutOfRange {
            label: gold,
            count: scores.len(),
        });
    }
    Ok(())
}

pub fn log_loss(scores: &ScoreVector, gold: usize) -> Result<LossEval> {
    check_gold(scores, gold)?;
    let values = scores.values();
    let mut gradient = vec![0.0; values.len()];
    softmax_into(values, &mut gradient);
    gradient[gold] -= 1.0;
    let value = (log_sum_exp(values) - values[gold]).max(0.0);
    Ok(LossEval {
        value,
        score_gradient: gradient,
    })
}

pub fn hinge_loss(scores: &ScoreVector, gold: usize) -> Result<LossEval> {
    check_gold(scores, gold)?;
    let values = scores.values();
    if values.len() < 2 {
        return Err(Error::invalid("score vector", "hinge needs at least two labels"));
    }
    let competitor = argmax_excluding(values, gold);
    let slack = 1.0 - (values[gold] - values[competitor]);
    let mut gradient = vec![0.0; values.len()];
    // at the kink (slack == 0) the zero subgradient is taken
    if slack > 0.0 {
        gradient[gold] = -1.0;
        gradient[competitor] = 1.0;
    }
    Ok(LossEval {
        value: slack.max(0.0),
        score_gradient: gradient,
    })
}

pub fn hybrid_loss(scores: &ScoreVector, gold: usize, alpha: f64) -> Result<LossEval> {
    check_alpha(alpha)?;
    let log = log_loss(scores, gold)?;
    let hinge = hinge_loss(scores, gold)?;
    Ok(LossEval {
        value: alpha * log.value + (1.0 - alpha) * hinge.value,
        score_gradient: log
            .score_gradient
            .iter()
            .zip(&hinge.score_gradient)
            .map(|(l, h)| alpha * l + (1.0 - alpha) * h)
            .collect(),
    })
}

pub fn evaluate(spec: &LossSpec, scores: &ScoreVector, gold: usize) -> Result<LossEval> {
    match spec.kind {
        LossKind::Log => log_loss(scores, gold),
        LossKind::Hinge => hinge_loss(scores, gold),
        LossKind::Hybrid => hybrid_loss(scores, gold, spec.alpha),
    }
}

/// Loss on one flat instance and its gradient in weight space,
/// `sum_y dL/df_y * phi(x, y)`.
pub fn loss_and_weight_gradient(
    spec: &LossSpec,
    model: &WeightVector,
    instance: &FlatInstance,
) -> Result<(f64, Vec<f64>)> {
    if model.len() != instance.dimension() {
        return Err(Error::DimensionMismatch {
            weights: model.len(),
            features: instance.dimension(),
        });
    }
    let mut gradient = vec![0.0; model.len()];
    let value = accumulate_flat(spec, model.values(), instance, 1.0, &mut gradient)?;
    Ok((value, gradient))
}

/// Adds `scale` times the weight gradient into `gradient` and returns the loss.
pub(crate) fn accumulate_flat(
    spec: &LossSpec,
    weights: &[f64],
    instance: &FlatInstance,
    scale: f64,
    gradient: &mut [f64],
) -> Result<f64> {
    let scores = ScoreVector::new(instance.scores_unchecked(weights))?;
    let eval = evaluate(spec, &scores, instance.gold())?;
    for (phi, &g) in instance.features().iter().zip(&eval.score_gradient) {
        if g != 0.0 {
            phi.add_scaled_to(scale * g, gradient);
        }
    }
    Ok(eval.value)
}
