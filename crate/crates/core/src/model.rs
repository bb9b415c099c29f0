//! Observations, labels, sparse feature maps and linear scoring.
//!
//! A flat model scores label `y` for an observation `x` as the inner product
//! of a weight vector with the feature vector `phi(x, y)`. Feature vectors are
//! supplied precomputed per label, so the same code covers block-structured
//! multiclass encodings and arbitrary joint feature maps.

use crate::error::{Error, Result};

/// Finite label set of size `k >= 2`, optionally named.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    size: usize,
    names: Option<Vec<String>>,
}

impl LabelSet {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::invalid("label set", format!("size {size} < 2")));
        }
        Ok(Self { size, names: None })
    }

    pub fn named(names: Vec<String>) -> Result<Self> {
        let mut set = Self::new(names.len())?;
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::invalid("label set", format!("duplicate name {name:?}")));
            }
        }
        set.names = Some(names);
        Ok(set)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.as_ref()?.iter().position(|n| n == name)
    }
}

/// Sparse real vector with a fixed dimension.
///
/// Entries are kept sorted by index, duplicates are summed and zeros dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    entries: Vec<(usize, f64)>,
    dimension: usize,
}

impl FeatureVector {
    pub fn new(dimension: usize, entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::invalid("feature vector", "dimension must be positive"));
        }
        let mut entries: Vec<(usize, f64)> = entries.into_iter().collect();
        for &(index, value) in &entries {
            if index >= dimension {
                return Err(Error::invalid(
                    "feature vector",
                    format!("index {index} >= dimension {dimension}"),
                ));
            }
            if !value.is_finite() {
                return Err(Error::NonFinite(index));
            }
        }
        entries.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (index, value) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == index => last.1 += value,
                _ => merged.push((index, value)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        Ok(Self {
            entries: merged,
            dimension,
        })
    }

    pub fn from_dense(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), values.iter().copied().enumerate())
    }

    /// Places `values` at `offset..offset + values.len()` inside a vector of `dimension`.
    pub fn block(dimension: usize, offset: usize, values: &[f64]) -> Result<Self> {
        Self::new(
            dimension,
            values.iter().enumerate().map(|(i, &v)| (offset + i, v)),
        )
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    /// `out += scale * self`
    pub fn add_scaled_to(&self, scale: f64, out: &mut [f64]) {
        for &(i, v) in &self.entries {
            out[i] += scale * v;
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension];
        self.add_scaled_to(1.0, &mut out);
        out
    }
}

/// Dense parameter vector `w`. All entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self(values))
    }

    pub fn zeros(dimension: usize) -> Self {
        Self(vec![0.0; dimension])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// One training pair: the per-label feature vectors `phi(x, y)` and the gold label.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatInstance {
    features: Vec<FeatureVector>,
    gold: usize,
}

impl FlatInstance {
    pub fn new(features: Vec<FeatureVector>, gold: usize) -> Result<Self> {
        if features.len() < 2 {
            return Err(Error::invalid("flat instance", "need at least two labels"));
        }
        let dimension = features[0].dimension();
        if let Some(bad) = features.iter().find(|f| f.dimension() != dimension) {
            return Err(Error::DimensionMismatch {
                weights: dimension,
                features: bad.dimension(),
            });
        }
        if gold >= features.len() {
            return Err(Error::LabelOutOfRange {
                label: gold,
                count: features.len(),
            });
        }
        Ok(Self { features, gold })
    }

    /// Multiclass block encoding: label `y` sees `x` (plus an optional constant
    /// bias feature) in its own block of the weight vector.
    pub fn block_encoded(x: &[f64], label_count: usize, bias: bool, gold: usize) -> Result<Self> {
        let block = x.len() + usize::from(bias);
        let dimension = block * label_count;
        let features = (0..label_count)
            .map(|y| {
                let entries = x
                    .iter()
                    .copied()
                    .chain(bias.then_some(1.0))
                    .enumerate()
                    .map(|(i, v)| (y * block + i, v));
                FeatureVector::new(dimension, entries)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(features, gold)
    }

    pub fn label_count(&self) -> usize {
        self.features.len()
    }

    pub fn dimension(&self) -> usize {
        self.features[0].dimension()
    }

    pub fn gold(&self) -> usize {
        self.gold
    }

    pub fn features(&self) -> &[FeatureVector] {
        &self.features
    }

    /// Scores against a raw weight slice; the caller guarantees the dimension.
    pub(crate) fn scores_unchecked(&self, weights: &[f64]) -> Vec<f64> {
        self.features.iter().map(|phi| phi.dot(weights)).collect()
    }
}

/// Per-label real scores `f(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::invalid("score vector", "empty"));
        }
        if let Some(i) = scores.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self(scores))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Probability vector over a finite label set.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelDistribution(Vec<f64>);

impl LabelDistribution {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::invalid("label distribution", "empty"));
        }
        if let Some(i) = probabilities
            .iter()
            .position(|p| !p.is_finite() || *p < 0.0 || *p > 1.0)
        {
            return Err(Error::invalid(
                "label distribution",
                format!("entry {i} = {} outside [0, 1]", probabilities[i]),
            ));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > Self::TOLERANCE {
            return Err(Error::invalid(
                "label distribution",
                format!("sums to {total}"),
            ));
        }
        Ok(Self(probabilities))
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn score_flat(model: &WeightVector, instance: &FlatInstance) -> Result<ScoreVector> {
    if model.len() != instance.dimension() {
        return Err(Error::DimensionMismatch {
            weights: model.len(),
            features: instance.dimension(),
        });
    }
    Ok(ScoreVector(instance.scores_unchecked(model.values())))
}

/// Index of the first maximum. Ties go to the lowest index.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Highest-scoring label other than `excluded`, lowest index on ties.
pub(crate) fn argmax_excluding(values: &[f64], excluded: usize) -> usize {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if i == excluded {
            continue;
        }
        match best {
            Some(b) if v <= values[b] => {}
            _ => best = Some(i),
        }
    }
    best.expect("at least two labels")
}

pub fn predict(scores: &ScoreVector) -> Result<usize> {
    if let Some(i) = scores.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(argmax(scores.values()))
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Normalized exponentials, written into `out`.
pub(crate) fn softmax_into(scores: &[f64], out: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, s) in out.iter_mut().zip(scores) {
        *o = (s - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

pub fn softmax(scores: &ScoreVector) -> LabelDistribution {
    let mut out = vec![0.0; scores.len()];
    softmax_into(scores.values(), &mut out);
    LabelDistribution(out)
}

/// `f[gold] - max_{y != gold} f[y]`.
pub fn margin(scores: &ScoreVector, gold: usize) -> Result<f64> {
    let values = scores.values();
    if values.len() < 2 {
        return Err(Error::invalid("score vector", "margin needs at least two labels"));
    }
    if gold >= values.len() {
        return Err(Error::LabelOutOfRange {
            label: gold,
            count: values.len(),
        });
    }
    Ok(values[gold] - values[argmax_excluding(values, gold)])
}
