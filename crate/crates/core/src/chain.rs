//! Linear-chain model over tag sequences.
//!
//! A tag sequence `y` for an observation sequence `x` is scored as
//!
//! ```text
//! start[y0] + sum_j <x_j, E[., y_j]> + sum_j T[y_j, y_{j+1}] + end[y_{L-1}]
//! ```
//!
//! with all parameters stored in one flat vector so that the same optimizer
//! and regularizer apply to flat and chain models. Inference runs in natural
//! log space throughout.

use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::model::{log_sum_exp, FeatureVector};

/// Shape of a chain model's parameter vector.
///
/// Layout: emission weights feature-major (`feature * tags + tag`), then the
/// `tags x tags` transition matrix row-major, then start weights, then end
/// weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainLayout {
    pub tag_count: usize,
    pub feature_count: usize,
}

impl ChainLayout {
    pub fn new(tag_count: usize, feature_count: usize) -> Result<Self> {
        if tag_count == 0 || feature_count == 0 {
            return Err(Error::invalid("chain layout", "tag and feature counts must be positive"));
        }
        Ok(Self {
            tag_count,
            feature_count,
        })
    }

    pub fn dimension(&self) -> usize {
        let t = self.tag_count;
        self.feature_count * t + t * t + 2 * t
    }

    pub fn emission(&self, feature: usize, tag: usize) -> usize {
        feature * self.tag_count + tag
    }

    pub fn transition(&self, from: usize, to: usize) -> usize {
        self.feature_count * self.tag_count + from * self.tag_count + to
    }

    pub fn start(&self, tag: usize) -> usize {
        let t = self.tag_count;
        self.feature_count * t + t * t + tag
    }

    pub fn end(&self, tag: usize) -> usize {
        let t = self.tag_count;
        self.feature_count * t + t * t + t + tag
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainModel {
    layout: ChainLayout,
    params: Vec<f64>,
}

impl ChainModel {
    pub fn zeros(layout: ChainLayout) -> Self {
        Self {
            layout,
            params: vec![0.0; layout.dimension()],
        }
    }

    pub fn from_params(layout: ChainLayout, params: Vec<f64>) -> Result<Self> {
        if params.len() != layout.dimension() {
            return Err(Error::DimensionMismatch {
                weights: params.len(),
                features: layout.dimension(),
            });
        }
        if let Some(i) = params.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { layout, params })
    }

    pub fn layout(&self) -> ChainLayout {
        self.layout
    }

    pub fn tag_count(&self) -> usize {
        self.layout.tag_count
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn into_params(self) -> Vec<f64> {
        self.params
    }

    pub fn emission(&self, feature: usize, tag: usize) -> f64 {
        self.params[self.layout.emission(feature, tag)]
    }

    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.params[self.layout.transition(from, to)]
    }

    pub fn start(&self, tag: usize) -> f64 {
        self.params[self.layout.start(tag)]
    }

    pub fn end(&self, tag: usize) -> f64 {
        self.params[self.layout.end(tag)]
    }

    pub fn set_emission(&mut self, feature: usize, tag: usize, value: f64) {
        let i = self.layout.emission(feature, tag);
        self.params[i] = value;
    }

    pub fn set_transition(&mut self, from: usize, to: usize, value: f64) {
        let i = self.layout.transition(from, to);
        self.params[i] = value;
    }

    pub fn set_start(&mut self, tag: usize, value: f64) {
        let i = self.layout.start(tag);
        self.params[i] = value;
    }

    pub fn set_end(&mut self, tag: usize, value: f64) {
        let i = self.layout.end(tag);
        self.params[i] = value;
    }

    fn check(&self, instance: &ChainInstance) -> Result<()> {
        let dim = instance.observations[0].dimension();
        if dim != self.layout.feature_count {
            return Err(Error::DimensionMismatch {
                weights: self.layout.feature_count,
                features: dim,
            });
        }
        Ok(())
    }

    fn check_tags(&self, tags: &[usize], length: usize) -> Result<()> {
        if tags.len() != length {
            return Err(Error::LengthMismatch {
                left: tags.len(),
                right: length,
            });
        }
        if let Some(&bad) = tags.iter().find(|&&t| t >= self.layout.tag_count) {
            return Err(Error::LabelOutOfRange {
                label: bad,
                count: self.layout.tag_count,
            });
        }
        Ok(())
    }

    /// Per-position emission scores, `L x t` row-major.
    fn emission_table(&self, instance: &ChainInstance) -> Vec<f64> {
        let t = self.layout.tag_count;
        let mut table = vec![0.0; instance.len() * t];
        for (j, obs) in instance.observations.iter().enumerate() {
            let row = &mut table[j * t..(j + 1) * t];
            for &(f, v) in obs.entries() {
                let base = f * t;
                for (tag, cell) in row.iter_mut().enumerate() {
                    *cell += v * self.params[base + tag];
                }
            }
        }
        table
    }
}

/// Observation sequence with its gold tag sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainInstance {
    observations: Vec<FeatureVector>,
    gold_tags: Vec<usize>,
}

impl ChainInstance {
    pub fn new(observations: Vec<FeatureVector>, gold_tags: Vec<usize>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::invalid("chain instance", "empty sequence"));
        }
        if observations.len() != gold_tags.len() {
            return Err(Error::LengthMismatch {
                left: observations.len(),
                right: gold_tags.len(),
            });
        }
        let dim = observations[0].dimension();
        if let Some(bad) = observations.iter().find(|o| o.dimension() != dim) {
            return Err(Error::DimensionMismatch {
                weights: dim,
                features: bad.dimension(),
            });
        }
        Ok(Self {
            observations,
            gold_tags,
        })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[FeatureVector] {
        &self.observations
    }

    pub fn gold_tags(&self) -> &[usize] {
        &self.gold_tags
    }

    pub fn feature_dimension(&self) -> usize {
        self.observations[0].dimension()
    }
}

/// Output of forward-backward.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPosterior {
    pub log_partition: f64,
    /// `L x t`
    pub node_marginals: Vec<Vec<f64>>,
    /// `(L-1) x t x t`, indexed `[j][from][to]`
    pub edge_marginals: Vec<Vec<Vec<f64>>>,
}

fn score_with_table(model: &ChainModel, emissions: &[f64], tags: &[usize]) -> f64 {
    let t = model.tag_count();
    let mut score = model.start(tags[0]);
    for (j, &tag) in tags.iter().enumerate() {
        score += emissions[j * t + tag];
        if j > 0 {
            score += model.transition(tags[j - 1], tag);
        }
    }
    score + model.end(tags[tags.len() - 1])
}

pub fn sequence_score(model: &ChainModel, instance: &ChainInstance, tags: &[usize]) -> Result<f64> {
    model.check(instance)?;
    model.check_tags(tags, instance.len())?;
    Ok(score_with_table(model, &model.emission_table(instance), tags))
}

struct Lattice {
    emissions: Vec<f64>,
    forward: Vec<f64>,
    backward: Vec<f64>,
    log_partition: f64,
}

fn lattice(model: &ChainModel, instance: &ChainInstance) -> Lattice {
    let t = model.tag_count();
    let len = instance.len();
    let emissions = model.emission_table(instance);
    let mut forward = vec![0.0; len * t];
    let mut backward = vec![0.0; len * t];
    let mut buf = vec![0.0; t];

    for tag in 0..t {
        forward[tag] = model.start(tag) + emissions[tag];
    }
    for j in 1..len {
        for to in 0..t {
            for from in 0..t {
                buf[from] = forward[(j - 1) * t + from] + model.transition(from, to);
            }
            forward[j * t + to] = emissions[j * t + to] + log_sum_exp(&buf);
        }
    }
    for tag in 0..t {
        backward[(len - 1) * t + tag] = model.end(tag);
    }
    for j in (0..len.saturating_sub(1)).rev() {
        for from in 0..t {
            for to in 0..t {
                buf[to] = model.transition(from, to)
                    + emissions[(j + 1) * t + to]
                    + backward[(j + 1) * t + to];
            }
            backward[j * t + from] = log_sum_exp(&buf);
        }
    }
    for tag in 0..t {
        buf[tag] = forward[(len - 1) * t + tag] + model.end(tag);
    }
    let log_partition = log_sum_exp(&buf);
    Lattice {
        emissions,
        forward,
        backward,
        log_partition,
    }
}

impl Lattice {
    fn node(&self, t: usize, j: usize, tag: usize) -> f64 {
        (self.forward[j * t + tag] + self.backward[j * t + tag] - self.log_partition).exp()
    }

    fn edge(&self, model: &ChainModel, j: usize, from: usize, to: usize) -> f64 {
        let t = model.tag_count();
        (self.forward[j * t + from]
            + model.transition(from, to)
            + self.emissions[(j + 1) * t + to]
            + self.backward[(j + 1) * t + to]
            - self.log_partition)
            .exp()
    }
}

pub fn forward_backward(model: &ChainModel, instance: &ChainInstance) -> Result<ChainPosterior> {
    model.check(instance)?;
    let t = model.tag_count();
    let lat = lattice(model, instance);
    let node_marginals = (0..instance.len())
        .map(|j| (0..t).map(|tag| lat.node(t, j, tag)).collect())
        .collect();
    let edge_marginals = (0..instance.len() - 1)
        .map(|j| {
            (0..t)
                .map(|from| (0..t).map(|to| lat.edge(model, j, from, to)).collect())
                .collect()
        })
        .collect();
    Ok(ChainPosterior {
        log_partition: lat.log_partition,
        node_marginals,
        edge_marginals,
    })
}

pub fn log_partition(model: &ChainModel, instance: &ChainInstance) -> Result<f64> {
    model.check(instance)?;
    Ok(lattice(model, instance).log_partition)
}

/// `score(tags) - log Z`; never positive.
pub fn sequence_log_probability(
    model: &ChainModel,
    instance: &ChainInstance,
    tags: &[usize],
) -> Result<f64> {
    model.check(instance)?;
    model.check_tags(tags, instance.len())?;
    let lat = lattice(model, instance);
    let score = score_with_table(model, &lat.emissions, tags);
    Ok((score - lat.log_partition).min(0.0))
}

/// Highest-scoring tag sequence. Ties go to the lowest tag index at each step.
pub fn viterbi(model: &ChainModel, instance: &ChainInstance) -> Result<(Vec<usize>, f64)> {
    model.check(instance)?;
    let t = model.tag_count();
    let len = instance.len();
    let emissions = model.emission_table(instance);
    let mut delta = vec![0.0; len * t];
    let mut back = vec![0usize; len * t];
    for tag in 0..t {
        delta[tag] = model.start(tag) + emissions[tag];
    }
    for j in 1..len {
        for to in 0..t {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for from in 0..t {
                let s = delta[(j - 1) * t + from] + model.transition(from, to);
                if s > best_score {
                    best_score = s;
                    best = from;
                }
            }
            delta[j * t + to] = best_score + emissions[j * t + to];
            back[j * t + to] = best;
        }
    }
    let mut last = 0;
    let mut best_score = f64::NEG_INFINITY;
    for tag in 0..t {
        let s = delta[(len - 1) * t + tag] + model.end(tag);
        if s > best_score {
            best_score = s;
            last = tag;
        }
    }
    let mut tags = vec![0; len];
    tags[len - 1] = last;
    for j in (1..len).rev() {
        tags[j - 1] = back[j * t + tags[j]];
    }
    Ok((tags, best_score))
}

#[derive(Debug, Clone, Copy)]
struct Hyp {
    score: f64,
    prev_tag: usize,
    prev_rank: usize,
}

fn keep_top(candidates: &mut Vec<Hyp>, n: usize) {
    candidates.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.prev_tag.cmp(&b.prev_tag))
            .then(a.prev_rank.cmp(&b.prev_rank))
    });
    candidates.truncate(n);
}

/// The `n` best distinct tag sequences, best first. Each lattice cell keeps
/// its `n` best partial paths and merges them forward.
pub fn n_best(model: &ChainModel, instance: &ChainInstance, n: usize) -> Result<Vec<(Vec<usize>, f64)>> {
    model.check(instance)?;
    let t = model.tag_count();
    let len = instance.len();
    let emissions = model.emission_table(instance);
    let mut cells: Vec<Vec<Hyp>> = Vec::with_capacity(len * t);
    for tag in 0..t {
        cells.push(vec![Hyp {
            score: model.start(tag) + emissions[tag],
            prev_tag: usize::MAX,
            prev_rank: usize::MAX,
        }]);
    }
    let mut candidates = Vec::with_capacity(t * n);
    for j in 1..len {
        for to in 0..t {
            candidates.clear();
            for from in 0..t {
                let trans = model.transition(from, to);
                for (rank, h) in cells[(j - 1) * t + from].iter().enumerate() {
                    candidates.push(Hyp {
                        score: h.score + trans + emissions[j * t + to],
                        prev_tag: from,
                        prev_rank: rank,
                    });
                }
            }
            keep_top(&mut candidates, n);
            cells.push(candidates.clone());
        }
    }
    candidates.clear();
    for tag in 0..t {
        for (rank, h) in cells[(len - 1) * t + tag].iter().enumerate() {
            candidates.push(Hyp {
                score: h.score + model.end(tag),
                prev_tag: tag,
                prev_rank: rank,
            });
        }
    }
    keep_top(&mut candidates, n);
    let paths = candidates
        .iter()
        .map(|fin| {
            let mut tags = vec![0; len];
            let (mut tag, mut rank) = (fin.prev_tag, fin.prev_rank);
            for j in (0..len).rev() {
                tags[j] = tag;
                let h = cells[j * t + tag][rank];
                tag = h.prev_tag;
                rank = h.prev_rank;
            }
            (tags, fin.score)
        })
        .collect();
    Ok(paths)
}

/// Highest-scoring tag sequence different from `gold`.
pub fn best_competitor(
    model: &ChainModel,
    instance: &ChainInstance,
    gold: &[usize],
) -> Result<(Vec<usize>, f64)> {
    model.check(instance)?;
    model.check_tags(gold, instance.len())?;
    if model.tag_count() == 1 {
        return Err(Error::NoCompetitor);
    }
    let (tags, score) = viterbi(model, instance)?;
    if tags != gold {
        return Ok((tags, score));
    }
    n_best(model, instance, 2)?
        .into_iter()
        .find(|(tags, _)| tags != gold)
        .ok_or(Error::NoCompetitor)
}

/// Adds `scale` times the joint feature counts of `tags` into `out`.
fn add_feature_counts(
    layout: &ChainLayout,
    instance: &ChainInstance,
    tags: &[usize],
    scale: f64,
    out: &mut [f64],
) {
    for (j, (obs, &tag)) in instance.observations.iter().zip(tags).enumerate() {
        for &(f, v) in obs.entries() {
            out[layout.emission(f, tag)] += scale * v;
        }
        if j > 0 {
            out[layout.transition(tags[j - 1], tag)] += scale;
        }
    }
    out[layout.start(tags[0])] += scale;
    out[layout.end(tags[tags.len() - 1])] += scale;
}

/// Adds `scale` times the posterior-expected feature counts into `out`.
fn add_expected_counts(model: &ChainModel, instance: &ChainInstance, lat: &Lattice, scale: f64, out: &mut [f64]) {
    let layout = model.layout();
    let t = layout.tag_count;
    let len = instance.len();
    let mut node = vec![0.0; t];
    for j in 0..len {
        for (tag, n) in node.iter_mut().enumerate() {
            *n = lat.node(t, j, tag);
        }
        for &(f, v) in instance.observations[j].entries() {
            for (tag, &n) in node.iter().enumerate() {
                out[layout.emission(f, tag)] += scale * v * n;
            }
        }
        if j == 0 {
            for (tag, &n) in node.iter().enumerate() {
                out[layout.start(tag)] += scale * n;
            }
        }
        if j == len - 1 {
            for (tag, &n) in node.iter().enumerate() {
                out[layout.end(tag)] += scale * n;
            }
        }
        if j + 1 < len {
            for from in 0..t {
                for to in 0..t {
                    out[layout.transition(from, to)] += scale * lat.edge(model, j, from, to);
                }
            }
        }
    }
}

/// Structured margin: gold score minus the best competing sequence's score.
pub fn chain_margin(model: &ChainModel, instance: &ChainInstance) -> Result<f64> {
    let gold = sequence_score(model, instance, &instance.gold_tags)?;
    let (_, competitor) = best_competitor(model, instance, &instance.gold_tags)?;
    Ok(gold - competitor)
}

/// Adds `scale` times the loss gradient into `gradient` and returns the loss.
pub(crate) fn accumulate_chain(
    spec: &LossSpec,
    model: &ChainModel,
    instance: &ChainInstance,
    scale: f64,
    gradient: &mut [f64],
) -> Result<f64> {
    model.check(instance)?;
    model.check_tags(&instance.gold_tags, instance.len())?;
    let layout = model.layout();
    let alpha = spec.alpha();
    let gold = &instance.gold_tags;
    let mut value = 0.0;

    if spec.uses_log() {
        let lat = lattice(model, instance);
        let gold_score = score_with_table(model, &lat.emissions, gold);
        value += alpha * (lat.log_partition - gold_score).max(0.0);
        add_expected_counts(model, instance, &lat, scale * alpha, gradient);
        add_feature_counts(&layout, instance, gold, -scale * alpha, gradient);
    }
    if spec.uses_hinge() {
        let weight = 1.0 - alpha;
        let gold_score = sequence_score(model, instance, gold)?;
        let (competitor, competitor_score) = best_competitor(model, instance, gold)?;
        let slack = 1.0 - (gold_score - competitor_score);
        if slack > 0.0 {
            value += weight * slack;
            add_feature_counts(&layout, instance, &competitor, scale * weight, gradient);
            add_feature_counts(&layout, instance, gold, -scale * weight, gradient);
        }
    }
    Ok(value)
}

pub fn chain_loss_and_gradient(
    spec: &LossSpec,
    model: &ChainModel,
    instance: &ChainInstance,
) -> Result<(f64, Vec<f64>)> {
    let mut gradient = vec![0.0; model.layout().dimension()];
    let value = accumulate_chain(spec, model, instance, 1.0, &mut gradient)?;
    Ok((value, gradient))
}
