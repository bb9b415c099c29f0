//! When does minimizing a surrogate's conditional risk yield the right
//! prediction?
//!
//! A score vector is *aligned* with a label distribution `q` when every score
//! maximizer is also a maximizer of `q`. The hybrid loss with mixture weight
//! `alpha` is aligned at its risk minimizer whenever `q` has a label with
//! probability above one half, or when
//!
//! ```text
//! alpha > 1 - (q[y1] - q[y2]) / (1 - 2 q[y1])
//! ```
//!
//! for the two most likely labels `y1`, `y2`. This module computes that
//! threshold, checks it against an exhaustive search over the probability
//! simplex, profiles dominance of trained chain models, and probes whether a
//! linear model class is regular (can realize any score vector at some input
//! and any mode at every input).

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::chain::{self, ChainInstance, ChainModel};
use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::model::{argmax, argmax_excluding, FeatureVector, LabelDistribution, ScoreVector};


/// Tolerance for treating two scores or probabilities as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Labels whose value is within [`TIE_TOLERANCE`] of the maximum.
pub fn argmax_set(values: &[f64]) -> Vec<usize> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..values.len())
        .filter(|&i| values[i] >= max - TIE_TOLERANCE)
        .collect()
}

/// `argmax(values) ⊆ argmax(q)`, both under the tie tolerance.
pub fn is_aligned_values(values: &[f64], q: &LabelDistribution) -> Result<bool> {
    if values.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: values.len(),
            right: q.len(),
        });
    }
    let target = argmax_set(q.probabilities());
    Ok(argmax_set(values).iter().all(|i| target.contains(i)))
}

pub fn is_aligned(scores: &ScoreVector, q: &LabelDistribution) -> Result<bool> {
    is_aligned_values(scores.values(), q)
}

/// The two most likely labels of `q` and the hybrid threshold on `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub top_label: usize,
    pub runner_up: usize,
    pub top_prob: f64,
    pub second_prob: f64,
    /// `top_prob > 1/2`
    pub dominant: bool,
    pub gap: f64,
    /// `1 - gap / (1 - 2 top_prob)` before clamping; meaningless when dominant.
    pub raw_threshold: f64,
    /// Raw threshold clamped to `[0, 1]`; zero when dominant.
    pub alpha_threshold: f64,
}

impl DominanceReport {
    /// The gap the condition asks for at a given `alpha`: `(1 - alpha)(1 - 2 top_prob)`.
    pub fn required_gap(&self, alpha: f64) -> f64 {
        (1.0 - alpha) * (1.0 - 2.0 * self.top_prob)
    }

    /// Whether `alpha` clears the threshold, or `q` is dominant.
    pub fn satisfied_by(&self, alpha: f64) -> bool {
        self.dominant || alpha > self.raw_threshold
    }
}

pub fn alpha_condition(q: &LabelDistribution) -> Result<DominanceReport> {
    let p = q.probabilities();
    if p.len() < 2 {
        return Err(Error::invalid("label distribution", "need at least two labels"));
    }
    let top_label = argmax(p);
    let runner_up = argmax_excluding(p, top_label);
    let (top_prob, second_prob) = (p[top_label], p[runner_up]);
    let gap = top_prob - second_prob;
    let dominant = top_prob > 0.5;
    let raw_threshold = if dominant {
        f64::NEG_INFINITY
    } else if top_prob == 0.5 {
        // limit of the condition as the denominator vanishes
        if gap > 0.0 {
            f64::NEG_INFINITY
        } else {
            1.0
        }
    } else {
        1.0 - gap / (1.0 - 2.0 * top_prob)
    };
    Ok(DominanceReport {
        top_label,
        runner_up,
        top_prob,
        second_prob,
        dominant,
        gap,
        raw_threshold,
        alpha_threshold: if dominant { 0.0 } else { raw_threshold.clamp(0.0, 1.0) },
    })
}

/// Largest label count the exhaustive simplex search accepts.
pub const MAX_ORACLE_LABELS: usize = 5;
pub const MIN_ORACLE_RESOLUTION: usize = 50;
const REFINE_STEP_FLOOR: f64 = 1e-6;

/// Minimizer of the conditional risk over the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexMinimum {
    pub minimizer: Vec<f64>,
    pub risk: f64,
}

impl SimplexMinimum {
    pub fn is_aligned_with(&self, q: &LabelDistribution) -> Result<bool> {
        is_aligned_values(&self.minimizer, q)
    }
}

/// Conditional risk `E_{y~q}[alpha (-ln p_y) + (1 - alpha) [1 - ln(p_y / max_{c != y} p_c)]_+]`
/// for log-probabilities `log_p`.
pub fn conditional_risk(alpha: f64, q: &[f64], log_p: &[f64]) -> f64 {
    let top = argmax(log_p);
    let second = argmax_excluding(log_p, top);
    let mut risk = 0.0;
    for (y, (&qy, &ly)) in q.iter().zip(log_p).enumerate() {
        if qy == 0.0 {
            continue;
        }
        let best_other = if y == top { log_p[second] } else { log_p[top] };
        let mut loss = 0.0;
        if alpha > 0.0 {
            loss += alpha * -ly;
        }
        if alpha < 1.0 {
            loss += (1.0 - alpha) * (1.0 - ly + best_other).max(0.0);
        }
        risk += qy * loss;
    }
    risk
}

fn risk_of(alpha: f64, q: &[f64], p: &[f64]) -> f64 {
    if p.iter().any(|&x| x <= 0.0) {
        return f64::INFINITY;
    }
    let log_p: Vec<f64> = p.iter().map(|x| x.ln()).collect();
    conditional_risk(alpha, q, &log_p)
}

/// Exhaustive grid search over interior simplex points with step
/// `1 / resolution`, followed by pairwise coordinate descent down to a step
/// of `1e-6`. Grid ties go to the lexicographically smallest point.
pub fn simplex_risk_minimizer(
    loss: &LossSpec,
    q: &LabelDistribution,
    resolution: usize,
) -> Result<SimplexMinimum> {
    let k = q.len();
    if k > MAX_ORACLE_LABELS {
        return Err(Error::TooManyLabels {
            got: k,
            max: MAX_ORACLE_LABELS,
        });
    }
    if k < 2 {
        return Err(Error::invalid("label distribution", "need at least two labels"));
    }
    if resolution < MIN_ORACLE_RESOLUTION {
        return Err(Error::invalid(
            "simplex resolution",
            format!("{resolution} < {MIN_ORACLE_RESOLUTION}"),
        ));
    }
    let alpha = loss.alpha();
    let qv = q.probabilities();
    let n = resolution;
    let ln_n = (n as f64).ln();
    let log_table: Vec<f64> = (0..=n)
        .map(|i| if i == 0 { f64::NEG_INFINITY } else { (i as f64).ln() - ln_n })
        .collect();

    let mut counts = vec![1usize; k];
    let mut log_p = vec![0.0; k];
    let mut best_counts = vec![0usize; k];
    let mut best_risk = f64::INFINITY;
    grid_search(
        0,
        n,
        &mut counts,
        &mut log_p,
        &log_table,
        &mut |counts, log_p| {
            let r = conditional_risk(alpha, qv, log_p);
            if r < best_risk {
                best_risk = r;
                best_counts.copy_from_slice(counts);
            }
        },
    );

    let mut p: Vec<f64> = best_counts.iter().map(|&c| c as f64 / n as f64).collect();
    let mut risk = risk_of(alpha, qv, &p);
    let mut step = 1.0 / n as f64;
    while step >= REFINE_STEP_FLOOR {
        let mut improved = false;
        for i in 0..k {
            for j in 0..k {
                if i == j || p[j] - step <= 0.0 {
                    continue;
                }
                let mut trial = p.clone();
                trial[i] += step;
                trial[j] -= step;
                let r = risk_of(alpha, qv, &trial);
                if r < risk {
                    p = trial;
                    risk = r;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    Ok(SimplexMinimum {
        minimizer: p,
        risk,
    })
}

/// Visits every composition of `remaining` into the labels from `index` on,
/// each part at least one, in lexicographic order.
fn grid_search(
    index: usize,
    remaining: usize,
    counts: &mut [usize],
    log_p: &mut [f64],
    log_table: &[f64],
    visit: &mut dyn FnMut(&[usize], &[f64]),
) {
    let k = counts.len();
    if index == k - 1 {
        counts[index] = remaining;
        log_p[index] = log_table[remaining];
        visit(counts, log_p);
        return;
    }
    let rest = k - 1 - index;
    if remaining < rest + 1 {
        return;
    }
    for c in 1..=remaining - rest {
        counts[index] = c;
        log_p[index] = log_table[c];
        grid_search(index + 1, remaining - c, counts, log_p, log_table, visit);
    }
}

/// Per-sentence probabilities of the gold and the Viterbi tag sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceProfile {
    /// `(gold_prob, viterbi_prob)` in dataset order.
    pub entries: Vec<(f64, f64)>,
    /// Sentences whose most likely sequence has probability at most 1/2.
    pub non_dominant: usize,
}

impl DominanceProfile {
    pub fn non_dominant_fraction(&self) -> f64 {
        self.non_dominant as f64 / self.entries.len().max(1) as f64
    }

    /// Both columns sorted ascending, each independently.
    pub fn sorted_curves(&self) -> (Vec<f64>, Vec<f64>) {
        let mut gold: Vec<f64> = self.entries.iter().map(|e| e.0).collect();
        let mut best: Vec<f64> = self.entries.iter().map(|e| e.1).collect();
        gold.sort_by(f64::total_cmp);
        best.sort_by(f64::total_cmp);
        (gold, best)
    }
}

pub fn dominance_profile(model: &ChainModel, dataset: &[ChainInstance]) -> Result<DominanceProfile> {
    let mut entries = Vec::with_capacity(dataset.len());
    let mut non_dominant = 0;
    for inst in dataset {
        let gold = chain::sequence_log_probability(model, inst, inst.gold_tags())?.exp();
        let (best_tags, _) = chain::viterbi(model, inst)?;
        let best = chain::sequence_log_probability(model, inst, &best_tags)?.exp();
        if best <= 0.5 {
            non_dominant += 1;
        }
        entries.push((gold.min(best), best));
    }
    Ok(DominanceProfile {
        entries,
        non_dominant,
    })
}

/// What a model class must expose to be probed for regularity.
pub trait RegularityAdapter {
    fn label_count(&self) -> usize;
    fn input_count(&self) -> usize;
    fn scores(&self, weights: &[f64], input: usize) -> Option<Vec<f64>>;
    /// Weights whose scores at `input` equal `target`, if the adapter can find them.
    fn solve_for_scores(&self, input: usize, target: &[f64]) -> Option<Vec<f64>>;
    /// Weights under which `label` is the unique best label at `input`.
    fn solve_for_mode(&self, input: usize, label: usize) -> Option<Vec<f64>>;
}

/// Linear class `f_y(x) = <w, phi(x, y)>` over a finite set of inputs, each
/// given by its per-label feature vectors.
pub struct LinearClass {
    inputs: Vec<Vec<FeatureVector>>,
    dimension: usize,
    label_count: usize,
}

impl LinearClass {
    pub fn new(inputs: Vec<Vec<FeatureVector>>) -> Result<Self> {
        let first = inputs.first().ok_or(Error::EmptyDataset)?;
        let label_count = first.len();
        let dimension = first
            .first()
            .ok_or_else(|| Error::invalid("linear class", "input without labels"))?
            .dimension();
        for input in &inputs {
            if input.len() != label_count {
                return Err(Error::LengthMismatch {
                    left: label_count,
                    right: input.len(),
                });
            }
            if let Some(bad) = input.iter().find(|f| f.dimension() != dimension) {
                return Err(Error::DimensionMismatch {
                    weights: dimension,
                    features: bad.dimension(),
                });
            }
        }
        Ok(Self {
            inputs,
            dimension,
            label_count,
        })
    }

    fn design(&self, input: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.label_count, self.dimension);
        for (y, phi) in self.inputs[input].iter().enumerate() {
            for &(i, v) in phi.entries() {
                m[(y, i)] = v;
            }
        }
        m
    }
}

impl RegularityAdapter for LinearClass {
    fn label_count(&self) -> usize {
        self.label_count
    }

    fn input_count(&self) -> usize {
        self.inputs.len()
    }

    fn scores(&self, weights: &[f64], input: usize) -> Option<Vec<f64>> {
        (weights.len() == self.dimension)
            .then(|| self.inputs[input].iter().map(|phi| phi.dot(weights)).collect())
    }

    fn solve_for_scores(&self, input: usize, target: &[f64]) -> Option<Vec<f64>> {
        if target.len() != self.label_count {
            return None;
        }
        let design = self.design(input);
        let rhs = DVector::from_column_slice(target);
        let solution = design.svd(true, true).solve(&rhs, 1e-12).ok()?;
        Some(solution.iter().copied().collect())
    }

    fn solve_for_mode(&self, input: usize, label: usize) -> Option<Vec<f64>> {
        let mut target = vec![0.0; self.label_count];
        *target.get_mut(label)? = 1.0;
        self.solve_for_scores(input, &target)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub realizability_trials: usize,
    /// Random targets `g` for which some input and weights gave `f(x) = g`.
    pub realizability_witnessed: usize,
    /// Worst residual over witnessed targets.
    pub max_residual: f64,
    pub mode_pairs: usize,
    /// `(input, label)` pairs where `label` could be made the unique mode.
    pub mode_witnessed: usize,
}

impl RegularityReport {
    pub fn realizable(&self) -> bool {
        self.realizability_witnessed == self.realizability_trials
    }

    pub fn any_mode(&self) -> bool {
        self.mode_witnessed == self.mode_pairs
    }

    pub fn regular(&self) -> bool {
        self.realizable() && self.any_mode()
    }
}

/// Residual accepted as an exact realization of a target score vector.
pub const REALIZATION_TOLERANCE: f64 = 1e-8;

/// Checks both regularity properties on `trials` random target score vectors
/// and on every `(input, label)` pair. Adapter failures count as "not
/// witnessed".
pub fn regularity_probe(
    adapter: &dyn RegularityAdapter,
    trials: usize,
    seed: u64,
) -> RegularityReport {
    let k = adapter.label_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut realizability_witnessed = 0;
    let mut max_residual: f64 = 0.0;
    for _ in 0..trials {
        let target: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
        let best = (0..adapter.input_count())
            .filter_map(|x| {
                let w = adapter.solve_for_scores(x, &target)?;
                let s = adapter.scores(&w, x)?;
                Some(s.iter().zip(&target).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
            })
            .filter(|r| r.is_finite())
            .fold(f64::INFINITY, f64::min);
        if best <= REALIZATION_TOLERANCE {
            realizability_witnessed += 1;
            max_residual = max_residual.max(best);
        }
    }

    let mut mode_pairs = 0;
    let mut mode_witnessed = 0;
    for x in 0..adapter.input_count() {
        for y in 0..k {
            mode_pairs += 1;
            let unique_mode = adapter
                .solve_for_mode(x, y)
                .and_then(|w| adapter.scores(&w, x))
                .is_some_and(|s| (0..k).all(|c| c == y || s[y] > s[c] + TIE_TOLERANCE));
            if unique_mode {
                mode_witnessed += 1;
            }
        }
    }
    RegularityReport {
        realizability_trials: trials,
        realizability_witnessed,
        max_residual,
        mode_pairs,
        mode_witnessed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ChainLayout;
    use crate::losses::evaluate;
    use rand::Rng;

    fn dist(v: &[f64]) -> LabelDistribution {
        LabelDistribution::new(v.to_vec()).unwrap()
    }

    fn sv(v: &[f64]) -> ScoreVector {
        ScoreVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn alignment_examples() {
        let q = dist(&[0.5, 0.2, 0.3]);
        assert!(is_aligned(&sv(&[3.0, 1.0, 2.0]), &q).unwrap());
        assert!(!is_aligned(&sv(&[1.0, 1.0, 0.0]), &q).unwrap());
        let uniform = LabelDistribution::uniform(3);
        assert!(is_aligned(&sv(&[-4.0, 9.0, 0.1]), &uniform).unwrap());
        assert!(is_aligned(&sv(&[1.0, 2.0]), &q).is_err());
    }

    #[test]
    fn threshold_for_the_three_class_experiment() {
        let r = alpha_condition(&dist(&[0.46, 0.27, 0.27])).unwrap();
        assert!((r.gap - 0.19).abs() < 1e-12);
        assert!(!r.dominant);
        assert!(r.raw_threshold < 0.0);
        assert_eq!(r.alpha_threshold, 0.0);
        assert!((r.required_gap(0.5) - 0.04).abs() < 1e-12);
        assert!(r.gap > r.required_gap(0.5));
    }

    #[test]
    fn dominant_distribution_has_zero_threshold() {
        let r = alpha_condition(&dist(&[0.6, 0.4])).unwrap();
        assert!(r.dominant);
        assert_eq!(r.alpha_threshold, 0.0);
        assert!(r.satisfied_by(0.0));
    }

    #[test]
    fn threshold_direct_evaluation() {
        let r = alpha_condition(&dist(&[0.40, 0.38, 0.22])).unwrap();
        assert!((r.alpha_threshold - 0.9).abs() < 1e-12);
        assert!(r.satisfied_by(0.95));
        assert!(!r.satisfied_by(0.85));
    }

    #[test]
    fn exact_half_takes_the_limit() {
        let r = alpha_condition(&dist(&[0.5, 0.3, 0.2])).unwrap();
        assert!(!r.dominant);
        assert_eq!(r.alpha_threshold, 0.0);
        let r = alpha_condition(&dist(&[0.5, 0.5])).unwrap();
        assert_eq!(r.alpha_threshold, 1.0);
    }

    #[test]
    fn threshold_is_permutation_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let raw: Vec<f64> = (0..4).map(|_| rng.gen_range(0.01..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let q: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let perm = [2, 0, 3, 1];
            let permuted: Vec<f64> = perm.iter().map(|&i| q[i]).collect();
            let a = alpha_condition(&dist(&q)).unwrap();
            let b = alpha_condition(&dist(&permuted)).unwrap();
            assert_eq!(perm[b.top_label], a.top_label);
            assert_eq!(perm[b.runner_up], a.runner_up);
            assert_eq!(a.gap, b.gap);
            assert_eq!(a.alpha_threshold, b.alpha_threshold);
        }
    }

    #[test]
    fn conditional_risk_agrees_with_score_losses() {
        // ln p is a valid score vector whose softmax is p
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let k = rng.gen_range(2..6);
            let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let raw_q: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0)).collect();
            let tq: f64 = raw_q.iter().sum();
            let q: Vec<f64> = raw_q.iter().map(|x| x / tq).collect();
            let alpha = rng.gen_range(0.0..1.0);
            let spec = LossSpec::hybrid(alpha).unwrap();
            let scores = sv(&p.iter().map(|x| x.ln()).collect::<Vec<_>>());
            let expected: f64 = (0..k)
                .map(|y| q[y] * evaluate(&spec, &scores, y).unwrap().value)
                .sum();
            assert!((risk_of(alpha, &q, &p) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_visits_every_interior_point_once() {
        let n = 12;
        let log_table: Vec<f64> = (0..=n).map(|i| i as f64).collect();
        let mut seen = Vec::new();
        let mut counts = vec![0; 3];
        let mut lp = vec![0.0; 3];
        grid_search(0, n, &mut counts, &mut lp, &log_table, &mut |c, _| seen.push(c.to_vec()));
        // compositions of 12 into 3 positive parts: C(11, 2)
        assert_eq!(seen.len(), 55);
        let mut sorted = seen.clone();
        sorted.sort();
        assert_eq!(sorted, seen);
    }

    #[test]
    fn log_loss_minimizer_recovers_q() {
        let q = dist(&[0.5, 0.3, 0.2]);
        let m = simplex_risk_minimizer(&LossSpec::log(), &q, 60).unwrap();
        for (a, b) in m.minimizer.iter().zip(q.probabilities()) {
            assert!((a - b).abs() < 1e-5);
        }
        assert!(m.is_aligned_with(&q).unwrap());
    }

    #[test]
    fn hinge_minimizer_misaligned_on_non_dominant() {
        let q = dist(&[0.4, 0.3, 0.3]);
        let m = simplex_risk_minimizer(&LossSpec::hinge(), &q, 120).unwrap();
        assert!(!m.is_aligned_with(&q).unwrap());
        assert!((m.risk - 1.0).abs() < 1e-9);
    }

    #[test]
    fn oracle_rejects_bad_inputs() {
        let q = LabelDistribution::uniform(6);
        assert!(matches!(
            simplex_risk_minimizer(&LossSpec::log(), &q, 60),
            Err(Error::TooManyLabels { got: 6, max: 5 })
        ));
        let q = LabelDistribution::uniform(3);
        assert!(simplex_risk_minimizer(&LossSpec::log(), &q, 10).is_err());
    }

    #[test]
    fn dominance_of_zero_and_peaked_models() {
        let layout = ChainLayout::new(2, 2).unwrap();
        let obs = || {
            (0..3)
                .map(|i| FeatureVector::new(2, [(i % 2, 1.0)]).unwrap())
                .collect::<Vec<_>>()
        };
        let inst = ChainInstance::new(obs(), vec![0, 1, 0]).unwrap();
        let zero = ChainModel::zeros(layout);
        let prof = dominance_profile(&zero, std::slice::from_ref(&inst)).unwrap();
        assert!((prof.entries[0].0 - 0.125).abs() < 1e-12);
        assert!((prof.entries[0].1 - 0.125).abs() < 1e-12);
        assert_eq!(prof.non_dominant, 1);

        let mut peaked = ChainModel::zeros(layout);
        peaked.set_emission(0, 0, 20.0);
        peaked.set_emission(1, 1, 20.0);
        let prof = dominance_profile(&peaked, &[inst]).unwrap();
        assert!(prof.entries[0].1 > 0.999);
        assert_eq!(prof.non_dominant, 0);
    }

    fn one_hot_class(k: usize) -> LinearClass {
        let inputs = vec![(0..k)
            .map(|y| FeatureVector::new(k, [(y, 1.0)]).unwrap())
            .collect()];
        LinearClass::new(inputs).unwrap()
    }

    #[test]
    fn one_hot_class_is_regular() {
        let report = regularity_probe(&one_hot_class(4), 50, 1);
        assert!(report.regular(), "{report:?}");
        assert!(report.max_residual < 1e-12);
    }

    #[test]
    fn identical_features_cannot_pick_a_mode() {
        let phi = FeatureVector::new(3, [(0, 1.0), (2, 0.5)]).unwrap();
        let class = LinearClass::new(vec![vec![phi.clone(); 4]]).unwrap();
        let report = regularity_probe(&class, 20, 2);
        assert_eq!(report.mode_witnessed, 0);
        assert!(!report.regular());
    }

    #[test]
    fn random_full_rank_design_realizes_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let input: Vec<FeatureVector> = (0..4)
            .map(|_| {
                let dense: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
                FeatureVector::from_dense(&dense).unwrap()
            })
            .collect();
        let class = LinearClass::new(vec![input]).unwrap();
        let report = regularity_probe(&class, 100, 3);
        assert!(report.realizable());
        assert!(report.max_residual <= 1e-8);
        assert!(report.any_mode());
    }
}
