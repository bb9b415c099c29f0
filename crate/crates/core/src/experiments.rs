//! The three experiment pipelines and their CSV output.
//!
//! Every pipeline is a pure function of its config. Rows are sorted before
//! formatting, and numbers use Rust's shortest round-trip formatting, so a
//! rerun produces byte-identical files.

use std::fmt::Write as _;

use crate::chain;
use crate::consistency::{dominance_profile, DominanceProfile};
use crate::dataset::{ChainDataset, FlatDataset, TrainingSet};
use crate::error::{Error, Result};
use crate::io::TaggedCorpus;
use crate::losses::{LossKind, LossSpec};
use crate::metrics::{chunk_f1, zero_one_error, ChunkEval};
use crate::optim::{regularized_batch_objective, OptimConfig, OptimResult};
use crate::synth::{
    generate_chunk_corpus, generate_mixed, generate_nondominant, MixedEncoder, MixedSpec,
    NonDominantSpec, SynthChunkSpec, MIXED_RHOS, MIXED_SIZES,
};

pub const DEFAULT_LAMBDAS: [f64; 5] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0];
pub const DEFAULT_ALPHAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// A split that cannot be read until [`HeldOut::unlock`] is called.
#[derive(Debug, Clone)]
pub struct HeldOut<T> {
    value: T,
    unlocked: bool,
}

impl<T> HeldOut<T> {
    pub fn new(value: T) -> Self {
        Self {
            value,
            unlocked: false,
        }
    }

    pub fn unlock(&mut self) {
        self.unlocked = true;
    }

    pub fn get(&self) -> Result<&T> {
        if self.unlocked {
            Ok(&self.value)
        } else {
            Err(Error::TestAccessedEarly)
        }
    }
}

/// Trains from zero weights.
pub fn train<D: TrainingSet + ?Sized>(
    spec: LossSpec,
    data: &D,
    lambda: f64,
    optim: &OptimConfig,
) -> Result<OptimResult> {
    let result = regularized_batch_objective(spec, data, lambda)?.fit(optim)?;
    if !result.converged {
        log::warn!(
            "{spec} with lambda {lambda} stopped after {} iterations, gradient norm {:e}",
            result.iterations,
            result.final_gradient_norm
        );
    }
    Ok(result)
}

/// The loss specs searched for one loss kind.
pub fn loss_grid(kind: LossKind, alphas: &[f64]) -> Result<Vec<LossSpec>> {
    match kind {
        LossKind::Hybrid => alphas.iter().map(|&a| LossSpec::hybrid(a)).collect(),
        other => Ok(vec![LossSpec::new(other, 0.0)?]),
    }
}

#[derive(Debug, Clone)]
pub struct Selected<M> {
    pub spec: LossSpec,
    pub lambda: f64,
    pub validation_score: f64,
    pub model: M,
}

/// Keeps the highest validation score. Ties go to the larger lambda, then
/// the smaller alpha.
fn better<M>(candidate: &Selected<M>, incumbent: &Selected<M>) -> bool {
    use std::cmp::Ordering::*;
    match candidate.validation_score.total_cmp(&incumbent.validation_score) {
        Greater => true,
        Less => false,
        Equal => match candidate.lambda.total_cmp(&incumbent.lambda) {
            Greater => true,
            Less => false,
            Equal => candidate.spec.alpha() < incumbent.spec.alpha(),
        },
    }
}

/// Grid search over `specs x lambdas`, scoring each trained model with
/// `score` (higher is better).
pub fn select_model<D, M>(
    specs: &[LossSpec],
    lambdas: &[f64],
    data: &D,
    optim: &OptimConfig,
    mut score: impl FnMut(&[f64]) -> Result<(f64, M)>,
) -> Result<Selected<M>>
where
    D: TrainingSet + ?Sized,
{
    if specs.is_empty() || lambdas.is_empty() {
        return Err(Error::invalid("search grid", "empty grid"));
    }
    let mut best: Option<Selected<M>> = None;
    for &spec in specs {
        for &lambda in lambdas {
            let trained = train(spec, data, lambda, optim)?;
            let (validation_score, model) = score(trained.weights.values())?;
            let candidate = Selected {
                spec,
                lambda,
                validation_score,
                model,
            };
            if best.as_ref().is_none_or(|b| better(&candidate, b)) {
                best = Some(candidate);
            }
        }
    }
    Ok(best.expect("non-empty grid"))
}

fn flat_accuracy(data: &FlatDataset, weights: &[f64]) -> Result<f64> {
    Ok(1.0 - zero_one_error(&data.predictions(weights)?, &data.golds())?)
}

/// Optimizer settings for the mixed grid: stop early once the objective
/// stops moving.
pub fn grid_optim() -> OptimConfig {
    OptimConfig {
        stall_tolerance: 1e-7,
        stall_iterations: 10,
        ..OptimConfig::default()
    }
}

fn check_grid(what: &'static str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid(what, "empty grid"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NondominantConfig {
    pub label_counts: Vec<usize>,
    pub sample_count: usize,
    pub top_prob: f64,
    pub top_label: TopLabel,
    pub hybrid_alpha: f64,
    pub lambda: f64,
    pub seed: u64,
    pub optim: OptimConfig,
}

/// Where the most likely label sits among the label indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopLabel {
    First,
    Last,
}

impl NondominantConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            label_counts: (3..=10).collect(),
            sample_count: 10_000,
            top_prob: 0.46,
            top_label: TopLabel::Last,
            hybrid_alpha: 0.5,
            lambda: 1e-4,
            seed,
            optim: OptimConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NondominantRow {
    pub k: usize,
    pub loss: LossKind,
    pub alpha: f64,
    pub train_error: f64,
    pub seed: u64,
    pub converged: bool,
}

pub fn run_nondominant_sweep(config: &NondominantConfig) -> Result<Vec<NondominantRow>> {
    let mut rows = Vec::new();
    for &k in &config.label_counts {
        let spec = NonDominantSpec {
            label_count: k,
            top_prob: config.top_prob,
            top_label: match config.top_label {
                TopLabel::First => 0,
                TopLabel::Last => k.saturating_sub(1),
            },
            sample_count: config.sample_count,
            seed: crate::synth::derive_seed(config.seed, k as u64),
        };
        let (data, _) = generate_nondominant(&spec)?;
        let packed = data.compress();
        for loss in [
            LossSpec::log(),
            LossSpec::hinge(),
            LossSpec::hybrid(config.hybrid_alpha)?,
        ] {
            let fit = train(loss, &packed, config.lambda, &config.optim)?;
            let train_error = zero_one_error(&data.predictions(fit.weights.values())?, &data.golds())?;
            rows.push(NondominantRow {
                k,
                loss: loss.kind(),
                alpha: loss.alpha(),
                train_error,
                seed: config.seed,
                converged: fit.converged,
            });
        }
    }
    rows.sort_by(|a, b| (a.k, a.loss.name()).cmp(&(b.k, b.loss.name())));
    Ok(rows)
}

pub fn nondominant_csv(rows: &[NondominantRow]) -> String {
    let mut out = String::from("k,loss,alpha,train_error,seed\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.k, r.loss, r.alpha, r.train_error, r.seed);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedConfig {
    pub rhos: Vec<f64>,
    pub sizes: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub seed: u64,
    pub held_out_size: usize,
    pub optim: OptimConfig,
}

impl MixedConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            rhos: MIXED_RHOS.to_vec(),
            sizes: MIXED_SIZES.to_vec(),
            lambdas: DEFAULT_LAMBDAS.to_vec(),
            alphas: DEFAULT_ALPHAS.to_vec(),
            seed,
            held_out_size: 1000,
            optim: grid_optim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedRow {
    pub rho: f64,
    pub m: usize,
    pub loss: LossKind,
    pub lambda: f64,
    pub alpha: f64,
    pub validation_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairwiseRow {
    pub pair: &'static str,
    pub wins: usize,
    pub losses: usize,
}

/// One `(rho, m)` cell: per-loss model selection on validation, then one
/// look at the test split.
pub fn run_mixed_cell(config: &MixedConfig, rho: f64, m: usize) -> Result<Vec<MixedRow>> {
    let mut spec = MixedSpec::new(rho, m, config.seed);
    spec.held_out_size = config.held_out_size;
    let data = generate_mixed(&spec)?;
    let encoder = MixedEncoder::fit(&data.train, spec.label_count)?;
    let compressed = encoder.encode(&data.train)?.compress();
    let validation = encoder.encode(&data.validation)?;
    let mut test = HeldOut::new(encoder.encode(&data.test)?);

    let mut selected = Vec::new();
    for kind in LossKind::ALL {
        let specs = loss_grid(kind, &config.alphas)?;
        let best = select_model(&specs, &config.lambdas, &compressed, &config.optim, |w| {
            Ok((flat_accuracy(&validation, w)?, w.to_vec()))
        })?;
        selected.push(best);
    }
    test.unlock();
    let test = test.get()?;
    selected
        .into_iter()
        .map(|s| {
            Ok(MixedRow {
                rho,
                m,
                loss: s.spec.kind(),
                lambda: s.lambda,
                alpha: s.spec.alpha(),
                validation_accuracy: s.validation_score,
                test_accuracy: flat_accuracy(test, &s.model)?,
            })
        })
        .collect()
}

pub fn run_mixed_grid(config: &MixedConfig) -> Result<(Vec<MixedRow>, Vec<PairwiseRow>)> {
    check_grid("lambda grid", &config.lambdas)?;
    check_grid("alpha grid", &config.alphas)?;
    check_grid("rho grid", &config.rhos)?;
    if config.sizes.is_empty() {
        return Err(Error::invalid("size grid", "empty grid"));
    }
    let mut rows = Vec::new();
    for &rho in &config.rhos {
        for &m in &config.sizes {
            rows.extend(run_mixed_cell(config, rho, m)?);
        }
    }
    rows.sort_by(|a, b| {
        a.rho
            .total_cmp(&b.rho)
            .then(a.m.cmp(&b.m))
            .then(a.loss.name().cmp(b.loss.name()))
    });
    let summary = pairwise_summary(&rows);
    Ok((rows, summary))
}

/// Win/loss counts of test accuracy over cells; ties are not counted.
pub fn pairwise_summary(rows: &[MixedRow]) -> Vec<PairwiseRow> {
    let accuracy = |rho: f64, m: usize, loss: LossKind| {
        rows.iter()
            .find(|r| r.rho == rho && r.m == m && r.loss == loss)
            .map(|r| r.test_accuracy)
    };
    let mut cells: Vec<(f64, usize)> = rows.iter().map(|r| (r.rho, r.m)).collect();
    cells.dedup();
    let pairs = [
        ("hybrid_vs_hinge", LossKind::Hybrid, LossKind::Hinge),
        ("hybrid_vs_log", LossKind::Hybrid, LossKind::Log),
        ("hinge_vs_log", LossKind::Hinge, LossKind::Log),
    ];
    pairs
        .iter()
        .map(|&(pair, a, b)| {
            let (mut wins, mut losses) = (0, 0);
            for &(rho, m) in &cells {
                if let (Some(x), Some(y)) = (accuracy(rho, m, a), accuracy(rho, m, b)) {
                    if x > y {
                        wins += 1;
                    } else if x < y {
                        losses += 1;
                    }
                }
            }
            PairwiseRow { pair, wins, losses }
        })
        .collect()
}

pub fn mixed_csv(rows: &[MixedRow]) -> String {
    let mut out = String::from("rho,m,loss,lambda,alpha,validation_accuracy,test_accuracy\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.rho, r.m, r.loss, r.lambda, r.alpha, r.validation_accuracy, r.test_accuracy
        );
    }
    out
}

pub fn pairwise_csv(rows: &[PairwiseRow]) -> String {
    let mut out = String::from("pair,wins,losses\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.pair, r.wins, r.losses);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkingConfig {
    pub corpus: SynthChunkSpec,
    pub portions: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub optim: OptimConfig,
}

impl ChunkingConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            corpus: SynthChunkSpec::new(1000, 0.5, seed),
            portions: vec![0.1, 1.0],
            lambdas: DEFAULT_LAMBDAS.to_vec(),
            alphas: DEFAULT_ALPHAS.to_vec(),
            optim: OptimConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkingRow {
    pub portion: f64,
    pub loss: LossKind,
    pub lambda: f64,
    pub alpha: f64,
    pub eval: ChunkEval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceRow {
    pub split: &'static str,
    pub rank: usize,
    pub gold_prob: f64,
    pub viterbi_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkingReport {
    pub rows: Vec<ChunkingRow>,
    pub dominance: Vec<DominanceRow>,
    /// Non-dominant fraction per dominance split, in `dominance` order.
    pub non_dominant: Vec<(&'static str, f64)>,
}

/// Train, test and validation splits of 20%, 40% and 40%, in corpus order.
pub fn split_corpus(corpus: &TaggedCorpus) -> Result<(TaggedCorpus, TaggedCorpus, TaggedCorpus)> {
    let n = corpus.len();
    let n_train = n / 5;
    let n_test = 2 * n / 5;
    let s = corpus.sentences();
    Ok((
        corpus.with_sentences(s[..n_train].to_vec())?,
        corpus.with_sentences(s[n_train..n_train + n_test].to_vec())?,
        corpus.with_sentences(s[n_train + n_test..].to_vec())?,
    ))
}

/// Viterbi decoding of `data` scored against the gold tags of `corpus`.
pub fn decode_eval(corpus: &TaggedCorpus, data: &ChainDataset, weights: &[f64]) -> Result<ChunkEval> {
    let predicted: Vec<Vec<String>> = data
        .decode(weights)?
        .iter()
        .map(|tags| corpus.tag_strings(tags))
        .collect();
    let gold: Vec<Vec<String>> = corpus
        .sentences()
        .iter()
        .map(|s| corpus.tag_strings(&s.tags))
        .collect();
    chunk_f1(&predicted, &gold)
}

pub fn profile_rows(split: &'static str, profile: &DominanceProfile, out: &mut Vec<DominanceRow>) {
    let (gold, best) = profile.sorted_curves();
    for (rank, (g, b)) in gold.into_iter().zip(best).enumerate() {
        out.push(DominanceRow {
            split,
            rank,
            gold_prob: g,
            viterbi_prob: b,
        });
    }
}

pub fn run_chunking(config: &ChunkingConfig) -> Result<ChunkingReport> {
    check_grid("lambda grid", &config.lambdas)?;
    check_grid("alpha grid", &config.alphas)?;
    check_grid("portion grid", &config.portions)?;
    if let Some(p) = config.portions.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
        return Err(Error::invalid("portion", format!("{p} is outside (0, 1]")));
    }
    let generated = generate_chunk_corpus(&config.corpus)?;
    let (train_corpus, test_corpus, validation_corpus) = split_corpus(&generated.corpus)?;
    let validation = validation_corpus.to_dataset()?;
    let mut test = HeldOut::new(test_corpus.to_dataset()?);

    let mut selected = Vec::new();
    let mut full_log_model = None;
    for &portion in &config.portions {
        let take = ((portion * train_corpus.len() as f64).ceil() as usize).clamp(1, train_corpus.len());
        let part = train_corpus.with_sentences(train_corpus.sentences()[..take].to_vec())?;
        let train_set = part.to_dataset()?;
        for kind in LossKind::ALL {
            let specs = loss_grid(kind, &config.alphas)?;
            let best = select_model(&specs, &config.lambdas, &train_set, &config.optim, |w| {
                Ok((decode_eval(&validation_corpus, &validation, w)?.f1, w.to_vec()))
            })?;
            if kind == LossKind::Log && portion == 1.0 {
                full_log_model = Some((train_set.clone(), best.model.clone()));
            }
            selected.push((portion, best));
        }
    }

    test.unlock();
    let test = test.get()?;
    let mut rows = selected
        .into_iter()
        .map(|(portion, s)| {
            Ok(ChunkingRow {
                portion,
                loss: s.spec.kind(),
                lambda: s.lambda,
                alpha: s.spec.alpha(),
                eval: decode_eval(&test_corpus, test, &s.model)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        a.portion
            .total_cmp(&b.portion)
            .then(a.loss.name().cmp(b.loss.name()))
    });

    let mut dominance = Vec::new();
    let mut non_dominant = Vec::new();
    let true_profile = dominance_profile(&generated.true_model, test.instances())?;
    non_dominant.push(("true_test", true_profile.non_dominant_fraction()));
    profile_rows("true_test", &true_profile, &mut dominance);
    if let Some((train_set, weights)) = full_log_model {
        let model = chain::ChainModel::from_params(train_set.layout(), weights)?;
        for (split, data) in [("log_train", &train_set), ("log_test", test)] {
            let profile = dominance_profile(&model, data.instances())?;
            non_dominant.push((split, profile.non_dominant_fraction()));
            profile_rows(split, &profile, &mut dominance);
        }
    }
    Ok(ChunkingReport {
        rows,
        dominance,
        non_dominant,
    })
}

pub fn chunking_csv(rows: &[ChunkingRow]) -> String {
    let mut out = String::from("portion,loss,accuracy,precision,recall,f1\n");
    for r in rows {
        let e = &r.eval;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.portion, r.loss, e.accuracy, e.precision, e.recall, e.f1
        );
    }
    out
}

pub fn selection_csv(rows: &[ChunkingRow]) -> String {
    let mut out = String::from("portion,loss,lambda,alpha\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.portion, r.loss, r.lambda, r.alpha);
    }
    out
}

pub fn dominance_csv(rows: &[DominanceRow]) -> String {
    let mut out = String::from("split,rank,gold_prob,viterbi_prob\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.split, r.rank, r.gold_prob, r.viterbi_prob);
    }
    out
}

pub fn non_dominant_csv(fractions: &[(&'static str, f64)]) -> String {
    let mut out = String::from("split,non_dominant_fraction\n");
    for (split, f) in fractions {
        let _ = writeln!(out, "{split},{f}");
    }
    out
}
