//! Seeded synthetic datasets.
//!
//! Every generator is a pure function of its spec. Randomness comes from
//! ChaCha8 streams seeded through `seed_from_u64`; independent streams for
//! sub-tasks get seeds derived with [`derive_seed`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::chain::{ChainLayout, ChainModel};
use crate::dataset::FlatDataset;
use crate::error::{Error, Result};
use crate::io::{TaggedCorpus, TaggedSentence};
use crate::model::{FlatInstance, LabelDistribution};

/// SplitMix64 mix of `seed` and a stream identifier.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Inverse-CDF draw from a discrete distribution with one uniform variate.
pub fn sample_index<R: Rng + ?Sized>(rng: &mut R, probabilities: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probabilities.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probabilities.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Label noise with no dominant label on a single constant input.
#[derive(Debug, Clone, PartialEq)]
pub struct NonDominantSpec {
    pub label_count: usize,
    pub top_prob: f64,
    /// Index of the most likely label.
    pub top_label: usize,
    pub sample_count: usize,
    pub seed: u64,
}

impl NonDominantSpec {
    pub fn new(label_count: usize, sample_count: usize, seed: u64) -> Self {
        Self {
            label_count,
            top_prob: 0.46,
            top_label: 0,
            sample_count,
            seed,
        }
    }

    pub fn distribution(&self) -> Result<LabelDistribution> {
        if !(3..=10).contains(&self.label_count) {
            return Err(Error::invalid(
                "label count",
                format!("{} is outside 3..=10", self.label_count),
            ));
        }
        if !(self.top_prob > 0.0 && self.top_prob < 0.5) {
            return Err(Error::invalid(
                "top probability",
                format!("{} is outside (0, 1/2)", self.top_prob),
            ));
        }
        if self.top_label >= self.label_count {
            return Err(Error::LabelOutOfRange {
                label: self.top_label,
                count: self.label_count,
            });
        }
        let rest = (1.0 - self.top_prob) / (self.label_count - 1) as f64;
        let mut p = vec![rest; self.label_count];
        p[self.top_label] = self.top_prob;
        LabelDistribution::new(p)
    }
}

/// The constant input of the non-dominant experiment.
pub const NONDOMINANT_FEATURES: [f64; 2] = [1.0, 1.0];

/// Instances share [`NONDOMINANT_FEATURES`]; labels are i.i.d. draws from
/// the returned distribution.
pub fn generate_nondominant(spec: &NonDominantSpec) -> Result<(FlatDataset, LabelDistribution)> {
    let q = spec.distribution()?;
    if spec.sample_count == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut rng = rng(spec.seed);
    let instances = (0..spec.sample_count)
        .map(|_| {
            let y = sample_index(&mut rng, q.probabilities());
            FlatInstance::block_encoded(&NONDOMINANT_FEATURES, spec.label_count, false, y)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((FlatDataset::new(instances)?, q))
}

/// A mixture of Gaussian clusters with a dominant label and one fixed input
/// with no dominant label.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedSpec {
    /// Fraction of instances drawn at the non-dominant input.
    pub rho: f64,
    pub sample_count: usize,
    pub feature_dim: usize,
    pub label_count: usize,
    /// Class `y` (zero-based) is centred at `dominant_mean_base + y + 1` in every dimension.
    pub dominant_mean_base: f64,
    pub dominant_sigma: f64,
    pub nondominant_top_prob: f64,
    pub nondominant_other_prob: f64,
    pub nondominant_value: f64,
    pub held_out_size: usize,
    pub seed: u64,
}

pub const MIXED_RHOS: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
pub const MIXED_SIZES: [usize; 6] = [30, 60, 100, 300, 600, 1000];

impl MixedSpec {
    pub fn new(rho: f64, sample_count: usize, seed: u64) -> Self {
        Self {
            rho,
            sample_count,
            feature_dim: 100,
            label_count: 5,
            dominant_mean_base: 1.0,
            dominant_sigma: 0.6,
            nondominant_top_prob: 0.4,
            nondominant_other_prob: 0.15,
            nondominant_value: 0.1,
            held_out_size: 1000,
            seed,
        }
    }

    pub fn nondominant_distribution(&self) -> Result<LabelDistribution> {
        let mut p = vec![self.nondominant_other_prob; self.label_count];
        p[0] = self.nondominant_top_prob;
        LabelDistribution::new(p)
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::invalid("rho", format!("{} is outside [0, 1]", self.rho)));
        }
        if self.sample_count == 0 || self.held_out_size == 0 || self.feature_dim == 0 {
            return Err(Error::EmptyDataset);
        }
        if self.label_count < 2 {
            return Err(Error::invalid("label count", "need at least two labels"));
        }
        if !(self.dominant_sigma > 0.0) {
            return Err(Error::invalid("sigma", format!("{}", self.dominant_sigma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedPoint {
    pub x: Vec<f64>,
    pub label: usize,
    pub dominant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedData {
    pub train: Vec<MixedPoint>,
    pub validation: Vec<MixedPoint>,
    pub test: Vec<MixedPoint>,
}

/// Per-dimension standardization fitted on a training split, followed by
/// block encoding with a bias feature per label.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedEncoder {
    mean: Vec<f64>,
    scale: Vec<f64>,
    label_count: usize,
}

impl MixedEncoder {
    /// Dimensions with zero spread keep unit scale.
    pub fn fit(points: &[MixedPoint], label_count: usize) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyDataset)?;
        let dim = first.x.len();
        let n = points.len() as f64;
        let mut mean = vec![0.0; dim];
        for p in points {
            if p.x.len() != dim {
                return Err(Error::LengthMismatch {
                    left: dim,
                    right: p.x.len(),
                });
            }
            for (m, v) in mean.iter_mut().zip(&p.x) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for p in points {
            for ((s, v), m) in var.iter_mut().zip(&p.x).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self {
            mean,
            scale,
            label_count,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn standardize(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::LengthMismatch {
                left: self.mean.len(),
                right: x.len(),
            });
        }
        Ok(x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect())
    }

    /// Rewrites weights learned on encoded inputs as weights over raw inputs
    /// with a bias feature, giving identical scores.
    pub fn fold(&self, weights: &[f64]) -> Result<Vec<f64>> {
        let block = self.mean.len() + 1;
        if weights.len() != block * self.label_count {
            return Err(Error::DimensionMismatch {
                weights: weights.len(),
                features: block * self.label_count,
            });
        }
        let mut raw = Vec::with_capacity(weights.len());
        for w in weights.chunks(block) {
            let mut bias = w[block - 1];
            for ((v, m), s) in w.iter().zip(&self.mean).zip(&self.scale) {
                raw.push(v / s);
                bias -= v * m / s;
            }
            raw.push(bias);
        }
        Ok(raw)
    }

    pub fn encode(&self, points: &[MixedPoint]) -> Result<FlatDataset> {
        let instances = points
            .iter()
            .map(|p| FlatInstance::block_encoded(&self.standardize(&p.x)?, self.label_count, true, p.label))
            .collect::<Result<Vec<_>>>()?;
        FlatDataset::new(instances)
    }
}

const STREAM_TRAIN: u64 = 1;
const STREAM_VALIDATION: u64 = 2;
const STREAM_TEST: u64 = 3;

fn draw_mixed(spec: &MixedSpec, q: &LabelDistribution, count: usize, seed: u64) -> Result<Vec<MixedPoint>> {
    let mut rng = rng(seed);
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let nondominant = rng.gen::<f64>() < spec.rho;
        if nondominant {
            let label = sample_index(&mut rng, q.probabilities());
            points.push(MixedPoint {
                x: vec![spec.nondominant_value; spec.feature_dim],
                label,
                dominant: false,
            });
        } else {
            let label = rng.gen_range(0..spec.label_count);
            let mean = spec.dominant_mean_base + (label + 1) as f64;
            let normal = Normal::new(mean, spec.dominant_sigma)
                .map_err(|e| Error::invalid("gaussian", e.to_string()))?;
            let x = (0..spec.feature_dim).map(|_| normal.sample(&mut rng)).collect();
            points.push(MixedPoint {
                x,
                label,
                dominant: true,
            });
        }
    }
    Ok(points)
}

/// Train, validation and test splits. The held-out splits depend only on
/// `(seed, rho)`, so every training size at one `rho` is scored on the same
/// validation and test sets.
pub fn generate_mixed(spec: &MixedSpec) -> Result<MixedData> {
    spec.validate()?;
    let q = spec.nondominant_distribution()?;
    let cell = derive_seed(spec.seed, spec.rho.to_bits());
    let train_seed = derive_seed(derive_seed(cell, STREAM_TRAIN), spec.sample_count as u64);
    Ok(MixedData {
        train: draw_mixed(spec, &q, spec.sample_count, train_seed)?,
        validation: draw_mixed(spec, &q, spec.held_out_size, derive_seed(cell, STREAM_VALIDATION))?,
        test: draw_mixed(spec, &q, spec.held_out_size, derive_seed(cell, STREAM_TEST))?,
    })
}

/// Generator for a BIO-tagged corpus from a hidden Markov model.
///
/// Each tag owns `words_per_tag` words nobody else emits. Each chunk type
/// also owns a pool of `ambiguous_words` shared by `O`, `B-T` and `I-T`; a
/// token comes from that pool with probability `ambiguity_rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthChunkSpec {
    pub sentence_count: usize,
    pub min_length: usize,
    pub max_length: usize,
    pub chunk_types: Vec<String>,
    pub words_per_tag: usize,
    pub ambiguous_words: usize,
    pub ambiguity_rate: f64,
    pub seed: u64,
}

impl SynthChunkSpec {
    pub fn new(sentence_count: usize, ambiguity_rate: f64, seed: u64) -> Self {
        Self {
            sentence_count,
            min_length: 4,
            max_length: 12,
            chunk_types: vec!["NP".into(), "VP".into()],
            words_per_tag: 8,
            ambiguous_words: 4,
            ambiguity_rate,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ambiguity_rate) {
            return Err(Error::invalid(
                "ambiguity rate",
                format!("{} is outside [0, 1]", self.ambiguity_rate),
            ));
        }
        if self.min_length == 0 || self.min_length > self.max_length {
            return Err(Error::invalid(
                "sentence length",
                format!("{}..={}", self.min_length, self.max_length),
            ));
        }
        if self.chunk_types.is_empty() {
            return Err(Error::invalid("chunk types", "need at least one"));
        }
        if self.words_per_tag == 0 || (self.ambiguity_rate > 0.0 && self.ambiguous_words == 0) {
            return Err(Error::invalid("vocabulary", "word pools must be non-empty"));
        }
        Ok(())
    }

    /// `O`, then `B-T`, `I-T` for each chunk type.
    pub fn tag_names(&self) -> Vec<String> {
        let mut tags = vec!["O".to_string()];
        for t in &self.chunk_types {
            tags.push(format!("B-{t}"));
            tags.push(format!("I-{t}"));
        }
        tags
    }
}

/// The generating model in probability form.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkHmm {
    pub start: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
    pub emission: Vec<Vec<f64>>,
}

impl ChunkHmm {
    /// Tag `0` is `O`; chunk type `c` has `B` at `1 + 2c` and `I` at `2 + 2c`.
    pub fn new(spec: &SynthChunkSpec) -> Self {
        let types = spec.chunk_types.len();
        let t = 1 + 2 * types;
        let begin = |c: usize| 1 + 2 * c;
        let inside = |c: usize| 2 + 2 * c;
        let spread = |mass: f64| mass / types as f64;

        let mut start = vec![0.0; t];
        start[0] = 0.5;
        for c in 0..types {
            start[begin(c)] = spread(0.5);
        }

        let mut transition = vec![vec![0.0; t]; t];
        transition[0][0] = 0.5;
        for c in 0..types {
            transition[0][begin(c)] = spread(0.5);
        }
        for c in 0..types {
            let (b, i) = (begin(c), inside(c));
            transition[b][i] = 0.6;
            transition[b][0] = 0.2;
            transition[i][i] = 0.3;
            transition[i][0] = 0.4;
            for d in 0..types {
                transition[b][begin(d)] += spread(0.2);
                transition[i][begin(d)] += spread(0.3);
            }
        }

        let vocab = t * spec.words_per_tag + types * spec.ambiguous_words;
        let pool = |c: usize| t * spec.words_per_tag + c * spec.ambiguous_words;
        let a = spec.ambiguity_rate;
        let mut emission = vec![vec![0.0; vocab]; t];
        for (tag, row) in emission.iter_mut().enumerate() {
            for w in 0..spec.words_per_tag {
                row[tag * spec.words_per_tag + w] = (1.0 - a) / spec.words_per_tag as f64;
            }
            if a > 0.0 {
                // O draws from every pool, a chunk tag only from its own
                let pools: Vec<usize> = if tag == 0 {
                    (0..types).collect()
                } else {
                    vec![(tag - 1) / 2]
                };
                let share = a / (pools.len() * spec.ambiguous_words) as f64;
                for c in pools {
                    for w in 0..spec.ambiguous_words {
                        row[pool(c) + w] += share;
                    }
                }
            }
        }
        Self {
            start,
            transition,
            emission,
        }
    }

    pub fn vocabulary_size(&self) -> usize {
        self.emission[0].len()
    }

    /// The chain model whose conditional distribution over tag sequences
    /// equals this HMM's posterior. Zero probabilities become `ln 1e-12`.
    pub fn to_chain_model(&self) -> Result<ChainModel> {
        let t = self.start.len();
        let layout = ChainLayout::new(t, self.vocabulary_size())?;
        let ln = |p: f64| p.max(1e-12).ln();
        let mut model = ChainModel::zeros(layout);
        for tag in 0..t {
            model.set_start(tag, ln(self.start[tag]));
            for next in 0..t {
                model.set_transition(tag, next, ln(self.transition[tag][next]));
            }
            for (word, &p) in self.emission[tag].iter().enumerate() {
                model.set_emission(word, tag, ln(p));
            }
        }
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkCorpus {
    pub corpus: TaggedCorpus,
    pub hmm: ChunkHmm,
    pub true_model: ChainModel,
}

pub fn generate_chunk_corpus(spec: &SynthChunkSpec) -> Result<ChunkCorpus> {
    spec.validate()?;
    let hmm = ChunkHmm::new(spec);
    let tags = spec.tag_names();
    let vocabulary: Vec<String> = (0..hmm.vocabulary_size()).map(|w| format!("w{w}")).collect();
    let mut rng = rng(spec.seed);
    let mut sentences = Vec::with_capacity(spec.sentence_count);
    for _ in 0..spec.sentence_count {
        let len = rng.gen_range(spec.min_length..=spec.max_length);
        let mut tag_seq: Vec<usize> = Vec::with_capacity(len);
        let mut tokens = Vec::with_capacity(len);
        for pos in 0..len {
            let tag = if pos == 0 {
                sample_index(&mut rng, &hmm.start)
            } else {
                sample_index(&mut rng, &hmm.transition[tag_seq[pos - 1]])
            };
            tag_seq.push(tag);
            tokens.push(sample_index(&mut rng, &hmm.emission[tag]));
        }
        sentences.push(TaggedSentence {
            tokens,
            tags: tag_seq,
        });
    }
    let true_model = hmm.to_chain_model()?;
    Ok(ChunkCorpus {
        corpus: TaggedCorpus::new(tags, vocabulary, sentences)?,
        hmm,
        true_model,
    })
}
