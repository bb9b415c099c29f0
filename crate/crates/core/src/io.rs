//! Tagged corpora, CONLL-style and CSV files, and saved models.
//!
//! CONLL files hold one `TOKEN TAG` pair per line with a blank line between
//! sentences and a trailing newline. The token and tag inventories live in a
//! sidecar `<path>.vocab`:
//!
//! ```text
//! #tags
//! O
//! B-NP
//! #tokens
//! the
//! ```
//!
//! Saved models are plain text:
//!
//! ```text
//! hybrid-model 1
//! kind flat 5 100 bias
//! loss hybrid 0.5
//! lambda 0.001
//! fingerprint <sha256 of the training data>
//! weights 505
//! 0 0.25
//! ...
//! checksum <sha256 of every preceding byte>
//! ```

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::chain::{ChainInstance, ChainLayout};
use crate::dataset::{ChainDataset, FlatDataset};
use crate::error::{Error, Result};
use crate::losses::{LossKind, LossSpec};
use crate::model::FeatureVector;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSentence {
    pub tokens: Vec<usize>,
    pub tags: Vec<usize>,
}

/// Sentences of token and tag indices into named inventories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedCorpus {
    tags: Vec<String>,
    vocabulary: Vec<String>,
    sentences: Vec<TaggedSentence>,
}

fn check_names(what: &'static str, names: &[String]) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(names.len());
    for (i, n) in names.iter().enumerate() {
        if n.is_empty() || n.chars().any(char::is_whitespace) || n.starts_with('#') {
            return Err(Error::invalid(what, format!("unusable name {n:?}")));
        }
        if index.insert(n.clone(), i).is_some() {
            return Err(Error::invalid(what, format!("duplicate name {n:?}")));
        }
    }
    Ok(index)
}

impl TaggedCorpus {
    pub fn new(tags: Vec<String>, vocabulary: Vec<String>, sentences: Vec<TaggedSentence>) -> Result<Self> {
        check_names("tag set", &tags)?;
        check_names("vocabulary", &vocabulary)?;
        for s in &sentences {
            if s.tokens.len() != s.tags.len() {
                return Err(Error::LengthMismatch {
                    left: s.tokens.len(),
                    right: s.tags.len(),
                });
            }
            if s.tokens.is_empty() {
                return Err(Error::invalid("sentence", "empty sentence"));
            }
            if let Some(&t) = s.tags.iter().find(|&&t| t >= tags.len()) {
                return Err(Error::LabelOutOfRange {
                    label: t,
                    count: tags.len(),
                });
            }
            if let Some(&w) = s.tokens.iter().find(|&&w| w >= vocabulary.len()) {
                return Err(Error::invalid("token", format!("index {w} outside vocabulary")));
            }
        }
        Ok(Self {
            tags,
            vocabulary,
            sentences,
        })
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn sentences(&self) -> &[TaggedSentence] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Same inventories, a subset of the sentences.
    pub fn with_sentences(&self, sentences: Vec<TaggedSentence>) -> Result<Self> {
        Self::new(self.tags.clone(), self.vocabulary.clone(), sentences)
    }

    /// One-hot token features.
    pub fn layout(&self) -> Result<ChainLayout> {
        ChainLayout::new(self.tags.len(), self.vocabulary.len())
    }

    pub fn to_instances(&self) -> Result<Vec<ChainInstance>> {
        let dim = self.vocabulary.len();
        self.sentences
            .iter()
            .map(|s| {
                let obs = s
                    .tokens
                    .iter()
                    .map(|&w| FeatureVector::new(dim, [(w, 1.0)]))
                    .collect::<Result<Vec<_>>>()?;
                ChainInstance::new(obs, s.tags.clone())
            })
            .collect()
    }

    pub fn to_dataset(&self) -> Result<ChainDataset> {
        ChainDataset::new(self.layout()?, self.to_instances()?)
    }

    pub fn tag_strings(&self, tags: &[usize]) -> Vec<String> {
        tags.iter().map(|&t| self.tags[t].clone()).collect()
    }

    pub fn to_conll(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sentences.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            for (&w, &t) in s.tokens.iter().zip(&s.tags) {
                let _ = writeln!(out, "{} {}", self.vocabulary[w], self.tags[t]);
            }
        }
        out
    }

    pub fn vocab_sidecar(&self) -> String {
        let mut out = String::from("#tags\n");
        for t in &self.tags {
            let _ = writeln!(out, "{t}");
        }
        out.push_str("#tokens\n");
        for w in &self.vocabulary {
            let _ = writeln!(out, "{w}");
        }
        out
    }

    /// Parses sidecar inventories.
    pub fn parse_vocab(text: &str) -> Result<(Vec<String>, Vec<String>)> {
        let mut tags = Vec::new();
        let mut tokens = Vec::new();
        let mut section: Option<&mut Vec<String>> = None;
        for (i, line) in text.lines().enumerate() {
            match line {
                "#tags" => section = Some(&mut tags),
                "#tokens" => section = Some(&mut tokens),
                "" => return Err(Error::parse(i + 1, "blank line in vocabulary")),
                name => match section.as_deref_mut() {
                    Some(list) => list.push(name.to_string()),
                    None => return Err(Error::parse(i + 1, "entry before a section header")),
                },
            }
        }
        Ok((tags, tokens))
    }

    /// Parses CONLL text against known inventories.
    pub fn parse_conll(text: &str, tags: Vec<String>, vocabulary: Vec<String>) -> Result<Self> {
        let tag_index = check_names("tag set", &tags)?;
        let token_index = check_names("vocabulary", &vocabulary)?;
        if !text.is_empty() && !text.ends_with('\n') {
            return Err(Error::parse(text.lines().count(), "missing final newline"));
        }
        let mut sentences = Vec::new();
        let mut current = TaggedSentence {
            tokens: Vec::new(),
            tags: Vec::new(),
        };
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                if current.tokens.is_empty() {
                    return Err(Error::parse(line_no, "empty sentence"));
                }
                sentences.push(std::mem::replace(
                    &mut current,
                    TaggedSentence {
                        tokens: Vec::new(),
                        tags: Vec::new(),
                    },
                ));
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            let [token, tag] = cols[..] else {
                return Err(Error::parse(line_no, format!("expected 2 columns, found {}", cols.len())));
            };
            let &w = token_index
                .get(token)
                .ok_or_else(|| Error::parse(line_no, format!("unknown token {token:?}")))?;
            let &t = tag_index
                .get(tag)
                .ok_or_else(|| Error::parse(line_no, format!("unknown tag {tag:?}")))?;
            current.tokens.push(w);
            current.tags.push(t);
        }
        if !current.tokens.is_empty() {
            sentences.push(current);
        }
        Self::new(tags, vocabulary, sentences)
    }
}

pub fn vocab_path(path: &Path) -> PathBuf {
    let mut s = OsString::from(path.as_os_str());
    s.push(".vocab");
    PathBuf::from(s)
}

/// Writes `path` and its `.vocab` sidecar.
pub fn write_conll(corpus: &TaggedCorpus, path: &Path) -> Result<()> {
    fs::write(path, corpus.to_conll())?;
    fs::write(vocab_path(path), corpus.vocab_sidecar())?;
    Ok(())
}

pub fn read_conll(path: &Path) -> Result<TaggedCorpus> {
    let (tags, vocabulary) = TaggedCorpus::parse_vocab(&fs::read_to_string(vocab_path(path))?)?;
    TaggedCorpus::parse_conll(&fs::read_to_string(path)?, tags, vocabulary)
}

/// Labelled dense points as `label,x0,x1,...` with a header row.
pub fn flat_csv(labels: &[usize], points: &[Vec<f64>]) -> Result<String> {
    if labels.len() != points.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: points.len(),
        });
    }
    let dim = points.first().map_or(0, Vec::len);
    let mut out = String::from("label");
    for i in 0..dim {
        let _ = write!(out, ",x{i}");
    }
    out.push('\n');
    for (y, x) in labels.iter().zip(points) {
        if x.len() != dim {
            return Err(Error::LengthMismatch {
                left: dim,
                right: x.len(),
            });
        }
        let _ = write!(out, "{y}");
        for v in x {
            let _ = write!(out, ",{v:?}");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_flat_csv(text: &str) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::EmptyDataset)?;
    let columns = header.split(',').count();
    if !header.starts_with("label") {
        return Err(Error::parse(1, "header must start with `label`"));
    }
    let mut labels = Vec::new();
    let mut points = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns {
            return Err(Error::parse(
                line_no,
                format!("expected {columns} columns, found {}", fields.len()),
            ));
        }
        let label = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad label {:?}", fields[0])))?;
        let x = fields[1..]
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(line_no, format!("bad value {f:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        labels.push(label);
        points.push(x);
    }
    Ok((labels, points))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn hash_features(h: &mut Sha256, fv: &FeatureVector) {
    h.update((fv.entries().len() as u64).to_le_bytes());
    for &(i, v) in fv.entries() {
        h.update((i as u64).to_le_bytes());
        h.update(v.to_bits().to_le_bytes());
    }
}

/// SHA-256 over the gold labels and feature entries of a flat dataset.
pub fn fingerprint_flat(data: &FlatDataset) -> String {
    let mut h = Sha256::new();
    h.update(b"flat");
    for inst in data.instances() {
        h.update((inst.gold() as u64).to_le_bytes());
        for fv in inst.features() {
            hash_features(&mut h, fv);
        }
    }
    hex(&h.finalize())
}

/// SHA-256 over the tags and observations of a chain dataset.
pub fn fingerprint_chain(data: &ChainDataset) -> String {
    let mut h = Sha256::new();
    h.update(b"chain");
    for inst in data.instances() {
        h.update((inst.len() as u64).to_le_bytes());
        for (fv, &t) in inst.observations().iter().zip(inst.gold_tags()) {
            h.update((t as u64).to_le_bytes());
            hash_features(&mut h, fv);
        }
    }
    hex(&h.finalize())
}

pub const MODEL_FORMAT: &str = "hybrid-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Block-encoded inputs of `input_dim` values, plus a bias when set.
    Flat {
        label_count: usize,
        input_dim: usize,
        bias: bool,
    },
    Chain(ChainLayout),
}

impl ModelKind {
    pub fn dimension(&self) -> usize {
        match *self {
            ModelKind::Flat {
                label_count,
                input_dim,
                bias,
            } => label_count * (input_dim + usize::from(bias)),
            ModelKind::Chain(layout) => layout.dimension(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact {
    pub kind: ModelKind,
    pub loss: LossSpec,
    pub lambda: f64,
    pub fingerprint: String,
    pub weights: Vec<f64>,
}

impl ModelArtifact {
    pub fn verify_fingerprint(&self, computed: &str) -> Result<()> {
        if self.fingerprint != computed {
            return Err(Error::FingerprintMismatch {
                stored: self.fingerprint.clone(),
                computed: computed.to_string(),
            });
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MODEL_FORMAT} {MODEL_VERSION}\n");
        match self.kind {
            ModelKind::Flat {
                label_count,
                input_dim,
                bias,
            } => {
                let bias = if bias { "bias" } else { "nobias" };
                let _ = writeln!(out, "kind flat {label_count} {input_dim} {bias}");
            }
            ModelKind::Chain(l) => {
                let _ = writeln!(out, "kind chain {} {}", l.tag_count, l.feature_count);
            }
        }
        let _ = writeln!(out, "loss {} {:?}", self.loss.kind(), self.loss.alpha());
        let _ = writeln!(out, "lambda {:?}", self.lambda);
        let _ = writeln!(out, "fingerprint {}", self.fingerprint);
        let _ = writeln!(out, "weights {}", self.weights.len());
        for (i, w) in self.weights.iter().enumerate() {
            let _ = writeln!(out, "{i} {w:?}");
        }
        let checksum = hex(&Sha256::digest(out.as_bytes()));
        let _ = writeln!(out, "checksum {checksum}");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().collect();
        let header = lines.first().ok_or_else(|| Error::parse(1, "empty model file"))?;
        match header.split_once(' ') {
            Some((MODEL_FORMAT, v)) if v == MODEL_VERSION.to_string() => {}
            Some((MODEL_FORMAT, v)) => return Err(Error::UnsupportedVersion(v.to_string())),
            _ => return Err(Error::parse(1, "not a model file")),
        }
        let last = lines.len();
        let stored = lines
            .last()
            .and_then(|l| l.strip_prefix("checksum "))
            .filter(|_| text.ends_with('\n'))
            .ok_or_else(|| Error::parse(last, "truncated model file: no checksum"))?;
        let body_len = text.len() - lines[last - 1].len() - 1;
        let computed = hex(&Sha256::digest(&text.as_bytes()[..body_len]));
        if computed != stored {
            return Err(Error::parse(last, "checksum mismatch"));
        }

        let field = |n: usize, key: &str| -> Result<Vec<&str>> {
            let line = lines.get(n).ok_or_else(|| Error::parse(n + 1, "truncated model file"))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(Error::parse(n + 1, format!("expected `{key}`")));
            }
            Ok(parts.collect())
        };
        let num = |n: usize, s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::parse(n + 1, format!("bad integer {s:?}")))
        };
        let real = |n: usize, s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::parse(n + 1, format!("bad number {s:?}")))
        };

        let kind = match field(1, "kind")?[..] {
            ["flat", k, d, b] => ModelKind::Flat {
                label_count: num(1, k)?,
                input_dim: num(1, d)?,
                bias: match b {
                    "bias" => true,
                    "nobias" => false,
                    _ => return Err(Error::parse(2, format!("bad bias flag {b:?}"))),
                },
            },
            ["chain", t, f] => ModelKind::Chain(ChainLayout::new(num(1, t)?, num(1, f)?)?),
            _ => return Err(Error::parse(2, "bad model kind")),
        };
        let loss = match field(2, "loss")?[..] {
            [k, a] => {
                let kind: LossKind = k.parse().map_err(|_| Error::parse(3, format!("unknown loss {k:?}")))?;
                LossSpec::new(kind, real(2, a)?)?
            }
            _ => return Err(Error::parse(3, "bad loss line")),
        };
        let lambda = match field(3, "lambda")?[..] {
            [l] => real(3, l)?,
            _ => return Err(Error::parse(4, "bad lambda line")),
        };
        let fingerprint = match field(4, "fingerprint")?[..] {
            [f] => f.to_string(),
            _ => return Err(Error::parse(5, "bad fingerprint line")),
        };
        let count = match field(5, "weights")?[..] {
            [n] => num(5, n)?,
            _ => return Err(Error::parse(6, "bad weights line")),
        };
        if count != kind.dimension() {
            return Err(Error::DimensionMismatch {
                weights: count,
                features: kind.dimension(),
            });
        }
        if lines.len() != 6 + count + 1 {
            return Err(Error::parse(lines.len(), "truncated model file"));
        }
        let mut weights = Vec::with_capacity(count);
        for (i, line) in lines[6..6 + count].iter().enumerate() {
            let n = 6 + i;
            let (idx, value) = line
                .split_once(' ')
                .ok_or_else(|| Error::parse(n + 1, "expected `index value`"))?;
            if num(n, idx)? != i {
                return Err(Error::parse(n + 1, "weights out of order"));
            }
            let v = real(n, value)?;
            if !v.is_finite() {
                return Err(Error::NonFinite(i));
            }
            weights.push(v);
        }
        Ok(Self {
            kind,
            loss,
            lambda,
            fingerprint,
            weights,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}
