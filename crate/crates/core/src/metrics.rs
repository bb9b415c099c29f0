//! Misclassification error and chunk-level precision, recall and F1 for BIO
//! tag sequences.

use std::collections::HashSet;

use crate::error::{Error, Result};

pub fn zero_one_error(predictions: &[usize], golds: &[usize]) -> Result<f64> {
    if predictions.len() != golds.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: golds.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let wrong = predictions.iter().zip(golds).filter(|(p, g)| p != g).count();
    Ok(wrong as f64 / predictions.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkEval {
    /// Token-level fraction of matching tags.
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub predicted: usize,
    pub gold: usize,
    pub correct: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bio<'a> {
    Outside,
    Begin(&'a str),
    Inside(&'a str),
}

fn parse_tag(tag: &str, sentence: usize, position: usize) -> Result<Bio<'_>> {
    let malformed = || Error::MalformedTag {
        sentence,
        position,
        tag: tag.to_string(),
    };
    if tag == "O" {
        return Ok(Bio::Outside);
    }
    let (prefix, kind) = tag.split_once('-').ok_or_else(malformed)?;
    if kind.is_empty() {
        return Err(malformed());
    }
    match prefix {
        "B" => Ok(Bio::Begin(kind)),
        "I" => Ok(Bio::Inside(kind)),
        _ => Err(malformed()),
    }
}

/// Chunks as `(start, end_exclusive, type)`. An `I-T` that does not continue
/// a chunk of type `T` opens a new one.
pub fn extract_chunks<S: AsRef<str>>(tags: &[S], sentence: usize) -> Result<Vec<(usize, usize, String)>> {
    let mut chunks = Vec::new();
    let mut open: Option<(usize, &str)> = None;
    for (i, tag) in tags.iter().enumerate() {
        let bio = parse_tag(tag.as_ref(), sentence, i)?;
        let continues = matches!((bio, open), (Bio::Inside(k), Some((_, o))) if k == o);
        if continues {
            continue;
        }
        if let Some((start, kind)) = open.take() {
            chunks.push((start, i, kind.to_string()));
        }
        match bio {
            Bio::Begin(k) | Bio::Inside(k) => open = Some((i, k)),
            Bio::Outside => {}
        }
    }
    if let Some((start, kind)) = open {
        chunks.push((start, tags.len(), kind.to_string()));
    }
    Ok(chunks)
}

/// Micro-averaged over all sentences.
pub fn chunk_f1<S: AsRef<str>>(predicted: &[Vec<S>], gold: &[Vec<S>]) -> Result<ChunkEval> {
    if predicted.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: gold.len(),
        });
    }
    let (mut n_pred, mut n_gold, mut n_correct) = (0, 0, 0);
    let (mut tokens, mut token_hits) = (0usize, 0usize);
    for (s, (p, g)) in predicted.iter().zip(gold).enumerate() {
        if p.len() != g.len() {
            return Err(Error::LengthMismatch {
                left: p.len(),
                right: g.len(),
            });
        }
        tokens += p.len();
        token_hits += p.iter().zip(g).filter(|(a, b)| a.as_ref() == b.as_ref()).count();
        let pc = extract_chunks(p, s)?;
        let gc: HashSet<_> = extract_chunks(g, s)?.into_iter().collect();
        n_pred += pc.len();
        n_gold += gc.len();
        n_correct += pc.iter().filter(|c| gc.contains(*c)).count();
    }
    let (precision, recall) = match (n_pred, n_gold) {
        (0, 0) => (1.0, 1.0),
        _ => (ratio(n_correct, n_pred), ratio(n_correct, n_gold)),
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(ChunkEval {
        accuracy: if tokens == 0 { 1.0 } else { ratio(token_hits, tokens) },
        precision,
        recall,
        f1,
        predicted: n_pred,
        gold: n_gold,
        correct: n_correct,
    })
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}
