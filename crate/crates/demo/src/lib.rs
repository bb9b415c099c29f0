//! Browser bindings: the alpha threshold of a label distribution, the
//! conditional risk over the 3-class simplex, and loss curves against the
//! margin. Each binding wraps a plain function usable from native code.

use hybrid_loss::consistency::{alpha_condition, conditional_risk, simplex_risk_minimizer};
use hybrid_loss::losses::{evaluate, LossSpec};
use hybrid_loss::model::{LabelDistribution, ScoreVector};
use wasm_bindgen::prelude::*;

/// Summary of [`alpha_condition`] for one distribution.
#[wasm_bindgen]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub dominant: bool,
    pub top_label: usize,
    pub gap: f64,
    /// Threshold on alpha, clamped to `[0, 1]`.
    pub alpha: f64,
}

pub fn threshold_of(q: &[f64]) -> Result<Threshold, String> {
    let q = LabelDistribution::new(q.to_vec()).map_err(|e| e.to_string())?;
    let r = alpha_condition(&q).map_err(|e| e.to_string())?;
    Ok(Threshold {
        dominant: r.dominant,
        top_label: r.top_label,
        gap: r.gap,
        alpha: r.alpha_threshold,
    })
}

fn spec_for(alpha: f64) -> Result<LossSpec, String> {
    if alpha == 0.0 {
        Ok(LossSpec::hinge())
    } else if alpha == 1.0 {
        Ok(LossSpec::log())
    } else {
        LossSpec::hybrid(alpha).map_err(|e| e.to_string())
    }
}

/// Conditional risk on the interior points `(i, j, n - i - j) / n` of the
/// 3-class simplex, as `[p1, p2, risk]` triples.
pub fn risk_grid(alpha: f64, q: &[f64], resolution: usize) -> Result<Vec<f64>, String> {
    if q.len() != 3 {
        return Err(format!("expected 3 probabilities, got {}", q.len()));
    }
    if resolution < 3 {
        return Err("resolution must be at least 3".into());
    }
    spec_for(alpha)?;
    LabelDistribution::new(q.to_vec()).map_err(|e| e.to_string())?;
    let n = resolution as f64;
    let mut out = Vec::new();
    for i in 1..resolution - 1 {
        for j in 1..resolution - i {
            let p = [i as f64 / n, j as f64 / n, (resolution - i - j) as f64 / n];
            let log_p: Vec<f64> = p.iter().map(|v| v.ln()).collect();
            out.extend([p[0], p[1], conditional_risk(alpha, q, &log_p)]);
        }
    }
    Ok(out)
}

/// Risk minimizer over the simplex followed by `1.0` when its mode agrees
/// with the mode of `q` and `0.0` otherwise.
pub fn minimizer_of(alpha: f64, q: &[f64], resolution: usize) -> Result<Vec<f64>, String> {
    let spec = spec_for(alpha)?;
    let q = LabelDistribution::new(q.to_vec()).map_err(|e| e.to_string())?;
    let m = simplex_risk_minimizer(&spec, &q, resolution).map_err(|e| e.to_string())?;
    let aligned = m.is_aligned_with(&q).map_err(|e| e.to_string())?;
    let mut out = m.minimizer;
    out.push(if aligned { 1.0 } else { 0.0 });
    Ok(out)
}

/// Log, hinge and hybrid loss of a `labels`-class score vector whose gold
/// score leads every other score by the margin, as
/// `[margin, log, hinge, hybrid]` rows over `steps + 1` evenly spaced margins.
pub fn curves(alpha: f64, labels: usize, from: f64, to: f64, steps: usize) -> Result<Vec<f64>, String> {
    if labels < 2 {
        return Err("need at least two labels".into());
    }
    if steps == 0 || !(to > from) {
        return Err("need a non-empty margin range".into());
    }
    let specs = [LossSpec::log(), LossSpec::hinge(), spec_for(alpha)?];
    let mut out = Vec::with_capacity((steps + 1) * 4);
    for s in 0..=steps {
        let margin = from + (to - from) * s as f64 / steps as f64;
        let mut scores = vec![0.0; labels];
        scores[0] = margin;
        let scores = ScoreVector::new(scores).map_err(|e| e.to_string())?;
        out.push(margin);
        for spec in &specs {
            out.push(evaluate(spec, &scores, 0).map_err(|e| e.to_string())?.value);
        }
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn alpha_threshold(q: &[f64]) -> Result<Threshold, JsValue> {
    threshold_of(q).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn simplex_risk(alpha: f64, q: &[f64], resolution: usize) -> Result<Vec<f64>, JsValue> {
    risk_grid(alpha, q, resolution).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn simplex_minimizer(alpha: f64, q: &[f64], resolution: usize) -> Result<Vec<f64>, JsValue> {
    minimizer_of(alpha, q, resolution).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn loss_curves(alpha: f64, labels: usize, from: f64, to: f64, steps: usize) -> Result<Vec<f64>, JsValue> {
    curves(alpha, labels, from, to, steps).map_err(|e| JsValue::from_str(&e))
}
