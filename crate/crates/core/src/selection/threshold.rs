use serde::{Deserialize, Serialize};

/// Outcome of the knockoff filter at level `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Ascending feature indices with w_i ≥ threshold.
    pub selected: Vec<usize>,
    /// `None` when no candidate threshold qualifies.
    pub threshold: Option<f64>,
    pub q: f64,
    pub plus: bool,
}

/// Knockoff (offset 0) or knockoff+ (offset 1) threshold:
/// the smallest t among the nonzero |w_i| with
/// (offset + #{w_i ≤ −t}) / max(1, #{w_i ≥ t}) ≤ q.
pub fn knockoff_threshold(w: &[f64], q: f64, plus: bool) -> SelectionResult {
    let offset = if plus { 1.0 } else { 0.0 };
    let mut candidates: Vec<f64> = w.iter().map(|v| v.abs()).filter(|&v| v > 0.0).collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let threshold = candidates.into_iter().find(|&t| {
        let neg = w.iter().filter(|&&v| v <= -t).count() as f64;
        let pos = w.iter().filter(|&&v| v >= t).count() as f64;
        (offset + neg) / pos.max(1.0) <= q
    });
    let selected = match threshold {
        Some(t) => (0..w.len()).filter(|&i| w[i] >= t).collect(),
        None => vec![],
    };
    SelectionResult {
        selected,
        threshold,
        q,
        plus,
    }
}

/// (false discovery proportion, power) of a selection against the true support.
pub fn fdr_power(selected: &[usize], support: &[usize]) -> (f64, f64) {
    let hits = selected.iter().filter(|i| support.contains(i)).count() as f64;
    let fdp = (selected.len() as f64 - hits) / (selected.len().max(1)) as f64;
    let power = if support.is_empty() { 0.0 } else { hits / support.len() as f64 };
    (fdp, power)
}
