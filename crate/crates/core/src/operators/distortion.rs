use crate::error::{Error, Result};
use crate::grid::StepFunction;

/// `H(f) = sup f / inf f` over the support of a nonnegative `f`.
pub fn distortion(f: &StepFunction<f64>) -> Result<f64> {
    if let Some(v) = f.values().iter().find(|v| **v < 0.0 || v.is_nan()) {
        return Err(Error::Precondition(format!(
            "distortion needs f ≥ 0, found {v}"
        )));
    }
    let pos = f.values().iter().copied().filter(|v| *v > 0.0);
    let (lo, hi) = pos.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if hi == 0.0 {
        return Err(Error::Degenerate("distortion of the zero function".into()));
    }
    Ok(hi / lo)
}

/// Iterates `h ↦ max(κ √h, h / κ)` for `steps` steps, returning `h_0, …, h_steps`.
pub fn distortion_recurrence(h0: f64, kappa: f64, steps: usize) -> Result<Vec<f64>> {
    if !(h0 >= 1.0) || !(kappa > 1.0) {
        return Err(Error::Precondition(format!(
            "need h0 ≥ 1 and κ > 1, got h0 = {h0}, κ = {kappa}"
        )));
    }
    let mut out = Vec::with_capacity(steps + 1);
    let mut h = h0;
    out.push(h);
    for _ in 0..steps {
        h = (kappa * h.sqrt()).max(h / kappa);
        out.push(h);
    }
    Ok(out)
}

/// Largest of the last `tail` iterates.
pub fn recurrence_tail_max(seq: &[f64], tail: usize) -> f64 {
    seq.iter()
        .rev()
        .take(tail.max(1))
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}
