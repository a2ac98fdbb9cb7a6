//! The inner maximization `f ↦ ‖I − f⊗u‖` on the level-`N` span.

use crate::error::Result;
use crate::norms::{norm_of_values, norm_subgradient, NormSpec};
use crate::operators::{ascent_runs, has_vertices, top_vertices, LinearMap, NormOptions};

/// How many of the largest inner ratios feed cutting planes.
pub(crate) const KEEP_WITNESSES: usize = 64;

#[derive(Debug, Clone)]
pub(crate) struct OracleEval {
    pub value: f64,
    /// `value` is the exact norm, not a lower bound.
    pub exact: bool,
    /// Unit-norm inputs, largest ratio first.
    pub witnesses: Vec<Vec<f64>>,
}

/// `I − f⊗u` in the cell basis: `x ↦ x − ℓ (f·x) u`.
pub(crate) fn complement_matrix(level: u32, u: &[f64], f: &[f64]) -> LinearMap {
    let ell = 1.0 / u.len() as f64;
    let cols = (0..u.len())
        .map(|j| {
            (0..u.len())
                .map(|i| (i, if i == j { 1.0 } else { 0.0 } - ell * f[j] * u[i]))
                .filter(|e| e.1 != 0.0)
                .collect()
        })
        .collect();
    LinearMap::new(level, level, cols).expect("square map")
}

pub(crate) fn is_hilbert(spec: &NormSpec) -> bool {
    spec.is_lp(2.0)
}

pub(crate) fn evaluate(
    spec: &NormSpec,
    level: u32,
    u: &[f64],
    f: &[f64],
    seed: u64,
) -> Result<OracleEval> {
    let n = u.len();
    if n == 1 {
        // the projection is the identity
        return Ok(OracleEval {
            value: 0.0,
            exact: true,
            witnesses: Vec::new(),
        });
    }
    let a = complement_matrix(level, u, f);
    if has_vertices(spec, n) {
        let top = top_vertices(spec, spec, &a, KEEP_WITNESSES)?;
        let value = top[0].0;
        return Ok(OracleEval {
            value,
            exact: true,
            witnesses: top.into_iter().map(|t| t.1).collect(),
        });
    }
    let opts = NormOptions {
        seed,
        ..NormOptions::default()
    };
    let mut runs = ascent_runs(spec, spec, &a, &opts)?;
    runs.sort_by(|p, q| q.0.total_cmp(&p.0));
    runs.truncate(KEEP_WITNESSES);
    let lower = runs[0].0;
    let witnesses = runs.into_iter().map(|r| r.1).collect();
    if is_hilbert(spec) {
        // a rank-one idempotent on a Hilbert space has ‖I − P‖ = ‖P‖ = ‖u‖‖f‖
        let value = norm_of_values(spec, level, u)? * norm_of_values(spec, level, f)?;
        return Ok(OracleEval {
            value: value.max(lower),
            exact: true,
            witnesses,
        });
    }
    Ok(OracleEval {
        value: lower,
        exact: false,
        witnesses,
    })
}

/// A valid minorant `φ(f') ≥ α − ℓβ (f'·x)` from a unit input `x`, with
/// `β` and `α` taken from a norming functional of `(I − f⊗u)x`.
pub(crate) fn cut(
    spec: &NormSpec,
    level: u32,
    u: &[f64],
    f: &[f64],
    x: &[f64],
) -> Result<(f64, f64)> {
    let ell = 1.0 / u.len() as f64;
    let fx: f64 = f.iter().zip(x).map(|(a, b)| a * b).sum();
    let z: Vec<f64> = x.iter().zip(u).map(|(xi, ui)| xi - ell * fx * ui).collect();
    let g = norm_subgradient(spec, level, &z)?;
    let alpha: f64 = g.iter().zip(x).map(|(a, b)| a * b).sum();
    let beta: f64 = g.iter().zip(u).map(|(a, b)| a * b).sum();
    Ok((alpha, beta))
}
