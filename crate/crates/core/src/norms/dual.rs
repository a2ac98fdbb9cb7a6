//! Köthe dual norms `‖g‖_X' = sup_{‖f‖_X ≤ 1} ∫ f g dλ`.
//!
//! The supremum is attained at an `f` sharing the sign pattern and ordering
//! of `g`, so everything reduces to nonincreasing nonnegative `f` against
//! `g*`. Closed forms exist for all three families; the projected-ascent
//! solver is an independent route used as a cross-check and for bounds.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::eval::{lorentz_weight, norm_of_values, norm_subgradient};
use super::spec::NormSpec;
use crate::error::{Error, Result};
use crate::grid::StepFunction;

/// Exact dual norm.
pub fn dual_norm(spec: &NormSpec, g: &StepFunction<f64>) -> Result<f64> {
    let level = g.level().max(spec.base_level());
    let g = g.refine(level)?;
    let v = g.values();
    let n = v.len();
    let cell = 1.0 / n as f64;
    match spec {
        NormSpec::Lp { p } => {
            let q = if *p == 1.0 {
                f64::INFINITY
            } else if p.is_infinite() {
                1.0
            } else {
                p / (p - 1.0)
            };
            norm_of_values(&NormSpec::Lp { p: q }, level, v)
        }
        NormSpec::Lorentz {
            level: base,
            weights,
        } => {
            // extreme rays of the cone of decreasing f are initial-segment indicators
            let mut a: Vec<f64> = v.iter().map(|x| x.abs()).collect();
            a.sort_by(|x, y| y.partial_cmp(x).unwrap_or(Ordering::Equal));
            let (mut num, mut den, mut best) = (0.0, 0.0, 0.0f64);
            for (i, x) in a.iter().enumerate() {
                num += x * cell;
                den += lorentz_weight(weights, *base, level, i);
                best = best.max(num / den);
            }
            Ok(best)
        }
        NormSpec::Orlicz(young) => {
            // Amemiya: inf_k (1 + ∫ψ(k|g|))/k, attained at a breakpoint of the
            // piecewise-linear map k ↦ ∫ψ(k|g|) or at the edge of its domain.
            let sup = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if sup == 0.0 {
                return Ok(0.0);
            }
            let k_max = young.max_slope() / sup;
            let h = |k: f64| {
                let s: f64 = v
                    .iter()
                    .map(|x| young.complementary(k * x.abs()))
                    .sum::<f64>()
                    * cell;
                (1.0 + s) / k
            };
            let mut best = h(k_max);
            for x in v.iter().filter(|x| **x != 0.0) {
                for s in young.slopes() {
                    let k = s / x.abs();
                    if k > 0.0 && k <= k_max {
                        best = best.min(h(k));
                    }
                }
            }
            Ok(best)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AscentOptions {
    pub starts: usize,
    pub steps: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            starts: 16,
            steps: 500,
            tol: 1e-10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DualAscent {
    /// `∫ f g` for the witness; a lower bound on the dual norm.
    pub value: f64,
    /// Unit-norm maximizer, arranged like `g`.
    pub witness: StepFunction<f64>,
    pub converged: bool,
}

/// Projection onto nonincreasing nonnegative vectors (pool adjacent violators).
pub(crate) fn project_decreasing(v: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(v.len());
    for &x in v {
        blocks.push((x, 1));
        while blocks.len() > 1 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a >= b {
                break;
            }
            blocks.pop();
            let merged = (a * na as f64 + b * nb as f64) / (na + nb) as f64;
            *blocks.last_mut().unwrap() = (merged, na + nb);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(x, n)| std::iter::repeat_n(x.max(0.0), n))
        .collect()
}

/// Lower bound on the dual norm by normalize-project ascent with multistart.
pub fn dual_norm_ascent(
    spec: &NormSpec,
    g: &StepFunction<f64>,
    opts: &AscentOptions,
) -> Result<DualAscent> {
    let level = g.level().max(spec.base_level());
    let g = g.refine(level)?;
    let n = g.len();
    let cell = 1.0 / n as f64;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        g.values()[b]
            .abs()
            .partial_cmp(&g.values()[a].abs())
            .unwrap_or(Ordering::Equal)
    });
    let gs: Vec<f64> = order.iter().map(|&i| g.values()[i].abs()).collect();
    if gs[0] == 0.0 {
        return Ok(DualAscent {
            value: 0.0,
            witness: StepFunction::zero(level),
            converged: true,
        });
    }

    let mut starts: Vec<Vec<f64>> = vec![gs.clone()];
    let mut k = 1;
    while k <= n && starts.len() < opts.starts {
        starts.push((0..n).map(|i| if i < k { 1.0 } else { 0.0 }).collect());
        k *= 2;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    while starts.len() < opts.starts {
        let mut r: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        r.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
        starts.push(r);
    }

    let ratio = |f: &[f64]| -> Result<f64> {
        let nf = norm_of_values(spec, level, f)?;
        Ok(if nf > 0.0 {
            f.iter().zip(&gs).map(|(a, b)| a * b).sum::<f64>() * cell / nf
        } else {
            0.0
        })
    };
    let normalize = |f: Vec<f64>| -> Result<Vec<f64>> {
        let nf = norm_of_values(spec, level, &f)?;
        Ok(if nf > 0.0 {
            f.into_iter().map(|x| x / nf).collect()
        } else {
            f
        })
    };

    let mut best = (0.0f64, vec![0.0; n]);
    let mut all_converged = true;
    for start in starts {
        let mut f = normalize(project_decreasing(&start))?;
        let mut r = ratio(&f)?;
        let mut eta = 1.0;
        let mut converged = false;
        for _ in 0..opts.steps {
            let sub = norm_subgradient(spec, level, &f)?;
            let grad: Vec<f64> = gs
                .iter()
                .zip(&sub)
                .map(|(gi, si)| gi * cell - r * si)
                .collect();
            let step: Vec<f64> = f.iter().zip(&grad).map(|(x, d)| x + eta * d).collect();
            let cand = normalize(project_decreasing(&step))?;
            let rc = ratio(&cand)?;
            if rc > r {
                let rel = (rc - r) / rc.abs().max(1e-300);
                f = cand;
                r = rc;
                eta *= 2.0;
                if rel < opts.tol {
                    converged = true;
                    break;
                }
            } else {
                eta *= 0.5;
                if eta < 1e-14 {
                    converged = true;
                    break;
                }
            }
        }
        all_converged &= converged;
        if r > best.0 {
            best = (r, f);
        }
    }
    let mut witness = vec![0.0; n];
    for (rank, &i) in order.iter().enumerate() {
        witness[i] = best.1[rank] * g.values()[i].signum();
    }
    Ok(DualAscent {
        value: best.0,
        witness: StepFunction::new(level, witness)?,
        converged: all_converged,
    })
}

#[derive(Debug, Clone)]
pub struct DualBounds {
    pub lower: f64,
    pub upper: f64,
    pub witness: StepFunction<f64>,
}

/// Bound pair from the ascent (lower) and the closed form (upper).
/// Fails when the two routes do not meet within `tol`.
pub fn dual_norm_bounds(spec: &NormSpec, g: &StepFunction<f64>, tol: f64) -> Result<DualBounds> {
    if tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance {tol} must be positive"
        )));
    }
    let opts = AscentOptions::default();
    let ascent = dual_norm_ascent(spec, g, &opts)?;
    let upper = dual_norm(spec, g)?;
    if upper - ascent.value > tol {
        return Err(Error::NoConvergence {
            iterations: opts.steps,
            lower: ascent.value,
            upper,
        });
    }
    Ok(DualBounds {
        lower: ascent.value,
        upper,
        witness: ascent.witness,
    })
}
