use std::cmp::Ordering;

use super::spec::{NormSpec, YoungFunction};
use crate::error::{Error, Result};
use crate::grid::StepFunction;
use crate::scalar::Scalar;

const LUXEMBURG_TOL: f64 = 1e-12;
const LUXEMBURG_MAX_ITER: usize = 200;

fn desc(a: &f64, b: &f64) -> Ordering {
    b.partial_cmp(a).unwrap_or(Ordering::Equal)
}

/// Lorentz weight of rank `i` (zero-based) at level `level ≥ base`.
pub(crate) fn lorentz_weight(weights: &[f64], base: u32, level: u32, i: usize) -> f64 {
    let shift = level - base;
    weights[i >> shift] / (1u64 << shift) as f64
}

/// The norm of the level-`level` step function with cell values `v`.
pub fn norm_of_values(spec: &NormSpec, level: u32, v: &[f64]) -> Result<f64> {
    let cell = 1.0 / v.len() as f64;
    match spec {
        NormSpec::Lp { p } => Ok(lp_norm(*p, cell, v)),
        NormSpec::Lorentz {
            level: base,
            weights,
        } => {
            if level < *base {
                let f = StepFunction::new(level, v.to_vec())?.refine(*base)?;
                return norm_of_values(spec, *base, f.values());
            }
            let mut a: Vec<f64> = v.iter().map(|x| x.abs()).collect();
            a.sort_by(desc);
            Ok(a.iter()
                .enumerate()
                .map(|(i, x)| x * lorentz_weight(weights, *base, level, i))
                .sum())
        }
        NormSpec::Orlicz(young) => luxemburg(young, cell, v),
    }
}

fn lp_norm(p: f64, cell: f64, v: &[f64]) -> f64 {
    let m = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if p.is_infinite() || m == 0.0 {
        return m;
    }
    if p == 1.0 {
        return v.iter().map(|x| x.abs()).sum::<f64>() * cell;
    }
    if p == 2.0 {
        return (v.iter().map(|x| x * x).sum::<f64>() * cell).sqrt();
    }
    let s: f64 = v.iter().map(|x| (x.abs() / m).powf(p)).sum::<f64>() * cell;
    m * s.powf(1.0 / p)
}

/// `Σ ℓ_i φ(|v_i| μ)` — piecewise linear, convex and increasing in `μ = 1/λ`.
fn modular(young: &YoungFunction, parts: &[(f64, f64)], mu: f64) -> f64 {
    parts
        .iter()
        .map(|(x, len)| young.value(x.abs() * mu) * len)
        .sum()
}

fn luxemburg(young: &YoungFunction, cell: f64, v: &[f64]) -> Result<f64> {
    let parts: Vec<(f64, f64)> = v.iter().map(|x| (*x, cell)).collect();
    luxemburg_parts(young, &parts)
}

fn luxemburg_parts(young: &YoungFunction, parts: &[(f64, f64)]) -> Result<f64> {
    let sup = parts
        .iter()
        .filter(|p| p.1 > 0.0)
        .fold(0.0f64, |acc, p| acc.max(p.0.abs()));
    if sup == 0.0 {
        return Ok(0.0);
    }
    let l1: f64 = parts.iter().map(|(x, len)| x.abs() * len).sum();
    let u = young.upper();
    let (mut lo, mut hi) = (l1 / u, sup * u);
    let f = |lambda: f64| modular(young, parts, 1.0 / lambda);
    if f(lo) < 1.0 - 1e-12 || f(hi) > 1.0 + 1e-12 {
        return Err(Error::Bracket(format!(
            "modular at [{lo}, {hi}] is [{}, {}], expected to straddle 1",
            f(lo),
            f(hi)
        )));
    }
    for _ in 0..LUXEMBURG_MAX_ITER {
        if hi - lo <= LUXEMBURG_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // The modular is linear in μ between its breakpoints: one secant step on
    // the final bracket lands on the root when both ends share a segment.
    let (m_hi, m_lo) = (1.0 / lo, 1.0 / hi);
    let (g_hi, g_lo) = (modular(young, parts, m_hi), modular(young, parts, m_lo));
    if g_hi > g_lo {
        let mu = m_lo + (1.0 - g_lo) * (m_hi - m_lo) / (g_hi - g_lo);
        if (m_lo..=m_hi).contains(&mu) {
            let candidate = 1.0 / mu;
            if (modular(young, parts, mu) - 1.0).abs() <= (f(hi) - 1.0).abs() {
                return Ok(candidate);
            }
        }
    }
    Ok(hi)
}

/// The norm of any simple function, given as `(value, length)` pairs whose
/// lengths sum to 1. Only the distribution matters, so the pieces need not
/// be dyadic cells.
pub fn norm_of_distribution(spec: &NormSpec, parts: &[(f64, f64)]) -> Result<f64> {
    match spec {
        NormSpec::Lp { p } if p.is_infinite() => Ok(parts
            .iter()
            .filter(|q| q.1 > 0.0)
            .fold(0.0f64, |m, q| m.max(q.0.abs()))),
        NormSpec::Lp { p } => {
            let m = parts
                .iter()
                .filter(|q| q.1 > 0.0)
                .fold(0.0f64, |m, q| m.max(q.0.abs()));
            if m == 0.0 {
                return Ok(0.0);
            }
            let s: f64 = parts
                .iter()
                .map(|(x, len)| (x.abs() / m).powf(*p) * len)
                .sum();
            Ok(m * s.powf(1.0 / p))
        }
        NormSpec::Lorentz {
            level: base,
            weights,
        } => {
            // ∫ f* against the step density that is 2^base · W_k on the k-th cell
            let mut a: Vec<(f64, f64)> = parts.iter().map(|(x, len)| (x.abs(), *len)).collect();
            a.sort_by(|p, q| desc(&p.0, &q.0));
            let cell = 1.0 / (1u64 << base) as f64;
            let mut total = 0.0;
            let mut t = 0.0;
            for (x, len) in a {
                let end = t + len;
                let mut lo = t;
                while lo < end {
                    let k = ((lo / cell).floor() as usize).min(weights.len() - 1);
                    let hi = (((k + 1) as f64) * cell).min(end);
                    let hi = if hi <= lo { end } else { hi };
                    total += x * (hi - lo) * weights[k] / cell;
                    lo = hi;
                }
                t = end;
            }
            Ok(total)
        }
        NormSpec::Orlicz(young) => luxemburg_parts(young, parts),
    }
}

/// `‖f‖_X`.
pub fn eval_norm(spec: &NormSpec, f: &StepFunction<f64>) -> Result<f64> {
    norm_of_values(spec, f.level(), f.values())
}

/// A subgradient of the norm at `v`, in coefficient space: entry `i` is
/// `∂‖v‖/∂v_i`. As a function, the norming functional is `g_i / ℓ`.
pub fn norm_subgradient(spec: &NormSpec, level: u32, v: &[f64]) -> Result<Vec<f64>> {
    let n = v.len();
    let cell = 1.0 / n as f64;
    let sgn = |x: f64| {
        if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        }
    };
    match spec {
        NormSpec::Lp { p } => {
            let norm = lp_norm(*p, cell, v);
            if norm == 0.0 {
                return Ok(vec![0.0; n]);
            }
            if p.is_infinite() {
                let (imax, _) = v.iter().enumerate().fold((0, -1.0), |acc, (i, x)| {
                    if x.abs() > acc.1 {
                        (i, x.abs())
                    } else {
                        acc
                    }
                });
                let mut g = vec![0.0; n];
                g[imax] = sgn(v[imax]);
                return Ok(g);
            }
            if *p == 1.0 {
                return Ok(v.iter().map(|x| sgn(*x) * cell).collect());
            }
            Ok(v.iter()
                .map(|x| sgn(*x) * cell * (x.abs() / norm).powf(p - 1.0))
                .collect())
        }
        NormSpec::Lorentz {
            level: base,
            weights,
        } => {
            if level < *base {
                // chain rule through replication
                let rep = 1usize << (base - level);
                let fine = StepFunction::new(level, v.to_vec())?.refine(*base)?;
                let g = norm_subgradient(spec, *base, fine.values())?;
                return Ok(g.chunks(rep).map(|c| c.iter().sum()).collect());
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| desc(&v[a].abs(), &v[b].abs()));
            let mut g = vec![0.0; n];
            for (rank, &i) in order.iter().enumerate() {
                g[i] = sgn(v[i]) * lorentz_weight(weights, *base, level, rank);
            }
            Ok(g)
        }
        NormSpec::Orlicz(young) => {
            let lambda = luxemburg(young, cell, v)?;
            if lambda == 0.0 {
                return Ok(vec![0.0; n]);
            }
            let denom: f64 = v
                .iter()
                .map(|x| young.derivative(x.abs() / lambda) * x.abs() / lambda)
                .sum::<f64>()
                * cell;
            Ok(v.iter()
                .map(|x| sgn(*x) * cell * young.derivative(x.abs() / lambda) / denom)
                .collect())
        }
    }
}

/// `|f|` sorted into nonincreasing order on the same grid.
pub fn decreasing_rearrangement<S: Scalar>(f: &StepFunction<S>) -> StepFunction<S> {
    let mut v: Vec<S> = f.values().iter().map(|x| x.abs()).collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    StepFunction::new(f.level(), v).expect("same length")
}
