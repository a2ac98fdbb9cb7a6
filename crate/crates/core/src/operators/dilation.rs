use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::linear::LinearMap;
use super::opnorm::{operator_norm, NormMethod, NormOptions};
use crate::error::{Error, Result};
use crate::norms::NormSpec;
use crate::scalar::{rational_to_f64, Rational};

/// `k` with `s = 2^k`, or an error for other scales.
pub fn scale_exponent(s: &Rational) -> Result<i32> {
    if !s.is_positive() {
        return Err(Error::InvalidArgument(format!(
            "dilation scale {s} must be positive"
        )));
    }
    let power = |n: &BigInt| n.is_positive() && (n & (n - BigInt::one())).is_zero();
    let (num, den) = (s.numer(), s.denom());
    if power(num) && den.is_one() {
        return Ok(num.bits() as i32 - 1);
    }
    if num.is_one() && power(den) {
        return Ok(-(den.bits() as i32 - 1));
    }
    Err(Error::NonDyadic(format!(
        "dilation scale {s} is not a power of two"
    )))
}

/// The matrix of `D_s f(t) = f(t/s)` (with `f = 0` beyond 1) on level-`level`
/// step functions. Stretches keep the level; a compression by `2^-m` lands
/// on level `level + m`.
pub fn dilation_operator(s: &Rational, level: u32) -> Result<LinearMap> {
    let k = scale_exponent(s)?;
    let n = 1usize << level;
    if k >= 0 {
        // output cell i reads input cell i >> k
        let mut cols = vec![Vec::new(); n];
        for i in 0..n {
            let j = if k as u32 >= usize::BITS { 0 } else { i >> k };
            cols[j].push((i, 1.0));
        }
        LinearMap::new(level, level, cols)
    } else {
        let m = (-k) as u32;
        LinearMap::new(level, level + m, (0..n).map(|j| vec![(j, 1.0)]).collect())
    }
}

#[derive(Debug, Clone)]
pub struct BoydEstimate {
    /// Estimate of `p_X` from the slope over scales `s ≥ 2`.
    pub lower_index: f64,
    /// Estimate of `q_X` from the slope over scales `s ≤ 1/2`.
    pub upper_index: f64,
    pub slope_large: f64,
    pub slope_small: f64,
    /// `(s, ‖D_s‖)` for every scale used.
    pub norms: Vec<(f64, f64)>,
}

fn ls_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn reciprocal(slope: f64) -> f64 {
    if slope.abs() < 1e-9 {
        f64::INFINITY
    } else {
        1.0 / slope
    }
}

/// Least-squares slopes of `log ‖D_s‖` against `log s` on each side of 1.
pub fn boyd_indices_estimate(
    spec: &NormSpec,
    scales: &[Rational],
    level: u32,
    tol: f64,
) -> Result<BoydEstimate> {
    let two = Rational::from_integer(2.into());
    let half = two.recip();
    let large: Vec<&Rational> = scales.iter().filter(|s| **s >= two).collect();
    let small: Vec<&Rational> = scales.iter().filter(|s| **s <= half).collect();
    if large.len() < 3 || small.len() < 3 {
        return Err(Error::Degenerate(format!(
            "need at least 3 scales on each side of 1, got {} above and {} below",
            large.len(),
            small.len()
        )));
    }
    let opts = NormOptions {
        tol: tol.min(1e-10),
        ..NormOptions::default()
    };
    let mut norms = Vec::new();
    let mut side = |list: &[&Rational]| -> Result<Vec<(f64, f64)>> {
        let mut pts = Vec::new();
        for s in list {
            let d = dilation_operator(s, level)?;
            let r = operator_norm(spec, spec, &d, NormMethod::Auto, &opts)?;
            let sf = rational_to_f64(s);
            norms.push((sf, r.lower));
            pts.push((sf.ln(), r.lower.ln()));
        }
        Ok(pts)
    };
    let slope_large = ls_slope(&side(&large)?);
    let slope_small = ls_slope(&side(&small)?);
    Ok(BoydEstimate {
        lower_index: reciprocal(slope_large),
        upper_index: reciprocal(slope_small),
        slope_large,
        slope_small,
        norms,
    })
}

/// `{2^±1, …, 2^±k}`.
pub fn symmetric_scales(k: u32) -> Vec<Rational> {
    (1..=k)
        .flat_map(|i| {
            let p = Rational::from_integer(BigInt::one() << i as usize);
            [p.clone(), p.recip()]
        })
        .collect()
}
