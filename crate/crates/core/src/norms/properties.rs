use super::dual::dual_norm;
use super::eval::eval_norm;
use super::spec::NormSpec;
use crate::error::{Error, Result};
use crate::grid::{dyadic_level, StepFunction, DEFAULT_LEVEL_CAP};
use crate::scalar::{Rational, Scalar};

/// Averaging projection onto level-`n` step functions.
pub fn conditional_expectation<S: Scalar>(f: &StepFunction<S>, n: u32) -> Result<StepFunction<S>> {
    f.average_to(n)
}

/// `t ↦ ‖e¹₁ + t e¹₂‖ − ‖e¹₁‖` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub holds: bool,
    pub worst_t: f64,
    pub worst_margin: f64,
    pub margins: Vec<(f64, f64)>,
}

/// `{2^-k : 0 ≤ k ≤ 10} ∪ {1.5, 2, 4}`.
pub fn default_t_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=10).map(|k| 0.5f64.powi(k)).collect();
    grid.extend([1.5, 2.0, 4.0]);
    grid
}

pub const DEFAULT_MARGIN_TOL: f64 = 1e-10;

fn check_with(
    t_grid: &[f64],
    margin_tol: f64,
    norm: impl Fn(&StepFunction<f64>) -> Result<f64>,
) -> Result<PropertyCheck> {
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidArgument(
            "t grid must be nonempty and positive".into(),
        ));
    }
    let base = norm(&StepFunction::from_values(vec![1.0, 0.0])?)?;
    let mut margins = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let m = norm(&StepFunction::from_values(vec![1.0, t])?)? - base;
        margins.push((t, m));
    }
    // first grid point attaining the smallest margin
    let (worst_t, worst_margin) =
        margins
            .iter()
            .copied()
            .fold((f64::NAN, f64::INFINITY), |acc, (t, m)| {
                if m < acc.1 {
                    (t, m)
                } else {
                    acc
                }
            });
    Ok(PropertyCheck {
        holds: worst_margin > margin_tol,
        worst_t,
        worst_margin,
        margins,
    })
}

/// Property (P): `‖e¹₁‖ < ‖e¹₁ + t e¹₂‖` for every `t` in the grid.
pub fn check_property_p(spec: &NormSpec, t_grid: &[f64], margin_tol: f64) -> Result<PropertyCheck> {
    check_with(t_grid, margin_tol, |f| eval_norm(spec, f))
}

/// Property (P'): property (P) of the Köthe dual.
pub fn check_property_p_prime(
    spec: &NormSpec,
    t_grid: &[f64],
    margin_tol: f64,
) -> Result<PropertyCheck> {
    check_with(t_grid, margin_tol, |f| dual_norm(spec, f))
}

/// `φ(t) = ‖χ_[0,t]‖` for dyadic `t ∈ (0, 1]`.
pub fn fundamental_function(spec: &NormSpec, t: &Rational) -> Result<f64> {
    let level = dyadic_level(t).ok_or_else(|| Error::NonDyadic(t.to_string()))?;
    if level > DEFAULT_LEVEL_CAP {
        return Err(Error::LevelCap {
            needed: level,
            cap: DEFAULT_LEVEL_CAP,
        });
    }
    let zero = Rational::from_integer(0.into());
    if *t <= zero || *t > Rational::from_integer(1.into()) {
        return Err(Error::InvalidArgument(format!("t = {t} outside (0, 1]")));
    }
    let n = 1usize << level;
    let k = (t * Rational::from_integer((n as u64).into())).to_integer();
    let k: usize = k
        .try_into()
        .map_err(|_| Error::InvalidArgument(t.to_string()))?;
    let values = (0..n).map(|i| if i < k { 1.0 } else { 0.0 }).collect();
    eval_norm(spec, &StepFunction::new(level, values)?)
}
