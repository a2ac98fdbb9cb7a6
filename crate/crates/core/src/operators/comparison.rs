use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::elementary::ElementaryOperator;
use super::linear::LinearMap;
use super::opnorm::{operator_norm, NormMethod, NormOptions};
use crate::error::{Error, Result};
use crate::grid::{random_dyadic_map, DEFAULT_LEVEL_CAP};
use crate::norms::NormSpec;
use crate::scalar::{rational, rational_to_f64, Rational, Scalar};

/// A random elementary operator: a map from [`random_dyadic_map`] and
/// multipliers `±n/d` with `1 ≤ n, d ≤ 4`.
pub fn random_elementary(
    max_level: u32,
    splits: usize,
    seed: u64,
) -> Result<ElementaryOperator<Rational>> {
    let map = random_dyadic_map(max_level, splits, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mults = (0..map.pieces().len())
        .map(|_| {
            let q = rational(rng.gen_range(1..=4), rng.gen_range(1..=4));
            if rng.gen_bool(0.5) {
                -q
            } else {
                q
            }
        })
        .collect();
    ElementaryOperator::new(map, mults)
}

/// `‖T‖_{L_r} = max_i (|a_i|^r w_i)^{1/r}` for a weighted composition.
pub fn elementary_lp_norm<S: Scalar>(op: &ElementaryOperator<S>, r: f64) -> f64 {
    op.branches()
        .map(|(p, a)| {
            let a = a.to_f64().abs();
            if r.is_infinite() {
                a
            } else {
                a * rational_to_f64(&p.weight()).powf(1.0 / r)
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct NormComparison {
    pub norm_lr: f64,
    pub norm_x: f64,
    /// `norm_x` certified; `norm_lr` always is, by vertices or the closed form.
    pub certified: bool,
    pub holds: bool,
}

/// Checks `‖T‖_{L_r} ≤ ‖T‖_X + tol` on step functions at the operator's own level.
pub fn verify_prop_7_1<S: Scalar>(
    spec: &NormSpec,
    op: &ElementaryOperator<S>,
    r: f64,
    tol: f64,
) -> Result<NormComparison> {
    if !(r >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "exponent r = {r} must be at least 1"
        )));
    }
    let level = op
        .map()
        .dyadic_level()
        .ok_or_else(|| Error::NonDyadic("operator map has non-dyadic breakpoints".into()))?
        .max(spec.base_level());
    let a = LinearMap::from_elementary(op, level, DEFAULT_LEVEL_CAP)?;
    let opts = NormOptions::default();
    let lr = NormSpec::lp(r)?;
    let lr_norm = operator_norm(&lr, &lr, &a, NormMethod::Auto, &opts)?;
    // off the polytope cases the closed form is exact where the ascent is not
    let norm_lr = if lr_norm.certified {
        lr_norm.lower
    } else {
        elementary_lp_norm(op, r)
    };
    let x = operator_norm(spec, spec, &a, NormMethod::Auto, &opts)?;
    Ok(NormComparison {
        norm_lr,
        norm_x: x.lower,
        certified: x.certified,
        holds: norm_lr <= x.lower + tol,
    })
}
