use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::defect::{flinn_defect, DefectOptions};
use crate::error::{Error, Result};
use crate::grid::StepFunction;
use crate::norms::{eval_norm, NormSpec};

#[derive(Debug, Clone)]
pub struct WeightOptions {
    /// Largest Flinn defect accepted for `u`.
    pub tol: f64,
    /// Random triples `(v, x, y)` for the off-support check.
    pub triples: usize,
    pub seed: u64,
}

impl Default for WeightOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            triples: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WeightRecovery {
    /// Fitted weight, zero off the support of `u`.
    pub weight: StepFunction<f64>,
    /// Largest `|‖x‖² − ∫ x² w|` over the sample.
    pub residual: f64,
    /// Largest `|‖v + x‖ − ‖v + y‖|` over triples with `‖x‖ = ‖y‖` and `v`
    /// off the support; `None` when `u` has full support.
    pub off_support: Option<f64>,
}

/// Random step functions supported on `supp u`, at the level of `u`.
pub fn support_samples(u: &StepFunction<f64>, count: usize, seed: u64) -> Vec<StepFunction<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let v = u
                .values()
                .iter()
                .map(|&ui| {
                    if ui != 0.0 {
                        rng.gen_range(-1.0..1.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            StepFunction::new(u.level(), v).expect("level of u")
        })
        .collect()
}

/// Fits `‖x‖² = ∫ x² w` on the support of a Flinn element `u` by least squares.
pub fn recover_theorem_4_3_weight(
    spec: &NormSpec,
    u: &StepFunction<f64>,
    samples: &[StepFunction<f64>],
    opts: &WeightOptions,
) -> Result<WeightRecovery> {
    let level = u.level().max(spec.base_level());
    let u = u.refine(level)?;
    let d = flinn_defect(
        spec,
        &u,
        level,
        &DefectOptions {
            seed: opts.seed,
            ..DefectOptions::default()
        },
    )?;
    if d.defect > opts.tol {
        return Err(Error::Precondition(format!(
            "Flinn defect {} exceeds {}",
            d.defect, opts.tol
        )));
    }
    let support: Vec<usize> = (0..u.len()).filter(|&i| u.values()[i] != 0.0).collect();
    if samples.len() < support.len() {
        return Err(Error::InvalidArgument(format!(
            "{} samples cannot determine {} weights",
            samples.len(),
            support.len()
        )));
    }
    let ell = 1.0 / u.len() as f64;
    let xs = samples
        .iter()
        .map(|x| x.refine(level.max(x.level())))
        .collect::<Result<Vec<_>>>()?;
    if xs.iter().any(|x| x.level() != level) {
        return Err(Error::Level {
            requested: level,
            actual: xs.iter().map(|x| x.level()).max().unwrap_or(level),
        });
    }
    if xs.iter().any(|x| {
        x.values()
            .iter()
            .zip(u.values())
            .any(|(xi, ui)| *ui == 0.0 && *xi != 0.0)
    }) {
        return Err(Error::Precondition("sample not supported on supp u".into()));
    }
    let a = DMatrix::from_fn(xs.len(), support.len(), |r, c| {
        let v = xs[r].values()[support[c]];
        v * v * ell
    });
    let b = DVector::from_iterator(
        xs.len(),
        xs.iter()
            .map(|x| eval_norm(spec, x).map(|n| n * n))
            .collect::<Result<Vec<_>>>()?,
    );
    let w = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::Degenerate(format!("least squares failed: {e}")))?;
    let residual = (&a * &w - &b).amax();
    let mut weight = vec![0.0; u.len()];
    for (k, &i) in support.iter().enumerate() {
        weight[i] = w[k];
    }
    Ok(WeightRecovery {
        weight: StepFunction::new(level, weight)?,
        residual,
        off_support: off_support_check(spec, &u, opts)?,
    })
}

fn off_support_check(
    spec: &NormSpec,
    u: &StepFunction<f64>,
    opts: &WeightOptions,
) -> Result<Option<f64>> {
    if u.values().iter().all(|&x| x != 0.0) {
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5bd1_e995);
    let mut worst = 0.0f64;
    for _ in 0..opts.triples {
        let mut draw = |on: bool| -> Vec<f64> {
            u.values()
                .iter()
                .map(|&ui| {
                    if (ui != 0.0) == on {
                        rng.gen_range(-1.0..1.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        };
        let v = StepFunction::new(u.level(), draw(false))?;
        let x = StepFunction::new(u.level(), draw(true))?;
        let y = StepFunction::new(u.level(), draw(true))?;
        let (nx, ny) = (eval_norm(spec, &x)?, eval_norm(spec, &y)?);
        if nx == 0.0 || ny == 0.0 {
            continue;
        }
        let y = y.scale(&(nx / ny));
        let gap = (eval_norm(spec, &v.add(&x))? - eval_norm(spec, &v.add(&y))?).abs();
        worst = worst.max(gap);
    }
    Ok(Some(worst))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_weight_is_one() {
        let l2 = NormSpec::lp(2.0).unwrap();
        let u = StepFunction::constant(2, 1.0);
        let r = recover_theorem_4_3_weight(
            &l2,
            &u,
            &support_samples(&u, 12, 1),
            &WeightOptions::default(),
        )
        .unwrap();
        assert!(r.residual < 1e-12);
        assert!(r.weight.values().iter().all(|w| (w - 1.0).abs() < 1e-10));
        assert!(r.off_support.is_none());
    }

    #[test]
    fn l2_half_interval() {
        let l2 = NormSpec::lp(2.0).unwrap();
        let u = StepFunction::new(2, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let r = recover_theorem_4_3_weight(
            &l2,
            &u,
            &support_samples(&u, 8, 2),
            &WeightOptions::default(),
        )
        .unwrap();
        assert!(r.residual <= 1e-10);
        assert_eq!(r.weight.values()[2..], [0.0, 0.0]);
        assert!(r.weight.values()[..2]
            .iter()
            .all(|w| (w - 1.0).abs() < 1e-10));
        assert!(r.off_support.unwrap() <= 1e-10);
    }

    #[test]
    fn non_flinn_element_is_rejected() {
        let l1 = NormSpec::lp(1.0).unwrap();
        let u = StepFunction::constant(2, 1.0);
        let e = recover_theorem_4_3_weight(
            &l1,
            &u,
            &support_samples(&u, 8, 0),
            &WeightOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(e, Error::Precondition(_)));
    }
}
