use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::elementary::ElementaryOperator;
use crate::error::{Error, Result};
use crate::grid::{DyadicCell, Interval, MeasureMap, StepFunction, DEFAULT_LEVEL_CAP};
use crate::norms::{eval_norm, norm_of_distribution, NormSpec};
use crate::scalar::{pow_signed, rational_to_f64, Rational, Scalar};

/// Floating tolerance for the Lamperti condition when exact arithmetic is unavailable.
pub const LAMPERTI_FLOAT_TOL: f64 = 1e-12;

/// A test function, with the norms that refute isometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsometryWitness {
    pub level: u32,
    pub values: Vec<f64>,
    pub norm_f: f64,
    pub norm_tf: f64,
}

impl IsometryWitness {
    pub fn discrepancy(&self) -> f64 {
        (self.norm_tf - self.norm_f).abs()
    }

    pub fn function(&self) -> Result<StepFunction<f64>> {
        StepFunction::new(self.level, self.values.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IsometryCertificate {
    /// Proven by the pointwise criterion; `exact` when checked in rational arithmetic.
    Isometry { exact: bool },
    /// Refuted. `witness` is present whenever the refuting function and its
    /// image are representable step functions.
    NotIsometry {
        witness: Option<IsometryWitness>,
        reason: String,
    },
    /// No sampled function refuted it.
    NotRefuted { samples: usize },
}

impl IsometryCertificate {
    /// `Some(true)` or `Some(false)` when certified either way.
    pub fn verdict(&self) -> Option<bool> {
        match self {
            Self::Isometry { .. } => Some(true),
            Self::NotIsometry { .. } => Some(false),
            Self::NotRefuted { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IsometryOptions {
    pub tol: f64,
    /// Finest level of sampled cell indicators; defaults to two levels past
    /// the map's own resolution, at most 10.
    pub probe_level: Option<u32>,
    pub random_samples: usize,
    pub seed: u64,
    pub cap: u32,
}

impl Default for IsometryOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            probe_level: None,
            random_samples: 64,
            seed: 0,
            cap: DEFAULT_LEVEL_CAP,
        }
    }
}

enum Lamperti {
    Holds { exact: bool },
    Fails { piece: usize, exact: bool },
}

/// `|a_i|^p w_i = 1` on every piece, exactly when `a` and `p` are rational.
fn lamperti_condition<S: Scalar>(
    p: f64,
    frac: Option<(i64, u64)>,
    op: &ElementaryOperator<S>,
) -> Lamperti {
    let mut all_exact = true;
    for (i, (piece, a)) in op.branches().enumerate() {
        let w = piece.weight();
        let exact = match (frac, a.to_rational()) {
            (Some((r, s)), Some(q)) => {
                Some(pow_signed(&q.abs(), r) * pow_signed(&w, s as i64) == Rational::one())
            }
            _ => None,
        };
        match exact {
            Some(true) => continue,
            Some(false) if S::is_exact() => {
                return Lamperti::Fails {
                    piece: i,
                    exact: true,
                }
            }
            _ => {}
        }
        // a rounded multiplier such as 2^(-1/2) misses exactly but passes at tolerance
        all_exact = false;
        if (a.to_f64().abs().powf(p) * rational_to_f64(&w) - 1.0).abs() > LAMPERTI_FLOAT_TOL {
            return Lamperti::Fails {
                piece: i,
                exact: false,
            };
        }
    }
    Lamperti::Holds { exact: all_exact }
}

/// The coarsest dyadic cell inside `iv`, leftmost among those.
fn cell_inside(iv: &Interval) -> DyadicCell {
    let mut level = 0;
    loop {
        let scale = Rational::from_integer(BigInt::one() << level as usize);
        let k = (iv.lo() * &scale).ceil().to_integer();
        let index = &k + 1u32;
        if Rational::from_integer(index.clone()) / &scale <= *iv.hi() {
            return DyadicCell::new(level, index.to_u64().expect("small index"))
                .expect("valid cell");
        }
        level += 1;
    }
}

/// `‖Tf‖_X` from the distribution of `Tf`.
pub fn image_norm<S: Scalar>(
    spec: &NormSpec,
    op: &ElementaryOperator<S>,
    f: &StepFunction<f64>,
) -> Result<f64> {
    let exact_f = f.map(|v| S::from_rational(&v.to_rational().expect("finite")));
    let parts: Vec<(f64, f64)> = op
        .image_distribution(&exact_f)
        .into_iter()
        .map(|(v, len)| (v.to_f64(), rational_to_f64(&len)))
        .collect();
    norm_of_distribution(spec, &parts)
}

fn witness_for<S: Scalar>(
    spec: &NormSpec,
    op: &ElementaryOperator<S>,
    f: &StepFunction<f64>,
) -> Option<IsometryWitness> {
    let norm_f = eval_norm(spec, f).ok()?;
    let norm_tf = image_norm(spec, op, f).ok()?;
    Some(IsometryWitness {
        level: f.level(),
        values: f.values().to_vec(),
        norm_f,
        norm_tf,
    })
}

/// Decides whether `T` is an isometry of `X`.
pub fn is_isometry<S: Scalar>(
    spec: &NormSpec,
    op: &ElementaryOperator<S>,
    opts: &IsometryOptions,
) -> IsometryCertificate {
    if let Some(p) = spec.lp_exponent() {
        if p.is_infinite() {
            return match op.multipliers().iter().position(|a| a.abs() != S::one()) {
                None => IsometryCertificate::Isometry { exact: true },
                Some(i) => refute_on_piece(spec, op, i, "|a| ≠ 1", opts),
            };
        }
        return match lamperti_condition(p, spec.exponent_fraction(), op) {
            Lamperti::Holds { exact } => IsometryCertificate::Isometry { exact },
            Lamperti::Fails { piece, exact } => {
                let how = if exact { "exactly" } else { "at tolerance" };
                refute_on_piece(spec, op, piece, &format!("|a|^p w ≠ 1 {how}"), opts)
            }
        };
    }
    sample(spec, op, opts)
}

fn refute_on_piece<S: Scalar>(
    spec: &NormSpec,
    op: &ElementaryOperator<S>,
    piece: usize,
    why: &str,
    opts: &IsometryOptions,
) -> IsometryCertificate {
    let tgt = &op.map().pieces()[piece].tgt;
    let f = StepFunction::indicator(&cell_inside(tgt));
    let witness = witness_for(spec, op, &f).filter(|w| w.discrepancy() > opts.tol);
    IsometryCertificate::NotIsometry {
        witness,
        reason: format!("{why} on piece {piece}"),
    }
}

fn sample<S: Scalar>(
    spec: &NormSpec,
    op: &ElementaryOperator<S>,
    opts: &IsometryOptions,
) -> IsometryCertificate {
    let own = op
        .map()
        .dyadic_level()
        .unwrap_or_else(|| op.map().resolution());
    let probe = opts.probe_level.unwrap_or((own + 2).min(10)).min(opts.cap);
    let mut samples = 0;
    let mut check = |f: &StepFunction<f64>| -> Option<IsometryWitness> {
        let w = witness_for(spec, op, f)?;
        samples += 1;
        (w.discrepancy() > opts.tol).then_some(w)
    };
    for level in 0..=probe {
        for k in 1..=1u64 << level {
            let f = StepFunction::indicator(&DyadicCell::new(level, k).expect("in range"));
            if let Some(w) = check(&f) {
                return IsometryCertificate::NotIsometry {
                    witness: Some(w),
                    reason: "cell indicator".into(),
                };
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_samples {
        let values = (0..1usize << probe)
            .map(|_| match rng.gen_range(0..3) {
                0 => 0.0,
                1 => 1.0,
                _ => -1.0,
            })
            .collect();
        let f = StepFunction::new(probe, values).expect("sized");
        if f.is_zero() {
            continue;
        }
        if let Some(w) = check(&f) {
            return IsometryCertificate::NotIsometry {
                witness: Some(w),
                reason: "signed combination".into(),
            };
        }
    }
    IsometryCertificate::NotRefuted { samples }
}

/// `a_i = signs_i · w_i^{-1/p}`, in exact arithmetic when the roots are rational.
pub fn lamperti_isometry<S: Scalar>(
    p: f64,
    sigma: &MeasureMap,
    signs: &[i8],
) -> Result<ElementaryOperator<S>> {
    if !(p >= 1.0) || p.is_infinite() {
        return Err(Error::InvalidArgument(format!(
            "Lamperti construction needs 1 ≤ p < ∞, got {p}"
        )));
    }
    if signs.len() != sigma.pieces().len() || signs.iter().any(|s| s.abs() != 1) {
        return Err(Error::InvalidArgument(
            "one sign ±1 per piece is required".into(),
        ));
    }
    let (r, s) = crate::scalar::small_fraction(p).unwrap_or((0, 0));
    let mut mults = Vec::with_capacity(signs.len());
    for (piece, sign) in sigma.pieces().iter().zip(signs) {
        let w = piece.weight();
        let mag = if r > 0 {
            S::rational_power(&w, -(s as i64), r as u64)
        } else {
            Some(S::from_rational(
                &Rational::from_float(rational_to_f64(&w).powf(-1.0 / p)).expect("finite"),
            ))
        };
        let mag = mag.ok_or_else(|| {
            Error::InvalidArgument(format!(
                "w^(-1/p) = ({w})^(-1/{p}) is not representable exactly"
            ))
        })?;
        mults.push(if *sign < 0 { -mag } else { mag });
    }
    ElementaryOperator::new(sigma.clone(), mults)
}

/// `Σ_i |a_i|^p |src_i|`, the integral `∫ |a|^p dλ`; equals 1 for every
/// elementary isometry of `L_p`.
pub fn lamperti_mass(
    op: &ElementaryOperator<Rational>,
    p_num: i64,
    p_den: u64,
) -> Option<Rational> {
    let mut total = Rational::from_integer(0.into());
    for (piece, a) in op.branches() {
        let ap = crate::scalar::exact_root(&pow_signed(&a.abs(), p_num), p_den)?;
        total += ap * piece.src.length();
    }
    Some(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Piece;
    use crate::scalar::{int, rational};

    fn squeeze() -> MeasureMap {
        let iv = |a, b, c, d| Interval::new(rational(a, b), rational(c, d)).unwrap();
        MeasureMap::new(vec![
            Piece::new(iv(0, 1, 1, 2), iv(0, 1, 1, 4)),
            Piece::new(iv(1, 2, 1, 1), iv(1, 4, 1, 1)),
        ])
        .unwrap()
    }

    #[test]
    fn lamperti_multipliers() {
        let t: ElementaryOperator<f64> = lamperti_isometry(2.0, &squeeze(), &[1, 1]).unwrap();
        assert!((t.multipliers()[0] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((t.multipliers()[1] - 1.22474).abs() < 1e-5);
        let e: ElementaryOperator<Rational> = lamperti_isometry(1.0, &squeeze(), &[1, 1]).unwrap();
        assert_eq!(e.multipliers(), &[rational(1, 2), rational(3, 2)]);
        assert!(lamperti_isometry::<Rational>(2.0, &squeeze(), &[1, 1]).is_err());
        let mp: ElementaryOperator<Rational> =
            lamperti_isometry(3.0, &MeasureMap::half_swap(), &[1, -1]).unwrap();
        assert_eq!(mp.multipliers(), &[int(1), int(-1)]);
    }

    #[test]
    fn lamperti_certified_on_lp() {
        let l2 = NormSpec::lp(2.0).unwrap();
        let t: ElementaryOperator<f64> = lamperti_isometry(2.0, &squeeze(), &[1, -1]).unwrap();
        assert_eq!(
            is_isometry(&l2, &t, &IsometryOptions::default()),
            IsometryCertificate::Isometry { exact: false }
        );
        let l1 = NormSpec::lp(1.0).unwrap();
        let e: ElementaryOperator<Rational> = lamperti_isometry(1.0, &squeeze(), &[1, 1]).unwrap();
        assert_eq!(
            is_isometry(&l1, &e, &IsometryOptions::default()),
            IsometryCertificate::Isometry { exact: true }
        );
        assert_eq!(lamperti_mass(&e, 1, 1), Some(int(1)));
    }

    #[test]
    fn lamperti_refuted_on_lorentz() {
        let t: ElementaryOperator<f64> = lamperti_isometry(2.0, &squeeze(), &[1, 1]).unwrap();
        let cert = is_isometry(
            &NormSpec::reference_lorentz(),
            &t,
            &IsometryOptions::default(),
        );
        let IsometryCertificate::NotIsometry {
            witness: Some(w), ..
        } = cert
        else {
            panic!("{cert:?}")
        };
        assert!(w.discrepancy() > 1e-3);
        // replay from the record alone
        let f = w.function().unwrap();
        let tf = t.apply(&f).unwrap();
        let lor = NormSpec::reference_lorentz();
        assert!((eval_norm(&lor, &tf).unwrap() - eval_norm(&lor, &f).unwrap()).abs() > 1e-3);
    }

    #[test]
    fn signed_permutation_is_isometry() {
        let sigma = MeasureMap::cell_permutation(2, &[2, 0, 3, 1]).unwrap();
        let t = ElementaryOperator::new(sigma, vec![1.0, -1.0, -1.0, 1.0]).unwrap();
        for spec in NormSpec::built_in() {
            let cert = is_isometry(&spec, &t, &IsometryOptions::default());
            match spec.lp_exponent() {
                Some(_) => assert_eq!(
                    cert,
                    IsometryCertificate::Isometry { exact: true },
                    "{spec}"
                ),
                None => assert!(
                    matches!(cert, IsometryCertificate::NotRefuted { .. }),
                    "{spec}: {cert:?}"
                ),
            }
        }
    }

    #[test]
    fn scaling_refuted_everywhere() {
        let t = ElementaryOperator::scalar(2.0);
        for spec in NormSpec::built_in() {
            let cert = is_isometry(&spec, &t, &IsometryOptions::default());
            let IsometryCertificate::NotIsometry {
                witness: Some(w), ..
            } = cert
            else {
                panic!("{spec}: {cert:?}")
            };
            assert!((w.norm_tf - 2.0 * w.norm_f).abs() < 1e-9);
        }
    }

    #[test]
    fn cell_inside_interval() {
        let iv = Interval::new(rational(1, 4), int(1)).unwrap();
        let c = cell_inside(&iv);
        assert!(iv.contains_interval(&c.interval()));
        let iv = Interval::new(rational(1, 3), rational(2, 5)).unwrap();
        assert!(iv.contains_interval(&cell_inside(&iv).interval()));
    }
}
