//! Atomic measures, their p-variation, and the representing kernels
//! `ν_s = Σ a_n(s) δ(σ_n(s))` of pseudo-integral operators.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use num_traits::{One, Zero};

use crate::grid::{
    cell_of_point, dyadic_unit, random_automorphism, DyadicCell, Interval, StepFunction,
};
use crate::norms::{eval_norm, NormSpec};
use crate::operators::{
    common_breakpoints, is_isometry, ElementaryOperator, IsometryCertificate, IsometryOptions,
    PseudoIntegralOperator,
};
use crate::scalar::{Rational, Scalar};

/// Atoms `(t_n, a_n)` with distinct positions and nonzero weights, ordered
/// by `|a_n|` nonincreasing (ties by position).
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    atoms: Vec<(Rational, f64)>,
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "p-variation needs 0 < p ≤ 1, got {p}"
        )))
    }
}

impl AtomicMeasure {
    pub fn new(mut atoms: Vec<(Rational, f64)>) -> Result<Self> {
        for (t, a) in &atoms {
            if *t < Rational::from_integer(0.into()) || *t > Rational::from_integer(1.into()) {
                return Err(Error::InvalidArgument(format!(
                    "atom position {t} outside [0,1]"
                )));
            }
            if *a == 0.0 || !a.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "atom weight {a} at {t} must be finite and nonzero"
                )));
            }
        }
        atoms.sort_by(|x, y| x.0.cmp(&y.0));
        if let Some(w) = atoms.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument(format!("two atoms at {}", w[0].0)));
        }
        atoms.sort_by(|x, y| y.1.abs().total_cmp(&x.1.abs()).then_with(|| x.0.cmp(&y.0)));
        Ok(Self { atoms })
    }

    pub fn zero() -> Self {
        Self { atoms: Vec::new() }
    }

    pub fn dirac(t: Rational) -> Result<Self> {
        Self::new(vec![(t, 1.0)])
    }

    pub fn atoms(&self) -> &[(Rational, f64)] {
        &self.atoms
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `μ(D)` for a cell `D = (lo, hi]`; the point 0 counts toward the first cell.
    pub fn mass(&self, cell: &DyadicCell) -> f64 {
        self.atoms
            .iter()
            .filter(|(t, _)| cell_of_point(t, cell.level()) as u64 + 1 == cell.index())
            .map(|a| a.1)
            .sum()
    }

    /// `∫ f dμ`.
    pub fn integrate(&self, f: &StepFunction<f64>) -> f64 {
        self.atoms
            .iter()
            .map(|(t, a)| a * f.values()[cell_of_point(t, f.level())])
            .sum()
    }

    /// Coarsest level whose cells each hold at most one atom.
    pub fn separation_level(&self) -> Option<u32> {
        let mut pts: Vec<&Rational> = self.atoms.iter().map(|a| &a.0).collect();
        pts.sort();
        (0..=crate::grid::MAX_LEVEL).find(|&n| {
            pts.windows(2)
                .all(|w| cell_of_point(w[0], n) != cell_of_point(w[1], n))
        })
    }
}

/// `‖μ‖_p = (Σ |a_n|^p)^{1/p}`.
pub fn p_variation(mu: &AtomicMeasure, p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(mu
        .atoms
        .iter()
        .map(|a| a.1.abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p))
}

/// `(Σ_k |μ(D(n,k))|^p)^{1/p}` for `n = 0 ..= n_max`.
pub fn dyadic_p_variation(mu: &AtomicMeasure, p: f64, n_max: u32) -> Result<Vec<f64>> {
    check_p(p)?;
    Ok((0..=n_max)
        .map(|n| {
            let mut cells: Vec<(usize, f64)> = mu
                .atoms
                .iter()
                .map(|(t, a)| (cell_of_point(t, n), *a))
                .collect();
            cells.sort_by_key(|c| c.0);
            let mut total = 0.0;
            let mut i = 0;
            while i < cells.len() {
                let mut mass = 0.0;
                let k = cells[i].0;
                while i < cells.len() && cells[i].0 == k {
                    mass += cells[i].1;
                    i += 1;
                }
                total += f64::abs(mass).powf(p);
            }
            total.powf(1.0 / p)
        })
        .collect())
}

/// `ν_s` on the cells of a partition of `[0,1]` fine enough that every
/// branch is affine on each cell. Weights are constant on a cell; positions
/// are the images of the cell midpoint.
#[derive(Debug, Clone)]
pub struct RepresentingKernel {
    cells: Vec<(Interval, AtomicMeasure)>,
    /// Set when the cells are exactly the level-`N` dyadic cells.
    level: Option<u32>,
}

impl RepresentingKernel {
    pub fn level(&self) -> Option<u32> {
        self.level
    }

    pub fn cells(&self) -> &[(Interval, AtomicMeasure)] {
        &self.cells
    }

    /// `s ↦ ∫ f dν_s` on a uniform kernel, exact whenever each branch maps
    /// every kernel cell into a single cell of `f`.
    pub fn integrate(&self, f: &StepFunction<f64>) -> Result<StepFunction<f64>> {
        let level = self
            .level
            .ok_or_else(|| Error::NonDyadic("kernel cells are not a uniform dyadic grid".into()))?;
        StepFunction::new(
            level,
            self.cells.iter().map(|(_, mu)| mu.integrate(f)).collect(),
        )
    }
}

/// The kernel of `Σ_n a_n f∘σ_n` on the common refinement of the source
/// breakpoints and, if given, the level-`level` grid. An empty term list
/// gives the zero kernel.
pub fn kernel_of_terms<S: Scalar>(
    terms: &[ElementaryOperator<S>],
    level: Option<u32>,
) -> Result<RepresentingKernel> {
    let mut pts = common_breakpoints(terms);
    if let Some(n) = level {
        let unit = dyadic_unit(n);
        pts.extend((0..=1u64 << n).map(|k| Rational::from_integer(k.into()) * &unit));
    }
    pts.push(Rational::zero());
    pts.push(Rational::one());
    pts.sort();
    pts.dedup();
    let cells = pts.len() - 1;
    let uniform = cells
        .is_power_of_two()
        .then(|| cells.trailing_zeros())
        .filter(|&n| {
            let unit = dyadic_unit(n);
            pts.iter()
                .enumerate()
                .all(|(k, x)| *x == Rational::from_integer(k.into()) * &unit)
        });
    let cells = pts
        .windows(2)
        .map(|w| {
            let iv = Interval::new(w[0].clone(), w[1].clone())?;
            let mid = (&w[0] + &w[1]) / Rational::from_integer(2.into());
            let atoms = terms
                .iter()
                .filter_map(|t| {
                    let i = t.map().piece_at(&mid).expect("sources tile [0,1]");
                    let a = t.multipliers()[i].to_f64();
                    (a != 0.0).then(|| (t.map().pieces()[i].forward(&mid), a))
                })
                .collect();
            Ok((iv, AtomicMeasure::new(atoms)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RepresentingKernel {
        cells,
        level: uniform,
    })
}

/// The kernel on the common refinement of the source breakpoints.
pub fn kernel_of<S: Scalar>(t: &PseudoIntegralOperator<S>) -> Result<RepresentingKernel> {
    kernel_of_terms(t.terms(), None)
}

/// `∫_0^1 ‖ν_s‖_p^p ds`.
pub fn kernel_functional(kernel: &RepresentingKernel, p: f64) -> Result<f64> {
    check_p(p)?;
    kernel
        .cells
        .iter()
        .map(|(iv, mu)| Ok(iv.length_f64() * p_variation(mu, p)?.powf(p)))
        .sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct KpSample {
    pub seed: u64,
    /// `S(τ)` passed the isometry check with a certificate, not just sampling.
    pub certified: bool,
    pub functionals: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KpReport {
    pub p_list: Vec<f64>,
    /// Functionals of `T` itself, per `p`.
    pub base: Vec<f64>,
    pub samples: Vec<KpSample>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample functionals above `1 + 1e-9`, and samples refuted as isometries.
    pub violations: usize,
    /// `‖(Σ_i |T e^n_i|^p)^{1/p}‖` per `(n, p)`; levels whose images are not
    /// dyadic step functions are left out.
    pub square_function: Vec<(u32, f64, f64)>,
    /// `‖ |a| ‖`, the value the square functions collapse to.
    pub modulus_norm: f64,
}

pub const KP_TOL: f64 = 1e-9;

/// Samples `S(τ) = T V_τ T` over random automorphisms `τ` and records the
/// kernel functionals of each.
pub fn kp_experiment<S: Scalar>(
    spec: &NormSpec,
    t: &ElementaryOperator<S>,
    n_samples: usize,
    seed: u64,
    p_list: &[f64],
) -> Result<KpReport> {
    for &p in p_list {
        check_p(p)?;
    }
    let opts = IsometryOptions {
        seed,
        ..IsometryOptions::default()
    };
    if let IsometryCertificate::NotIsometry { reason, .. } = is_isometry(spec, t, &opts) {
        return Err(Error::Precondition(format!(
            "operator is not an isometry: {reason}"
        )));
    }
    let level = t
        .map()
        .dyadic_level()
        .ok_or_else(|| Error::NonDyadic("operator map".into()))?
        .max(1);
    let functionals = |op: &ElementaryOperator<S>| -> Result<Vec<f64>> {
        let k = kernel_of_terms(std::slice::from_ref(op), None)?;
        p_list.iter().map(|&p| kernel_functional(&k, p)).collect()
    };
    let base = functionals(t)?;
    let samples = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let s = seed.wrapping_mul(0x9e37_79b9).wrapping_add(i);
            let tau = random_automorphism(level, level + 2, s)?;
            let st = t.compose(&ElementaryOperator::from_map(tau))?.compose(t)?;
            let cert = is_isometry(
                spec,
                &st,
                &IsometryOptions {
                    seed: s,
                    ..IsometryOptions::default()
                },
            );
            let certified = matches!(cert, IsometryCertificate::Isometry { .. });
            Ok((
                KpSample {
                    seed: s,
                    certified,
                    functionals: functionals(&st)?,
                },
                cert.verdict() == Some(false),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut violations = 0;
    let mut all = Vec::new();
    for (sample, refuted) in &samples {
        violations += usize::from(*refuted || sample.functionals.iter().any(|v| *v > 1.0 + KP_TOL));
        all.extend(sample.functionals.iter().copied());
    }
    let (min, max) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(*v), b.max(*v))
        });
    let mean = if all.is_empty() {
        f64::NAN
    } else {
        all.iter().sum::<f64>() / all.len() as f64
    };

    let tf = t.to_f64();
    let modulus = tf.apply(&StepFunction::one())?.abs();
    let modulus_norm = eval_norm(spec, &modulus)?;
    let mut square_function = Vec::new();
    for n in 0..=level + 1 {
        let images = match (1..=1usize << n)
            .map(|i| tf.apply(&StepFunction::basis(n, i)?))
            .collect::<Result<Vec<_>>>()
        {
            Ok(v) => v,
            Err(Error::NonDyadic(_)) => continue,
            Err(e) => return Err(e),
        };
        let fine = images.iter().map(|g| g.level()).max().unwrap_or(0);
        let images = images
            .iter()
            .map(|g| g.refine(fine))
            .collect::<Result<Vec<_>>>()?;
        for &p in p_list {
            let v = (0..1usize << fine)
                .map(|c| {
                    images
                        .iter()
                        .map(|g| g.values()[c].abs().powf(p))
                        .sum::<f64>()
                        .powf(1.0 / p)
                })
                .collect();
            square_function.push((n, p, eval_norm(spec, &StepFunction::new(fine, v)?)?));
        }
    }
    Ok(KpReport {
        p_list: p_list.to_vec(),
        base,
        samples: samples.into_iter().map(|s| s.0).collect(),
        min,
        max,
        mean,
        violations,
        square_function,
        modulus_norm,
    })
}

/// Length-weighted integral of `‖ν_s‖_p^p` with `ν_s` taken on the source
/// intervals of a single elementary operator, without discretizing.
pub fn elementary_functional<S: Scalar>(t: &ElementaryOperator<S>, p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(t.branches()
        .map(|(piece, a)| a.to_f64().abs().powf(p) * piece.src.length_f64())
        .sum())
}
