use super::oracle::evaluate;
use crate::error::{Error, Result};
use crate::grid::{align, StepFunction};
use crate::norms::{dual_norm, eval_norm, NormSpec};

/// Largest allowed `|∫ f u − 1|` for a well-formed candidate.
pub const PAIRING_TOL: f64 = 1e-12;

/// A rank-one projection `P = f⊗u`, `P x = (∫ f x) u`, on the space `spec`.
#[derive(Debug, Clone)]
pub struct FlinnCandidate {
    spec: NormSpec,
    u: StepFunction<f64>,
    f: StepFunction<f64>,
}

#[derive(Debug, Clone)]
pub enum FlinnVerdict {
    /// `‖I − P‖ ≤ 1 + tol`, with the norm computed exactly.
    Flinn {
        norm: f64,
    },
    /// `‖(I − P) x‖ > (1 + tol) ‖x‖` at the witness.
    NotFlinn {
        lower: f64,
        witness: StepFunction<f64>,
    },
    Inconclusive {
        lower: f64,
        upper: f64,
    },
}

impl FlinnVerdict {
    pub fn verdict(&self) -> Option<bool> {
        match self {
            FlinnVerdict::Flinn { .. } => Some(true),
            FlinnVerdict::NotFlinn { .. } => Some(false),
            FlinnVerdict::Inconclusive { .. } => None,
        }
    }
}

impl FlinnCandidate {
    pub fn new(spec: NormSpec, u: StepFunction<f64>, f: StepFunction<f64>) -> Result<Self> {
        if u.is_zero() {
            return Err(Error::Degenerate(
                "no projection onto the span of the zero function".into(),
            ));
        }
        let pairing = f.pairing(&u);
        if (pairing - 1.0).abs() > PAIRING_TOL {
            return Err(Error::Precondition(format!(
                "pairing ∫ f u = {pairing}, expected 1"
            )));
        }
        let (u, f) = align(&u, &f);
        Ok(Self { spec, u, f })
    }

    /// Rescales `f` so that `∫ f u = 1`.
    pub fn normalized(spec: NormSpec, u: StepFunction<f64>, f: StepFunction<f64>) -> Result<Self> {
        let pairing = f.pairing(&u);
        if pairing == 0.0 || !pairing.is_finite() {
            return Err(Error::Degenerate("∫ f u vanishes".into()));
        }
        Self::new(spec, u, f.scale(&pairing.recip()))
    }

    pub fn spec(&self) -> &NormSpec {
        &self.spec
    }

    pub fn u(&self) -> &StepFunction<f64> {
        &self.u
    }

    pub fn f(&self) -> &StepFunction<f64> {
        &self.f
    }
}

/// Decides whether `f⊗u` is numerically positive, i.e. `‖I − f⊗u‖ = 1`.
pub fn is_flinn_pair(c: &FlinnCandidate, tol: f64, seed: u64) -> Result<FlinnVerdict> {
    let level = c.u.level().max(c.spec.base_level());
    let u = c.u.refine(level)?;
    let f = c.f.refine(level)?;
    let ev = evaluate(&c.spec, level, u.values(), f.values(), seed)?;
    if ev.value > 1.0 + tol {
        let witness = match ev.witnesses.first() {
            Some(x) => StepFunction::new(level, x.clone())?,
            None => StepFunction::zero(level),
        };
        return Ok(FlinnVerdict::NotFlinn {
            lower: ev.value,
            witness,
        });
    }
    if ev.exact {
        return Ok(FlinnVerdict::Flinn {
            norm: ev.value.max(1.0),
        });
    }
    // ‖I − P‖ ≤ 1 + ‖u‖ ‖f‖′
    let upper = 1.0 + eval_norm(&c.spec, &u)? * dual_norm(&c.spec, &f)?;
    Ok(FlinnVerdict::Inconclusive {
        lower: ev.value.max(1.0),
        upper,
    })
}

/// Sign compatibility `f u ≥ 0` of a Flinn pair, cell by cell.
pub fn verify_prop_4_1(c: &FlinnCandidate, tol: f64) -> bool {
    c.f.values()
        .iter()
        .zip(c.u.values())
        .all(|(f, u)| f * u >= -tol)
}

/// The smallest cell product `f_i u_i`.
pub fn min_sign_product(c: &FlinnCandidate) -> f64 {
    c.f.values()
        .iter()
        .zip(c.u.values())
        .map(|(f, u)| f * u)
        .fold(f64::INFINITY, f64::min)
}
