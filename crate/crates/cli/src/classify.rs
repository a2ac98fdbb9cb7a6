//! Sorting certified isometries into the two branches of the dichotomy:
//! the measure-preserving unimodular form, or an `L_p` space.

use serde::Serialize;

use rilab::norms::NormSpec;
use rilab::operators::{
    is_isometry, ElementaryOperator, IsometryCertificate, IsometryOptions, IsometryWitness,
};
use rilab::scalar::Scalar;

/// Tolerance on `|a_i| = 1`.
pub const MODULUS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IsometryStatus {
    CertifiedYes,
    CertifiedNo,
    NotRefuted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    TrivialForm,
    LpLampertiForm,
    NotIsometry,
    /// A non-`L_p` space with an isometry that is not of the trivial form.
    Inconsistent,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationVerdict {
    pub is_isometry: IsometryStatus,
    /// Unset for refuted operators.
    pub modulus_one: Option<bool>,
    pub measure_preserving: Option<bool>,
    pub branch: Branch,
    /// The isometry certificate was checked in rational arithmetic.
    pub exact: bool,
    pub witness: Option<IsometryWitness>,
    pub reason: String,
}

pub fn classify_isometry<S: Scalar>(
    spec: &NormSpec,
    t: &ElementaryOperator<S>,
    opts: &IsometryOptions,
) -> ClassificationVerdict {
    let cert = is_isometry(spec, t, opts);
    let (status, exact, reason) = match &cert {
        IsometryCertificate::Isometry { exact } => (
            IsometryStatus::CertifiedYes,
            *exact,
            "pointwise criterion".to_string(),
        ),
        IsometryCertificate::NotRefuted { samples } => (
            IsometryStatus::NotRefuted,
            false,
            format!("{samples} sampled functions kept their norm"),
        ),
        IsometryCertificate::NotIsometry { witness, reason } => {
            return ClassificationVerdict {
                is_isometry: IsometryStatus::CertifiedNo,
                modulus_one: None,
                measure_preserving: None,
                branch: Branch::NotIsometry,
                exact: false,
                witness: witness.clone(),
                reason: reason.clone(),
            }
        }
    };
    let modulus_one = t
        .multipliers()
        .iter()
        .all(|a| (a.to_f64().abs() - 1.0).abs() <= MODULUS_TOL);
    let measure_preserving = t.is_measure_preserving();
    let branch = if modulus_one && measure_preserving {
        Branch::TrivialForm
    } else if spec.lp_exponent().is_some() {
        // for L_p the criterion behind a certified verdict is the Lamperti condition
        Branch::LpLampertiForm
    } else {
        Branch::Inconsistent
    };
    ClassificationVerdict {
        is_isometry: status,
        modulus_one: Some(modulus_one),
        measure_preserving: Some(measure_preserving),
        branch,
        exact,
        witness: None,
        reason,
    }
}
