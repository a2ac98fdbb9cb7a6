//! Numerically positive rank-one projections and Flinn elements.

mod candidate;
mod defect;
mod oracle;
mod search;
mod weight;

pub use candidate::{
    is_flinn_pair, min_sign_product, verify_prop_4_1, FlinnCandidate, FlinnVerdict, PAIRING_TOL,
};
pub use defect::{flinn_defect, DefectOptions, FlinnDefect};
pub use search::{
    coefficient_ratio, estimate_a_p, find_separating_sign_vector, verify_lemma_5_3, ApEstimate,
    ApLevel, Lemma53Report, Separation, MAX_EXHAUSTIVE_SIGNS,
};
pub use weight::{recover_theorem_4_3_weight, support_samples, WeightOptions, WeightRecovery};
