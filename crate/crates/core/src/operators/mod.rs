//! Elementary and pseudo-integral operators, their matrices on step-function
//! spaces, operator norms, isometry certificates, dilations and Boyd indices.

mod comparison;
mod dilation;
mod distortion;
mod elementary;
mod isometry;
mod linear;
mod opnorm;
mod pseudo;

pub use comparison::{elementary_lp_norm, random_elementary, verify_prop_7_1, NormComparison};
pub use dilation::{
    boyd_indices_estimate, dilation_operator, scale_exponent, symmetric_scales, BoydEstimate,
};
pub use distortion::{distortion, distortion_recurrence, recurrence_tail_max};
pub use elementary::ElementaryOperator;
pub use isometry::{
    image_norm, is_isometry, lamperti_isometry, lamperti_mass, IsometryCertificate,
    IsometryOptions, IsometryWitness, LAMPERTI_FLOAT_TOL,
};
pub use linear::LinearMap;
pub use opnorm::{
    operator_norm, NormMethod, NormOptions, OperatorNorm, MAX_LORENTZ_DIM, MAX_SIGN_DIM,
};

pub(crate) use opnorm::{ascent_runs, has_vertices, top_vertices};
pub use pseudo::PseudoIntegralOperator;

pub(crate) use pseudo::common_breakpoints;
