//! Rearrangement-invariant norms on step functions: evaluation, Köthe duals,
//! conditional expectations, fundamental functions, and properties (P)/(P').

mod dual;
mod eval;
mod properties;
mod spec;

pub use dual::{
    dual_norm, dual_norm_ascent, dual_norm_bounds, AscentOptions, DualAscent, DualBounds,
};
pub use eval::{
    decreasing_rearrangement, eval_norm, norm_of_distribution, norm_of_values, norm_subgradient,
};
pub use properties::{
    check_property_p, check_property_p_prime, conditional_expectation, default_t_grid,
    fundamental_function, PropertyCheck, DEFAULT_MARGIN_TOL,
};
pub use spec::{NormSpec, YoungFunction};
