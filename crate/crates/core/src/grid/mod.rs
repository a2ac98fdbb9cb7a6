//! Exact dyadic geometry on `[0,1]`: cells, step functions, and invertible
//! piecewise-affine measure maps.
//!
//! Endpoints are exact rationals. Cells, step functions and automorphisms
//! only ever produce dyadic endpoints; general rational endpoints appear once
//! a map with non-power-of-two Radon–Nikodym weights is composed with others.

mod cell;
mod map;
mod step;

pub use cell::{
    dyadic_level, dyadic_unit, parse_rational, DyadicCell, DyadicPartition, Interval,
    DEFAULT_LEVEL_CAP, MAX_LEVEL,
};
pub use map::{
    automorphism, random_automorphism, random_dyadic_map, resolution, MeasureMap, Piece,
};
pub use step::{align, StepFunction};

pub(crate) use map::{compose_pieces, parse_piece_line, rasterize};
pub(crate) use step::{cell_of_point, cell_range};

use crate::error::Result;
use crate::scalar::Scalar;

/// `refine(f, m)`.
pub fn refine<S: Scalar>(f: &StepFunction<S>, m: u32) -> Result<StepFunction<S>> {
    f.refine(m)
}

/// `f ∘ σ`.
pub fn compose_with_map<S: Scalar>(
    f: &StepFunction<S>,
    sigma: &MeasureMap,
    cap: u32,
) -> Result<StepFunction<S>> {
    let parts = sigma.pullback(f);
    rasterize(parts.into_iter().map(|(_, p, v)| (p.src, v)), cap)
}

/// `s ↦ τ(σ(s))`.
pub fn compose_maps(sigma: &MeasureMap, tau: &MeasureMap, cap: u32) -> Result<MeasureMap> {
    sigma.then(tau, cap)
}

pub fn invert_map(sigma: &MeasureMap) -> MeasureMap {
    sigma.inverse()
}

pub fn is_measure_preserving(sigma: &MeasureMap) -> bool {
    sigma.is_measure_preserving()
}
