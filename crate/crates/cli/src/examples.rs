//! Fixed operators shared by the suites and the acceptance checks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rilab::grid::{random_automorphism, Interval, MeasureMap, Piece};
use rilab::operators::{lamperti_isometry, ElementaryOperator};
use rilab::scalar::{rational, Rational};
use rilab::Result;

/// `[0,1/2] → [0,1/4]`, `(1/2,1] → (1/4,1]`, with weights 2 and 2/3.
pub fn squeeze_map() -> MeasureMap {
    let iv = |a: Rational, b: Rational| Interval::new(a, b).expect("ordered");
    MeasureMap::new(vec![
        Piece::new(
            iv(rational(0, 1), rational(1, 2)),
            iv(rational(0, 1), rational(1, 4)),
        ),
        Piece::new(
            iv(rational(1, 2), rational(1, 1)),
            iv(rational(1, 4), rational(1, 1)),
        ),
    ])
    .expect("tiles [0,1]")
}

/// The `L_p` isometry `a = w^{-1/p}` over [`squeeze_map`]; for `p = 2` the
/// multipliers are `(2^{-1/2}, (3/2)^{1/2})`.
pub fn lamperti_example(p: f64) -> ElementaryOperator<f64> {
    lamperti_isometry(p, &squeeze_map(), &[1, 1]).expect("valid exponent")
}

/// A uniformly random permutation of the level-`level` cells with random signs.
pub fn signed_permutation(level: u32, seed: u64) -> ElementaryOperator<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..1usize << level).collect();
    perm.shuffle(&mut rng);
    let map = MeasureMap::cell_permutation(level, &perm).expect("permutation");
    let signs = (0..map.pieces().len())
        .map(|_| rational(if rng.gen_bool(0.5) { 1 } else { -1 }, 1))
        .collect();
    ElementaryOperator::new(map, signs).expect("nonzero multipliers")
}

/// `T V_{τ₁} T V_{τ₂} T` for random automorphisms `τ₁, τ₂`.
pub fn threefold(
    t: &ElementaryOperator<f64>,
    level: u32,
    seed: u64,
    cap: u32,
) -> Result<ElementaryOperator<f64>> {
    let v1 = ElementaryOperator::from_map(random_automorphism(level, level + 1, seed)?);
    let v2 = ElementaryOperator::from_map(random_automorphism(level, level + 1, seed ^ 0xa5a5)?);
    t.compose_with_cap(&v1, cap)?
        .compose_with_cap(t, cap)?
        .compose_with_cap(&v2, cap)?
        .compose_with_cap(t, cap)
}
