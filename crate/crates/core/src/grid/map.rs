use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cell::{dyadic_level, dyadic_unit, parse_rational, DyadicCell, Interval, MAX_LEVEL};
use super::step::{cell_of_point, cell_range, StepFunction};
use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

/// One branch of a measure map: the increasing affine bijection `src → tgt`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Piece {
    pub src: Interval,
    pub tgt: Interval,
}

impl Piece {
    pub fn new(src: Interval, tgt: Interval) -> Self {
        Self { src, tgt }
    }

    /// Radon–Nikodym weight `|src| / |tgt|`.
    pub fn weight(&self) -> Rational {
        self.src.length() / self.tgt.length()
    }

    pub fn forward(&self, s: &Rational) -> Rational {
        self.tgt.lo() + (s - self.src.lo()) * self.tgt.length() / self.src.length()
    }

    pub fn backward(&self, t: &Rational) -> Rational {
        self.src.lo() + (t - self.tgt.lo()) * self.src.length() / self.tgt.length()
    }

    /// The branch restricted to a sub-interval of its target.
    pub fn restrict_tgt(&self, sub: &Interval) -> Piece {
        let src = Interval::new(self.backward(sub.lo()), self.backward(sub.hi()))
            .expect("sub-interval of the target");
        Piece {
            src,
            tgt: sub.clone(),
        }
    }

    /// The branch restricted to a sub-interval of its source.
    pub fn restrict_src(&self, sub: &Interval) -> Piece {
        let tgt = Interval::new(self.forward(sub.lo()), self.forward(sub.hi()))
            .expect("sub-interval of the source");
        Piece {
            src: sub.clone(),
            tgt,
        }
    }

    fn reversed(&self) -> Piece {
        Piece {
            src: self.tgt.clone(),
            tgt: self.src.clone(),
        }
    }

    /// Whether `next` continues this branch with the same affine law.
    fn continues_into(&self, next: &Piece) -> bool {
        self.src.hi() == next.src.lo()
            && self.tgt.hi() == next.tgt.lo()
            && self.weight() == next.weight()
    }
}

/// Resolution of a rational endpoint: its dyadic level, or `⌈log2 denom⌉` otherwise.
pub fn resolution(q: &Rational) -> u32 {
    match dyadic_level(q) {
        Some(level) => level,
        None => q.denom().bits() as u32,
    }
}

fn check_partition(mut family: Vec<&Interval>, what: &str) -> Result<()> {
    family.sort();
    let mut cursor = Rational::zero();
    for iv in family {
        if *iv.lo() != cursor {
            return Err(Error::Partition(format!(
                "{what} family has a gap or overlap at {cursor}"
            )));
        }
        cursor = iv.hi().clone();
    }
    if !cursor.is_one() {
        return Err(Error::Partition(format!(
            "{what} family covers [0, {cursor}] only"
        )));
    }
    Ok(())
}

/// An invertible piecewise-affine map of `[0,1]` onto itself.
///
/// Pieces are kept sorted by source interval. Both the source and the target
/// families partition `[0,1]`, so null sets pull back to null sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasureMap {
    pieces: Vec<Piece>,
}

impl MeasureMap {
    pub fn new(mut pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Partition(
                "a measure map needs at least one piece".into(),
            ));
        }
        check_partition(pieces.iter().map(|p| &p.src).collect(), "source")?;
        check_partition(pieces.iter().map(|p| &p.tgt).collect(), "target")?;
        pieces.sort_by(|a, b| a.src.cmp(&b.src));
        Ok(Self { pieces })
    }

    pub fn from_cells(pairs: &[(DyadicCell, DyadicCell)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|(s, t)| Piece::new(s.interval(), t.interval()))
                .collect(),
        )
    }

    pub fn identity() -> Self {
        Self {
            pieces: vec![Piece::new(Interval::unit(), Interval::unit())],
        }
    }

    /// Sends level-`level` cell `i` onto cell `perm[i]` (zero-based) by translation.
    pub fn cell_permutation(level: u32, perm: &[usize]) -> Result<Self> {
        let n = 1usize << level;
        let mut seen = vec![false; n];
        if perm.len() != n {
            return Err(Error::InvalidArgument(format!(
                "permutation of {n} cells has {} entries",
                perm.len()
            )));
        }
        for &p in perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidArgument(format!(
                    "{perm:?} is not a permutation"
                )));
            }
        }
        let pairs: Vec<_> = perm
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                (
                    DyadicCell::new(level, i as u64 + 1).unwrap(),
                    DyadicCell::new(level, p as u64 + 1).unwrap(),
                )
            })
            .collect();
        Self::from_cells(&pairs)
    }

    /// Exchanges the two halves of `[0,1]`.
    pub fn half_swap() -> Self {
        Self::cell_permutation(1, &[1, 0]).unwrap()
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn weights(&self) -> Vec<Rational> {
        self.pieces.iter().map(Piece::weight).collect()
    }

    /// True iff every Radon–Nikodym weight equals 1.
    pub fn is_measure_preserving(&self) -> bool {
        self.pieces.iter().all(|p| p.weight().is_one())
    }

    /// Index of the piece whose source contains `s`.
    pub fn piece_at(&self, s: &Rational) -> Option<usize> {
        self.pieces.iter().position(|p| p.src.contains_point(s))
    }

    pub fn eval(&self, s: &Rational) -> Option<Rational> {
        self.piece_at(s).map(|i| self.pieces[i].forward(s))
    }

    pub fn inverse(&self) -> Self {
        let mut pieces: Vec<_> = self.pieces.iter().map(Piece::reversed).collect();
        pieces.sort_by(|a, b| a.src.cmp(&b.src));
        Self { pieces }
    }

    /// Finest resolution among all endpoints.
    pub fn resolution(&self) -> u32 {
        self.pieces
            .iter()
            .flat_map(|p| [p.src.lo(), p.src.hi(), p.tgt.lo(), p.tgt.hi()])
            .map(resolution)
            .max()
            .unwrap_or(0)
    }

    /// Dyadic level of all endpoints, if every endpoint is dyadic.
    pub fn dyadic_level(&self) -> Option<u32> {
        self.pieces.iter().try_fold(0, |acc, p| {
            Some(acc.max(p.src.dyadic_level()?).max(p.tgt.dyadic_level()?))
        })
    }

    /// Merges neighbouring pieces that follow the same affine law.
    pub fn canonical(&self) -> Self {
        let mut out: Vec<Piece> = Vec::with_capacity(self.pieces.len());
        for p in &self.pieces {
            if let Some(last) = out.last_mut() {
                if last.continues_into(p) {
                    *last = Piece::new(
                        Interval::new(last.src.lo().clone(), p.src.hi().clone()).unwrap(),
                        Interval::new(last.tgt.lo().clone(), p.tgt.hi().clone()).unwrap(),
                    );
                    continue;
                }
            }
            out.push(p.clone());
        }
        Self { pieces: out }
    }

    /// Equality as maps of `[0,1]`, independent of how pieces are cut.
    pub fn same_map(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }

    /// `s ↦ tau(self(s))`, merged to canonical form.
    pub fn then(&self, tau: &MeasureMap, cap: u32) -> Result<Self> {
        let pieces = compose_pieces(self, tau, cap)?
            .into_iter()
            .map(|c| c.piece)
            .collect();
        Ok(Self::new(pieces)?.canonical())
    }

    /// Sub-branches of `self` on which `f` is constant, tagged with the value.
    pub(crate) fn pullback<S: Scalar>(&self, f: &StepFunction<S>) -> Vec<(usize, Piece, S)> {
        let level = f.level();
        let unit = dyadic_unit(level);
        let mut out = Vec::new();
        for (i, p) in self.pieces.iter().enumerate() {
            let first = cell_of_point(p.tgt.lo(), level);
            let last = cell_of_point(p.tgt.hi(), level);
            // the cell containing lo is first+1 unless lo is interior
            let start = if p.tgt.lo().is_zero() {
                0
            } else {
                first + usize::from(is_grid_point(p.tgt.lo(), level))
            };
            // runs of equal value inside the target are pulled back whole
            let mut cursor = p.tgt.lo().clone();
            let mut run: Option<(Rational, S)> = None;
            for k in start..=last {
                let cell_hi = &unit * BigInt::from(k as u64 + 1);
                let hi = if cell_hi < *p.tgt.hi() {
                    cell_hi
                } else {
                    p.tgt.hi().clone()
                };
                if hi <= cursor {
                    continue;
                }
                let v = f.values()[k].clone();
                match run.take() {
                    Some((lo, rv)) if rv == v => run = Some((lo, rv)),
                    Some((lo, rv)) => {
                        let sub = Interval::new(lo, cursor.clone()).unwrap();
                        out.push((i, p.restrict_tgt(&sub), rv));
                        run = Some((cursor.clone(), v));
                    }
                    None => run = Some((cursor.clone(), v)),
                }
                cursor = hi;
            }
            if let Some((lo, rv)) = run {
                let sub = Interval::new(lo, cursor).unwrap();
                out.push((i, p.restrict_tgt(&sub), rv));
            }
        }
        out
    }

    /// `f ∘ σ` as a step function on the refinement of the source partition.
    pub fn compose_with<S: Scalar>(
        &self,
        f: &StepFunction<S>,
        cap: u32,
    ) -> Result<StepFunction<S>> {
        let parts = self.pullback(f);
        rasterize(parts.into_iter().map(|(_, p, v)| (p.src, v)), cap)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for p in &self.pieces {
            match (p.src.as_cell(), p.tgt.as_cell()) {
                (Some(a), Some(b)) => {
                    let _ = writeln!(s, "{} {} {} {}", a.level(), a.index(), b.level(), b.index());
                }
                _ => {
                    let _ = writeln!(
                        s,
                        "interval {} {} {} {}",
                        p.src.lo(),
                        p.src.hi(),
                        p.tgt.lo(),
                        p.tgt.hi()
                    );
                }
            }
        }
        s
    }

    /// Parses one piece per line: `src_level src_index tgt_level tgt_index`,
    /// or `interval src_lo src_hi tgt_lo tgt_hi` for non-cell pieces.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut pieces = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            pieces.push(parse_piece_line(line)?);
        }
        Self::new(pieces)
    }
}

fn is_grid_point(x: &Rational, level: u32) -> bool {
    (x * Rational::from_integer(BigInt::one() << level as usize)).is_integer()
}

pub(crate) fn parse_piece_line(line: &str) -> Result<Piece> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    match tokens.as_slice() {
        ["interval", a, b, c, d] => Ok(Piece::new(
            Interval::new(parse_rational(a)?, parse_rational(b)?)?,
            Interval::new(parse_rational(c)?, parse_rational(d)?)?,
        )),
        [a, b, c, d] => {
            let num = |t: &str| {
                t.parse::<u64>()
                    .map_err(|_| Error::Parse(format!("bad integer {t:?} in {line:?}")))
            };
            let src = DyadicCell::new(num(a)? as u32, num(b)?)?;
            let tgt = DyadicCell::new(num(c)? as u32, num(d)?)?;
            Ok(Piece::new(src.interval(), tgt.interval()))
        }
        _ => Err(Error::Parse(format!(
            "expected 4 fields in piece line {line:?}"
        ))),
    }
}

/// Fill a step function from disjoint intervals covering `[0,1]`.
pub(crate) fn rasterize<S: Scalar>(
    parts: impl IntoIterator<Item = (Interval, S)>,
    cap: u32,
) -> Result<StepFunction<S>> {
    let parts: Vec<_> = parts.into_iter().collect();
    let mut level = 0;
    for (iv, _) in &parts {
        let l = iv
            .dyadic_level()
            .ok_or_else(|| Error::NonDyadic(iv.to_string()))?;
        level = level.max(l);
    }
    if level > cap.min(MAX_LEVEL) {
        return Err(Error::LevelCap { needed: level, cap });
    }
    let mut values = vec![S::zero(); 1usize << level];
    for (iv, v) in parts {
        for i in cell_range(&iv, level) {
            values[i] = v.clone();
        }
    }
    StepFunction::new(level, values)
}

/// A piece of `σ` then `τ`, with the indices of the pieces it came from.
#[derive(Debug, Clone)]
pub(crate) struct ComposedPiece {
    pub piece: Piece,
    pub first: usize,
    pub second: usize,
}

/// Common refinement of `σ` followed by `τ`.
pub(crate) fn compose_pieces(
    sigma: &MeasureMap,
    tau: &MeasureMap,
    cap: u32,
) -> Result<Vec<ComposedPiece>> {
    let mut out = Vec::new();
    for (i, p) in sigma.pieces.iter().enumerate() {
        // tau pieces are sorted by source, and their sources tile [0,1]
        let start = tau.pieces.partition_point(|q| q.src.hi() <= p.tgt.lo());
        for (j, q) in tau.pieces.iter().enumerate().skip(start) {
            if q.src.lo() >= p.tgt.hi() {
                break;
            }
            let Some(overlap) = p.tgt.intersect(&q.src) else {
                continue;
            };
            let src = p.restrict_tgt(&overlap).src;
            let tgt = q.restrict_src(&overlap).tgt;
            for x in [src.lo(), src.hi(), tgt.lo(), tgt.hi()] {
                let r = resolution(x);
                if r > cap {
                    return Err(Error::LevelCap { needed: r, cap });
                }
            }
            out.push(ComposedPiece {
                piece: Piece::new(src, tgt),
                first: i,
                second: j,
            });
        }
    }
    out.sort_by(|a, b| a.piece.src.cmp(&b.piece.src));
    Ok(out)
}

/// A member `γπ` of the automorphism group: cell `k` of level `level` is
/// rotated internally by `rotations[k] · 2^-finer` and then translated onto
/// cell `perm[k]`.
pub fn automorphism(
    level: u32,
    finer: u32,
    perm: &[usize],
    rotations: &[u64],
) -> Result<MeasureMap> {
    if finer < level {
        return Err(Error::InvalidArgument(format!(
            "rotation resolution {finer} is coarser than level {level}"
        )));
    }
    if finer > 40 {
        return Err(Error::InvalidArgument(format!(
            "rotation resolution {finer} too fine"
        )));
    }
    let n = 1usize << level;
    if rotations.len() != n {
        return Err(Error::InvalidArgument(format!("expected {n} rotations")));
    }
    let translation = MeasureMap::cell_permutation(level, perm)?;
    let units = 1u64 << (finer - level);
    let tick = dyadic_unit(finer);
    let mut pieces = Vec::new();
    for (k, &r) in rotations.iter().enumerate() {
        if r >= units {
            return Err(Error::InvalidArgument(format!(
                "rotation {r} exceeds {units} units"
            )));
        }
        let cell = DyadicCell::new(level, k as u64 + 1)?.interval();
        let theta = &tick * BigInt::from(r);
        if theta.is_zero() {
            pieces.push(Piece::new(cell.clone(), cell));
            continue;
        }
        let cut = cell.hi() - &theta;
        let shifted = cell.lo() + &theta;
        pieces.push(Piece::new(
            Interval::new(cell.lo().clone(), cut.clone())?,
            Interval::new(shifted.clone(), cell.hi().clone())?,
        ));
        pieces.push(Piece::new(
            Interval::new(cut, cell.hi().clone())?,
            Interval::new(cell.lo().clone(), shifted)?,
        ));
    }
    MeasureMap::new(pieces)?.then(&translation, finer.max(level))
}

/// Samples `τ = γπ`: a uniform permutation of the level-`level` cells and
/// independent uniform rotations by multiples of `2^-finer` inside each cell.
pub fn random_automorphism(level: u32, finer: u32, seed: u64) -> Result<MeasureMap> {
    if finer < level {
        return Err(Error::InvalidArgument(format!(
            "rotation resolution {finer} is coarser than level {level}"
        )));
    }
    if finer > 40 {
        return Err(Error::InvalidArgument(format!(
            "rotation resolution {finer} too fine"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 1usize << level;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let units = 1u64 << (finer - level);
    let rotations: Vec<u64> = (0..n).map(|_| rng.gen_range(0..units)).collect();
    automorphism(level, finer, &perm, &rotations)
}

/// A random dyadic partition with `splits + 1` cells of level at most `max_level`.
fn random_dyadic_partition(
    rng: &mut ChaCha8Rng,
    max_level: u32,
    splits: usize,
) -> Result<Vec<DyadicCell>> {
    let mut cells = vec![DyadicCell::new(0, 1)?];
    for _ in 0..splits {
        let open: Vec<usize> = (0..cells.len())
            .filter(|&i| cells[i].level() < max_level)
            .collect();
        if open.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{splits} splits do not fit below level {max_level}"
            )));
        }
        let c = cells.remove(open[rng.gen_range(0..open.len())]);
        let (l, k) = (c.level() + 1, c.index());
        cells.push(DyadicCell::new(l, 2 * k - 1)?);
        cells.push(DyadicCell::new(l, 2 * k)?);
    }
    cells.sort_by_key(|c| c.interval());
    Ok(cells)
}

/// A random map between two independent dyadic partitions of `splits + 1`
/// cells each, paired by a uniform permutation. Weights are powers of two.
pub fn random_dyadic_map(max_level: u32, splits: usize, seed: u64) -> Result<MeasureMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let src = random_dyadic_partition(&mut rng, max_level, splits)?;
    let mut tgt = random_dyadic_partition(&mut rng, max_level, splits)?;
    tgt.shuffle(&mut rng);
    MeasureMap::from_cells(&src.into_iter().zip(tgt).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DEFAULT_LEVEL_CAP;
    use crate::scalar::rational;

    fn iv(a: (i64, i64), b: (i64, i64)) -> Interval {
        Interval::new(rational(a.0, a.1), rational(b.0, b.1)).unwrap()
    }

    /// `[0,1/2] → [0,1/4]`, `(1/2,1] → (1/4,1]`.
    fn squeeze() -> MeasureMap {
        MeasureMap::new(vec![
            Piece::new(iv((0, 1), (1, 2)), iv((0, 1), (1, 4))),
            Piece::new(iv((1, 2), (1, 1)), iv((1, 4), (1, 1))),
        ])
        .unwrap()
    }

    fn sf(v: &[f64]) -> StepFunction {
        StepFunction::from_values(v.to_vec()).unwrap()
    }

    #[test]
    fn compose_with_examples() {
        let id = MeasureMap::from_cells(&[
            (
                DyadicCell::new(1, 1).unwrap(),
                DyadicCell::new(1, 1).unwrap(),
            ),
            (
                DyadicCell::new(1, 2).unwrap(),
                DyadicCell::new(1, 2).unwrap(),
            ),
        ])
        .unwrap();
        let f = sf(&[1.0, 2.0, 3.0, 4.0]);
        assert!(id
            .compose_with(&f, DEFAULT_LEVEL_CAP)
            .unwrap()
            .same_function(&f));

        let e11 = StepFunction::<f64>::basis(1, 1).unwrap();
        let e12 = StepFunction::<f64>::basis(1, 2).unwrap();
        assert!(MeasureMap::half_swap()
            .compose_with(&e11, 20)
            .unwrap()
            .same_function(&e12));

        let quarter = StepFunction::<f64>::basis(2, 1).unwrap();
        let out = squeeze().compose_with(&quarter, 20).unwrap();
        assert!(out.same_function(&e11));
    }

    #[test]
    fn non_dyadic_breakpoints_are_reported() {
        // f jumps at 1/2, which pulls back to 2/3 through the second branch
        let e11 = StepFunction::<f64>::basis(1, 1).unwrap();
        assert!(matches!(
            squeeze().compose_with(&e11, 20),
            Err(Error::NonDyadic(_))
        ));
    }

    #[test]
    fn inversion() {
        let id = MeasureMap::identity();
        assert_eq!(id.inverse(), id);
        let inv = squeeze().inverse();
        assert_eq!(
            inv.pieces()[0],
            Piece::new(iv((0, 1), (1, 4)), iv((0, 1), (1, 2)))
        );
        assert_eq!(
            inv.pieces()[1],
            Piece::new(iv((1, 4), (1, 1)), iv((1, 2), (1, 1)))
        );
        assert_eq!(inv.inverse(), squeeze());
    }

    #[test]
    fn composition_laws() {
        let s = squeeze();
        assert!(s
            .then(&s.inverse(), 20)
            .unwrap()
            .same_map(&MeasureMap::identity()));
        assert!(MeasureMap::identity().then(&s, 20).unwrap().same_map(&s));
        let h = MeasureMap::half_swap();
        assert!(h.then(&h, 20).unwrap().same_map(&MeasureMap::identity()));
        // weights multiply: s then s halves [0,1/2] twice
        let ss = s.then(&s, 20).unwrap();
        assert_eq!(ss.eval(&rational(1, 2)), Some(rational(1, 8)));
    }

    #[test]
    fn measure_preservation() {
        assert!(MeasureMap::identity().is_measure_preserving());
        assert!(MeasureMap::half_swap().is_measure_preserving());
        assert!(!squeeze().is_measure_preserving());
        assert_eq!(squeeze().weights(), vec![rational(2, 1), rational(2, 3)]);
    }

    #[test]
    fn level_cap_is_enforced() {
        let a = random_automorphism(2, 12, 1).unwrap();
        let b = random_automorphism(2, 12, 2).unwrap();
        assert!(matches!(a.then(&b, 8), Err(Error::LevelCap { .. })));
        assert!(a.then(&b, 12).is_ok());
    }

    #[test]
    fn trivial_group_element() {
        let m = automorphism(2, 4, &[0, 1, 2, 3], &[0, 0, 0, 0]).unwrap();
        assert_eq!(m, MeasureMap::identity());
        assert!(random_automorphism(3, 2, 0).is_err());
    }

    #[test]
    fn automorphisms_preserve_measure_and_are_reproducible() {
        for seed in 0..50 {
            let m = random_automorphism(2, 5, seed).unwrap();
            assert!(m.is_measure_preserving());
        }
        let a = random_automorphism(1, 2, 42).unwrap();
        let b = random_automorphism(1, 2, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_text(), b.to_text());
    }

    #[test]
    fn text_round_trip() {
        let s = squeeze();
        let text = s.to_text();
        assert!(text.contains("interval 1/2 1 1/4 1"));
        assert_eq!(MeasureMap::from_text(&text).unwrap(), s);
        let h = MeasureMap::half_swap();
        assert_eq!(h.to_text(), "1 1 1 2\n1 2 1 1\n");
        assert_eq!(
            MeasureMap::from_text("# swap\n1 1 1 2\n1 2 1 1\n").unwrap(),
            h
        );
        assert!(MeasureMap::from_text("1 1 1 1\n").is_err());
        assert!(MeasureMap::from_text("1 1 1\n").is_err());
    }
}
